#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "ssdtune/error.hpp"

namespace ssdtune {

// Parameter kinds. Every kind exposes a finite index range; a configuration
// is an index per parameter, never a raw value.
struct ContinuousKind {
    double min = 0;
    double max = 1;
    int endpoints = 2; // uniformly spaced settings, inclusive of min and max
};

struct DiscreteKind {
    std::vector<double> values; // strictly increasing
};

struct BooleanKind {};

struct CategoricalKind {
    std::vector<std::string> labels;
};

using ParamKind = std::variant<ContinuousKind, DiscreteKind, BooleanKind, CategoricalKind>;

struct ParamDef {
    std::string name;
    ParamKind kind;
    bool capacity_coupled = false; // participates in the raw-capacity product
    std::string unit;

    int cardinality() const;
    int vector_width() const; // one slot, or one per label for categoricals
    bool is_numeric() const;  // continuous or discrete
    bool is_categorical() const;
};

// An assignment of one index per parameter, aligned with the space order.
struct Configuration {
    std::vector<int> indices;
    bool operator==(const Configuration&) const = default;
};

enum class Interface { NVMe, Sata };
enum class FlashType { SLC, MLC, TLC };

Interface interface_from_name(const std::string& name);
FlashType flash_from_name(const std::string& name);
std::string to_string(Interface iface);
std::string to_string(FlashType flash);

struct Constraints {
    uint64_t capacity_bytes = 0;
    Interface interface = Interface::NVMe;
    FlashType flash_type = FlashType::MLC;
    double capacity_tolerance = 0.25; // |raw/capacity - 1| must not exceed this
};

class ParamSpace {
public:
    ParamSpace() = default; // empty space; fill via the factories below
    static ParamSpace default_catalog();
    static ParamSpace from_json(const nlohmann::json& j);
    static ParamSpace from_params(std::vector<ParamDef> params);

    nlohmann::json to_json() const;

    size_t size() const { return params_.size(); }
    const ParamDef& param(size_t i) const { return params_.at(i); }
    const std::vector<ParamDef>& params() const { return params_; }
    bool has(const std::string& name) const { return by_name_.count(name) > 0; }
    size_t index_of(const std::string& name) const;

    size_t vector_size() const { return vector_size_; }
    size_t vector_offset(size_t param_index) const { return offsets_.at(param_index); }

    // Optional timing overrides consumed by the simulator; carried verbatim
    // from the catalog JSON "timing" section.
    const nlohmann::json& timing_overrides() const;
    void set_timing_overrides(nlohmann::json overrides);

private:
    void rebuild_index();

    std::vector<ParamDef> params_;
    std::unordered_map<std::string, size_t> by_name_;
    std::vector<size_t> offsets_;
    size_t vector_size_ = 0;
    std::shared_ptr<nlohmann::json> timing_; // shared so the space stays copyable
};

// Configuration helpers. All take the owning space because a Configuration
// is just an index vector.
Configuration make_default_configuration(const ParamSpace& space); // all zero indices
void check_configuration(const ParamSpace& space, const Configuration& config);

double numeric_value(const ParamSpace& space, const Configuration& config,
                     const std::string& name);
std::string categorical_label(const ParamSpace& space, const Configuration& config,
                              const std::string& name);
bool boolean_value(const ParamSpace& space, const Configuration& config, const std::string& name);
void set_index(const ParamSpace& space, Configuration& config, const std::string& name, int index);
int get_index(const ParamSpace& space, const Configuration& config, const std::string& name);

// Snaps the requested numeric value to the nearest legal index (ties to the
// lower index).
int nearest_index(const ParamDef& def, double value);

// Builds a configuration from values, snapping numerics and matching
// categorical labels exactly.
Configuration configuration_from_values(const ParamSpace& space,
                                        const std::map<std::string, double>& numeric,
                                        const std::map<std::string, std::string>& categorical = {});

// Product of all capacity-coupled parameter values, in bytes for the default
// catalog.
uint64_t raw_capacity(const ParamSpace& space, const Configuration& config);

bool satisfies(const ParamSpace& space, const Configuration& config,
               const Constraints& constraints);

// Embedding used by distances and regression: numeric and boolean parameters
// contribute their index as a real coordinate, categoricals are one-hot.
Eigen::VectorXd vectorize(const ParamSpace& space, const Configuration& config);

// L1 distance between embeddings; a single categorical relabel costs 2.
double manhattan(const ParamSpace& space, const Configuration& a, const Configuration& b);

// One-move neighborhood: +-1 index steps on non-capacity-coupled numerics,
// boolean flips, single categorical relabels, and coordinated two-parameter
// moves (one up, one down) across capacity-coupled parameters. Only
// configurations that satisfy the constraints are returned; the input never
// is.
std::vector<Configuration> neighbors(const ParamSpace& space, const Configuration& config,
                                     const Constraints& constraints);

// Commodity reference configuration (Intel 510/590-class drive) snapped onto
// the catalog grid. Requires the default catalog parameter names.
Configuration reference_configuration(const ParamSpace& space);

// JSON form of a configuration: an object mapping parameter name -> index.
nlohmann::json configuration_to_json(const ParamSpace& space, const Configuration& config);
Configuration configuration_from_json(const ParamSpace& space, const nlohmann::json& j);

// Human-readable value for tables: humanized bytes, labels, on/off, ratios.
std::string display_value(const ParamSpace& space, const Configuration& config,
                          const std::string& name);

} // namespace ssdtune
