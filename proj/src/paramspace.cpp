#include "ssdtune/paramspace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ssdtune {

int ParamDef::cardinality() const {
    return std::visit(
        [](const auto& k) -> int {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, ContinuousKind>)
                return k.endpoints;
            else if constexpr (std::is_same_v<T, DiscreteKind>)
                return static_cast<int>(k.values.size());
            else if constexpr (std::is_same_v<T, BooleanKind>)
                return 2;
            else
                return static_cast<int>(k.labels.size());
        },
        kind);
}

int ParamDef::vector_width() const {
    if (const auto* cat = std::get_if<CategoricalKind>(&kind))
        return static_cast<int>(cat->labels.size());
    return 1;
}

bool ParamDef::is_numeric() const {
    return std::holds_alternative<ContinuousKind>(kind) ||
           std::holds_alternative<DiscreteKind>(kind);
}

bool ParamDef::is_categorical() const {
    return std::holds_alternative<CategoricalKind>(kind);
}

Interface interface_from_name(const std::string& name) {
    if (name == "nvme" || name == "NVMe" || name == "NVME")
        return Interface::NVMe;
    if (name == "sata" || name == "SATA" || name == "Sata")
        return Interface::Sata;
    throw CodedError("usage", "unknown interface: " + name + " (expected nvme or sata)");
}

FlashType flash_from_name(const std::string& name) {
    if (name == "slc" || name == "SLC")
        return FlashType::SLC;
    if (name == "mlc" || name == "MLC")
        return FlashType::MLC;
    if (name == "tlc" || name == "TLC")
        return FlashType::TLC;
    throw CodedError("usage", "unknown flash type: " + name + " (expected slc, mlc or tlc)");
}

std::string to_string(Interface iface) {
    return iface == Interface::NVMe ? "nvme" : "sata";
}

std::string to_string(FlashType flash) {
    switch (flash) {
    case FlashType::SLC:
        return "slc";
    case FlashType::MLC:
        return "mlc";
    default:
        return "tlc";
    }
}

void ParamSpace::rebuild_index() {
    by_name_.clear();
    offsets_.clear();
    vector_size_ = 0;
    for (size_t i = 0; i < params_.size(); ++i) {
        const auto& p = params_[i];
        if (p.name.empty())
            throw CodedError("catalog_error", "parameter with empty name");
        if (p.cardinality() < 1)
            throw CodedError("catalog_error", "parameter " + p.name + " has no settings");
        if (const auto* d = std::get_if<DiscreteKind>(&p.kind)) {
            if (!std::is_sorted(d->values.begin(), d->values.end()) ||
                std::adjacent_find(d->values.begin(), d->values.end()) != d->values.end())
                throw CodedError("catalog_error",
                                 "discrete values of " + p.name + " must be strictly increasing");
        }
        if (const auto* c = std::get_if<ContinuousKind>(&p.kind)) {
            if (!(c->min < c->max) || c->endpoints < 2)
                throw CodedError("catalog_error", "bad continuous range for " + p.name);
        }
        if (!by_name_.emplace(p.name, i).second)
            throw CodedError("catalog_error", "duplicate parameter name: " + p.name);
        offsets_.push_back(vector_size_);
        vector_size_ += static_cast<size_t>(p.vector_width());
    }
}

ParamSpace ParamSpace::from_params(std::vector<ParamDef> params) {
    ParamSpace s;
    s.params_ = std::move(params);
    s.rebuild_index();
    return s;
}

size_t ParamSpace::index_of(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end())
        throw CodedError("unknown_parameter", "unknown parameter: " + name);
    return it->second;
}

const nlohmann::json& ParamSpace::timing_overrides() const {
    static const nlohmann::json kEmpty = nlohmann::json::object();
    return timing_ ? *timing_ : kEmpty;
}

void ParamSpace::set_timing_overrides(nlohmann::json overrides) {
    timing_ = std::make_shared<nlohmann::json>(std::move(overrides));
}

ParamSpace ParamSpace::default_catalog() {
    std::vector<ParamDef> p;
    auto discrete = [](std::string name, std::vector<double> values, bool coupled,
                       std::string unit) {
        return ParamDef{std::move(name), DiscreteKind{std::move(values)}, coupled,
                        std::move(unit)};
    };

    p.push_back(discrete("IOQueueDepth", {1024, 2048, 4096, 8192, 16384}, false, "requests"));
    p.push_back(discrete("QueueFetchSize", {512, 1024, 2048, 3072, 4096}, false, "requests"));
    p.push_back(discrete("DataCacheCapacity",
                         {134217728.0, 268435456.0, 536870912.0, 800000000.0, 1073741824.0,
                          2147483648.0},
                         false, "bytes"));
    p.push_back(discrete("CMTCapacity",
                         {1048576.0, 2097152.0, 4194304.0, 8388608.0, 16777216.0}, false,
                         "bytes"));

    // All orderings of channel/way/die/plane striping priority, first letter
    // varying fastest.
    std::string letters = "CDPW";
    std::vector<std::string> schemes;
    do {
        schemes.push_back(letters);
    } while (std::next_permutation(letters.begin(), letters.end()));
    p.push_back({"PageAllocationScheme", CategoricalKind{std::move(schemes)}, false, ""});

    p.push_back({"OverprovisioningRatio", ContinuousKind{0.05, 0.40, 8}, false, "ratio"});

    p.push_back(discrete("FlashChannelCount", {4, 8, 12, 16, 20, 24}, true, "count"));
    p.push_back(discrete("ChipNoPerChannel", {1, 2, 3, 4, 5, 6, 7, 8}, true, "count"));
    p.push_back(discrete("DieNoPerChip", {1, 2, 4, 8}, true, "count"));
    p.push_back(discrete("PlaneNoPerDie", {1, 2, 4}, true, "count"));
    p.push_back(discrete("BlockNoPerPlane", {256, 512, 1024, 2048}, true, "count"));
    p.push_back(discrete("PageNoPerBlock", {256, 512, 1024}, true, "count"));
    p.push_back(discrete("PageSize", {4096, 8192, 16384}, true, "bytes"));

    p.push_back({"GreedyGCEnabled", BooleanKind{}, false, ""});
    p.push_back({"StaticWearLevelingEnabled", BooleanKind{}, false, ""});

    p.push_back(discrete("PageMetadataSize", {16, 64, 256, 1024}, false, "bytes"));
    p.push_back(discrete("SataProcessingDelay", {10, 50, 100, 400}, false, "us"));

    return from_params(std::move(p));
}

ParamSpace ParamSpace::from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("params") || !j["params"].is_array())
        throw CodedError("catalog_error", "catalog JSON must carry a 'params' array");
    std::vector<ParamDef> defs;
    for (const auto& pj : j["params"]) {
        ParamDef d;
        d.name = pj.at("name").get<std::string>();
        d.capacity_coupled = pj.value("capacity_coupled", false);
        d.unit = pj.value("unit", std::string());
        std::string kind = pj.at("kind").get<std::string>();
        if (kind == "continuous") {
            ContinuousKind k;
            k.min = pj.at("min").get<double>();
            k.max = pj.at("max").get<double>();
            k.endpoints = pj.at("endpoints").get<int>();
            d.kind = k;
        } else if (kind == "discrete") {
            DiscreteKind k;
            k.values = pj.at("values").get<std::vector<double>>();
            d.kind = k;
        } else if (kind == "boolean") {
            d.kind = BooleanKind{};
        } else if (kind == "categorical") {
            CategoricalKind k;
            k.labels = pj.at("labels").get<std::vector<std::string>>();
            d.kind = k;
        } else {
            throw CodedError("catalog_error", "unknown parameter kind: " + kind);
        }
        defs.push_back(std::move(d));
    }
    ParamSpace s = from_params(std::move(defs));
    if (j.contains("timing"))
        s.set_timing_overrides(j["timing"]);
    return s;
}

nlohmann::json ParamSpace::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : params_) {
        nlohmann::json pj;
        pj["name"] = p.name;
        pj["capacity_coupled"] = p.capacity_coupled;
        pj["unit"] = p.unit;
        std::visit(
            [&](const auto& k) {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, ContinuousKind>) {
                    pj["kind"] = "continuous";
                    pj["min"] = k.min;
                    pj["max"] = k.max;
                    pj["endpoints"] = k.endpoints;
                } else if constexpr (std::is_same_v<T, DiscreteKind>) {
                    pj["kind"] = "discrete";
                    pj["values"] = k.values;
                } else if constexpr (std::is_same_v<T, BooleanKind>) {
                    pj["kind"] = "boolean";
                } else {
                    pj["kind"] = "categorical";
                    pj["labels"] = k.labels;
                }
            },
            p.kind);
        arr.push_back(std::move(pj));
    }
    nlohmann::json out;
    out["params"] = std::move(arr);
    if (!timing_overrides().empty())
        out["timing"] = timing_overrides();
    return out;
}

Configuration make_default_configuration(const ParamSpace& space) {
    Configuration c;
    c.indices.assign(space.size(), 0);
    return c;
}

void check_configuration(const ParamSpace& space, const Configuration& config) {
    if (config.indices.size() != space.size())
        throw CodedError("config_error", "configuration arity does not match the catalog");
    for (size_t i = 0; i < space.size(); ++i) {
        int idx = config.indices[i];
        if (idx < 0 || idx >= space.param(i).cardinality())
            throw CodedError("config_error",
                             "index out of range for parameter " + space.param(i).name);
    }
}

namespace {

double value_at(const ParamDef& def, int idx) {
    return std::visit(
        [&](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, ContinuousKind>)
                return k.min + (k.max - k.min) * idx / (k.endpoints - 1);
            else if constexpr (std::is_same_v<T, DiscreteKind>)
                return k.values.at(static_cast<size_t>(idx));
            else if constexpr (std::is_same_v<T, BooleanKind>)
                return idx;
            else
                throw CodedError("config_error", "categorical parameter has no numeric value");
        },
        def.kind);
}

} // namespace

double numeric_value(const ParamSpace& space, const Configuration& config,
                     const std::string& name) {
    size_t i = space.index_of(name);
    return value_at(space.param(i), config.indices.at(i));
}

std::string categorical_label(const ParamSpace& space, const Configuration& config,
                              const std::string& name) {
    size_t i = space.index_of(name);
    const auto* cat = std::get_if<CategoricalKind>(&space.param(i).kind);
    if (!cat)
        throw CodedError("config_error", name + " is not categorical");
    return cat->labels.at(static_cast<size_t>(config.indices.at(i)));
}

bool boolean_value(const ParamSpace& space, const Configuration& config,
                   const std::string& name) {
    size_t i = space.index_of(name);
    if (!std::holds_alternative<BooleanKind>(space.param(i).kind))
        throw CodedError("config_error", name + " is not boolean");
    return config.indices.at(i) != 0;
}

void set_index(const ParamSpace& space, Configuration& config, const std::string& name,
               int index) {
    size_t i = space.index_of(name);
    if (index < 0 || index >= space.param(i).cardinality())
        throw CodedError("config_error", "index out of range for parameter " + name);
    config.indices.at(i) = index;
}

int get_index(const ParamSpace& space, const Configuration& config, const std::string& name) {
    return config.indices.at(space.index_of(name));
}

int nearest_index(const ParamDef& def, double value) {
    int best = 0;
    double best_err = std::numeric_limits<double>::infinity();
    int n = def.cardinality();
    for (int i = 0; i < n; ++i) {
        double err = std::abs(value_at(def, i) - value);
        if (err < best_err) {
            best_err = err;
            best = i;
        }
    }
    return best;
}

Configuration configuration_from_values(const ParamSpace& space,
                                        const std::map<std::string, double>& numeric,
                                        const std::map<std::string, std::string>& categorical) {
    Configuration c = make_default_configuration(space);
    for (const auto& [name, value] : numeric) {
        size_t i = space.index_of(name);
        const auto& def = space.param(i);
        if (def.is_categorical())
            throw CodedError("config_error", name + " needs a label, not a number");
        c.indices[i] = nearest_index(def, value);
    }
    for (const auto& [name, label] : categorical) {
        size_t i = space.index_of(name);
        const auto* cat = std::get_if<CategoricalKind>(&space.param(i).kind);
        if (!cat)
            throw CodedError("config_error", name + " is not categorical");
        auto it = std::find(cat->labels.begin(), cat->labels.end(), label);
        if (it == cat->labels.end())
            throw CodedError("config_error", "unknown label '" + label + "' for " + name);
        c.indices[i] = static_cast<int>(it - cat->labels.begin());
    }
    return c;
}

uint64_t raw_capacity(const ParamSpace& space, const Configuration& config) {
    check_configuration(space, config);
    long double product = 1.0L;
    bool any = false;
    for (size_t i = 0; i < space.size(); ++i) {
        if (!space.param(i).capacity_coupled)
            continue;
        any = true;
        product *= static_cast<long double>(value_at(space.param(i), config.indices[i]));
    }
    if (!any)
        throw CodedError("config_error", "catalog has no capacity-coupled parameters");
    return static_cast<uint64_t>(std::llroundl(product));
}

bool satisfies(const ParamSpace& space, const Configuration& config,
               const Constraints& constraints) {
    if (constraints.capacity_bytes == 0)
        throw CodedError("usage", "constraint capacity must be positive");
    double ratio = static_cast<double>(raw_capacity(space, config)) /
                   static_cast<double>(constraints.capacity_bytes);
    return std::abs(ratio - 1.0) <= constraints.capacity_tolerance;
}

Eigen::VectorXd vectorize(const ParamSpace& space, const Configuration& config) {
    check_configuration(space, config);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.vector_size()));
    for (size_t i = 0; i < space.size(); ++i) {
        size_t off = space.vector_offset(i);
        if (space.param(i).is_categorical())
            v[static_cast<Eigen::Index>(off + static_cast<size_t>(config.indices[i]))] = 1.0;
        else
            v[static_cast<Eigen::Index>(off)] = config.indices[i];
    }
    return v;
}

double manhattan(const ParamSpace& space, const Configuration& a, const Configuration& b) {
    check_configuration(space, a);
    check_configuration(space, b);
    double d = 0;
    for (size_t i = 0; i < space.size(); ++i) {
        if (space.param(i).is_categorical())
            d += a.indices[i] == b.indices[i] ? 0.0 : 2.0;
        else
            d += std::abs(a.indices[i] - b.indices[i]);
    }
    return d;
}

std::vector<Configuration> neighbors(const ParamSpace& space, const Configuration& config,
                                     const Constraints& constraints) {
    check_configuration(space, config);
    std::vector<Configuration> out;
    std::set<std::vector<int>> seen;
    seen.insert(config.indices);

    auto offer = [&](Configuration cand) {
        if (!seen.insert(cand.indices).second)
            return;
        if (satisfies(space, cand, constraints))
            out.push_back(std::move(cand));
    };

    for (size_t i = 0; i < space.size(); ++i) {
        const auto& def = space.param(i);
        if (def.capacity_coupled)
            continue; // these only move in coordinated pairs below
        int cur = config.indices[i];
        if (def.is_categorical()) {
            for (int j = 0; j < def.cardinality(); ++j) {
                if (j == cur)
                    continue;
                Configuration c = config;
                c.indices[i] = j;
                offer(std::move(c));
            }
        } else if (std::holds_alternative<BooleanKind>(def.kind)) {
            Configuration c = config;
            c.indices[i] = 1 - cur;
            offer(std::move(c));
        } else {
            for (int step : {-1, 1}) {
                int j = cur + step;
                if (j < 0 || j >= def.cardinality())
                    continue;
                Configuration c = config;
                c.indices[i] = j;
                offer(std::move(c));
            }
        }
    }

    // Capacity-coupled parameters trade against each other: raise one, lower
    // another, keep the product near the target.
    for (size_t up = 0; up < space.size(); ++up) {
        if (!space.param(up).capacity_coupled)
            continue;
        if (config.indices[up] + 1 >= space.param(up).cardinality())
            continue;
        for (size_t down = 0; down < space.size(); ++down) {
            if (down == up || !space.param(down).capacity_coupled)
                continue;
            if (config.indices[down] - 1 < 0)
                continue;
            Configuration c = config;
            c.indices[up] += 1;
            c.indices[down] -= 1;
            offer(std::move(c));
        }
    }
    return out;
}

Configuration reference_configuration(const ParamSpace& space) {
    return configuration_from_values(space,
                                     {
                                         {"IOQueueDepth", 8192},
                                         {"QueueFetchSize", 3072},
                                         {"DataCacheCapacity", 800000000.0},
                                         {"CMTCapacity", 2097152.0},
                                         {"OverprovisioningRatio", 0.22},
                                         {"FlashChannelCount", 12},
                                         {"ChipNoPerChannel", 5},
                                         {"DieNoPerChip", 8},
                                         {"PlaneNoPerDie", 1},
                                         {"BlockNoPerPlane", 512},
                                         {"PageNoPerBlock", 512},
                                         {"PageSize", 4096},
                                         {"GreedyGCEnabled", 1},
                                         {"StaticWearLevelingEnabled", 1},
                                         {"PageMetadataSize", 16},
                                         {"SataProcessingDelay", 100},
                                     },
                                     {{"PageAllocationScheme", "CWDP"}});
}

nlohmann::json configuration_to_json(const ParamSpace& space, const Configuration& config) {
    check_configuration(space, config);
    nlohmann::json j = nlohmann::json::object();
    for (size_t i = 0; i < space.size(); ++i)
        j[space.param(i).name] = config.indices[i];
    return j;
}

Configuration configuration_from_json(const ParamSpace& space, const nlohmann::json& j) {
    if (!j.is_object())
        throw CodedError("config_error", "configuration JSON must be an object");
    Configuration c = make_default_configuration(space);
    std::vector<bool> present(space.size(), false);
    for (auto it = j.begin(); it != j.end(); ++it) {
        size_t i = space.index_of(it.key());
        if (!it.value().is_number_integer())
            throw CodedError("config_error", "index for " + it.key() + " must be an integer");
        int idx = it.value().get<int>();
        if (idx < 0 || idx >= space.param(i).cardinality())
            throw CodedError("config_error", "index out of range for parameter " + it.key());
        c.indices[i] = idx;
        present[i] = true;
    }
    for (size_t i = 0; i < space.size(); ++i)
        if (!present[i])
            throw CodedError("config_error", "configuration missing parameter " +
                                                 space.param(i).name);
    return c;
}

std::string display_value(const ParamSpace& space, const Configuration& config,
                          const std::string& name) {
    size_t i = space.index_of(name);
    const auto& def = space.param(i);
    char buf[64];
    if (def.is_categorical())
        return categorical_label(space, config, name);
    if (std::holds_alternative<BooleanKind>(def.kind))
        return config.indices[i] ? "on" : "off";
    double v = value_at(def, config.indices[i]);
    if (def.unit == "bytes") {
        auto div = [&](double d) { return v >= d && std::fmod(v, d) == 0.0; };
        if (div(1073741824.0))
            std::snprintf(buf, sizeof buf, "%g GiB", v / 1073741824.0);
        else if (div(1048576.0))
            std::snprintf(buf, sizeof buf, "%g MiB", v / 1048576.0);
        else if (div(1000000.0))
            std::snprintf(buf, sizeof buf, "%g MB", v / 1000000.0);
        else
            std::snprintf(buf, sizeof buf, "%g B", v);
        return buf;
    }
    if (def.unit == "ratio") {
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return buf;
    }
    if (def.unit == "us") {
        std::snprintf(buf, sizeof buf, "%g us", v);
        return buf;
    }
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

} // namespace ssdtune
