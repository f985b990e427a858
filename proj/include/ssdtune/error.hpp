#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace ssdtune {

// Runtime error with a stable machine-readable code. The CLI renders these
// as "error: <code>: <message>" so scripts can match on the code.
class CodedError : public std::runtime_error {
public:
    CodedError(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

} // namespace ssdtune
