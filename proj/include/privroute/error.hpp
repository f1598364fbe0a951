#pragma once

#include <stdexcept>
#include <string>

namespace privroute {

enum class ErrorCode {
    invalid_argument,
    config,
    network,
    numeric,
    convergence,
    io,
};

// All library failures are reported through this type; the C API maps
// code() onto its status enum.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace privroute
