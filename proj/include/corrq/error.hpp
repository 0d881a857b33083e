#pragma once

#include <stdexcept>
#include <string>

namespace corrq {

/// Invalid parameters or configuration. The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// beta >= sqrt(n): the square-root staffing formula gives a nonpositive arrival rate.
class StaffingInfeasible : public ConfigError {
public:
    using ConfigError::ConfigError;
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

}  // namespace corrq
