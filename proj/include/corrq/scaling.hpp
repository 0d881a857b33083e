#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "corrq/error.hpp"

namespace corrq {

/// Right-continuous step function: value(t) = values[k] for times[k] <= t < times[k+1].
struct RawPath {
    std::vector<double> times;
    std::vector<double> values;

    [[nodiscard]] double at(double t) const {
        require(!times.empty(), "empty path");
        require(t >= times.front(), "time before start of path");
        auto it = std::upper_bound(times.begin(), times.end(), t);
        return values[static_cast<std::size_t>(it - times.begin()) - 1];
    }
    [[nodiscard]] double horizon() const { return times.empty() ? 0.0 : times.back(); }
};

enum class Scaling { diffusion, lof };

struct ScaledPath {
    std::vector<double> times;
    std::vector<double> values;
    Scaling scaling = Scaling::diffusion;
    int n = 1;
};

/// (X(t) - n) / sqrt(n) on the original time axis.
inline ScaledPath diffusion_scale(const RawPath& raw, int n) {
    require(n >= 1, "n must be >= 1");
    require(raw.times.size() == raw.values.size(), "path times/values size mismatch");
    ScaledPath out{raw.times, {}, Scaling::diffusion, n};
    const double nn = n;
    const double root = std::sqrt(nn);
    out.values.reserve(raw.values.size());
    for (double x : raw.values) out.values.push_back((x - nn) / root);
    return out;
}

inline double lof_time_scale(int n) { return std::pow(static_cast<double>(n), 0.25); }
inline double lof_space_scale(int n) { return std::pow(static_cast<double>(n), 0.75); }

/// (X(n^{1/4} t) - n) / n^{3/4} evaluated on `scaled_grid`.
inline ScaledPath lof_scale(const RawPath& raw, int n, std::span<const double> scaled_grid) {
    require(n >= 1, "n must be >= 1");
    require(raw.times.size() == raw.values.size(), "path times/values size mismatch");
    const double tscale = lof_time_scale(n);
    const double sscale = lof_space_scale(n);
    ScaledPath out{{}, {}, Scaling::lof, n};
    out.times.reserve(scaled_grid.size());
    out.values.reserve(scaled_grid.size());
    for (double t : scaled_grid) {
        const double real_t = tscale * t;
        if (raw.times.empty() || real_t > raw.horizon())
            throw ConfigError("raw path horizon too short for the requested scaled horizon");
        out.times.push_back(t);
        out.values.push_back((raw.at(real_t) - n) / sscale);
    }
    return out;
}

}  // namespace corrq
