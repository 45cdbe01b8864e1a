// Copyright 2026 The symemit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "symemit/error.hpp"

namespace symemit {

// Internal units are SI: seconds and angular frequency in rad/s.
// Interfaces speak ns and ordinary frequencies; convert at the boundary.
constexpr double two_pi = 2.0 * std::numbers::pi;
constexpr double ns = 1e-9;
constexpr double us = 1e-6;

inline double from_mhz(double f_mhz) {
    return two_pi * f_mhz * 1e6;
}
inline double from_ghz(double f_ghz) {
    return two_pi * f_ghz * 1e9;
}
inline double from_khz(double f_khz) {
    return two_pi * f_khz * 1e3;
}
inline double to_mhz(double omega) {
    return omega / two_pi / 1e6;
}
inline double to_ghz(double omega) {
    return omega / two_pi / 1e9;
}
inline double to_ns(double t) {
    return t / ns;
}

/// Uniform time grid. Sample i sits at (first + i) * dt, so grids that share
/// dt can be compared, merged and reflected exactly in integer ticks.
struct TimeGrid {
    double dt = 0.1 * ns;
    std::int64_t first = 0;
    std::size_t n = 0;

    double t(std::size_t i) const {
        return static_cast<double>(first + static_cast<std::int64_t>(i)) * dt;
    }
    std::int64_t last() const {
        return first + static_cast<std::int64_t>(n) - 1;
    }
    double t_min() const {
        return t(0);
    }
    double t_max() const {
        return t(n - 1);
    }
    double span() const {
        return n > 1 ? static_cast<double>(n - 1) * dt : 0.0;
    }
    bool empty() const {
        return n == 0;
    }

    /// First sample index whose time is >= t (n if none).
    std::size_t index_at_or_after(double time) const {
        double k = std::ceil(time / dt - 1e-9) - static_cast<double>(first);
        if (k <= 0) {
            return 0;
        }
        return k >= static_cast<double>(n) ? n : static_cast<std::size_t>(k);
    }

    /// Closest sample index to t, clamped into the grid.
    std::size_t nearest_index(double time) const {
        double k = std::round(time / dt) - static_cast<double>(first);
        if (k <= 0) {
            return 0;
        }
        return k >= static_cast<double>(n - 1) ? n - 1 : static_cast<std::size_t>(k);
    }

    TimeGrid sub(std::size_t begin, std::size_t end) const {
        return TimeGrid{dt, first + static_cast<std::int64_t>(begin), end - begin};
    }

    std::vector<double> times() const {
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; i++) {
            out[i] = t(i);
        }
        return out;
    }

    void validate() const {
        require(n > 0, ErrorKind::invalid_argument, "empty time grid");
        require(std::isfinite(dt) && dt > 0, ErrorKind::invalid_argument, "time step must be positive");
    }

    /// Grid covering [t_min, t_max] with both ends snapped to whole ticks.
    static TimeGrid from_range(double t_min, double t_max, double dt) {
        require(std::isfinite(dt) && dt > 0, ErrorKind::invalid_argument, "time step must be positive");
        require(std::isfinite(t_min) && std::isfinite(t_max) && t_max >= t_min, ErrorKind::invalid_argument,
                "time range must be finite and ordered");
        auto a = static_cast<std::int64_t>(std::llround(t_min / dt));
        auto b = static_cast<std::int64_t>(std::llround(t_max / dt));
        return TimeGrid{dt, a, static_cast<std::size_t>(b - a + 1)};
    }

    bool operator==(const TimeGrid &) const = default;
};

/// Piecewise-linear interpolation on a uniform grid, clamped to the end values
/// outside [t_min, t_max].
template <typename T>
T interp_clamped(const TimeGrid &grid, const std::vector<T> &values, double time) {
    double u = time / grid.dt - static_cast<double>(grid.first);
    if (u <= 0) {
        return values.front();
    }
    double last = static_cast<double>(grid.n - 1);
    if (u >= last) {
        return values.back();
    }
    auto i = static_cast<std::size_t>(u);
    double w = u - static_cast<double>(i);
    return values[i] + (values[i + 1] - values[i]) * w;
}

/// Same, but zero outside the grid.
template <typename T>
T interp_zero(const TimeGrid &grid, const std::vector<T> &values, double time) {
    double u = time / grid.dt - static_cast<double>(grid.first);
    double last = static_cast<double>(grid.n - 1);
    if (u < -1e-9 || u > last + 1e-9) {
        return T{};
    }
    return interp_clamped(grid, values, time);
}

/// Four-point Lagrange interpolation around t, used where linear
/// interpolation is too coarse (root finding on sampled curves).
inline double interp_cubic(const TimeGrid &grid, const std::vector<double> &values, double time) {
    if (grid.n < 4) {
        return interp_clamped(grid, values, time);
    }
    double u = time / grid.dt - static_cast<double>(grid.first);
    auto i = static_cast<std::int64_t>(std::floor(u)) - 1;
    i = std::max<std::int64_t>(0, std::min<std::int64_t>(i, static_cast<std::int64_t>(grid.n) - 4));
    double x = u - static_cast<double>(i);
    double out = 0;
    for (int j = 0; j < 4; j++) {
        double w = 1;
        for (int m = 0; m < 4; m++) {
            if (m != j) {
                w *= (x - m) / static_cast<double>(j - m);
            }
        }
        out += w * values[static_cast<std::size_t>(i + j)];
    }
    return out;
}

}  // namespace symemit
