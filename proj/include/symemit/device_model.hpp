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

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "symemit/csv.hpp"
#include "symemit/error.hpp"
#include "symemit/grid.hpp"
#include "symemit/pulse_schedule.hpp"

// Toy model of a tunable coupling qubit: two flux-tunable transmons with a
// fixed mutual coupling J. Transmon 1 couples to the cavity, transmon 2 is
// dark. The lower hybrid mode is the emitter; its transmon-1 weight sets the
// effective cavity coupling, and the emitter/cavity 2x2 block sets the
// dressed frequency. A flux offset of opposite sign on the two loops stands
// in for fabrication mismatch.

namespace symemit {

struct DeviceParams {
    double omega_cavity = from_ghz(7.596);
    double omega_tcq_max = from_ghz(8.741);  // transmon 2 at zero flux
    double omega_q1_max = from_ghz(7.9);     // transmon 1 at zero flux
    double kappa = from_mhz(20.0);
    double gain1 = 1.0;  // flux quanta per volt
    double gain2 = 1.0;
    double cross_coupling = 0.1;
    double asymmetry = 0.05;  // flux-quanta offset, +/- on the two loops
    double internal_coupling = from_mhz(100.0);
    double max_coupling = from_mhz(5.0);  // g_eff at v1 = v2 = 0
    double v_min = -0.5;
    double v_max = 0.5;

    void validate() const {
        require(omega_tcq_max > omega_cavity, ErrorKind::config, "omega_tcq_max must exceed omega_cavity");
        require(kappa > 0, ErrorKind::config, "kappa must be positive");
        require(gain1 != 0 && gain2 != 0, ErrorKind::config, "voltage-to-flux gains must be nonzero");
        require(omega_q1_max > 0 && internal_coupling > 0 && max_coupling > 0, ErrorKind::config,
                "device frequencies and couplings must be positive");
        require(v_min < v_max, ErrorKind::config, "voltage bounds must be ordered");
    }
};

struct Spectrum {
    double omega_dressed = 0;
    double g_eff = 0;
};

struct OperatingPoint {
    double v1 = 0;
    double v2 = 0;
    double omega_dressed = 0;
    double g_eff = 0;
    double t1_radiative = 0;
    bool operator==(const OperatingPoint &) const = default;
};

namespace detail {

struct BareModes {
    double omega_lower;
    double mix;  // transmon-1 amplitude in the lower mode
};

inline double transmon(double omega_max, double flux) {
    return omega_max * std::sqrt(std::abs(std::cos(std::numbers::pi * flux)));
}

inline BareModes bare_modes(double v1, double v2, const DeviceParams &p) {
    double f1 = p.gain1 * (v1 + p.cross_coupling * v2) - p.asymmetry;
    double f2 = p.gain2 * (v2 + p.cross_coupling * v1) + p.asymmetry;
    double w1 = transmon(p.omega_q1_max, f1);
    double w2 = transmon(p.omega_tcq_max, f2);
    double mean = 0.5 * (w1 + w2);
    double half = 0.5 * (w1 - w2);
    double lower = mean - std::hypot(half, p.internal_coupling);
    double x = w1 - lower;
    return {lower, p.internal_coupling / std::hypot(p.internal_coupling, x)};
}

}  // namespace detail

inline Spectrum tcq_spectrum(double v1, double v2, const DeviceParams &p) {
    require(v1 >= p.v_min && v1 <= p.v_max && v2 >= p.v_min && v2 <= p.v_max, ErrorKind::invalid_argument,
            "voltages (" + format_double(v1) + ", " + format_double(v2) + ") V outside the configured range");
    auto bare = detail::bare_modes(v1, v2, p);
    double g0 = p.max_coupling / detail::bare_modes(0.0, 0.0, p).mix;
    double g = g0 * bare.mix;
    double d = bare.omega_lower - p.omega_cavity;
    double shift = std::sqrt(0.25 * d * d + g * g);
    double wd = p.omega_cavity + 0.5 * d + (d >= 0 ? shift : -shift);
    return {wd, g};
}

inline double sweet_spot_frequency(const DeviceParams &p) {
    return tcq_spectrum(0.0, 0.0, p).omega_dressed;
}

inline OperatingPoint operating_point(double v1, double v2, const DeviceParams &p) {
    Spectrum s = tcq_spectrum(v1, v2, p);
    return {v1, v2, s.omega_dressed, s.g_eff, p.kappa / (4.0 * s.g_eff * s.g_eff)};
}

/// Bracket for v2 on the monotonic branch of transmon 2 (flux in [0, 0.45]).
inline std::pair<double, double> v2_bracket(double v1, const DeviceParams &p) {
    double a = (0.0 - p.asymmetry) / p.gain2 - p.cross_coupling * v1;
    double b = (0.45 - p.asymmetry) / p.gain2 - p.cross_coupling * v1;
    if (a > b) {
        std::swap(a, b);
    }
    return {std::max(a, p.v_min), std::min(b, p.v_max)};
}

/// v2 with omega_dressed(v1, v2) = target by bisection; nullopt if the
/// bracket does not straddle the target.
inline std::optional<double> solve_v2(double v1, double omega_target, const DeviceParams &p,
                                      double tol_hz = 1e3) {
    auto [lo, hi] = v2_bracket(v1, p);
    if (!(lo < hi)) {
        return std::nullopt;
    }
    double flo = tcq_spectrum(v1, lo, p).omega_dressed - omega_target;
    double fhi = tcq_spectrum(v1, hi, p).omega_dressed - omega_target;
    if (flo == 0) {
        return lo;
    }
    if (fhi == 0) {
        return hi;
    }
    if ((flo > 0) == (fhi > 0)) {
        return std::nullopt;
    }
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 200; it++) {
        mid = 0.5 * (lo + hi);
        double fm = tcq_spectrum(v1, mid, p).omega_dressed - omega_target;
        if (std::abs(fm) < two_pi * tol_hz || hi - lo < 1e-15) {
            break;
        }
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return mid;
}

inline std::vector<OperatingPoint> constant_frequency_contour(const DeviceParams &p, double omega_target,
                                                              const std::vector<double> &v1_samples,
                                                              double tol_hz = 1e3) {
    p.validate();
    require(!v1_samples.empty(), ErrorKind::invalid_argument, "contour needs at least one v1 sample");
    std::vector<OperatingPoint> out;
    std::string gaps;
    for (double v1 : v1_samples) {
        auto v2 = solve_v2(v1, omega_target, p, tol_hz);
        if (!v2) {
            gaps += (gaps.empty() ? "" : ", ") + format_double(v1);
            continue;
        }
        out.push_back(operating_point(v1, *v2, p));
    }
    require(gaps.empty(), ErrorKind::infeasible,
            "contour gap at " + format_double(to_ghz(omega_target)) + " GHz: no v2 root for v1 = " + gaps + " V");
    return out;
}

inline std::vector<double> linspace_step(double start, double stop, double step) {
    require(step > 0 && stop >= start, ErrorKind::invalid_argument, "invalid sample range");
    auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; i++) {
        out[i] = start + step * static_cast<double>(i);
    }
    return out;
}

struct VoltageSchedule {
    TimeGrid grid;
    std::vector<double> v1, v2, omega_dressed, g_eff;
};

/// Places every g(t) on the contour: the bracketing pair of contour points is
/// found and v1 refined by bisection, solving for v2 at each trial v1.
inline VoltageSchedule schedule_to_voltages(const Schedule &s, const std::vector<OperatingPoint> &contour,
                                            const DeviceParams &p, double g_rel_tol = 1e-4) {
    s.validate();
    require(contour.size() >= 2, ErrorKind::invalid_argument, "contour needs at least two points");
    const double omega_target = contour.front().omega_dressed;
    double g_lo = contour.front().g_eff, g_hi = g_lo;
    for (const auto &c : contour) {
        g_lo = std::min(g_lo, c.g_eff);
        g_hi = std::max(g_hi, c.g_eff);
    }
    VoltageSchedule out;
    out.grid = s.grid;
    std::map<double, OperatingPoint> cache;
    for (std::size_t i = 0; i < s.grid.n; i++) {
        const double g = s.g[i];
        auto hit = cache.find(g);
        OperatingPoint op;
        if (hit != cache.end()) {
            op = hit->second;
        } else {
            require(g >= g_lo * (1 - 1e-12) && g <= g_hi * (1 + 1e-12), ErrorKind::infeasible,
                    "infeasible schedule: g/2pi = " + format_double(to_mhz(g)) + " MHz at sample " +
                        std::to_string(i) + " (t = " + format_double(to_ns(s.grid.t(i))) +
                        " ns) is outside the contour range [" + format_double(to_mhz(g_lo)) + ", " +
                        format_double(to_mhz(g_hi)) + "] MHz");
            std::size_t j = 0;
            for (; j + 1 < contour.size(); j++) {
                double a = contour[j].g_eff, b = contour[j + 1].g_eff;
                if ((g - a) * (g - b) <= 0) {
                    break;
                }
            }
            require(j + 1 < contour.size(), ErrorKind::infeasible,
                    "infeasible schedule at sample " + std::to_string(i) + ": no contour segment brackets g");
            double lo = contour[j].v1, hi = contour[j + 1].v1;
            double sign = contour[j + 1].g_eff >= contour[j].g_eff ? 1.0 : -1.0;
            op = contour[j];
            if (std::abs(contour[j + 1].g_eff - g) < std::abs(op.g_eff - g)) {
                op = contour[j + 1];
            }
            for (int it = 0; it < 100 && std::abs(op.g_eff - g) > g_rel_tol * g; it++) {
                double mid = 0.5 * (lo + hi);
                auto v2 = solve_v2(mid, omega_target, p);
                require(v2.has_value(), ErrorKind::infeasible,
                        "contour gap while placing sample " + std::to_string(i));
                op = operating_point(mid, *v2, p);
                if (sign * (op.g_eff - g) < 0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            cache.emplace(g, op);
        }
        out.v1.push_back(op.v1);
        out.v2.push_back(op.v2);
        out.omega_dressed.push_back(op.omega_dressed);
        out.g_eff.push_back(op.g_eff);
    }
    return out;
}

inline CsvTable contour_table(const std::vector<OperatingPoint> &contour) {
    CsvTable t;
    t.header = {"v1", "v2", "omega_GHz", "g_MHz", "T1_ns"};
    for (const auto &c : contour) {
        t.rows.push_back({c.v1, c.v2, to_ghz(c.omega_dressed), to_mhz(c.g_eff), to_ns(c.t1_radiative)});
    }
    return t;
}

inline CsvTable voltage_table(const VoltageSchedule &v) {
    CsvTable t;
    t.header = {"time_ns", "v1", "v2", "omega_GHz", "g_MHz"};
    for (std::size_t i = 0; i < v.grid.n; i++) {
        t.rows.push_back({to_ns(v.grid.t(i)), v.v1[i], v.v2[i], to_ghz(v.omega_dressed[i]), to_mhz(v.g_eff[i])});
    }
    return t;
}

}  // namespace symemit
