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
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "symemit/csv.hpp"
#include "symemit/error.hpp"
#include "symemit/grid.hpp"

// Coupling schedules g(t) for shaped Purcell emission.
//
// A qubit with radiative rate G(t) = 4 g(t)^2 / kappa emits the flux
// Q = -dP/dt = G P. Given a target Q the coupling follows from
// g^2 = (kappa/4) Q / P with P = 1 - int Q.

namespace symemit {

constexpr double min_population = 1e-9;

/// Integral of one grid segment whose end values are a and b. Log-linear
/// (exact for exponentials), trapezoid when either end is not positive.
inline double segment_integral(double a, double b, double h) {
    if (a <= 0 || b <= 0) {
        return 0.5 * h * (a + b);
    }
    double u = std::log(b / a);
    if (std::abs(u) < 1e-8) {
        return h * a * (1.0 + u / 2.0 + u * u / 6.0);
    }
    return h * a * std::expm1(u) / u;
}

/// Running integral, out[0] = 0.
inline std::vector<double> cumulative_integral(const std::vector<double> &q, double dt) {
    std::vector<double> out(q.size(), 0.0);
    for (std::size_t i = 1; i < q.size(); i++) {
        out[i] = out[i - 1] + segment_integral(q[i - 1], q[i], dt);
    }
    return out;
}

struct FluxProfile {
    TimeGrid grid;
    std::vector<double> q;  // photons per second
    std::vector<double> p;  // excited population

    double emitted() const {
        return cumulative_integral(q, grid.dt).back();
    }

    /// Largest violation of P(t) = P(t_start) - int Q.
    double conservation_error() const {
        auto cum = cumulative_integral(q, grid.dt);
        double worst = 0;
        for (std::size_t i = 0; i < p.size(); i++) {
            worst = std::max(worst, std::abs(p[i] - (p[0] - cum[i])));
        }
        return worst;
    }

    void validate(double tol = 1e-9) const {
        grid.validate();
        require(q.size() == grid.n && p.size() == grid.n, ErrorKind::invalid_argument,
                "flux profile arrays do not match the grid");
        for (std::size_t i = 0; i < grid.n; i++) {
            require(q[i] >= 0 && std::isfinite(q[i]), ErrorKind::invalid_argument, "flux must be finite and >= 0");
            require(p[i] >= -tol && p[i] <= 1 + tol, ErrorKind::invalid_argument, "population outside [0, 1]");
            if (i > 0) {
                require(p[i] <= p[i - 1] + tol, ErrorKind::invalid_argument, "population must not increase");
            }
        }
        require(conservation_error() <= tol, ErrorKind::numerical, "flux profile violates conservation");
    }
};

struct Schedule {
    TimeGrid grid;
    std::vector<double> g;  // rad/s, Purcell-effective coupling
    double kappa = 0;
    double tau = 0;  // symmetric-exponential time constant, 0 for other targets
    // Emission starts at the first sample >= t_start. For a reflected
    // schedule this stays in the frame of the source schedule.
    double t_start = 0;
    std::int64_t t0_ticks = 0;  // reflection instant in grid ticks, 0 if never reflected
    double residual_population = 1;
    bool truncated = false;
    bool truncation_skipped = false;
    bool reversed = false;
    std::size_t active_begin = 0;
    std::size_t active_end = 0;
    std::vector<double> population;  // design excited population
    std::vector<std::string> warnings;

    double t0_offset() const {
        return static_cast<double>(t0_ticks) * grid.dt;
    }
    double gamma(std::size_t i) const {
        return 4.0 * g[i] * g[i] / kappa;
    }
    TimeGrid active_grid() const {
        return grid.sub(active_begin, active_end);
    }

    void validate() const {
        grid.validate();
        require(kappa > 0 && std::isfinite(kappa), ErrorKind::invalid_argument, "kappa must be positive");
        require(g.size() == grid.n && population.size() == grid.n, ErrorKind::invalid_argument,
                "schedule arrays do not match the grid");
        require(active_begin < active_end && active_end <= grid.n, ErrorKind::invalid_argument,
                "schedule active region is empty");
        for (double x : g) {
            require(std::isfinite(x) && x >= 0, ErrorKind::invalid_argument, "coupling must be finite and >= 0");
        }
    }

    bool operator==(const Schedule &) const = default;
};

inline std::vector<double> constant_decay_population(const TimeGrid &grid, double gamma, double p0) {
    std::vector<double> p(grid.n);
    for (std::size_t i = 0; i < grid.n; i++) {
        p[i] = p0 * std::exp(-gamma * static_cast<double>(i) * grid.dt);
    }
    return p;
}

inline Schedule constant_schedule(const TimeGrid &grid, double g, double kappa) {
    grid.validate();
    require(kappa > 0, ErrorKind::invalid_argument, "kappa must be positive");
    require(g >= 0 && std::isfinite(g), ErrorKind::invalid_argument, "coupling must be finite and >= 0");
    Schedule s;
    s.grid = grid;
    s.g.assign(grid.n, g);
    s.kappa = kappa;
    s.t_start = grid.t_min();
    s.residual_population = 1;
    s.active_begin = 0;
    s.active_end = grid.n;
    s.population = constant_decay_population(grid, 4 * g * g / kappa, 1.0);
    return s;
}

/// Q(t) = (beta/2) exp(-beta |t|) with P(-inf) = 1; the tail before the grid
/// is added analytically.
inline FluxProfile symmetric_exponential_flux(double tau, const TimeGrid &grid) {
    require(tau > 0 && std::isfinite(tau), ErrorKind::invalid_argument, "tau must be positive");
    grid.validate();
    require(grid.t_min() < 0 && grid.t_max() > 0, ErrorKind::invalid_argument,
            "symmetric exponential grid must straddle t = 0");
    const double beta = 1.0 / tau;
    FluxProfile f;
    f.grid = grid;
    f.q.resize(grid.n);
    for (std::size_t i = 0; i < grid.n; i++) {
        f.q[i] = 0.5 * beta * std::exp(-beta * std::abs(grid.t(i)));
    }
    const double p0 = 1.0 - 0.5 * std::exp(beta * grid.t_min());
    auto cum = cumulative_integral(f.q, grid.dt);
    f.p.resize(grid.n);
    for (std::size_t i = 0; i < grid.n; i++) {
        f.p[i] = p0 - cum[i];
    }
    return f;
}

/// Closed-form coupling of the symmetric exponential target; t = 0 uses the
/// t <= 0 branch (both agree there).
inline double symmetric_exponential_coupling(double tau, double kappa, double t) {
    const double beta = 1.0 / tau;
    if (t > 0) {
        return std::sqrt(kappa * beta / 4.0);
    }
    double x = 0.5 * std::exp(beta * t);
    return std::sqrt(kappa * beta / 4.0 * x / (1.0 - x));
}

inline Schedule coupling_from_flux(const FluxProfile &flux_in, double kappa) {
    require(kappa > 0 && std::isfinite(kappa), ErrorKind::invalid_argument, "kappa must be positive");
    flux_in.grid.validate();
    require(flux_in.q.size() == flux_in.grid.n && flux_in.p.size() == flux_in.grid.n,
            ErrorKind::invalid_argument, "flux profile arrays do not match the grid");
    for (std::size_t i = 0; i < flux_in.grid.n; i++) {
        require(flux_in.q[i] >= 0 && std::isfinite(flux_in.q[i]), ErrorKind::invalid_argument,
                "invalid flux: negative or non-finite value at t = " + format_double(to_ns(flux_in.grid.t(i))) +
                    " ns");
        require(flux_in.p[i] > 0, ErrorKind::infeasible,
                "depleted population: the flux integrates to 1 before t = " +
                    format_double(to_ns(flux_in.grid.t(i))) + " ns");
    }
    std::vector<std::string> warnings;
    std::size_t n = flux_in.grid.n;
    for (std::size_t i = 0; i < flux_in.grid.n; i++) {
        if (flux_in.p[i] < min_population) {
            n = i;
            warnings.push_back("population below " + format_double(min_population) + " at t = " +
                               format_double(to_ns(flux_in.grid.t(i))) + " ns; schedule truncated there");
            break;
        }
    }
    require(n >= 2, ErrorKind::infeasible, "depleted population at the start of the grid");
    Schedule s;
    s.grid = flux_in.grid.sub(0, n);
    s.kappa = kappa;
    s.g.resize(n);
    s.population.assign(flux_in.p.begin(), flux_in.p.begin() + static_cast<std::ptrdiff_t>(n));
    for (std::size_t i = 0; i < n; i++) {
        s.g[i] = std::sqrt(kappa / 4.0 * flux_in.q[i] / flux_in.p[i]);
    }
    s.t_start = s.grid.t_min();
    s.residual_population = s.population[0];
    s.active_begin = 0;
    s.active_end = n;
    s.warnings = std::move(warnings);
    return s;
}

inline Schedule symmetric_exponential_schedule(double tau, double kappa, const TimeGrid &grid) {
    Schedule s = coupling_from_flux(symmetric_exponential_flux(tau, grid), kappa);
    s.tau = tau;
    return s;
}

struct T1Profile {
    std::vector<double> t1;  // seconds, +inf where g = 0
    std::vector<std::size_t> infinite_samples;
};

inline T1Profile t1_profile(const Schedule &s) {
    T1Profile out;
    out.t1.resize(s.grid.n);
    for (std::size_t i = 0; i < s.grid.n; i++) {
        if (s.g[i] > 0) {
            out.t1[i] = s.kappa / (4.0 * s.g[i] * s.g[i]);
        } else {
            out.t1[i] = std::numeric_limits<double>::infinity();
            out.infinite_samples.push_back(i);
        }
    }
    return out;
}

/// Integrates dP/dt = -(4 g^2/kappa) P over the active region with the same
/// segment rule as cumulative_integral, so the returned profile conserves
/// P + int Q exactly up to rounding.
inline FluxProfile flux_from_schedule(const Schedule &s, double p0) {
    s.validate();
    require(p0 >= 0 && p0 <= 1, ErrorKind::invalid_argument, "initial population must lie in [0, 1]");
    FluxProfile f;
    f.grid = s.active_grid();
    const std::size_t n = f.grid.n;
    const double h = f.grid.dt;
    f.p.resize(n);
    f.q.resize(n);
    f.p[0] = p0;
    // A truncated schedule starts between samples; decay p0 across the lead-in.
    const double lead = f.grid.t(0) - s.t_start;
    if (s.truncated && s.active_begin > 0 && lead > 0) {
        double ga = s.gamma(s.active_begin - 1);
        double gb = s.gamma(s.active_begin);
        f.p[0] = p0 * std::exp(-0.5 * (ga + gb) * lead);
    }
    for (std::size_t i = 0; i + 1 < n; i++) {
        double ga = s.gamma(s.active_begin + i);
        double gb = s.gamma(s.active_begin + i + 1);
        double pa = f.p[i];
        double pb;
        if (pa <= 0) {
            pb = 0;
        } else if (ga == gb) {
            pb = pa * std::exp(-ga * h);
        } else {
            auto resid = [&](double x) {
                return x <= 0 ? -pa : x - pa + segment_integral(ga * pa, gb * x, h);
            };
            if (resid(pa) <= 0) {
                pb = pa;
            } else {
                boost::uintmax_t iters = 200;
                auto r = boost::math::tools::toms748_solve(resid, 0.0, pa, -pa, resid(pa),
                                                           boost::math::tools::eps_tolerance<double>(52), iters);
                pb = 0.5 * (r.first + r.second);
            }
        }
        f.p[i + 1] = pb;
    }
    for (std::size_t i = 0; i < n; i++) {
        f.q[i] = s.gamma(s.active_begin + i) * f.p[i];
    }
    return f;
}

/// Clips the rising side where T1 exceeds t1_max. Samples before t_start
/// hold g_min = sqrt(kappa / (4 t1_max)).
inline Schedule truncate_schedule(const Schedule &s, double t1_max) {
    s.validate();
    require(t1_max > 0, ErrorKind::invalid_argument, "t1_max must be positive");
    auto t1 = t1_profile(s).t1;
    double t1_hi = 0;
    double t1_lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = s.active_begin; i < s.active_end; i++) {
        t1_hi = std::max(t1_hi, t1[i]);
        t1_lo = std::min(t1_lo, t1[i]);
    }
    require(t1_max >= t1_lo, ErrorKind::infeasible,
            "t1_max = " + format_double(to_ns(t1_max)) + " ns is below the smallest T1 of the schedule (" +
                format_double(to_ns(t1_lo)) + " ns)");
    Schedule out = s;
    if (t1_max >= t1_hi || t1[s.active_begin] <= t1_max) {
        out.truncation_skipped = true;
        out.warnings.push_back("no truncation needed for t1_max = " + format_double(to_ns(t1_max)) + " ns");
        if (t1_max < t1_hi) {
            out.warnings.push_back("schedule exceeds t1_max after its start");
        }
        return out;
    }
    std::size_t k = s.active_begin;
    while (k < s.active_end && t1[k] > t1_max) {
        k++;
    }
    const double target = std::log(s.kappa / (4.0 * t1_max));
    std::vector<double> lng2(s.grid.n, 0.0);
    bool positive = true;
    std::size_t lo4 = k >= 2 ? k - 2 : 0;
    for (std::size_t i = lo4; i < std::min(s.grid.n, k + 2); i++) {
        positive = positive && s.g[i] > 0;
    }
    std::vector<double> g2(s.grid.n);
    for (std::size_t i = 0; i < s.grid.n; i++) {
        g2[i] = s.g[i] * s.g[i];
        lng2[i] = s.g[i] > 0 ? std::log(g2[i]) : -1e300;
    }
    auto resid = [&](double t) {
        if (positive) {
            return interp_cubic(s.grid, lng2, t) - target;
        }
        return interp_clamped(s.grid, g2, t) - std::exp(target);
    };
    double ta = s.grid.t(k - 1);
    double tb = s.grid.t(k);
    double t_start;
    double fa = resid(ta);
    double fb = resid(tb);
    if (fb == 0) {
        t_start = tb;
    } else if (fa >= 0 || fb < 0) {
        // Interpolant not bracketing (kink); fall back to linear T1.
        double w = (t1[k - 1] - t1_max) / (t1[k - 1] - t1[k]);
        t_start = ta + w * (tb - ta);
    } else {
        boost::uintmax_t iters = 200;
        auto r = boost::math::tools::toms748_solve(resid, ta, tb, fa, fb,
                                                   boost::math::tools::eps_tolerance<double>(52), iters);
        t_start = 0.5 * (r.first + r.second);
    }
    const double residual = std::clamp(interp_cubic(s.grid, s.population, t_start), 0.0, 1.0);
    const double g_min = std::sqrt(s.kappa / (4.0 * t1_max));
    const std::size_t begin = s.grid.index_at_or_after(t_start);
    for (std::size_t i = 0; i < begin; i++) {
        out.g[i] = g_min;
        out.population[i] = residual;
    }
    out.t_start = t_start;
    out.residual_population = residual;
    out.truncated = true;
    out.active_begin = std::max(begin, s.active_begin);
    return out;
}

/// g_rev(t) = g(t0 - t) on the reflected grid. t0 is snapped to whole ticks,
/// so reflecting twice with the same t0 is exact.
inline Schedule reverse_schedule(const Schedule &s, double t0) {
    s.validate();
    require(std::isfinite(t0), ErrorKind::invalid_argument, "reflection time must be finite");
    const auto ticks = static_cast<std::int64_t>(std::llround(t0 / s.grid.dt));
    Schedule out = s;
    out.grid.first = ticks - s.grid.last();
    std::reverse(out.g.begin(), out.g.end());
    std::reverse(out.population.begin(), out.population.end());
    out.active_begin = s.grid.n - s.active_end;
    out.active_end = s.grid.n - s.active_begin;
    out.reversed = !s.reversed;
    out.t0_ticks = (s.reversed && s.t0_ticks == ticks) ? 0 : ticks;
    if (std::abs(static_cast<double>(ticks) * s.grid.dt - t0) > 1e-6 * s.grid.dt) {
        out.warnings.push_back("reflection time rounded to the grid");
    }
    return out;
}

/// Reflection time for the destination schedule: the grid's t_min + t_max
/// plus the combined group delay of both cavities (2/kappa each).
inline double transfer_t0(const Schedule &s, double group_delay) {
    return s.grid.t_min() + s.grid.t_max() + group_delay;
}

inline double default_group_delay(double kappa) {
    return 4.0 / kappa;
}

inline CsvTable schedule_table(const Schedule &s) {
    CsvTable t;
    t.header = {"time_ns", "g_over_2pi_MHz", "T1_ns"};
    auto t1 = t1_profile(s).t1;
    for (std::size_t i = 0; i < s.grid.n; i++) {
        t.rows.push_back({to_ns(s.grid.t(i)), to_mhz(s.g[i]), to_ns(t1[i])});
    }
    return t;
}

inline CsvTable flux_table(const FluxProfile &f) {
    CsvTable t;
    t.header = {"time_ns", "Q_per_ns", "P"};
    for (std::size_t i = 0; i < f.grid.n; i++) {
        t.rows.push_back({to_ns(f.grid.t(i)), f.q[i] * ns, f.p[i]});
    }
    return t;
}

/// Recovers the uniform grid from a time column in ns.
inline TimeGrid grid_from_times_ns(const std::vector<double> &t_ns) {
    require(t_ns.size() >= 2, ErrorKind::io, "need at least two samples to infer a time grid");
    double dt = (t_ns.back() - t_ns.front()) / static_cast<double>(t_ns.size() - 1) * ns;
    require(dt > 0, ErrorKind::io, "time column must increase");
    // Snap dt to a clean decimal so tick arithmetic is reproducible.
    double dt_ns = dt / ns;
    double scale = std::pow(10.0, 6 - std::floor(std::log10(dt_ns)));
    dt = std::round(dt_ns * scale) / scale * ns;
    return TimeGrid{dt, static_cast<std::int64_t>(std::llround(t_ns.front() * ns / dt)), t_ns.size()};
}

inline Schedule schedule_from_table(const CsvTable &t, double kappa) {
    Schedule s;
    s.grid = grid_from_times_ns(t.values("time_ns"));
    s.kappa = kappa;
    for (double f : t.values("g_over_2pi_MHz")) {
        s.g.push_back(from_mhz(f));
    }
    s.t_start = s.grid.t_min();
    s.active_begin = 0;
    s.active_end = s.grid.n;
    s.population = std::vector<double>(s.grid.n, 1.0);
    double p = 1;
    for (std::size_t i = 0; i < s.grid.n; i++) {
        s.population[i] = p;
        if (i + 1 < s.grid.n) {
            p *= std::exp(-0.5 * (s.gamma(i) + s.gamma(i + 1)) * s.grid.dt);
        }
    }
    s.validate();
    return s;
}

}  // namespace symemit
