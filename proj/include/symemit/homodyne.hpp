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

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "symemit/device_model.hpp"
#include "symemit/dynamics.hpp"
#include "symemit/error.hpp"
#include "symemit/grid.hpp"
#include "symemit/parallel.hpp"
#include "symemit/pulse_schedule.hpp"

// Homodyne records and the analysis run on them: exponential fits, symmetry
// of the two halves of a packet, phase drift, chevron scans and T1 curves.

namespace symemit {

using Window = std::pair<double, double>;  // [start, end] seconds

struct HomodyneSettings {
    double gain = 1.0;  // volts per sqrt(photon / ns)
    double lo_detuning = 0;
    double lo_phase = 0;
    double noise_sigma = 0;  // volts per quadrature, single shot
    int n_avg = 1;
    std::uint64_t seed = 0;
    std::optional<Window> pulse_window;
    double pulse_amplitude = 0;  // volts, added to the quadrature channel
    // Optional slow ramp on the in-phase channel after drift_onset.
    double drift_rate = 0;  // volts per second
    double drift_onset = 1000 * ns;
};

struct HomodyneRecord {
    TimeGrid grid;
    std::vector<double> v_i, v_q;
    double gain = 1.0;
    double lo_detuning = 0;
    double noise_sigma = 0;
    int n_avg = 1;
    std::uint64_t seed = 0;
    std::optional<Window> pulse_window;

    std::complex<double> z(std::size_t i) const {
        return {v_i[i], v_q[i]};
    }
};

/// v_i + i v_q = gain e^{i (lo_phase - lo_detuning t)} amplitude + noise, with
/// lo_detuning the emitter frequency minus the LO frequency. Envelopes carry
/// e^{-i omega t}, so an emitter above the LO turns clockwise in the IQ plane.
inline HomodyneRecord synthesize_homodyne(const FieldRecord &field, const HomodyneSettings &set) {
    require(set.n_avg >= 1, ErrorKind::invalid_argument, "n_avg must be at least 1");
    require(set.noise_sigma >= 0, ErrorKind::invalid_argument, "noise_sigma must be >= 0");
    field.grid.validate();
    HomodyneRecord rec;
    rec.grid = field.grid;
    rec.gain = set.gain;
    rec.lo_detuning = set.lo_detuning;
    rec.noise_sigma = set.noise_sigma;
    rec.n_avg = set.n_avg;
    rec.seed = set.seed;
    rec.pulse_window = set.pulse_window;
    rec.v_i.resize(field.grid.n);
    rec.v_q.resize(field.grid.n);
    std::mt19937_64 rng(set.seed);
    std::normal_distribution<double> noise(0.0, set.noise_sigma / std::sqrt(static_cast<double>(set.n_avg)));
    const double scale = set.gain * std::sqrt(ns);
    for (std::size_t i = 0; i < field.grid.n; i++) {
        double t = field.grid.t(i);
        std::complex<double> z = scale * std::polar(1.0, set.lo_phase - set.lo_detuning * t) * field.amplitude[i];
        double ni = 0, nq = 0;
        if (set.noise_sigma > 0) {
            ni = noise(rng);
            nq = noise(rng);
        }
        rec.v_i[i] = z.real() + ni;
        rec.v_q[i] = z.imag() + nq;
        if (set.pulse_window && t >= set.pulse_window->first && t <= set.pulse_window->second) {
            double w = set.pulse_window->second - set.pulse_window->first;
            double s = w > 0 ? std::sin(std::numbers::pi * (t - set.pulse_window->first) / w) : 1.0;
            rec.v_q[i] += set.pulse_amplitude * s * s;
        }
        if (set.drift_rate != 0 && t > set.drift_onset) {
            rec.v_i[i] += set.drift_rate * (t - set.drift_onset);
        }
    }
    return rec;
}

inline CsvTable homodyne_table(const HomodyneRecord &rec) {
    CsvTable t;
    t.header = {"time_ns", "v_i", "v_q"};
    for (std::size_t i = 0; i < rec.grid.n; i++) {
        t.rows.push_back({to_ns(rec.grid.t(i)), rec.v_i[i], rec.v_q[i]});
    }
    return t;
}

// ---------------------------------------------------------------------------
// Exponential fit

enum class Channel { in_phase, quadrature, power };

struct FitResult {
    double amplitude = 0;
    double time_constant = 0;
    double offset = 0;
    Window ci95{0, 0};  // on the time constant
    double rms_residual = 0;
    std::size_t samples = 0;

    bool contains(double tau) const {
        return ci95.first <= tau && tau <= ci95.second;
    }
};

/// Least squares fit of A exp(-(t - t_0)/tau) + c, t_0 = t.front(). For each
/// trial tau the linear parameters are solved exactly, so the search is 1-D in
/// log tau. The interval comes from the covariance of (A, tau, c).
inline FitResult fit_exponential(const std::vector<double> &t_in, const std::vector<double> &y_in,
                                 std::optional<double> fixed_offset = std::nullopt) {
    const std::size_t n = t_in.size();
    require(n == y_in.size(), ErrorKind::invalid_argument, "fit arrays differ in length");
    require(n >= 10, ErrorKind::invalid_argument, "fit window needs at least 10 samples");
    const double len = t_in.back() - t_in.front();
    require(len > 0, ErrorKind::invalid_argument, "fit window has zero length");
    // Work in units of the window length and the largest |y|.
    double ys = 0;
    for (double v : y_in) {
        ys = std::max(ys, std::abs(v));
    }
    require(ys > 0, ErrorKind::numerical, "fit failure: identically zero data");
    std::vector<double> t(n), y(n);
    for (std::size_t i = 0; i < n; i++) {
        t[i] = (t_in[i] - t_in.front()) / len;
        y[i] = y_in[i] / ys;
    }
    std::optional<double> c_fixed;
    if (fixed_offset) {
        c_fixed = *fixed_offset / ys;
    }
    const bool free_offset = !c_fixed.has_value();
    const std::size_t n_par = free_offset ? 3 : 2;

    struct Linear {
        double a, c, rss;
    };
    auto solve = [&](double tau) -> Linear {
        double see = 0, se = 0, sey = 0, sy = 0;
        for (std::size_t i = 0; i < n; i++) {
            double e = std::exp(-t[i] / tau);
            see += e * e;
            se += e;
            sey += e * y[i];
            sy += y[i];
        }
        double a, c;
        if (free_offset) {
            double det = see * static_cast<double>(n) - se * se;
            if (!(std::abs(det) > 1e-300)) {
                return {0, 0, INFINITY};
            }
            a = (sey * static_cast<double>(n) - se * sy) / det;
            c = (see * sy - se * sey) / det;
        } else {
            c = *c_fixed;
            a = (sey - c * se) / see;
        }
        double rss = 0;
        for (std::size_t i = 0; i < n; i++) {
            double r = y[i] - a * std::exp(-t[i] / tau) - c;
            rss += r * r;
        }
        return {a, c, rss};
    };

    const double lo = std::log(0.2 / static_cast<double>(n - 1));
    const double hi = std::log(1000.0);
    constexpr int scan = 240;
    int best = 0;
    double best_rss = INFINITY;
    for (int k = 0; k <= scan; k++) {
        double r = solve(std::exp(lo + (hi - lo) * k / scan)).rss;
        if (r < best_rss) {
            best_rss = r;
            best = k;
        }
    }
    auto residual_note = [&]() {
        return " (rms residual " + format_double(ys * std::sqrt(best_rss / static_cast<double>(n))) + ")";
    };
    require(best > 0 && best < scan, ErrorKind::numerical,
            "fit failure: time constant ran to the search bound" + residual_note());
    double a_lo = lo + (hi - lo) * (best - 1) / scan;
    double a_hi = lo + (hi - lo) * (best + 1) / scan;
    boost::uintmax_t iters = 200;
    auto m = boost::math::tools::brent_find_minima([&](double u) { return solve(std::exp(u)).rss; }, a_lo, a_hi,
                                                   52, iters);
    const double tau = std::exp(m.first);
    Linear lin = solve(tau);
    // Covariance from J^T J with J = d model / d (A, tau[, c]).
    Eigen::MatrixXd jtj = Eigen::MatrixXd::Zero(n_par, n_par);
    Eigen::VectorXd row(n_par);
    for (std::size_t i = 0; i < n; i++) {
        double e = std::exp(-t[i] / tau);
        row(0) = e;
        row(1) = lin.a * t[i] / (tau * tau) * e;
        if (free_offset) {
            row(2) = 1.0;
        }
        jtj += row * row.transpose();
    }
    const double dof = static_cast<double>(n - n_par);
    const double s2 = lin.rss / dof;
    Eigen::MatrixXd cov = s2 * jtj.inverse();
    double sd = std::sqrt(std::max(0.0, cov(1, 1)));
    require(std::isfinite(sd), ErrorKind::numerical, "fit failure: singular normal matrix" + residual_note());
    boost::math::students_t dist(dof);
    double q = boost::math::quantile(dist, 0.975);
    FitResult out;
    out.amplitude = lin.a * ys;
    out.time_constant = tau * len;
    out.offset = lin.c * ys;
    out.samples = n;
    out.rms_residual = ys * std::sqrt(lin.rss / static_cast<double>(n));
    out.ci95 = {(tau - q * sd) * len, (tau + q * sd) * len};
    return out;
}

inline std::vector<double> channel_values(const HomodyneRecord &rec, Channel ch) {
    std::vector<double> out(rec.grid.n);
    for (std::size_t i = 0; i < rec.grid.n; i++) {
        switch (ch) {
            case Channel::in_phase:
                out[i] = rec.v_i[i];
                break;
            case Channel::quadrature:
                out[i] = rec.v_q[i];
                break;
            case Channel::power:
                out[i] = rec.v_i[i] * rec.v_i[i] + rec.v_q[i] * rec.v_q[i];
                break;
        }
    }
    return out;
}

/// Fit over samples with window.first <= t <= window.second.
inline FitResult fit_window(const TimeGrid &grid, const std::vector<double> &values, const Window &window,
                            std::optional<double> fixed_offset = std::nullopt) {
    require(window.first < window.second, ErrorKind::invalid_argument, "fit window must be ordered");
    require(window.first >= grid.t_min() - 1e-6 * grid.dt && window.second <= grid.t_max() + 1e-6 * grid.dt,
            ErrorKind::invalid_argument, "fit window lies outside the record");
    std::vector<double> t, y;
    for (std::size_t i = grid.index_at_or_after(window.first); i < grid.n && grid.t(i) <= window.second + 1e-9 * grid.dt;
         i++) {
        t.push_back(grid.t(i));
        y.push_back(values[i]);
    }
    return fit_exponential(t, y, fixed_offset);
}

inline FitResult fit_exponential(const HomodyneRecord &rec, Channel ch, const Window &window) {
    return fit_window(rec.grid, channel_values(rec, ch), window);
}

// ---------------------------------------------------------------------------
// Symmetry of the two halves

struct SymmetryOptions {
    std::optional<double> split_time;  // default: peak of the smoothed signal
    double floor_fraction = 0.1;
    double smooth = 4 * ns;       // moving-average half width for peak and edge detection
    double edge_guard = 35 * ns;  // skipped after the emission start
    double rise_guard = 10 * ns;  // skipped before the split
    double fall_guard = 60 * ns;  // skipped after the split; the cavity rounds the peak
    double fall_span = 300 * ns;  // fall window ends this long after the split
};

struct SymmetryReport {
    FitResult rise;
    FitResult fall;
    double mirror_rms = 0;
    double split_time = 0;
    double emission_start = 0;
    double emission_end = 0;
};

inline std::vector<double> moving_average(const std::vector<double> &x, std::size_t half) {
    std::vector<double> out(x.size());
    std::vector<double> cum(x.size() + 1, 0.0);
    for (std::size_t i = 0; i < x.size(); i++) {
        cum[i + 1] = cum[i] + x[i];
    }
    for (std::size_t i = 0; i < x.size(); i++) {
        std::size_t a = i >= half ? i - half : 0;
        std::size_t b = std::min(x.size(), i + half + 1);
        out[i] = (cum[b] - cum[a]) / static_cast<double>(b - a);
    }
    return out;
}

/// Fits the fall after the split with a free offset, then the rise (on a
/// reversed time axis) sharing that offset. mirror_rms compares s(split - u)
/// with s(split + u) inside the emission window, normalized by the peak.
inline SymmetryReport symmetry_report(const TimeGrid &grid, const std::vector<double> &signal,
                                      const SymmetryOptions &opt = {}) {
    grid.validate();
    require(signal.size() == grid.n, ErrorKind::invalid_argument, "signal does not match its grid");
    auto half = static_cast<std::size_t>(std::llround(opt.smooth / grid.dt));
    std::vector<double> sm = moving_average(signal, half);
    std::size_t ipk = static_cast<std::size_t>(std::max_element(sm.begin(), sm.end()) - sm.begin());
    const double peak = sm[ipk];
    require(peak > 0, ErrorKind::numerical, "no emission detected");
    std::size_t i0 = 0, i1 = grid.n - 1;
    while (i0 < ipk && sm[i0] < opt.floor_fraction * peak) {
        i0++;
    }
    while (i1 > ipk && sm[i1] < opt.floor_fraction * peak) {
        i1--;
    }
    SymmetryReport rep;
    rep.emission_start = grid.t(i0);
    rep.emission_end = grid.t(i1);
    std::size_t is = opt.split_time ? grid.nearest_index(*opt.split_time) : ipk;
    rep.split_time = grid.t(is);
    const double split = rep.split_time;

    Window fall{split + opt.fall_guard, std::min(split + opt.fall_span, grid.t_max())};
    require(fall.second - fall.first >= 10 * grid.dt, ErrorKind::invalid_argument,
            "emission window too short for the fall fit");
    rep.fall = fit_window(grid, signal, fall);

    std::vector<double> u, y;
    double rise_begin = rep.emission_start + opt.edge_guard;
    double rise_end = split - opt.rise_guard;
    for (std::size_t i = is + 1; i-- > 0;) {
        double t = grid.t(i);
        if (t > rise_end + 1e-9 * grid.dt) {
            continue;
        }
        if (t < rise_begin - 1e-9 * grid.dt) {
            break;
        }
        u.push_back(split - t);
        y.push_back(signal[i]);
    }
    require(u.size() >= 10, ErrorKind::invalid_argument, "emission window too short for the rise fit");
    rep.rise = fit_exponential(u, y, rep.fall.offset);

    double sum = 0;
    std::size_t count = 0;
    for (std::size_t k = 1; is >= i0 + k && is + k <= i1; k++) {
        double d = signal[is - k] - signal[is + k];
        sum += d * d;
        count++;
    }
    double raw_peak = *std::max_element(signal.begin(), signal.end());
    rep.mirror_rms = count > 0 ? std::sqrt(sum / static_cast<double>(count)) / raw_peak : 0.0;
    return rep;
}

/// Power channel, with samples under the excitation-pulse artifact zeroed.
inline SymmetryReport symmetry_report(const HomodyneRecord &rec, const SymmetryOptions &opt = {}) {
    std::vector<double> power = channel_values(rec, Channel::power);
    if (rec.pulse_window) {
        for (std::size_t i = 0; i < rec.grid.n; i++) {
            double t = rec.grid.t(i);
            if (t >= rec.pulse_window->first && t <= rec.pulse_window->second) {
                power[i] = 0;
            }
        }
    }
    return symmetry_report(rec.grid, power, opt);
}

inline SymmetryReport symmetry_report(const FluxProfile &flux, const SymmetryOptions &opt = {}) {
    return symmetry_report(flux.grid, flux.q, opt);
}

// ---------------------------------------------------------------------------
// Phase drift

struct PhaseDriftReport {
    double drift_angle = 0;     // degrees over the window
    double slope = 0;           // rad/s, of the demodulated phase
    std::vector<double> phase;  // rad, unwrapped; NaN below the floor
    Window window{0, 0};
    std::size_t samples = 0;
};

/// Linear trend of the unwrapped phase of v_i + i v_q over above-floor samples,
/// scaled to the full window length. The trend is weighted by |z|^2, so weak
/// noisy samples near the floor count little. With smooth > 0 the complex
/// signal is moving-averaged over +/- smooth first. Samples within `smooth` of
/// the pulse artifact are skipped. drift_angle is the phase the emitter gains
/// on the LO, i.e. minus the demodulated phase change, so it is positive for
/// an emitter above the LO.
inline PhaseDriftReport phase_drift(const HomodyneRecord &rec, const Window &window, double floor_fraction = 0.1,
                                    double smooth = 0) {
    require(window.first < window.second, ErrorKind::invalid_argument, "phase window must be ordered");
    require(smooth >= 0, ErrorKind::invalid_argument, "smoothing width must be >= 0");
    std::size_t a = rec.grid.index_at_or_after(window.first);
    std::size_t b = rec.grid.index_at_or_after(window.second + 1e-9 * rec.grid.dt);
    PhaseDriftReport rep;
    rep.window = window;
    rep.phase.assign(rec.grid.n, NAN);
    auto half = static_cast<std::size_t>(std::llround(smooth / rec.grid.dt));
    std::vector<double> vi = moving_average(rec.v_i, half), vq = moving_average(rec.v_q, half);
    auto masked = [&](std::size_t i) {
        double t = rec.grid.t(i);
        return rec.pulse_window && t >= rec.pulse_window->first - smooth && t <= rec.pulse_window->second + smooth;
    };
    double peak = 0;
    for (std::size_t i = a; i < b; i++) {
        if (!masked(i)) {
            peak = std::max(peak, std::hypot(vi[i], vq[i]));
        }
    }
    require(peak > 0, ErrorKind::numerical, "no signal in the phase window");
    double prev = 0;
    bool have = false;
    double sw = 0, st = 0, sp = 0, stt = 0, stp = 0;
    std::size_t n = 0;
    for (std::size_t i = a; i < b; i++) {
        double amp = std::hypot(vi[i], vq[i]);
        if (masked(i) || amp < floor_fraction * peak) {
            continue;
        }
        double ph = std::atan2(vq[i], vi[i]);
        if (have) {
            ph += two_pi * std::round((prev - ph) / two_pi);
        }
        prev = ph;
        have = true;
        rep.phase[i] = ph;
        double w = amp * amp / (peak * peak);
        double t = rec.grid.t(i) - window.first;
        sw += w;
        st += w * t;
        sp += w * ph;
        stt += w * t * t;
        stp += w * t * ph;
        n++;
    }
    require(n >= 2, ErrorKind::numerical, "no signal above the amplitude floor");
    double den = sw * stt - st * st;
    rep.slope = den > 0 ? (sw * stp - st * sp) / den : 0.0;
    rep.samples = n;
    rep.drift_angle = -rep.slope * (window.second - window.first) * 180.0 / std::numbers::pi;
    return rep;
}

// ---------------------------------------------------------------------------
// Chevron scan

struct ChevronOptions {
    HomodyneSettings homodyne;  // lo_detuning is set per row
    CouplingModel coupling = CouplingModel::purcell_matched;
    int workers = 0;
    double floor_fraction = 0.1;
};

struct ChevronMap {
    std::vector<double> v2;
    TimeGrid grid;
    std::vector<std::vector<double>> signal;  // in-phase channel, one row per v2
    std::vector<double> detuning;             // omega_dressed - omega_lo, rad/s
    std::vector<double> fringe_power;         // (rad/s)^2
    std::vector<double> fringe_frequency;     // Hz
    std::size_t resonant_index = 0;
    double resonant_v2 = 0;
};

/// Spectral weight of a row away from zero frequency, in (rad/s)^2: the square
/// of the mean phase rate, taken from the lag-one correlation sum of z. White
/// noise does not correlate between samples, so it averages out of the sum.
/// Samples below `floor_fraction` of the peak magnitude are skipped.
inline double fringe_power(const HomodyneRecord &rec, double floor_fraction = 0.1) {
    auto masked = [&](std::size_t i) {
        double t = rec.grid.t(i);
        return rec.pulse_window && t >= rec.pulse_window->first && t <= rec.pulse_window->second;
    };
    double peak = 0;
    for (std::size_t i = 0; i < rec.grid.n; i++) {
        peak = masked(i) ? peak : std::max(peak, std::abs(rec.z(i)));
    }
    const double floor = floor_fraction * peak;
    std::complex<double> lag{0, 0};
    for (std::size_t i = 0; i + 1 < rec.grid.n; i++) {
        if (masked(i) || masked(i + 1) || std::abs(rec.z(i)) < floor || std::abs(rec.z(i + 1)) < floor) {
            continue;
        }
        lag += rec.z(i + 1) * std::conj(rec.z(i));
    }
    require(std::abs(lag) > 0, ErrorKind::numerical, "chevron row carries no signal");
    double rate = std::arg(lag) / rec.grid.dt;
    return rate * rate;
}

inline ChevronMap chevron_scan(const DeviceParams &p, double v1, const std::vector<double> &v2_values,
                               double omega_lo, const TimeGrid &grid, const ChevronOptions &opt = {}) {
    p.validate();
    grid.validate();
    require(!v2_values.empty(), ErrorKind::invalid_argument, "chevron scan needs v2 values");
    for (double v2 : v2_values) {
        require(v2 >= p.v_min && v2 <= p.v_max, ErrorKind::invalid_argument,
                "chevron v2 = " + format_double(v2) + " V outside the device range");
    }
    ChevronMap map;
    map.v2 = v2_values;
    map.grid = grid;
    const std::size_t rows = v2_values.size();
    map.signal.resize(rows);
    map.detuning.resize(rows);
    map.fringe_power.resize(rows);
    map.fringe_frequency.resize(rows);
    parallel_for(rows, worker_count(opt.workers), [&](std::size_t r) {
        OperatingPoint op = operating_point(v1, v2_values[r], p);
        Schedule s = constant_schedule(grid, op.g_eff, p.kappa);
        EmitOptions eo;
        eo.coupling = opt.coupling;
        EmissionResult em = oracle_emit(s, 1.0 / std::sqrt(2.0), eo);
        HomodyneSettings hs = opt.homodyne;
        hs.lo_detuning = op.omega_dressed - omega_lo;
        hs.seed = opt.homodyne.seed + r;
        HomodyneRecord rec = synthesize_homodyne(em.field, hs);
        map.signal[r] = rec.v_i;
        map.detuning[r] = hs.lo_detuning;
        map.fringe_power[r] = fringe_power(rec, opt.floor_fraction);
        PhaseDriftReport ph = phase_drift(rec, {grid.t_min(), grid.t_max()}, opt.floor_fraction);
        map.fringe_frequency[r] = std::abs(ph.slope) / two_pi;
    });
    map.resonant_index = static_cast<std::size_t>(
        std::min_element(map.fringe_power.begin(), map.fringe_power.end()) - map.fringe_power.begin());
    map.resonant_v2 = v2_values[map.resonant_index];
    return map;
}

inline CsvTable chevron_table(const ChevronMap &m) {
    CsvTable t;
    t.header.push_back("v2");
    for (std::size_t i = 0; i < m.grid.n; i++) {
        t.header.push_back(format_double(to_ns(m.grid.t(i))));
    }
    for (std::size_t r = 0; r < m.v2.size(); r++) {
        std::vector<double> row{m.v2[r]};
        row.insert(row.end(), m.signal[r].begin(), m.signal[r].end());
        t.rows.push_back(std::move(row));
    }
    return t;
}

// ---------------------------------------------------------------------------
// T1 along a contour

struct T1CurveOptions {
    double kappa = from_mhz(20.0);
    double dt = 0.5 * ns;
    double skip = 160 * ns;  // cavity transient excluded from the fit
    double span_t1 = 5.0;    // fit window length in units of the model T1
    CouplingModel coupling = CouplingModel::purcell_matched;
    HomodyneSettings homodyne;
    int workers = 0;
};

struct T1CurvePoint {
    OperatingPoint point;
    double t1_fit = 0;
    Window ci95{0, 0};
    bool ok = false;
    std::string message;
};

inline std::vector<T1CurvePoint> t1_curve(const std::vector<OperatingPoint> &contour, const T1CurveOptions &opt = {}) {
    require(!contour.empty(), ErrorKind::invalid_argument, "T1 curve needs a nonempty contour");
    std::vector<T1CurvePoint> out(contour.size());
    parallel_for(contour.size(), worker_count(opt.workers), [&](std::size_t k) {
        T1CurvePoint &pt = out[k];
        pt.point = contour[k];
        try {
            double t_end = opt.skip + opt.span_t1 * contour[k].t1_radiative;
            TimeGrid grid = TimeGrid::from_range(0.0, t_end, opt.dt);
            Schedule s = constant_schedule(grid, contour[k].g_eff, opt.kappa);
            EmitOptions eo;
            eo.coupling = opt.coupling;
            EmissionResult em = oracle_emit(s, 1.0, eo);
            HomodyneSettings hs = opt.homodyne;
            hs.seed = opt.homodyne.seed + k;
            HomodyneRecord rec = synthesize_homodyne(em.field, hs);
            FitResult fit = fit_exponential(rec, Channel::power, {opt.skip, grid.t_max()});
            pt.t1_fit = fit.time_constant;
            pt.ci95 = fit.ci95;
            pt.ok = true;
        } catch (const Error &e) {
            pt.ok = false;
            pt.message = e.what();
        }
    });
    return out;
}

inline CsvTable t1_curve_table(const std::vector<T1CurvePoint> &curve) {
    CsvTable t;
    t.header = {"v1", "v2", "g_MHz", "T1_model_ns", "T1_fit_ns", "ci_low_ns", "ci_high_ns", "ok"};
    for (const auto &p : curve) {
        t.rows.push_back({p.point.v1, p.point.v2, to_mhz(p.point.g_eff), to_ns(p.point.t1_radiative), to_ns(p.t1_fit),
                          to_ns(p.ci95.first), to_ns(p.ci95.second), p.ok ? 1.0 : 0.0});
    }
    return t;
}

}  // namespace symemit
