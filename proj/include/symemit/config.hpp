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

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "symemit/device_model.hpp"
#include "symemit/dynamics.hpp"
#include "symemit/error.hpp"
#include "symemit/grid.hpp"
#include "symemit/homodyne.hpp"

// INI experiment configuration. Keys carry their unit in the name; every key
// is optional and falls back to the defaults below. Unknown keys are
// rejected so that typos do not silently run the default.

namespace symemit {

struct ExperimentConfig {
    DeviceParams device;
    double omega_operating = from_ghz(7.445);

    // schedule
    double tau = 50 * ns;
    double t1_max = 600 * ns;
    double t_min = -600 * ns;
    double t_max = 600 * ns;
    double dt = 0.1 * ns;

    // simulation
    EmitMode mode = EmitMode::oracle;
    int emit_fock_cutoff = 3;
    int absorb_fock_cutoff = 5;
    int n_traj = 1000;
    std::optional<std::uint64_t> seed;
    double rtol = 1e-8;
    double atol = 1e-10;
    CouplingModel coupling = CouplingModel::purcell_matched;
    double detuning = 0;  // emitter offset from the frame, rad/s

    // transfer
    DriveMode drive = DriveMode::coherent_drive;
    std::vector<double> t_perp{std::numeric_limits<double>::infinity()};
    std::optional<double> group_delay;  // default 4 / kappa
    std::string field_record = "generate";

    // analysis
    HomodyneSettings homodyne;
    Window phase_window{-400 * ns, 600 * ns};
    double phase_smooth = 0;
    double floor_fraction = 0.1;
    SymmetryOptions symmetry;

    // calibration
    double v1_start = 0.0;
    double v1_stop = 0.19;
    double v1_step = 0.0025;
    double chevron_v1 = 0.1;
    double chevron_v2_step = 0.0025;
    int chevron_points = 11;
    double chevron_duration = 400 * ns;
    double chevron_dt = 0.5 * ns;
    double t1_skip = 160 * ns;
    double t1_dt = 0.5 * ns;
    double calibration_noise_sigma = 0;  // chevron and T1-curve records

    std::string out_dir = "out";
    std::string source;  // path the config came from, empty for defaults

    bool stochastic() const {
        return mode == EmitMode::mc || homodyne.noise_sigma > 0 || calibration_noise_sigma > 0;
    }

    TimeGrid grid() const {
        return TimeGrid::from_range(t_min, t_max, dt);
    }

    OdeOptions ode() const {
        OdeOptions o;
        o.rtol = rtol;
        o.atol = atol;
        return o;
    }

    void validate() const {
        device.validate();
        auto positive = [](double x, const std::string &name) {
            require(x > 0 && !std::isnan(x), ErrorKind::config, name + " must be positive");
        };
        auto finite_positive = [&](double x, const std::string &name) {
            positive(x, name);
            require(std::isfinite(x), ErrorKind::config, name + " must be finite");
        };
        finite_positive(omega_operating, "device.operating_GHz");
        finite_positive(tau, "schedule.tau_ns");
        positive(t1_max, "schedule.t1_max_ns");
        finite_positive(dt, "schedule.dt_ns");
        require(std::isfinite(t_min) && std::isfinite(t_max) && t_max > t_min, ErrorKind::config,
                "schedule.t_min_ns must be below schedule.t_max_ns");
        require(emit_fock_cutoff >= 1 && absorb_fock_cutoff >= 1, ErrorKind::config, "Fock cutoffs must be >= 1");
        require(n_traj >= 1, ErrorKind::config, "simulation.n_traj must be >= 1");
        finite_positive(rtol, "simulation.rtol");
        finite_positive(atol, "simulation.atol");
        require(std::isfinite(detuning), ErrorKind::config, "simulation.detuning_kHz must be finite");
        require(!t_perp.empty(), ErrorKind::config, "transfer.t_perp_us needs at least one value");
        for (double t : t_perp) {
            positive(t, "transfer.t_perp_us");
        }
        if (group_delay) {
            require(*group_delay >= 0 && std::isfinite(*group_delay), ErrorKind::config,
                    "transfer.group_delay_ns must be >= 0");
        }
        finite_positive(homodyne.gain, "analysis.gain_V");
        require(homodyne.noise_sigma >= 0, ErrorKind::config, "analysis.noise_sigma_V must be >= 0");
        require(homodyne.n_avg >= 1, ErrorKind::config, "analysis.n_avg must be >= 1");
        require(phase_window.first < phase_window.second, ErrorKind::config, "analysis phase window must be ordered");
        require(phase_smooth >= 0, ErrorKind::config, "analysis.phase_smooth_ns must be >= 0");
        require(floor_fraction > 0 && floor_fraction < 1, ErrorKind::config,
                "analysis.floor_fraction must lie in (0, 1)");
        require(symmetry.edge_guard >= 0 && symmetry.rise_guard >= 0 && symmetry.fall_guard >= 0 &&
                    symmetry.smooth >= 0,
                ErrorKind::config, "symmetry guards must be >= 0");
        positive(symmetry.fall_span, "analysis.fall_span_ns");
        finite_positive(v1_step, "calibration.v1_step");
        require(v1_stop > v1_start, ErrorKind::config, "calibration.v1_stop must exceed calibration.v1_start");
        finite_positive(chevron_v2_step, "calibration.chevron_v2_step");
        require(chevron_points >= 2, ErrorKind::config, "calibration.chevron_points must be >= 2");
        finite_positive(chevron_duration, "calibration.chevron_duration_ns");
        finite_positive(chevron_dt, "calibration.chevron_dt_ns");
        require(t1_skip >= 0, ErrorKind::config, "calibration.t1_skip_ns must be >= 0");
        finite_positive(t1_dt, "calibration.t1_dt_ns");
        require(calibration_noise_sigma >= 0, ErrorKind::config, "calibration.noise_sigma_V must be >= 0");
        require(!stochastic() || seed.has_value(), ErrorKind::config,
                "simulation.seed is required for stochastic runs (noise or mc mode)");
        require(!out_dir.empty(), ErrorKind::config, "output.dir must not be empty");
    }
};

inline EmitMode parse_emit_mode(const std::string &s) {
    if (s == "oracle") {
        return EmitMode::oracle;
    }
    if (s == "master") {
        return EmitMode::master;
    }
    if (s == "mc") {
        return EmitMode::mc;
    }
    fail(ErrorKind::config, "unknown mode '" + s + "' (oracle, master, mc)");
}

namespace detail {

class IniReader {
   public:
    explicit IniReader(const boost::property_tree::ptree &tree) : tree_(tree) {
    }

    std::optional<std::string> text(const std::string &section, const std::string &key) {
        known_.insert(section + "." + key);
        auto sec = tree_.get_child_optional(section);
        if (!sec) {
            return std::nullopt;
        }
        auto v = sec->get_optional<std::string>(key);
        if (!v) {
            return std::nullopt;
        }
        return boost::algorithm::trim_copy(*v);
    }

    void number(const std::string &section, const std::string &key, double &out, double unit = 1.0) {
        if (auto v = text(section, key)) {
            out = parse(section, key, *v) * unit;
        }
    }

    void integer(const std::string &section, const std::string &key, int &out) {
        if (auto v = text(section, key)) {
            double x = parse(section, key, *v);
            require(std::floor(x) == x && std::abs(x) < 2e9, ErrorKind::config,
                    section + "." + key + " must be an integer");
            out = static_cast<int>(x);
        }
    }

    std::vector<double> list(const std::string &section, const std::string &key, double unit) {
        std::vector<double> out;
        auto v = text(section, key);
        if (!v) {
            return out;
        }
        std::vector<std::string> parts;
        boost::algorithm::split(parts, *v, boost::is_any_of(","));
        for (auto &p : parts) {
            out.push_back(parse(section, key, boost::algorithm::trim_copy(p)) * unit);
        }
        return out;
    }

    void reject_unknown() const {
        for (const auto &[section, sub] : tree_) {
            if (sub.empty() && !sub.data().empty()) {
                fail(ErrorKind::config, "key '" + section + "' outside any section");
            }
            for (const auto &[key, value] : sub) {
                if (!known_.count(section + "." + key)) {
                    fail(ErrorKind::config, "unknown config key " + section + "." + key);
                }
            }
        }
    }

   private:
    static double parse(const std::string &section, const std::string &key, const std::string &v) {
        try {
            return parse_double(v);
        } catch (const Error &) {
            fail(ErrorKind::config, section + "." + key + ": not a number: '" + v + "'");
        }
    }

    const boost::property_tree::ptree &tree_;
    std::set<std::string> known_;
};

}  // namespace detail

inline ExperimentConfig parse_config(std::istream &in, const std::string &source = "") {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error &e) {
        fail(ErrorKind::config, "cannot parse config " + source + ": " + e.message() + " (line " +
                                    std::to_string(e.line()) + ")");
    }
    ExperimentConfig c;
    c.source = source;
    detail::IniReader r(tree);

    DeviceParams &d = c.device;
    r.number("device", "cavity_GHz", d.omega_cavity, two_pi * 1e9);
    r.number("device", "tcq_max_GHz", d.omega_tcq_max, two_pi * 1e9);
    r.number("device", "transmon1_max_GHz", d.omega_q1_max, two_pi * 1e9);
    r.number("device", "kappa_MHz", d.kappa, two_pi * 1e6);
    r.number("device", "gain1_per_V", d.gain1);
    r.number("device", "gain2_per_V", d.gain2);
    r.number("device", "cross_coupling", d.cross_coupling);
    r.number("device", "asymmetry", d.asymmetry);
    r.number("device", "internal_coupling_MHz", d.internal_coupling, two_pi * 1e6);
    r.number("device", "max_coupling_MHz", d.max_coupling, two_pi * 1e6);
    r.number("device", "v_min_V", d.v_min);
    r.number("device", "v_max_V", d.v_max);
    r.number("device", "operating_GHz", c.omega_operating, two_pi * 1e9);

    r.number("schedule", "tau_ns", c.tau, ns);
    r.number("schedule", "t1_max_ns", c.t1_max, ns);
    r.number("schedule", "t_min_ns", c.t_min, ns);
    r.number("schedule", "t_max_ns", c.t_max, ns);
    r.number("schedule", "dt_ns", c.dt, ns);

    if (auto v = r.text("simulation", "mode")) {
        c.mode = parse_emit_mode(*v);
    }
    r.integer("simulation", "emit_fock_cutoff", c.emit_fock_cutoff);
    r.integer("simulation", "absorb_fock_cutoff", c.absorb_fock_cutoff);
    r.integer("simulation", "n_traj", c.n_traj);
    if (auto v = r.text("simulation", "seed")) {
        try {
            std::size_t used = 0;
            c.seed = std::stoull(*v, &used);
            require(used == v->size(), ErrorKind::config, "trailing characters");
        } catch (const std::exception &) {
            fail(ErrorKind::config, "simulation.seed must be a non-negative integer, got '" + *v + "'");
        }
    }
    r.number("simulation", "rtol", c.rtol);
    r.number("simulation", "atol", c.atol);
    if (auto v = r.text("simulation", "coupling_model")) {
        if (*v == "purcell-matched") {
            c.coupling = CouplingModel::purcell_matched;
        } else if (*v == "literal") {
            c.coupling = CouplingModel::literal;
        } else {
            fail(ErrorKind::config, "unknown coupling_model '" + *v + "' (purcell-matched, literal)");
        }
    }
    r.number("simulation", "detuning_kHz", c.detuning, two_pi * 1e3);

    if (auto v = r.text("transfer", "drive")) {
        if (*v == "coherent-drive") {
            c.drive = DriveMode::coherent_drive;
        } else if (*v == "fock-oracle") {
            c.drive = DriveMode::fock_oracle;
        } else {
            fail(ErrorKind::config, "unknown drive '" + *v + "' (coherent-drive, fock-oracle)");
        }
    }
    if (auto tp = r.list("transfer", "t_perp_us", us); !tp.empty()) {
        c.t_perp = tp;
    }
    if (auto v = r.text("transfer", "group_delay_ns"); v && *v != "auto") {
        double g = 0;
        r.number("transfer", "group_delay_ns", g, ns);
        c.group_delay = g;
    }
    if (auto v = r.text("transfer", "field_record")) {
        c.field_record = *v;
    }

    HomodyneSettings &h = c.homodyne;
    r.number("analysis", "gain_V", h.gain);
    r.number("analysis", "noise_sigma_V", h.noise_sigma);
    r.integer("analysis", "n_avg", h.n_avg);
    double lo_phase_deg = h.lo_phase * 180.0 / std::numbers::pi;
    r.number("analysis", "lo_phase_deg", lo_phase_deg);
    h.lo_phase = lo_phase_deg * std::numbers::pi / 180.0;
    double pulse_start = 0, pulse_end = 0;
    r.number("analysis", "pulse_start_ns", pulse_start, ns);
    r.number("analysis", "pulse_end_ns", pulse_end, ns);
    if (pulse_end > pulse_start) {
        h.pulse_window = Window{pulse_start, pulse_end};
    }
    r.number("analysis", "pulse_amplitude_V", h.pulse_amplitude);
    r.number("analysis", "drift_rate_V_per_us", h.drift_rate, 1.0 / us);
    r.number("analysis", "drift_onset_ns", h.drift_onset, ns);
    r.number("analysis", "phase_window_start_ns", c.phase_window.first, ns);
    r.number("analysis", "phase_window_end_ns", c.phase_window.second, ns);
    r.number("analysis", "phase_smooth_ns", c.phase_smooth, ns);
    r.number("analysis", "floor_fraction", c.floor_fraction);
    c.symmetry.floor_fraction = c.floor_fraction;
    if (auto v = r.text("analysis", "split_ns"); v && *v != "peak") {
        double split = 0;
        r.number("analysis", "split_ns", split, ns);
        c.symmetry.split_time = split;
    }
    r.number("analysis", "smooth_ns", c.symmetry.smooth, ns);
    r.number("analysis", "edge_guard_ns", c.symmetry.edge_guard, ns);
    r.number("analysis", "rise_guard_ns", c.symmetry.rise_guard, ns);
    r.number("analysis", "fall_guard_ns", c.symmetry.fall_guard, ns);
    r.number("analysis", "fall_span_ns", c.symmetry.fall_span, ns);

    r.number("calibration", "v1_start_V", c.v1_start);
    r.number("calibration", "v1_stop_V", c.v1_stop);
    r.number("calibration", "v1_step_V", c.v1_step);
    r.number("calibration", "chevron_v1_V", c.chevron_v1);
    r.number("calibration", "chevron_v2_step_V", c.chevron_v2_step);
    r.integer("calibration", "chevron_points", c.chevron_points);
    r.number("calibration", "chevron_duration_ns", c.chevron_duration, ns);
    r.number("calibration", "chevron_dt_ns", c.chevron_dt, ns);
    r.number("calibration", "t1_skip_ns", c.t1_skip, ns);
    r.number("calibration", "t1_dt_ns", c.t1_dt, ns);
    r.number("calibration", "noise_sigma_V", c.calibration_noise_sigma);

    if (auto v = r.text("output", "dir")) {
        c.out_dir = *v;
    }
    r.reject_unknown();
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::string &path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::config, "cannot open config file " + path);
    return parse_config(in, path);
}

inline ExperimentConfig parse_config_string(const std::string &text) {
    std::istringstream in(text);
    return parse_config(in, "<string>");
}

}  // namespace symemit
