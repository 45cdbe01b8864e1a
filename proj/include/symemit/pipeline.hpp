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
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "symemit/config.hpp"
#include "symemit/csv.hpp"
#include "symemit/device_model.hpp"
#include "symemit/dynamics.hpp"
#include "symemit/homodyne.hpp"
#include "symemit/pulse_schedule.hpp"

#ifndef SYMEMIT_VERSION
#define SYMEMIT_VERSION "0.0.0"
#endif

// The experiment sequence: synthesize a schedule, emit and analyze a packet,
// transfer it to a second qubit, calibrate the device. Every command writes
// its CSVs and a manifest JSON into the output directory. Nothing time- or
// host-dependent goes into the files, so reruns are byte-identical.

namespace symemit {

using Json = nlohmann::ordered_json;

namespace detail {

/// JSON number, or "inf"/"nan" text for values JSON cannot carry.
inline Json num(double x) {
    if (std::isfinite(x)) {
        return x;
    }
    return format_double(x);
}

inline std::filesystem::path ensure_dir(const std::string &dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    require(!ec, ErrorKind::io, "cannot create output directory " + dir + ": " + ec.message());
    return dir;
}

inline void write_json(const std::filesystem::path &path, const Json &j) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::io, "cannot write " + path.string());
    out << j.dump(2) << "\n";
    require(out.good(), ErrorKind::io, "write failed for " + path.string());
}

inline Json read_json(const std::filesystem::path &path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::io, "cannot read " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::exception &e) {
        fail(ErrorKind::io, "malformed JSON in " + path.string() + ": " + e.what());
    }
}

inline std::string t_perp_label(double t) {
    return std::isfinite(t) ? format_double(std::round(to_ns(t) * 1e6) / 1e6) + "ns" : "inf";
}

}  // namespace detail

inline Json manifest(const std::string &command, const ExperimentConfig &c, const std::vector<std::string> &files,
                     Json results) {
    Json m;
    m["command"] = command;
    m["version"] = SYMEMIT_VERSION;
    m["config"] = c.source.empty() ? "<defaults>" : c.source;
    m["seed"] = c.seed ? Json(*c.seed) : Json(nullptr);
    m["mode"] = mode_name(c.mode);
    m["tolerances"] = {{"rtol", c.rtol},
                       {"atol", c.atol},
                       {"schedule_min_population", min_population},
                       {"contour_tol_hz", 1e3},
                       {"voltage_g_rel_tol", 1e-4}};
    m["files"] = files;
    m["results"] = std::move(results);
    return m;
}

// ---------------------------------------------------------------------------
// synthesize

struct SynthesisProducts {
    Schedule ideal;
    Schedule schedule;  // truncated
    FluxProfile flux;
    std::vector<OperatingPoint> contour;
    std::optional<VoltageSchedule> voltages;
    std::string voltage_error;
};

inline std::vector<double> contour_v1_samples(const ExperimentConfig &c) {
    return linspace_step(c.v1_start, c.v1_stop, c.v1_step);
}

inline SynthesisProducts synthesize(const ExperimentConfig &c) {
    c.validate();
    SynthesisProducts out;
    out.ideal = symmetric_exponential_schedule(c.tau, c.device.kappa, c.grid());
    out.schedule = truncate_schedule(out.ideal, c.t1_max);
    out.flux = flux_from_schedule(out.schedule, 1.0);
    out.contour = constant_frequency_contour(c.device, c.omega_operating, contour_v1_samples(c));
    // A schedule that leaves the contour's coupling range has no voltages.
    // That is reported, not fatal, since the schedule itself is still valid.
    try {
        out.voltages = schedule_to_voltages(out.schedule, out.contour, c.device);
    } catch (const Error &e) {
        if (e.kind() != ErrorKind::infeasible) {
            throw;
        }
        out.voltage_error = e.what();
    }
    return out;
}

inline Json synthesis_results(const SynthesisProducts &p) {
    const Schedule &s = p.schedule;
    Json r;
    r["truncated"] = s.truncated;
    r["t_start_ns"] = s.truncated ? detail::num(to_ns(s.t_start)) : Json(nullptr);
    r["residual_population"] = s.residual_population;
    r["tau_ns"] = to_ns(s.tau);
    r["kappa_MHz"] = to_mhz(s.kappa);
    r["flux_conservation_error"] = p.flux.conservation_error();
    r["voltages_feasible"] = p.voltages.has_value();
    if (!p.voltage_error.empty()) {
        r["voltage_error"] = p.voltage_error;
    }
    r["warnings"] = s.warnings;
    return r;
}

inline Json cmd_synthesize(const ExperimentConfig &c) {
    auto dir = detail::ensure_dir(c.out_dir);
    SynthesisProducts p = synthesize(c);
    std::vector<std::string> files{"schedule.csv", "flux.csv"};
    write_csv_file((dir / "schedule.csv").string(), schedule_table(p.schedule));
    write_csv_file((dir / "flux.csv").string(), flux_table(p.flux));
    if (p.voltages) {
        write_csv_file((dir / "voltages.csv").string(), voltage_table(*p.voltages));
        files.push_back("voltages.csv");
    }
    Json m = manifest("synthesize", c, files, synthesis_results(p));
    detail::write_json(dir / "manifest_synthesize.json", m);
    return m;
}

// ---------------------------------------------------------------------------
// emit

struct EmitProducts {
    SynthesisProducts synthesis;
    EmissionResult emission;
    HomodyneRecord record;
    SymmetryReport symmetry;
    PhaseDriftReport drift;
};

inline EmitOptions emit_options(const ExperimentConfig &c) {
    EmitOptions eo;
    eo.detuning = c.detuning;
    eo.fock_cutoff = c.emit_fock_cutoff;
    eo.coupling = c.coupling;
    eo.ode = c.ode();
    eo.n_traj = c.n_traj;
    eo.seed = c.seed.value_or(0);
    return eo;
}

inline HomodyneSettings homodyne_settings(const ExperimentConfig &c) {
    HomodyneSettings h = c.homodyne;
    h.seed = c.seed.value_or(0);
    return h;
}

/// Emission of |+> along the truncated schedule and its homodyne analysis.
inline EmitProducts run_emit(const ExperimentConfig &c) {
    EmitProducts p;
    p.synthesis = synthesize(c);
    p.emission = emit(p.synthesis.schedule, QubitState::plus(), c.mode, emit_options(c));
    p.record = synthesize_homodyne(p.emission.field, homodyne_settings(c));
    SymmetryOptions so = c.symmetry;
    so.floor_fraction = c.floor_fraction;
    p.symmetry = symmetry_report(p.record, so);
    p.drift = phase_drift(p.record, c.phase_window, c.floor_fraction, c.phase_smooth);
    return p;
}

inline Json fit_json(const FitResult &f) {
    return {{"tau_ns", to_ns(f.time_constant)},
            {"ci95_ns", {to_ns(f.ci95.first), to_ns(f.ci95.second)}},
            {"amplitude", f.amplitude},
            {"offset", f.offset},
            {"rms_residual", f.rms_residual},
            {"samples", f.samples}};
}

inline Json emit_results(const EmitProducts &p) {
    const EmissionResult &e = p.emission;
    Json r;
    r["tau_rise_ns"] = to_ns(p.symmetry.rise.time_constant);
    r["tau_fall_ns"] = to_ns(p.symmetry.fall.time_constant);
    r["rise"] = fit_json(p.symmetry.rise);
    r["fall"] = fit_json(p.symmetry.fall);
    r["mirror_rms"] = p.symmetry.mirror_rms;
    r["split_ns"] = to_ns(p.symmetry.split_time);
    r["emission_window_ns"] = {to_ns(p.symmetry.emission_start), to_ns(p.symmetry.emission_end)};
    r["drift_angle_deg"] = p.drift.drift_angle;
    r["phase_window_ns"] = {to_ns(p.drift.window.first), to_ns(p.drift.window.second)};
    r["photon_number"] = e.field.photon_number;
    r["initial_population"] = e.initial_population;
    r["conservation_error"] = e.conservation_error();
    r["field_kind"] = kind_name(e.field.kind);
    if (e.ensemble) {
        r["n_traj"] = e.ensemble->n_traj;
    }
    r["synthesis"] = synthesis_results(p.synthesis);
    return r;
}

inline CsvTable emission_table(const EmissionResult &e) {
    CsvTable t;
    t.header = {"time_ns", "population", "cavity_population", "flux_per_ns", "emitted"};
    for (std::size_t i = 0; i < e.grid.n; i++) {
        t.rows.push_back({to_ns(e.grid.t(i)), e.population[i], e.cavity_population[i], e.flux[i] * ns, e.emitted[i]});
    }
    return t;
}

inline Json field_metadata(const FieldRecord &f) {
    return {{"kind", kind_name(f.kind)},
            {"photon_number", f.photon_number},
            {"carrier_detuning_kHz", f.carrier_detuning / two_pi / 1e3},
            {"amplitude_unit", "sqrt(photons/ns)"}};
}

inline void write_field(const std::filesystem::path &dir, const FieldRecord &f) {
    write_csv_file((dir / "field.csv").string(), field_table(f));
    detail::write_json(dir / "field.json", field_metadata(f));
}

/// Reads field.csv and, when present, the field.json sidecar next to it.
inline FieldRecord read_field(const std::string &path) {
    require(std::filesystem::exists(path), ErrorKind::io, "field record not found: " + path);
    FieldRecord f = field_from_table(read_csv_file(path));
    std::filesystem::path meta = std::filesystem::path(path).replace_extension(".json");
    if (std::filesystem::exists(meta)) {
        Json j = detail::read_json(meta);
        if (j.contains("kind")) {
            f.kind = j["kind"] == "mean_field" ? FieldKind::mean_field : FieldKind::one_photon;
        }
        if (j.contains("photon_number")) {
            f.photon_number = j["photon_number"].get<double>();
        }
        if (j.contains("carrier_detuning_kHz")) {
            f.carrier_detuning = j["carrier_detuning_kHz"].get<double>() * two_pi * 1e3;
        }
    }
    return f;
}

inline Json cmd_emit(const ExperimentConfig &c, EmitProducts *keep = nullptr) {
    auto dir = detail::ensure_dir(c.out_dir);
    EmitProducts p = run_emit(c);
    write_csv_file((dir / "emission.csv").string(), emission_table(p.emission));
    write_field(dir, p.emission.field);
    write_csv_file((dir / "homodyne.csv").string(), homodyne_table(p.record));
    Json results = emit_results(p);
    detail::write_json(dir / "emit_report.json", results);
    Json m = manifest("emit", c, {"emission.csv", "field.csv", "field.json", "homodyne.csv", "emit_report.json"},
                      results);
    detail::write_json(dir / "manifest_emit.json", m);
    if (keep) {
        *keep = std::move(p);
    }
    return m;
}

// ---------------------------------------------------------------------------
// transfer

struct TransferProducts {
    FieldRecord field;
    Schedule destination;
    std::vector<TransferResult> results;  // descending T_perp
};

inline AbsorbOptions absorb_options(const ExperimentConfig &c) {
    AbsorbOptions ao;
    ao.fock_cutoff = c.absorb_fock_cutoff;
    ao.coupling = c.coupling;
    ao.ode = c.ode();
    ao.solver = c.mode == EmitMode::mc ? Solver::mc : Solver::master;
    ao.n_traj = c.n_traj;
    ao.seed = c.seed.value_or(0);
    return ao;
}

inline Schedule destination_schedule(const ExperimentConfig &c, const Schedule &source) {
    double delay = c.group_delay.value_or(default_group_delay(source.kappa));
    return reverse_schedule(source, transfer_t0(source, delay));
}

/// `field` overrides the configured field_record (used by `all`).
inline TransferProducts run_transfer(const ExperimentConfig &c, const std::optional<FieldRecord> &field = {}) {
    c.validate();
    TransferProducts p;
    Schedule source = truncate_schedule(symmetric_exponential_schedule(c.tau, c.device.kappa, c.grid()), c.t1_max);
    if (field) {
        p.field = *field;
    } else if (c.field_record == "generate") {
        p.field = emit(source, QubitState::plus(), c.mode, emit_options(c)).field;
    } else {
        p.field = read_field(c.field_record);
    }
    p.destination = destination_schedule(c, source);
    std::vector<double> tps = c.t_perp;
    std::sort(tps.begin(), tps.end(), std::greater<>());
    for (double tp : tps) {
        p.results.push_back(absorb(p.field, p.destination, tp, c.drive, absorb_options(c)));
    }
    return p;
}

inline Json transfer_results(const TransferProducts &p) {
    Json r;
    r["drive"] = p.results.empty() ? "" : mode_name(p.results.front().mode);
    r["photon_number"] = p.field.photon_number;
    Json list = Json::array();
    for (const auto &t : p.results) {
        Json e;
        e["t_perp_us"] = std::isfinite(t.t_perp) ? Json(t.t_perp / us) : Json("inf");
        e["max_fidelity"] = t.max_fidelity;
        e["argmax_ns"] = to_ns(t.argmax_time);
        e["initial_fidelity"] = t.fidelity.front();
        e["solver"] = t.solver == Solver::mc ? "mc" : "master";
        if (t.solver == Solver::mc) {
            e["n_traj"] = t.n_traj;
        }
        e["file"] = "transfer_tperp_" + detail::t_perp_label(t.t_perp) + ".csv";
        e["warnings"] = t.warnings;
        list.push_back(e);
    }
    r["max_fidelity_by_t_perp"] = list;
    return r;
}

inline Json cmd_transfer(const ExperimentConfig &c, const std::optional<FieldRecord> &field = {}) {
    auto dir = detail::ensure_dir(c.out_dir);
    TransferProducts p = run_transfer(c, field);
    std::vector<std::string> files;
    for (const auto &t : p.results) {
        std::string name = "transfer_tperp_" + detail::t_perp_label(t.t_perp) + ".csv";
        write_csv_file((dir / name).string(), transfer_table(t));
        files.push_back(name);
    }
    Json results = transfer_results(p);
    detail::write_json(dir / "transfer_summary.json", results);
    files.push_back("transfer_summary.json");
    Json m = manifest("transfer", c, files, results);
    m["field_record"] = field ? "in-run" : c.field_record;
    detail::write_json(dir / "manifest_transfer.json", m);
    return m;
}

// ---------------------------------------------------------------------------
// calibrate

struct CalibrationProducts {
    std::vector<OperatingPoint> contour;
    double contour_v2 = 0;  // contour root at the chevron v1
    ChevronMap chevron;
    std::vector<T1CurvePoint> t1;
};

/// v2 rows centered on the step-grid point nearest the contour root.
inline std::vector<double> chevron_v2_values(double root, double step, int points) {
    double center = step * std::round(root / step);
    std::vector<double> out;
    for (int k = 0; k < points; k++) {
        out.push_back(center + step * (k - 0.5 * (points - 1)));
    }
    return out;
}

inline CalibrationProducts run_calibrate(const ExperimentConfig &c) {
    c.validate();
    CalibrationProducts p;
    p.contour = constant_frequency_contour(c.device, c.omega_operating, contour_v1_samples(c));
    auto root = solve_v2(c.chevron_v1, c.omega_operating, c.device);
    require(root.has_value(), ErrorKind::infeasible,
            "no contour root at chevron v1 = " + format_double(c.chevron_v1) + " V");
    p.contour_v2 = *root;
    ChevronOptions co;
    co.homodyne = c.homodyne;
    co.homodyne.noise_sigma = c.calibration_noise_sigma;
    co.homodyne.pulse_window.reset();
    co.homodyne.drift_rate = 0;
    co.homodyne.seed = c.seed.value_or(0);
    co.coupling = c.coupling;
    co.floor_fraction = c.floor_fraction;
    p.chevron = chevron_scan(c.device, c.chevron_v1, chevron_v2_values(*root, c.chevron_v2_step, c.chevron_points),
                             c.omega_operating, TimeGrid::from_range(0.0, c.chevron_duration, c.chevron_dt), co);
    T1CurveOptions to;
    to.kappa = c.device.kappa;
    to.dt = c.t1_dt;
    to.skip = c.t1_skip;
    to.coupling = c.coupling;
    to.homodyne = co.homodyne;
    p.t1 = t1_curve(p.contour, to);
    return p;
}

inline Json chevron_metadata(const ExperimentConfig &c, const CalibrationProducts &p) {
    const ChevronMap &m = p.chevron;
    Json j;
    j["v1_V"] = c.chevron_v1;
    j["v2_V"] = m.v2;
    j["time_axis_ns"] = {{"start", to_ns(m.grid.t_min())}, {"dt", to_ns(m.grid.dt)}, {"n", m.grid.n}};
    j["lo_GHz"] = to_ghz(c.omega_operating);
    std::vector<double> det, freq, power;
    for (std::size_t r = 0; r < m.v2.size(); r++) {
        det.push_back(m.detuning[r] / two_pi / 1e6);
        freq.push_back(m.fringe_frequency[r] / 1e6);
        power.push_back(m.fringe_power[r] / (two_pi * 1e6) / (two_pi * 1e6));
    }
    j["detuning_MHz"] = det;
    j["fringe_frequency_MHz"] = freq;
    j["fringe_power_MHz2"] = power;
    j["resonant_v2_V"] = m.resonant_v2;
    j["contour_v2_V"] = p.contour_v2;
    j["v2_step_V"] = c.chevron_v2_step;
    j["resonance_within_step"] = std::abs(m.resonant_v2 - p.contour_v2) <= c.chevron_v2_step;
    return j;
}

inline Json calibration_results(const ExperimentConfig &c, const CalibrationProducts &p) {
    Json r;
    double lo = INFINITY, hi = 0;
    for (const auto &op : p.contour) {
        lo = std::min(lo, op.t1_radiative);
        hi = std::max(hi, op.t1_radiative);
    }
    r["contour_points"] = p.contour.size();
    r["t1_model_range_ns"] = {to_ns(lo), to_ns(hi)};
    std::size_t failed = 0;
    for (const auto &pt : p.t1) {
        failed += pt.ok ? 0 : 1;
    }
    r["t1_fit_failures"] = failed;
    r["chevron"] = chevron_metadata(c, p);
    return r;
}

inline Json cmd_calibrate(const ExperimentConfig &c) {
    auto dir = detail::ensure_dir(c.out_dir);
    CalibrationProducts p = run_calibrate(c);
    write_csv_file((dir / "contour.csv").string(), contour_table(p.contour));
    write_csv_file((dir / "chevron.csv").string(), chevron_table(p.chevron));
    detail::write_json(dir / "chevron.json", chevron_metadata(c, p));
    write_csv_file((dir / "t1_curve.csv").string(), t1_curve_table(p.t1));
    Json m = manifest("calibrate", c, {"contour.csv", "chevron.csv", "chevron.json", "t1_curve.csv"},
                      calibration_results(c, p));
    detail::write_json(dir / "manifest_calibrate.json", m);
    return m;
}

// ---------------------------------------------------------------------------
// all

inline Json cmd_all(const ExperimentConfig &c) {
    Json out;
    out["synthesize"] = cmd_synthesize(c)["results"];
    EmitProducts emitted;
    out["emit"] = cmd_emit(c, &emitted)["results"];
    std::optional<FieldRecord> field;
    if (c.field_record == "generate") {
        field = emitted.emission.field;
    }
    out["transfer"] = cmd_transfer(c, field)["results"];
    out["calibrate"] = cmd_calibrate(c)["results"];
    Json m = manifest("all", c,
                      {"manifest_synthesize.json", "manifest_emit.json", "manifest_transfer.json",
                       "manifest_calibrate.json"},
                      out);
    detail::write_json(detail::ensure_dir(c.out_dir) / "manifest_all.json", m);
    return m;
}

}  // namespace symemit
