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
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "symemit/error.hpp"
#include "symemit/grid.hpp"
#include "symemit/ode.hpp"
#include "symemit/parallel.hpp"
#include "symemit/pulse_schedule.hpp"
#include "symemit/quantum_state.hpp"

// Open-system dynamics of a qubit coupled to a leaky cavity.
//
// Frame: rotating at the dressed emission frequency. Coupling term
// g (a^dag sigma_- + a sigma_+), cavity loss sqrt(kappa) a, output field
// sqrt(kappa) <a> (mean field) or sqrt(kappa) c_cavity (one-photon amplitude).
// An input field b drives the cavity as i sqrt(kappa) (b^* a - b a^dag), the
// same sign that appears as -sqrt(kappa) b in the one-photon amplitude
// equations; with it, absorbing a packet with the mirrored coupling returns
// the source qubit state.

namespace symemit {

// ---------------------------------------------------------------------------
// Couplings

enum class CouplingModel {
    purcell_matched,  // schedule g is Purcell-effective, see below
    literal,          // schedule g enters the Hamiltonian unchanged
};

/// Schedules store the Purcell-effective coupling g, meaning a radiative rate
/// G = 4 g^2 / kappa. Outside the deep bad-cavity limit the Jaynes-Cummings
/// coupling with that slow decay rate is g_jc^2 = (G/4)(kappa - G), which
/// needs G <= kappa / 2.
inline double jaynes_cummings_coupling(double g, double kappa, CouplingModel model) {
    if (model == CouplingModel::literal) {
        return g;
    }
    double gamma = 4.0 * g * g / kappa;
    require(gamma <= 0.5 * kappa * (1 + 1e-12), ErrorKind::infeasible,
            "coupling " + format_double(to_mhz(g)) + " MHz (x 2pi) is too strong for the Purcell regime");
    return std::sqrt(std::max(0.0, 0.25 * gamma * (kappa - gamma)));
}

inline std::vector<double> jaynes_cummings_couplings(const Schedule &s, CouplingModel model) {
    std::vector<double> out(s.g.size());
    for (std::size_t i = 0; i < s.g.size(); i++) {
        out[i] = jaynes_cummings_coupling(s.g[i], s.kappa, model);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Generic master equation and trajectories

using Coefficient = std::function<cplx(double)>;

struct HamiltonianTerm {
    Matrix op;
    Coefficient coeff;
};

/// H(t) = constant + sum_k coeff_k(t) op_k. Callers keep the sum Hermitian.
struct Hamiltonian {
    Matrix constant;
    std::vector<HamiltonianTerm> terms;

    Matrix at(double t) const {
        Matrix h = constant;
        for (const auto &term : terms) {
            h += term.coeff(t) * term.op;
        }
        return h;
    }
};

struct Collapse {
    Matrix op;
    double rate = 0;  // L = sqrt(rate) op
};

struct DensityTrajectory {
    TimeGrid grid;
    std::vector<Matrix> rho;
};

namespace detail {

struct Lindblad {
    std::vector<Matrix> ls;
    Matrix lsum;  // sum L^dag L

    Lindblad(const std::vector<Collapse> &collapses, Eigen::Index dim) {
        lsum = Matrix::Zero(dim, dim);
        for (const auto &c : collapses) {
            require(c.rate >= 0 && std::isfinite(c.rate), ErrorKind::invalid_argument,
                    "collapse rates must be finite and >= 0");
            require(c.op.rows() == dim && c.op.cols() == dim, ErrorKind::invalid_argument,
                    "collapse operator has wrong dimension");
            if (c.rate > 0) {
                ls.push_back(std::sqrt(c.rate) * c.op);
                lsum += ls.back().adjoint() * ls.back();
            }
        }
    }
};

}  // namespace detail

/// Integrates the Lindblad equation node to node and hands each node's state
/// to `observe(i, rho)`. Nodes before `begin` report rho0.
template <typename Observe>
void evolve_master_observe(const Hamiltonian &h, const std::vector<Collapse> &collapses, const Matrix &rho0,
                           const TimeGrid &grid, Observe &&observe, std::size_t begin = 0,
                           const OdeOptions &ode = {}) {
    grid.validate();
    const Eigen::Index d = rho0.rows();
    require(rho0.cols() == d, ErrorKind::invalid_argument, "initial density matrix must be square");
    std::string bad = DensityMatrix::problems(rho0);
    require(bad.empty(), ErrorKind::invalid_argument, "initial state: " + bad);
    detail::Lindblad lind(collapses, d);
    auto rhs = [&](double t, const Vector &y, Vector &dy) {
        Eigen::Map<const Matrix> r(y.data(), d, d);
        Matrix heff = h.at(t) - cplx(0, 0.5) * lind.lsum;
        Matrix hr = heff * r;
        Matrix out = cplx(0, -1) * (hr - hr.adjoint());
        for (const auto &l : lind.ls) {
            out.noalias() += l * r * l.adjoint();
        }
        dy = Eigen::Map<const Vector>(out.data(), d * d);
    };
    DormandPrince<decltype(rhs)> stepper(rhs, ode);
    Vector y = Eigen::Map<const Vector>(rho0.data(), d * d);
    for (std::size_t i = 0; i < grid.n; i++) {
        if (i > begin) {
            stepper.advance(grid.t(i - 1), grid.t(i), y);
        }
        Eigen::Map<const Matrix> r(y.data(), d, d);
        observe(i, Matrix(r));
    }
}

inline DensityTrajectory evolve_master(const Hamiltonian &h, const std::vector<Collapse> &collapses,
                                       const DensityMatrix &rho0, const TimeGrid &grid, const OdeOptions &ode = {},
                                       std::size_t begin = 0) {
    DensityTrajectory out;
    out.grid = grid;
    out.rho.resize(grid.n);
    evolve_master_observe(
        h, collapses, rho0.matrix(), grid, [&](std::size_t i, const Matrix &r) { out.rho[i] = r; }, begin, ode);
    return out;
}

struct Jump {
    double t = 0;
    int channel = 0;
    bool operator==(const Jump &) const = default;
};

struct McOptions {
    OdeOptions ode;
    int workers = 0;  // 0: SYMEMIT_WORKERS or hardware concurrency
    std::optional<Matrix> observable;
    std::size_t begin = 0;
};

struct TrajectoryEnsemble {
    int n_traj = 0;
    std::uint64_t seed = 0;
    TimeGrid grid;
    std::vector<Matrix> mean_rho;
    std::vector<double> mean_observable;  // empty without an observable
    std::vector<double> stderr_observable;
    std::vector<std::vector<Jump>> jumps;
};

/// Independent stream per (seed, trajectory index).
inline std::mt19937_64 trajectory_rng(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x5eedu};
    return std::mt19937_64(seq);
}

/// Uniform in [0, 1) from the top 53 bits, identical on every platform.
inline double uniform01(std::mt19937_64 &rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

namespace detail {

struct TrajectoryRun {
    std::vector<Vector> states;  // normalized, one per grid node
    std::vector<Jump> jumps;
};

inline TrajectoryRun run_trajectory(const Hamiltonian &h, const Lindblad &lind, const Vector &psi0,
                                    const TimeGrid &grid, std::size_t begin, std::mt19937_64 &rng,
                                    const OdeOptions &ode) {
    // -i H(t) - lsum / 2, split into a fixed part and the time-dependent terms.
    const Matrix fixed = cplx(0, -1) * h.constant - 0.5 * lind.lsum;
    std::vector<Matrix> ops;
    for (const auto &term : h.terms) {
        ops.push_back(cplx(0, -1) * term.op);
    }
    Vector tmp(psi0.size());
    auto rhs = [&](double t, const Vector &y, Vector &dy) {
        dy.noalias() = fixed * y;
        for (std::size_t k = 0; k < ops.size(); k++) {
            tmp.noalias() = ops[k] * y;
            dy += h.terms[k].coeff(t) * tmp;
        }
    };
    DormandPrince<decltype(rhs)> stepper(rhs, ode);
    TrajectoryRun run;
    run.states.resize(grid.n);
    Vector psi = psi0;
    double threshold = 1.0 - uniform01(rng);
    for (std::size_t i = 0; i <= std::min(begin, grid.n - 1); i++) {
        run.states[i] = psi0;
    }
    for (std::size_t i = begin; i + 1 < grid.n; i++) {
        double t = grid.t(i);
        const double tend = grid.t(i + 1);
        while (t < tend) {
            Vector y = psi;
            stepper.advance(t, tend, y);
            if (y.squaredNorm() > threshold) {
                psi = y;
                t = tend;
                break;
            }
            // The norm crossed the threshold inside (t, tend]; bisect for it.
            double lo = t;
            double hi = tend;
            for (int it = 0; it < 60 && hi - lo > 1e-9 * grid.dt; it++) {
                double mid = 0.5 * (lo + hi);
                Vector ym = psi;
                stepper.advance(t, mid, ym);
                if (ym.squaredNorm() > threshold) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Vector yj = psi;
            stepper.advance(t, hi, yj);
            double total = 0;
            std::vector<double> weights(lind.ls.size());
            for (std::size_t k = 0; k < lind.ls.size(); k++) {
                weights[k] = (lind.ls[k] * yj).squaredNorm();
                total += weights[k];
            }
            require(total > 0, ErrorKind::numerical, "quantum jump with zero jump probability");
            double u = uniform01(rng) * total;
            std::size_t k = 0;
            while (k + 1 < weights.size() && u >= weights[k]) {
                u -= weights[k];
                k++;
            }
            psi = lind.ls[k] * yj;
            psi /= psi.norm();
            run.jumps.push_back({hi, static_cast<int>(k)});
            threshold = 1.0 - uniform01(rng);
            t = hi;
        }
        run.states[i + 1] = psi / psi.norm();
    }
    return run;
}

}  // namespace detail

/// Quantum-jump unraveling. Trajectories run concurrently in batches and are
/// reduced in index order, so the output depends only on (inputs, seed).
inline TrajectoryEnsemble mc_trajectories(const Hamiltonian &h, const std::vector<Collapse> &collapses,
                                          const StateVector &psi0, const TimeGrid &grid, int n_traj,
                                          std::uint64_t seed, const McOptions &opt = {}) {
    grid.validate();
    require(n_traj >= 1, ErrorKind::invalid_argument, "n_traj must be at least 1");
    const Vector &v0 = psi0.amplitudes();
    const Eigen::Index d = v0.size();
    detail::Lindblad lind(collapses, d);
    TrajectoryEnsemble ens;
    ens.n_traj = n_traj;
    ens.seed = seed;
    ens.grid = grid;
    ens.mean_rho.assign(grid.n, Matrix::Zero(d, d));
    ens.jumps.resize(static_cast<std::size_t>(n_traj));
    std::vector<double> sum(grid.n, 0.0), sum2(grid.n, 0.0);
    const int workers = worker_count(opt.workers);
    const std::size_t batch = static_cast<std::size_t>(std::max(1, workers) * 4);
    std::vector<detail::TrajectoryRun> runs(batch);
    for (std::size_t b0 = 0; b0 < static_cast<std::size_t>(n_traj); b0 += batch) {
        std::size_t nb = std::min(batch, static_cast<std::size_t>(n_traj) - b0);
        parallel_for(nb, workers, [&](std::size_t j) {
            auto rng = trajectory_rng(seed, b0 + j);
            runs[j] = detail::run_trajectory(h, lind, v0, grid, opt.begin, rng, opt.ode);
        });
        for (std::size_t j = 0; j < nb; j++) {
            for (std::size_t i = 0; i < grid.n; i++) {
                const Vector &s = runs[j].states[i];
                ens.mean_rho[i].noalias() += s * s.adjoint();
                if (opt.observable) {
                    double o = (s.adjoint() * (*opt.observable) * s)(0, 0).real();
                    sum[i] += o;
                    sum2[i] += o * o;
                }
            }
            ens.jumps[b0 + j] = std::move(runs[j].jumps);
        }
    }
    const double n = n_traj;
    for (auto &r : ens.mean_rho) {
        r /= n;
    }
    if (opt.observable) {
        ens.mean_observable.resize(grid.n);
        ens.stderr_observable.resize(grid.n);
        for (std::size_t i = 0; i < grid.n; i++) {
            double m = sum[i] / n;
            ens.mean_observable[i] = m;
            double var = n > 1 ? std::max(0.0, (sum2[i] - n * m * m) / (n - 1)) : 0.0;
            ens.stderr_observable[i] = std::sqrt(var / n);
        }
    }
    return ens;
}

inline std::vector<double> fidelity_trace(const DensityTrajectory &traj, double target_phase = 0.0) {
    std::vector<double> f(traj.rho.size());
    for (std::size_t i = 0; i < traj.rho.size(); i++) {
        const Matrix &r = traj.rho[i];
        HilbertSpec spec{static_cast<int>(r.rows() / 2) - 1};
        f[i] = expectation(fidelity_operator(spec, target_phase), r).real();
    }
    return f;
}

// ---------------------------------------------------------------------------
// Emission

enum class FieldKind {
    one_photon,  // sqrt(kappa) c_cavity of the single-excitation amplitude
    mean_field,  // sqrt(kappa) <a>
};

struct FieldRecord {
    TimeGrid grid;
    std::vector<cplx> amplitude;  // sqrt(photons / s)
    FieldKind kind = FieldKind::one_photon;
    double photon_number = 0;      // emitted photons, int Q dt
    double carrier_detuning = 0;   // rad/s, emitter offset from the frame

    /// int |amplitude|^2 dt.
    double energy() const {
        std::vector<double> p(amplitude.size());
        for (std::size_t i = 0; i < amplitude.size(); i++) {
            p[i] = std::norm(amplitude[i]);
        }
        return cumulative_integral(p, grid.dt).back();
    }
};

enum class EmitMode { oracle, master, mc };

struct EmitOptions {
    double detuning = 0;          // emitter detuning from the frame, rad/s
    double qubit_decay_rate = 0;  // non-radiative decay, 1/s
    int fock_cutoff = 3;
    CouplingModel coupling = CouplingModel::purcell_matched;
    OdeOptions ode;
    int n_traj = 1000;
    std::uint64_t seed = 0;
    int workers = 0;
};

struct EmissionResult {
    FieldRecord field;
    TimeGrid grid;
    std::vector<double> flux;               // photons / s
    std::vector<double> population;         // qubit excited population
    std::vector<double> cavity_population;  // <a^dag a>
    std::vector<double> emitted;            // running int Q dt
    Schedule schedule;
    double initial_population = 0;
    std::size_t begin = 0;  // first simulated node
    std::optional<DensityTrajectory> states;
    std::optional<TrajectoryEnsemble> ensemble;

    /// max |P + n_cav + int Q - P0| over the grid.
    double conservation_error() const {
        double worst = 0;
        for (std::size_t i = 0; i < grid.n; i++) {
            worst = std::max(worst, std::abs(population[i] + cavity_population[i] + emitted[i] - initial_population));
        }
        return worst;
    }

    FluxProfile flux_profile() const {
        FluxProfile f;
        f.grid = grid.sub(begin, grid.n);
        f.q.assign(flux.begin() + static_cast<std::ptrdiff_t>(begin), flux.end());
        f.p.assign(population.begin() + static_cast<std::ptrdiff_t>(begin), population.end());
        return f;
    }
};

/// Single-excitation amplitudes (c_e, c_cavity). Exact for initial states in
/// span{|g,0>, |e,0>}; the field is sqrt(kappa) c_cavity.
inline EmissionResult oracle_emit(const Schedule &s, cplx c_e0, const EmitOptions &opt = {}) {
    s.validate();
    require(std::abs(c_e0) <= 1 + 1e-12, ErrorKind::invalid_argument, "|c_e0| must not exceed 1");
    const double kappa = s.kappa;
    const std::vector<double> gjc = jaynes_cummings_couplings(s, opt.coupling);
    const TimeGrid &grid = s.grid;
    const double delta = opt.detuning;
    const double gam = opt.qubit_decay_rate;
    auto rhs = [&](double t, const Vector &y, Vector &dy) {
        double g = interp_clamped(grid, gjc, t);
        dy(0) = cplx(0, -1) * g * y(1) - cplx(0, delta) * y(0) - 0.5 * gam * y(0);
        dy(1) = cplx(0, -1) * g * y(0) - 0.5 * kappa * y(1);
        dy(2) = kappa * std::norm(y(1));
    };
    DormandPrince<decltype(rhs)> stepper(rhs, opt.ode);
    EmissionResult out;
    out.grid = grid;
    out.schedule = s;
    out.begin = s.active_begin;
    out.initial_population = std::norm(c_e0);
    out.field.grid = grid;
    out.field.kind = FieldKind::one_photon;
    out.field.carrier_detuning = delta;
    out.field.amplitude.assign(grid.n, 0.0);
    out.flux.assign(grid.n, 0.0);
    out.population.assign(grid.n, out.initial_population);
    out.cavity_population.assign(grid.n, 0.0);
    out.emitted.assign(grid.n, 0.0);
    Vector y = Vector::Zero(3);
    y(0) = c_e0;
    const double sk = std::sqrt(kappa);
    for (std::size_t i = s.active_begin; i < grid.n; i++) {
        if (i > s.active_begin) {
            stepper.advance(grid.t(i - 1), grid.t(i), y);
        }
        out.field.amplitude[i] = sk * y(1);
        out.cavity_population[i] = std::norm(y(1));
        out.flux[i] = kappa * std::norm(y(1));
        out.population[i] = std::norm(y(0));
        out.emitted[i] = y(2).real();
    }
    out.field.photon_number = out.emitted.back();
    return out;
}

namespace detail {

inline Hamiltonian emission_hamiltonian(const OperatorSet &ops, const TimeGrid &grid,
                                        const std::vector<double> &gjc, double detuning) {
    Hamiltonian h;
    h.constant = detuning * (ops.sigma_plus.m * ops.sigma_minus.m);
    Matrix coupling = ops.a_dag.m * ops.sigma_minus.m + ops.a.m * ops.sigma_plus.m;
    h.terms.push_back({coupling, [grid, gjc](double t) { return cplx(interp_clamped(grid, gjc, t), 0.0); }});
    return h;
}

inline void fill_from_states(EmissionResult &out, const OperatorSet &ops, double kappa,
                             const std::vector<Matrix> &rho) {
    const TimeGrid &grid = out.grid;
    Matrix n_op = ops.a_dag.m * ops.a.m;
    Matrix p_op = ops.sigma_plus.m * ops.sigma_minus.m;
    out.field.amplitude.resize(grid.n);
    out.flux.resize(grid.n);
    out.population.resize(grid.n);
    out.cavity_population.resize(grid.n);
    for (std::size_t i = 0; i < grid.n; i++) {
        out.field.amplitude[i] = std::sqrt(kappa) * expectation(ops.a.m, rho[i]);
        out.cavity_population[i] = expectation(n_op, rho[i]).real();
        out.flux[i] = kappa * out.cavity_population[i];
        out.population[i] = expectation(p_op, rho[i]).real();
    }
    std::vector<double> q(out.flux.begin() + static_cast<std::ptrdiff_t>(out.begin), out.flux.end());
    auto cum = cumulative_integral(q, grid.dt);
    out.emitted.assign(grid.n, 0.0);
    for (std::size_t i = out.begin; i < grid.n; i++) {
        out.emitted[i] = cum[i - out.begin];
    }
    out.field.photon_number = out.emitted.back();
}

}  // namespace detail

inline EmissionResult emit(const Schedule &s, const QubitState &qubit_init, EmitMode mode,
                           const EmitOptions &opt = {}) {
    s.validate();
    qubit_init.validate();
    if (mode == EmitMode::oracle) {
        return oracle_emit(s, qubit_init.e, opt);
    }
    HilbertSpec spec{opt.fock_cutoff};
    spec.validate();
    OperatorSet ops = build_operators(spec);
    const std::vector<double> gjc = jaynes_cummings_couplings(s, opt.coupling);
    Hamiltonian h = detail::emission_hamiltonian(ops, s.grid, gjc, opt.detuning);
    std::vector<Collapse> collapses{{ops.a.m, s.kappa}};
    if (opt.qubit_decay_rate > 0) {
        collapses.push_back({ops.sigma_minus.m, opt.qubit_decay_rate});
    }
    StateVector psi0 = StateVector::product(spec, qubit_init, 0);
    EmissionResult out;
    out.grid = s.grid;
    out.schedule = s;
    out.begin = s.active_begin;
    out.initial_population = std::norm(qubit_init.e);
    out.field.grid = s.grid;
    out.field.kind = FieldKind::mean_field;
    out.field.carrier_detuning = opt.detuning;
    if (mode == EmitMode::master) {
        DensityTrajectory traj = evolve_master(h, collapses, DensityMatrix::pure(psi0), s.grid, opt.ode, s.active_begin);
        detail::fill_from_states(out, ops, s.kappa, traj.rho);
        out.states = std::move(traj);
    } else {
        McOptions mo;
        mo.ode = opt.ode;
        mo.workers = opt.workers;
        mo.begin = s.active_begin;
        mo.observable = ops.sigma_plus.m * ops.sigma_minus.m;
        TrajectoryEnsemble ens = mc_trajectories(h, collapses, psi0, s.grid, opt.n_traj, opt.seed, mo);
        detail::fill_from_states(out, ops, s.kappa, ens.mean_rho);
        out.ensemble = std::move(ens);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Absorption

enum class DriveMode { coherent_drive, fock_oracle };
enum class Solver { master, mc };

struct AbsorbOptions {
    int fock_cutoff = 5;
    CouplingModel coupling = CouplingModel::purcell_matched;
    OdeOptions ode;
    Solver solver = Solver::master;  // coherent-drive only
    int n_traj = 1000;
    std::uint64_t seed = 0;
    int workers = 0;
    double target_phase = 0;  // fidelity target (|g> + e^{i phase}|e>)/sqrt(2)
};

struct TransferResult {
    TimeGrid grid;
    std::vector<double> fidelity;
    std::vector<double> stderr_fidelity;  // zero unless trajectories were used
    std::vector<Eigen::Matrix2cd> qubit;   // destination qubit state per node
    double max_fidelity = 0;
    double argmax_time = 0;
    double t_perp = std::numeric_limits<double>::infinity();
    DriveMode mode = DriveMode::coherent_drive;
    Solver solver = Solver::master;
    int n_traj = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;
};

namespace detail {

/// Field resampled onto a new step by linear interpolation of the amplitude.
inline FieldRecord resample(const FieldRecord &f, double dt) {
    FieldRecord out = f;
    out.grid = TimeGrid::from_range(f.grid.t_min(), f.grid.t_max(), dt);
    out.amplitude.resize(out.grid.n);
    for (std::size_t i = 0; i < out.grid.n; i++) {
        out.amplitude[i] = interp_zero(f.grid, f.amplitude, out.grid.t(i));
    }
    return out;
}

inline void finish(TransferResult &r) {
    auto it = std::max_element(r.fidelity.begin(), r.fidelity.end());
    r.max_fidelity = *it;
    r.argmax_time = r.grid.t(static_cast<std::size_t>(it - r.fidelity.begin()));
}

}  // namespace detail

/// Drives a destination starting in |g,0> with the recorded field while its
/// coupling follows s_rev. The drive is scaled so its mean photon number is
/// the record's photon_number.
inline TransferResult absorb(const FieldRecord &field_in, const Schedule &s_rev, double t_perp, DriveMode mode,
                             const AbsorbOptions &opt = {}) {
    s_rev.validate();
    field_in.grid.validate();
    require(field_in.amplitude.size() == field_in.grid.n, ErrorKind::invalid_argument,
            "field record does not match its grid");
    require(t_perp > 0, ErrorKind::invalid_argument, "T_perp must be positive (use inf for none)");
    TransferResult res;
    res.t_perp = t_perp;
    res.mode = mode;
    res.solver = mode == DriveMode::coherent_drive ? opt.solver : Solver::master;
    FieldRecord field = field_in;
    const TimeGrid &sg = s_rev.grid;
    if (std::abs(field.grid.dt - sg.dt) > 1e-9 * sg.dt) {
        field = detail::resample(field_in, sg.dt);
        res.warnings.push_back("field record resampled from dt = " + format_double(to_ns(field_in.grid.dt)) +
                               " ns to " + format_double(to_ns(sg.dt)) + " ns");
    }
    field.grid.dt = sg.dt;
    const TimeGrid &fg = field.grid;
    std::int64_t outside = std::max<std::int64_t>(0, sg.first - fg.first) + std::max<std::int64_t>(0, fg.last() - sg.last());
    double frac = fg.n > 1 ? static_cast<double>(outside) / static_cast<double>(fg.n - 1) : 0.0;
    require(frac <= 0.1, ErrorKind::invalid_argument,
            "field record and schedule grids overlap poorly (" + format_double(100 * frac) + "% of the field outside)");
    if (outside > 0) {
        res.warnings.push_back("field extends beyond the schedule grid; coupling held at its edge values");
    }
    const std::int64_t first = std::min(fg.first, sg.first);
    const std::int64_t last = std::max(fg.last(), sg.last());
    res.grid = TimeGrid{sg.dt, first, static_cast<std::size_t>(last - first + 1)};
    const TimeGrid grid = res.grid;

    const double kappa = s_rev.kappa;
    const std::vector<double> gjc = jaynes_cummings_couplings(s_rev, opt.coupling);
    const double energy = field.energy();
    const double nbar = field.photon_number;
    require(nbar >= 0 && nbar <= 1 + 1e-6, ErrorKind::invalid_argument, "field photon number must lie in [0, 1]");
    const double scale = energy > 0 ? std::sqrt(nbar / energy) : 0.0;
    std::vector<cplx> drive(field.amplitude.size());
    for (std::size_t i = 0; i < drive.size(); i++) {
        drive[i] = scale * field.amplitude[i];
    }
    const double gam = std::isinf(t_perp) ? 0.0 : 1.0 / t_perp;
    const cplx target = std::polar(1.0, opt.target_phase);
    res.fidelity.resize(grid.n);
    res.stderr_fidelity.assign(grid.n, 0.0);
    res.qubit.resize(grid.n);

    if (mode == DriveMode::fock_oracle) {
        const double alpha = std::sqrt(std::max(0.0, 1.0 - nbar));
        const double sk = std::sqrt(kappa);
        auto rhs = [&](double t, const Vector &y, Vector &dy) {
            double g = interp_clamped(sg, gjc, t);
            cplx b = interp_zero(fg, drive, t);
            dy(0) = cplx(0, -1) * g * y(1) - 0.5 * gam * y(0);
            dy(1) = cplx(0, -1) * g * y(0) - 0.5 * kappa * y(1) - sk * b;
        };
        DormandPrince<decltype(rhs)> stepper(rhs, opt.ode);
        Vector y = Vector::Zero(2);
        for (std::size_t i = 0; i < grid.n; i++) {
            if (i > 0) {
                stepper.advance(grid.t(i - 1), grid.t(i), y);
            }
            cplx ce = y(0), cc = y(1);
            // In-flight, reflected or decayed parts leave the destination in |g,0>.
            double w = std::max(0.0, nbar - std::norm(ce) - std::norm(cc));
            res.fidelity[i] = 0.5 * (std::norm(alpha + std::conj(target) * ce) + std::norm(cc) + w);
            Eigen::Matrix2cd q;
            q(0, 0) = alpha * alpha + std::norm(cc) + w;
            q(0, 1) = alpha * std::conj(ce);
            q(1, 0) = alpha * ce;
            q(1, 1) = std::norm(ce);
            res.qubit[i] = q;
        }
        detail::finish(res);
        return res;
    }

    HilbertSpec spec{opt.fock_cutoff};
    spec.validate();
    OperatorSet ops = build_operators(spec);
    Hamiltonian h;
    h.constant = Matrix::Zero(spec.dim(), spec.dim());
    Matrix coupling = ops.a_dag.m * ops.sigma_minus.m + ops.a.m * ops.sigma_plus.m;
    h.terms.push_back({coupling, [&sg, &gjc](double t) { return cplx(interp_clamped(sg, gjc, t), 0.0); }});
    const double sk = std::sqrt(kappa);
    h.terms.push_back({ops.a.m, [&fg, &drive, sk](double t) {
                           return cplx(0, sk) * std::conj(interp_zero(fg, drive, t));
                       }});
    h.terms.push_back({ops.a_dag.m, [&fg, &drive, sk](double t) {
                           return cplx(0, -sk) * interp_zero(fg, drive, t);
                       }});
    std::vector<Collapse> collapses{{ops.a.m, kappa}};
    if (gam > 0) {
        collapses.push_back({ops.sigma_minus.m, gam});
    }
    Matrix fop = fidelity_operator(spec, opt.target_phase);
    StateVector psi0 = StateVector::basis(spec, 0, 0);
    if (res.solver == Solver::master) {
        evolve_master_observe(
            h, collapses, DensityMatrix::pure(psi0).matrix(), grid,
            [&](std::size_t i, const Matrix &r) {
                res.fidelity[i] = expectation(fop, r).real();
                res.qubit[i] = partial_trace_cavity_raw(r);
            },
            0, opt.ode);
    } else {
        McOptions mo;
        mo.ode = opt.ode;
        mo.workers = opt.workers;
        mo.observable = fop;
        TrajectoryEnsemble ens = mc_trajectories(h, collapses, psi0, grid, opt.n_traj, opt.seed, mo);
        for (std::size_t i = 0; i < grid.n; i++) {
            res.fidelity[i] = ens.mean_observable[i];
            res.stderr_fidelity[i] = ens.stderr_observable[i];
            res.qubit[i] = partial_trace_cavity_raw(ens.mean_rho[i]);
        }
        res.n_traj = opt.n_traj;
        res.seed = opt.seed;
    }
    detail::finish(res);
    return res;
}

// ---------------------------------------------------------------------------
// Serialization

inline CsvTable field_table(const FieldRecord &f) {
    CsvTable t;
    t.header = {"time_ns", "re_amp", "im_amp"};
    const double to_ns_units = std::sqrt(ns);  // sqrt(photons / ns)
    for (std::size_t i = 0; i < f.grid.n; i++) {
        t.rows.push_back({to_ns(f.grid.t(i)), f.amplitude[i].real() * to_ns_units, f.amplitude[i].imag() * to_ns_units});
    }
    return t;
}

inline FieldRecord field_from_table(const CsvTable &t) {
    FieldRecord f;
    f.grid = grid_from_times_ns(t.values("time_ns"));
    auto re = t.values("re_amp");
    auto im = t.values("im_amp");
    const double from_ns_units = 1.0 / std::sqrt(ns);
    for (std::size_t i = 0; i < re.size(); i++) {
        f.amplitude.emplace_back(re[i] * from_ns_units, im[i] * from_ns_units);
    }
    f.kind = FieldKind::one_photon;
    f.photon_number = f.energy();
    return f;
}

inline CsvTable transfer_table(const TransferResult &r) {
    CsvTable t;
    t.header = {"time_ns", "fidelity", "stderr"};
    for (std::size_t i = 0; i < r.grid.n; i++) {
        t.rows.push_back({to_ns(r.grid.t(i)), r.fidelity[i], r.stderr_fidelity[i]});
    }
    return t;
}

inline const char *mode_name(DriveMode m) {
    return m == DriveMode::coherent_drive ? "coherent-drive" : "fock-oracle";
}
inline const char *mode_name(EmitMode m) {
    switch (m) {
        case EmitMode::oracle:
            return "oracle";
        case EmitMode::master:
            return "master";
        case EmitMode::mc:
            return "mc";
    }
    return "?";
}
inline const char *kind_name(FieldKind k) {
    return k == FieldKind::one_photon ? "one_photon" : "mean_field";
}

}  // namespace symemit
