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

#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "symemit/dynamics.hpp"
#include "symemit/homodyne.hpp"

using namespace symemit;

namespace {

const double kKappa = from_mhz(20.0);
const double kTau = 50 * ns;

Schedule source_schedule(double dt = 0.5 * ns, double t1_max = 600 * ns) {
    return truncate_schedule(
        symmetric_exponential_schedule(kTau, kKappa, TimeGrid::from_range(-600 * ns, 600 * ns, dt)), t1_max);
}

Schedule destination(const Schedule &s) {
    return reverse_schedule(s, transfer_t0(s, default_group_delay(kKappa)));
}

struct Rabi {
    HilbertSpec spec{1};
    OperatorSet ops = build_operators(spec);
    Hamiltonian h;
    explicit Rabi(double g) {
        h.constant = g * (ops.a_dag.m * ops.sigma_minus.m + ops.a.m * ops.sigma_plus.m);
    }
};

}  // namespace

TEST(DormandPrince, DampedOscillatorMatchesClosedForm) {
    const cplx lambda(-1.0, 2.0);
    auto rhs = [&](double, const Vector &y, Vector &dy) { dy = lambda * y; };
    DormandPrince<decltype(rhs)> stepper(rhs, OdeOptions{1e-10, 1e-12});
    Vector y(1);
    y(0) = 1.0;
    stepper.advance(0.0, 1.0, y);
    EXPECT_NEAR(std::abs(y(0) - std::exp(lambda)), 0.0, 1e-9);
    stepper.advance(1.0, 3.0, y);
    EXPECT_NEAR(std::abs(y(0) - std::exp(3.0 * lambda)), 0.0, 1e-9);
}

TEST(EvolveMaster, FreeDecay) {
    HilbertSpec spec{1};
    auto ops = build_operators(spec);
    const double gamma = 1.0 / (100 * ns);
    Hamiltonian h{Matrix::Zero(spec.dim(), spec.dim()), {}};
    auto grid = TimeGrid::from_range(0, 100 * ns, 1 * ns);
    auto traj = evolve_master(h, {{ops.sigma_minus.m, gamma}}, DensityMatrix::pure(StateVector::basis(spec, 1, 0)),
                              grid);
    Matrix p_op = ops.sigma_plus.m * ops.sigma_minus.m;
    EXPECT_NEAR(expectation(p_op, traj.rho.back()).real(), 0.367879441171, 1e-6);
    for (const auto &r : traj.rho) {
        ASSERT_TRUE(DensityMatrix::problems(r).empty());
    }
}

TEST(EvolveMaster, VacuumRabi) {
    const double g = from_mhz(2.0);
    Rabi r(g);
    auto grid = TimeGrid::from_range(0, 500 * ns, 1 * ns);
    auto traj = evolve_master(r.h, {}, DensityMatrix::pure(StateVector::basis(r.spec, 1, 0)), grid);
    Matrix p_op = r.ops.sigma_plus.m * r.ops.sigma_minus.m;
    for (std::size_t i = 0; i < grid.n; i += 10) {
        double c = std::cos(g * grid.t(i));
        ASSERT_NEAR(expectation(p_op, traj.rho[i]).real(), c * c, 1e-6) << "t = " << grid.t(i);
    }
}

TEST(McTrajectories, SingleTrajectoryWithoutCollapseIsSchrodinger) {
    Rabi r(from_mhz(3.0));
    auto grid = TimeGrid::from_range(0, 200 * ns, 1 * ns);
    auto psi0 = StateVector::basis(r.spec, 1, 0);
    auto ens = mc_trajectories(r.h, {}, psi0, grid, 1, 7);
    auto traj = evolve_master(r.h, {}, DensityMatrix::pure(psi0), grid);
    for (std::size_t i = 0; i < grid.n; i++) {
        ASSERT_LT((ens.mean_rho[i] - traj.rho[i]).norm(), 1e-6);
    }
    EXPECT_TRUE(ens.jumps[0].empty());
}

TEST(McTrajectories, FreeDecayWithinThreeSigma) {
    HilbertSpec spec{1};
    auto ops = build_operators(spec);
    const double gamma = 1.0 / (100 * ns);
    Hamiltonian h{Matrix::Zero(spec.dim(), spec.dim()), {}};
    auto grid = TimeGrid::from_range(0, 200 * ns, 1 * ns);
    McOptions mo;
    mo.observable = ops.sigma_plus.m * ops.sigma_minus.m;
    auto ens = mc_trajectories(h, {{ops.sigma_minus.m, gamma}}, StateVector::basis(spec, 1, 0), grid, 400, 11, mo);
    for (double t : {25 * ns, 50 * ns, 100 * ns, 200 * ns}) {
        std::size_t i = grid.nearest_index(t);
        double exact = std::exp(-gamma * grid.t(i));
        EXPECT_LE(std::abs(ens.mean_observable[i] - exact), 3 * ens.stderr_observable[i]) << "t = " << t;
    }
    // Every trajectory jumps at most once and the jump ends the excitation.
    for (const auto &j : ens.jumps) {
        ASSERT_LE(j.size(), 1u);
    }
}

TEST(McTrajectories, DeterministicAcrossWorkerCounts) {
    HilbertSpec spec{2};
    auto ops = build_operators(spec);
    Hamiltonian h;
    h.constant = from_mhz(4.0) * (ops.a_dag.m * ops.sigma_minus.m + ops.a.m * ops.sigma_plus.m);
    std::vector<Collapse> c{{ops.a.m, kKappa}};
    auto grid = TimeGrid::from_range(0, 100 * ns, 1 * ns);
    auto psi0 = StateVector::product(spec, QubitState::plus(), 0);
    McOptions one, three;
    one.workers = 1;
    three.workers = 3;
    auto a = mc_trajectories(h, c, psi0, grid, 30, 5, one);
    auto b = mc_trajectories(h, c, psi0, grid, 30, 5, three);
    EXPECT_EQ(a.jumps, b.jumps);
    for (std::size_t i = 0; i < grid.n; i++) {
        ASSERT_TRUE(a.mean_rho[i] == b.mean_rho[i]);
    }
    auto other = mc_trajectories(h, c, psi0, grid, 30, 6, one);
    EXPECT_NE(a.jumps, other.jumps);
}

TEST(McTrajectories, StandardErrorScalesAsInverseRoot) {
    HilbertSpec spec{1};
    auto ops = build_operators(spec);
    Hamiltonian h{Matrix::Zero(spec.dim(), spec.dim()), {}};
    auto grid = TimeGrid::from_range(0, 70 * ns, 1 * ns);
    McOptions mo;
    mo.observable = ops.sigma_plus.m * ops.sigma_minus.m;
    std::vector<Collapse> c{{ops.sigma_minus.m, 1.0 / (100 * ns)}};
    auto small = mc_trajectories(h, c, StateVector::basis(spec, 1, 0), grid, 100, 3, mo);
    auto large = mc_trajectories(h, c, StateVector::basis(spec, 1, 0), grid, 400, 3, mo);
    double ratio = large.stderr_observable.back() / small.stderr_observable.back();
    EXPECT_NEAR(ratio, 0.5, 0.1);
}

TEST(OracleEmit, MatchesDampedJaynesCummings) {
    for (double g_mhz : {1.15, 2.0, 4.0}) {
        double g = from_mhz(g_mhz);
        auto grid = TimeGrid::from_range(0, 800 * ns, 0.5 * ns);
        auto em = oracle_emit(constant_schedule(grid, g, kKappa), 1.0);
        double gjc = oracle::matched_jc_coupling(g, kKappa);
        for (std::size_t i = 0; i < grid.n; i += 20) {
            double ref = std::norm(oracle::jc_excited_amplitude(gjc, kKappa, grid.t(i)));
            ASSERT_NEAR(em.population[i], ref, 1e-7) << g_mhz << " MHz, t = " << grid.t(i);
        }
    }
}

TEST(OracleEmit, ConstantCouplingDecaysAtPurcellRate) {
    for (double g_mhz : {1.15, 2.0, 4.0}) {
        double g = from_mhz(g_mhz);
        double t1 = kKappa / (4 * g * g);
        double skip = 160 * ns;
        auto grid = TimeGrid::from_range(0, skip + 5 * t1, 0.5 * ns);
        auto em = oracle_emit(constant_schedule(grid, g, kKappa), 1.0);
        FitResult fit = fit_window(grid, em.flux, {skip, grid.t_max()});
        EXPECT_NEAR(fit.time_constant / t1, 1.0, 0.02) << g_mhz << " MHz";
    }
}

TEST(Emit, OracleAgreesWithMasterEquation) {
    Schedule s = source_schedule();
    auto oracle_plus = emit(s, QubitState::plus(), EmitMode::oracle);
    auto oracle_e = emit(s, QubitState::excited(), EmitMode::oracle);
    auto master = emit(s, QubitState::plus(), EmitMode::master);
    double peak = 0;
    for (const auto &a : oracle_e.field.amplitude) {
        peak = std::max(peak, std::abs(a));
    }
    for (std::size_t i = 0; i < s.grid.n; i++) {
        ASSERT_NEAR(master.population[i], oracle_plus.population[i], 1e-6);
        ASSERT_NEAR(master.flux[i] * ns, oracle_plus.flux[i] * ns, 1e-6);
        // The mean field of |+> is half the single-photon amplitude of |e>.
        ASSERT_LT(std::abs(master.field.amplitude[i] - 0.5 * oracle_e.field.amplitude[i]), 1e-5 * peak);
    }
    EXPECT_LT(oracle_e.conservation_error(), 1e-6);
    EXPECT_LT(master.conservation_error(), 1e-4);
    // Starting fully excited at t_start, the whole excitation leaves.
    EXPECT_NEAR(oracle_e.field.photon_number, 1.0, 1e-4);
    ASSERT_TRUE(master.states.has_value());
    for (std::size_t i = 0; i < s.grid.n; i += 50) {
        ASSERT_TRUE(DensityMatrix::problems(master.states->rho[i]).empty()) << i;
    }
}

TEST(Emit, GroundStateAndZeroCouplingEmitNothing) {
    Schedule s = source_schedule(1 * ns);
    for (EmitMode m : {EmitMode::oracle, EmitMode::master}) {
        auto em = emit(s, QubitState::ground(), m);
        for (const auto &a : em.field.amplitude) {
            ASSERT_EQ(std::abs(a), 0.0);
        }
    }
    auto dark = emit(constant_schedule(TimeGrid::from_range(0, 200 * ns, 1 * ns), 0.0, kKappa),
                     QubitState::excited(), EmitMode::master);
    for (const auto &a : dark.field.amplitude) {
        ASSERT_EQ(std::abs(a), 0.0);
    }
    EXPECT_NEAR(dark.population.back(), 1.0, 1e-12);
}

TEST(Absorb, ZeroFieldLeavesDestinationInGround) {
    Schedule s = source_schedule(1 * ns);
    Schedule d = destination(s);
    FieldRecord f;
    f.grid = s.grid;
    f.amplitude.assign(s.grid.n, 0.0);
    f.photon_number = 0;
    auto r = absorb(f, d, INFINITY, DriveMode::coherent_drive);
    for (double v : r.fidelity) {
        ASSERT_NEAR(v, 0.5, 1e-12);
    }
}

TEST(Absorb, FockOracleIdealTransfer) {
    Schedule s = source_schedule(0.5 * ns, 10 * us);
    Schedule d = destination(s);
    auto em = emit(s, QubitState::plus(), EmitMode::oracle);
    auto ideal = absorb(em.field, d, INFINITY, DriveMode::fock_oracle);
    EXPECT_NEAR(ideal.fidelity.front(), 0.5, 1e-9);
    EXPECT_GE(ideal.max_fidelity, 0.99);
    auto mid = absorb(em.field, d, 5 * us, DriveMode::fock_oracle);
    auto low = absorb(em.field, d, 1 * us, DriveMode::fock_oracle);
    EXPECT_GT(ideal.max_fidelity, mid.max_fidelity);
    EXPECT_GT(mid.max_fidelity, low.max_fidelity);
    for (const auto &q : ideal.qubit) {
        ASSERT_NEAR(q.trace().real(), 1.0, 1e-6);
    }
}

TEST(Absorb, PhaseCovariance) {
    Schedule s = source_schedule(1 * ns);
    Schedule d = destination(s);
    const double phi = 0.9;
    auto f0 = oracle_emit(s, 1.0 / std::sqrt(2.0)).field;
    auto fphi = oracle_emit(s, std::polar(1.0 / std::sqrt(2.0), phi)).field;
    AbsorbOptions rotated;
    rotated.target_phase = phi;
    auto a = absorb(f0, d, INFINITY, DriveMode::fock_oracle);
    auto b = absorb(fphi, d, INFINITY, DriveMode::fock_oracle, rotated);
    EXPECT_NEAR(a.max_fidelity, b.max_fidelity, 1e-9);
}

TEST(Absorb, CoherentDriveBelowFockOracle) {
    Schedule s = source_schedule(1 * ns);
    Schedule d = destination(s);
    auto em = emit(s, QubitState::plus(), EmitMode::master);
    auto coh = absorb(em.field, d, INFINITY, DriveMode::coherent_drive);
    auto fock = absorb(emit(s, QubitState::plus(), EmitMode::oracle).field, d, INFINITY, DriveMode::fock_oracle);
    EXPECT_NEAR(coh.fidelity.front(), 0.5, 1e-9);
    EXPECT_GT(coh.max_fidelity, 0.9);
    EXPECT_LT(coh.max_fidelity, fock.max_fidelity);
}

TEST(Absorb, GridChecks) {
    Schedule s = source_schedule(1 * ns);
    Schedule d = destination(s);
    auto field = oracle_emit(s, 1.0 / std::sqrt(2.0)).field;

    FieldRecord shifted = field;
    shifted.grid.first += static_cast<std::int64_t>(shifted.grid.n / 2);
    try {
        absorb(shifted, d, INFINITY, DriveMode::fock_oracle);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::invalid_argument);
    }

    auto fine = oracle_emit(source_schedule(0.5 * ns), 1.0 / std::sqrt(2.0)).field;
    auto r = absorb(fine, d, INFINITY, DriveMode::fock_oracle);
    ASSERT_FALSE(r.warnings.empty());
    EXPECT_NE(r.warnings.front().find("resampled"), std::string::npos);
    EXPECT_NEAR(r.max_fidelity, absorb(field, d, INFINITY, DriveMode::fock_oracle).max_fidelity, 1e-3);

    EXPECT_THROW(absorb(field, d, 0.0, DriveMode::fock_oracle), Error);
}

TEST(FidelityTrace, ReferenceStates) {
    HilbertSpec spec{2};
    DensityTrajectory t;
    t.grid = TimeGrid{1 * ns, 0, 3};
    t.rho = {DensityMatrix::pure(StateVector::basis(spec, 0, 0)).matrix(),
             DensityMatrix::pure(StateVector::product(spec, QubitState::plus(), 0)).matrix(),
             DensityMatrix::pure(StateVector::product(spec, QubitState::bloch(std::numbers::pi / 2, std::numbers::pi), 0))
                 .matrix()};
    auto f = fidelity_trace(t);
    EXPECT_NEAR(f[0], 0.5, 1e-12);
    EXPECT_NEAR(f[1], 1.0, 1e-12);
    EXPECT_NEAR(f[2], 0.0, 1e-12);
    EXPECT_NEAR(fidelity_trace(t, std::numbers::pi)[2], 1.0, 1e-12);
}
