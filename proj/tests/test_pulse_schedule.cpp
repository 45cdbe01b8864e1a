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
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "symemit/pulse_schedule.hpp"

using namespace symemit;

namespace {

const double kKappa = from_mhz(20.0);
const double kTau = 50 * ns;

TimeGrid default_grid() {
    return TimeGrid::from_range(-600 * ns, 600 * ns, 0.1 * ns);
}

double worst_relative(const std::vector<double> &a, const std::vector<double> &b, std::size_t from, std::size_t to) {
    double worst = 0;
    for (std::size_t i = from; i < to; i++) {
        worst = std::max(worst, std::abs(a[i] - b[i]) / std::abs(b[i]));
    }
    return worst;
}

}  // namespace

TEST(SymmetricFlux, SampleValues) {
    auto f = symmetric_exponential_flux(kTau, default_grid());
    auto i0 = f.grid.nearest_index(0.0);
    auto i50 = f.grid.nearest_index(50 * ns);
    EXPECT_NEAR(f.q[i0] * ns, 0.01, 1e-15);
    EXPECT_NEAR(f.q[i50] * ns, 0.01 * std::exp(-1.0), 1e-12);
    EXPECT_NEAR(f.q[i50], oracle::flux(kTau, 50 * ns), 1e-9 * f.q[i50]);
}

TEST(SymmetricFlux, IntegralMatchesAnalyticTails) {
    auto f = symmetric_exponential_flux(kTau, TimeGrid::from_range(-500 * ns, 500 * ns, 0.1 * ns));
    EXPECT_NEAR(f.emitted(), 1.0 - std::exp(-10.0), 1e-12);
    EXPECT_NEAR(f.p.front(), 1.0 - 0.5 * std::exp(-10.0), 1e-15);
    EXPECT_LT(f.conservation_error(), 1e-12);
    // Independent check by composite Simpson quadrature.
    double h = 0.1 * ns, simpson = 0;
    std::size_t n = f.grid.n - 1;  // even
    for (std::size_t i = 0; i <= n; i++) {
        double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
        simpson += w * oracle::flux(kTau, f.grid.t(i));
    }
    EXPECT_NEAR(simpson * h / 3, f.emitted(), 1e-7);
    EXPECT_THROW(symmetric_exponential_flux(0.0, default_grid()), Error);
    EXPECT_THROW(symmetric_exponential_flux(kTau, TimeGrid::from_range(0, 100 * ns, 0.1 * ns)), Error);
}

TEST(CouplingFromFlux, MatchesClosedFormProperty) {
    std::mt19937_64 rng(2026);
    std::uniform_real_distribution<double> tau_ns(10.0, 200.0), kappa_mhz(5.0, 60.0);
    for (int trial = 0; trial < 25; trial++) {
        double tau = tau_ns(rng) * ns, kappa = from_mhz(kappa_mhz(rng));
        auto grid = TimeGrid::from_range(-8 * tau, 8 * tau, tau / 500);
        Schedule s = symmetric_exponential_schedule(tau, kappa, grid);
        for (std::size_t i = 1; i + 1 < s.grid.n; i++) {
            double t = s.grid.t(i);
            double ref = oracle::coupling(tau, kappa, t);
            ASSERT_NEAR(s.g[i], ref, 1e-6 * ref) << "trial " << trial << " t = " << t;
            ASSERT_NEAR(symmetric_exponential_coupling(tau, kappa, t), ref, 1e-9 * ref);
        }
    }
}

TEST(CouplingFromFlux, PlateauValueAndContinuity) {
    Schedule s = symmetric_exponential_schedule(kTau, kKappa, default_grid());
    double g2 = kKappa / (4 * kTau);
    EXPECT_NEAR(g2 * ns * ns, 6.283e-4, 1e-6);
    EXPECT_NEAR(to_mhz(std::sqrt(g2)), 4.0, 0.05);
    auto i0 = s.grid.nearest_index(0.0);
    EXPECT_NEAR(s.g[i0] * s.g[i0], g2, 1e-9 * g2);
    EXPECT_NEAR(s.g[i0 + 1] * s.g[i0 + 1], g2, 1e-9 * g2);
    EXPECT_NEAR(symmetric_exponential_coupling(kTau, kKappa, -1e-15), symmetric_exponential_coupling(kTau, kKappa, 1e-15),
                1e-6 * std::sqrt(g2));
}

TEST(CouplingFromFlux, UniformFlux) {
    const double T = 100 * ns;
    FluxProfile f;
    f.grid = TimeGrid::from_range(0, 99 * ns, 0.1 * ns);
    for (std::size_t i = 0; i < f.grid.n; i++) {
        f.q.push_back(1.0 / T);
        f.p.push_back(1.0 - f.grid.t(i) / T);
    }
    Schedule s = coupling_from_flux(f, kKappa);
    double g2_0 = kKappa / (4 * T);
    EXPECT_NEAR(s.g[0] * s.g[0], g2_0, 1e-12 * g2_0);
    auto i50 = s.grid.nearest_index(50 * ns);
    EXPECT_NEAR(s.g[i50] * s.g[i50], 2 * g2_0, 1e-9 * g2_0);
}

TEST(CouplingFromFlux, Errors) {
    auto f = symmetric_exponential_flux(kTau, default_grid());
    auto neg = f;
    neg.q[10] = -1.0;
    try {
        coupling_from_flux(neg, kKappa);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::invalid_argument);
    }
    auto depleted = f;
    depleted.p[20] = 0.0;
    try {
        coupling_from_flux(depleted, kKappa);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::infeasible);
        EXPECT_NE(std::string(e.what()).find("depleted"), std::string::npos);
    }
    // Falling below the population floor truncates the end with a warning.
    auto low = f;
    for (std::size_t i = f.grid.n - 50; i < f.grid.n; i++) {
        low.p[i] = 1e-12;
    }
    Schedule s = coupling_from_flux(low, kKappa);
    EXPECT_EQ(s.grid.n, f.grid.n - 50);
    EXPECT_FALSE(s.warnings.empty());
}

TEST(Schedule, AsymmetricControlAndMonotonicity) {
    Schedule s = symmetric_exponential_schedule(kTau, kKappa, default_grid());
    auto i0 = s.grid.nearest_index(0.0);
    for (std::size_t i = 1; i < i0; i++) {
        ASSERT_GT(s.g[i], s.g[i - 1]);
    }
    for (std::size_t i = i0 + 1; i < s.grid.n; i++) {
        ASSERT_NEAR(s.g[i], s.g[i0 + 1], 1e-9 * s.g[i0 + 1]);
    }
    for (double t : {10 * ns, 50 * ns, 200 * ns}) {
        double gm = s.g[s.grid.nearest_index(-t)], gp = s.g[s.grid.nearest_index(t)];
        double x = 0.5 * std::exp(-t / kTau);
        EXPECT_LT(gm, gp);
        EXPECT_NEAR(gm * gm / (gp * gp), x / (1 - x), 1e-6);
    }
}

TEST(Truncation, StartTimeAndResidualPopulation) {
    Schedule s = truncate_schedule(symmetric_exponential_schedule(kTau, kKappa, default_grid()), 600 * ns);
    ASSERT_TRUE(s.truncated);
    EXPECT_NEAR(s.t_start, oracle::truncation_time(kTau, 600 * ns), 1e-6 * ns);
    EXPECT_NEAR(s.t_start, 50 * ns * std::log(2.0 / 13.0), 1e-6 * ns);
    EXPECT_NEAR(s.residual_population, 12.0 / 13.0, 1e-6);
    EXPECT_NEAR(s.residual_population, oracle::residual_population(kTau, 600 * ns), 1e-6);
    double g_min = std::sqrt(kKappa / (4 * 600 * ns));
    for (std::size_t i = 0; i < s.active_begin; i++) {
        ASSERT_DOUBLE_EQ(s.g[i], g_min);
    }
    EXPECT_GE(s.grid.t(s.active_begin), s.t_start);
    EXPECT_LT(s.grid.t(s.active_begin) - s.t_start, s.grid.dt);
}

TEST(Truncation, LimitsAndErrors) {
    Schedule ideal = symmetric_exponential_schedule(kTau, kKappa, default_grid());
    Schedule loose = truncate_schedule(ideal, std::numeric_limits<double>::infinity());
    EXPECT_FALSE(loose.truncated);
    EXPECT_TRUE(loose.truncation_skipped);
    EXPECT_EQ(loose.g, ideal.g);
    // Larger t1_max moves the start earlier and the residual toward 1.
    Schedule far = truncate_schedule(ideal, 5000 * ns);
    EXPECT_LT(far.t_start, -93.5 * ns);
    EXPECT_GT(far.residual_population, 0.99);
    try {
        truncate_schedule(ideal, 10 * ns);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::infeasible);
    }
    EXPECT_THROW(truncate_schedule(ideal, -1.0), Error);
}

TEST(T1Profile, DirectFormula) {
    auto grid = TimeGrid::from_range(0, 10 * ns, 1 * ns);
    auto t1 = t1_profile(constant_schedule(grid, from_mhz(4.0), kKappa)).t1;
    EXPECT_NEAR(t1[0], kKappa / (4 * std::pow(from_mhz(4.0), 2)), 1e-18);
    EXPECT_NEAR(to_ns(t1[0]), 50.0, 0.5);
    auto t1b = t1_profile(constant_schedule(grid, from_mhz(1.1547005), kKappa)).t1;
    EXPECT_NEAR(t1b[0], kKappa / (4 * std::pow(from_mhz(1.1547005), 2)), 1e-18);
    EXPECT_NEAR(to_ns(t1b[0]), 600.0, 5.0);
    auto t1c = t1_profile(constant_schedule(grid, from_mhz(8.0), kKappa)).t1;
    EXPECT_NEAR(t1c[0], t1[0] / 4, 1e-20);
    auto inf = t1_profile(constant_schedule(grid, 0.0, kKappa));
    EXPECT_TRUE(std::isinf(inf.t1[0]));
    EXPECT_EQ(inf.infinite_samples.size(), grid.n);
}

TEST(FluxFromSchedule, ConstantCoupling) {
    auto grid = TimeGrid::from_range(0, 200 * ns, 0.1 * ns);
    double g = std::sqrt(kKappa / (4 * 50 * ns));
    auto f = flux_from_schedule(constant_schedule(grid, g, kKappa), 1.0);
    EXPECT_NEAR(f.p[grid.nearest_index(100 * ns)], std::exp(-2.0), 1e-12);
    EXPECT_LT(f.conservation_error(), 1e-9);
    auto zero = flux_from_schedule(constant_schedule(grid, 0.0, kKappa), 0.7);
    for (std::size_t i = 0; i < grid.n; i++) {
        ASSERT_EQ(zero.q[i], 0.0);
        ASSERT_EQ(zero.p[i], 0.7);
    }
}

TEST(FluxFromSchedule, RoundTripOnTruncatedSchedule) {
    Schedule s = truncate_schedule(symmetric_exponential_schedule(kTau, kKappa, default_grid()), 600 * ns);
    FluxProfile f = flux_from_schedule(s, s.residual_population);
    EXPECT_LT(f.conservation_error(), 1e-9);
    f.validate();
    // Flux follows the target shape on the untruncated region.
    for (std::size_t i = 0; i < f.grid.n; i++) {
        double ref = oracle::flux(kTau, f.grid.t(i));
        ASSERT_NEAR(f.q[i], ref, 1e-6 * ref) << "t = " << f.grid.t(i);
    }
    // And inverting it again returns the schedule.
    Schedule back = coupling_from_flux(f, kKappa);
    std::vector<double> g_active(s.g.begin() + static_cast<std::ptrdiff_t>(s.active_begin),
                                 s.g.begin() + static_cast<std::ptrdiff_t>(s.active_end));
    EXPECT_LT(worst_relative(back.g, g_active, 1, back.grid.n - 1), 1e-6);
}

TEST(ReverseSchedule, ReflectionIsExact) {
    Schedule s = truncate_schedule(symmetric_exponential_schedule(kTau, kKappa, default_grid()), 600 * ns);
    double t0 = transfer_t0(s, default_group_delay(kKappa));
    Schedule r = reverse_schedule(s, t0);
    EXPECT_TRUE(r.reversed);
    for (double t : {-200 * ns, -10 * ns, 0.0, 90 * ns, 300 * ns}) {
        std::size_t i = r.grid.nearest_index(t);
        double tr = r.grid.t(i);
        std::size_t j = s.grid.nearest_index(r.t0_offset() - tr);
        ASSERT_EQ(r.g[i], s.g[j]);
    }
    Schedule rr = reverse_schedule(r, t0);
    EXPECT_EQ(rr.grid, s.grid);
    EXPECT_EQ(rr.g, s.g);
    EXPECT_FALSE(rr.reversed);
    EXPECT_NEAR(default_group_delay(kKappa), 4.0 / kKappa, 0.0);
}

TEST(ScheduleCsv, RoundTripIsBitIdentical) {
    Schedule s = truncate_schedule(symmetric_exponential_schedule(kTau, kKappa, default_grid()), 600 * ns);
    std::string text = to_csv_string(schedule_table(s));
    std::istringstream in(text);
    CsvTable parsed = read_csv(in);
    EXPECT_EQ(to_csv_string(parsed), text);
    Schedule back = schedule_from_table(parsed, kKappa);
    EXPECT_EQ(back.grid, s.grid);
    // MHz <-> rad/s scaling may move the last bit, nothing more.
    ASSERT_EQ(back.g.size(), s.g.size());
    for (std::size_t i = 0; i < s.g.size(); i++) {
        ASSERT_NEAR(back.g[i], s.g[i], 4e-16 * s.g[i]);
    }

    FluxProfile f = flux_from_schedule(s, s.residual_population);
    std::string ft = to_csv_string(flux_table(f));
    std::istringstream fin(ft);
    CsvTable t = read_csv(fin);
    EXPECT_EQ(t.header, (std::vector<std::string>{"time_ns", "Q_per_ns", "P"}));
    EXPECT_EQ(to_csv_string(t), ft);
}
