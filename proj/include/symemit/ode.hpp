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
#include <cmath>
#include <string>

#include "symemit/csv.hpp"
#include "symemit/error.hpp"

namespace symemit {

struct OdeOptions {
    double rtol = 1e-8;
    double atol = 1e-10;
    long max_steps = 10'000'000;
    double min_step = 1e-22;  // seconds
};

/// Adaptive Dormand-Prince 5(4) for complex vector ODEs y' = f(t, y).
/// The preferred step carries over between advance() calls, so callers can
/// step from grid node to grid node without restarting the controller.
template <typename Rhs>
class DormandPrince {
   public:
    DormandPrince(Rhs rhs, OdeOptions opt = {}) : rhs_(std::move(rhs)), opt_(opt) {
    }

    void advance(double t0, double t1, Eigen::VectorXcd &y) {
        if (t1 == t0) {
            return;
        }
        const Eigen::Index n = y.size();
        for (auto *k : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_}) {
            if (k->size() != n) {
                k->resize(n);
            }
        }
        double t = t0;
        double h = h_pref_ > 0 ? h_pref_ : (t1 - t0);
        while (t < t1) {
            bool last = false;
            double step = h;
            if (t + step >= t1) {
                step = t1 - t;
                last = true;
            }
            double err = try_step(t, step, y);
            steps_++;
            if (steps_ > opt_.max_steps) {
                fail(ErrorKind::numerical, "integrator exceeded " + std::to_string(opt_.max_steps) +
                                               " steps at t = " + format_double(t) + " s");
            }
            double factor = err == 0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            if (err <= 1.0) {
                t = last ? t1 : t + step;
                y = ynew_;
                if (!last || step >= h) {
                    h = step * factor;
                }
            } else {
                h = step * std::max(factor, 0.1);
                if (h < opt_.min_step) {
                    fail(ErrorKind::numerical, "integrator step size underflow at t = " + format_double(t) +
                                                   " s (error norm " + format_double(err) + ")");
                }
            }
        }
        h_pref_ = h;
    }

    long steps() const {
        return steps_;
    }

   private:
    double try_step(double t, double h, const Eigen::VectorXcd &y) {
        constexpr double a21 = 1.0 / 5;
        constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
        constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                         a65 = -5103.0 / 18656;
        constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                         b6 = 11.0 / 84;
        constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                         e6 = 22.0 / 525, e7 = -1.0 / 40;
        rhs_(t, y, k1_);
        tmp_ = y + h * a21 * k1_;
        rhs_(t + h / 5, tmp_, k2_);
        tmp_ = y + h * (a31 * k1_ + a32 * k2_);
        rhs_(t + 3 * h / 10, tmp_, k3_);
        tmp_ = y + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
        rhs_(t + 4 * h / 5, tmp_, k4_);
        tmp_ = y + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
        rhs_(t + 8 * h / 9, tmp_, k5_);
        tmp_ = y + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
        rhs_(t + h, tmp_, k6_);
        ynew_ = y + h * (b1 * k1_ + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
        rhs_(t + h, ynew_, k7_);
        tmp_ = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
        double sum = 0;
        for (Eigen::Index i = 0; i < y.size(); i++) {
            double sc = opt_.atol + opt_.rtol * std::max(std::abs(y(i)), std::abs(ynew_(i)));
            double r = std::abs(tmp_(i)) / sc;
            sum += r * r;
        }
        double err = std::sqrt(sum / static_cast<double>(y.size()));
        return std::isfinite(err) ? err : 1e10;
    }

    Rhs rhs_;
    OdeOptions opt_;
    double h_pref_ = 0;
    long steps_ = 0;
    Eigen::VectorXcd k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, ynew_;
};

}  // namespace symemit
