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

#include "symemit/quantum_state.hpp"

using namespace symemit;

namespace {

Matrix projector(const StateVector &psi) {
    return psi.amplitudes() * psi.amplitudes().adjoint();
}

}  // namespace

TEST(HilbertSpec, DimensionAndQubitMajorOrder) {
    HilbertSpec spec{3};
    EXPECT_EQ(spec.dim(), 8);
    EXPECT_EQ(spec.index(0, 2), 2);
    EXPECT_EQ(spec.index(1, 0), 4);
    EXPECT_THROW(build_operators(HilbertSpec{0}), Error);
}

TEST(Operators, LadderElements) {
    auto ops1 = build_operators(HilbertSpec{1});
    // One nonzero entry of value 1 per cavity block.
    int nonzero = 0;
    for (Eigen::Index i = 0; i < ops1.a.m.rows(); i++) {
        for (Eigen::Index j = 0; j < ops1.a.m.cols(); j++) {
            if (std::abs(ops1.a.m(i, j)) > 0) {
                nonzero++;
                EXPECT_DOUBLE_EQ(ops1.a.m(i, j).real(), 1.0);
            }
        }
    }
    EXPECT_EQ(nonzero, 2);

    HilbertSpec spec{3};
    auto ops = build_operators(spec);
    EXPECT_NEAR(ops.a.m(spec.index(0, 2), spec.index(0, 3)).real(), 1.7320508075688772, 1e-15);
    EXPECT_NEAR(ops.a.m(spec.index(1, 2), spec.index(1, 3)).real(), 1.7320508075688772, 1e-15);
}

TEST(Operators, QubitLoweringMapsExcitedToGround) {
    HilbertSpec spec{2};
    auto ops = build_operators(spec);
    for (int n = 0; n <= 2; n++) {
        Vector out = ops.sigma_minus.m * StateVector::basis(spec, 1, n).amplitudes();
        EXPECT_NEAR((out - StateVector::basis(spec, 0, n).amplitudes()).norm(), 0.0, 1e-15);
        Vector none = ops.sigma_minus.m * StateVector::basis(spec, 0, n).amplitudes();
        EXPECT_NEAR(none.norm(), 0.0, 1e-15);
    }
}

TEST(Operators, FactorsCommute) {
    auto ops = build_operators(HilbertSpec{4});
    Matrix c = ops.a.m * ops.sigma_minus.m - ops.sigma_minus.m * ops.a.m;
    EXPECT_LT(c.norm(), 1e-12);
    Matrix c2 = ops.a_dag.m * ops.sigma_z.m - ops.sigma_z.m * ops.a_dag.m;
    EXPECT_LT(c2.norm(), 1e-12);
}

TEST(Operators, CanonicalCommutatorExceptTopLevel) {
    HilbertSpec spec{4};
    auto ops = build_operators(spec);
    Matrix c = ops.a.m * ops.a_dag.m - ops.a_dag.m * ops.a.m;
    for (int q = 0; q < 2; q++) {
        for (int n = 0; n <= spec.fock_cutoff; n++) {
            int i = spec.index(q, n);
            double expected = n < spec.fock_cutoff ? 1.0 : -static_cast<double>(spec.fock_cutoff);
            EXPECT_NEAR(c(i, i).real(), expected, 1e-12);
        }
    }
    Matrix off = c;
    off.diagonal().setZero();
    EXPECT_LT(off.norm(), 1e-12);
}

TEST(Expectation, FidelityOperatorValues) {
    HilbertSpec spec{3};
    auto ops = build_operators(spec);
    DensityMatrix g0 = DensityMatrix::pure(StateVector::basis(spec, 0, 0));
    EXPECT_NEAR(expectation(ops.fidelity, g0).real(), 0.5, 1e-15);

    DensityMatrix plus0 = DensityMatrix::pure(StateVector::product(spec, QubitState::plus(), 0));
    EXPECT_NEAR(expectation(ops.fidelity, plus0).real(), 1.0, 1e-14);

    Matrix mixed_q = 0.5 * Matrix::Identity(2, 2);
    DensityMatrix mixed = embed_qubit(DensityMatrix(mixed_q), spec, 0);
    cplx f = expectation(ops.fidelity, mixed);
    EXPECT_NEAR(f.real(), 0.5, 1e-15);
    EXPECT_LT(std::abs(f.imag()), 1e-10);
}

TEST(Expectation, MatchesTraceOfProduct) {
    HilbertSpec spec{2};
    auto ops = build_operators(spec);
    Vector v(spec.dim());
    for (int i = 0; i < spec.dim(); i++) {
        v(i) = cplx(std::sin(1.0 + i), std::cos(2.0 * i));
    }
    v.normalize();
    Matrix rho = v * v.adjoint();
    Matrix h = ops.a_dag.m * ops.a.m + ops.sigma_z.m;
    cplx direct = (rho * h).trace();
    cplx fast = expectation(h, rho);
    EXPECT_NEAR(std::abs(direct - fast), 0.0, 1e-13);
    EXPECT_LT(std::abs(fast.imag()), 1e-10);
    EXPECT_THROW(expectation(Matrix::Identity(3, 3), rho), Error);
}

TEST(PartialTrace, ProductAndEntangledStates) {
    HilbertSpec spec{2};
    auto plus = partial_trace_cavity(DensityMatrix::pure(StateVector::product(spec, QubitState::plus(), 0)));
    EXPECT_NEAR(plus.matrix()(0, 0).real(), 0.5, 1e-15);
    EXPECT_NEAR(plus.matrix()(0, 1).real(), 0.5, 1e-15);

    auto g1 = partial_trace_cavity(DensityMatrix::pure(StateVector::basis(spec, 0, 1)));
    EXPECT_NEAR(g1.matrix()(0, 0).real(), 1.0, 1e-15);
    EXPECT_NEAR(std::abs(g1.matrix()(1, 1)), 0.0, 1e-15);

    // (|g,1> + |e,0>)/sqrt(2): coherence lives between different photon numbers.
    Vector v = Vector::Zero(spec.dim());
    v(spec.index(0, 1)) = 1.0 / std::sqrt(2.0);
    v(spec.index(1, 0)) = 1.0 / std::sqrt(2.0);
    auto q = partial_trace_cavity(DensityMatrix::pure(StateVector(spec, v)));
    EXPECT_NEAR(q.matrix()(0, 0).real(), 0.5, 1e-15);
    EXPECT_NEAR(q.matrix()(1, 1).real(), 0.5, 1e-15);
    EXPECT_NEAR(std::abs(q.matrix()(0, 1)), 0.0, 1e-15);
}

TEST(PartialTrace, InvertsEmbedding) {
    HilbertSpec spec{3};
    for (double theta : {0.3, 1.1, 2.5}) {
        QubitState s = QubitState::bloch(theta, 0.7 * theta);
        Matrix rq = s.vec() * s.vec().adjoint();
        rq = 0.8 * rq + 0.1 * Matrix::Identity(2, 2);
        DensityMatrix emb = embed_qubit(DensityMatrix(rq), spec, 2);
        Matrix back = partial_trace_cavity(emb).matrix();
        EXPECT_LT((back - rq).norm(), 1e-14);
        EXPECT_NEAR(back.trace().real(), 1.0, 1e-10);
    }
}

TEST(DensityMatrix, RejectsInvalidEntries) {
    Matrix nonherm = Matrix::Zero(2, 2);
    nonherm(0, 0) = 1.0;
    nonherm(0, 1) = 0.3;
    EXPECT_FALSE(DensityMatrix::problems(nonherm).empty());
    EXPECT_THROW(DensityMatrix{nonherm}, Error);

    Matrix badtrace = 0.7 * Matrix::Identity(2, 2);
    EXPECT_FALSE(DensityMatrix::problems(badtrace).empty());

    Matrix negative = Matrix::Zero(2, 2);
    negative(0, 0) = 1.2;
    negative(1, 1) = -0.2;
    EXPECT_FALSE(DensityMatrix::problems(negative).empty());

    HilbertSpec spec{2};
    EXPECT_TRUE(DensityMatrix::problems(projector(StateVector::basis(spec, 1, 2))).empty());
}

TEST(StateVector, NormalizationEnforced) {
    HilbertSpec spec{1};
    Vector v = Vector::Zero(spec.dim());
    v(0) = 1.0;
    v(1) = 1e-4;
    EXPECT_THROW(StateVector(spec, v), Error);
    EXPECT_THROW(StateVector(spec, Vector::Zero(3)), Error);
    StateVector p = StateVector::product(spec, QubitState::bloch(1.0, 2.0), 1);
    EXPECT_NEAR(p.amplitudes().squaredNorm(), 1.0, 1e-12);
}
