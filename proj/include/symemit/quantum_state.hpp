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
#include <complex>
#include <string>
#include <unsupported/Eigen/KroneckerProduct>

#include "symemit/error.hpp"

// Qubit (g, e) tensor a truncated cavity (0..N).
//
// Basis ordering is qubit-major everywhere: index = q * (N + 1) + n with
// q = 0 for |g> and q = 1 for |e>, i.e. |g,0>, |g,1>, ..., |g,N>, |e,0>, ...

namespace symemit {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

struct Tolerances {
    double norm = 1e-10;
    double hermitian = 1e-10;
    double trace = 1e-8;
    double positivity = 1e-8;
};

struct HilbertSpec {
    int fock_cutoff = 3;

    static constexpr int qubit_levels = 2;

    int cavity_dim() const {
        return fock_cutoff + 1;
    }
    int dim() const {
        return qubit_levels * (fock_cutoff + 1);
    }
    int index(int q, int n) const {
        return q * (fock_cutoff + 1) + n;
    }
    void validate() const {
        require(fock_cutoff >= 1, ErrorKind::invalid_argument,
                "fock cutoff must be at least 1, got " + std::to_string(fock_cutoff));
    }
    bool operator==(const HilbertSpec &) const = default;
};

/// Qubit pure state c_g|g> + c_e|e>.
struct QubitState {
    cplx g{1.0, 0.0};
    cplx e{0.0, 0.0};

    static QubitState ground() {
        return {1.0, 0.0};
    }
    static QubitState excited() {
        return {0.0, 1.0};
    }
    static QubitState plus() {
        double r = 1.0 / std::sqrt(2.0);
        return {r, r};
    }
    /// cos(theta/2)|g> + e^{i phi} sin(theta/2)|e>.
    static QubitState bloch(double theta, double phi) {
        return {std::cos(theta / 2), std::polar(std::sin(theta / 2), phi)};
    }
    Eigen::Vector2cd vec() const {
        return Eigen::Vector2cd(g, e);
    }
    void validate() const {
        double n2 = std::norm(g) + std::norm(e);
        require(std::abs(n2 - 1.0) < 1e-10, ErrorKind::invalid_argument, "qubit state is not normalized");
    }
};

class StateVector {
   public:
    StateVector(const HilbertSpec &spec, Vector amplitudes, const Tolerances &tol = {})
        : spec_(spec), amp_(std::move(amplitudes)) {
        spec_.validate();
        require(amp_.size() == spec_.dim(), ErrorKind::invalid_argument, "state vector has wrong dimension");
        require(std::abs(amp_.squaredNorm() - 1.0) < tol.norm, ErrorKind::invalid_argument,
                "state vector is not normalized");
    }

    static StateVector basis(const HilbertSpec &spec, int q, int n) {
        Vector v = Vector::Zero(spec.dim());
        v(spec.index(q, n)) = 1.0;
        return StateVector(spec, v);
    }

    /// qubit ⊗ |n>.
    static StateVector product(const HilbertSpec &spec, const QubitState &qubit, int n = 0) {
        qubit.validate();
        Vector v = Vector::Zero(spec.dim());
        v(spec.index(0, n)) = qubit.g;
        v(spec.index(1, n)) = qubit.e;
        return StateVector(spec, v);
    }

    const HilbertSpec &spec() const {
        return spec_;
    }
    const Vector &amplitudes() const {
        return amp_;
    }

   private:
    HilbertSpec spec_;
    Vector amp_;
};

class DensityMatrix {
   public:
    DensityMatrix(Matrix entries, const Tolerances &tol = {}) : rho_(std::move(entries)) {
        check(tol);
    }

    static DensityMatrix pure(const StateVector &psi) {
        const Vector &v = psi.amplitudes();
        return DensityMatrix(v * v.adjoint());
    }

    const Matrix &matrix() const {
        return rho_;
    }
    int dim() const {
        return static_cast<int>(rho_.rows());
    }

    /// Hermiticity, unit trace and positivity within tolerance.
    static std::string problems(const Matrix &rho, const Tolerances &tol = {}) {
        if (rho.rows() != rho.cols() || rho.rows() == 0) {
            return "density matrix must be square and nonempty";
        }
        double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
        if (herm > tol.hermitian) {
            return "density matrix is not Hermitian (deviation " + std::to_string(herm) + ")";
        }
        cplx tr = rho.trace();
        if (std::abs(tr - 1.0) > tol.trace) {
            return "density matrix trace deviates from 1 by " + std::to_string(std::abs(tr - 1.0));
        }
        Matrix h = 0.5 * (rho + rho.adjoint());
        Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
        double lo = es.eigenvalues().minCoeff();
        if (lo < -tol.positivity) {
            return "density matrix has negative eigenvalue " + std::to_string(lo);
        }
        return {};
    }

   private:
    void check(const Tolerances &tol) const {
        std::string p = problems(rho_, tol);
        require(p.empty(), ErrorKind::numerical, p);
    }

    Matrix rho_;
};

struct OperatorMatrix {
    Matrix m;
    std::string label;
};

struct OperatorSet {
    HilbertSpec spec;
    OperatorMatrix a;
    OperatorMatrix a_dag;
    OperatorMatrix sigma_minus;
    OperatorMatrix sigma_plus;
    OperatorMatrix sigma_z;
    OperatorMatrix id_cav;  // identity on the cavity factor, (N+1) x (N+1)
    OperatorMatrix id_q;    // identity on the qubit factor, 2 x 2
    OperatorMatrix fidelity;
};

inline Matrix kron(const Matrix &qubit_op, const Matrix &cavity_op) {
    return Eigen::kroneckerProduct(qubit_op, cavity_op).eval();
}

inline Matrix ladder(int fock_cutoff) {
    Matrix a = Matrix::Zero(fock_cutoff + 1, fock_cutoff + 1);
    for (int n = 1; n <= fock_cutoff; n++) {
        a(n - 1, n) = std::sqrt(static_cast<double>(n));
    }
    return a;
}

inline Matrix qubit_lowering() {
    Matrix s = Matrix::Zero(2, 2);
    s(0, 1) = 1.0;  // |g><e|
    return s;
}

/// Projector onto (|g> + e^{i phi}|e>)/sqrt(2), tensored with the cavity identity.
inline Matrix fidelity_operator(const HilbertSpec &spec, double phase = 0.0) {
    Eigen::Vector2cd target(1.0 / std::sqrt(2.0), std::polar(1.0 / std::sqrt(2.0), phase));
    Matrix proj = target * target.adjoint();
    return kron(proj, Matrix::Identity(spec.cavity_dim(), spec.cavity_dim()));
}

inline OperatorSet build_operators(const HilbertSpec &spec) {
    spec.validate();
    const int nc = spec.cavity_dim();
    Matrix ic = Matrix::Identity(nc, nc);
    Matrix iq = Matrix::Identity(2, 2);
    Matrix a = kron(iq, ladder(spec.fock_cutoff));
    Matrix sm = kron(qubit_lowering(), ic);
    Matrix sz_q = Matrix::Zero(2, 2);
    sz_q(0, 0) = -1.0;
    sz_q(1, 1) = 1.0;
    OperatorSet ops;
    ops.spec = spec;
    ops.a = {a, "annihilation"};
    ops.a_dag = {a.adjoint(), "creation"};
    ops.sigma_minus = {sm, "qubit lowering"};
    ops.sigma_plus = {sm.adjoint(), "qubit raising"};
    ops.sigma_z = {kron(sz_q, ic), "qubit sigma_z"};
    ops.id_cav = {ic, "identity"};
    ops.id_q = {iq, "identity"};
    ops.fidelity = {fidelity_operator(spec), "projector"};
    return ops;
}

inline cplx expectation(const Matrix &op, const Matrix &rho) {
    require(op.rows() == rho.rows() && op.cols() == rho.cols(), ErrorKind::invalid_argument,
            "operator and density matrix dimensions differ");
    // Tr(rho op) without forming the product.
    return (rho.transpose().array() * op.array()).sum();
}

inline cplx expectation(const OperatorMatrix &op, const DensityMatrix &rho) {
    return expectation(op.m, rho.matrix());
}

inline Eigen::Matrix2cd partial_trace_cavity_raw(const Matrix &rho) {
    require(rho.rows() == rho.cols() && rho.rows() % 2 == 0 && rho.rows() >= 4, ErrorKind::invalid_argument,
            "partial trace needs a qubit-cavity density matrix");
    const Eigen::Index nc = rho.rows() / 2;
    Eigen::Matrix2cd out;
    for (int p = 0; p < 2; p++) {
        for (int q = 0; q < 2; q++) {
            out(p, q) = rho.block(p * nc, q * nc, nc, nc).trace();
        }
    }
    return out;
}

inline DensityMatrix partial_trace_cavity(const DensityMatrix &rho) {
    return DensityMatrix(Matrix(partial_trace_cavity_raw(rho.matrix())));
}

/// rho_q ⊗ |n><n|.
inline DensityMatrix embed_qubit(const DensityMatrix &rho_q, const HilbertSpec &spec, int n = 0) {
    require(rho_q.dim() == 2, ErrorKind::invalid_argument, "embed_qubit needs a 2x2 qubit state");
    Matrix cav = Matrix::Zero(spec.cavity_dim(), spec.cavity_dim());
    cav(n, n) = 1.0;
    return DensityMatrix(kron(rho_q.matrix(), cav));
}

}  // namespace symemit
