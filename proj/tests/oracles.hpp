// Copyright 2026 The qlgf Authors
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

// Brute-force reference models used by the tests and the acceptance binary.
// Nothing here shares code with the propagators under test.

#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

namespace oracle {

using Complex = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline Mat kron(const Mat &a, const Mat &b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline Mat annihilation(int n_max) {
    Mat a = Mat::Zero(n_max + 1, n_max + 1);
    for (int n = 1; n <= n_max; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

inline Mat identity(int d) { return Mat::Identity(d, d); }

// Spin basis (down, up). sigma_minus = |down><up|.
inline Mat sigma_minus() {
    Mat s = Mat::Zero(2, 2);
    s(0, 1) = 1.0;
    return s;
}

inline Mat sigma_z() {
    Mat s = Mat::Zero(2, 2);
    s(0, 0) = -1.0;
    s(1, 1) = 1.0;
    return s;
}

inline Mat propagator(const Mat &h, double t) { return (Complex(0.0, -t) * h).exp(); }

// kind: 0 carrier, 1 red sideband, 2 blue sideband. Rotating frame of the
// drive, H = -(delta/2) sigma_z + (g/2)(e^{-i phi} S + h.c.).
inline Mat pulse_hamiltonian(int n_max, int kind, double rabi, double eta, double delta, double phase) {
    const Mat a = annihilation(n_max);
    const Mat id = identity(n_max + 1);
    Mat motion = id;
    double g = rabi;
    if (kind == 1) {
        motion = a.adjoint();
        g = eta * rabi;
    } else if (kind == 2) {
        motion = a;
        g = eta * rabi;
    }
    const Mat s = std::exp(Complex(0.0, -phase)) * kron(sigma_minus(), motion);
    return -0.5 * delta * kron(sigma_z(), id) + 0.5 * g * (s + s.adjoint());
}

// Spin (x) mode a (x) mode b, H = rate (a b^+ + a^+ b) + delta b^+ b.
inline Mat exchange_hamiltonian(int n_max, double rate, double delta) {
    const Mat a1 = annihilation(n_max);
    const Mat id = identity(n_max + 1);
    const Mat a = kron(a1, id);
    const Mat b = kron(id, a1);
    const Mat h = rate * (a * b.adjoint() + a.adjoint() * b) + delta * b.adjoint() * b;
    return kron(identity(2), h);
}

inline double fidelity(const Vec &x, const Vec &y) { return std::norm(x.dot(y)) / (x.squaredNorm() * y.squaredNorm()); }

// Half the normal-mode splitting of two ions on a common axis, each in its
// own harmonic well, coupled by the linearized Coulomb force. The bare wells
// are retuned so that the dressed, uncoupled frequencies both equal omega.
inline double classical_half_splitting(double qa, double qb, double ma, double mb, double d, double omega) {
    const double k = 1.0 / (4.0 * M_PI * 8.8541878128e-12);
    const double kappa = 2.0 * k * qa * qb / (d * d * d);  // curvature of the Coulomb term in (z_b - z_a)
    Eigen::Matrix2d stiffness;
    stiffness << ma * omega * omega, -kappa, -kappa, mb * omega * omega;
    Eigen::Matrix2d msqrt_inv = Eigen::Vector2d(1.0 / std::sqrt(ma), 1.0 / std::sqrt(mb)).asDiagonal();
    const Eigen::Matrix2d dyn = msqrt_inv * stiffness * msqrt_inv;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(dyn);
    return 0.5 * (std::sqrt(es.eigenvalues()(1)) - std::sqrt(es.eigenvalues()(0)));
}

// Rate-equation model of sideband cooling with perfect pulses and resets.
// p is the spin-down Fock distribution; each round moves a fraction
// sin^2(pi sqrt(n / level) / 2) of p(n) to p(n - 1).
inline std::vector<double> cooling_round(const std::vector<double> &p) {
    std::size_t level = 1;
    double best = -1.0;
    for (std::size_t n = 1; n < p.size(); ++n)
        if (static_cast<double>(n) * p[n] > best) {
            best = static_cast<double>(n) * p[n];
            level = n;
        }
    std::vector<double> q = p;
    for (std::size_t n = 1; n < p.size(); ++n) {
        const double s = std::sin(0.5 * M_PI * std::sqrt(static_cast<double>(n) / static_cast<double>(level)));
        q[n] -= s * s * p[n];
        q[n - 1] += s * s * p[n];
    }
    return q;
}

}  // namespace oracle
