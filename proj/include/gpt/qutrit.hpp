// qutrit.hpp
// The quantum reference model for a three-level system: Gell-Mann operator
// basis, generalized Bloch-vector maps, membership predicates for states
// and effects, and Haar sampling of pure states.
//
// Conventions:
//   rho = (1/3) I + (1/2) sum_a s_a lambda_a,   s = (1, s_1..s_8)
//   Q   = e_0 I + sum_a e_a lambda_a,           e = (e_0, e_1..e_8)
// so that Tr[rho Q] = s . e and the unit effect is u = (1, 0, ..., 0).

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>

#include "gpt/errors.hpp"

namespace gpt {

using Complex = std::complex<double>;
using Matrix3c = Eigen::Matrix3cd;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Vec8 = Eigen::Matrix<double, 8, 1>;

inline double state_norm_bound() { return 2.0 / std::sqrt(3.0); }

// Canonical center of the normalized state space, (1, 0, ..., 0).
inline Vec9 center_state() {
    Vec9 c = Vec9::Zero();
    c[0] = 1.0;
    return c;
}

inline Vec9 unit_effect() { return center_state(); }

// lambda_0 = I, lambda_1..lambda_8 the Gell-Mann matrices.
inline const Matrix3c& gell_mann(int index) {
    static const std::array<Matrix3c, 9> basis = [] {
        const Complex i(0.0, 1.0);
        const double r3 = 1.0 / std::sqrt(3.0);
        std::array<Matrix3c, 9> m;
        for (auto& x : m) x.setZero();
        m[0].setIdentity();
        m[1](0, 1) = 1;  m[1](1, 0) = 1;
        m[2](0, 1) = -i; m[2](1, 0) = i;
        m[3](0, 0) = 1;  m[3](1, 1) = -1;
        m[4](0, 2) = 1;  m[4](2, 0) = 1;
        m[5](0, 2) = -i; m[5](2, 0) = i;
        m[6](1, 2) = 1;  m[6](2, 1) = 1;
        m[7](1, 2) = -i; m[7](2, 1) = i;
        m[8](0, 0) = r3; m[8](1, 1) = r3; m[8](2, 2) = -2.0 * r3;
        return m;
    }();
    if (index < 0 || index > 8) throw std::invalid_argument("gell_mann: index must be in 0..8");
    return basis[index];
}

// Fully symmetric SU(3) structure tensor g_{abc}, indices 1..8, defined by
// {lambda_a, lambda_b} = (4/3) delta_ab I + 2 g_{abc} lambda_c.
// Computed once from the trace formula g_{abc} = (1/4) Tr[{la,lb} lc].
class StructureTensor {
  public:
    StructureTensor() {
        for (int a = 1; a <= 8; ++a)
            for (int b = 1; b <= 8; ++b) {
                const Matrix3c anti = gell_mann(a) * gell_mann(b) + gell_mann(b) * gell_mann(a);
                for (int c = 1; c <= 8; ++c)
                    g_[idx(a, b, c)] = 0.25 * (anti * gell_mann(c)).trace().real();
            }
    }

    double operator()(int a, int b, int c) const { return g_[idx(a, b, c)]; }

    // Cubic form sum_{abc} g_abc x_a x_b x_c over an 8-vector.
    double cubic(const Vec8& x) const {
        double acc = 0.0;
        for (int a = 1; a <= 8; ++a)
            for (int b = 1; b <= 8; ++b)
                for (int c = 1; c <= 8; ++c)
                    acc += g_[idx(a, b, c)] * x[a - 1] * x[b - 1] * x[c - 1];
        return acc;
    }

  private:
    static int idx(int a, int b, int c) { return ((a - 1) * 8 + (b - 1)) * 8 + (c - 1); }
    std::array<double, 512> g_{};
};

inline const StructureTensor& structure_constants() {
    static const StructureTensor g;
    return g;
}

inline Vec9 state_to_bloch(const Matrix3c& rho) {
    if (std::abs(rho.trace().real() - 1.0) > 1e-9 || std::abs(rho.trace().imag()) > 1e-9)
        throw std::domain_error("state_to_bloch: density operator must have unit trace");
    Vec9 s;
    s[0] = 1.0;
    for (int a = 1; a <= 8; ++a) s[a] = (rho * gell_mann(a)).trace().real();
    return s;
}

inline Vec9 effect_to_bloch(const Matrix3c& q) {
    Vec9 e;
    e[0] = q.trace().real() / 3.0;
    for (int a = 1; a <= 8; ++a) e[a] = 0.5 * (q * gell_mann(a)).trace().real();
    return e;
}

inline Matrix3c bloch_to_state(const Vec9& s) {
    if (std::abs(s[0] - 1.0) > 1e-12)
        throw std::domain_error("bloch_to_state: leading component must equal 1");
    Matrix3c rho = gell_mann(0) / 3.0;
    for (int a = 1; a <= 8; ++a) rho += 0.5 * s[a] * gell_mann(a);
    return rho;
}

inline Matrix3c bloch_to_effect(const Vec9& e) {
    Matrix3c q = e[0] * gell_mann(0);
    for (int a = 1; a <= 8; ++a) q += e[a] * gell_mann(a);
    return q;
}

// Closed-form membership test for qutrit state vectors: norm bound plus
// the cubic characteristic-polynomial condition for rho >= 0.
inline bool is_valid_state_vector(const Vec9& s, double tol = 1e-9) {
    const Vec8 bloch = s.tail<8>();
    const double n2 = bloch.squaredNorm();
    if (n2 > 4.0 / 3.0 + tol) return false;
    const double cubic = 2.0 / 9.0 - 0.5 * n2 + 0.5 * structure_constants().cubic(bloch);
    return cubic >= -tol;
}

// Closed-form membership test for qutrit effect vectors (0 <= Q <= I).
inline bool is_valid_effect_vector(const Vec9& e, double tol = 1e-9) {
    const double e0 = e[0];
    if (e0 < -tol || e0 > 1.0 + tol) return false;
    const Vec8 bloch = e.tail<8>();
    const double n2 = bloch.squaredNorm();
    const double bound = std::sqrt(3.0) * std::min(e0, 1.0 - e0);
    if (n2 > bound * bound + tol) return false;
    const double cubic = structure_constants().cubic(bloch);
    if (e0 * e0 * e0 - e0 * n2 + (2.0 / 3.0) * cubic < -tol) return false;
    const double f0 = 1.0 - e0;
    if (f0 * f0 * f0 - f0 * n2 - (2.0 / 3.0) * cubic < -tol) return false;
    return true;
}

// Haar-random 3x3 unitary via QR of a complex Gaussian matrix with the
// R-diagonal phase fix.
inline Matrix3c haar_unitary(std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix3c z;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            const double re = gauss(rng);
            const double im = gauss(rng);
            z(r, c) = Complex(re, im);
        }
    Eigen::HouseholderQR<Matrix3c> qr(z);
    Matrix3c q = qr.householderQ();
    const Matrix3c r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int c = 0; c < 3; ++c) {
        const Complex d = r(c, c);
        const double mag = std::abs(d);
        q.col(c) *= (mag > 0.0) ? d / mag : Complex(1.0, 0.0);
    }
    return q;
}

inline Eigen::Vector3cd sample_haar_ket(std::mt19937_64& rng) {
    return haar_unitary(rng).col(0);
}

// Rank-1 projector onto the first column of a Haar-random unitary.
inline Matrix3c sample_haar_pure_state(std::mt19937_64& rng) {
    const Eigen::Vector3cd psi = sample_haar_ket(rng);
    return psi * psi.adjoint();
}

inline double predict_probability(const Matrix3c& rho, const Matrix3c& q, double tol = 1e-9) {
    const double p = (rho * q).trace().real();
    if (p < -tol || p > 1.0 + tol)
        throw numerical_error("predict_probability: Tr[rho Q] outside [0, 1]");
    return p;
}

// Uniform direction in the Bloch hyperplane: normalized Bloch part of a
// Haar-random pure state, embedded with zero leading component.
inline Vec9 haar_bloch_direction(std::mt19937_64& rng) {
    const Vec9 s = state_to_bloch(sample_haar_pure_state(rng));
    Vec9 d = Vec9::Zero();
    d.tail<8>() = s.tail<8>() / s.tail<8>().norm();
    return d;
}

} // namespace gpt
