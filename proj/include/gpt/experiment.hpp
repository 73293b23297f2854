// experiment.hpp
// Experiment designs (Haar and fiducial) and the Poissonian three-detector
// count simulator, producing frequency matrices with per-entry uncertainty
// and a validity mask. Column 0 of every frequency matrix is the unit
// effect: all ones, uncertainty 0, added in by hand.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "gpt/errors.hpp"
#include "gpt/qutrit.hpp"
#include "gpt/rng.hpp"

namespace gpt {

using BoolMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct Design {
    std::vector<Matrix3c> preparations;   // density operators rho_i
    std::vector<Matrix3c> measurements;   // outcome-0 effects Q_j
    BoolMask mask;                        // m x (n+1); column 0 = unit effect
    bool includes_unit_column = true;

    int m() const { return static_cast<int>(preparations.size()); }
    int n() const { return static_cast<int>(measurements.size()); }
};

struct CountTable {
    // m x n heralded coincidence counts per detector (no unit column).
    Eigen::MatrixXd counts0, counts1, counts2;
    double exposure = 0.0; // seconds per configuration
    double rate = 0.0;     // expected total counts/s
};

struct FrequencyMatrix {
    Eigen::MatrixXd f;     // m x (n+1), entries in [0, 1]
    Eigen::MatrixXd sigma; // m x (n+1); +inf sentinel on masked-out cells
    BoolMask mask;         // m x (n+1)

    int rows() const { return static_cast<int>(f.rows()); }
    int cols() const { return static_cast<int>(f.cols()); }
};

struct SimOptions {
    double rate = 2000.0;   // counts/s
    double exposure = 2.0;  // s
    double epsilon = 0.01;  // depolarizing level applied to preparations
};

// The 15 distinct normalized eigenvectors of the eight Gell-Mann matrices.
// Degenerate eigenspaces are resolved onto the computational basis, which
// is the unique eigenbasis choice that keeps the 24-vector list closed
// under deduplication: {|0>,|1>,|2>} plus (|i> +- |j>)/sqrt2 and
// (|i> +- i|j>)/sqrt2 for the three mode pairs.
inline std::vector<Eigen::Vector3cd> fiducial_kets() {
    const Complex im(0.0, 1.0);
    const double r2 = 1.0 / std::sqrt(2.0);
    std::vector<Eigen::Vector3cd> kets;
    auto basis = [](int i) {
        Eigen::Vector3cd v = Eigen::Vector3cd::Zero();
        v[i] = 1.0;
        return v;
    };
    for (int i = 0; i < 3; ++i) kets.push_back(basis(i));
    const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
    for (const auto& p : pairs) {
        kets.push_back(r2 * (basis(p[0]) + basis(p[1])));
        kets.push_back(r2 * (basis(p[0]) - basis(p[1])));
        kets.push_back(r2 * (basis(p[0]) + im * basis(p[1])));
        kets.push_back(r2 * (basis(p[0]) - im * basis(p[1])));
    }
    return kets; // 15 vectors
}

// m Haar preparations; the first n of them reused as projective effects
// (each measurement responds to its matched state with unit probability).
inline Design build_haar_design(int m, int n, std::uint64_t seed) {
    if (m < 1 || n < 1) throw std::invalid_argument("build_haar_design: m, n must be >= 1");
    if (n > m) throw std::invalid_argument("build_haar_design: n > m (measurements reuse sampled states)");
    Design d;
    d.preparations.reserve(m);
    for (int i = 0; i < m; ++i) {
        auto rng = substream(seed, 0xA11, i);
        d.preparations.push_back(sample_haar_pure_state(rng));
    }
    d.measurements.assign(d.preparations.begin(), d.preparations.begin() + n);
    d.mask = BoolMask::Constant(m, n + 1, true);
    return d;
}

// 15 fiducial states/effects followed by n_random Haar ones. Probed cells
// are exactly those pairings that involve at least one fiducial setting;
// the bottom-right n_random x n_random block is unfilled.
inline Design build_fiducial_design(int n_random, std::uint64_t seed) {
    if (n_random < 0) throw std::invalid_argument("build_fiducial_design: n_random must be >= 0");
    Design d;
    const auto fid = fiducial_kets();
    const int nf = static_cast<int>(fid.size());
    for (const auto& psi : fid) d.preparations.push_back(psi * psi.adjoint());
    for (int i = 0; i < n_random; ++i) {
        auto rng = substream(seed, 0xF1D, i);
        d.preparations.push_back(sample_haar_pure_state(rng));
    }
    for (const auto& psi : fid) d.measurements.push_back(psi * psi.adjoint());
    for (int j = 0; j < n_random; ++j) {
        auto rng = substream(seed, 0xF1E, j);
        d.measurements.push_back(sample_haar_pure_state(rng));
    }
    const int m = nf + n_random;
    d.mask = BoolMask::Constant(m, m + 1, false);
    d.mask.col(0) = true;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            d.mask(i, j + 1) = (i < nf) || (j < nf);
    return d;
}

// Noise-contracted preparation used by the simulator.
inline Matrix3c depolarize(const Matrix3c& rho, double epsilon) {
    return (1.0 - epsilon) * rho + (epsilon / 3.0) * Matrix3c::Identity();
}

// Ideal m x (n+1) probability matrix for a design, unit column included.
// epsilon > 0 reproduces the simulator's depolarized preparations.
inline Eigen::MatrixXd ideal_probability_matrix(const Design& design, double epsilon = 0.0) {
    const int m = design.m();
    const int n = design.n();
    Eigen::MatrixXd d(m, n + 1);
    d.col(0).setOnes();
    for (int i = 0; i < m; ++i) {
        const Matrix3c rho = depolarize(design.preparations[i], epsilon);
        for (int j = 0; j < n; ++j)
            d(i, j + 1) = predict_probability(rho, design.measurements[j], 1e-9);
    }
    return d;
}

// Generator Bloch vectors: rows of the m x 9 qutrit state matrix.
inline Eigen::MatrixXd generator_state_matrix(const Design& design) {
    Eigen::MatrixXd s(design.m(), 9);
    for (int i = 0; i < design.m(); ++i) s.row(i) = state_to_bloch(design.preparations[i]).transpose();
    return s;
}

// Generator effect Bloch vectors as columns of a 9 x (n+1) matrix, unit
// effect in column 0.
inline Eigen::MatrixXd generator_effect_matrix(const Design& design) {
    Eigen::MatrixXd e(9, design.n() + 1);
    e.col(0) = unit_effect();
    for (int j = 0; j < design.n(); ++j) e.col(j + 1) = effect_to_bloch(design.measurements[j]);
    return e;
}

// Poisson total per probed cell, split multinomially with outcome-0
// probability Tr[rho_eps Q]; the remainder splits evenly between D1 and D2
// (irrelevant after coarse-graining). Each cell draws from its own
// substream (seed, i, j), so results are order- and thread-independent.
inline CountTable simulate_counts(const Design& design, const SimOptions& opts, std::uint64_t seed) {
    if (opts.rate <= 0.0 || opts.exposure < 0.0)
        throw std::invalid_argument("simulate_counts: rate must be positive and exposure nonnegative");
    const int m = design.m();
    const int n = design.n();
    CountTable table;
    table.exposure = opts.exposure;
    table.rate = opts.rate;
    table.counts0 = Eigen::MatrixXd::Zero(m, n);
    table.counts1 = Eigen::MatrixXd::Zero(m, n);
    table.counts2 = Eigen::MatrixXd::Zero(m, n);
    const double mean_total = opts.rate * opts.exposure;
    for (int i = 0; i < m; ++i) {
        const Matrix3c rho = depolarize(design.preparations[i], opts.epsilon);
        for (int j = 0; j < n; ++j) {
            if (!design.mask(i, j + 1)) continue;
            auto rng = substream(seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j));
            long long total = 0;
            if (mean_total > 0.0) {
                std::poisson_distribution<long long> pois(mean_total);
                total = pois(rng);
            }
            double p = predict_probability(rho, design.measurements[j], 1e-9);
            p = std::clamp(p, 0.0, 1.0);
            std::binomial_distribution<long long> split0(total, p);
            const long long c0 = split0(rng);
            std::binomial_distribution<long long> split1(total - c0, 0.5);
            const long long c1 = split1(rng);
            table.counts0(i, j) = static_cast<double>(c0);
            table.counts1(i, j) = static_cast<double>(c1);
            table.counts2(i, j) = static_cast<double>(total - c0 - c1);
        }
    }
    return table;
}

// f = counts0 / total with binomial error propagation of Poisson counts,
// sigma = sqrt(f (1-f) / N), floored at 1/(2N) where f saturates at 0 or 1
// (an unfloored sigma of 0 would make chi^2 undefined).
inline FrequencyMatrix counts_to_frequencies(const CountTable& table, const Design& design) {
    const int m = design.m();
    const int n = design.n();
    FrequencyMatrix fm;
    fm.f = Eigen::MatrixXd::Zero(m, n + 1);
    fm.sigma = Eigen::MatrixXd::Constant(m, n + 1, std::numeric_limits<double>::infinity());
    fm.mask = design.mask;
    fm.f.col(0).setOnes();
    fm.sigma.col(0).setZero();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            if (!design.mask(i, j + 1)) continue;
            const double total = table.counts0(i, j) + table.counts1(i, j) + table.counts2(i, j);
            if (total < 1.0)
                throw data_error("counts_to_frequencies: zero total counts at cell (" +
                                 std::to_string(i) + ", " + std::to_string(j) + ")");
            const double f = table.counts0(i, j) / total;
            double sigma = std::sqrt(f * (1.0 - f) / total);
            const double floor = 0.5 / total;
            if (sigma < floor) sigma = floor;
            fm.f(i, j + 1) = f;
            fm.sigma(i, j + 1) = sigma;
        }
    return fm;
}

// Deterministic frequencies at the expected values; used by exact-recovery
// tests. sigma is uniform on probed cells.
inline FrequencyMatrix exact_frequencies(const Design& design, double epsilon = 0.0, double sigma = 1.0) {
    FrequencyMatrix fm;
    fm.f = ideal_probability_matrix(design, epsilon);
    fm.mask = design.mask;
    fm.sigma = Eigen::MatrixXd::Constant(fm.f.rows(), fm.f.cols(), std::numeric_limits<double>::infinity());
    fm.sigma.col(0).setZero();
    for (int i = 0; i < fm.rows(); ++i)
        for (int j = 1; j < fm.cols(); ++j) {
            if (fm.mask(i, j)) fm.sigma(i, j) = sigma;
            else fm.f(i, j) = 0.0;
        }
    return fm;
}

} // namespace gpt
