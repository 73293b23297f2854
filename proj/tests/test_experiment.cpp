// Tests for experiment designs and the count simulator.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <set>

#include "gpt/experiment.hpp"
#include "gpt/qutrit.hpp"
#include "gpt/rng.hpp"

using namespace gpt;

TEST_CASE("fiducial kets are distinct, normalized, and span all of state space") {
    const auto kets = fiducial_kets();
    REQUIRE(kets.size() == 15);
    for (const auto& k : kets) CHECK(k.norm() == doctest::Approx(1.0).epsilon(1e-14));
    for (std::size_t i = 0; i < kets.size(); ++i)
        for (std::size_t j = i + 1; j < kets.size(); ++j) {
            // distinct as rays: |<a|b>| < 1
            CHECK(std::abs(kets[i].dot(kets[j])) < 1.0 - 1e-9);
        }
    // The 15 projectors span the full 9-dimensional space of Hermitian
    // operators: their Bloch vectors form a rank-9 matrix.
    Eigen::MatrixXd bloch(15, 9);
    for (int i = 0; i < 15; ++i) {
        const Matrix3c rho = kets[i] * kets[i].adjoint();
        bloch.row(i) = state_to_bloch(rho).transpose();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(bloch);
    CHECK(svd.singularValues()(8) > 1e-6);
}

TEST_CASE("fiducial design mask probes exactly the fiducial-touching cells") {
    const Design d = build_fiducial_design(400, 7);
    REQUIRE(d.m() == 415);
    REQUIRE(d.n() == 415);
    REQUIRE(d.mask.rows() == 415);
    REQUIRE(d.mask.cols() == 416);
    CHECK(d.mask.col(0).all());
    long probed = 0;
    for (int i = 0; i < d.m(); ++i)
        for (int j = 1; j <= d.n(); ++j) {
            CHECK(d.mask(i, j) == (i < 15 || j - 1 < 15));
            if (d.mask(i, j)) ++probed;
        }
    CHECK(probed == 415 * 415 - 400 * 400); // 12225

    const Design small = build_fiducial_design(0, 7);
    CHECK(small.m() == 15);
    CHECK(small.mask.rows() == 15);
    CHECK(small.mask.cols() == 16);
    CHECK(small.mask.all());
}

TEST_CASE("haar design rejects more measurements than states") {
    CHECK_THROWS_AS(build_haar_design(5, 6, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_haar_design(0, 0, 1), std::invalid_argument);
    const Design d = build_haar_design(6, 4, 1);
    CHECK(d.m() == 6);
    CHECK(d.n() == 4);
    CHECK(d.mask.all());
    // measurements reuse the first states: matched pairs respond with 1
    for (int j = 0; j < 4; ++j)
        CHECK(ideal_probability_matrix(d)(j, j + 1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ideal probabilities are physical and carry the unit column") {
    const Design d = build_fiducial_design(10, 3);
    const Eigen::MatrixXd p = ideal_probability_matrix(d, 0.02);
    CHECK((p.col(0).array() == 1.0).all());
    CHECK(p.minCoeff() >= -1e-12);
    CHECK(p.maxCoeff() <= 1.0 + 1e-12);
    // depolarizing pulls matched fiducial pairs off 1 by 2/3 epsilon
    const Eigen::MatrixXd p0 = ideal_probability_matrix(d, 0.0);
    CHECK(p0(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p(0, 1) == doctest::Approx(1.0 - 2.0 / 3.0 * 0.02).epsilon(1e-12));
}

TEST_CASE("frequencies estimate probabilities with binomial error bars") {
    const Design d = build_haar_design(12, 12, 21);
    SimOptions opts;
    opts.rate = 5000.0;
    opts.exposure = 4.0;
    opts.epsilon = 0.0;
    const CountTable counts = simulate_counts(d, opts, 99);
    const FrequencyMatrix fm = counts_to_frequencies(counts, d);
    const Eigen::MatrixXd p = ideal_probability_matrix(d, 0.0);
    REQUIRE(fm.rows() == 12);
    REQUIRE(fm.cols() == 13);
    CHECK((fm.f.col(0).array() == 1.0).all());
    CHECK((fm.sigma.col(0).array() == 0.0).all());
    int far = 0;
    for (int i = 0; i < 12; ++i)
        for (int j = 1; j < 13; ++j) {
            CHECK(fm.f(i, j) >= 0.0);
            CHECK(fm.f(i, j) <= 1.0);
            const double total = counts.counts0(i, j - 1) + counts.counts1(i, j - 1) + counts.counts2(i, j - 1);
            const double f = fm.f(i, j);
            const double expected = std::max(std::sqrt(f * (1.0 - f) / total), 0.5 / total);
            CHECK(fm.sigma(i, j) == doctest::Approx(expected).epsilon(1e-12));
            if (std::abs(f - p(i, j)) > 5.0 * fm.sigma(i, j)) ++far;
        }
    CHECK(far <= 2); // 5-sigma outliers should be essentially absent
}

TEST_CASE("simulation is reproducible and masked cells stay untouched") {
    const Design d = build_fiducial_design(20, 5);
    SimOptions opts;
    const CountTable a = simulate_counts(d, opts, 1234);
    const CountTable b = simulate_counts(d, opts, 1234);
    CHECK((a.counts0 - b.counts0).norm() == 0.0);
    CHECK((a.counts1 - b.counts1).norm() == 0.0);
    CHECK((a.counts2 - b.counts2).norm() == 0.0);
    const CountTable c = simulate_counts(d, opts, 1235);
    CHECK((a.counts0 - c.counts0).norm() > 0.0);
    const FrequencyMatrix fm = counts_to_frequencies(a, d);
    for (int i = 15; i < d.m(); ++i)
        for (int j = 15; j < d.n(); ++j) {
            CHECK(a.counts0(i, j) == 0.0);
            CHECK(fm.f(i, j + 1) == 0.0);
            CHECK(std::isinf(fm.sigma(i, j + 1)));
        }
}

TEST_CASE("empty cells are rejected when converting counts") {
    const Design d = build_haar_design(3, 3, 4);
    SimOptions opts;
    CountTable counts = simulate_counts(d, opts, 8);
    counts.counts0(1, 2) = counts.counts1(1, 2) = counts.counts2(1, 2) = 0.0;
    CHECK_THROWS_AS(counts_to_frequencies(counts, d), data_error);
    SimOptions bad;
    bad.rate = 0.0;
    CHECK_THROWS_AS(simulate_counts(d, bad, 8), std::invalid_argument);
}

TEST_CASE("exact frequencies reproduce the ideal table with uniform weights") {
    const Design d = build_fiducial_design(8, 11);
    const FrequencyMatrix fm = exact_frequencies(d, 0.0, 0.25);
    const Eigen::MatrixXd p = ideal_probability_matrix(d, 0.0);
    for (int i = 0; i < fm.rows(); ++i)
        for (int j = 1; j < fm.cols(); ++j) {
            if (fm.mask(i, j)) {
                CHECK(fm.f(i, j) == p(i, j));
                CHECK(fm.sigma(i, j) == 0.25);
            } else {
                CHECK(fm.f(i, j) == 0.0);
            }
        }
}
