// gauge.hpp
// Canonical decomposition of a fitted probability matrix: QR -> SVD initial
// factorization D = S' E', then the invertible gauge transformation Lambda
// aligning S' Lambda to the quantum reference state matrix, with
// E_realized = Lambda^{-1} E'.

#pragma once

#include <Eigen/Dense>

#include <string>

#include "gpt/errors.hpp"

namespace gpt {

struct GaugeResult {
    Eigen::MatrixXd Lambda;     // k x k, invertible
    Eigen::MatrixXd S_realized; // m x k
    Eigen::MatrixXd E_realized; // k x (n+1)
    double chi2_alignment = 0.0;
    double condition_number = 0.0;
};

// S' = U sqrt(Sigma), E' = sqrt(Sigma) V^T, truncated to rank k. The QR
// factorization is taken first and the SVD applied to its product.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> initial_decomposition(const Eigen::MatrixXd& d,
                                                                         int k) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(d);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d.rows(), d.rows());
    const Eigen::MatrixXd r = qr.matrixQR().topRows(std::min(d.rows(), d.cols()))
                                  .triangularView<Eigen::Upper>();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(q.leftCols(r.rows()) * r,
                                       Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd sv = svd.singularValues();
    int numerical_rank = 0;
    const double thresh = sv[0] * std::max(d.rows(), d.cols()) * 1e-14;
    for (int i = 0; i < sv.size(); ++i)
        if (sv[i] > thresh) ++numerical_rank;
    if (numerical_rank < k)
        throw numerical_error("initial_decomposition: numerical rank " +
                              std::to_string(numerical_rank) + " below requested rank " +
                              std::to_string(k));
    const Eigen::VectorXd sq = sv.head(k).array().sqrt();
    Eigen::MatrixXd s_prime = svd.matrixU().leftCols(k) * sq.asDiagonal();
    Eigen::MatrixXd e_prime = sq.asDiagonal() * svd.matrixV().leftCols(k).transpose();
    return {std::move(s_prime), std::move(e_prime)};
}

// Least-squares gauge fit: Lambda = argmin ||S_qutrit - S' Lambda||_F^2,
// solved column-by-column through the normal equations. Invertibility is
// checked post hoc; a ridge fallback covers degenerate data.
inline GaugeResult fit_gauge(const Eigen::MatrixXd& s_prime, const Eigen::MatrixXd& s_qutrit,
                             const Eigen::MatrixXd& e_prime) {
    if (s_prime.rows() != s_qutrit.rows())
        throw std::invalid_argument("fit_gauge: row counts of S' and S_qutrit differ");

    const Eigen::MatrixXd gram = s_prime.transpose() * s_prime;
    const Eigen::MatrixXd rhs = s_prime.transpose() * s_qutrit;
    Eigen::MatrixXd lambda = gram.ldlt().solve(rhs);

    auto condition = [](const Eigen::MatrixXd& mtx) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(mtx);
        const double smin = svd.singularValues().minCoeff();
        return (smin > 0.0) ? svd.singularValues().maxCoeff() / smin
                            : std::numeric_limits<double>::infinity();
    };

    double cond = condition(lambda);
    if (!(cond < 1e12)) {
        Eigen::MatrixXd ridge = gram;
        ridge.diagonal().array() += 1e-10 * gram.trace();
        lambda = ridge.ldlt().solve(rhs);
        cond = condition(lambda);
        if (!(cond < 1e12))
            throw numerical_error(
                "fit_gauge: Lambda is singular (condition number above 1e12); "
                "restart with regularization added to the Gram matrix");
    }

    GaugeResult result;
    result.Lambda = lambda;
    result.S_realized = s_prime * lambda;
    result.E_realized = lambda.partialPivLu().solve(e_prime);
    result.chi2_alignment = (s_qutrit - result.S_realized).squaredNorm();
    result.condition_number = cond;
    return result;
}

} // namespace gpt
