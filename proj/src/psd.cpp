#include "lrshield/psd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "lrshield/errors.hpp"

namespace lrshield {

Eigen::MatrixXd project_psd(const Eigen::MatrixXd& m, double sym_tol) {
    if (m.rows() != m.cols())
        throw ValidationError("project_psd: matrix is not square");
    double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > sym_tol * scale)
        throw ValidationError("project_psd: matrix is not symmetric (max asymmetry " +
                              std::to_string(asym) + ")");
    Eigen::MatrixXd s = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
    if (eig.info() != Eigen::Success)
        throw NumericalError("project_psd: eigendecomposition failed");
    Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(0.0);
    return eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
}

namespace {

// Every feasible point lies on the boundary of the PSD cone (PSD plus
// 1'X1 = 0 forces X1 = 0), so alternating projections started from an
// arbitrary point close the gap only sublinearly.  Seed the iteration with an
// exact feasible point instead: unit plane directions u_i with
// sum_i sigma_i u_i = 0 exist precisely when the sigmas close a polygon
// (2 max sigma <= sum sigma), and X = W W' with rows w_i = sigma_i u_i then
// has the target diagonal, zero row sums and rank <= 2.
Eigen::MatrixXd polygon_seed(const Eigen::VectorXd& sigma) {
    const Eigen::Index k = sigma.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (sigma(a) != sigma(b)) return sigma(a) > sigma(b);
        return a < b;
    });

    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(k, 2);
    const double s1 = sigma(order[0]);
    if (s1 <= 0.0) return Eigen::MatrixXd::Zero(k, k); // all-zero diagonal

    // Split the remaining lengths into two straight chains of totals a and b;
    // greedy keeps |a - b| <= max remaining <= s1, so the two-link arm can
    // bend to reach the point -s1 * e_x.
    double a = 0.0, b = 0.0;
    std::vector<bool> in_b(static_cast<std::size_t>(k), false);
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (a <= b) {
            a += sigma(order[i]);
        } else {
            b += sigma(order[i]);
            in_b[i] = true;
        }
    }
    const Eigen::Vector2d t(-s1, 0.0);
    Eigen::Vector2d u(-1.0, 0.0), v(-1.0, 0.0);
    if (a > 0.0) {
        const double ca =
            std::clamp((a * a + s1 * s1 - b * b) / (2.0 * a * s1), -1.0, 1.0);
        const double sa = std::sqrt(std::max(0.0, 1.0 - ca * ca));
        u = Eigen::Vector2d(-ca, sa);
        const Eigen::Vector2d r = t - a * u;
        if (r.norm() > 1e-14 * s1) v = r.normalized();
    }
    w.row(order[0]) = Eigen::Vector2d(s1, 0.0);
    for (std::size_t i = 1; i < order.size(); ++i)
        w.row(order[i]) = sigma(order[i]) * (in_b[i] ? v : u);
    return w * w.transpose();
}

// Projection onto { X : diag(X) = d, sum(X) = 0 }.  The off-diagonal entries
// get a uniform shift (least-squares correction with a single multiplier).
Eigen::MatrixXd project_affine(const Eigen::MatrixXd& y, const Eigen::VectorXd& d) {
    const Eigen::Index k = y.rows();
    Eigen::MatrixXd x = y;
    for (Eigen::Index i = 0; i < k; ++i) x(i, i) = d(i);
    if (k > 1) {
        double off_sum = x.sum() - d.sum();
        double target = -d.sum();
        double mu = (target - off_sum) / static_cast<double>(k * k - k);
        for (Eigen::Index i = 0; i < k; ++i)
            for (Eigen::Index j = 0; j < k; ++j)
                if (i != j) x(i, j) += mu;
    }
    return x;
}

} // namespace

ConstrainedPsdResult constrained_psd(const Eigen::VectorXd& diag_target,
                                     const ConstrainedPsdOptions& opts) {
    const Eigen::Index k = diag_target.size();
    if (k == 0)
        throw ValidationError("constrained_psd: empty diagonal");
    for (Eigen::Index i = 0; i < k; ++i)
        if (!(diag_target(i) >= 0.0))
            throw ValidationError("constrained_psd: diagonal entry " + std::to_string(i) +
                                  " must be non-negative");

    ConstrainedPsdResult res;
    double scale = std::max(1.0, diag_target.maxCoeff());

    if (k == 1) {
        // sum(X) = 0 forces the single entry to zero.
        res.feasible = diag_target(0) <= opts.tol * scale;
        res.gamma = Eigen::MatrixXd::Zero(1, 1);
        res.residual = diag_target(0);
        return res;
    }

    const Eigen::VectorXd sigma = diag_target.cwiseSqrt();
    const bool closes = 2.0 * sigma.maxCoeff() <= sigma.sum();
    Eigen::MatrixXd x = project_affine(
        closes ? polygon_seed(sigma) : Eigen::MatrixXd(diag_target.asDiagonal()), diag_target);
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(k, k); // Dykstra correction (cone side)
    double prev_dist = std::numeric_limits<double>::infinity();
    int since_progress = 0;

    for (int it = 1; it <= opts.max_iter; ++it) {
        Eigen::MatrixXd y = project_psd(x + p, 1e-7);
        p = x + p - y;
        x = project_affine(y, diag_target);
        double dist = (x - y).norm();
        res.iterations = it;
        res.residual = dist;
        if (dist <= opts.tol * scale) {
            res.feasible = true;
            res.gamma = x; // exact diagonal and zero sum; PSD within tol
            return res;
        }
        if (prev_dist - dist <= opts.stall_rel * std::max(1.0, prev_dist))
            ++since_progress;
        else
            since_progress = 0;
        prev_dist = dist;
        if (since_progress >= opts.stall_window) break; // converged to a gap > tol
    }
    res.feasible = false;
    res.gamma = x;
    return res;
}

} // namespace lrshield
