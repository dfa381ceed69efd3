#pragma once

#include <Eigen/Dense>

namespace lrshield {

// Nearest (Frobenius) positive semidefinite matrix: eigendecompose and clip
// negative eigenvalues.  Input must be symmetric within sym_tol.
Eigen::MatrixXd project_psd(const Eigen::MatrixXd& m, double sym_tol = 1e-9);

struct ConstrainedPsdResult {
    bool feasible = false;
    Eigen::MatrixXd gamma;
    int iterations = 0;
    double residual = 0.0; // final distance between the two projection iterates
};

struct ConstrainedPsdOptions {
    double tol = 1e-8;
    int max_iter = 10000;
    int stall_window = 100;     // iterations without progress => infeasible
    double stall_rel = 1e-12;
};

// Finds a covariance matrix with the prescribed diagonal whose entries sum to
// zero (so that correlated draws sum to zero), via Dykstra's alternating
// projections between the PSD cone and the affine set
//   { X : diag(X) = diag_target, 1'X1 = 0 }.
// Declares infeasibility when the projection distance stalls above tol.
ConstrainedPsdResult constrained_psd(const Eigen::VectorXd& diag_target,
                                     const ConstrainedPsdOptions& opts = {});

} // namespace lrshield
