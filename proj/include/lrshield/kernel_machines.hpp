#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

namespace lrshield {

enum class KernelKind { Rbf, Linear };

// rbf: k(x, y) = exp(-sigma * |x - y|^2);  linear: k(x, y) = x'y.
struct KernelSpec {
    KernelKind kind = KernelKind::Rbf;
    double sigma = 0.01;
};

std::string to_string(KernelKind k);
KernelKind kernel_kind_from_string(const std::string& s);

double kernel(const KernelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& y);
// Gram matrix of the rows of a.
Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& a);
// Cross kernel: out(i, j) = k(a_row_i, b_row_j).
Eigen::MatrixXd kernel_cross(const KernelSpec& spec, const Eigen::MatrixXd& a,
                             const Eigen::MatrixXd& b);

struct TrainOptions {
    double tol = 1e-3;           // maximal-violating-pair stopping tolerance
    long max_pair_updates = 2000000;
};

// Epsilon-insensitive support vector regression trained by sequential minimal
// optimization on the standard dual.  Inputs are used as-is (standardize
// upstream).
struct SvrModel {
    KernelSpec kernel;
    std::shared_ptr<const Eigen::MatrixXd> train_x; // rows indexed by sv_rows
    std::vector<int> sv_rows;
    Eigen::VectorXd sv_coef; // alpha - alpha' at the support rows
    double bias = 0.0;
    Eigen::VectorXd alpha, alpha_prime; // full-length training diagnostics

    double predict(const Eigen::VectorXd& x) const;
    Eigen::VectorXd predict_batch(const Eigen::MatrixXd& rows) const;
};

struct SvmModel {
    KernelSpec kernel;
    std::shared_ptr<const Eigen::MatrixXd> train_x;
    std::vector<int> sv_rows;
    Eigen::VectorXd sv_coef; // v_j * beta_j at the support rows
    double bias = 0.0;
    Eigen::VectorXd beta; // full-length training diagnostics

    double decision(const Eigen::VectorXd& u) const;
    Eigen::VectorXd decision_batch(const Eigen::MatrixXd& rows) const;
    // Sign of the decision value; exact zero maps to +1.
    int predict(const Eigen::VectorXd& u) const;
};

SvrModel train_svr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double epsilon,
                   double penalty, const KernelSpec& spec, const TrainOptions& opts = {});

// Variant sharing a precomputed Gram matrix across several models trained on
// the same rows.
SvrModel train_svr_with_gram(std::shared_ptr<const Eigen::MatrixXd> x,
                             const Eigen::MatrixXd& gram, const Eigen::VectorXd& y,
                             double epsilon, double penalty, const KernelSpec& spec,
                             const TrainOptions& opts = {});

// C-SVM binary classifier; labels must be exactly +1 / -1.
SvmModel train_svm(const Eigen::MatrixXd& u, const Eigen::VectorXd& labels, double c,
                   const KernelSpec& spec, const TrainOptions& opts = {});

nlohmann::json svr_to_json(const SvrModel& m);
SvrModel svr_from_json(const nlohmann::json& j, std::shared_ptr<const Eigen::MatrixXd> shared_x);
nlohmann::json svm_to_json(const SvmModel& m);
SvmModel svm_from_json(const nlohmann::json& j, std::shared_ptr<const Eigen::MatrixXd> shared_x);

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& ctx);
nlohmann::json evector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd evector_from_json(const nlohmann::json& j, const std::string& ctx);

} // namespace lrshield
