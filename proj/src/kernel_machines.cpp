#include "lrshield/kernel_machines.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "lrshield/errors.hpp"
#include "lrshield/logging.hpp"

namespace lrshield {

std::string to_string(KernelKind k) {
    return k == KernelKind::Rbf ? "rbf" : "linear";
}

KernelKind kernel_kind_from_string(const std::string& s) {
    if (s == "rbf") return KernelKind::Rbf;
    if (s == "linear") return KernelKind::Linear;
    throw ParseError("unknown kernel kind '" + s + "'");
}

double kernel(const KernelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (x.size() != y.size())
        throw ValidationError("kernel: dimension mismatch");
    if (spec.kind == KernelKind::Linear) return x.dot(y);
    return std::exp(-spec.sigma * (x - y).squaredNorm());
}

Eigen::MatrixXd kernel_cross(const KernelSpec& spec, const Eigen::MatrixXd& a,
                             const Eigen::MatrixXd& b) {
    if (a.cols() != b.cols())
        throw ValidationError("kernel_cross: feature dimension mismatch");
    Eigen::MatrixXd dots = a * b.transpose();
    if (spec.kind == KernelKind::Linear) return dots;
    Eigen::VectorXd na = a.rowwise().squaredNorm();
    Eigen::VectorXd nb = b.rowwise().squaredNorm();
    Eigen::MatrixXd out =
        (na.replicate(1, b.rows()) + nb.transpose().replicate(a.rows(), 1) - 2.0 * dots);
    return (-spec.sigma * out).array().exp();
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& a) {
    return kernel_cross(spec, a, a);
}

namespace {

// Generic container for the two duals solved here:
//   min 1/2 x'Hx + p'x   s.t.  q'x = 0,  0 <= x <= u,  q_i in {+-1}.
// H columns are served through a view so the SVR never materializes its
// doubled (2m x 2m) matrix.
class QView {
public:
    virtual ~QView() = default;
    virtual int n() const = 0;
    virtual double diag(int i) const = 0;
    virtual double entry(int i, int j) const = 0;
    virtual void add_col(int j, double coeff, Eigen::VectorXd& g) const = 0;
};

// H = [[K, -K], [-K, K]] over x = [alpha; alpha'].
class SvrQ final : public QView {
public:
    SvrQ(const Eigen::MatrixXd& k) : k_(k), m_(static_cast<int>(k.rows())) {}
    int n() const override { return 2 * m_; }
    double diag(int i) const override { return k_(i % m_, i % m_); }
    double entry(int i, int j) const override {
        double s = (i < m_) == (j < m_) ? 1.0 : -1.0;
        return s * k_(i % m_, j % m_);
    }
    void add_col(int j, double coeff, Eigen::VectorXd& g) const override {
        double s = j < m_ ? 1.0 : -1.0;
        int bj = j % m_;
        for (int r = 0; r < m_; ++r) {
            double kv = s * coeff * k_(r, bj);
            g(r) += kv;
            g(m_ + r) -= kv;
        }
    }

private:
    const Eigen::MatrixXd& k_;
    int m_;
};

// H_ij = v_i v_j K_ij.
class SvmQ final : public QView {
public:
    SvmQ(const Eigen::MatrixXd& k, const Eigen::VectorXd& v) : k_(k), v_(v) {}
    int n() const override { return static_cast<int>(k_.rows()); }
    double diag(int i) const override { return k_(i, i); }
    double entry(int i, int j) const override { return v_(i) * v_(j) * k_(i, j); }
    void add_col(int j, double coeff, Eigen::VectorXd& g) const override {
        double cj = coeff * v_(j);
        for (Eigen::Index r = 0; r < k_.rows(); ++r)
            g(r) += cj * v_(r) * k_(r, j);
    }

private:
    const Eigen::MatrixXd& k_;
    const Eigen::VectorXd& v_;
};

struct SmoResult {
    Eigen::VectorXd x;
    double bias = 0.0;
    long iterations = 0;
    double violation = 0.0;
};

// Sequential minimal optimization with maximal-violating-pair working set
// selection.  F_i = -q_i grad_i; optimality when max_up F - min_low F <= tol.
SmoResult solve_smo(const QView& h, const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                    const Eigen::VectorXd& u, const TrainOptions& opts) {
    const int n = h.n();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd grad = p; // H x + p at x = 0

    SmoResult res;
    const double bound_eps = 1e-12;
    for (;;) {
        int i_up = -1, i_low = -1;
        double f_up = -std::numeric_limits<double>::infinity();
        double f_low = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            double f = -q(i) * grad(i);
            bool can_up = q(i) > 0 ? x(i) < u(i) - bound_eps : x(i) > bound_eps;
            bool can_down = q(i) > 0 ? x(i) > bound_eps : x(i) < u(i) - bound_eps;
            if (can_up && f > f_up) { f_up = f; i_up = i; }
            if (can_down && f < f_low) { f_low = f; i_low = i; }
        }
        double violation = (i_up >= 0 && i_low >= 0) ? f_up - f_low
                                                     : -std::numeric_limits<double>::infinity();
        if (i_up < 0 || i_low < 0 || violation <= opts.tol) {
            res.violation = std::max(violation, 0.0);
            // Bias: F of any interior variable equals it; fall back to the
            // bracket midpoint when everything is at a bound.
            double acc = 0.0;
            int cnt = 0;
            for (int i = 0; i < n; ++i) {
                if (x(i) > bound_eps + 1e-8 * u(i) && x(i) < u(i) * (1.0 - 1e-8) - bound_eps) {
                    acc += -q(i) * grad(i);
                    ++cnt;
                }
            }
            if (cnt > 0) res.bias = acc / cnt;
            else if (i_up >= 0 && i_low >= 0) res.bias = 0.5 * (f_up + f_low);
            else res.bias = 0.0;
            res.x = std::move(x);
            return res;
        }
        if (res.iterations >= opts.max_pair_updates)
            throw NumericalError("smo: no convergence after " + std::to_string(res.iterations) +
                                 " pair updates (violation " + std::to_string(violation) +
                                 ", tol " + std::to_string(opts.tol) + ")");

        const int i = i_up, j = i_low;
        double a = h.diag(i) + h.diag(j) - 2.0 * q(i) * q(j) * h.entry(i, j);
        if (a < 1e-12) a = 1e-12;
        double t = (f_up - f_low) / a;
        // Box caps for x_i moving by +q_i t and x_j by -q_j t.
        double cap_i = q(i) > 0 ? u(i) - x(i) : x(i);
        double cap_j = q(j) > 0 ? x(j) : u(j) - x(j);
        t = std::min(t, std::min(cap_i, cap_j));
        if (t <= 0.0) t = 0.0;

        x(i) += q(i) * t;
        x(j) -= q(j) * t;
        x(i) = std::clamp(x(i), 0.0, u(i));
        x(j) = std::clamp(x(j), 0.0, u(j));
        h.add_col(i, q(i) * t, grad);
        h.add_col(j, -q(j) * t, grad);
        ++res.iterations;
    }
}

std::shared_ptr<const Eigen::MatrixXd> shared_copy(const Eigen::MatrixXd& x) {
    return std::make_shared<const Eigen::MatrixXd>(x);
}

} // namespace

SvrModel train_svr_with_gram(std::shared_ptr<const Eigen::MatrixXd> x,
                             const Eigen::MatrixXd& gram, const Eigen::VectorXd& y,
                             double epsilon, double penalty, const KernelSpec& spec,
                             const TrainOptions& opts) {
    const int m = static_cast<int>(y.size());
    if (!x || x->rows() != m || gram.rows() != m || gram.cols() != m)
        throw ValidationError("train_svr: inconsistent training dimensions");
    if (!(epsilon >= 0.0) || !(penalty > 0.0))
        throw ValidationError("train_svr: need epsilon >= 0 and penalty > 0");

    Eigen::VectorXd p(2 * m), q(2 * m), u(2 * m);
    for (int i = 0; i < m; ++i) {
        p(i) = epsilon - y(i);
        p(m + i) = epsilon + y(i);
        q(i) = 1.0;
        q(m + i) = -1.0;
    }
    u.setConstant(penalty);

    SvrQ view(gram);
    SmoResult res = solve_smo(view, p, q, u, opts);

    SvrModel model;
    model.kernel = spec;
    model.train_x = std::move(x);
    model.alpha = res.x.head(m);
    model.alpha_prime = res.x.tail(m);
    // Only one of (alpha, alpha') can be active per sample; strip the overlap
    // the solver may leave within tolerance.
    for (int i = 0; i < m; ++i) {
        double overlap = std::min(model.alpha(i), model.alpha_prime(i));
        if (overlap > 0.0) {
            model.alpha(i) -= overlap;
            model.alpha_prime(i) -= overlap;
        }
    }
    model.bias = res.bias;
    Eigen::VectorXd beta = model.alpha - model.alpha_prime;
    double coef_tol = 1e-12 * penalty;
    for (int i = 0; i < m; ++i)
        if (std::abs(beta(i)) > coef_tol) model.sv_rows.push_back(i);
    model.sv_coef.resize(static_cast<Eigen::Index>(model.sv_rows.size()));
    for (std::size_t k = 0; k < model.sv_rows.size(); ++k)
        model.sv_coef(static_cast<Eigen::Index>(k)) = beta(model.sv_rows[k]);
    return model;
}

SvrModel train_svr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double epsilon,
                   double penalty, const KernelSpec& spec, const TrainOptions& opts) {
    if (x.rows() != y.size())
        throw ValidationError("train_svr: x rows and y size differ");
    auto shared = shared_copy(x);
    Eigen::MatrixXd gram = kernel_matrix(spec, x);
    return train_svr_with_gram(shared, gram, y, epsilon, penalty, spec, opts);
}

SvmModel train_svm(const Eigen::MatrixXd& u_rows, const Eigen::VectorXd& labels, double c,
                   const KernelSpec& spec, const TrainOptions& opts) {
    const int m = static_cast<int>(u_rows.rows());
    if (labels.size() != m)
        throw ValidationError("train_svm: labels size mismatch");
    if (!(c > 0.0))
        throw ValidationError("train_svm: penalty must be positive");
    bool pos = false, neg = false;
    for (int i = 0; i < m; ++i) {
        if (labels(i) == 1.0) pos = true;
        else if (labels(i) == -1.0) neg = true;
        else throw ValidationError("train_svm: label " + std::to_string(i) + " must be +1 or -1");
    }
    if (!pos || !neg)
        throw ValidationError("train_svm: need both classes in the training set");

    Eigen::MatrixXd gram = kernel_matrix(spec, u_rows);
    Eigen::VectorXd p = Eigen::VectorXd::Constant(m, -1.0);
    Eigen::VectorXd u = Eigen::VectorXd::Constant(m, c);
    SvmQ view(gram, labels);
    SmoResult res = solve_smo(view, p, labels, u, opts);

    SvmModel model;
    model.kernel = spec;
    model.train_x = shared_copy(u_rows);
    model.beta = res.x;
    model.bias = res.bias;
    double coef_tol = 1e-12 * c;
    for (int i = 0; i < m; ++i)
        if (model.beta(i) > coef_tol) model.sv_rows.push_back(i);
    model.sv_coef.resize(static_cast<Eigen::Index>(model.sv_rows.size()));
    for (std::size_t k = 0; k < model.sv_rows.size(); ++k)
        model.sv_coef(static_cast<Eigen::Index>(k)) =
            labels(model.sv_rows[k]) * model.beta(model.sv_rows[k]);
    return model;
}

namespace {

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& x, const std::vector<int>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
    return out;
}

} // namespace

double SvrModel::predict(const Eigen::VectorXd& x) const {
    double acc = bias;
    for (std::size_t k = 0; k < sv_rows.size(); ++k)
        acc += sv_coef(static_cast<Eigen::Index>(k)) *
               lrshield::kernel(kernel, train_x->row(sv_rows[k]).transpose(), x);
    return acc;
}

Eigen::VectorXd SvrModel::predict_batch(const Eigen::MatrixXd& rows) const {
    if (sv_rows.empty()) return Eigen::VectorXd::Constant(rows.rows(), bias);
    Eigen::MatrixXd sv = gather_rows(*train_x, sv_rows);
    Eigen::MatrixXd k = kernel_cross(kernel, rows, sv);
    return (k * sv_coef).array() + bias;
}

double SvmModel::decision(const Eigen::VectorXd& u) const {
    double acc = bias;
    for (std::size_t k = 0; k < sv_rows.size(); ++k)
        acc += sv_coef(static_cast<Eigen::Index>(k)) *
               lrshield::kernel(kernel, train_x->row(sv_rows[k]).transpose(), u);
    return acc;
}

Eigen::VectorXd SvmModel::decision_batch(const Eigen::MatrixXd& rows) const {
    if (sv_rows.empty()) return Eigen::VectorXd::Constant(rows.rows(), bias);
    Eigen::MatrixXd sv = gather_rows(*train_x, sv_rows);
    Eigen::MatrixXd k = kernel_cross(kernel, rows, sv);
    return (k * sv_coef).array() + bias;
}

int SvmModel::predict(const Eigen::VectorXd& u) const {
    return decision(u) >= 0.0 ? 1 : -1;
}

// --- serialization ----------------------------------------------------------

nlohmann::json evector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Eigen::VectorXd evector_from_json(const nlohmann::json& j, const std::string& ctx) {
    if (!j.is_array())
        throw ParseError(ctx + ": expected an array");
    Eigen::VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number())
            throw ParseError(ctx + "[" + std::to_string(i) + "]: expected a number");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& ctx) {
    if (!j.is_array())
        throw ParseError(ctx + ": expected an array of rows");
    if (j.empty()) return Eigen::MatrixXd(0, 0);
    std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != cols)
            throw ParseError(ctx + ": ragged matrix at row " + std::to_string(r));
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
    return m;
}

namespace {

nlohmann::json kernel_to_json(const KernelSpec& k) {
    return {{"kind", to_string(k.kind)}, {"sigma", k.sigma}};
}

KernelSpec kernel_from_json(const nlohmann::json& j) {
    KernelSpec k;
    k.kind = kernel_kind_from_string(j.at("kind").get<std::string>());
    k.sigma = j.at("sigma").get<double>();
    return k;
}

} // namespace

nlohmann::json svr_to_json(const SvrModel& m) {
    nlohmann::json j{{"kernel", kernel_to_json(m.kernel)},
                     {"sv_rows", m.sv_rows},
                     {"sv_coef", evector_to_json(m.sv_coef)},
                     {"bias", m.bias},
                     {"alpha", evector_to_json(m.alpha)},
                     {"alpha_prime", evector_to_json(m.alpha_prime)}};
    return j;
}

SvrModel svr_from_json(const nlohmann::json& j, std::shared_ptr<const Eigen::MatrixXd> shared_x) {
    SvrModel m;
    m.kernel = kernel_from_json(j.at("kernel"));
    m.sv_rows = j.at("sv_rows").get<std::vector<int>>();
    m.sv_coef = evector_from_json(j.at("sv_coef"), "sv_coef");
    m.bias = j.at("bias").get<double>();
    if (j.contains("alpha")) m.alpha = evector_from_json(j["alpha"], "alpha");
    if (j.contains("alpha_prime")) m.alpha_prime = evector_from_json(j["alpha_prime"], "alpha_prime");
    m.train_x = std::move(shared_x);
    if (!m.train_x)
        throw ValidationError("svr_from_json: missing feature matrix");
    for (int r : m.sv_rows)
        if (r < 0 || r >= m.train_x->rows())
            throw ValidationError("svr_from_json: support row " + std::to_string(r) + " out of range");
    if (static_cast<Eigen::Index>(m.sv_rows.size()) != m.sv_coef.size())
        throw ValidationError("svr_from_json: sv_rows and sv_coef disagree");
    return m;
}

nlohmann::json svm_to_json(const SvmModel& m) {
    return {{"kernel", kernel_to_json(m.kernel)},
            {"sv_rows", m.sv_rows},
            {"sv_coef", evector_to_json(m.sv_coef)},
            {"bias", m.bias},
            {"beta", evector_to_json(m.beta)}};
}

SvmModel svm_from_json(const nlohmann::json& j, std::shared_ptr<const Eigen::MatrixXd> shared_x) {
    SvmModel m;
    m.kernel = kernel_from_json(j.at("kernel"));
    m.sv_rows = j.at("sv_rows").get<std::vector<int>>();
    m.sv_coef = evector_from_json(j.at("sv_coef"), "sv_coef");
    m.bias = j.at("bias").get<double>();
    if (j.contains("beta")) m.beta = evector_from_json(j["beta"], "beta");
    m.train_x = std::move(shared_x);
    if (!m.train_x)
        throw ValidationError("svm_from_json: missing feature matrix");
    for (int r : m.sv_rows)
        if (r < 0 || r >= m.train_x->rows())
            throw ValidationError("svm_from_json: support row " + std::to_string(r) + " out of range");
    if (static_cast<Eigen::Index>(m.sv_rows.size()) != m.sv_coef.size())
        throw ValidationError("svm_from_json: sv_rows and sv_coef disagree");
    return m;
}

} // namespace lrshield
