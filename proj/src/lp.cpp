#include "lrshield/lp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "lrshield/errors.hpp"
#include "lrshield/logging.hpp"

namespace lrshield {

void LpProblem::validate() const {
    const int nv = n();
    auto dim = [&](const char* what, long got, long want) {
        if (got != want)
            throw ValidationError(std::string("lp: ") + what + " has dimension " +
                                  std::to_string(got) + ", expected " + std::to_string(want));
    };
    dim("lb", lb.size(), nv);
    dim("ub", ub.size(), nv);
    if (a_eq.size() > 0 || b_eq.size() > 0) {
        dim("a_eq columns", a_eq.cols(), nv);
        dim("b_eq", b_eq.size(), a_eq.rows());
    }
    if (a_ub.size() > 0 || b_ub.size() > 0) {
        dim("a_ub columns", a_ub.cols(), nv);
        dim("b_ub", b_ub.size(), a_ub.rows());
    }
    for (int j = 0; j < nv; ++j) {
        if (std::isnan(lb(j)) || std::isnan(ub(j)))
            throw ValidationError("lp: NaN bound on variable " + std::to_string(j));
        if (lb(j) > ub(j))
            throw ValidationError("lp: lb > ub on variable " + std::to_string(j));
    }
}

LpProblem LpProblem::make(int n_vars) {
    LpProblem p;
    p.c = Eigen::VectorXd::Zero(n_vars);
    p.a_eq.resize(0, n_vars);
    p.b_eq.resize(0);
    p.a_ub.resize(0, n_vars);
    p.b_ub.resize(0);
    p.lb = Eigen::VectorXd::Constant(n_vars, -kInf);
    p.ub = Eigen::VectorXd::Constant(n_vars, kInf);
    return p;
}

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Unbounded: return "unbounded";
        case SolveStatus::IterLimit: return "iteration_limit";
        case SolveStatus::NodeLimit: return "node_limit";
    }
    return "?";
}

namespace {

enum class VarState { AtLower, AtUpper, Basic, Free };

// Bounded-variable revised simplex over the computational form
//   min c'z  s.t.  A z = rhs,  l <= z <= u
// with z = [structural | slacks | artificials].  A dense basis inverse is
// maintained explicitly and rebuilt periodically; problem sizes here are a few
// hundred rows at most.
class Simplex {
public:
    Simplex(const LpProblem& prob, const SimplexOptions& opts) : opts_(opts) {
        ns_ = prob.n();
        me_ = prob.n_eq();
        mu_ = prob.n_ub();
        m_ = me_ + mu_;
        nr_ = ns_ + mu_;       // real variables: structural + slacks
        nt_ = nr_ + m_;        // + artificials

        a_ = Eigen::MatrixXd::Zero(m_, nr_);
        if (me_ > 0) a_.block(0, 0, me_, ns_) = prob.a_eq;
        if (mu_ > 0) {
            a_.block(me_, 0, mu_, ns_) = prob.a_ub;
            a_.block(me_, ns_, mu_, mu_) = Eigen::MatrixXd::Identity(mu_, mu_);
        }
        rhs_.resize(m_);
        if (me_ > 0) rhs_.head(me_) = prob.b_eq;
        if (mu_ > 0) rhs_.tail(mu_) = prob.b_ub;

        lb_.resize(nt_);
        ub_.resize(nt_);
        lb_.head(ns_) = prob.lb;
        ub_.head(ns_) = prob.ub;
        for (int j = ns_; j < nr_; ++j) { lb_(j) = 0.0; ub_(j) = kInf; }   // slacks
        for (int j = nr_; j < nt_; ++j) { lb_(j) = 0.0; ub_(j) = kInf; }   // artificials

        cost_ = Eigen::VectorXd::Zero(nt_);
        cost_.head(ns_) = prob.c;
        c_scale_ = std::max(1.0, prob.c.size() > 0 ? prob.c.cwiseAbs().maxCoeff() : 1.0);
    }

    LpSolution run() {
        LpSolution out;
        if (m_ == 0) return solve_unconstrained();

        init_phase1();
        SolveStatus st = iterate(/*phase1=*/true);
        out.iterations = iters_;
        if (st == SolveStatus::IterLimit) { out.status = st; return out; }
        if (st == SolveStatus::Unbounded)
            throw NumericalError("lp: phase 1 reported unbounded (cannot happen)");
        double infeas = phase_objective(/*phase1=*/true);
        if (infeas > opts_.feas_tol * (1.0 + rhs_.cwiseAbs().maxCoeff())) {
            out.status = SolveStatus::Infeasible;
            return out;
        }
        drive_out_artificials();
        for (int j = nr_; j < nt_; ++j) { lb_(j) = 0.0; ub_(j) = 0.0; }

        phase1_ = false;
        bland_ = false;
        degen_count_ = 0;
        st = iterate(/*phase1=*/false);
        out.iterations = iters_;
        if (st != SolveStatus::Optimal) { out.status = st; return out; }

        out.status = SolveStatus::Optimal;
        out.x = values().head(ns_);
        out.objective = cost_.head(ns_).dot(out.x);
        extract_duals(out);
        return out;
    }

private:
    LpSolution solve_unconstrained() {
        LpSolution out;
        out.x.resize(ns_);
        for (int j = 0; j < ns_; ++j) {
            double cj = cost_(j);
            if (cj > 0.0) {
                if (!std::isfinite(lb_(j))) { out.status = SolveStatus::Unbounded; return out; }
                out.x(j) = lb_(j);
            } else if (cj < 0.0) {
                if (!std::isfinite(ub_(j))) { out.status = SolveStatus::Unbounded; return out; }
                out.x(j) = ub_(j);
            } else {
                out.x(j) = std::isfinite(lb_(j)) ? lb_(j) : (std::isfinite(ub_(j)) ? ub_(j) : 0.0);
            }
        }
        out.status = SolveStatus::Optimal;
        out.objective = cost_.head(ns_).dot(out.x);
        out.y_eq.resize(0);
        out.y_ub.resize(0);
        out.reduced_costs = cost_.head(ns_);
        out.dual_objective = out.objective;
        return out;
    }

    // Nonbasic value implied by a variable's state.
    double nonbasic_value(int j) const {
        switch (state_[static_cast<std::size_t>(j)]) {
            case VarState::AtLower: return lb_(j);
            case VarState::AtUpper: return ub_(j);
            case VarState::Free: return 0.0;
            case VarState::Basic: break;
        }
        return 0.0;
    }

    Eigen::VectorXd values() const {
        Eigen::VectorXd v(nt_);
        for (int j = 0; j < nt_; ++j) v(j) = nonbasic_value(j);
        for (int i = 0; i < m_; ++i) v(basis_[static_cast<std::size_t>(i)]) = xb_(i);
        return v;
    }

    Eigen::VectorXd column(int j) const {
        if (j < nr_) return a_.col(j);
        Eigen::VectorXd e = Eigen::VectorXd::Zero(m_);
        e(j - nr_) = art_sign_[static_cast<std::size_t>(j - nr_)];
        return e;
    }

    void init_phase1() {
        state_.assign(static_cast<std::size_t>(nt_), VarState::AtLower);
        for (int j = 0; j < nr_; ++j) {
            if (std::isfinite(lb_(j))) state_[static_cast<std::size_t>(j)] = VarState::AtLower;
            else if (std::isfinite(ub_(j))) state_[static_cast<std::size_t>(j)] = VarState::AtUpper;
            else state_[static_cast<std::size_t>(j)] = VarState::Free;
        }
        Eigen::VectorXd xn(nr_);
        for (int j = 0; j < nr_; ++j) xn(j) = nonbasic_value(j);
        Eigen::VectorXd resid = rhs_ - a_ * xn;

        art_sign_.resize(static_cast<std::size_t>(m_));
        basis_.resize(static_cast<std::size_t>(m_));
        xb_.resize(m_);
        binv_ = Eigen::MatrixXd::Zero(m_, m_);
        for (int i = 0; i < m_; ++i) {
            double s = resid(i) >= 0.0 ? 1.0 : -1.0;
            art_sign_[static_cast<std::size_t>(i)] = s;
            basis_[static_cast<std::size_t>(i)] = nr_ + i;
            state_[static_cast<std::size_t>(nr_ + i)] = VarState::Basic;
            xb_(i) = std::abs(resid(i));
            binv_(i, i) = s; // inverse of diag(sign)
        }
        phase1_ = true;
        bland_ = false;
        degen_count_ = 0;
        pivots_since_refactor_ = 0;
    }

    double phase_objective(bool phase1) const {
        double obj = 0.0;
        for (int i = 0; i < m_; ++i) {
            int j = basis_[static_cast<std::size_t>(i)];
            obj += (phase1 ? (j >= nr_ ? 1.0 : 0.0) : cost_(j)) * xb_(i);
        }
        if (!phase1) {
            for (int j = 0; j < nt_; ++j)
                if (state_[static_cast<std::size_t>(j)] != VarState::Basic)
                    obj += cost_(j) * nonbasic_value(j);
        }
        return obj;
    }

    Eigen::VectorXd dual_y(bool phase1) const {
        Eigen::VectorXd cb(m_);
        for (int i = 0; i < m_; ++i) {
            int j = basis_[static_cast<std::size_t>(i)];
            cb(i) = phase1 ? (j >= nr_ ? 1.0 : 0.0) : cost_(j);
        }
        return binv_.transpose() * cb;
    }

    double var_cost(int j, bool phase1) const {
        return phase1 ? (j >= nr_ ? 1.0 : 0.0) : cost_(j);
    }

    SolveStatus iterate(bool phase1) {
        const double dtol = opts_.opt_tol * c_scale_;
        while (iters_ < opts_.max_iter) {
            Eigen::VectorXd y = dual_y(phase1);

            int enter = -1;
            int dir = 0;
            double best = dtol;
            for (int j = 0; j < nr_; ++j) { // artificials never (re-)enter
                VarState st = state_[static_cast<std::size_t>(j)];
                if (st == VarState::Basic) continue;
                if (lb_(j) == ub_(j)) continue; // fixed variable
                double d = var_cost(j, phase1) - y.dot(a_.col(j));
                int cand_dir = 0;
                double viol = 0.0;
                if (st == VarState::AtLower && d < -dtol) { cand_dir = +1; viol = -d; }
                else if (st == VarState::AtUpper && d > dtol) { cand_dir = -1; viol = d; }
                else if (st == VarState::Free && std::abs(d) > dtol) { cand_dir = d < 0 ? +1 : -1; viol = std::abs(d); }
                if (cand_dir == 0) continue;
                if (bland_) { enter = j; dir = cand_dir; break; }
                if (viol > best) { best = viol; enter = j; dir = cand_dir; }
            }
            if (enter < 0) return SolveStatus::Optimal;

            Eigen::VectorXd w = binv_ * a_.col(enter);

            // Ratio test: largest step t >= 0 for the entering variable.  The
            // step is capped by the entering variable's own range (bound flip)
            // and by the first basic variable driven to one of its bounds.
            const double t_own = ub_(enter) - lb_(enter); // inf unless boxed
            double t_best = kInf;
            int leave_row = -1;
            double leave_pivot = 0.0;
            bool leave_to_upper = false;
            for (int i = 0; i < m_; ++i) {
                double wi = dir * w(i);
                int bj = basis_[static_cast<std::size_t>(i)];
                double t;
                bool to_upper;
                if (wi > opts_.pivot_tol) {
                    if (!std::isfinite(lb_(bj))) continue;
                    t = (xb_(i) - lb_(bj)) / wi;
                    to_upper = false;
                } else if (wi < -opts_.pivot_tol) {
                    if (!std::isfinite(ub_(bj))) continue;
                    t = (ub_(bj) - xb_(i)) / (-wi);
                    to_upper = true;
                } else {
                    continue;
                }
                if (t < 0.0) t = 0.0; // tiny infeasibility from roundoff
                bool take;
                if (leave_row < 0) take = true;
                else if (t < t_best - 1e-12) take = true;
                else if (t > t_best + 1e-12) take = false;
                else if (bland_) take = bj < basis_[static_cast<std::size_t>(leave_row)];
                else take = std::abs(w(i)) > std::abs(leave_pivot);
                if (take) {
                    t_best = t;
                    leave_row = i;
                    leave_pivot = w(i);
                    leave_to_upper = to_upper;
                }
            }

            double t_step = std::min(t_own, t_best);
            if (!std::isfinite(t_step))
                return SolveStatus::Unbounded;

            ++iters_;
            if (t_step < 1e-10) {
                if (++degen_count_ >= opts_.degenerate_switch && !bland_) {
                    bland_ = true;
                    log_debug("lp: switching to Bland's rule after ", degen_count_,
                              " degenerate pivots (iter ", iters_, ")");
                }
            } else {
                degen_count_ = 0;
            }

            if (t_own <= t_best) {
                // Bound flip: entering variable crosses to its other bound.
                xb_ -= (dir * t_own) * w;
                state_[static_cast<std::size_t>(enter)] =
                    dir > 0 ? VarState::AtUpper : VarState::AtLower;
                continue;
            }

            pivot(enter, dir, leave_row, t_step, w, leave_to_upper);
        }
        return SolveStatus::IterLimit;
    }

    void pivot(int enter, int dir, int row, double t, const Eigen::VectorXd& w, bool to_upper) {
        int leave = basis_[static_cast<std::size_t>(row)];
        double enter_val = nonbasic_value(enter) + dir * t;

        xb_ -= (dir * t) * w;
        xb_(row) = enter_val;
        state_[static_cast<std::size_t>(leave)] = to_upper ? VarState::AtUpper : VarState::AtLower;
        state_[static_cast<std::size_t>(enter)] = VarState::Basic;
        basis_[static_cast<std::size_t>(row)] = enter;

        // Eta update of the inverse.
        double p = w(row);
        binv_.row(row) /= p;
        for (int i = 0; i < m_; ++i) {
            if (i == row) continue;
            double f = w(i);
            if (f != 0.0) binv_.row(i) -= f * binv_.row(row);
        }

        if (++pivots_since_refactor_ >= opts_.refactor_every) refactor();
    }

    void refactor() {
        pivots_since_refactor_ = 0;
        Eigen::MatrixXd bmat(m_, m_);
        for (int i = 0; i < m_; ++i) bmat.col(i) = column(basis_[static_cast<std::size_t>(i)]);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(bmat);
        binv_ = lu.inverse();
        // Recompute basic values from nonbasic ones to shed accumulated drift.
        Eigen::VectorXd rn = rhs_;
        for (int j = 0; j < nt_; ++j) {
            if (state_[static_cast<std::size_t>(j)] == VarState::Basic) continue;
            double v = nonbasic_value(j);
            if (v != 0.0) rn -= column(j) * v;
        }
        xb_ = binv_ * rn;
    }

    void drive_out_artificials() {
        for (int i = 0; i < m_; ++i) {
            int bj = basis_[static_cast<std::size_t>(i)];
            if (bj < nr_) continue;
            // Find a real nonbasic column with a usable pivot in this row.
            Eigen::VectorXd row = binv_.row(i) * a_;
            int enter = -1;
            double best = opts_.pivot_tol * 10.0;
            for (int j = 0; j < nr_; ++j) {
                if (state_[static_cast<std::size_t>(j)] == VarState::Basic) continue;
                if (lb_(j) == ub_(j)) continue;
                if (std::abs(row(j)) > best) { best = std::abs(row(j)); enter = j; }
            }
            if (enter < 0) continue; // redundant row; artificial stays basic at 0
            Eigen::VectorXd w = binv_ * column(enter);
            pivot(enter, +1, i, 0.0, w, false);
        }
    }

    void extract_duals(LpSolution& out) const {
        Eigen::VectorXd y = dual_y(/*phase1=*/false);
        // Lagrangian convention: flip the simplex sign.
        out.y_eq = -y.head(me_);
        out.y_ub = -y.tail(mu_);
        for (int i = 0; i < mu_; ++i)
            if (out.y_ub(i) < 0.0) out.y_ub(i) = std::max(out.y_ub(i), 0.0); // clip roundoff

        out.reduced_costs.resize(ns_);
        double g = 0.0;
        if (me_ > 0) g -= out.y_eq.dot(rhs_.head(me_));
        if (mu_ > 0) g -= out.y_ub.dot(rhs_.tail(mu_));
        for (int j = 0; j < ns_; ++j) {
            double d = cost_(j) - y.dot(a_.col(j));
            out.reduced_costs(j) = d;
            if (d > 0.0 && std::isfinite(lb_(j))) g += d * lb_(j);
            else if (d < 0.0 && std::isfinite(ub_(j))) g += d * ub_(j);
        }
        // Slack reduced costs are y_ub entries with lower bound 0: no term.
        out.dual_objective = g;
    }

    SimplexOptions opts_;
    int ns_ = 0, me_ = 0, mu_ = 0, m_ = 0, nr_ = 0, nt_ = 0;
    Eigen::MatrixXd a_;
    Eigen::VectorXd rhs_, lb_, ub_, cost_;
    double c_scale_ = 1.0;

    std::vector<VarState> state_;
    std::vector<int> basis_;
    std::vector<double> art_sign_;
    Eigen::MatrixXd binv_;
    Eigen::VectorXd xb_;
    bool phase1_ = true;
    bool bland_ = false;
    int degen_count_ = 0;
    int pivots_since_refactor_ = 0;
    long iters_ = 0;
};

} // namespace

LpSolution solve_lp(const LpProblem& prob, const SimplexOptions& opts) {
    prob.validate();
    Simplex s(prob, opts);
    return s.run();
}

} // namespace lrshield
