#pragma once

#include <limits>
#include <string>

#include <Eigen/Dense>

namespace lrshield {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// min  c'x
// s.t. a_eq x == b_eq
//      a_ub x <= b_ub
//      lb <= x <= ub   (entries may be +-inf)
struct LpProblem {
    Eigen::VectorXd c;
    Eigen::MatrixXd a_eq;
    Eigen::VectorXd b_eq;
    Eigen::MatrixXd a_ub;
    Eigen::VectorXd b_ub;
    Eigen::VectorXd lb;
    Eigen::VectorXd ub;

    int n() const { return static_cast<int>(c.size()); }
    int n_eq() const { return static_cast<int>(b_eq.size()); }
    int n_ub() const { return static_cast<int>(b_ub.size()); }

    // Throws ValidationError on inconsistent dimensions or lb > ub.
    void validate() const;

    static LpProblem make(int n_vars);
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterLimit, NodeLimit };

std::string to_string(SolveStatus s);

struct LpSolution {
    SolveStatus status = SolveStatus::IterLimit;
    Eigen::VectorXd x;
    double objective = std::numeric_limits<double>::quiet_NaN();

    // Multipliers in the convention  d = c + a_eq'y_eq + a_ub'y_ub  with
    // y_ub >= 0, d_j >= 0 where x_j sits at its lower bound and d_j <= 0 at
    // its upper bound.  Only populated when status == Optimal.
    Eigen::VectorXd y_eq;
    Eigen::VectorXd y_ub;
    Eigen::VectorXd reduced_costs;
    double dual_objective = std::numeric_limits<double>::quiet_NaN();

    long iterations = 0;
};

struct SimplexOptions {
    double pivot_tol = 1e-9;   // reject smaller pivot elements
    double opt_tol = 1e-9;     // dual feasibility tolerance (scaled by max |c|)
    double feas_tol = 1e-7;    // phase-1 residual considered feasible
    long max_iter = 200000;    // per phase
    int refactor_every = 100;  // rebuild basis inverse this often
    int degenerate_switch = 200; // consecutive degenerate pivots before Bland's rule
};

LpSolution solve_lp(const LpProblem& prob, const SimplexOptions& opts = {});

} // namespace lrshield
