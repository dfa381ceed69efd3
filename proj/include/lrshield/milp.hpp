#pragma once

#include <vector>

#include "lrshield/lp.hpp"

namespace lrshield {

// Mixed-integer LP: the listed variables are restricted to {0, 1}.  Bounds in
// `lp` must already contain them in [0, 1] (tightened per node by the tree).
struct MilpProblem {
    LpProblem lp;
    std::vector<int> binaries;
};

struct MilpOptions {
    double int_tol = 1e-6;      // |x - round(x)| below this counts as integral
    double gap = 1e-6;          // absolute + relative optimality gap
    long node_limit = 200000;   // LP relaxations solved
    SimplexOptions simplex;
};

struct MilpSolution {
    SolveStatus status = SolveStatus::Infeasible;
    Eigen::VectorXd x;          // incumbent (empty if none found)
    double objective = std::numeric_limits<double>::quiet_NaN();
    double best_bound = -std::numeric_limits<double>::infinity();
    long nodes = 0;
};

// Best-first branch and bound; branches on the most fractional binary
// (lowest index on ties).  Returns status NodeLimit with the incumbent when
// the node budget runs out before the gap closes.
MilpSolution solve_milp(const MilpProblem& prob, const MilpOptions& opts = {});

} // namespace lrshield
