#include "lrshield/milp.hpp"

#include <cmath>
#include <memory>
#include <queue>

#include "lrshield/errors.hpp"
#include "lrshield/logging.hpp"

namespace lrshield {

namespace {

struct Node {
    // (variable, value) fixings along the path from the root.
    std::vector<std::pair<int, int>> fixings;
    double bound = -kInf;
    long id = 0;
};

struct NodeOrder {
    bool operator()(const std::shared_ptr<Node>& a, const std::shared_ptr<Node>& b) const {
        if (a->bound != b->bound) return a->bound > b->bound; // min-heap on bound
        return a->id > b->id;                                  // then FIFO
    }
};

} // namespace

MilpSolution solve_milp(const MilpProblem& prob, const MilpOptions& opts) {
    prob.lp.validate();
    for (int j : prob.binaries) {
        if (j < 0 || j >= prob.lp.n())
            throw ValidationError("milp: binary index " + std::to_string(j) + " out of range");
        if (prob.lp.lb(j) < -opts.int_tol || prob.lp.ub(j) > 1.0 + opts.int_tol)
            throw ValidationError("milp: binary variable " + std::to_string(j) +
                                  " must have bounds within [0,1]");
    }

    MilpSolution out;
    double incumbent = kInf;
    Eigen::VectorXd incumbent_x;

    std::priority_queue<std::shared_ptr<Node>, std::vector<std::shared_ptr<Node>>, NodeOrder> open;
    long next_id = 0;

    auto solve_node = [&](const Node& node) -> LpSolution {
        LpProblem lp = prob.lp;
        for (auto [var, val] : node.fixings) {
            lp.lb(var) = static_cast<double>(val);
            lp.ub(var) = static_cast<double>(val);
        }
        LpSolution sol = solve_lp(lp, opts.simplex);
        if (sol.status == SolveStatus::IterLimit)
            throw NumericalError("milp: node LP hit the simplex iteration limit");
        if (sol.status == SolveStatus::Unbounded)
            throw NumericalError("milp: node LP relaxation is unbounded");
        return sol;
    };

    auto gap_tol = [&](double inc) { return opts.gap * std::max(1.0, std::abs(inc)); };

    {
        auto root = std::make_shared<Node>();
        root->id = next_id++;
        root->bound = -kInf;
        open.push(root);
    }

    while (!open.empty()) {
        auto node = open.top();
        // Parent bounds are valid for children: prune before solving.
        if (node->bound > incumbent - gap_tol(incumbent) && std::isfinite(incumbent)) break;
        open.pop();

        if (out.nodes >= opts.node_limit) {
            out.status = SolveStatus::NodeLimit;
            out.best_bound = std::min(node->bound, incumbent);
            if (std::isfinite(incumbent)) {
                out.x = incumbent_x;
                out.objective = incumbent;
            }
            log_warn("milp: node limit ", opts.node_limit, " reached, gap ",
                     std::isfinite(incumbent) ? incumbent - out.best_bound : kInf);
            return out;
        }

        LpSolution rel = solve_node(*node);
        ++out.nodes;
        if (rel.status == SolveStatus::Infeasible) continue;
        if (rel.objective > incumbent - gap_tol(incumbent)) continue;

        // Most fractional binary; ties go to the lowest index.
        int branch_var = -1;
        double best_frac_score = kInf;
        for (int j : prob.binaries) {
            double v = rel.x(j);
            double frac = v - std::floor(v);
            double dist = std::abs(frac - 0.5);
            if (std::min(frac, 1.0 - frac) <= opts.int_tol) continue;
            if (dist < best_frac_score - 1e-12) {
                best_frac_score = dist;
                branch_var = j;
            }
        }

        if (branch_var < 0) {
            // Integral: candidate incumbent.
            if (rel.objective < incumbent) {
                incumbent = rel.objective;
                incumbent_x = rel.x;
                for (int j : prob.binaries) incumbent_x(j) = std::round(incumbent_x(j));
            }
            continue;
        }

        for (int val : {0, 1}) {
            auto child = std::make_shared<Node>();
            child->fixings = node->fixings;
            child->fixings.emplace_back(branch_var, val);
            child->bound = rel.objective;
            child->id = next_id++;
            open.push(child);
        }
    }

    if (!std::isfinite(incumbent)) {
        out.status = SolveStatus::Infeasible;
        return out;
    }
    out.status = SolveStatus::Optimal;
    out.x = incumbent_x;
    out.objective = incumbent;
    out.best_bound = open.empty() ? incumbent : std::min(incumbent, open.top()->bound);
    return out;
}

} // namespace lrshield
