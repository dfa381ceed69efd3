#pragma once

#include <vector>

#include "lrshield/grid.hpp"
#include "lrshield/lp.hpp"

namespace lrshield {

struct Dispatch {
    SolveStatus status = SolveStatus::Infeasible;
    Eigen::VectorXd g_mw;           // per generator
    Eigen::VectorXd line_flow_mw;   // flows seen by the operator (cyber view)
    double cost = std::numeric_limits<double>::quiet_NaN();
    double duality_gap = std::numeric_limits<double>::quiet_NaN();
};

// Economic dispatch under the DC approximation:
//   min  cost' G
//   s.t. sum(G) = sum(loads),  |R (G_bus - P_bus + B c)| <= rating,
//        gmin <= G <= gmax.
// `attack_c` (bus phantom-injection vector, slack entry ignored via B) shifts
// the loads the operator believes in; pass nullptr for the true-load dispatch.
Dispatch solve_dcopf(const Grid& grid, const Eigen::VectorXd& loads_mw,
                     const Eigen::VectorXd* attack_c = nullptr);

// Physical line flows when dispatch g_mw meets the true loads.
Eigen::VectorXd evaluate_flows(const Grid& grid, const Eigen::VectorXd& g_mw,
                               const Eigen::VectorXd& true_loads_mw);

struct CriticalHour {
    int hour = 0;                 // caller-provided index
    std::vector<int> lines;      // loading above threshold, most loaded first
    double max_ratio = 0.0;
};

struct CriticalHoursResult {
    std::vector<CriticalHour> hours;
    std::vector<int> infeasible_hours; // skipped (reported, not fatal)
};

// Scans hourly load vectors, dispatches each, and flags hours where at least
// `min_lines` lines are loaded strictly above `frac` of their rating.
CriticalHoursResult critical_hours(const Grid& grid,
                                   const std::vector<Eigen::VectorXd>& hourly_loads_mw,
                                   double frac, int min_lines, int jobs = 1);

} // namespace lrshield
