#include "lrshield/dcopf.hpp"

#include <algorithm>
#include <cmath>

#include "lrshield/errors.hpp"
#include "lrshield/thread_pool.hpp"

namespace lrshield {

Dispatch solve_dcopf(const Grid& grid, const Eigen::VectorXd& loads_mw,
                     const Eigen::VectorXd* attack_c) {
    const NetworkModel& net = grid.net;
    const int ng = net.n_gen();
    const int nl = net.n_line();

    Eigen::VectorXd p_bus = net.loads_to_buses(loads_mw);
    Eigen::VectorXd offset = -grid.ptdf * p_bus; // flow at G = 0
    if (attack_c) {
        if (attack_c->size() != net.n_bus)
            throw ValidationError("dcopf: attack vector must have one entry per bus");
        offset += grid.ptdf * (grid.b * (*attack_c));
    }

    // F maps generator outputs to line flows.
    Eigen::MatrixXd f(nl, ng);
    for (int g = 0; g < ng; ++g)
        f.col(g) = grid.ptdf.col(net.generators[static_cast<std::size_t>(g)].bus);

    LpProblem lp = LpProblem::make(ng);
    for (int g = 0; g < ng; ++g) {
        const Generator& gen = net.generators[static_cast<std::size_t>(g)];
        lp.c(g) = gen.cost;
        lp.lb(g) = gen.gmin_mw;
        lp.ub(g) = gen.gmax_mw;
    }
    lp.a_eq = Eigen::MatrixXd::Ones(1, ng);
    lp.b_eq = Eigen::VectorXd::Constant(1, loads_mw.sum());
    lp.a_ub.resize(2 * nl, ng);
    lp.b_ub.resize(2 * nl);
    for (int l = 0; l < nl; ++l) {
        double rating = net.lines[static_cast<std::size_t>(l)].rating_mw;
        lp.a_ub.row(l) = f.row(l);
        lp.b_ub(l) = rating - offset(l);
        lp.a_ub.row(nl + l) = -f.row(l);
        lp.b_ub(nl + l) = rating + offset(l);
    }

    LpSolution sol = solve_lp(lp);
    Dispatch out;
    out.status = sol.status;
    if (sol.status != SolveStatus::Optimal) return out;
    out.g_mw = sol.x;
    out.cost = sol.objective;
    out.line_flow_mw = f * sol.x + offset;
    out.duality_gap = std::abs(sol.objective - sol.dual_objective);
    if (out.duality_gap > 1e-6 * (1.0 + std::abs(sol.objective)))
        throw NumericalError("dcopf: duality gap " + std::to_string(out.duality_gap) +
                             " exceeds tolerance");
    return out;
}

Eigen::VectorXd evaluate_flows(const Grid& grid, const Eigen::VectorXd& g_mw,
                               const Eigen::VectorXd& true_loads_mw) {
    Eigen::VectorXd injection = grid.net.gens_to_buses(g_mw) - grid.net.loads_to_buses(true_loads_mw);
    return grid.ptdf * injection;
}

CriticalHoursResult critical_hours(const Grid& grid,
                                   const std::vector<Eigen::VectorXd>& hourly_loads_mw,
                                   double frac, int min_lines, int jobs) {
    if (!(frac > 0.0))
        throw ValidationError("critical_hours: threshold fraction must be positive");
    if (min_lines < 1)
        throw ValidationError("critical_hours: min_lines must be >= 1");

    const int nl = grid.net.n_line();
    const std::size_t n = hourly_loads_mw.size();
    std::vector<int> status(n, 0); // 0 normal, 1 critical, -1 infeasible
    std::vector<CriticalHour> info(n);

    parallel_for(n, jobs, [&](std::size_t h) {
        Dispatch d = solve_dcopf(grid, hourly_loads_mw[h]);
        if (d.status != SolveStatus::Optimal) {
            status[h] = -1;
            return;
        }
        std::vector<std::pair<double, int>> loaded;
        for (int l = 0; l < nl; ++l) {
            double ratio = std::abs(d.line_flow_mw(l)) /
                           grid.net.lines[static_cast<std::size_t>(l)].rating_mw;
            if (ratio > frac) loaded.emplace_back(ratio, l);
        }
        if (static_cast<int>(loaded.size()) >= min_lines) {
            std::sort(loaded.begin(), loaded.end(), [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second < b.second;
            });
            CriticalHour ch;
            ch.hour = static_cast<int>(h);
            ch.max_ratio = loaded.front().first;
            for (auto& [ratio, l] : loaded) ch.lines.push_back(l);
            info[h] = std::move(ch);
            status[h] = 1;
        }
    });

    CriticalHoursResult out;
    for (std::size_t h = 0; h < n; ++h) {
        if (status[h] == 1) out.hours.push_back(std::move(info[h]));
        else if (status[h] == -1) out.infeasible_hours.push_back(static_cast<int>(h));
    }
    return out;
}

} // namespace lrshield
