#include "lrshield/attack.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lrshield/errors.hpp"
#include "lrshield/io_util.hpp"
#include "lrshield/logging.hpp"
#include "lrshield/psd.hpp"
#include "lrshield/thread_pool.hpp"

namespace lrshield {

std::string to_string(AttackKind k) {
    switch (k) {
        case AttackKind::Random: return "random";
        case AttackKind::CostMax: return "cm";
        case AttackKind::LineOverflow: return "lo";
    }
    return "?";
}

AttackKind attack_kind_from_string(const std::string& s) {
    if (s == "random") return AttackKind::Random;
    if (s == "cm") return AttackKind::CostMax;
    if (s == "lo") return AttackKind::LineOverflow;
    throw ParseError("unknown attack kind '" + s + "'");
}

double load_shift(const Eigen::VectorXd& p, const Eigen::VectorXd& delta) {
    if (p.size() != delta.size())
        throw ValidationError("load_shift: dimension mismatch");
    double tau = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (!(p(i) > 0.0))
            throw ValidationError("load_shift: load " + std::to_string(i) + " is not positive");
        tau = std::max(tau, std::abs(delta(i)) / p(i));
    }
    return tau;
}

Eigen::VectorXd apply_attack_vector(const Grid& grid, const Eigen::VectorXd& c,
                                    const Eigen::VectorXd& loads_mw) {
    const NetworkModel& net = grid.net;
    if (c.size() != net.n_bus)
        throw ValidationError("apply_attack_vector: c must have one entry per bus");
    if (loads_mw.size() != net.n_load())
        throw ValidationError("apply_attack_vector: loads size mismatch");
    Eigen::VectorXd bc = grid.b * c;
    double scale = std::max(1.0, bc.cwiseAbs().maxCoeff());
    std::vector<bool> is_load(static_cast<std::size_t>(net.n_bus), false);
    for (int b : net.load_buses) is_load[static_cast<std::size_t>(b)] = true;
    for (int b = 0; b < net.n_bus; ++b) {
        if (!is_load[static_cast<std::size_t>(b)] && std::abs(bc(b)) > 1e-7 * scale)
            throw ValidationError("apply_attack_vector: attack injects " + std::to_string(bc(b)) +
                                  " MW at non-load bus " + std::to_string(b + 1));
    }
    Eigen::VectorXd delta(net.n_load());
    for (int i = 0; i < net.n_load(); ++i)
        delta(i) = -bc(net.load_buses[static_cast<std::size_t>(i)]);
    return delta;
}

Eigen::VectorXd recover_attack_vector(const Grid& grid, const Eigen::VectorXd& delta_p) {
    const NetworkModel& net = grid.net;
    if (delta_p.size() != net.n_load())
        throw ValidationError("recover_attack_vector: delta size mismatch");
    double total = delta_p.sum();
    if (std::abs(total) > 1e-6 * (1.0 + delta_p.cwiseAbs().maxCoeff()))
        throw ValidationError("recover_attack_vector: delta_p sums to " + std::to_string(total) +
                              ", expected 0");
    // Solve B c = -delta_bus with the slack entry pinned to zero; the reduced
    // susceptance block is positive definite for a connected network.
    Eigen::VectorXd rhs_bus = -net.loads_to_buses(delta_p);
    const int n = net.n_bus;
    const int s = net.slack_bus;
    std::vector<int> keep;
    keep.reserve(static_cast<std::size_t>(n - 1));
    for (int i = 0; i < n; ++i)
        if (i != s) keep.push_back(i);
    Eigen::MatrixXd b_red(n - 1, n - 1);
    Eigen::VectorXd rhs_red(n - 1);
    for (int i = 0; i < n - 1; ++i) {
        rhs_red(i) = rhs_bus(keep[static_cast<std::size_t>(i)]);
        for (int j = 0; j < n - 1; ++j)
            b_red(i, j) = grid.b(keep[static_cast<std::size_t>(i)], keep[static_cast<std::size_t>(j)]);
    }
    Eigen::VectorXd c_red = Eigen::LLT<Eigen::MatrixXd>(b_red).solve(rhs_red);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n - 1; ++i) c(keep[static_cast<std::size_t>(i)]) = c_red(i);
    return c;
}

AttackScenario random_lr_attack(const Grid& grid, const Eigen::VectorXd& loads_mw, int k,
                                double tau, Rng& rng, const RandomAttackOptions& opts) {
    const int nl = grid.net.n_load();
    if (k < 2 || k > nl)
        throw ValidationError("random_lr_attack: k must be in [2, " + std::to_string(nl) + "]");
    if (!(tau > 0.0))
        throw ValidationError("random_lr_attack: tau must be positive");
    for (Eigen::Index i = 0; i < loads_mw.size(); ++i)
        if (!(loads_mw(i) > 0.0))
            throw ValidationError("random_lr_attack: loads must be strictly positive");

    std::vector<int> all(static_cast<std::size_t>(nl));
    std::iota(all.begin(), all.end(), 0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    int redraws = 0;
    while (redraws <= opts.max_redraws) {
        // Choose k distinct loads (partial Fisher-Yates), keep them sorted.
        std::vector<int> pool = all;
        for (int i = 0; i < k; ++i) {
            std::uniform_int_distribution<int> pick(i, nl - 1);
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
        }
        std::vector<int> sel(pool.begin(), pool.begin() + k);
        std::sort(sel.begin(), sel.end());

        // Dispersion scales with the budget: sigma_k = tau * p_k / 2, so about
        // 95% of marginal draws respect the per-load bound.
        Eigen::VectorXd sigma(k);
        for (int i = 0; i < k; ++i) sigma(i) = 0.5 * tau * loads_mw(sel[static_cast<std::size_t>(i)]);
        ConstrainedPsdOptions popts;
        popts.tol = opts.psd_tol;
        ConstrainedPsdResult cov = constrained_psd(sigma.array().square(), popts);
        if (!cov.feasible) {
            ++redraws; // a dominating load makes zero-sum impossible; new subset
            continue;
        }

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov.gamma);
        Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(0.0);
        Eigen::MatrixXd l = eig.eigenvectors() * lam.cwiseSqrt().asDiagonal();

        while (redraws <= opts.max_redraws) {
            Eigen::VectorXd z(k);
            for (int i = 0; i < k; ++i) z(i) = gauss(rng);
            Eigen::VectorXd gamma = l * z;
            gamma.array() -= gamma.mean(); // exact zero-sum (covariance holds it within tol)
            ++redraws;
            Eigen::VectorXd p_sel(k);
            for (int i = 0; i < k; ++i) p_sel(i) = loads_mw(sel[static_cast<std::size_t>(i)]);
            double tau_r = load_shift(p_sel, gamma);
            if (tau_r > tau || tau_r <= 0.0) continue;

            AttackScenario sc;
            sc.kind = AttackKind::Random;
            sc.tau_requested = tau;
            sc.tau_real = tau_r;
            sc.attacked_loads = sel;
            sc.delta_p = Eigen::VectorXd::Zero(nl);
            for (int i = 0; i < k; ++i) sc.delta_p(sel[static_cast<std::size_t>(i)]) = gamma(i);
            sc.p_atk = loads_mw + sc.delta_p;
            sc.c = recover_attack_vector(grid, sc.delta_p);
            return sc;
        }
    }
    throw NumericalError("random_lr_attack: no feasible draw within " +
                         std::to_string(opts.max_redraws) + " redraws (k=" + std::to_string(k) +
                         ", tau=" + std::to_string(tau) + ")");
}

namespace {

// KKT reformulation of the operator's dispatch for falsified loads
// p_obs = p - d, with the attacker choosing |d_i| <= tau * p_i, sum(d) = 0.
// Lower-level primal: min a'G  s.t. sum(G)=sum(p), |F G + RL d + base| <= rating,
// gmin <= G <= gmax.  Complementarity is linearized with big-M binaries; line
// constraints that interval analysis proves slack for every admissible (G, d)
// are dropped along with their multipliers.
struct KktBuild {
    MilpProblem prob;
    std::vector<int> active;   // line indices with retained flow constraints
    int off_d = 0, off_g = 0, off_lam = 0, off_mu = 0, off_nu = 0;
    int off_z_mu = 0, off_z_nu = 0;
    Eigen::MatrixXd f;         // n_line x ng
    Eigen::VectorXd base;      // n_line
};

KktBuild build_kkt_milp(const Grid& grid, const Eigen::VectorXd& loads_mw, double tau,
                        double m_dual) {
    const NetworkModel& net = grid.net;
    const int nl = net.n_load();
    const int ng = net.n_gen();
    const int nline = net.n_line();

    KktBuild kb;
    kb.f.resize(nline, ng);
    for (int g = 0; g < ng; ++g)
        kb.f.col(g) = grid.ptdf.col(net.generators[static_cast<std::size_t>(g)].bus);
    kb.base = -grid.ptdf * net.loads_to_buses(loads_mw);

    Eigen::MatrixXd rl(nline, nl); // PTDF columns at the load buses
    for (int i = 0; i < nl; ++i)
        rl.col(i) = grid.ptdf.col(net.load_buses[static_cast<std::size_t>(i)]);

    // Interval ranges of the observed flow over the (G, d) box.
    Eigen::VectorXd flow_lo(nline), flow_hi(nline);
    for (int l = 0; l < nline; ++l) {
        double lo = kb.base(l), hi = kb.base(l);
        for (int g = 0; g < ng; ++g) {
            const Generator& gen = net.generators[static_cast<std::size_t>(g)];
            lo += std::min(kb.f(l, g) * gen.gmin_mw, kb.f(l, g) * gen.gmax_mw);
            hi += std::max(kb.f(l, g) * gen.gmin_mw, kb.f(l, g) * gen.gmax_mw);
        }
        double d_reach = 0.0;
        for (int i = 0; i < nl; ++i) d_reach += std::abs(rl(l, i)) * tau * loads_mw(i);
        flow_lo(l) = lo - d_reach;
        flow_hi(l) = hi + d_reach;
    }
    for (int l = 0; l < nline; ++l) {
        double rating = net.lines[static_cast<std::size_t>(l)].rating_mw;
        double eps = 1e-7 * (1.0 + rating);
        if (flow_hi(l) >= rating - eps || flow_lo(l) <= -rating + eps)
            kb.active.push_back(l);
    }
    const int na = static_cast<int>(kb.active.size());

    kb.off_d = 0;
    kb.off_g = nl;
    kb.off_lam = kb.off_g + ng;
    kb.off_mu = kb.off_lam + 1;
    kb.off_nu = kb.off_mu + 2 * na;
    kb.off_z_mu = kb.off_nu + 2 * ng;
    kb.off_z_nu = kb.off_z_mu + 2 * na;
    const int nv = kb.off_z_nu + 2 * ng;

    LpProblem lp = LpProblem::make(nv);
    for (int i = 0; i < nl; ++i) {
        lp.lb(i) = -tau * loads_mw(i);
        lp.ub(i) = tau * loads_mw(i);
    }
    for (int g = 0; g < ng; ++g) {
        const Generator& gen = net.generators[static_cast<std::size_t>(g)];
        lp.lb(kb.off_g + g) = gen.gmin_mw;
        lp.ub(kb.off_g + g) = gen.gmax_mw;
    }
    // lambda stays free
    for (int j = 0; j < 2 * na; ++j) { lp.lb(kb.off_mu + j) = 0.0; lp.ub(kb.off_mu + j) = m_dual; }
    for (int j = 0; j < 2 * ng; ++j) { lp.lb(kb.off_nu + j) = 0.0; lp.ub(kb.off_nu + j) = m_dual; }
    for (int j = 0; j < 2 * na; ++j) { lp.lb(kb.off_z_mu + j) = 0.0; lp.ub(kb.off_z_mu + j) = 1.0; }
    for (int j = 0; j < 2 * ng; ++j) { lp.lb(kb.off_z_nu + j) = 0.0; lp.ub(kb.off_z_nu + j) = 1.0; }

    const int n_eq = 2 + ng;
    lp.a_eq = Eigen::MatrixXd::Zero(n_eq, nv);
    lp.b_eq = Eigen::VectorXd::Zero(n_eq);
    for (int i = 0; i < nl; ++i) lp.a_eq(0, i) = 1.0;          // sum d = 0
    for (int g = 0; g < ng; ++g) lp.a_eq(1, kb.off_g + g) = 1.0; // balance
    lp.b_eq(1) = loads_mw.sum();
    for (int g = 0; g < ng; ++g) {
        int r = 2 + g;
        lp.a_eq(r, kb.off_lam) = 1.0;
        for (int a = 0; a < na; ++a) {
            int l = kb.active[static_cast<std::size_t>(a)];
            lp.a_eq(r, kb.off_mu + 2 * a) = kb.f(l, g);
            lp.a_eq(r, kb.off_mu + 2 * a + 1) = -kb.f(l, g);
        }
        lp.a_eq(r, kb.off_nu + 2 * g) = 1.0;
        lp.a_eq(r, kb.off_nu + 2 * g + 1) = -1.0;
        lp.b_eq(r) = -net.generators[static_cast<std::size_t>(g)].cost;
    }

    const int n_ub = 6 * na + 4 * ng;
    lp.a_ub = Eigen::MatrixXd::Zero(n_ub, nv);
    lp.b_ub = Eigen::VectorXd::Zero(n_ub);
    int r = 0;
    for (int a = 0; a < na; ++a) {
        int l = kb.active[static_cast<std::size_t>(a)];
        double rating = net.lines[static_cast<std::size_t>(l)].rating_mw;
        double pad = 1e-6 * (1.0 + rating);
        double ms_up = std::max(0.0, rating - flow_lo(l)) + pad;  // range of the upper slack
        double ms_dn = std::max(0.0, rating + flow_hi(l)) + pad;  // range of the lower slack

        // observed flow <= rating
        for (int g = 0; g < ng; ++g) lp.a_ub(r, kb.off_g + g) = kb.f(l, g);
        for (int i = 0; i < nl; ++i) lp.a_ub(r, i) = rl(l, i);
        lp.b_ub(r) = rating - kb.base(l);
        ++r;
        // observed flow >= -rating
        for (int g = 0; g < ng; ++g) lp.a_ub(r, kb.off_g + g) = -kb.f(l, g);
        for (int i = 0; i < nl; ++i) lp.a_ub(r, i) = -rl(l, i);
        lp.b_ub(r) = rating + kb.base(l);
        ++r;
        // mu+ <= M z+
        lp.a_ub(r, kb.off_mu + 2 * a) = 1.0;
        lp.a_ub(r, kb.off_z_mu + 2 * a) = -m_dual;
        lp.b_ub(r) = 0.0;
        ++r;
        // upper slack <= Ms (1 - z+)
        for (int g = 0; g < ng; ++g) lp.a_ub(r, kb.off_g + g) = -kb.f(l, g);
        for (int i = 0; i < nl; ++i) lp.a_ub(r, i) = -rl(l, i);
        lp.a_ub(r, kb.off_z_mu + 2 * a) = ms_up;
        lp.b_ub(r) = ms_up - rating + kb.base(l);
        ++r;
        // mu- <= M z-
        lp.a_ub(r, kb.off_mu + 2 * a + 1) = 1.0;
        lp.a_ub(r, kb.off_z_mu + 2 * a + 1) = -m_dual;
        lp.b_ub(r) = 0.0;
        ++r;
        // lower slack <= Ms (1 - z-)
        for (int g = 0; g < ng; ++g) lp.a_ub(r, kb.off_g + g) = kb.f(l, g);
        for (int i = 0; i < nl; ++i) lp.a_ub(r, i) = rl(l, i);
        lp.a_ub(r, kb.off_z_mu + 2 * a + 1) = ms_dn;
        lp.b_ub(r) = ms_dn - rating - kb.base(l);
        ++r;
    }
    for (int g = 0; g < ng; ++g) {
        const Generator& gen = net.generators[static_cast<std::size_t>(g)];
        double mg = std::max(gen.gmax_mw - gen.gmin_mw, 1e-9);
        // nu+ <= M z+
        lp.a_ub(r, kb.off_nu + 2 * g) = 1.0;
        lp.a_ub(r, kb.off_z_nu + 2 * g) = -m_dual;
        lp.b_ub(r) = 0.0;
        ++r;
        // gmax - G <= Mg (1 - z+)
        lp.a_ub(r, kb.off_g + g) = -1.0;
        lp.a_ub(r, kb.off_z_nu + 2 * g) = mg;
        lp.b_ub(r) = mg - gen.gmax_mw;
        ++r;
        // nu- <= M z-
        lp.a_ub(r, kb.off_nu + 2 * g + 1) = 1.0;
        lp.a_ub(r, kb.off_z_nu + 2 * g + 1) = -m_dual;
        lp.b_ub(r) = 0.0;
        ++r;
        // G - gmin <= Mg (1 - z-)
        lp.a_ub(r, kb.off_g + g) = 1.0;
        lp.a_ub(r, kb.off_z_nu + 2 * g + 1) = mg;
        lp.b_ub(r) = mg + gen.gmin_mw;
        ++r;
    }

    kb.prob.lp = std::move(lp);
    for (int j = 0; j < 2 * na; ++j) kb.prob.binaries.push_back(kb.off_z_mu + j);
    for (int j = 0; j < 2 * ng; ++j) kb.prob.binaries.push_back(kb.off_z_nu + j);
    return kb;
}

struct BilevelOutcome {
    bool ok = false;
    bool m_too_tight = false;
    Eigen::VectorXd x;
    double objective = 0.0; // attacker objective (maximized)
    bool proved_optimal = true;
};

BilevelOutcome solve_bilevel_once(const Grid& grid, const Eigen::VectorXd& loads_mw, double tau,
                                  double m_dual, const Eigen::VectorXd& upper_cost,
                                  const BilevelOptions& opts, KktBuild* kb_out) {
    KktBuild kb = build_kkt_milp(grid, loads_mw, tau, m_dual);
    kb.prob.lp.c = -upper_cost; // attacker maximizes
    MilpOptions mo;
    mo.gap = opts.milp_gap;
    mo.node_limit = opts.node_limit;
    MilpSolution sol = solve_milp(kb.prob, mo);

    BilevelOutcome out;
    if (sol.status == SolveStatus::Infeasible || sol.x.size() == 0) {
        out.m_too_tight = true; // a larger dual cap may open the KKT system up
        return out;
    }
    out.proved_optimal = sol.status == SolveStatus::Optimal;
    out.x = sol.x;
    out.objective = -sol.objective;

    // Retry indicator: some multiplier presses against the cap.
    const int ng = grid.net.n_gen();
    const int na = static_cast<int>(kb.active.size());
    for (int j = 0; j < 2 * na; ++j)
        if (sol.x(kb.off_mu + j) > m_dual * (1.0 - 1e-6)) out.m_too_tight = true;
    for (int j = 0; j < 2 * ng; ++j)
        if (sol.x(kb.off_nu + j) > m_dual * (1.0 - 1e-6)) out.m_too_tight = true;
    out.ok = true;
    if (kb_out) *kb_out = std::move(kb);
    return out;
}

AttackScenario finish_bilevel(const Grid& grid, const Eigen::VectorXd& loads_mw, double tau,
                              const KktBuild& kb, const Eigen::VectorXd& x,
                              const BilevelOptions& opts) {
    const int nl = grid.net.n_load();
    const int ng = grid.net.n_gen();
    AttackScenario sc;
    Eigen::VectorXd d = x.segment(kb.off_d, nl);
    sc.delta_p = -d; // observed load is p - d
    sc.p_atk = loads_mw + sc.delta_p;
    sc.tau_requested = tau;
    sc.tau_real = load_shift(loads_mw, sc.delta_p);
    sc.c = recover_attack_vector(grid, sc.delta_p);

    // Cross-check: the embedded dispatch must match an independent solve of the
    // operator's problem for the falsified loads (costs agree; the dispatch
    // itself may differ between optimal ties).
    Eigen::VectorXd g = x.segment(kb.off_g, ng);
    double cost_embedded = 0.0;
    for (int gi = 0; gi < ng; ++gi)
        cost_embedded += grid.net.generators[static_cast<std::size_t>(gi)].cost * g(gi);
    Dispatch check = solve_dcopf(grid, loads_mw, &sc.c);
    if (check.status != SolveStatus::Optimal)
        throw NumericalError("bilevel attack: cross-check dispatch infeasible");
    if (std::abs(check.cost - cost_embedded) > opts.verify_tol * (1.0 + std::abs(check.cost)))
        throw NumericalError("bilevel attack: embedded operator cost " +
                             std::to_string(cost_embedded) + " disagrees with dispatch cost " +
                             std::to_string(check.cost));
    return sc;
}

} // namespace

AttackScenario cm_attack(const Grid& grid, const Eigen::VectorXd& loads_mw, double tau,
                         const BilevelOptions& opts) {
    if (!(tau >= 0.0))
        throw ValidationError("cm_attack: tau must be non-negative");
    const int ng = grid.net.n_gen();
    const int nl = grid.net.n_load();

    double m_dual = opts.m_dual;
    std::string last_err;
    for (int attempt = 0; attempt <= opts.m_retries; ++attempt, m_dual *= 2.0) {
        KktBuild kb;
        // Upper objective: operator cost a'G.
        Eigen::VectorXd upper = Eigen::VectorXd::Zero(0);
        {
            KktBuild probe = build_kkt_milp(grid, loads_mw, tau, m_dual);
            upper = Eigen::VectorXd::Zero(probe.prob.lp.n());
            for (int g = 0; g < ng; ++g)
                upper(probe.off_g + g) = grid.net.generators[static_cast<std::size_t>(g)].cost;
        }
        BilevelOutcome res = solve_bilevel_once(grid, loads_mw, tau, m_dual, upper, opts, &kb);
        if (!res.ok || res.m_too_tight) {
            last_err = res.ok ? "dual cap binding" : "milp infeasible";
            continue;
        }
        try {
            AttackScenario sc = finish_bilevel(grid, loads_mw, tau, kb, res.x, opts);
            sc.kind = AttackKind::CostMax;
            sc.objective = res.objective;
            sc.proved_optimal = res.proved_optimal;
            for (int i = 0; i < nl; ++i)
                if (std::abs(sc.delta_p(i)) > 1e-9 * (1.0 + loads_mw(i))) sc.attacked_loads.push_back(i);
            return sc;
        } catch (const NumericalError& e) {
            last_err = e.what();
        }
    }
    throw NumericalError("cm_attack failed after retries: " + last_err);
}

AttackScenario lo_attack(const Grid& grid, const Eigen::VectorXd& loads_mw, double tau,
                         int line, const BilevelOptions& opts) {
    if (!(tau >= 0.0))
        throw ValidationError("lo_attack: tau must be non-negative");
    if (line < 0 || line >= grid.net.n_line())
        throw ValidationError("lo_attack: line index out of range");
    const int ng = grid.net.n_gen();
    const int nl = grid.net.n_load();

    double m_dual = opts.m_dual;
    std::string last_err;
    for (int attempt = 0; attempt <= opts.m_retries; ++attempt, m_dual *= 2.0) {
        // Physical flow on the target is f_l'G + base_l: the attack vector
        // cancels out of the true-injection flow, so maximizing each sign is a
        // linear objective in G.
        KktBuild probe = build_kkt_milp(grid, loads_mw, tau, m_dual);
        Eigen::VectorXd dir_plus = Eigen::VectorXd::Zero(probe.prob.lp.n());
        for (int g = 0; g < ng; ++g) dir_plus(probe.off_g + g) = probe.f(line, g);

        bool tight = false;
        bool any_ok = false;
        double best_abs = -kInf;
        KktBuild kb_best;
        Eigen::VectorXd x_best;
        bool best_proved = true;
        for (double sign : {1.0, -1.0}) {
            KktBuild kb;
            BilevelOutcome res =
                solve_bilevel_once(grid, loads_mw, tau, m_dual, sign * dir_plus, opts, &kb);
            if (!res.ok) continue;
            if (res.m_too_tight) { tight = true; continue; }
            double value = res.objective + sign * probe.base(line); // signed physical flow
            if (!any_ok || std::abs(value) > best_abs) {
                any_ok = true;
                best_abs = std::abs(value);
                kb_best = std::move(kb);
                x_best = res.x;
                best_proved = res.proved_optimal;
            }
        }
        if (tight && attempt < opts.m_retries) {
            last_err = "dual cap binding";
            continue; // the capped orientation might dominate; enlarge and redo
        }
        if (!any_ok) {
            last_err = tight ? "dual cap binding" : "milp infeasible";
            continue;
        }
        try {
            AttackScenario sc = finish_bilevel(grid, loads_mw, tau, kb_best, x_best, opts);
            sc.kind = AttackKind::LineOverflow;
            sc.target_line = line;
            sc.objective = best_abs;
            sc.proved_optimal = best_proved;
            for (int i = 0; i < nl; ++i)
                if (std::abs(sc.delta_p(i)) > 1e-9 * (1.0 + loads_mw(i))) sc.attacked_loads.push_back(i);
            return sc;
        } catch (const NumericalError& e) {
            last_err = e.what();
        }
    }
    throw NumericalError("lo_attack failed after retries: " + last_err);
}

AttackBatch generate_attacks(const Grid& grid,
                             const std::vector<Eigen::VectorXd>& hourly_loads_mw,
                             const std::vector<int>& candidate_hours,
                             const AttackBatchOptions& opts, std::uint64_t master_seed) {
    if (candidate_hours.empty())
        throw ValidationError("generate_attacks: no candidate hours");
    for (int h : candidate_hours)
        if (h < 0 || h >= static_cast<int>(hourly_loads_mw.size()))
            throw ValidationError("generate_attacks: candidate hour " + std::to_string(h) +
                                  " outside the series");
    const int nl = grid.net.n_load();
    int k_max = opts.k_max > 0 ? std::min(opts.k_max, nl) : nl;
    int k_min = std::max(2, opts.k_min);
    if (k_min > k_max)
        throw ValidationError("generate_attacks: k_min exceeds k_max");

    AttackBatch out;

    // --- random attacks, one derived seed per scenario ---------------------
    std::vector<std::optional<AttackScenario>> random_slots(
        static_cast<std::size_t>(opts.random_count));
    std::atomic<int> random_failures{0};
    parallel_for(static_cast<std::size_t>(opts.random_count), opts.jobs, [&](std::size_t i) {
        std::uint64_t seed = derive_seed(master_seed, seed_stream::attacks_random, i);
        Rng rng = make_rng(seed);
        std::uniform_int_distribution<int> hour_pick(0, static_cast<int>(candidate_hours.size()) - 1);
        std::uniform_int_distribution<int> k_pick(k_min, k_max);
        std::uniform_int_distribution<int> bucket_pick(1, 20);
        int hour = candidate_hours[static_cast<std::size_t>(hour_pick(rng))];
        int k = k_pick(rng);
        double tau = 0.01 * bucket_pick(rng);
        try {
            AttackScenario sc = random_lr_attack(grid, hourly_loads_mw[static_cast<std::size_t>(hour)],
                                                 k, tau, rng, opts.random);
            sc.hour = hour;
            sc.seed = seed;
            random_slots[i] = std::move(sc);
        } catch (const Error& e) {
            random_failures.fetch_add(1);
            log_warn("random attack ", i, " dropped: ", e.what());
        }
    });

    // --- critical hours for the optimization-based attacks -----------------
    std::vector<Eigen::VectorXd> cand_loads;
    cand_loads.reserve(candidate_hours.size());
    for (int h : candidate_hours) cand_loads.push_back(hourly_loads_mw[static_cast<std::size_t>(h)]);
    CriticalHoursResult crit = critical_hours(grid, cand_loads, opts.critical_frac,
                                              opts.critical_min_lines, opts.jobs);
    out.infeasible_dispatch_hours = static_cast<int>(crit.infeasible_hours.size());
    // Severity order: more stressed hours first.
    std::sort(crit.hours.begin(), crit.hours.end(), [](const CriticalHour& a, const CriticalHour& b) {
        if (a.lines.size() != b.lines.size()) return a.lines.size() > b.lines.size();
        if (a.max_ratio != b.max_ratio) return a.max_ratio > b.max_ratio;
        return a.hour < b.hour;
    });

    struct MilpJob {
        AttackKind kind;
        int hour;      // absolute series row
        double tau;
        int line = -1; // lo only
    };
    std::vector<MilpJob> jobs;
    int n_cm = std::min<int>(opts.max_cm_hours, static_cast<int>(crit.hours.size()));
    for (int i = 0; i < n_cm; ++i) {
        int hour = candidate_hours[static_cast<std::size_t>(crit.hours[static_cast<std::size_t>(i)].hour)];
        for (double tau : opts.milp_tau_grid) jobs.push_back({AttackKind::CostMax, hour, tau, -1});
    }
    int n_lo = std::min<int>(opts.max_lo_hours, static_cast<int>(crit.hours.size()));
    for (int i = 0; i < n_lo; ++i) {
        const CriticalHour& ch = crit.hours[static_cast<std::size_t>(i)];
        int hour = candidate_hours[static_cast<std::size_t>(ch.hour)];
        int n_lines = std::min<int>(opts.lo_lines_per_hour, static_cast<int>(ch.lines.size()));
        for (int li = 0; li < n_lines; ++li)
            for (double tau : opts.milp_tau_grid)
                jobs.push_back({AttackKind::LineOverflow, hour, tau, ch.lines[static_cast<std::size_t>(li)]});
    }

    std::vector<std::optional<AttackScenario>> milp_slots(jobs.size());
    std::atomic<int> milp_failures{0};
    parallel_for(jobs.size(), opts.jobs, [&](std::size_t i) {
        const MilpJob& job = jobs[i];
        const Eigen::VectorXd& p = hourly_loads_mw[static_cast<std::size_t>(job.hour)];
        try {
            AttackScenario sc = job.kind == AttackKind::CostMax
                                    ? cm_attack(grid, p, job.tau, opts.bilevel)
                                    : lo_attack(grid, p, job.tau, job.line, opts.bilevel);
            sc.hour = job.hour;
            milp_slots[i] = std::move(sc);
        } catch (const Error& e) {
            milp_failures.fetch_add(1);
            log_warn(to_string(job.kind), " attack at hour ", job.hour, " tau ", job.tau,
                     " dropped: ", e.what());
        }
    });

    for (auto& slot : random_slots)
        if (slot) out.scenarios.push_back(std::move(*slot));
    for (auto& slot : milp_slots)
        if (slot) out.scenarios.push_back(std::move(*slot));
    out.random_failures = random_failures.load();
    out.milp_failures = milp_failures.load();
    return out;
}

namespace {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& a, const std::string& ctx) {
    if (!a.is_array())
        throw ParseError(ctx + ": expected an array");
    Eigen::VectorXd v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_number())
            throw ParseError(ctx + "[" + std::to_string(i) + "]: expected a number");
        v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
    }
    return v;
}

} // namespace

void write_scenarios_jsonl(const std::filesystem::path& path,
                           const std::vector<AttackScenario>& scenarios,
                           std::uint64_t seed, const std::string& config_hash) {
    std::ostringstream os;
    nlohmann::json meta{{"type", "meta"},
                        {"seed", hash_hex(seed)},
                        {"config_hash", config_hash},
                        {"count", scenarios.size()}};
    os << meta.dump() << "\n";
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        const AttackScenario& sc = scenarios[i];
        nlohmann::json j{{"id", i},
                         {"kind", to_string(sc.kind)},
                         {"hour", sc.hour},
                         {"tau_requested", sc.tau_requested},
                         {"tau_real", sc.tau_real},
                         {"delta_p", vector_to_json(sc.delta_p)},
                         {"p_atk", vector_to_json(sc.p_atk)},
                         {"c", vector_to_json(sc.c)},
                         {"attacked_loads", sc.attacked_loads},
                         {"proved_optimal", sc.proved_optimal},
                         {"seed", hash_hex(sc.seed)}};
        if (sc.kind == AttackKind::LineOverflow) j["target_line"] = sc.target_line;
        if (std::isfinite(sc.objective)) j["objective"] = sc.objective;
        os << j.dump() << "\n";
    }
    atomic_write_file(path, os.str());
}

ScenarioArchive read_scenarios_jsonl(const std::filesystem::path& path) {
    std::string text = read_text_file(path);
    std::istringstream is(text);
    std::string line;
    ScenarioArchive arch;
    bool have_meta = false;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        std::string ctx = path.string() + ":" + std::to_string(line_no);
        if (!have_meta) {
            if (!j.is_object() || j.value("type", "") != "meta")
                throw ParseError(ctx + ": first line must be the meta record");
            arch.seed = std::stoull(j.at("seed").get<std::string>(), nullptr, 16);
            arch.config_hash = j.value("config_hash", "");
            have_meta = true;
            continue;
        }
        AttackScenario sc;
        sc.kind = attack_kind_from_string(j.at("kind").get<std::string>());
        sc.hour = j.at("hour").get<int>();
        sc.tau_requested = j.at("tau_requested").get<double>();
        sc.tau_real = j.at("tau_real").get<double>();
        sc.delta_p = vector_from_json(j.at("delta_p"), ctx + ": delta_p");
        sc.p_atk = vector_from_json(j.at("p_atk"), ctx + ": p_atk");
        sc.c = vector_from_json(j.at("c"), ctx + ": c");
        sc.attacked_loads = j.value("attacked_loads", std::vector<int>{});
        sc.proved_optimal = j.value("proved_optimal", true);
        if (j.contains("seed")) sc.seed = std::stoull(j["seed"].get<std::string>(), nullptr, 16);
        sc.target_line = j.value("target_line", -1);
        if (j.contains("objective")) sc.objective = j["objective"].get<double>();
        arch.scenarios.push_back(std::move(sc));
    }
    if (!have_meta)
        throw ParseError(path.string() + ": missing meta line");
    return arch;
}

} // namespace lrshield
