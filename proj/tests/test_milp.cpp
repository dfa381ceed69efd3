#include <doctest.h>

#include <random>

#include "lrshield/milp.hpp"
#include "oracles.hpp"

using namespace lrshield;

namespace {

LpProblem knapsack(const std::vector<double>& value, const std::vector<double>& weight,
                   double capacity) {
    const int n = static_cast<int>(value.size());
    LpProblem p = LpProblem::make(n);
    for (int j = 0; j < n; ++j) {
        p.c(j) = -value[static_cast<std::size_t>(j)];
        p.lb(j) = 0.0;
        p.ub(j) = 1.0;
    }
    p.a_ub.resize(1, n);
    for (int j = 0; j < n; ++j) p.a_ub(0, j) = weight[static_cast<std::size_t>(j)];
    p.b_ub.resize(1);
    p.b_ub << capacity;
    return p;
}

} // namespace

TEST_CASE("integral relaxation closes at the root") {
    MilpProblem mp;
    mp.lp = LpProblem::make(2);
    mp.lp.c << -1.0, -2.0;
    mp.lp.lb.setZero();
    mp.lp.ub.setOnes();
    mp.binaries = {0, 1};
    MilpSolution s = solve_milp(mp);
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(s.objective == doctest::Approx(-3.0));
    CHECK(s.nodes == 1);
}

TEST_CASE("knapsack needs branching and finds the optimum") {
    MilpProblem mp;
    mp.lp = knapsack({8, 11, 6, 4}, {5, 7, 4, 3}, 14);
    mp.binaries = {0, 1, 2, 3};
    MilpSolution s = solve_milp(mp);
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(s.objective == doctest::Approx(-21.0).epsilon(1e-9));
    CHECK(s.x(1) == doctest::Approx(1.0));
    CHECK(s.x(2) == doctest::Approx(1.0));
    CHECK(s.x(3) == doctest::Approx(1.0));
    CHECK(s.best_bound <= s.objective + 1e-6);
}

TEST_CASE("infeasible integer program") {
    MilpProblem mp;
    mp.lp = LpProblem::make(2);
    mp.lp.c.setZero();
    mp.lp.lb.setZero();
    mp.lp.ub.setOnes();
    mp.lp.a_ub.resize(1, 2);
    mp.lp.a_ub << -1.0, -1.0;
    mp.lp.b_ub.resize(1);
    mp.lp.b_ub << -3.0; // x1 + x2 >= 3 with binaries
    mp.binaries = {0, 1};
    CHECK(solve_milp(mp).status == SolveStatus::Infeasible);
}

TEST_CASE("node limit returns the incumbent") {
    // A knapsack large enough that the tree cannot close within two nodes.
    MilpProblem mp;
    mp.lp = knapsack({8, 11, 6, 4, 9, 7, 5, 3}, {5, 7, 4, 3, 6, 5, 4, 2}, 17);
    mp.binaries = {0, 1, 2, 3, 4, 5, 6, 7};
    MilpOptions opts;
    opts.node_limit = 2;
    MilpSolution s = solve_milp(mp, opts);
    if (s.status == SolveStatus::NodeLimit) {
        // Whatever incumbent exists must be integer feasible.
        if (s.x.size() > 0) {
            for (int b : mp.binaries)
                CHECK(std::min(std::abs(s.x(b)), std::abs(1.0 - s.x(b))) < 1e-6);
            CHECK(mp.lp.a_ub.row(0).dot(s.x) <= mp.lp.b_ub(0) + 1e-7);
            CHECK(s.best_bound <= s.objective + 1e-6);
        }
    } else {
        CHECK(s.status == SolveStatus::Optimal); // tiny trees may still close
    }
}

TEST_CASE("mixed binary-continuous instances match exhaustive enumeration") {
    std::mt19937_64 rng(991);
    std::uniform_int_distribution<int> nbd(1, 6), ncd(0, 2), ubd(1, 5);
    std::uniform_real_distribution<double> coef(-2.0, 2.0), width(0.5, 2.5);
    int optimal_seen = 0, infeasible_seen = 0;
    for (int trial = 0; trial < 120; ++trial) {
        const int nb = nbd(rng);
        const int nc = ncd(rng);
        const int n = nb + nc;
        const int nu = ubd(rng);
        MilpProblem mp;
        mp.lp = LpProblem::make(n);
        for (int j = 0; j < n; ++j) {
            mp.lp.c(j) = coef(rng);
            if (j < nb) {
                mp.lp.lb(j) = 0.0;
                mp.lp.ub(j) = 1.0;
            } else {
                mp.lp.lb(j) = coef(rng);
                mp.lp.ub(j) = mp.lp.lb(j) + width(rng);
            }
        }
        mp.lp.a_ub.resize(nu, n);
        mp.lp.b_ub.resize(nu);
        for (int i = 0; i < nu; ++i) {
            for (int j = 0; j < n; ++j) mp.lp.a_ub(i, j) = coef(rng);
            mp.lp.b_ub(i) = coef(rng);
        }
        for (int j = 0; j < nb; ++j) mp.binaries.push_back(j);

        MilpSolution s = solve_milp(mp);
        oracles::ExhaustiveMilpResult ref = oracles::exhaustive_milp(mp);
        if (ref.feasible) {
            ++optimal_seen;
            REQUIRE_MESSAGE(s.status == SolveStatus::Optimal, "trial ", trial);
            CHECK_MESSAGE(std::abs(s.objective - ref.objective) <
                              1e-6 * (1.0 + std::abs(ref.objective)),
                          "trial ", trial, ": got ", s.objective, " want ", ref.objective);
            for (int b : mp.binaries)
                CHECK(std::min(std::abs(s.x(b)), std::abs(1.0 - s.x(b))) < 1e-6);
        } else {
            ++infeasible_seen;
            CHECK_MESSAGE(s.status == SolveStatus::Infeasible, "trial ", trial);
        }
    }
    CHECK(optimal_seen > 40);
    CHECK(infeasible_seen > 5);
}
