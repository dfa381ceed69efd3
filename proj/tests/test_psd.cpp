#include <doctest.h>

#include <random>

#include "lrshield/psd.hpp"

using namespace lrshield;

namespace {

void check_feasible_point(const Eigen::VectorXd& diag_target, const Eigen::MatrixXd& gamma) {
    const double scale = diag_target.maxCoeff();
    for (Eigen::Index i = 0; i < diag_target.size(); ++i)
        CHECK(std::abs(gamma(i, i) - diag_target(i)) < 1e-6 * (1.0 + scale));
    CHECK(std::abs(gamma.sum()) < 1e-8 * (1.0 + diag_target.sum()));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gamma);
    CHECK(eig.eigenvalues().minCoeff() > -1e-8 * (1.0 + scale));
    CHECK((gamma - gamma.transpose()).cwiseAbs().maxCoeff() < 1e-10 * (1.0 + scale));
}

} // namespace

TEST_CASE("psd projection clamps negative eigenvalues") {
    Eigen::MatrixXd m(2, 2);
    m << 1.0, 0.0, 0.0, -2.0;
    Eigen::MatrixXd p = project_psd(m);
    CHECK(p(0, 0) == doctest::Approx(1.0));
    CHECK(p(1, 1) == doctest::Approx(0.0));
    CHECK(p(0, 1) == doctest::Approx(0.0));

    // Slightly asymmetric inputs within tolerance are symmetrized first.
    Eigen::MatrixXd q(2, 2);
    q << 1.0, 0.5 + 1e-12, 0.5, 1.0;
    Eigen::MatrixXd r = project_psd(q);
    CHECK(r(0, 1) == doctest::Approx(r(1, 0)));
}

TEST_CASE("pair with equal deviations anticorrelates exactly") {
    const double s2 = 2.25; // sigma = 1.5
    Eigen::VectorXd d(2);
    d << s2, s2;
    ConstrainedPsdResult r = constrained_psd(d);
    REQUIRE(r.feasible);
    CHECK(std::abs(r.gamma(0, 1) + s2) < 1e-8);
    check_feasible_point(d, r.gamma);
}

TEST_CASE("pair with unequal deviations is infeasible") {
    Eigen::VectorXd d(2);
    d << 1.0, 4.0;
    CHECK_FALSE(constrained_psd(d).feasible);
}

TEST_CASE("equal trio balances at minus half variance") {
    const double s2 = 4.0;
    Eigen::VectorXd d = Eigen::VectorXd::Constant(3, s2);
    ConstrainedPsdResult r = constrained_psd(d);
    REQUIRE(r.feasible);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j) CHECK(std::abs(r.gamma(i, j) + 0.5 * s2) < 1e-7);
    check_feasible_point(d, r.gamma);
}

TEST_CASE("dominating deviation makes the zero-sum constraint impossible") {
    Eigen::VectorXd d(4);
    d << 100.0, 1.0, 1.0, 1.0; // sigma = (10, 1, 1, 1): 2*10 > 13
    CHECK_FALSE(constrained_psd(d).feasible);
}

TEST_CASE("feasibility verdict matches the closing condition on random instances") {
    std::mt19937_64 rng(4451);
    std::uniform_int_distribution<int> kd(2, 6);
    std::uniform_real_distribution<double> sig(0.1, 3.0);
    int feasible_seen = 0, infeasible_seen = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const int k = kd(rng);
        Eigen::VectorXd sigma(k);
        for (int i = 0; i < k; ++i) sigma(i) = sig(rng);
        const double margin = sigma.sum() - 2.0 * sigma.maxCoeff();
        // Stay clear of the boundary where the verdict is a numerical coin flip.
        if (std::abs(margin) < 0.05 * sigma.sum()) continue;

        ConstrainedPsdResult r = constrained_psd(sigma.array().square());
        if (margin > 0.0) {
            ++feasible_seen;
            REQUIRE_MESSAGE(r.feasible, "trial ", trial, " k=", k);
            check_feasible_point(sigma.array().square(), r.gamma);
        } else {
            ++infeasible_seen;
            CHECK_MESSAGE(!r.feasible, "trial ", trial, " k=", k);
        }
    }
    CHECK(feasible_seen > 80);
    CHECK(infeasible_seen > 30);
}

TEST_CASE("boundary case closes with a rank-one covariance") {
    // sigma = (2, 1, 1): 2*2 == 4 == sum, the degenerate flat polygon.
    Eigen::VectorXd sigma(3);
    sigma << 2.0, 1.0, 1.0;
    ConstrainedPsdResult r = constrained_psd(sigma.array().square());
    REQUIRE(r.feasible);
    check_feasible_point(sigma.array().square(), r.gamma);
}

TEST_CASE("invalid diagonals are rejected") {
    Eigen::VectorXd neg(2);
    neg << 1.0, -0.5;
    CHECK_THROWS(constrained_psd(neg));
}

TEST_CASE("single-entry diagonal is only feasible at zero") {
    Eigen::VectorXd one(1);
    one << 1.0;
    CHECK_FALSE(constrained_psd(one).feasible);
    one << 0.0;
    ConstrainedPsdResult r = constrained_psd(one);
    REQUIRE(r.feasible);
    CHECK(r.gamma(0, 0) == doctest::Approx(0.0));
}
