#include <doctest.h>

#include <nlohmann/json.hpp>

#include "lrshield/errors.hpp"
#include "lrshield/grid.hpp"
#include "oracles.hpp"

using namespace lrshield;

TEST_CASE("susceptance of the symmetric triangle") {
    Grid g = Grid::build(oracles::net3_triangle());
    Eigen::MatrixXd want(3, 3);
    want << 20, -10, -10, -10, 20, -10, -10, -10, 20;
    CHECK((g.b - want).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((g.b.rowwise().sum()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((g.b - g.b.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("triangle ptdf splits two thirds / one third") {
    Grid g = Grid::build(oracles::net3_triangle());
    // Injection at bus 1 against the slack: direct line carries 2/3 of it,
    // the two-hop path 1/3.
    CHECK(g.ptdf(0, 1) == doctest::Approx(-2.0 / 3).epsilon(1e-12));
    CHECK(g.ptdf(1, 1) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(g.ptdf(2, 1) == doctest::Approx(-1.0 / 3).epsilon(1e-12));
    // Slack column is identically zero.
    CHECK(g.ptdf.col(0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("flows balance at every bus") {
    Grid g = Grid::build(oracles::net5());
    Eigen::VectorXd inj = Eigen::VectorXd::Zero(5);
    inj << 40, -25, 30, -20, -25;
    Eigen::VectorXd f = g.flows(inj);
    // Net flow out of each bus equals its injection.
    Eigen::VectorXd out = Eigen::VectorXd::Zero(5);
    for (int l = 0; l < g.net.n_line(); ++l) {
        out(g.net.lines[static_cast<std::size_t>(l)].from) += f(l);
        out(g.net.lines[static_cast<std::size_t>(l)].to) -= f(l);
    }
    CHECK((out - inj).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("disconnected networks are rejected") {
    NetworkModel net;
    net.n_bus = 4;
    net.lines = {{0, 1, 0.1, 50.0}, {2, 3, 0.1, 50.0}};
    net.generators = {{0, 10.0, 0.0, 100.0}};
    net.slack_bus = 0;
    net.load_buses = {1, 3};
    net.base_load_mw = {10.0, 10.0};
    CHECK_THROWS_AS(ptdf_matrix(net), ValidationError);
}

TEST_CASE("network json round trip") {
    NetworkModel net = oracles::net5();
    NetworkModel back = parse_network(network_to_json(net), "round-trip");
    CHECK(back.n_bus == net.n_bus);
    CHECK(back.slack_bus == net.slack_bus);
    CHECK(back.load_buses == net.load_buses);
    REQUIRE(back.lines.size() == net.lines.size());
    for (std::size_t i = 0; i < net.lines.size(); ++i) {
        CHECK(back.lines[i].from == net.lines[i].from);
        CHECK(back.lines[i].to == net.lines[i].to);
        CHECK(back.lines[i].reactance == doctest::Approx(net.lines[i].reactance));
        CHECK(back.lines[i].rating_mw == doctest::Approx(net.lines[i].rating_mw));
    }
    REQUIRE(back.generators.size() == net.generators.size());
    for (std::size_t i = 0; i < net.generators.size(); ++i) {
        CHECK(back.generators[i].bus == net.generators[i].bus);
        CHECK(back.generators[i].cost == doctest::Approx(net.generators[i].cost));
    }
    REQUIRE(back.base_load_mw.size() == net.base_load_mw.size());
}

TEST_CASE("study network fixture loads and is sane") {
    NetworkModel net = load_network("data/ieee30.json");
    CHECK(net.n_bus == 30);
    CHECK(net.n_line() == 41);
    CHECK(net.n_gen() == 6);
    CHECK(net.n_load() == 20);
    CHECK(net.slack_bus == 0);
    Grid g = Grid::build(net);
    CHECK(g.ptdf.rows() == 41);
    CHECK(g.ptdf.cols() == 30);
    // Nominal operating point dispatches feasibly with margin on every line.
    Eigen::VectorXd base =
        Eigen::Map<const Eigen::VectorXd>(net.base_load_mw.data(),
                                          static_cast<Eigen::Index>(net.base_load_mw.size()));
    double gmax_total = 0.0;
    for (const auto& gen : net.generators) gmax_total += gen.gmax_mw;
    CHECK(base.sum() < gmax_total);
}

TEST_CASE("scatter helpers place entries on the right buses") {
    NetworkModel net = oracles::net3_two_loads();
    Eigen::VectorXd loads(2);
    loads << 5.0, 7.0;
    Eigen::VectorXd bus = net.loads_to_buses(loads);
    CHECK(bus(0) == 0.0);
    CHECK(bus(1) == 5.0);
    CHECK(bus(2) == 7.0);
    Eigen::VectorXd g(2);
    g << 11.0, 13.0;
    Eigen::VectorXd gb = net.gens_to_buses(g);
    CHECK(gb(0) == 11.0);
    CHECK(gb(1) == 0.0);
    CHECK(gb(2) == 13.0);
}
