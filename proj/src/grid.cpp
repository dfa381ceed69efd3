#include "lrshield/grid.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "lrshield/errors.hpp"
#include "lrshield/io_util.hpp"

namespace lrshield {

Eigen::VectorXd NetworkModel::loads_to_buses(const Eigen::VectorXd& loads_mw) const {
    if (loads_mw.size() != n_load())
        throw ValidationError("load vector has " + std::to_string(loads_mw.size()) +
                              " entries, network has " + std::to_string(n_load()) + " load buses");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_bus);
    for (int i = 0; i < n_load(); ++i) out(load_buses[static_cast<std::size_t>(i)]) += loads_mw(i);
    return out;
}

Eigen::VectorXd NetworkModel::gens_to_buses(const Eigen::VectorXd& g_mw) const {
    if (g_mw.size() != n_gen())
        throw ValidationError("generation vector has " + std::to_string(g_mw.size()) +
                              " entries, network has " + std::to_string(n_gen()) + " generators");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_bus);
    for (int i = 0; i < n_gen(); ++i) out(generators[static_cast<std::size_t>(i)].bus) += g_mw(i);
    return out;
}

namespace {

const nlohmann::json& require_field(const nlohmann::json& obj, const char* key, const std::string& ctx) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw ParseError(ctx + ": missing field '" + key + "'");
    return *it;
}

double require_number(const nlohmann::json& obj, const char* key, const std::string& ctx) {
    const auto& v = require_field(obj, key, ctx);
    if (!v.is_number())
        throw ParseError(ctx + ": field '" + key + "' must be a number");
    return v.get<double>();
}

int require_int(const nlohmann::json& obj, const char* key, const std::string& ctx) {
    const auto& v = require_field(obj, key, ctx);
    if (!v.is_number_integer())
        throw ParseError(ctx + ": field '" + key + "' must be an integer");
    return v.get<int>();
}

} // namespace

NetworkModel parse_network(const nlohmann::json& doc, const std::string& context) {
    if (!doc.is_object())
        throw ParseError(context + ": network document must be a JSON object");
    NetworkModel net;

    const auto& buses = require_field(doc, "buses", context);
    if (!buses.is_array() || buses.empty())
        throw ParseError(context + ": 'buses' must be a non-empty array");
    net.n_bus = static_cast<int>(buses.size());

    // Bus indices must be exactly 1..n (any order in the file).
    std::vector<double> load_by_bus(static_cast<std::size_t>(net.n_bus), 0.0);
    std::vector<bool> seen(static_cast<std::size_t>(net.n_bus), false);
    for (std::size_t k = 0; k < buses.size(); ++k) {
        std::string ctx = context + ": buses[" + std::to_string(k) + "]";
        int idx = require_int(buses[k], "index", ctx);
        if (idx < 1 || idx > net.n_bus)
            throw ValidationError(ctx + ": bus index " + std::to_string(idx) +
                                  " outside 1.." + std::to_string(net.n_bus));
        if (seen[static_cast<std::size_t>(idx - 1)])
            throw ValidationError(ctx + ": duplicate bus index " + std::to_string(idx));
        seen[static_cast<std::size_t>(idx - 1)] = true;
        double load = 0.0;
        if (buses[k].contains("load")) {
            if (!buses[k]["load"].is_number())
                throw ParseError(ctx + ": field 'load' must be a number");
            load = buses[k]["load"].get<double>();
        }
        if (load < 0.0)
            throw ValidationError(ctx + ": negative load " + std::to_string(load));
        load_by_bus[static_cast<std::size_t>(idx - 1)] = load;
    }

    const auto& lines = require_field(doc, "lines", context);
    if (!lines.is_array() || lines.empty())
        throw ParseError(context + ": 'lines' must be a non-empty array");
    for (std::size_t k = 0; k < lines.size(); ++k) {
        std::string ctx = context + ": lines[" + std::to_string(k) + "]";
        Line ln;
        ln.from = require_int(lines[k], "from", ctx) - 1;
        ln.to = require_int(lines[k], "to", ctx) - 1;
        ln.reactance = require_number(lines[k], "x", ctx);
        ln.rating_mw = require_number(lines[k], "rating_mw", ctx);
        if (ln.from < 0 || ln.from >= net.n_bus || ln.to < 0 || ln.to >= net.n_bus)
            throw ValidationError(ctx + ": endpoint outside 1.." + std::to_string(net.n_bus));
        if (ln.from == ln.to)
            throw ValidationError(ctx + ": line connects a bus to itself");
        if (!(ln.reactance > 0.0))
            throw ValidationError(ctx + ": reactance must be positive, got " + std::to_string(ln.reactance));
        if (!(ln.rating_mw > 0.0))
            throw ValidationError(ctx + ": rating_mw must be positive, got " + std::to_string(ln.rating_mw));
        net.lines.push_back(ln);
    }

    const auto& gens = require_field(doc, "generators", context);
    if (!gens.is_array() || gens.empty())
        throw ParseError(context + ": 'generators' must be a non-empty array");
    for (std::size_t k = 0; k < gens.size(); ++k) {
        std::string ctx = context + ": generators[" + std::to_string(k) + "]";
        Generator g;
        g.bus = require_int(gens[k], "bus", ctx) - 1;
        g.cost = require_number(gens[k], "cost", ctx);
        g.gmin_mw = require_number(gens[k], "gmin_mw", ctx);
        g.gmax_mw = require_number(gens[k], "gmax_mw", ctx);
        if (g.bus < 0 || g.bus >= net.n_bus)
            throw ValidationError(ctx + ": bus outside 1.." + std::to_string(net.n_bus));
        if (g.gmin_mw < 0.0 || g.gmax_mw < g.gmin_mw)
            throw ValidationError(ctx + ": need 0 <= gmin_mw <= gmax_mw");
        net.generators.push_back(g);
    }

    net.slack_bus = require_int(doc, "slack_bus", context) - 1;
    if (net.slack_bus < 0 || net.slack_bus >= net.n_bus)
        throw ValidationError(context + ": slack_bus outside 1.." + std::to_string(net.n_bus));

    const auto& lb = require_field(doc, "load_buses", context);
    if (!lb.is_array() || lb.empty())
        throw ParseError(context + ": 'load_buses' must be a non-empty array");
    std::set<int> dedup;
    for (std::size_t k = 0; k < lb.size(); ++k) {
        if (!lb[k].is_number_integer())
            throw ParseError(context + ": load_buses[" + std::to_string(k) + "] must be an integer");
        int b = lb[k].get<int>() - 1;
        if (b < 0 || b >= net.n_bus)
            throw ValidationError(context + ": load_buses[" + std::to_string(k) +
                                  "] outside 1.." + std::to_string(net.n_bus));
        if (!dedup.insert(b).second)
            throw ValidationError(context + ": duplicate load bus " + std::to_string(b + 1));
        net.load_buses.push_back(b);
        net.base_load_mw.push_back(load_by_bus[static_cast<std::size_t>(b)]);
    }
    // Any bus carrying a nominal load must be listed as a load bus.
    for (int b = 0; b < net.n_bus; ++b) {
        if (load_by_bus[static_cast<std::size_t>(b)] > 0.0 && dedup.count(b) == 0)
            throw ValidationError(context + ": bus " + std::to_string(b + 1) +
                                  " has load but is not in load_buses");
    }
    return net;
}

NetworkModel load_network(const std::filesystem::path& path) {
    return parse_network(read_json_file(path), path.string());
}

nlohmann::json network_to_json(const NetworkModel& net) {
    nlohmann::json doc;
    std::vector<double> load_by_bus(static_cast<std::size_t>(net.n_bus), 0.0);
    for (int i = 0; i < net.n_load(); ++i)
        load_by_bus[static_cast<std::size_t>(net.load_buses[static_cast<std::size_t>(i)])] =
            net.base_load_mw[static_cast<std::size_t>(i)];
    doc["buses"] = nlohmann::json::array();
    for (int b = 0; b < net.n_bus; ++b)
        doc["buses"].push_back({{"index", b + 1}, {"load", load_by_bus[static_cast<std::size_t>(b)]}});
    doc["lines"] = nlohmann::json::array();
    for (const auto& ln : net.lines)
        doc["lines"].push_back({{"from", ln.from + 1},
                                {"to", ln.to + 1},
                                {"x", ln.reactance},
                                {"rating_mw", ln.rating_mw}});
    doc["generators"] = nlohmann::json::array();
    for (const auto& g : net.generators)
        doc["generators"].push_back({{"bus", g.bus + 1},
                                     {"cost", g.cost},
                                     {"gmin_mw", g.gmin_mw},
                                     {"gmax_mw", g.gmax_mw}});
    doc["slack_bus"] = net.slack_bus + 1;
    doc["load_buses"] = nlohmann::json::array();
    for (int b : net.load_buses) doc["load_buses"].push_back(b + 1);
    return doc;
}

Eigen::MatrixXd susceptance_matrix(const NetworkModel& net) {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(net.n_bus, net.n_bus);
    for (const auto& ln : net.lines) {
        double y = 1.0 / ln.reactance;
        b(ln.from, ln.to) -= y;
        b(ln.to, ln.from) -= y;
        b(ln.from, ln.from) += y;
        b(ln.to, ln.to) += y;
    }
    return b;
}

namespace {

void require_connected(const NetworkModel& net) {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(net.n_bus));
    for (const auto& ln : net.lines) {
        adj[static_cast<std::size_t>(ln.from)].push_back(ln.to);
        adj[static_cast<std::size_t>(ln.to)].push_back(ln.from);
    }
    std::vector<bool> visited(static_cast<std::size_t>(net.n_bus), false);
    std::vector<int> stack{0};
    visited[0] = true;
    int count = 1;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int v : adj[static_cast<std::size_t>(u)]) {
            if (!visited[static_cast<std::size_t>(v)]) {
                visited[static_cast<std::size_t>(v)] = true;
                ++count;
                stack.push_back(v);
            }
        }
    }
    if (count != net.n_bus)
        throw ValidationError("network is not connected (" + std::to_string(count) + " of " +
                              std::to_string(net.n_bus) + " buses reachable from bus 1)");
}

} // namespace

Eigen::MatrixXd ptdf_matrix(const NetworkModel& net) {
    require_connected(net);
    const int n = net.n_bus;
    const int s = net.slack_bus;
    Eigen::MatrixXd b = susceptance_matrix(net);

    // Reduced system: delete the slack row/column, solve B_red * theta = e_k
    // for every non-slack bus k, then map angles to line flows.
    std::vector<int> keep;
    keep.reserve(static_cast<std::size_t>(n - 1));
    for (int i = 0; i < n; ++i)
        if (i != s) keep.push_back(i);
    Eigen::MatrixXd b_red(n - 1, n - 1);
    for (int i = 0; i < n - 1; ++i)
        for (int j = 0; j < n - 1; ++j)
            b_red(i, j) = b(keep[static_cast<std::size_t>(i)], keep[static_cast<std::size_t>(j)]);

    Eigen::LLT<Eigen::MatrixXd> llt(b_red);
    if (llt.info() != Eigen::Success)
        throw NumericalError("susceptance matrix reduction is not positive definite");
    Eigen::MatrixXd theta_red = llt.solve(Eigen::MatrixXd::Identity(n - 1, n - 1));

    // theta (n x n): column k = angles for a unit injection at bus k (slack
    // returns the power).  Slack row and slack column are zero.
    Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n - 1; ++i)
        for (int j = 0; j < n - 1; ++j)
            theta(keep[static_cast<std::size_t>(i)], keep[static_cast<std::size_t>(j)]) = theta_red(i, j);

    Eigen::MatrixXd r(net.n_line(), n);
    for (int l = 0; l < net.n_line(); ++l) {
        const Line& ln = net.lines[static_cast<std::size_t>(l)];
        r.row(l) = (theta.row(ln.from) - theta.row(ln.to)) / ln.reactance;
    }
    return r;
}

Grid Grid::build(NetworkModel net) {
    Grid g;
    g.b = susceptance_matrix(net);
    g.ptdf = ptdf_matrix(net);
    g.net = std::move(net);
    return g;
}

Eigen::VectorXd Grid::flows(const Eigen::VectorXd& injection_mw) const {
    if (injection_mw.size() != net.n_bus)
        throw ValidationError("injection vector size mismatch");
    return ptdf * injection_mw;
}

} // namespace lrshield
