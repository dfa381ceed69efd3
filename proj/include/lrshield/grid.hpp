#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

namespace lrshield {

// Indices are 1-based in files (bus numbering convention) and 0-based in
// memory; conversion happens at the parse/serialize boundary only.

struct Line {
    int from = 0; // 0-based bus index
    int to = 0;
    double reactance = 0.0; // p.u.
    double rating_mw = 0.0;
};

struct Generator {
    int bus = 0;          // 0-based
    double cost = 0.0;    // $/MWh, linear
    double gmin_mw = 0.0;
    double gmax_mw = 0.0;
};

struct NetworkModel {
    int n_bus = 0;
    std::vector<Line> lines;
    std::vector<Generator> generators;
    int slack_bus = 0;            // 0-based
    std::vector<int> load_buses;  // 0-based, order defines load vector layout
    std::vector<double> base_load_mw; // nominal load per load bus (same order)

    int n_line() const { return static_cast<int>(lines.size()); }
    int n_gen() const { return static_cast<int>(generators.size()); }
    int n_load() const { return static_cast<int>(load_buses.size()); }

    // Scatter a load vector (n_load) onto buses (n_bus).
    Eigen::VectorXd loads_to_buses(const Eigen::VectorXd& loads_mw) const;
    // Scatter generator outputs (n_gen) onto buses (n_bus).
    Eigen::VectorXd gens_to_buses(const Eigen::VectorXd& g_mw) const;
};

NetworkModel parse_network(const nlohmann::json& doc, const std::string& context);
NetworkModel load_network(const std::filesystem::path& path);
nlohmann::json network_to_json(const NetworkModel& net);

// Bus susceptance matrix B (n_bus x n_bus): B_ij = -1/x_ij for a line i-j,
// diagonal makes every row sum to zero.
Eigen::MatrixXd susceptance_matrix(const NetworkModel& net);

// Power transfer distribution factors (n_line x n_bus): flow = R * injection
// for any injection vector that sums to zero.  The slack column is zero.
// Throws ValidationError if the network is not connected.
Eigen::MatrixXd ptdf_matrix(const NetworkModel& net);

// Immutable bundle of a network with its derived matrices, shared by the
// dispatch and attack code so factorizations happen once.
struct Grid {
    NetworkModel net;
    Eigen::MatrixXd b;    // susceptance
    Eigen::MatrixXd ptdf; // n_line x n_bus

    static Grid build(NetworkModel net);

    // Line flows for bus injections (n_bus, must sum to ~0).
    Eigen::VectorXd flows(const Eigen::VectorXd& injection_mw) const;
};

} // namespace lrshield
