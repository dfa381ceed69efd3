#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lrshield/dcopf.hpp"
#include "lrshield/grid.hpp"
#include "lrshield/milp.hpp"
#include "lrshield/rng.hpp"

namespace lrshield {

enum class AttackKind { Random, CostMax, LineOverflow };

std::string to_string(AttackKind k);
AttackKind attack_kind_from_string(const std::string& s);

struct AttackScenario {
    AttackKind kind = AttackKind::Random;
    int hour = -1;                   // series row the attack targets
    double tau_requested = 0.0;      // load-shift budget handed to the synthesizer
    double tau_real = 0.0;           // realized max |delta_p| / p
    Eigen::VectorXd delta_p;         // per load bus, sums to ~0
    Eigen::VectorXd p_atk;           // p + delta_p
    Eigen::VectorXd c;               // bus-level attack vector (slack entry 0)
    std::vector<int> attacked_loads; // load indices touched (random kind)
    int target_line = -1;            // line overflow target (lo kind)
    double objective = std::numeric_limits<double>::quiet_NaN(); // cm: op cost, lo: |physical flow|
    bool proved_optimal = true;      // false when the MILP stopped on the node limit
    std::uint64_t seed = 0;          // per-scenario stream (random kind)
};

// max_i |delta_i| / p_i.  Loads must be strictly positive.
double load_shift(const Eigen::VectorXd& p, const Eigen::VectorXd& delta);

// Load change induced by the bus vector c: delta_p = -(B c) restricted to the
// load buses.  Throws ValidationError if B c has support outside them.
Eigen::VectorXd apply_attack_vector(const Grid& grid, const Eigen::VectorXd& c,
                                    const Eigen::VectorXd& loads_mw);

// Inverse of the above: bus vector c (slack entry forced to 0) reproducing the
// given per-load change.  delta_p must sum to ~0.
Eigen::VectorXd recover_attack_vector(const Grid& grid, const Eigen::VectorXd& delta_p);

struct RandomAttackOptions {
    int max_redraws = 200;      // on tau_real > tau, and on infeasible subsets
    double psd_tol = 1e-8;
};

// Correlated Gaussian load redistribution over K randomly chosen loads with
// per-load dispersion tied to the budget tau.  Redraws until the realized
// shift fits the budget.
AttackScenario random_lr_attack(const Grid& grid, const Eigen::VectorXd& loads_mw, int k,
                                double tau, Rng& rng, const RandomAttackOptions& opts = {});

struct BilevelOptions {
    double m_dual = 4000.0;     // initial big-M on inequality multipliers
    int m_retries = 3;          // doublings when a multiplier presses the cap
    long node_limit = 200000;
    double milp_gap = 1e-6;
    double verify_tol = 1e-5;   // operator-cost cross-check (relative)
};

// Bi-level cost-maximization attack: the attacker shifts observed loads within
// |delta| <= tau * p so that the re-dispatch the operator computes is as
// expensive as possible.  Solved as a single MILP via the KKT conditions of
// the inner dispatch.
AttackScenario cm_attack(const Grid& grid, const Eigen::VectorXd& loads_mw, double tau,
                         const BilevelOptions& opts = {});

// Bi-level line-overflow attack: maximize |physical flow| on `line` subject to
// the operator dispatching against the falsified loads.
AttackScenario lo_attack(const Grid& grid, const Eigen::VectorXd& loads_mw, double tau,
                         int line, const BilevelOptions& opts = {});

struct AttackBatchOptions {
    int random_count = 2000;
    int k_min = 2;
    int k_max = 0;                  // 0 => all load buses
    std::vector<double> milp_tau_grid = {0.03, 0.05, 0.10, 0.15, 0.20};
    int max_cm_hours = 4;
    int max_lo_hours = 4;
    int lo_lines_per_hour = 2;
    double critical_frac = 0.8;
    int critical_min_lines = 2;
    BilevelOptions bilevel;
    RandomAttackOptions random;
    int jobs = 1;
};

struct AttackBatch {
    std::vector<AttackScenario> scenarios;
    int infeasible_dispatch_hours = 0; // skipped during the critical-hour scan
    int random_failures = 0;           // draws with no feasible covariance/shift
    int milp_failures = 0;             // bi-level scenarios dropped after retries
};

// Generates the full scenario set for a load series: `random_count` random
// attacks over `candidate_hours`, plus cost-maximization and line-overflow
// attacks on the most critical dispatch hours.  Deterministic given the seed.
AttackBatch generate_attacks(const Grid& grid,
                             const std::vector<Eigen::VectorXd>& hourly_loads_mw,
                             const std::vector<int>& candidate_hours,
                             const AttackBatchOptions& opts, std::uint64_t master_seed);

// JSONL archive: one meta line, then one scenario per line.
void write_scenarios_jsonl(const std::filesystem::path& path,
                           const std::vector<AttackScenario>& scenarios,
                           std::uint64_t seed, const std::string& config_hash);

struct ScenarioArchive {
    std::vector<AttackScenario> scenarios;
    std::uint64_t seed = 0;
    std::string config_hash;
};

ScenarioArchive read_scenarios_jsonl(const std::filesystem::path& path);

} // namespace lrshield
