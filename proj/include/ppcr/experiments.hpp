#pragma once

#include "ppcr/linalg.hpp"
#include "ppcr/model.hpp"
#include "ppcr/network.hpp"
#include "ppcr/parallel.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ppcr {

enum class Scenario { mech_sweep, offline, online, consensus };

std::string_view to_string(Scenario s);
Scenario parse_scenario(std::string_view text);

/// Seeded i.i.d. Uniform[low, high] matrix.
struct UniformMatrixSpec {
    double low = -1.0;
    double high = 1.0;
    int rows = 0;
    int cols = 0;
    std::uint64_t seed = 0;
};

using MatrixSpec = std::variant<Matrix, UniformMatrixSpec>;

/// Scenario-file mechanism entry. budget_s is ignored by sweeps (the grid
/// supplies the budget); tau is the squared-output fixture's noise scale.
struct MechanismDescriptor {
    MechanismKind kind = MechanismKind::gaussian_optimal;
    double budget_s = 1.0;
    double tau = 1.0;
};

Matrix realize(const MatrixSpec& spec);

struct ExperimentSpec {
    Scenario scenario = Scenario::mech_sweep;
    std::uint64_t seed = 1;
    std::size_t reps = 2000;

    Vector theta;
    /// mech_sweep: m x n. offline/online: stacked per-sensor blocks of
    /// rows_per_sensor rows each.
    MatrixSpec H;
    int rows_per_sensor = 1;
    double sigma_w = 0.2;

    // mech_sweep
    std::vector<double> grid;
    std::vector<MechanismDescriptor> mechanisms;  // empty: the six sweep mechanisms
    /// Twin-lobe mechanism: public shift placing the 3-sigma box of y at
    /// [margin, margin + 6 sigma]; lobe centre c.
    double twin_margin = 12.0;
    double twin_center = 1.0;

    // offline / online
    Graph graph;
    double budget_s = 1.0;
    std::vector<ReleaseKind> algorithms;
    int iterations = 200;  // offline rounds, online steps, consensus rounds
    OnlineParams online;
    std::vector<Vector> initial;  // online theta_{i,0}; empty = zeros

    // consensus
    std::vector<double> budgets;
    std::vector<double> agent_values;
    bool inject_noise = true;

    /// Throws InvalidInput when the spec violates its invariants
    /// (reps >= 1, positive grid and budgets, dimensions).
    void validate() const;
};

struct SweepRow {
    std::string mechanism;
    double s = 0.0;
    std::optional<double> mse;  // absent: calibration infeasible
    double std_error = -1.0;    // negative: undefined (reps < 2)
    double ppcr_trace = 0.0;
    std::size_t unconverged = 0;
    std::string note;
};

struct TrajectoryRow {
    std::string algorithm;
    int k = 0;
    int sensor = -1;  // -1: average over sensors
    std::optional<double> mse;  // absent while the estimate is unavailable
    double std_error = -1.0;
    double bound = 0.0;
};

struct ConsensusRow {
    std::size_t reps = 0;
    double variance = 0.0;
    double std_error = -1.0;
    double bound = 0.0;
};

struct RunResult {
    Scenario scenario = Scenario::mech_sweep;
    std::uint64_t seed = 0;
    std::size_t reps = 0;
    std::string spec_hash;
    std::vector<std::string> events;

    std::vector<SweepRow> sweep;
    std::vector<TrajectoryRow> trajectory;
    std::vector<ConsensusRow> consensus;

    // offline extras
    double max_central_deviation = 0.0;  // max over reps and sensors at the last round
    double central_mse = 0.0;
    double central_std_error = -1.0;
    double central_bound = 0.0;
    // online extras
    double asymptote = 0.0;
};

/// Calibrates the described mechanism for a single-system model. The
/// twin-lobe region is the 3-sigma box of y around H theta.
Mechanism build_mechanism(const MechanismDescriptor& d, const MeasurementModel& model, const Vector& theta,
                          const ExperimentSpec& spec);

struct AuditResult {
    std::string mechanism;
    double budget_s = 0.0;
    double cross_term_z = 0.0;  // max |mean| / std-error over entries
    double score_mean_z = 0.0;
    bool score_supported = true;
    bool pass = false;
};

/// Zero cross-term and zero score-mean tests, each within 5 standard errors.
AuditResult audit_mechanism(const MechanismDescriptor& d, const MeasurementModel& model, const Vector& theta,
                            const ExperimentSpec& spec, std::size_t samples, std::uint64_t seed,
                            Execution exec = Execution::parallel);

struct CheckReport {
    bool identifiable = false;
    std::string identifiability_detail;
    std::vector<AuditResult> audits;
    bool pass() const;
};

/// Identifiability (single system over the grid, or joint over sensors
/// without redrawing) plus the admissibility audit of every listed mechanism.
CheckReport run_check(const ExperimentSpec& spec, std::size_t samples, Execution exec = Execution::parallel);

inline constexpr double kAuditSigmas = 5.0;

/// Deterministic sub-seed for a (master, a, b) triple.
std::uint64_t sub_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

/// Every run is bit-identical across Execution modes and thread counts.
RunResult run_mech_sweep(const ExperimentSpec& spec, Execution exec = Execution::parallel);
RunResult run_offline_experiment(const ExperimentSpec& spec, Execution exec = Execution::parallel);
RunResult run_online_experiment(const ExperimentSpec& spec, Execution exec = Execution::parallel);
RunResult run_consensus_experiment(const ExperimentSpec& spec, Execution exec = Execution::parallel);
RunResult run_experiment(const ExperimentSpec& spec, Execution exec = Execution::parallel);

/// Online checkpoints: about 20 per decade, always including 1 and steps.
std::vector<int> log_checkpoints(int steps, int per_decade = 20);

/// Per-sensor H blocks of an offline/online spec; a draw that is not
/// jointly identifiable is redrawn with seed + 1 (recorded in events).
std::vector<Matrix> sensor_matrices(const ExperimentSpec& spec, std::vector<std::string>* events = nullptr);

}  // namespace ppcr
