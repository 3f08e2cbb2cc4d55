#include "oracles.hpp"

#include "ppcr/bounds.hpp"
#include "ppcr/errors.hpp"
#include "ppcr/experiments.hpp"

#include <doctest.h>

#include <cmath>

using namespace ppcr;

namespace {

Graph fig_graph() {
    Graph g = Graph::ring(8);
    g.edges.emplace_back(0, 4);
    g.edges.emplace_back(2, 6);
    return g;
}

ExperimentSpec sweep_spec() {
    ExperimentSpec s;
    s.scenario = Scenario::mech_sweep;
    s.seed = 17;
    s.reps = 70;  // not a multiple of the block size
    s.theta = Vector::LinSpaced(5, -0.5, 0.5);
    s.H = UniformMatrixSpec{-1, 1, 10, 5, 42};
    s.sigma_w = 0.2;
    s.grid = {0.1, 1.0, 10.0};
    return s;
}

ExperimentSpec network_spec(Scenario sc) {
    ExperimentSpec s;
    s.scenario = sc;
    s.seed = 3;
    s.reps = 40;
    s.theta = Vector::LinSpaced(2, 0.36, 0.75);
    s.H = UniformMatrixSpec{-1, 1, 8, 2, 42};
    s.graph = fig_graph();
    s.algorithms = {ReleaseKind::gaussian, ReleaseKind::laplace_data};
    s.iterations = sc == Scenario::online ? 300 : 50;
    return s;
}

ExperimentSpec consensus_spec() {
    ExperimentSpec s;
    s.scenario = Scenario::consensus;
    s.seed = 5;
    s.reps = 4000;
    s.graph = fig_graph();
    s.budgets = {1.0};
    s.iterations = 200;
    return s;
}

template <class Row>
bool same_bits(const std::vector<Row>& a, const std::vector<Row>& b);

template <>
bool same_bits(const std::vector<SweepRow>& a, const std::vector<SweepRow>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].mse != b[i].mse || a[i].std_error != b[i].std_error || a[i].ppcr_trace != b[i].ppcr_trace) return false;
    return true;
}

template <>
bool same_bits(const std::vector<TrajectoryRow>& a, const std::vector<TrajectoryRow>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].mse != b[i].mse || a[i].std_error != b[i].std_error || a[i].k != b[i].k) return false;
    return true;
}

}  // namespace

TEST_CASE("log checkpoints") {
    const auto ks = log_checkpoints(10000);
    CHECK(ks.front() == 1);
    CHECK(ks.back() == 10000);
    CHECK(std::is_sorted(ks.begin(), ks.end()));
    CHECK(std::adjacent_find(ks.begin(), ks.end()) == ks.end());
    int last_decade = 0;
    for (int k : ks) last_decade += k >= 1000 ? 1 : 0;
    CHECK(last_decade == 21);
    CHECK(log_checkpoints(7).back() == 7);
}

TEST_CASE("sweep rows, bounds and determinism across execution modes") {
    const ExperimentSpec spec = sweep_spec();
    const RunResult serial = run_mech_sweep(spec, Execution::serial);
    REQUIRE(serial.sweep.size() == 6 * 3);
    const Matrix H = realize(spec.H);
    for (const auto& row : serial.sweep) {
        const double tr = oracle::pp_fisher(H, row.s * Matrix::Identity(10, 10), 0.04 * Matrix::Identity(10, 10)).inverse().trace();
        CHECK(row.ppcr_trace == doctest::Approx(tr).epsilon(1e-10));
        if (row.mse) CHECK(*row.mse >= row.ppcr_trace - 3 * row.std_error);
    }
    set_threads(3);
    const RunResult par = run_mech_sweep(spec, Execution::parallel);
    set_threads(1);
    const RunResult par1 = run_mech_sweep(spec, Execution::parallel);
    CHECK(same_bits(serial.sweep, par.sweep));
    CHECK(same_bits(serial.sweep, par1.sweep));
    CHECK(serial.spec_hash == par.spec_hash);
}

TEST_CASE("infeasible twin calibration leaves a gap row") {
    ExperimentSpec spec = sweep_spec();
    spec.mechanisms = {{MechanismKind::twin_uniform_mult}};
    spec.grid = {0.01, 1.0};
    const RunResult r = run_mech_sweep(spec);
    REQUIRE(r.sweep.size() == 2);
    CHECK_FALSE(r.sweep[0].mse.has_value());
    CHECK_FALSE(r.sweep[0].note.empty());
    CHECK(r.sweep[1].mse.has_value());
    CHECK_FALSE(r.events.empty());
}

TEST_CASE("non-sweepable mechanisms are rejected") {
    ExperimentSpec spec = sweep_spec();
    spec.mechanisms = {{MechanismKind::squared_output}};
    CHECK_THROWS_AS(run_mech_sweep(spec), InvalidInput);
}

TEST_CASE("offline experiment") {
    const ExperimentSpec spec = network_spec(Scenario::offline);
    const RunResult r = run_offline_experiment(spec, Execution::serial);
    CHECK(r.max_central_deviation < 1e-6);
    // one row per (algorithm, round, sensor or mean)
    CHECK(r.trajectory.size() == 2u * 51u * 9u);
    const RunResult p = run_offline_experiment(spec, Execution::parallel);
    CHECK(same_bits(r.trajectory, p.trajectory));
    const auto blocks = [&] {
        std::vector<SensorBlock> out;
        for (const auto& h : sensor_matrices(spec))
            out.push_back({h, PsdMatrix::scaled_identity(1, 1.0), PsdMatrix::scaled_identity(1, 0.04)});
        return out;
    }();
    CHECK(r.central_bound == doctest::Approx(pp_fisher_additive(blocks).matrix().inverse().trace()).epsilon(1e-12));
}

TEST_CASE("online experiment and initialization independence") {
    ExperimentSpec spec = network_spec(Scenario::online);
    spec.algorithms = {ReleaseKind::gaussian};
    spec.iterations = 2000;
    spec.reps = 200;
    const RunResult zero = run_online_experiment(spec);
    // LS seed: every sensor starts from the pooled least-squares fit of one noisy sweep
    const Matrix H = realize(spec.H);
    std::mt19937_64 g(12);
    std::normal_distribution<double> w(0.0, 0.2);
    Vector y = H * spec.theta;
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += w(g);
    spec.initial.assign(8, H.colPivHouseholderQr().solve(y));
    const RunResult far = run_online_experiment(spec);
    CHECK(zero.asymptote == far.asymptote);
    auto final_mean = [](const RunResult& r) {
        double v = 0;
        for (const auto& row : r.trajectory)
            if (row.sensor == -1 && row.mse) v = row.k * *row.mse;
        return v;
    };
    CHECK(final_mean(far) == doctest::Approx(final_mean(zero)).epsilon(0.05));
    CHECK(final_mean(far) == doctest::Approx(zero.asymptote).epsilon(0.25));
    const RunResult again = run_online_experiment(spec, Execution::serial);
    CHECK(same_bits(far.trajectory, again.trajectory));
}

TEST_CASE("consensus experiment") {
    ExperimentSpec spec = consensus_spec();
    const RunResult r = run_consensus_experiment(spec);
    REQUIRE_FALSE(r.consensus.empty());
    CHECK(r.consensus.back().reps == 4000);
    for (const auto& row : r.consensus) CHECK(row.bound == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(std::abs(r.consensus.back().variance - 0.125) < 3 * r.consensus.back().std_error);

    spec.inject_noise = false;
    for (const auto& row : run_consensus_experiment(spec).consensus) CHECK(row.variance < 1e-20);

    spec.inject_noise = true;
    spec.budgets = {0.5, 1, 2, 4, 0.25, 1, 1, 3};
    const RunResult het = run_consensus_experiment(spec);
    const double bound = (2 + 1 + 0.5 + 0.25 + 4 + 1 + 1 + 1.0 / 3) / 64.0;
    CHECK(het.consensus.back().bound == doctest::Approx(bound).epsilon(1e-14));
    CHECK(std::abs(het.consensus.back().variance - bound) < 3 * het.consensus.back().std_error);
}

TEST_CASE("non-identifiable draws are redrawn, fixed matrices are not") {
    ExperimentSpec spec = network_spec(Scenario::offline);
    spec.H = UniformMatrixSpec{1, 1 + 1e-14, 8, 2, 42};  // rows equal to rounding, every draw fails
    std::vector<std::string> events;
    CHECK_THROWS_AS(sensor_matrices(spec, &events), NotIdentifiable);
    CHECK(events.size() == 100);
    spec.H = Matrix(Matrix::Ones(8, 2));
    CHECK_THROWS_AS(sensor_matrices(spec), NotIdentifiable);
}

TEST_CASE("spec validation") {
    ExperimentSpec spec = sweep_spec();
    spec.reps = 0;
    CHECK_THROWS_AS(spec.validate(), InvalidInput);
    spec = sweep_spec();
    spec.grid = {-1.0};
    CHECK_THROWS_AS(spec.validate(), InvalidInput);
    spec = sweep_spec();
    spec.theta = Vector::Zero(3);
    CHECK_THROWS_AS(run_mech_sweep(spec), InvalidInput);
}
