#include "oracles.hpp"

#include "ppcr/errors.hpp"
#include "ppcr/network.hpp"
#include "ppcr/parallel.hpp"

#include <doctest.h>

#include <cmath>

using namespace ppcr;

namespace {

// Eight sensors on a ring with two chords.
Graph fig_graph() {
    Graph g = Graph::ring(8);
    g.edges.emplace_back(0, 4);
    g.edges.emplace_back(2, 6);
    return g;
}

std::vector<SensorBlock> row_blocks(const Matrix& H, double s, double sigma) {
    std::vector<SensorBlock> out;
    for (Eigen::Index i = 0; i < H.rows(); ++i)
        out.push_back({H.row(i), PsdMatrix::scaled_identity(1, s), PsdMatrix::scaled_identity(1, sigma * sigma)});
    return out;
}

std::vector<LinearRelease> releases(ReleaseKind kind, const std::vector<SensorBlock>& blocks) {
    std::vector<LinearRelease> out;
    for (const auto& b : blocks) out.push_back(make_release(kind, b));
    return out;
}

}  // namespace

TEST_CASE("graph validation") {
    CHECK_NOTHROW(validate(fig_graph()));
    CHECK(is_connected(fig_graph()));
    CHECK_THROWS_AS(validate(Graph{3, {{0, 0}}}), InvalidInput);
    CHECK_THROWS_AS(validate(Graph{3, {{0, 1}, {1, 0}}}), InvalidInput);
    CHECK_THROWS_AS(validate(Graph{3, {{0, 3}}}), InvalidInput);
    CHECK_FALSE(is_connected(Graph{4, {{0, 1}, {2, 3}}}));
    CHECK_THROWS_AS(metropolis_weights(Graph{4, {{0, 1}, {2, 3}}}), InvalidInput);
}

TEST_CASE("Metropolis weights") {
    const SensorNetwork net = metropolis_weights(fig_graph());
    const Matrix& A = net.weights();
    CHECK((A - A.transpose()).norm() == 0.0);
    CHECK((A.rowwise().sum() - Vector::Ones(8)).norm() < 1e-15);
    // degrees: 0, 2, 4, 6 have 3 neighbours, the rest 2
    CHECK(A(0, 4) == doctest::Approx(0.25));
    CHECK(A(0, 1) == doctest::Approx(0.25));
    CHECK(A(1, 2) == doctest::Approx(0.25));
    CHECK(A(0, 2) == 0.0);
    CHECK(A(1, 1) == doctest::Approx(0.5));
    const double slem = net.contraction_factor();
    CHECK(slem > 0.0);
    CHECK(slem < 1.0);

    const SensorNetwork k5 = metropolis_weights(Graph::complete(5));
    CHECK((k5.weights() - Matrix::Constant(5, 5, 0.2)).norm() < 1e-15);
}

TEST_CASE("offline consensus on a complete graph is exact after one round") {
    std::mt19937_64 g(1);
    const Matrix H = oracle::uniform_matrix(g, 5, 2);
    const OfflinePlan plan(metropolis_weights(Graph::complete(5)), releases(ReleaseKind::gaussian, row_blocks(H, 1.0, 0.2)), 3);
    std::vector<Vector> y;
    for (int i = 0; i < 5; ++i) y.push_back(Vector::Constant(1, 0.1 * i));
    RandomStream rng(2);
    const OfflineRun run = run_offline(plan, y, rng);
    for (int i = 0; i < 5; ++i) {
        REQUIRE(run.theta[1][static_cast<std::size_t>(i)].has_value());
        CHECK((*run.theta[1][static_cast<std::size_t>(i)] - run.central).norm() < 1e-12);
    }
}

TEST_CASE("offline estimates converge to the centralized estimate") {
    std::mt19937_64 g(42);
    const Matrix H = oracle::uniform_matrix(g, 8, 2);
    const Vector theta(Vector::LinSpaced(2, 0.36, 0.75));
    for (auto kind : {ReleaseKind::gaussian, ReleaseKind::laplace_data, ReleaseKind::laplace_output}) {
        const auto blocks = row_blocks(H, 1.0, 0.2);
        const OfflinePlan plan(metropolis_weights(fig_graph()), releases(kind, blocks), 200);
        RandomStream rng(3);
        std::vector<Vector> y;
        for (int i = 0; i < 8; ++i) y.push_back(H.row(i) * theta + Vector::Constant(1, 0.2 * rng.normal()));
        const OfflineRun run = run_offline(plan, y, rng);
        double worst = 0.0;
        for (const auto& est : run.theta[200]) {
            REQUIRE(est.has_value());
            worst = std::max(worst, (*est - run.central).cwiseAbs().maxCoeff());
        }
        CHECK(worst < 1e-8);
    }
}

TEST_CASE("centralized Gaussian-release estimate has covariance Sigma_PPCR") {
    std::mt19937_64 g(42);
    const Matrix H = oracle::uniform_matrix(g, 8, 2);
    const auto blocks = row_blocks(H, 1.0, 0.2);
    const OfflinePlan plan(metropolis_weights(fig_graph()), releases(ReleaseKind::gaussian, blocks), 1);
    const double bound = pp_fisher_additive(blocks).matrix().inverse().trace();
    CHECK(plan.central_covariance().trace() == doctest::Approx(bound).epsilon(1e-12));
    const Vector theta(Vector::LinSpaced(2, 0.36, 0.75));
    const auto acc = replicate<ScalarStats>(20000, 9, Execution::parallel, [] { return ScalarStats{}; },
        [&](std::size_t, RandomStream& rng, ScalarStats& st) {
            std::vector<Vector> y;
            for (int i = 0; i < 8; ++i) y.push_back(H.row(i) * theta + Vector::Constant(1, 0.2 * rng.normal()));
            st.add((run_offline(plan, y, rng).central - theta).squaredNorm());
        });
    CHECK(std::abs(acc.mean() - bound) < 4 * acc.std_error());
}

TEST_CASE("message log holds releases only and replays exactly") {
    std::mt19937_64 g(5);
    const Matrix H = oracle::uniform_matrix(g, 8, 2);
    const OfflinePlan plan(metropolis_weights(fig_graph()), releases(ReleaseKind::gaussian, row_blocks(H, 2.0, 0.2)), 20);
    std::vector<Vector> y;
    for (int i = 0; i < 8; ++i) y.push_back(Vector::Constant(1, 0.37 + 0.01 * i));
    RandomStream rng(6);
    MessageLog log;
    const OfflineRun run = run_offline(plan, y, rng, &log);

    std::vector<Vector> u(8);
    for (const auto& m : log.entries) {
        if (m.label == "z") u[static_cast<std::size_t>(m.sender)] = Eigen::Map<const Vector>(m.payload.data(), 1);
        for (double v : m.payload)
            for (const auto& yi : y) CHECK(v != yi(0));
    }
    MessageLog replay;
    const OfflineRun again = run_offline_on_releases(plan, u, &replay);
    REQUIRE(replay.entries.size() == log.entries.size());
    for (std::size_t e = 0; e < log.entries.size(); ++e) CHECK(replay.entries[e].payload == log.entries[e].payload);
    CHECK(again.central == run.central);
}

TEST_CASE("online estimates approach the centralized asymptote") {
    std::mt19937_64 g(42);
    const Matrix H = oracle::uniform_matrix(g, 8, 2);
    const auto blocks = row_blocks(H, 1.0, 0.2);
    std::vector<Matrix> Hs;
    for (const auto& b : blocks) Hs.push_back(b.H);
    const int steps = 3000;
    const OnlinePlan plan(metropolis_weights(fig_graph()), releases(ReleaseKind::gaussian, blocks), Hs, OnlineParams{}, steps);
    const double asym = plan.asymptote();
    CHECK(asym == doctest::Approx(pp_fisher_additive(blocks).matrix().inverse().trace()).epsilon(1e-12));

    const Vector theta(Vector::LinSpaced(2, 0.36, 0.75));
    const auto acc = replicate<ScalarStats>(300, 11, Execution::parallel, [] { return ScalarStats{}; },
        [&](std::size_t, RandomStream& rng, ScalarStats& st) {
            double last = 0.0;
            run_online(plan, theta, rng, [&](int k, std::span<const double> th) {
                if (k != steps) return;
                for (int i = 0; i < 8; ++i)
                    for (int j = 0; j < 2; ++j) last += std::pow(th[static_cast<std::size_t>(2 * i + j)] - theta(j), 2);
                last /= 8;
            });
            st.add(steps * last);
        });
    // within 3 se plus a 15% transient allowance at this horizon
    CHECK(std::abs(acc.mean() - asym) < 0.15 * asym + 3 * acc.std_error());

    CHECK_THROWS_AS((OnlineParams{0.4}.validate()), InvalidInput);
    CHECK_THROWS_AS((OnlineParams{0.7, 20, 20, 1.5}.validate()), InvalidInput);
}

TEST_CASE("private average consensus") {
    const SensorNetwork net = metropolis_weights(fig_graph());
    std::vector<double> y{1, 2, 3, 4, 5, 6, 7, 8};
    RandomStream rng(1);
    const auto clean = run_private_consensus(net, y, std::vector<double>(8, 1.0), 200, rng, false);
    for (double v : clean.back()) CHECK(v == doctest::Approx(4.5).epsilon(1e-12));
    // the average is preserved at every round
    for (const auto& row : clean) {
        double s = 0;
        for (double v : row) s += v;
        CHECK(s == doctest::Approx(36.0).epsilon(1e-13));
    }
    const auto acc = replicate<ScalarStats>(20000, 2, Execution::parallel, [] { return ScalarStats{}; },
        [&](std::size_t, RandomStream& r, ScalarStats& st) {
            st.add(std::pow(run_private_consensus(net, y, std::vector<double>(8, 1.0), 200, r).back()[0] - 4.5, 2));
        });
    CHECK(std::abs(acc.mean() - 0.125) < 3 * acc.std_error());
}
