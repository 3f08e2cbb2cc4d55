#pragma once

#include "ppcr/bounds.hpp"
#include "ppcr/linalg.hpp"
#include "ppcr/random.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ppcr {

/// Undirected simple graph on nodes 0..n-1.
struct Graph {
    int n = 0;
    std::vector<std::pair<int, int>> edges;

    static Graph complete(int n);
    static Graph path(int n);
    static Graph ring(int n);
};

/// Throws InvalidInput on out-of-range nodes, self loops or duplicate edges.
void validate(const Graph& g);
bool is_connected(const Graph& g);

/// Graph plus symmetric, row-stochastic consensus weights with
/// a_ij > 0 exactly on edges and the diagonal.
class SensorNetwork {
public:
    SensorNetwork(Graph graph, Matrix weights);

    int size() const { return graph_.n; }
    const Graph& graph() const { return graph_; }
    const Matrix& weights() const { return weights_; }
    /// Neighbours of i (excluding i).
    const std::vector<int>& neighbors(int i) const { return neighbors_[static_cast<std::size_t>(i)]; }
    /// Second-largest eigenvalue modulus of the weight matrix.
    double contraction_factor() const;

private:
    Graph graph_;
    Matrix weights_;
    std::vector<std::vector<int>> neighbors_;
};

/// a_ij = 1 / (1 + max(deg_i, deg_j)) on edges, a_ii = 1 - sum_j a_ij.
SensorNetwork metropolis_weights(const Graph& g);

/// One transmitted or released quantity, for the privacy ledger.
struct Message {
    int round = 0;
    int sender = 0;
    std::string label;  // "z" (privatized release), "x", "r", "theta", "G"
    std::vector<double> payload;
};

/// Records everything that leaves a sensor. Raw measurements are never logged;
/// a replay from the logged releases reproduces every other entry.
struct MessageLog {
    std::vector<Message> entries;
    void add(int round, int sender, std::string label, const Matrix& value);
};

/// What a sensor releases per measurement: u = A y + noise, modelled as
/// u = B theta + e with Cov(e) = C, and used linearly through
/// W = B^T C^{-1} (default) and G = B^T C^{-1} B.
enum class ReleaseKind { gaussian, laplace_data, laplace_output };

struct LinearRelease {
    ReleaseKind kind = ReleaseKind::gaussian;
    Matrix A;          // y -> u, p x m
    Matrix B;          // theta -> E u, p x n
    Matrix W;          // n x p, multiplies innovations u - B theta
    Matrix W_printed;  // Gaussian only: H^T S C^{-1}
    Matrix G;          // n x n information of one release
    Matrix noise_root; // measurement noise factor L with L L^T = Sigma_w
    double laplace_scale = 0.0;

    Eigen::Index release_dim() const { return B.rows(); }
    /// One release of the measurement y.
    Vector release(const Vector& y, RandomStream& rng) const;
};

/// Gaussian optimal privatization z = S^{1/2} y + d, d ~ N(0, I).
LinearRelease gaussian_release(const SensorBlock& block);
/// Laplace data perturbation u = y + Laplace(1/sqrt(s)); budget must be s I.
LinearRelease laplace_data_release(const SensorBlock& block);
/// Laplace output perturbation of the local statistic u = H^T y + Laplace(b),
/// b = sqrt(lambda_max(H H^T) / s).
LinearRelease laplace_output_release(const SensorBlock& block);
LinearRelease make_release(ReleaseKind kind, const SensorBlock& block);

std::string_view to_string(ReleaseKind kind);
ReleaseKind parse_release_kind(std::string_view text);

/// Offline (one-shot) identification by average consensus on
/// x_i = W_i u_i and r_i = G_i. The r-trajectory does not depend on data,
/// so it is computed once per (network, releases, iterations).
class OfflinePlan {
public:
    OfflinePlan(const SensorNetwork& net, std::vector<LinearRelease> releases, int iterations);

    int iterations() const { return iterations_; }
    int size() const { return static_cast<int>(releases_.size()); }
    Eigen::Index theta_dim() const { return n_; }
    const std::vector<LinearRelease>& releases() const { return releases_; }
    const SensorNetwork& network() const { return net_; }
    /// r_{i,k}^{-1}, absent while r_{i,k} fails the rank test.
    const std::optional<Matrix>& r_inverse(int k, int i) const;
    const Matrix& r(int k, int i) const;
    /// (sum_i G_i)^{-1}: covariance of the centralized estimate.
    const Matrix& central_covariance() const { return central_cov_; }

private:
    SensorNetwork net_;
    std::vector<LinearRelease> releases_;
    int iterations_;
    Eigen::Index n_;
    std::vector<Matrix> r_;                     // (k, i) row-major
    std::vector<std::optional<Matrix>> r_inv_;  // (k, i)
    Matrix central_cov_;
};

struct OfflineRun {
    /// theta[k][i]; empty optional while sensor i cannot invert r_{i,k}.
    std::vector<std::vector<std::optional<Vector>>> theta;
    Vector central;  // centralized efficient estimate from the same releases
};

/// Runs the offline algorithm on released data u_i (one per sensor).
OfflineRun run_offline_on_releases(const OfflinePlan& plan, const std::vector<Vector>& u, MessageLog* log = nullptr);

/// Privatizes y_i with the plan's releases, then runs the consensus.
OfflineRun run_offline(const OfflinePlan& plan, const std::vector<Vector>& y, RandomStream& rng,
                       MessageLog* log = nullptr);

enum class GainVariant {
    sqrt_budget,  // W = H^T S^{1/2} C^{-1}; optimal and consistent with the scalar bound
    as_printed,   // W = H^T S C^{-1}
};

enum class FusionIndex {
    previous,  // gain uses G_{i,k-1} (as printed)
    current,   // gain uses G_{i,k}
};

struct OnlineParams {
    double tau = 0.7;
    double b = 20.0;
    double k0 = 20.0;
    double zeta = 0.1;
    GainVariant gain = GainVariant::sqrt_budget;
    FusionIndex fusion = FusionIndex::previous;

    /// Throws InvalidInput unless tau in (1/2, 1), b > 0, k0 > 0, zeta in (0, 1).
    void validate() const;
};

/// Online identification: per step a fresh measurement per sensor, one
/// release, consensus push on theta and a quasi-Newton innovation update.
/// Gains depend only on (network, releases, params, k) and are tabulated.
class OnlinePlan {
public:
    OnlinePlan(const SensorNetwork& net, std::vector<LinearRelease> releases, std::vector<Matrix> H,
               OnlineParams params, int steps);

    int steps() const { return steps_; }
    int size() const { return static_cast<int>(releases_.size()); }
    Eigen::Index theta_dim() const { return n_; }
    const SensorNetwork& network() const { return net_; }
    const std::vector<LinearRelease>& releases() const { return releases_; }
    const std::vector<Matrix>& measurement_matrices() const { return H_; }
    const OnlineParams& params() const { return params_; }
    /// Fused information G_{i,k}, k = 0..steps.
    const Matrix& fused(int k, int i) const;
    /// Gain K_{i,k}, k = 1..steps (n x p_i).
    const Matrix& gain(int k, int i) const;
    /// Column-major n x p_i entries of gain(k, i).
    const double* gain_data(int k, int i) const { return gain(k, i).data(); }
    double consensus_step(int k) const;
    /// trace((sum_i G_i)^{-1}): the limit of k * MSE.
    double asymptote() const;

private:
    SensorNetwork net_;
    std::vector<LinearRelease> releases_;
    std::vector<Matrix> H_;
    OnlineParams params_;
    int steps_;
    Eigen::Index n_;
    std::vector<Matrix> fused_;  // (k, i)
    std::vector<Matrix> gains_;  // (k, i), k from 1
    Matrix central_cov_;
};

/// Called after every step k >= 1 with the estimates, sensor-major (N x n).
using OnlineObserver = std::function<void(int k, std::span<const double> theta)>;

/// Runs the online algorithm for plan.steps() steps with true parameter theta.
/// initial: per-sensor theta_{i,0} (empty: zeros).
void run_online(const OnlinePlan& plan, const Vector& theta, RandomStream& rng, const OnlineObserver& observer,
                const std::vector<Vector>& initial = {}, MessageLog* log = nullptr);

/// Privacy-preserving average consensus: x_{i,0} = y_i + d_i / sqrt(S_i),
/// d_i ~ N(0, 1) (d forced to zero when inject_noise is false), then
/// weighted averaging. Returns x[k][i], k = 0..iterations.
std::vector<std::vector<double>> run_private_consensus(const SensorNetwork& net, const std::vector<double>& y,
                                                       const std::vector<double>& budgets, int iterations,
                                                       RandomStream& rng, bool inject_noise = true);

}  // namespace ppcr
