#include "ppcr/network.hpp"

#include "ppcr/errors.hpp"
#include "ppcr/noise.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <set>

namespace ppcr {

namespace {

double scalar_budget(const SensorBlock& block, const char* op) {
    double s = 0.0;
    if (!block.budget.is_scaled_identity(&s)) {
        throw Unsupported(std::string(op) + ": Laplace calibration needs a budget of the form s * I");
    }
    if (!(s > 0.0)) throw InvalidInput(std::string(op) + ": budget must be > 0");
    return s;
}

void check_block(const SensorBlock& block, const char* op) {
    if (block.H.rows() < 1 || block.H.cols() < 1) throw InvalidInput(std::string(op) + ": empty H");
    if (block.budget.dim() != block.H.rows() || block.noise_cov.dim() != block.H.rows()) {
        throw InvalidInput(std::string(op) + ": budget / noise dimensions must equal rows(H)");
    }
}

/// Fills W = B^T C^{-1} and G = B^T C^{-1} B.
void finish_release(LinearRelease& rel, const Matrix& C) {
    const auto ldlt = C.ldlt();
    rel.W = ldlt.solve(rel.B).transpose();
    rel.G = SymMatrix(rel.W * rel.B).matrix();
}

// next[i] = sum_j a_ij prev[j], sparse over the graph
template <class T>
std::vector<T> mix(const SensorNetwork& net, const std::vector<T>& prev) {
    const Matrix& a = net.weights();
    std::vector<T> next(prev.size());
    for (int i = 0; i < net.size(); ++i) {
        const auto ui = static_cast<std::size_t>(i);
        T acc = a(i, i) * prev[ui];
        for (int j : net.neighbors(i)) acc += a(i, j) * prev[static_cast<std::size_t>(j)];
        next[ui] = std::move(acc);
    }
    return next;
}

constexpr std::array<std::pair<ReleaseKind, std::string_view>, 3> kReleaseNames{{
    {ReleaseKind::gaussian, "gaussian"},
    {ReleaseKind::laplace_data, "laplace-data"},
    {ReleaseKind::laplace_output, "laplace-output"},
}};

}  // namespace

Graph Graph::complete(int n) {
    Graph g{n, {}};
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) g.edges.emplace_back(i, j);
    }
    return g;
}

Graph Graph::path(int n) {
    Graph g{n, {}};
    for (int i = 0; i + 1 < n; ++i) g.edges.emplace_back(i, i + 1);
    return g;
}

Graph Graph::ring(int n) {
    Graph g = path(n);
    if (n > 2) g.edges.emplace_back(n - 1, 0);
    return g;
}

void validate(const Graph& g) {
    if (g.n < 1) throw InvalidInput("graph: n must be >= 1");
    std::set<std::pair<int, int>> seen;
    for (auto [i, j] : g.edges) {
        if (i < 0 || j < 0 || i >= g.n || j >= g.n) {
            throw InvalidInput("graph: edge [" + std::to_string(i) + "," + std::to_string(j) + "] out of range");
        }
        if (i == j) throw InvalidInput("graph: self loop at node " + std::to_string(i));
        if (!seen.insert({std::min(i, j), std::max(i, j)}).second) {
            throw InvalidInput("graph: duplicate edge [" + std::to_string(i) + "," + std::to_string(j) + "]");
        }
    }
}

bool is_connected(const Graph& g) {
    validate(g);
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(g.n));
    for (auto [i, j] : g.edges) {
        adj[static_cast<std::size_t>(i)].push_back(j);
        adj[static_cast<std::size_t>(j)].push_back(i);
    }
    std::vector<bool> seen(static_cast<std::size_t>(g.n), false);
    std::queue<int> todo;
    todo.push(0);
    seen[0] = true;
    int count = 1;
    while (!todo.empty()) {
        const int v = todo.front();
        todo.pop();
        for (int w : adj[static_cast<std::size_t>(v)]) {
            if (!seen[static_cast<std::size_t>(w)]) {
                seen[static_cast<std::size_t>(w)] = true;
                ++count;
                todo.push(w);
            }
        }
    }
    return count == g.n;
}

SensorNetwork::SensorNetwork(Graph graph, Matrix weights) : graph_(std::move(graph)), weights_(std::move(weights)) {
    if (!is_connected(graph_)) throw InvalidInput("sensor network: graph is not connected");
    const int n = graph_.n;
    if (weights_.rows() != n || weights_.cols() != n) throw InvalidInput("sensor network: weights must be n x n");
    neighbors_.assign(static_cast<std::size_t>(n), {});
    Eigen::MatrixXi adjacent = Eigen::MatrixXi::Identity(n, n);
    for (auto [i, j] : graph_.edges) {
        neighbors_[static_cast<std::size_t>(i)].push_back(j);
        neighbors_[static_cast<std::size_t>(j)].push_back(i);
        adjacent(i, j) = adjacent(j, i) = 1;
    }
    for (auto& nb : neighbors_) std::sort(nb.begin(), nb.end());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (weights_(i, j) != weights_(j, i)) throw InvalidInput("sensor network: weights are not symmetric");
            if (adjacent(i, j) != 0 ? !(weights_(i, j) > 0.0) : weights_(i, j) != 0.0) {
                throw InvalidInput("sensor network: a_" + std::to_string(i) + std::to_string(j) +
                                   " must be > 0 exactly on edges and the diagonal");
            }
        }
        if (std::abs(weights_.row(i).sum() - 1.0) > 1e-12) {
            throw InvalidInput("sensor network: row " + std::to_string(i) + " does not sum to 1");
        }
    }
}

double SensorNetwork::contraction_factor() const {
    if (graph_.n == 1) return 0.0;
    const Vector ev = SymMatrix(weights_).eigenvalues();  // ascending, last is 1
    return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 2)));
}

SensorNetwork metropolis_weights(const Graph& g) {
    validate(g);
    std::vector<int> deg(static_cast<std::size_t>(g.n), 0);
    for (auto [i, j] : g.edges) {
        ++deg[static_cast<std::size_t>(i)];
        ++deg[static_cast<std::size_t>(j)];
    }
    Matrix a = Matrix::Zero(g.n, g.n);
    for (auto [i, j] : g.edges) {
        const double w = 1.0 / (1.0 + std::max(deg[static_cast<std::size_t>(i)], deg[static_cast<std::size_t>(j)]));
        a(i, j) = a(j, i) = w;
    }
    for (int i = 0; i < g.n; ++i) a(i, i) = 1.0 - a.row(i).sum();
    return SensorNetwork(g, std::move(a));
}

void MessageLog::add(int round, int sender, std::string label, const Matrix& value) {
    entries.push_back({round, sender, std::move(label), std::vector<double>(value.data(), value.data() + value.size())});
}

Vector LinearRelease::release(const Vector& y, RandomStream& rng) const {
    if (y.size() != A.cols()) throw InvalidInput("release: measurement dimension mismatch");
    Vector u = A * y;
    if (kind == ReleaseKind::gaussian) {
        for (Eigen::Index j = 0; j < u.size(); ++j) u(j) += rng.normal();
    } else {
        for (Eigen::Index j = 0; j < u.size(); ++j) u(j) += sample_laplace(laplace_scale, rng);
    }
    return u;
}

LinearRelease gaussian_release(const SensorBlock& block) {
    check_block(block, "gaussian_release");
    const Eigen::Index m = block.H.rows();
    const Matrix root = psd_sqrt(block.budget).matrix();
    const Matrix C = root * block.noise_cov.matrix() * root + Matrix::Identity(m, m);
    LinearRelease rel;
    rel.kind = ReleaseKind::gaussian;
    rel.A = root;
    rel.B = root * block.H;
    rel.noise_root = psd_sqrt(block.noise_cov).matrix();
    finish_release(rel, C);
    rel.W_printed = C.ldlt().solve(block.budget.matrix() * block.H).transpose();
    return rel;
}

LinearRelease laplace_data_release(const SensorBlock& block) {
    check_block(block, "laplace_data_release");
    const double s = scalar_budget(block, "laplace_data_release");
    const Eigen::Index m = block.H.rows();
    LinearRelease rel;
    rel.kind = ReleaseKind::laplace_data;
    rel.laplace_scale = 1.0 / std::sqrt(s);
    rel.A = Matrix::Identity(m, m);
    rel.B = block.H;
    rel.noise_root = psd_sqrt(block.noise_cov).matrix();
    const double lap_var = 2.0 * rel.laplace_scale * rel.laplace_scale;
    finish_release(rel, block.noise_cov.matrix() + lap_var * Matrix::Identity(m, m));
    return rel;
}

LinearRelease laplace_output_release(const SensorBlock& block) {
    check_block(block, "laplace_output_release");
    const double s = scalar_budget(block, "laplace_output_release");
    const Eigen::Index n = block.H.cols();
    const double top = SymMatrix(block.H * block.H.transpose()).eigenvalues().maxCoeff();
    if (!(top > 0.0)) throw InvalidInput("laplace_output_release: H is zero");
    LinearRelease rel;
    rel.kind = ReleaseKind::laplace_output;
    rel.laplace_scale = std::sqrt(top / s);
    rel.A = block.H.transpose();
    rel.B = block.H.transpose() * block.H;
    rel.noise_root = psd_sqrt(block.noise_cov).matrix();
    const double lap_var = 2.0 * rel.laplace_scale * rel.laplace_scale;
    const Matrix C = block.H.transpose() * block.noise_cov.matrix() * block.H + lap_var * Matrix::Identity(n, n);
    finish_release(rel, C);
    return rel;
}

LinearRelease make_release(ReleaseKind kind, const SensorBlock& block) {
    switch (kind) {
        case ReleaseKind::gaussian: return gaussian_release(block);
        case ReleaseKind::laplace_data: return laplace_data_release(block);
        case ReleaseKind::laplace_output: return laplace_output_release(block);
    }
    throw InvalidInput("make_release: unknown kind");
}

std::string_view to_string(ReleaseKind kind) {
    for (const auto& [k, name] : kReleaseNames) {
        if (k == kind) return name;
    }
    return "gaussian";
}

ReleaseKind parse_release_kind(std::string_view text) {
    for (const auto& [k, name] : kReleaseNames) {
        if (name == text) return k;
    }
    throw InvalidInput("unknown release kind '" + std::string(text) + "'");
}

// ---------------------------------------------------------------- offline

OfflinePlan::OfflinePlan(const SensorNetwork& net, std::vector<LinearRelease> releases, int iterations)
    : net_(net), releases_(std::move(releases)), iterations_(iterations) {
    const int N = net.size();
    if (static_cast<int>(releases_.size()) != N) throw InvalidInput("offline plan: one release per sensor required");
    if (iterations < 0) throw InvalidInput("offline plan: iterations must be >= 0");
    n_ = releases_.front().G.rows();
    Matrix total = Matrix::Zero(n_, n_);
    for (const auto& rel : releases_) {
        if (rel.G.rows() != n_) throw InvalidInput("offline plan: inconsistent parameter dimension");
        total += rel.G;
    }
    if (!is_positive_definite_relative(SymMatrix(total), kRankTolerance)) {
        throw NotIdentifiable("offline plan: the sensors are not jointly identifiable");
    }
    central_cov_ = robust_inverse(SymMatrix(total)).matrix();

    std::vector<Matrix> cur;
    cur.reserve(releases_.size());
    for (const auto& rel : releases_) cur.push_back(rel.G);
    r_.reserve(static_cast<std::size_t>((iterations + 1) * N));
    r_inv_.reserve(r_.capacity());
    for (int k = 0; k <= iterations; ++k) {
        if (k > 0) cur = mix(net_, cur);
        for (int i = 0; i < N; ++i) {
            const SymMatrix ri(cur[static_cast<std::size_t>(i)]);
            r_.push_back(ri.matrix());
            std::optional<Matrix> inv;
            if (is_positive_definite_relative(ri, kRankTolerance)) {
                try {
                    inv = robust_inverse(ri).matrix();
                } catch (const NotIdentifiable&) {
                    // passes the rank test but too ill-conditioned to invert
                }
            }
            r_inv_.push_back(std::move(inv));
        }
    }
}

const std::optional<Matrix>& OfflinePlan::r_inverse(int k, int i) const {
    return r_inv_.at(static_cast<std::size_t>(k * size() + i));
}

const Matrix& OfflinePlan::r(int k, int i) const { return r_.at(static_cast<std::size_t>(k * size() + i)); }

OfflineRun run_offline_on_releases(const OfflinePlan& plan, const std::vector<Vector>& u, MessageLog* log) {
    const int N = plan.size();
    if (static_cast<int>(u.size()) != N) throw InvalidInput("run_offline: one release per sensor required");
    std::vector<Vector> x;
    x.reserve(u.size());
    Vector sum = Vector::Zero(plan.theta_dim());
    for (int i = 0; i < N; ++i) {
        const auto& rel = plan.releases()[static_cast<std::size_t>(i)];
        if (u[static_cast<std::size_t>(i)].size() != rel.release_dim()) {
            throw InvalidInput("run_offline: release " + std::to_string(i) + " has the wrong dimension");
        }
        x.push_back(rel.W * u[static_cast<std::size_t>(i)]);
        sum += x.back();
        if (log != nullptr) log->add(0, i, "z", u[static_cast<std::size_t>(i)]);
    }

    OfflineRun out;
    out.central = plan.central_covariance() * sum;
    out.theta.resize(static_cast<std::size_t>(plan.iterations() + 1));
    for (int k = 0; k <= plan.iterations(); ++k) {
        if (k > 0) x = mix(plan.network(), x);
        auto& row = out.theta[static_cast<std::size_t>(k)];
        row.resize(static_cast<std::size_t>(N));
        for (int i = 0; i < N; ++i) {
            const auto& inv = plan.r_inverse(k, i);
            if (inv) row[static_cast<std::size_t>(i)] = *inv * x[static_cast<std::size_t>(i)];
            if (log != nullptr && k < plan.iterations()) {
                log->add(k, i, "x", x[static_cast<std::size_t>(i)]);
                log->add(k, i, "r", plan.r(k, i));
            }
        }
    }
    return out;
}

OfflineRun run_offline(const OfflinePlan& plan, const std::vector<Vector>& y, RandomStream& rng, MessageLog* log) {
    if (static_cast<int>(y.size()) != plan.size()) throw InvalidInput("run_offline: one measurement per sensor required");
    std::vector<Vector> u;
    u.reserve(y.size());
    for (int i = 0; i < plan.size(); ++i) {
        u.push_back(plan.releases()[static_cast<std::size_t>(i)].release(y[static_cast<std::size_t>(i)], rng));
    }
    return run_offline_on_releases(plan, u, log);
}

// ---------------------------------------------------------------- online

void OnlineParams::validate() const {
    if (!(tau > 0.5 && tau < 1.0)) throw InvalidInput("online params: tau must be in (1/2, 1)");
    if (!(b > 0.0)) throw InvalidInput("online params: b must be > 0");
    if (!(k0 > 0.0)) throw InvalidInput("online params: k0 must be > 0");
    if (!(zeta > 0.0 && zeta < 1.0)) throw InvalidInput("online params: zeta must be in (0, 1)");
}

OnlinePlan::OnlinePlan(const SensorNetwork& net, std::vector<LinearRelease> releases, std::vector<Matrix> H,
                       OnlineParams params, int steps)
    : net_(net), releases_(std::move(releases)), H_(std::move(H)), params_(params), steps_(steps) {
    params_.validate();
    const int N = net.size();
    if (static_cast<int>(releases_.size()) != N || static_cast<int>(H_.size()) != N) {
        throw InvalidInput("online plan: one release and one H per sensor required");
    }
    if (steps < 1) throw InvalidInput("online plan: steps must be >= 1");
    n_ = releases_.front().G.rows();
    Matrix total = Matrix::Zero(n_, n_);
    for (int i = 0; i < N; ++i) {
        const auto& rel = releases_[static_cast<std::size_t>(i)];
        const auto& h = H_[static_cast<std::size_t>(i)];
        if (rel.G.rows() != n_ || h.cols() != n_ || h.rows() != rel.A.cols()) {
            throw InvalidInput("online plan: inconsistent dimensions at sensor " + std::to_string(i));
        }
        total += rel.G;
    }
    if (!is_positive_definite_relative(SymMatrix(total), kRankTolerance)) {
        throw NotIdentifiable("online plan: the sensors are not jointly identifiable");
    }
    central_cov_ = robust_inverse(SymMatrix(total)).matrix();

    std::vector<Matrix> cur;
    for (const auto& rel : releases_) cur.push_back(rel.G);
    fused_.reserve(static_cast<std::size_t>((steps + 1) * N));
    gains_.reserve(static_cast<std::size_t>(steps * N));
    for (const auto& g : cur) fused_.push_back(g);
    const Matrix I = Matrix::Identity(n_, n_);
    for (int k = 1; k <= steps; ++k) {
        std::vector<Matrix> next = mix(net_, cur);
        const double ridge = std::pow(params_.zeta, k);
        for (int i = 0; i < N; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            const auto& rel = releases_[ui];
            const Matrix& w = (params_.gain == GainVariant::as_printed && rel.kind == ReleaseKind::gaussian)
                                  ? rel.W_printed
                                  : rel.W;
            const Matrix& g = params_.fusion == FusionIndex::previous ? cur[ui] : next[ui];
            gains_.push_back((g + ridge * I).ldlt().solve(w));
            fused_.push_back(next[ui]);
        }
        cur = std::move(next);
    }
}

const Matrix& OnlinePlan::fused(int k, int i) const { return fused_.at(static_cast<std::size_t>(k * size() + i)); }

const Matrix& OnlinePlan::gain(int k, int i) const {
    if (k < 1) throw InvalidInput("online plan: gains start at k = 1");
    return gains_.at(static_cast<std::size_t>((k - 1) * size() + i));
}

double OnlinePlan::consensus_step(int k) const {
    return params_.b / std::pow(static_cast<double>(k) + params_.k0, params_.tau);
}

double OnlinePlan::asymptote() const { return central_cov_.trace(); }

void run_online(const OnlinePlan& plan, const Vector& theta, RandomStream& rng, const OnlineObserver& observer,
                const std::vector<Vector>& initial, MessageLog* log) {
    const int N = plan.size();
    const auto n = static_cast<std::size_t>(plan.theta_dim());
    if (static_cast<std::size_t>(theta.size()) != n) throw InvalidInput("run_online: theta dimension mismatch");
    if (!initial.empty() && static_cast<int>(initial.size()) != N) {
        throw InvalidInput("run_online: initial estimates must be given for every sensor");
    }
    const Matrix& a = plan.network().weights();

    // Flat per-sensor data so the step loop does not allocate.
    struct Local {
        std::size_t m, p;
        std::vector<double> mean_y;  // H theta
        Matrix L, A, B;
        bool gaussian;
        double lap;
        std::vector<int> nb;
        std::vector<double> nb_w;
    };
    std::vector<Local> loc(static_cast<std::size_t>(N));
    std::size_t max_m = 0;
    std::size_t max_p = 0;
    for (int i = 0; i < N; ++i) {
        const auto& rel = plan.releases()[static_cast<std::size_t>(i)];
        auto& l = loc[static_cast<std::size_t>(i)];
        const Vector hy = plan.measurement_matrices()[static_cast<std::size_t>(i)] * theta;
        l.m = static_cast<std::size_t>(hy.size());
        l.p = static_cast<std::size_t>(rel.release_dim());
        l.mean_y.assign(hy.data(), hy.data() + hy.size());
        l.L = rel.noise_root;
        l.A = rel.A;
        l.B = rel.B;
        l.gaussian = rel.kind == ReleaseKind::gaussian;
        l.lap = rel.laplace_scale;
        l.nb = plan.network().neighbors(i);
        for (int j : l.nb) l.nb_w.push_back(a(i, j));
        max_m = std::max(max_m, l.m);
        max_p = std::max(max_p, l.p);
    }

    std::vector<double> est(static_cast<std::size_t>(N) * n, 0.0);
    for (int i = 0; i < N && !initial.empty(); ++i) {
        const Vector& v = initial[static_cast<std::size_t>(i)];
        if (static_cast<std::size_t>(v.size()) != n) throw InvalidInput("run_online: initial estimate dimension mismatch");
        std::copy(v.data(), v.data() + v.size(), est.begin() + static_cast<std::ptrdiff_t>(i * n));
    }
    std::vector<double> prev(est.size());
    std::vector<double> xi(max_m), y(max_m), u(max_p);

    for (int k = 1; k <= plan.steps(); ++k) {
        prev = est;
        const double alpha = plan.consensus_step(k);
        const double inv_k = 1.0 / static_cast<double>(k);
        for (int i = 0; i < N; ++i) {
            const auto& l = loc[static_cast<std::size_t>(i)];
            // y = H theta + L xi
            for (std::size_t r = 0; r < l.m; ++r) xi[r] = rng.normal();
            for (std::size_t r = 0; r < l.m; ++r) {
                double acc = l.mean_y[r];
                for (std::size_t c = 0; c < l.m; ++c) acc += l.L(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * xi[c];
                y[r] = acc;
            }
            // u = A y + privacy noise
            for (std::size_t r = 0; r < l.p; ++r) {
                double acc = 0.0;
                for (std::size_t c = 0; c < l.m; ++c) acc += l.A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * y[c];
                u[r] = acc + (l.gaussian ? rng.normal() : sample_laplace(l.lap, rng));
            }
            const double* th_prev = prev.data() + static_cast<std::size_t>(i) * n;
            if (log != nullptr) {
                log->add(k, i, "z", Eigen::Map<const Vector>(u.data(), static_cast<Eigen::Index>(l.p)));
                log->add(k, i, "theta", Eigen::Map<const Vector>(th_prev, static_cast<Eigen::Index>(n)));
                log->add(k, i, "G", plan.fused(k - 1, i));
            }
            // innovation u - B theta_{k-1}
            for (std::size_t r = 0; r < l.p; ++r) {
                double acc = u[r];
                for (std::size_t c = 0; c < n; ++c) acc -= l.B(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * th_prev[c];
                u[r] = acc;
            }
            double* th = est.data() + static_cast<std::size_t>(i) * n;
            const double* K = plan.gain_data(k, i);
            for (std::size_t c = 0; c < n; ++c) {
                double push = 0.0;
                for (std::size_t q = 0; q < l.nb.size(); ++q) {
                    push += l.nb_w[q] * (th_prev[c] - prev[static_cast<std::size_t>(l.nb[q]) * n + c]);
                }
                double upd = 0.0;
                for (std::size_t r = 0; r < l.p; ++r) upd += K[c + r * n] * u[r];
                th[c] = th_prev[c] - alpha * push + inv_k * upd;
            }
        }
        if (observer) observer(k, std::span<const double>(est));
    }
}

// ---------------------------------------------------------------- consensus

std::vector<std::vector<double>> run_private_consensus(const SensorNetwork& net, const std::vector<double>& y,
                                                       const std::vector<double>& budgets, int iterations,
                                                       RandomStream& rng, bool inject_noise) {
    const int N = net.size();
    if (static_cast<int>(y.size()) != N || static_cast<int>(budgets.size()) != N) {
        throw InvalidInput("private consensus: one value and one budget per agent required");
    }
    if (iterations < 0) throw InvalidInput("private consensus: iterations must be >= 0");
    std::vector<double> x(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!(budgets[i] > 0.0)) throw InvalidInput("private consensus: budgets must be > 0");
        x[i] = y[i] + (inject_noise ? rng.normal() / std::sqrt(budgets[i]) : 0.0);
    }
    std::vector<std::vector<double>> out;
    out.reserve(static_cast<std::size_t>(iterations + 1));
    out.push_back(x);
    for (int k = 1; k <= iterations; ++k) {
        x = mix(net, x);
        out.push_back(x);
    }
    return out;
}

}  // namespace ppcr
