#include "ppcr/experiments.hpp"

#include "ppcr/bounds.hpp"
#include "ppcr/errors.hpp"
#include "ppcr/estimators.hpp"
#include "ppcr/fisher.hpp"
#include "ppcr/mechanisms.hpp"
#include "ppcr/scenario.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <set>

namespace ppcr {

namespace {

constexpr std::array<std::pair<Scenario, std::string_view>, 4> kScenarioNames{{
    {Scenario::mech_sweep, "mech_sweep"},
    {Scenario::offline, "offline"},
    {Scenario::online, "online"},
    {Scenario::consensus, "consensus"},
}};

const std::vector<MechanismDescriptor> kSweepMechanisms{
    {MechanismKind::gaussian_optimal}, {MechanismKind::laplace_data}, {MechanismKind::laplace_output},
    {MechanismKind::cauchy_data},      {MechanismKind::cos2_data},    {MechanismKind::twin_uniform_mult},
};

bool sweepable(MechanismKind kind) {
    return std::any_of(kSweepMechanisms.begin(), kSweepMechanisms.end(),
                       [kind](const MechanismDescriptor& d) { return d.kind == kind; });
}

double max_z(const Matrix& mean, const Matrix& se) {
    double z = 0.0;
    for (Eigen::Index i = 0; i < mean.size(); ++i) {
        const double m = std::abs(mean.data()[i]);
        const double s = se.data()[i];
        if (m == 0.0) continue;
        z = std::max(z, s > 0.0 ? m / s : std::numeric_limits<double>::infinity());
    }
    return z;
}

const std::vector<ReleaseKind> kReleaseKinds{ReleaseKind::gaussian, ReleaseKind::laplace_data,
                                             ReleaseKind::laplace_output};

struct ErrorAcc {
    ScalarStats stats;
    std::size_t unconverged = 0;
    void merge(const ErrorAcc& o) {
        stats.merge(o.stats);
        unconverged += o.unconverged;
    }
};

// One stats cell per (checkpoint, sensor) plus a sensor-average column.
struct GridAcc {
    std::size_t cols = 0;
    std::vector<ScalarStats> cells;
    ScalarStats central;
    double max_dev = 0.0;

    GridAcc(std::size_t rows, std::size_t cols_) : cols(cols_), cells(rows * cols_) {}
    ScalarStats& at(std::size_t r, std::size_t c) { return cells[r * cols + c]; }
    void merge(const GridAcc& o) {
        for (std::size_t i = 0; i < cells.size(); ++i) cells[i].merge(o.cells[i]);
        central.merge(o.central);
        max_dev = std::max(max_dev, o.max_dev);
    }
};

struct ValuesAcc {
    std::vector<double> values;
    void merge(const ValuesAcc& o) { values.insert(values.end(), o.values.begin(), o.values.end()); }
};

double squared_error(const Vector& a, const Vector& b) { return (a - b).squaredNorm(); }

MeasurementModel sweep_model(const ExperimentSpec& spec) {
    MeasurementModel model = MeasurementModel::gaussian(realize(spec.H), spec.sigma_w);
    model.validate();
    if (spec.theta.size() != model.n()) throw InvalidInput("theta has the wrong dimension for H");
    return model;
}

std::vector<SensorBlock> gaussian_blocks(const std::vector<Matrix>& H, double s, double sigma) {
    std::vector<SensorBlock> blocks;
    for (const auto& h : H) {
        const Eigen::Index m = h.rows();
        blocks.push_back({h, PsdMatrix::scaled_identity(m, s), PsdMatrix::scaled_identity(m, sigma * sigma)});
    }
    return blocks;
}

/// Builds (sampler, estimator) for one mechanism at one budget. Returns
/// false with a note when the calibration is infeasible.
using Trial = std::function<double(RandomStream&, bool*)>;

bool make_trial(MechanismKind kind, const MeasurementModel& model, const Vector& theta, double s,
                const ExperimentSpec& spec, Trial* out, std::string* note) {
    const PsdMatrix S = PsdMatrix::scaled_identity(model.m(), s);
    auto with = [&](Mechanism mech, auto estimator) {
        *out = [&model, theta, mech = std::move(mech), estimator](RandomStream& rng, bool* converged) {
            const Vector y = model.measure(theta, rng);
            const Vector z = sample(mech, y, rng);
            const Estimate e = estimator(z);
            *converged = e.converged;
            return squared_error(e.theta_hat, theta);
        };
    };
    switch (kind) {
        case MechanismKind::gaussian_optimal:
            with(gaussian_optimal_mechanism(model, S), OptimalLinearEstimator(model, S));
            return true;
        case MechanismKind::laplace_data: {
            Mechanism mech = calibrate_laplace_data_perturbation(model, S);
            const double b = mech.noise_scale();
            with(std::move(mech), ConvolutionMle(model, ConvolutionKind::laplace, b));
            return true;
        }
        case MechanismKind::laplace_output:
            with(calibrate_laplace_output_perturbation(model, S),
                 [](const Vector& z) { return output_perturbation_estimate(z); });
            return true;
        case MechanismKind::cauchy_data: {
            Mechanism mech = calibrate_cauchy_data_perturbation(model, S);
            const double g = mech.noise_scale();
            with(std::move(mech), ConvolutionMle(model, ConvolutionKind::cauchy, g));
            return true;
        }
        case MechanismKind::cos2_data: {
            const Matrix ls = least_squares_operator(model.H);
            with(calibrate_cos2_mechanism(model, S),
                 [ls](const Vector& z) { return Estimate{ls * z, "least-squares", 0, true}; });
            return true;
        }
        case MechanismKind::twin_uniform_mult: {
            try {
                Mechanism mech = build_mechanism({kind, s}, model, theta, spec);
                TwinCentralEstimator est(model, mech);
                with(std::move(mech), est);
            } catch (const CalibrationInfeasible& e) {
                *note = e.what();
                return false;
            }
            return true;
        }
        default:
            throw InvalidInput("mech_sweep: mechanism '" + std::string(to_string(kind)) + "' cannot be swept");
    }
}

SensorNetwork spec_network(const ExperimentSpec& spec) { return metropolis_weights(spec.graph); }

}  // namespace

std::string_view to_string(Scenario s) {
    for (const auto& [k, name] : kScenarioNames) {
        if (k == s) return name;
    }
    return "mech_sweep";
}

Scenario parse_scenario(std::string_view text) {
    for (const auto& [k, name] : kScenarioNames) {
        if (name == text) return k;
    }
    throw InvalidInput("unknown scenario '" + std::string(text) + "'");
}

Matrix realize(const MatrixSpec& spec) {
    if (const auto* m = std::get_if<Matrix>(&spec)) return *m;
    const auto& u = std::get<UniformMatrixSpec>(spec);
    if (u.rows < 1 || u.cols < 1) throw InvalidInput("uniform matrix: rows and cols must be >= 1");
    if (!(u.high > u.low)) throw InvalidInput("uniform matrix: high must exceed low");
    RandomStream rng(u.seed);
    Matrix out(u.rows, u.cols);
    // row-major fill so a taller draw extends a shorter one
    for (int r = 0; r < u.rows; ++r) {
        for (int c = 0; c < u.cols; ++c) out(r, c) = rng.uniform(u.low, u.high);
    }
    return out;
}

void ExperimentSpec::validate() const {
    if (reps < 1) throw InvalidInput("reps must be >= 1");
    switch (scenario) {
        case Scenario::mech_sweep: {
            if (grid.empty()) throw InvalidInput("grid must not be empty");
            for (double s : grid) {
                if (!(s > 0.0)) throw InvalidInput("grid values must be > 0");
            }
            if (!(sigma_w >= 0.0)) throw InvalidInput("sigma_w must be >= 0");
            for (const auto& d : mechanisms) {
                if (!(d.budget_s > 0.0) || !(d.tau > 0.0)) throw InvalidInput("mechanism budget_s and tau must be > 0");
            }
            if (!(twin_margin > 0.0) || !(twin_center > 0.0)) throw InvalidInput("twin margin and center must be > 0");
            break;
        }
        case Scenario::offline:
        case Scenario::online: {
            ppcr::validate(graph);
            if (!(budget_s > 0.0)) throw InvalidInput("budget_s must be > 0");
            if (!(sigma_w >= 0.0)) throw InvalidInput("sigma_w must be >= 0");
            if (rows_per_sensor < 1) throw InvalidInput("rows_per_sensor must be >= 1");
            if (iterations < 1) throw InvalidInput("iterations must be >= 1");
            if (scenario == Scenario::online) online.validate();
            if (!initial.empty() && static_cast<int>(initial.size()) != graph.n) {
                throw InvalidInput("initial: one vector per sensor required");
            }
            break;
        }
        case Scenario::consensus: {
            ppcr::validate(graph);
            if (budgets.size() != 1 && static_cast<int>(budgets.size()) != graph.n) {
                throw InvalidInput("budgets: give one value or one per agent");
            }
            for (double s : budgets) {
                if (!(s > 0.0)) throw InvalidInput("budgets must be > 0");
            }
            if (!agent_values.empty() && static_cast<int>(agent_values.size()) != graph.n) {
                throw InvalidInput("values: one per agent required");
            }
            if (iterations < 0) throw InvalidInput("iterations must be >= 0");
            break;
        }
    }
}

std::uint64_t sub_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
    return splitmix64(splitmix64(master ^ 0x5bd1e9955bd1e995ULL) ^ splitmix64(a + 0x9e37ULL) ^
                      splitmix64(~b));
}

std::vector<int> log_checkpoints(int steps, int per_decade) {
    std::set<int> ks;
    for (int j = 0;; ++j) {
        const double k = std::round(std::pow(10.0, static_cast<double>(j) / per_decade));
        if (k > steps) break;
        ks.insert(static_cast<int>(k));
    }
    ks.insert(steps);
    return {ks.begin(), ks.end()};
}

std::vector<Matrix> sensor_matrices(const ExperimentSpec& spec, std::vector<std::string>* events) {
    const int N = spec.graph.n;
    MatrixSpec source = spec.H;
    for (int attempt = 0; attempt < 100; ++attempt) {
        const Matrix stacked = realize(source);
        if (stacked.rows() != static_cast<Eigen::Index>(N) * spec.rows_per_sensor) {
            throw InvalidInput("H must have sensors * rows_per_sensor = " + std::to_string(N * spec.rows_per_sensor) +
                               " rows");
        }
        if (stacked.cols() != spec.theta.size()) throw InvalidInput("H columns must match theta");
        std::vector<Matrix> out;
        for (int i = 0; i < N; ++i) out.push_back(stacked.middleRows(i * spec.rows_per_sensor, spec.rows_per_sensor));
        const auto blocks = gaussian_blocks(out, spec.budget_s, spec.sigma_w);
        if (joint_identifiable(blocks)) return out;
        auto* u = std::get_if<UniformMatrixSpec>(&source);
        if (u == nullptr) throw NotIdentifiable("the sensors are not jointly identifiable");
        if (events != nullptr) {
            events->push_back("H draw with seed " + std::to_string(u->seed) +
                              " is not jointly identifiable; redrawing with seed + 1");
        }
        ++u->seed;
    }
    throw NotIdentifiable("no jointly identifiable H draw in 100 attempts");
}

RunResult run_mech_sweep(const ExperimentSpec& spec, Execution exec) {
    spec.validate();
    if (spec.scenario != Scenario::mech_sweep) throw InvalidInput("run_mech_sweep: wrong scenario");
    const MeasurementModel model = sweep_model(spec);
    const auto& kinds = spec.mechanisms.empty() ? kSweepMechanisms : spec.mechanisms;

    RunResult out;
    out.scenario = spec.scenario;
    out.seed = spec.seed;
    out.reps = spec.reps;
    for (std::size_t si = 0; si < spec.grid.size(); ++si) {
        const double s = spec.grid[si];
        const PpcrResult bound = ppcr_bound(model, PsdMatrix::scaled_identity(model.m(), s));
        for (const MechanismDescriptor& d : kinds) {
            const MechanismKind kind = d.kind;
            if (!sweepable(kind)) {
                throw InvalidInput("mechanism '" + std::string(to_string(kind)) + "' cannot be swept");
            }
            SweepRow row;
            row.mechanism = std::string(to_string(kind));
            row.s = s;
            row.ppcr_trace = bound.trace();
            Trial trial;
            if (!make_trial(kind, model, spec.theta, s, spec, &trial, &row.note)) {
                out.events.push_back(row.mechanism + " at s=" + std::to_string(s) + ": " + row.note);
                out.sweep.push_back(std::move(row));
                continue;
            }
            const auto acc = replicate<ErrorAcc>(
                spec.reps, sub_seed(spec.seed, si, static_cast<std::uint64_t>(kind)), exec,
                [] { return ErrorAcc{}; },
                [&](std::size_t, RandomStream& rng, ErrorAcc& a) {
                    bool converged = true;
                    a.stats.add(trial(rng, &converged));
                    if (!converged) ++a.unconverged;
                });
            row.mse = acc.stats.mean();
            row.std_error = acc.stats.std_error();
            row.unconverged = acc.unconverged;
            out.sweep.push_back(std::move(row));
        }
    }
    return out;
}

RunResult run_offline_experiment(const ExperimentSpec& spec, Execution exec) {
    spec.validate();
    if (spec.scenario != Scenario::offline) throw InvalidInput("run_offline_experiment: wrong scenario");
    RunResult out;
    out.scenario = spec.scenario;
    out.seed = spec.seed;
    out.reps = spec.reps;
    const auto H = sensor_matrices(spec, &out.events);
    const auto blocks = gaussian_blocks(H, spec.budget_s, spec.sigma_w);
    const SensorNetwork net = spec_network(spec);
    const int N = net.size();
    const int K = spec.iterations;
    const double bound = robust_inverse(pp_fisher_additive(blocks).sym()).matrix().trace();
    out.central_bound = bound;

    std::vector<Vector> mean_y;
    for (const auto& h : H) mean_y.push_back(h * spec.theta);
    const auto& algorithms = spec.algorithms.empty() ? kReleaseKinds : spec.algorithms;
    for (ReleaseKind kind : algorithms) {
        std::vector<LinearRelease> releases;
        for (const auto& b : blocks) releases.push_back(make_release(kind, b));
        const OfflinePlan plan(net, std::move(releases), K);
        const std::size_t cols = static_cast<std::size_t>(N) + 1;
        const auto acc = replicate<GridAcc>(
            spec.reps, sub_seed(spec.seed, 1000 + static_cast<std::uint64_t>(kind)), exec,
            [&] { return GridAcc(static_cast<std::size_t>(K) + 1, cols); },
            [&](std::size_t, RandomStream& rng, GridAcc& a) {
                std::vector<Vector> y;
                for (int i = 0; i < N; ++i) {
                    const auto& rel = plan.releases()[static_cast<std::size_t>(i)];
                    Vector w(mean_y[static_cast<std::size_t>(i)].size());
                    for (Eigen::Index j = 0; j < w.size(); ++j) w(j) = rng.normal();
                    y.push_back(mean_y[static_cast<std::size_t>(i)] + rel.noise_root * w);
                }
                const OfflineRun run = run_offline(plan, y, rng);
                for (int k = 0; k <= K; ++k) {
                    const auto& row = run.theta[static_cast<std::size_t>(k)];
                    double sum = 0.0;
                    bool all = true;
                    for (int i = 0; i < N; ++i) {
                        const auto& th = row[static_cast<std::size_t>(i)];
                        if (!th) {
                            all = false;
                            continue;
                        }
                        const double e = squared_error(*th, spec.theta);
                        a.at(static_cast<std::size_t>(k), static_cast<std::size_t>(i)).add(e);
                        sum += e;
                    }
                    if (all) a.at(static_cast<std::size_t>(k), static_cast<std::size_t>(N)).add(sum / N);
                }
                a.central.add(squared_error(run.central, spec.theta));
                for (const auto& th : run.theta.back()) {
                    const double dev = th ? (*th - run.central).norm() : std::numeric_limits<double>::infinity();
                    a.max_dev = std::max(a.max_dev, dev);
                }
            });
        const std::string name(to_string(kind));
        for (int k = 0; k <= K; ++k) {
            for (std::size_t c = 0; c < cols; ++c) {
                const ScalarStats& st = acc.cells[static_cast<std::size_t>(k) * cols + c];
                TrajectoryRow row{name, k, c == static_cast<std::size_t>(N) ? -1 : static_cast<int>(c), {}, -1.0, bound};
                if (st.count() > 0) {
                    row.mse = st.mean();
                    row.std_error = st.std_error();
                }
                out.trajectory.push_back(std::move(row));
            }
        }
        if (kind == ReleaseKind::gaussian) {
            out.max_central_deviation = acc.max_dev;
            out.central_mse = acc.central.mean();
            out.central_std_error = acc.central.std_error();
        }
    }
    return out;
}

RunResult run_online_experiment(const ExperimentSpec& spec, Execution exec) {
    spec.validate();
    if (spec.scenario != Scenario::online) throw InvalidInput("run_online_experiment: wrong scenario");
    RunResult out;
    out.scenario = spec.scenario;
    out.seed = spec.seed;
    out.reps = spec.reps;
    const auto H = sensor_matrices(spec, &out.events);
    const auto blocks = gaussian_blocks(H, spec.budget_s, spec.sigma_w);
    const SensorNetwork net = spec_network(spec);
    const int N = net.size();
    const int K = spec.iterations;
    const double asymptote = robust_inverse(pp_fisher_additive(blocks).sym()).matrix().trace();
    out.asymptote = asymptote;
    const std::vector<int> checkpoints = log_checkpoints(K);
    const auto n = static_cast<std::size_t>(spec.theta.size());

    const auto& algorithms = spec.algorithms.empty() ? kReleaseKinds : spec.algorithms;
    for (ReleaseKind kind : algorithms) {
        std::vector<LinearRelease> releases;
        for (const auto& b : blocks) releases.push_back(make_release(kind, b));
        const OnlinePlan plan(net, std::move(releases), H, spec.online, K);
        const std::size_t cols = static_cast<std::size_t>(N) + 1;
        const auto acc = replicate<GridAcc>(
            spec.reps, sub_seed(spec.seed, 2000 + static_cast<std::uint64_t>(kind)), exec,
            [&] { return GridAcc(checkpoints.size(), cols); },
            [&](std::size_t, RandomStream& rng, GridAcc& a) {
                std::size_t next = 0;
                run_online(
                    plan, spec.theta, rng,
                    [&](int k, std::span<const double> est) {
                        if (next >= checkpoints.size() || checkpoints[next] != k) return;
                        double sum = 0.0;
                        for (int i = 0; i < N; ++i) {
                            double e = 0.0;
                            for (std::size_t c = 0; c < n; ++c) {
                                const double d = est[static_cast<std::size_t>(i) * n + c] - spec.theta(static_cast<Eigen::Index>(c));
                                e += d * d;
                            }
                            a.at(next, static_cast<std::size_t>(i)).add(e);
                            sum += e;
                        }
                        a.at(next, static_cast<std::size_t>(N)).add(sum / N);
                        ++next;
                    },
                    spec.initial);
            });
        const std::string name(to_string(kind));
        for (std::size_t r = 0; r < checkpoints.size(); ++r) {
            const int k = checkpoints[r];
            for (std::size_t c = 0; c < cols; ++c) {
                const ScalarStats& st = acc.cells[r * cols + c];
                out.trajectory.push_back({name, k, c == static_cast<std::size_t>(N) ? -1 : static_cast<int>(c),
                                          st.mean(), st.std_error(), asymptote / k});
            }
        }
    }
    return out;
}

RunResult run_consensus_experiment(const ExperimentSpec& spec, Execution exec) {
    spec.validate();
    if (spec.scenario != Scenario::consensus) throw InvalidInput("run_consensus_experiment: wrong scenario");
    const SensorNetwork net = spec_network(spec);
    const int N = net.size();
    std::vector<double> budgets = spec.budgets;
    if (budgets.size() == 1) budgets.assign(static_cast<std::size_t>(N), budgets.front());
    std::vector<double> values = spec.agent_values;
    if (values.empty()) {
        for (int i = 0; i < N; ++i) values.push_back(static_cast<double>(i + 1));
    }
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= N;

    const auto acc = replicate<ValuesAcc>(spec.reps, sub_seed(spec.seed, 3000), exec, [] { return ValuesAcc{}; },
                                          [&](std::size_t, RandomStream& rng, ValuesAcc& a) {
                                              const auto traj = run_private_consensus(
                                                  net, values, budgets, spec.iterations, rng, spec.inject_noise);
                                              const double e = traj.back().front() - mean;
                                              a.values.push_back(e * e);
                                          });

    RunResult out;
    out.scenario = spec.scenario;
    out.seed = spec.seed;
    out.reps = spec.reps;
    const double bound = consensus_mse_bound(budgets);
    std::set<std::size_t> marks{spec.reps};
    for (std::size_t base = 100; base < spec.reps; base *= 10) {
        for (std::size_t f : {1, 2, 5}) {
            if (base * f < spec.reps) marks.insert(base * f);
        }
    }
    ScalarStats st;
    std::size_t done = 0;
    for (std::size_t mark : marks) {
        for (; done < mark; ++done) st.add(acc.values[done]);
        out.consensus.push_back({mark, st.mean(), st.std_error(), bound});
    }
    return out;
}

Mechanism build_mechanism(const MechanismDescriptor& d, const MeasurementModel& model, const Vector& theta,
                          const ExperimentSpec& spec) {
    const PsdMatrix S = PsdMatrix::scaled_identity(model.m(), d.budget_s);
    switch (d.kind) {
        case MechanismKind::gaussian_optimal: return gaussian_optimal_mechanism(model, S);
        case MechanismKind::laplace_data: return calibrate_laplace_data_perturbation(model, S);
        case MechanismKind::laplace_output: return calibrate_laplace_output_perturbation(model, S);
        case MechanismKind::cauchy_data: return calibrate_cauchy_data_perturbation(model, S);
        case MechanismKind::cos2_data: return calibrate_cos2_mechanism(model, S);
        case MechanismKind::twin_uniform_mult: {
            const Vector mean_y = model.H * theta;
            const double width = 3.0 * spec.sigma_w;
            Region region{mean_y.array() - width, mean_y.array() + width};
            const Vector offset = (spec.twin_margin - region.low.array()).matrix();
            return calibrate_twin_uniform_multiplicative(model, S, region, offset, spec.twin_center);
        }
        case MechanismKind::squared_output: return squared_output_fixture(model, d.tau);
        case MechanismKind::custom: break;
    }
    throw InvalidInput("mechanism kind '" + std::string(to_string(d.kind)) + "' cannot be built from a descriptor");
}

AuditResult audit_mechanism(const MechanismDescriptor& d, const MeasurementModel& model, const Vector& theta,
                            const ExperimentSpec& spec, std::size_t samples, std::uint64_t seed, Execution exec) {
    const Mechanism mech = build_mechanism(d, model, theta, spec);
    AuditResult out;
    out.mechanism = std::string(to_string(d.kind));
    out.budget_s = d.budget_s;
    const MonteCarloMatrix cross = admissibility_cross_term(mech, model, theta, samples, seed, exec);
    out.cross_term_z = max_z(cross.mean, cross.std_error);
    try {
        const MonteCarloVector score = empirical_score_mean(model, mech, theta, samples, sub_seed(seed, 1), exec);
        out.score_mean_z = max_z(score.mean, score.std_error);
    } catch (const Unsupported&) {
        out.score_supported = false;
    }
    out.pass = out.cross_term_z <= kAuditSigmas && (!out.score_supported || out.score_mean_z <= kAuditSigmas);
    return out;
}

bool CheckReport::pass() const {
    return identifiable && std::all_of(audits.begin(), audits.end(), [](const AuditResult& a) { return a.pass; });
}

CheckReport run_check(const ExperimentSpec& spec, std::size_t samples, Execution exec) {
    spec.validate();
    CheckReport out;
    switch (spec.scenario) {
        case Scenario::mech_sweep: {
            const MeasurementModel model = sweep_model(spec);
            out.identifiable = true;
            for (double s : spec.grid) {
                if (!identifiable_under_privacy(model.H, PsdMatrix::scaled_identity(model.m(), s))) {
                    out.identifiable = false;
                    out.identifiability_detail = "H^T S H is singular at s=" + std::to_string(s);
                    break;
                }
            }
            if (out.identifiable) out.identifiability_detail = "H^T S H invertible on the whole grid";
            for (std::size_t i = 0; i < spec.mechanisms.size(); ++i) {
                out.audits.push_back(
                    audit_mechanism(spec.mechanisms[i], model, spec.theta, spec, samples, sub_seed(spec.seed, 4000, i), exec));
            }
            break;
        }
        case Scenario::offline:
        case Scenario::online: {
            const Matrix stacked = realize(spec.H);
            const int N = spec.graph.n;
            if (stacked.rows() != static_cast<Eigen::Index>(N) * spec.rows_per_sensor || stacked.cols() != spec.theta.size()) {
                throw InvalidInput("H must have sensors * rows_per_sensor rows and theta-many columns");
            }
            std::vector<Matrix> H;
            for (int i = 0; i < N; ++i) H.push_back(stacked.middleRows(i * spec.rows_per_sensor, spec.rows_per_sensor));
            out.identifiable = joint_identifiable(gaussian_blocks(H, spec.budget_s, spec.sigma_w));
            out.identifiability_detail = out.identifiable ? "sum_i H_i^T S_i H_i is invertible"
                                                          : "joint identifiability fails: sum_i H_i^T S_i H_i is singular";
            if (!spec.mechanisms.empty()) {
                const MeasurementModel model = MeasurementModel::gaussian(stacked, spec.sigma_w);
                for (std::size_t i = 0; i < spec.mechanisms.size(); ++i) {
                    out.audits.push_back(audit_mechanism(spec.mechanisms[i], model, spec.theta, spec, samples,
                                                         sub_seed(spec.seed, 4000, i), exec));
                }
            }
            break;
        }
        case Scenario::consensus: {
            out.identifiable = true;
            out.identifiability_detail = "every budget is > 0";
            break;
        }
    }
    return out;
}

RunResult run_experiment(const ExperimentSpec& spec, Execution exec) {
    RunResult out;
    switch (spec.scenario) {
        case Scenario::mech_sweep: out = run_mech_sweep(spec, exec); break;
        case Scenario::offline: out = run_offline_experiment(spec, exec); break;
        case Scenario::online: out = run_online_experiment(spec, exec); break;
        case Scenario::consensus: out = run_consensus_experiment(spec, exec); break;
    }
    out.spec_hash = spec_content_hash(spec);
    return out;
}

}  // namespace ppcr
