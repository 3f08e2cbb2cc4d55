#include "ppcr/fisher.hpp"

#include "ppcr/errors.hpp"
#include "ppcr/quadrature.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <vector>

namespace ppcr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Integrates g over the support of one component of f, splitting at the
/// points where the score is discontinuous.
template <class G>
double integrate_over_support(const NoiseFamily& f, G&& g) {
    if (std::holds_alternative<LaplaceIid>(f)) {
        return integrate(g, -kInf, 0.0) + integrate(g, 0.0, kInf);
    }
    const auto [lo, hi] = component_support(f);
    return integrate(g, lo, hi);
}

/// E[(a + b(x) * score)^2] under the twin-lobe density, in lobe-local
/// coordinates x = c + t. With p = (2/w) cos^2(kt) and score = -2k tan(kt)
/// the integrand is (2/w) (a cos(kt) - 2k b(x) sin(kt))^2, free of the
/// tan * cos^2 product. Both lobes contribute equally.
template <class B>
double integrate_twin(const TwinUniform& tw, double a, B&& b) {
    const double w = 2.0 * tw.half_width;
    const double k = std::numbers::pi / w;
    return integrate(
        [&](double t) {
            const double v = a * std::cos(k * t) - 2.0 * k * b(tw.center + t) * std::sin(k * t);
            return (2.0 / w) * v * v;
        },
        -tw.half_width, tw.half_width);
}

class StatsBlock {
public:
    explicit StatsBlock(std::size_t n) : stats_(n) {}
    void add(std::size_t i, double x) { stats_[i].add(x); }
    void merge(const StatsBlock& o) {
        for (std::size_t i = 0; i < stats_.size(); ++i) stats_[i].merge(o.stats_[i]);
    }
    const ScalarStats& operator[](std::size_t i) const { return stats_[i]; }

private:
    std::vector<ScalarStats> stats_;
};

const GaussianNoise& require_gaussian(const MeasurementModel& model, const char* op) {
    const auto* g = std::get_if<GaussianNoise>(&model.noise);
    if (g == nullptr) throw Unsupported(std::string(op) + ": measurement noise must be Gaussian");
    return *g;
}

Matrix pseudo_inverse(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (a + a.transpose()));
    const Vector& lambda = solver.eigenvalues();
    const double cut = 1e-12 * std::max(1.0, lambda.cwiseAbs().maxCoeff());
    Vector inv(lambda.size());
    for (Eigen::Index i = 0; i < lambda.size(); ++i) inv(i) = std::abs(lambda(i)) > cut ? 1.0 / lambda(i) : 0.0;
    return solver.eigenvectors() * inv.asDiagonal() * solver.eigenvectors().transpose();
}

Matrix invert_noise_map(const Mechanism& mech, const char* op) {
    if (mech.noise_map.rows() != mech.noise_map.cols()) {
        throw Unsupported(std::string(op) + ": noise map must be square");
    }
    Eigen::FullPivLU<Matrix> lu(mech.noise_map);
    if (!lu.isInvertible()) throw Unsupported(std::string(op) + ": noise map must be invertible");
    return lu.inverse();
}

/// d ln p(z|y) / dy for a realized (y, privacy noise) pair. Only the
/// affine and multiplicative classes have a closed-form conditional density.
struct ScoreEvaluator {
    const Mechanism& mech;
    Matrix noise_map_inv_t;  // B^{-T}

    ScoreEvaluator(const Mechanism& m, const char* op) : mech(m) {
        if (mech.cls == MechanismClass::affine) {
            if (!mech.additive_noise) throw Unsupported(std::string(op) + ": affine mechanism without noise");
            noise_map_inv_t = invert_noise_map(mech, op).transpose();
        } else if (mech.cls != MechanismClass::multiplicative) {
            throw Unsupported(std::string(op) + ": mechanism class has no closed-form score");
        }
    }

    Vector operator()(const Vector& y, const Vector& noise) const {
        if (mech.cls == MechanismClass::affine) {
            return -(mech.transform.transpose() *
                     (noise_map_inv_t * log_density_gradient(*mech.additive_noise, noise)));
        }
        const Vector u = mech.transform * y + mech.offset;
        Vector du(u.size());
        for (Eigen::Index j = 0; j < u.size(); ++j) {
            const double dj = noise(j);
            du(j) = -(1.0 + dj * component_score(*mech.multiplicative_noise, dj)) / u(j);
        }
        return mech.transform.transpose() * du;
    }

    const NoiseFamily& privacy_noise() const {
        return mech.cls == MechanismClass::affine ? *mech.additive_noise : *mech.multiplicative_noise;
    }
};

}  // namespace

FisherMatrix fisher_of_noise(const NoiseFamily& f) {
    validate(f);
    const Eigen::Index n = noise_dim(f);
    auto iso = [n](double v) { return FisherMatrix{PsdMatrix::scaled_identity(n, v), FisherTarget::output_y}; };
    if (const auto* g = std::get_if<GaussianNoise>(&f)) {
        return FisherMatrix{PsdMatrix(robust_inverse(g->cov.sym())), FisherTarget::output_y};
    }
    if (const auto* l = std::get_if<LaplaceIid>(&f)) return iso(1.0 / (l->scale * l->scale));
    if (const auto* c = std::get_if<CauchyIid>(&f)) return iso(1.0 / (2.0 * c->scale * c->scale));
    if (const auto* c = std::get_if<Cos2Bounded>(&f)) {
        const double l = c->width();
        return iso(4.0 * std::numbers::pi * std::numbers::pi / (l * l));
    }
    throw Unsupported("fisher_of_noise: twin-uniform noise is not a location family; "
                      "its Fisher information depends on the multiplicand");
}

double location_fisher_by_quadrature(const NoiseFamily& f) {
    validate(f);
    if (!is_scalar_iid(f)) throw Unsupported("location_fisher_by_quadrature: needs an i.i.d. family");
    if (const auto* t = std::get_if<TwinUniform>(&f)) {
        return integrate_twin(*t, 0.0, [](double) { return 1.0; });
    }
    return integrate_over_support(f, [&](double x) {
        const double p = component_pdf(f, x);
        if (p <= 0.0) return 0.0;
        const double s = component_score(f, x);
        return s * s * p;
    });
}

double scale_fisher_by_quadrature(const NoiseFamily& f) {
    validate(f);
    if (!is_scalar_iid(f)) throw Unsupported("scale_fisher_by_quadrature: needs an i.i.d. family");
    if (const auto* t = std::get_if<TwinUniform>(&f)) {
        return integrate_twin(*t, 1.0, [](double x) { return x; });
    }
    return integrate_over_support(f, [&](double x) {
        const double p = component_pdf(f, x);
        if (p <= 0.0) return 0.0;
        const double s = 1.0 + x * component_score(f, x);
        return s * s * p;
    });
}

FisherMatrix fisher_affine_pushforward(const Matrix& a, const FisherMatrix& inner) {
    if (a.rows() != inner.value.dim()) {
        throw InvalidInput("fisher_affine_pushforward: A has " + std::to_string(a.rows()) +
                           " rows but the Fisher matrix is " + std::to_string(inner.value.dim()) + "-dim");
    }
    return FisherMatrix{PsdMatrix(SymMatrix(a.transpose() * inner.value.matrix() * a)), inner.with_respect_to};
}

SymMatrix mechanism_fisher(const Mechanism& mech, const Vector& y) {
    if (y.size() != mech.input_dim()) throw InvalidInput("mechanism_fisher: y dimension mismatch");
    if (mech.cls == MechanismClass::affine) {
        if (!mech.additive_noise) throw Unsupported("mechanism_fisher: affine mechanism without noise");
        const Matrix binv = invert_noise_map(mech, "mechanism_fisher");
        const Matrix inner = binv.transpose() * fisher_of_noise(*mech.additive_noise).value.matrix() * binv;
        return SymMatrix(mech.transform.transpose() * inner * mech.transform);
    }
    if (mech.cls == MechanismClass::multiplicative) {
        const double j = scale_fisher_by_quadrature(*mech.multiplicative_noise);
        const Vector u = mech.transform * y + mech.offset;
        const Vector diag = (j / u.array().square()).matrix();
        return SymMatrix(mech.transform.transpose() * diag.asDiagonal() * mech.transform);
    }
    throw Unsupported("mechanism_fisher: no closed form for this mechanism class");
}

MonteCarloVector empirical_score_mean(const MeasurementModel& model, const Mechanism& mech,
                                      const Vector& theta, std::size_t n_samples,
                                      std::uint64_t seed, Execution exec) {
    model.validate();
    if (mech.input_dim() != model.m()) throw InvalidInput("empirical_score_mean: mechanism/model dimension mismatch");
    const ScoreEvaluator score(mech, "empirical_score_mean");
    const auto m = static_cast<std::size_t>(model.m());

    const auto stats = replicate<StatsBlock>(
        n_samples, seed, exec, [m] { return StatsBlock(m); },
        [&](std::size_t, RandomStream& rng, StatsBlock& acc) {
            const Vector y = model.measure(theta, rng);
            const Vector noise = sample_noise(score.privacy_noise(), rng);
            const Vector s = score(y, noise);
            for (std::size_t i = 0; i < m; ++i) acc.add(i, s(static_cast<Eigen::Index>(i)));
        });

    MonteCarloVector out{Vector(model.m()), Vector(model.m())};
    for (std::size_t i = 0; i < m; ++i) {
        out.mean(static_cast<Eigen::Index>(i)) = stats[i].mean();
        out.std_error(static_cast<Eigen::Index>(i)) = stats[i].std_error();
    }
    return out;
}

MonteCarloMatrix admissibility_cross_term(const Mechanism& mech, const MeasurementModel& model,
                                          const Vector& theta, std::size_t n_samples,
                                          std::uint64_t seed, Execution exec) {
    model.validate();
    if (mech.input_dim() != model.m()) throw InvalidInput("admissibility_cross_term: dimension mismatch");
    const GaussianNoise& w_noise = require_gaussian(model, "admissibility_cross_term");
    const Eigen::Index n = model.n();
    const auto nn = static_cast<std::size_t>(n * n);

    // Score given the privacy noise: y is recoverable from (z, noise) for the
    // affine and multiplicative classes, so it reduces to the Gaussian score of A w.
    std::function<Vector(const Vector&, const Vector&)> score_given_noise;
    std::function<Vector(const Vector&, const Vector&)> score_given_w;
    std::function<Vector(RandomStream&)> draw_noise;

    if (mech.cls == MechanismClass::affine || mech.cls == MechanismClass::multiplicative) {
        const Matrix& a = mech.transform;
        const Matrix gain =
            model.H.transpose() * a.transpose() * pseudo_inverse(a * w_noise.cov.matrix() * a.transpose()) * a;
        auto score = std::make_shared<ScoreEvaluator>(mech, "admissibility_cross_term");
        score_given_noise = [gain, mean = w_noise.mean](const Vector& w, const Vector&) {
            return Vector(gain * (w - mean));
        };
        score_given_w = [score, h = model.H](const Vector& y, const Vector& noise) {
            return Vector(h.transpose() * (*score)(y, noise));
        };
        draw_noise = [score](RandomStream& rng) { return sample_noise(score->privacy_noise(), rng); };
    } else if (mech.cls == MechanismClass::squared) {
        double sigma = 0.0;
        double tau = 0.0;
        {
            const double v = w_noise.cov(0, 0);
            if ((w_noise.cov.matrix() - v * Matrix::Identity(model.m(), model.m())).cwiseAbs().maxCoeff() != 0.0) {
                throw Unsupported("admissibility_cross_term: squared fixture needs isotropic measurement noise");
            }
            sigma = std::sqrt(v);
            const auto* d = mech.additive_noise ? std::get_if<GaussianNoise>(&*mech.additive_noise) : nullptr;
            if (d == nullptr || !is_scalar_iid(*mech.additive_noise)) {
                throw Unsupported("admissibility_cross_term: squared fixture needs i.i.d. Gaussian privacy noise");
            }
            tau = std::sqrt(d->cov(0, 0));
        }
        if (!mech.transform.isIdentity(0.0) || !mech.noise_map.isIdentity(0.0)) {
            throw Unsupported("admissibility_cross_term: squared fixture needs A = B = I");
        }
        // Two-branch posterior score: given the conditioning noise, z_j = v^2
        // has preimages +-sqrt(z_j) and both branches contribute.
        auto branch_score = [](double a_plus, double a_minus, double scale) {
            const double s2 = scale * scale;
            const double lp = -0.5 * a_plus * a_plus / s2;
            const double lm = -0.5 * a_minus * a_minus / s2;
            const double hi = std::max(lp, lm);
            const double ep = std::exp(lp - hi);
            const double em = std::exp(lm - hi);
            return (a_plus * ep + a_minus * em) / (s2 * (ep + em));
        };
        const Vector mu = w_noise.mean;
        const Vector offset = mech.offset;
        const Matrix h = model.H;
        const Vector h_theta = model.H * theta;
        score_given_noise = [=](const Vector& w, const Vector& d) {
            Vector per(w.size());
            for (Eigen::Index j = 0; j < w.size(); ++j) {
                const double v = h_theta(j) + mu(j) + w(j) + offset(j) + d(j);
                const double r = std::abs(v);
                const double base = offset(j) + d(j) + h_theta(j) + mu(j);
                per(j) = branch_score(r - base, -r - base, sigma);
            }
            return Vector(h.transpose() * per);
        };
        score_given_w = [=](const Vector& y, const Vector& d) {
            Vector per(y.size());
            for (Eigen::Index j = 0; j < y.size(); ++j) {
                const double v = y(j) + offset(j);
                const double r = std::abs(v + d(j));
                per(j) = branch_score(r - v, -r - v, tau);
            }
            return Vector(h.transpose() * per);
        };
        const NoiseFamily privacy = *mech.additive_noise;
        draw_noise = [privacy](RandomStream& rng) { return sample_noise(privacy, rng); };
    } else {
        throw Unsupported("admissibility_cross_term: mixed mechanisms have no closed-form conditional density");
    }

    const auto stats = replicate<StatsBlock>(
        n_samples, seed, exec, [nn] { return StatsBlock(nn); },
        [&](std::size_t, RandomStream& rng, StatsBlock& acc) {
            const Vector w = sample_noise(model.noise, rng);
            const Vector y = model.H * theta + w;
            const Vector noise = draw_noise(rng);
            const Vector sd = score_given_noise(w, noise);
            const Vector sw = score_given_w(y, noise);
            for (Eigen::Index i = 0; i < n; ++i) {
                for (Eigen::Index j = 0; j < n; ++j) acc.add(static_cast<std::size_t>(i * n + j), sd(i) * sw(j));
            }
        });

    MonteCarloMatrix out{Matrix(n, n), Matrix(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto& s = stats[static_cast<std::size_t>(i * n + j)];
            out.mean(i, j) = s.mean();
            out.std_error(i, j) = s.std_error();
        }
    }
    return out;
}

}  // namespace ppcr
