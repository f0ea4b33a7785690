#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <utility>

#include "dica/common.hpp"
#include "dica/dataset.hpp"

namespace dica::synth {

/// Deterministic random source used by every generator.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard, so datasets are bit-reproducible across platforms for a given
/// seed. Transforms are implemented here rather than taken from <random>
/// (whose distributions are implementation-defined):
///   uniform01: (engine() >> 11) * 2^-53, in [0, 1)
///   normal:    Marsaglia polar method, second variate cached
///   poisson:   count of unit-rate exponential arrivals in [0, mean]
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    long poisson(double mean) {
        if (!(mean > 0.0)) throw ConfigError("poisson mean must be positive");
        long k = 0;
        double acc = -std::log(1.0 - uniform01());
        while (acc <= mean) {
            ++k;
            acc += -std::log(1.0 - uniform01());
        }
        return k;
    }

    /// Uniform integer in [0, k). The modulo bias of ~k/2^64 is negligible
    /// for the shuffle sizes used here.
    std::uint64_t below(std::uint64_t k) { return engine_() % k; }

    Eigen::VectorXd normal_vector(Eigen::Index n) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
        return v;
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Symmetric PSD square root via eigendecomposition; tolerates the zero and
/// rank-deficient cases that a Cholesky factor would reject.
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& s) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    Eigen::VectorXd d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

/// W = sum_{i=1..df} v_i v_i^T with v_i ~ N(0, scale I).
inline Eigen::MatrixXd sample_wishart(double scale, Eigen::Index df, Eigen::Index dim,
                                      Rng& rng) {
    if (df < dim) throw ConfigError("sample_wishart: df must be >= dim");
    if (scale < 0.0) throw ConfigError("sample_wishart: scale must be nonnegative");
    const double root = std::sqrt(scale);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index i = 0; i < df; ++i) {
        const Eigen::VectorXd v = root * rng.normal_vector(dim);
        w.selfadjointView<Eigen::Lower>().rankUpdate(v);
    }
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < i; ++j) w(j, i) = w(i, j);
    return w;
}

/// Configuration of the zero-mean Gaussian / Wishart toy generator. When b1,
/// b2 or c are unset they are drawn once from N(0, I) (and c from N(0,1))
/// using the seed, then shared across all domains.
struct SynthToyConfig {
    Eigen::Index n_domains = 10;
    double poisson_mean = 200.0;
    Eigen::Index dim = 5;
    double wishart_scale = 0.2;
    Eigen::Index wishart_df = 10;
    std::optional<Eigen::VectorXd> b1;
    std::optional<Eigen::VectorXd> b2;
    std::optional<double> c;
    std::uint64_t seed = 0;
    std::optional<Eigen::Index> domain_size_override;  // testing hook: fixed n_i

    void validate() const {
        if (n_domains < 1) throw ConfigError("toy: n_domains must be >= 1");
        if (dim < 1) throw ConfigError("toy: dim must be >= 1");
        if (wishart_df < dim) throw ConfigError("toy: wishart_df must be >= dim");
        if (!(poisson_mean > 0.0)) throw ConfigError("toy: poisson_mean must be positive");
        if (b1 && b1->size() != dim) throw ConfigError("toy: b1 has wrong dimension");
        if (b2 && b2->size() != dim) throw ConfigError("toy: b2 has wrong dimension");
    }
};

/// Per domain: n_i ~ Poisson(mean) clamped to >= 2, covariance from
/// W(scale I, df), x ~ N(0, Sigma_i), and
/// y = sign(b1.x + e1) * log(|b2.x + c + e2|) with e1, e2 ~ N(0,1).
/// The |.| argument is redrawn while within 1e-12 of zero.
inline DomainDataset make_toy(const SynthToyConfig& config) {
    config.validate();
    Rng rng(config.seed);
    const Eigen::VectorXd b1 = config.b1 ? *config.b1 : rng.normal_vector(config.dim);
    const Eigen::VectorXd b2 = config.b2 ? *config.b2 : rng.normal_vector(config.dim);
    const double c = config.c ? *config.c : rng.normal();

    DomainDataset data;
    data.domains.reserve(static_cast<std::size_t>(config.n_domains));
    for (Eigen::Index i = 0; i < config.n_domains; ++i) {
        const Eigen::Index ni = config.domain_size_override
                                    ? *config.domain_size_override
                                    : std::max<long>(2, rng.poisson(config.poisson_mean));
        const Eigen::MatrixXd sigma =
            sample_wishart(config.wishart_scale, config.wishart_df, config.dim, rng);
        const Eigen::MatrixXd root = psd_sqrt(sigma);
        Domain dom;
        dom.inputs.resize(ni, config.dim);
        dom.outputs = Eigen::VectorXd(ni);
        for (Eigen::Index k = 0; k < ni; ++k) {
            const Eigen::VectorXd x = root * rng.normal_vector(config.dim);
            dom.inputs.row(k) = x.transpose();
            const double e1 = rng.normal();
            double arg = 0.0;
            do {
                arg = b2.dot(x) + c + rng.normal();
            } while (std::abs(arg) <= 1e-12);
            const double s = (b1.dot(x) + e1) >= 0.0 ? 1.0 : -1.0;
            (*dom.outputs)(k) = s * std::log(std::abs(arg));
        }
        data.domains.push_back(std::move(dom));
    }
    return data;
}

/// Configuration of the two-class classification surrogate: a fixed
/// class-defining direction shared by every domain, plus an i.i.d. per-domain
/// affine nuisance shift orthogonal to it (so P(Y|X) is stable while P(X)
/// moves between domains).
struct SynthClassConfig {
    Eigen::Index n_domains = 10;       // training domains
    Eigen::Index n_test_domains = 5;
    Eigen::Index per_domain_n = 200;
    Eigen::Index dim = 10;
    double class_separation = 3.0;
    double domain_shift_scale = 3.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_domains < 1 || n_test_domains < 0)
            throw ConfigError("classification: bad domain counts");
        if (per_domain_n < 2) throw ConfigError("classification: per_domain_n must be >= 2");
        if (dim < 2) throw ConfigError("classification: dim must be >= 2");
        if (!(class_separation > 0.0))
            throw ConfigError("classification: class_separation must be positive");
        if (domain_shift_scale < 0.0)
            throw ConfigError("classification: domain_shift_scale must be nonnegative");
    }
};

namespace detail {

inline Domain make_class_domain(const SynthClassConfig& cfg, const Eigen::VectorXd& w,
                                Rng& rng) {
    const Eigen::Index n = cfg.per_domain_n;
    Eigen::VectorXd z = rng.normal_vector(cfg.dim);
    // Nuisance shift, mostly orthogonal to the class direction; the component
    // along it is damped to 30% so the decision threshold varies smoothly
    // across domains while the class-defining direction stays fixed.
    Eigen::VectorXd shift = cfg.domain_shift_scale * (z - 0.7 * w.dot(z) * w);

    // Exactly balanced labels (up to one point), then a Fisher-Yates shuffle.
    Eigen::VectorXd labels(n);
    for (Eigen::Index k = 0; k < n; ++k) labels(k) = k < (n + 1) / 2 ? 1.0 : -1.0;
    for (Eigen::Index k = n - 1; k > 0; --k) {
        const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(k + 1)));
        std::swap(labels(k), labels(j));
    }

    Domain dom;
    dom.inputs.resize(n, cfg.dim);
    dom.outputs = labels;
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::VectorXd noise = rng.normal_vector(cfg.dim);
        dom.inputs.row(k) =
            (shift + 0.5 * cfg.class_separation * labels(k) * w + noise).transpose();
    }
    return dom;
}

}  // namespace detail

/// Returns (train, test) datasets; training domains are generated first so
/// the split is a pure function of the seed.
inline std::pair<DomainDataset, DomainDataset> make_classification(
    const SynthClassConfig& config) {
    config.validate();
    Rng rng(config.seed);
    Eigen::VectorXd w = rng.normal_vector(config.dim);
    w.normalize();

    DomainDataset train, test;
    for (Eigen::Index i = 0; i < config.n_domains; ++i)
        train.domains.push_back(detail::make_class_domain(config, w, rng));
    for (Eigen::Index i = 0; i < config.n_test_domains; ++i)
        test.domains.push_back(detail::make_class_domain(config, w, rng));
    return {std::move(train), std::move(test)};
}

/// Two-target regression surrogate in the telemonitoring layout: per-subject
/// nuisance shifts, a shared linear signal, and two correlated targets.
struct SynthRegressionConfig {
    Eigen::Index n_domains = 12;
    Eigen::Index per_domain_n = 40;
    Eigen::Index dim = 16;
    double domain_shift_scale = 1.5;
    double noise = 0.5;
    std::uint64_t seed = 0;
};

inline TwoTargetDataset make_regression_surrogate(const SynthRegressionConfig& cfg) {
    if (cfg.n_domains < 2 || cfg.per_domain_n < 2 || cfg.dim < 1)
        throw ConfigError("regression surrogate: bad sizes");
    Rng rng(cfg.seed);
    const Eigen::VectorXd w_motor = rng.normal_vector(cfg.dim);
    const Eigen::VectorXd w_shared = rng.normal_vector(cfg.dim);

    TwoTargetDataset out;
    for (Eigen::Index i = 0; i < cfg.n_domains; ++i) {
        const Eigen::VectorXd shift = cfg.domain_shift_scale * rng.normal_vector(cfg.dim);
        const double subject_level = 2.0 * rng.normal();
        Domain motor_dom, total_dom;
        motor_dom.inputs.resize(cfg.per_domain_n, cfg.dim);
        motor_dom.outputs = Eigen::VectorXd(cfg.per_domain_n);
        total_dom.outputs = Eigen::VectorXd(cfg.per_domain_n);
        for (Eigen::Index k = 0; k < cfg.per_domain_n; ++k) {
            const Eigen::VectorXd x = shift + rng.normal_vector(cfg.dim);
            motor_dom.inputs.row(k) = x.transpose();
            const double base = w_shared.dot(x) + subject_level;
            (*motor_dom.outputs)(k) =
                20.0 + base + 0.5 * w_motor.dot(x) + cfg.noise * rng.normal();
            (*total_dom.outputs)(k) = 27.0 + 1.3 * base + cfg.noise * rng.normal();
        }
        total_dom.inputs = motor_dom.inputs;
        out.motor.domains.push_back(std::move(motor_dom));
        out.total.domains.push_back(std::move(total_dom));
    }
    return out;
}

}  // namespace dica::synth
