#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dica/common.hpp"
#include "dica/dataset.hpp"
#include "dica/domains.hpp"
#include "dica/kernels.hpp"
#include "dica/linalg.hpp"

namespace dica {

enum class FitMode { Dica, Udica, Coir, Kpca };

inline std::string to_string(FitMode m) {
    switch (m) {
        case FitMode::Dica: return "dica";
        case FitMode::Udica: return "udica";
        case FitMode::Coir: return "coir";
        case FitMode::Kpca: return "kpca";
    }
    return "?";
}

inline FitMode fit_mode_from_string(const std::string& s) {
    if (s == "dica") return FitMode::Dica;
    if (s == "udica") return FitMode::Udica;
    if (s == "coir") return FitMode::Coir;
    if (s == "kpca") return FitMode::Kpca;
    throw ConfigError("unknown fit mode '" + s + "'");
}

/// Hyperparameters of a fit. epsilon smooths the output-kernel inverse
/// (supervised modes); lambda stabilizes the right-hand side of the
/// generalized eigenproblem so its Cholesky factorization succeeds.
struct FitConfig {
    FitMode mode = FitMode::Dica;
    Eigen::Index m = 2;
    double epsilon = 1e-4;
    double lambda = 1e-4;
    double imag_tol = 1e-6;

    void validate() const {
        if (m < 1) throw ConfigError("FitConfig: m must be >= 1");
        const bool supervised = mode == FitMode::Dica || mode == FitMode::Coir;
        if (supervised && !(epsilon > 0.0))
            throw ConfigError("FitConfig: epsilon must be positive for supervised modes");
        if (lambda < 0.0) throw ConfigError("FitConfig: lambda must be nonnegative");
        if (mode != FitMode::Kpca && !(lambda > 0.0))
            throw ConfigError("FitConfig: lambda must be positive for " + to_string(mode));
        if (!(imag_tol > 0.0)) throw ConfigError("FitConfig: imag_tol must be positive");
    }
};

/// A fitted kernel-space transform: coefficient matrix B (columns are basis
/// function coefficients), eigenvalues, the centered training Gram, and
/// everything needed to evaluate and center cross-Grams for new points.
struct Transform {
    Eigen::MatrixXd b;       // n x m
    Eigen::VectorXd gamma;   // length m, descending
    GramMatrix train_gram;   // centered K used in the fit
    FitConfig config;
    std::vector<Eigen::Index> domain_sizes;
    double max_imag = 0.0;
    Eigen::Index effective_rank = 0;

    // Training-side state for projecting new points and for serialization.
    Eigen::MatrixXd train_inputs;      // n x d, flattened domain-major
    KernelSpec kx;
    KernelSpec ky;
    Eigen::VectorXd train_col_mean;    // column means of the uncentered K
    double train_total_mean = 0.0;

    [[nodiscard]] Eigen::Index n() const { return b.rows(); }
    [[nodiscard]] Eigen::Index m() const { return b.cols(); }
};

/// K B B^T K (train form, symmetric PSD) or K^t B B^T K (test form).
struct ProjectedKernel {
    Eigen::MatrixXd values;
    bool train = true;
};

namespace detail {

/// K Q K without materializing Q: with E the n x N block indicator and W the
/// N x N block weights, K Q K = (K E) W (K E)^T. Exact up to round-off
/// against the dense form; symmetrized to kill ulp-level asymmetry.
inline Eigen::MatrixXd kqk(const Eigen::MatrixXd& k,
                           const std::vector<Eigen::Index>& sizes) {
    const Eigen::Index n = k.rows();
    const auto N = static_cast<Eigen::Index>(sizes.size());
    Eigen::MatrixXd block_sums(n, N);  // K E
    Eigen::Index off = 0;
    for (Eigen::Index j = 0; j < N; ++j) {
        block_sums.col(j) = k.middleCols(off, sizes[static_cast<std::size_t>(j)]).rowwise().sum();
        off += sizes[static_cast<std::size_t>(j)];
    }
    Eigen::MatrixXd w(N, N);
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = 0; j < N; ++j)
            w(i, j) = coefficient_entry(N, sizes[static_cast<std::size_t>(i)],
                                        sizes[static_cast<std::size_t>(j)], i == j);
    Eigen::MatrixXd p = block_sums * w * block_sums.transpose();
    return 0.5 * (p + p.transpose());
}

/// L (L + n eps I)^{-1}, symmetrized; L and its shifted inverse commute in
/// exact arithmetic, so the product is symmetric up to round-off.
inline Eigen::MatrixXd output_smoother(const Eigen::MatrixXd& l_centered, double epsilon) {
    const Eigen::Index n = l_centered.rows();
    Eigen::MatrixXd shifted = l_centered;
    shifted.diagonal().array() += static_cast<double>(n) * epsilon;
    Eigen::MatrixXd t = solve_spd(shifted, l_centered);  // (L + n eps I)^{-1} L
    return 0.5 * (t + t.transpose());
}

inline Eigen::MatrixXd exact_symmetric_product(const Eigen::MatrixXd& f) {
    // f f^T via a rank update on one triangle, mirrored: exactly symmetric.
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(f.rows(), f.rows());
    out.selfadjointView<Eigen::Lower>().rankUpdate(f);
    for (Eigen::Index i = 0; i < out.rows(); ++i)
        for (Eigen::Index j = 0; j < i; ++j) out(j, i) = out(i, j);
    return out;
}

}  // namespace detail

/// Fits the requested transform. Modes:
///  - dica:  (1/n) L(L+n eps I)^{-1} K^2 B = (KQK + K + lambda I) B Gamma
///  - udica: (1/n) K^2 B = (KQK + K + lambda I) B Gamma
///  - coir:  (1/n) L(L+n eps I)^{-1} K alpha = alpha Gamma, alpha in the
///           K + lambda I normalization metric (the alpha := K B
///           parameterization of the single-domain reduction)
///  - kpca:  plain symmetric eigenproblem on centered K
/// K (and L for supervised modes) are centered once over the pooled sample.
inline Transform fit(const DomainDataset& data, const KernelSpec& kx, const KernelSpec& ky,
                     const FitConfig& config) {
    config.validate();
    data.validate();
    const Eigen::Index n = data.total_size();
    if (config.m > n) throw InputError("fit: m exceeds the pooled sample size");
    const bool supervised = config.mode == FitMode::Dica || config.mode == FitMode::Coir;
    if (supervised && !data.has_outputs())
        throw InputError("fit: " + to_string(config.mode) + " requires outputs");

    const GramMatrix k_raw = pooled_gram(kx, data, false);
    GramMatrix k = center_gram(k_raw);

    Transform t;
    t.config = config;
    t.domain_sizes = data.sizes();
    t.train_inputs = flatten(data).inputs;
    t.kx = kx;
    t.ky = ky;
    t.train_col_mean = k_raw.values.colwise().mean().transpose();
    t.train_total_mean = t.train_col_mean.mean();

    Eigen::MatrixXd smoother;  // L (L + n eps I)^{-1}
    if (supervised) {
        const GramMatrix l = center_gram(pooled_gram(ky, data, true));
        smoother = detail::output_smoother(l.values, config.epsilon);
    }

    EigenResult eig;
    switch (config.mode) {
        case FitMode::Kpca: {
            eig = top_eig_symmetric(k.values, config.m);
            t.b = eig.vectors;  // orthonormal, sign-fixed
            break;
        }
        case FitMode::Udica:
        case FitMode::Dica: {
            Eigen::MatrixXd rhs = detail::kqk(k.values, t.domain_sizes) + k.values;
            rhs.diagonal().array() += config.lambda;
            Eigen::MatrixXd a = k.values * k.values;
            if (config.mode == FitMode::Dica) a = smoother * a;
            a /= static_cast<double>(n);
            const Eigen::MatrixXd m_matrix = solve_spd(rhs, a);
            eig = top_eig_nonsymmetric(m_matrix, config.m, config.imag_tol);
            t.b = normalize_constraint(eig.vectors, rhs);
            break;
        }
        case FitMode::Coir: {
            const Eigen::MatrixXd m_matrix = smoother * k.values / static_cast<double>(n);
            eig = top_eig_nonsymmetric(m_matrix, config.m, config.imag_tol);
            Eigen::MatrixXd metric = k.values;
            metric.diagonal().array() += config.lambda;
            t.b = normalize_constraint(eig.vectors, metric);
            break;
        }
    }

    t.gamma = eig.values;
    t.max_imag = eig.max_imag;
    t.train_gram = std::move(k);
    const double lead = t.gamma.size() > 0 ? t.gamma(0) : 0.0;
    t.effective_rank = 0;
    for (Eigen::Index i = 0; i < t.gamma.size(); ++i)
        if (t.gamma(i) > 1e-12 * lead) ++t.effective_rank;
    return t;
}

/// Projected coordinates of the training points: K B (n x m).
inline Eigen::MatrixXd project_features(const Transform& t) {
    return t.train_gram.values * t.b;
}

/// Projected coordinates of test points from a centered cross-Gram: K^t B.
inline Eigen::MatrixXd project_features(const Transform& t, const CrossGram& cg) {
    if (!cg.centered)
        throw InputError("project_features: cross-Gram must be centered against training");
    if (cg.values.cols() != t.n()) throw InputError("project_features: width mismatch");
    return cg.values * t.b;
}

/// Training kernel after the transform: K B B^T K, symmetric PSD, rank <= m.
inline ProjectedKernel project_train(const Transform& t) {
    ProjectedKernel pk;
    pk.train = true;
    pk.values = detail::exact_symmetric_product(project_features(t));
    return pk;
}

/// Test kernel after the transform: K^t B B^T K.
inline ProjectedKernel project_test(const Transform& t, const CrossGram& cg) {
    ProjectedKernel pk;
    pk.train = false;
    pk.values = project_features(t, cg) * project_features(t).transpose();
    return pk;
}

/// Builds the centered cross-Gram between new test points and the training
/// sample of a fitted transform.
inline CrossGram cross_gram_for(const Transform& t, const Eigen::MatrixXd& test_inputs) {
    if (test_inputs.cols() != t.train_inputs.cols())
        throw InputError("cross_gram_for: input dimension mismatch");
    const Eigen::Index nt = test_inputs.rows();
    const Eigen::Index n = t.n();
    Eigen::MatrixXd raw(nt, n);
    for (Eigen::Index i = 0; i < nt; ++i)
        for (Eigen::Index a = 0; a < n; ++a) {
            const double dot = test_inputs.row(i).dot(t.train_inputs.row(a));
            const double sq = (test_inputs.row(i) - t.train_inputs.row(a)).squaredNorm();
            raw(i, a) = detail::kernel_from_sqdist(t.kx, sq, dot);
        }
    CrossGram cg;
    cg.train_sizes = t.domain_sizes;
    cg.centered = true;
    cg.values = detail::center_cross_values(raw, t.train_col_mean, t.train_total_mean);
    return cg;
}

/// Generalization-bound diagnostics: the distributional-variance term
/// (1/N) tr(B^T K Q K B) and the transform-size term tr(B^T K B).
inline std::pair<double, double> bound_terms(const Transform& t) {
    const auto N = static_cast<double>(t.domain_sizes.size());
    const Eigen::MatrixXd f = project_features(t);  // K B
    const CoefficientMatrix q = coefficient_matrix(t.domain_sizes);
    const double dist = (f.array() * (q.values * f).array()).sum() / N;
    const double complexity = (t.b.array() * f.array()).sum();
    return {dist, complexity};
}

}  // namespace dica
