#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dica/common.hpp"
#include "dica/dataset.hpp"

namespace dica {

enum class KernelFamily { GaussianRbf, Linear, Delta };

inline std::string to_string(KernelFamily f) {
    switch (f) {
        case KernelFamily::GaussianRbf: return "gaussian-rbf";
        case KernelFamily::Linear: return "linear";
        case KernelFamily::Delta: return "delta";
    }
    return "?";
}

inline KernelFamily kernel_family_from_string(const std::string& s) {
    if (s == "gaussian-rbf") return KernelFamily::GaussianRbf;
    if (s == "linear") return KernelFamily::Linear;
    if (s == "delta") return KernelFamily::Delta;
    throw ConfigError("unknown kernel family '" + s + "'");
}

/// A kernel function k(x,z). `bandwidth` is the Gaussian sigma, in units of
/// input distance; it is ignored by the linear and delta families. The delta
/// family is only meaningful on discrete (scalar label) inputs.
struct KernelSpec {
    KernelFamily family = KernelFamily::GaussianRbf;
    double bandwidth = 1.0;

    static KernelSpec gaussian(double sigma) { return {KernelFamily::GaussianRbf, sigma}; }
    static KernelSpec linear() { return {KernelFamily::Linear, 0.0}; }
    static KernelSpec delta() { return {KernelFamily::Delta, 0.0}; }

    void validate() const {
        if (family == KernelFamily::GaussianRbf &&
            !(bandwidth > 0.0 && std::isfinite(bandwidth)))
            throw ConfigError("gaussian-rbf bandwidth must be positive");
    }
};

namespace detail {

inline double kernel_from_sqdist(const KernelSpec& spec, double sq_dist, double dot) {
    switch (spec.family) {
        case KernelFamily::GaussianRbf:
            return std::exp(-sq_dist / (2.0 * spec.bandwidth * spec.bandwidth));
        case KernelFamily::Linear:
            return dot;
        case KernelFamily::Delta:
            return sq_dist == 0.0 ? 1.0 : 0.0;
    }
    return 0.0;
}

}  // namespace detail

/// Scalar overload, used for outputs (labels / targets).
inline double eval_kernel(const KernelSpec& spec, double a, double b) {
    spec.validate();
    const double diff = a - b;
    return detail::kernel_from_sqdist(spec, diff * diff, a * b);
}

inline double eval_kernel(const KernelSpec& spec, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& z) {
    spec.validate();
    if (x.size() != z.size())
        throw InputError("eval_kernel: dimension mismatch (" +
                         std::to_string(x.size()) + " vs " + std::to_string(z.size()) + ")");
    return detail::kernel_from_sqdist(spec, (x - z).squaredNorm(), x.dot(z));
}

/// Pooled symmetric kernel matrix over the flattened sample, with the domain
/// block boundaries recorded. Symmetry is exact: one triangle is computed and
/// mirrored.
struct GramMatrix {
    Eigen::MatrixXd values;
    std::vector<Eigen::Index> domain_sizes;
    bool centered = false;

    [[nodiscard]] Eigen::Index size() const { return values.rows(); }
    [[nodiscard]] Eigen::Index num_domains() const {
        return static_cast<Eigen::Index>(domain_sizes.size());
    }
};

/// Rectangular kernel matrix between a test sample (rows) and the flattened
/// training sample (columns).
struct CrossGram {
    Eigen::MatrixXd values;
    std::vector<Eigen::Index> train_sizes;
    bool centered = false;
};

namespace detail {

inline Eigen::MatrixXd symmetric_kernel_matrix(const KernelSpec& spec,
                                               const Eigen::MatrixXd& pts) {
    const Eigen::Index n = pts.rows();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double dot = pts.row(i).dot(pts.row(j));
            const double sq = (pts.row(i) - pts.row(j)).squaredNorm();
            const double v = kernel_from_sqdist(spec, sq, dot);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

}  // namespace detail

/// Uncentered Gram over the flattened sample in domain order. With
/// `on_outputs` the kernel is evaluated on the scalar outputs instead.
inline GramMatrix pooled_gram(const KernelSpec& spec, const DomainDataset& data,
                              bool on_outputs = false) {
    spec.validate();
    data.validate();
    if (on_outputs && !data.has_outputs())
        throw InputError("pooled_gram: dataset carries no outputs");
    const Flattened flat = flatten(data);
    GramMatrix g;
    g.domain_sizes = data.sizes();
    g.centered = false;
    if (on_outputs) {
        g.values = detail::symmetric_kernel_matrix(spec, Eigen::MatrixXd(*flat.outputs));
    } else {
        g.values = detail::symmetric_kernel_matrix(spec, flat.inputs);
    }
    return g;
}

/// Centers a Gram matrix: HKH with H = I - (1/n) 1 1^T. The triangle-mirror
/// construction keeps the result exactly symmetric.
inline GramMatrix center_gram(const GramMatrix& g) {
    if (g.centered) throw InputError("center_gram: matrix already centered");
    const Eigen::Index n = g.size();
    const Eigen::VectorXd col_mean = g.values.colwise().mean().transpose();
    const double total_mean = col_mean.mean();
    GramMatrix out;
    out.domain_sizes = g.domain_sizes;
    out.centered = true;
    out.values.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = g.values(i, j) - col_mean(i) - col_mean(j) + total_mean;
            out.values(i, j) = v;
            out.values(j, i) = v;
        }
    }
    return out;
}

/// Kernel matrix between test points (rows) and the flattened training sample.
inline CrossGram cross_gram(const KernelSpec& spec, const Eigen::MatrixXd& test,
                            const DomainDataset& train) {
    spec.validate();
    train.validate();
    if (test.cols() != train.dim())
        throw InputError("cross_gram: input dimension mismatch");
    const Flattened flat = flatten(train);
    const Eigen::Index nt = test.rows();
    const Eigen::Index n = flat.inputs.rows();
    CrossGram cg;
    cg.train_sizes = train.sizes();
    cg.centered = false;
    cg.values.resize(nt, n);
    for (Eigen::Index t = 0; t < nt; ++t) {
        for (Eigen::Index a = 0; a < n; ++a) {
            const double dot = test.row(t).dot(flat.inputs.row(a));
            const double sq = (test.row(t) - flat.inputs.row(a)).squaredNorm();
            cg.values(t, a) = detail::kernel_from_sqdist(spec, sq, dot);
        }
    }
    return cg;
}

namespace detail {

/// (K^t - (1/n) 1 1^T K) H expressed through the training column means and
/// grand mean: entry(t,a) = K^t(t,a) - colmean(a) - rowmean(t) + grand mean.
inline Eigen::MatrixXd center_cross_values(const Eigen::MatrixXd& cross,
                                           const Eigen::VectorXd& train_col_mean,
                                           double train_total_mean) {
    const Eigen::VectorXd row_mean = cross.rowwise().mean();
    Eigen::MatrixXd out(cross.rows(), cross.cols());
    for (Eigen::Index t = 0; t < cross.rows(); ++t)
        for (Eigen::Index a = 0; a < cross.cols(); ++a)
            out(t, a) = cross(t, a) - train_col_mean(a) - row_mean(t) + train_total_mean;
    return out;
}

}  // namespace detail

/// Centers test rows against the training statistics:
/// (K^t - (1/n) 1 1^T K) H, with H built from the uncentered training Gram.
inline CrossGram center_cross_gram(const CrossGram& cg, const GramMatrix& train_gram) {
    if (cg.centered) throw InputError("center_cross_gram: already centered");
    if (train_gram.centered)
        throw InputError("center_cross_gram: training Gram must be uncentered");
    const Eigen::Index n = train_gram.size();
    if (cg.values.cols() != n)
        throw InputError("center_cross_gram: width mismatch");
    const Eigen::VectorXd col_mean = train_gram.values.colwise().mean().transpose();
    CrossGram out;
    out.train_sizes = cg.train_sizes;
    out.centered = true;
    out.values = detail::center_cross_values(cg.values, col_mean, col_mean.mean());
    return out;
}

/// Median pairwise Euclidean distance of the pooled sample; the default
/// bandwidth when the user passes no sigma. Zero-distance pairs are included.
inline double median_pairwise_distance(const Eigen::MatrixXd& pts) {
    const Eigen::Index n = pts.rows();
    if (n < 2) return 1.0;
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < i; ++j)
            d.push_back((pts.row(i) - pts.row(j)).norm());
    auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    const double med = *mid;
    return med > 0.0 ? med : 1.0;
}

}  // namespace dica
