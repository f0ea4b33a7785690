#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dica/common.hpp"
#include "dica/dataset.hpp"
#include "dica/kernels.hpp"

namespace dica {

/// The block-constant matrix Q for which tr(KQ) is the empirical
/// distributional variance: block (i,i) holds (N-1)/(N^2 n_i^2), block (i,j)
/// with i != j holds -1/(N^2 n_i n_j).
struct CoefficientMatrix {
    Eigen::MatrixXd values;
    std::vector<Eigen::Index> domain_sizes;
};

/// N x N matrix of inner products between empirical mean embeddings;
/// entry (i,j) is the mean of block (i,j) of the pooled Gram.
struct DomainGram {
    Eigen::MatrixXd values;
};

/// Block weight of Q for domain pair (i,j).
inline double coefficient_entry(Eigen::Index n_domains, Eigen::Index n_i,
                                Eigen::Index n_j, bool diagonal) {
    const auto N = static_cast<double>(n_domains);
    if (diagonal) return (N - 1.0) / (N * N * static_cast<double>(n_i) * static_cast<double>(n_i));
    return -1.0 / (N * N * static_cast<double>(n_i) * static_cast<double>(n_j));
}

inline CoefficientMatrix coefficient_matrix(const std::vector<Eigen::Index>& domain_sizes) {
    if (domain_sizes.empty()) throw InputError("coefficient_matrix: empty size list");
    Eigen::Index n = 0;
    for (auto s : domain_sizes) {
        if (s < 1) throw InputError("coefficient_matrix: domain size must be >= 1");
        n += s;
    }
    const auto N = static_cast<Eigen::Index>(domain_sizes.size());
    CoefficientMatrix q;
    q.domain_sizes = domain_sizes;
    q.values.resize(n, n);
    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < N; ++i) {
        Eigen::Index col = 0;
        for (Eigen::Index j = 0; j < N; ++j) {
            q.values.block(row, col, domain_sizes[i], domain_sizes[j])
                .setConstant(coefficient_entry(N, domain_sizes[i], domain_sizes[j], i == j));
            col += domain_sizes[j];
        }
        row += domain_sizes[i];
    }
    return q;
}

/// Between-domain Gram: block means of the pooled Gram. Mirrored from one
/// triangle so the result is exactly symmetric.
inline DomainGram domain_gram(const GramMatrix& g) {
    const auto N = g.num_domains();
    if (N == 0) throw InputError("domain_gram: Gram carries no domain sizes");
    std::vector<Eigen::Index> offsets(static_cast<std::size_t>(N) + 1, 0);
    for (Eigen::Index i = 0; i < N; ++i)
        offsets[static_cast<std::size_t>(i) + 1] =
            offsets[static_cast<std::size_t>(i)] + g.domain_sizes[static_cast<std::size_t>(i)];
    DomainGram dg;
    dg.values.resize(N, N);
    for (Eigen::Index i = 0; i < N; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double m = g.values
                                 .block(offsets[static_cast<std::size_t>(i)],
                                        offsets[static_cast<std::size_t>(j)],
                                        g.domain_sizes[static_cast<std::size_t>(i)],
                                        g.domain_sizes[static_cast<std::size_t>(j)])
                                 .mean();
            dg.values(i, j) = m;
            dg.values(j, i) = m;
        }
    }
    return dg;
}

/// Empirical distributional variance tr(KQ).
inline double distributional_variance(const GramMatrix& g, const CoefficientMatrix& q) {
    if (g.size() != q.values.rows())
        throw InputError("distributional_variance: size mismatch");
    // Q is symmetric, so tr(KQ) is the elementwise product sum.
    return (g.values.array() * q.values.array()).sum();
}

/// Distributional variance from the domain-level Gram:
/// (1/N) tr(G) - (1/N^2) sum_ij G_ij.
inline double distributional_variance_gramform(const DomainGram& dg) {
    const auto N = static_cast<double>(dg.values.rows());
    return dg.values.trace() / N - dg.values.sum() / (N * N);
}

/// Squared MMD between the empirical embeddings of domains i and j.
inline double mmd_squared(const DomainGram& dg, Eigen::Index i, Eigen::Index j) {
    const Eigen::Index N = dg.values.rows();
    if (i < 0 || i >= N || j < 0 || j >= N)
        throw InputError("mmd_squared: index out of range");
    return dg.values(i, i) + dg.values(j, j) - 2.0 * dg.values(i, j);
}

}  // namespace dica
