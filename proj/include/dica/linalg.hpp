#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dica/common.hpp"

namespace dica {

/// Result of a truncated eigendecomposition. Columns of `vectors` are
/// eigenvectors for `values` (sorted descending, ties kept in original
/// order); `max_imag` is the largest absolute imaginary part found in the
/// full spectrum before it was discarded.
struct EigenResult {
    Eigen::MatrixXd vectors;
    Eigen::VectorXd values;
    double max_imag = 0.0;
};

namespace detail {

inline void check_symmetric(const Eigen::MatrixXd& a, const char* who) {
    if (a.rows() != a.cols()) throw InputError(std::string(who) + ": matrix not square");
    const double scale = a.cwiseAbs().maxCoeff();
    const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * std::max(scale, 1e-300))
        throw InputError(std::string(who) + ": matrix not symmetric");
}

/// Unblocked scan used only on the error path, to name the failing pivot.
inline long find_nonpd_pivot(Eigen::MatrixXd a) {
    const Eigen::Index n = a.rows();
    for (Eigen::Index j = 0; j < n; ++j) {
        double d = a(j, j);
        for (Eigen::Index k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
        if (!(d > 0.0) || !std::isfinite(d)) return static_cast<long>(j);
        const double r = std::sqrt(d);
        a(j, j) = r;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (Eigen::Index k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
            a(i, j) = s / r;
        }
    }
    return -1;
}

/// Deterministic sign: the first entry of largest absolute value is positive.
inline void fix_column_sign(Eigen::Ref<Eigen::VectorXd> col) {
    Eigen::Index idx = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < col.size(); ++i) {
        const double a = std::abs(col(i));
        if (a > best) {
            best = a;
            idx = i;
        }
    }
    if (col(idx) < 0.0) col = -col;
}

}  // namespace detail

/// Cholesky factor L (lower triangular) with L L^T = a. The input must be
/// symmetric and numerically positive definite.
inline Eigen::MatrixXd cholesky_pd(const Eigen::MatrixXd& a) {
    detail::check_symmetric(a, "cholesky_pd");
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success)
        throw DefinitenessError("cholesky_pd: matrix is not positive definite",
                                detail::find_nonpd_pivot(a));
    return llt.matrixL();
}

/// Solves a x = b for symmetric positive definite a via Cholesky.
inline Eigen::MatrixXd solve_spd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    detail::check_symmetric(a, "solve_spd");
    if (a.rows() != b.rows()) throw InputError("solve_spd: size mismatch");
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success)
        throw DefinitenessError("solve_spd: matrix is not positive definite",
                                detail::find_nonpd_pivot(a));
    return llt.solve(b);
}

/// Top-m eigenpairs (by real part, descending) of a general real square
/// matrix whose spectrum is expected to be real, as arises for products of
/// PSD matrices. Imaginary parts below imag_tol * spectral radius are
/// discarded; anything larger is an error. For a conjugate pair the real and
/// imaginary component columns span the pair's invariant subspace, so the
/// first selected member keeps the real part and the second the imaginary
/// part. Columns are unit-norm with a deterministic sign.
inline EigenResult top_eig_nonsymmetric(const Eigen::MatrixXd& m_matrix, Eigen::Index m,
                                        double imag_tol = 1e-6) {
    const Eigen::Index n = m_matrix.rows();
    if (m_matrix.cols() != n) throw InputError("top_eig_nonsymmetric: matrix not square");
    if (m < 1 || m > n) throw InputError("top_eig_nonsymmetric: m out of range");

    Eigen::MatrixXd a = m_matrix;  // dgeev destroys its input
    Eigen::VectorXd wr(n), wi(n);
    Eigen::MatrixXd vr(n, n);
    const lapack_int info =
        LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'V', static_cast<lapack_int>(n), a.data(),
                      static_cast<lapack_int>(n), wr.data(), wi.data(), nullptr,
                      static_cast<lapack_int>(n), vr.data(), static_cast<lapack_int>(n));
    if (info != 0)
        throw Error("eigensolver", "dgeev failed to converge (info=" + std::to_string(info) + ")");

    double rho = 0.0, max_imag = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        rho = std::max(rho, std::hypot(wr(i), wi(i)));
        max_imag = std::max(max_imag, std::abs(wi(i)));
    }
    if (max_imag > imag_tol * rho)
        throw SpectrumError("top_eig_nonsymmetric: spectrum has a complex pair above tolerance",
                            max_imag);

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&wr](Eigen::Index l, Eigen::Index r) { return wr(l) > wr(r); });

    EigenResult res;
    res.max_imag = max_imag;
    res.values.resize(m);
    res.vectors.resize(n, m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const Eigen::Index p = order[static_cast<std::size_t>(k)];
        res.values(k) = wr(p);
        Eigen::VectorXd col = vr.col(p);
        const double norm = col.norm();
        if (norm > 0.0) col /= norm;
        detail::fix_column_sign(col);
        res.vectors.col(k) = col;
    }
    return res;
}

/// Top-m eigenpairs of a symmetric matrix, descending, sign-fixed. Used for
/// the plain symmetric eigenproblem (KPCA) and as a test oracle.
inline EigenResult top_eig_symmetric(const Eigen::MatrixXd& a_in, Eigen::Index m) {
    detail::check_symmetric(a_in, "top_eig_symmetric");
    const Eigen::Index n = a_in.rows();
    if (m < 1 || m > n) throw InputError("top_eig_symmetric: m out of range");
    Eigen::MatrixXd a = a_in;
    Eigen::VectorXd w(n);
    const lapack_int info =
        LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', static_cast<lapack_int>(n), a.data(),
                       static_cast<lapack_int>(n), w.data());
    if (info != 0)
        throw Error("eigensolver", "dsyevd failed (info=" + std::to_string(info) + ")");
    EigenResult res;
    res.max_imag = 0.0;
    res.values.resize(m);
    res.vectors.resize(n, m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const Eigen::Index p = n - 1 - k;  // dsyevd returns ascending order
        res.values(k) = w(p);
        Eigen::VectorXd col = a.col(p);
        detail::fix_column_sign(col);
        res.vectors.col(k) = col;
    }
    return res;
}

/// Rescales each column so that v^T c v = 1 under the PD metric c, then
/// re-applies the sign convention.
inline Eigen::MatrixXd normalize_constraint(const Eigen::MatrixXd& vectors,
                                            const Eigen::MatrixXd& c) {
    detail::check_symmetric(c, "normalize_constraint");
    if (c.rows() != vectors.rows())
        throw InputError("normalize_constraint: size mismatch");
    Eigen::MatrixXd out = vectors;
    for (Eigen::Index k = 0; k < out.cols(); ++k) {
        const double q = out.col(k).dot(c * out.col(k));
        if (!(q > 0.0) || !std::isfinite(q))
            throw DegenerateDirectionError(
                "normalize_constraint: nonpositive quadratic form in column " +
                std::to_string(k));
        out.col(k) /= std::sqrt(q);
        detail::fix_column_sign(out.col(k));
    }
    return out;
}

}  // namespace dica
