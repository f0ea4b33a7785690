#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <vector>

#include "dica/common.hpp"
#include "dica/dataset.hpp"
#include "dica/domains.hpp"
#include "dica/kernels.hpp"
#include "dica/transform.hpp"

namespace dica {

enum class Task { Regression, BinaryClassification };

/// Product kernel on (domain, point) pairs: k1 is Gaussian in the MMD between
/// domain embeddings (bandwidth sigma1), k2 is the inner kernel on points.
struct DistributionalKernelSpec {
    double sigma1 = 1.0;
    KernelSpec base;

    void validate() const {
        if (!(sigma1 > 0.0)) throw ConfigError("sigma1 must be positive");
    }
};

/// entry(a,b) = exp(-mmd^2(dg, row_ids[a], col_ids[b]) / (2 sigma1^2)) * inner(a,b).
/// With k1 constant (sigma1 -> inf) this reduces to the pooling kernel.
inline Eigen::MatrixXd distributional_gram(const Eigen::MatrixXd& inner, const DomainGram& dg,
                                           double sigma1, const std::vector<int>& row_ids,
                                           const std::vector<int>& col_ids) {
    if (!(sigma1 > 0.0)) throw ConfigError("distributional_gram: sigma1 must be positive");
    if (inner.rows() != static_cast<Eigen::Index>(row_ids.size()) ||
        inner.cols() != static_cast<Eigen::Index>(col_ids.size()))
        throw InputError("distributional_gram: id vector length mismatch");
    const Eigen::Index nd = dg.values.rows();
    Eigen::MatrixXd k1(nd, nd);
    for (Eigen::Index i = 0; i < nd; ++i)
        for (Eigen::Index j = 0; j < nd; ++j)
            k1(i, j) = std::exp(-mmd_squared(dg, i, j) / (2.0 * sigma1 * sigma1));
    Eigen::MatrixXd out(inner.rows(), inner.cols());
    for (Eigen::Index a = 0; a < inner.rows(); ++a) {
        const int ra = row_ids[static_cast<std::size_t>(a)];
        if (ra < 0 || ra >= nd) throw InputError("distributional_gram: row id out of range");
        for (Eigen::Index b = 0; b < inner.cols(); ++b) {
            const int cb = col_ids[static_cast<std::size_t>(b)];
            if (cb < 0 || cb >= nd)
                throw InputError("distributional_gram: column id out of range");
            out(a, b) = k1(ra, cb) * inner(a, b);
        }
    }
    return out;
}

/// Kernel ridge model in dual form; the predictor equals the GP posterior
/// mean with noise eta. For classification the two labels are encoded as
/// -1/+1 (smaller label first) and predictions are decoded by sign.
struct RidgeModel {
    Eigen::VectorXd alpha;
    double ridge = 1.0;
    Task task = Task::Regression;
    std::array<double, 2> label_map{-1.0, 1.0};
};

inline RidgeModel ridge_fit(const Eigen::MatrixXd& gram, const Eigen::VectorXd& y, double eta,
                            Task task) {
    if (gram.rows() != gram.cols()) throw InputError("ridge_fit: gram must be square");
    if (gram.rows() != y.size()) throw InputError("ridge_fit: target length mismatch");
    if (!(eta > 0.0)) throw ConfigError("ridge_fit: eta must be positive");
    if (!y.allFinite()) throw InputError("ridge_fit: non-finite targets");

    RidgeModel model;
    model.ridge = eta;
    model.task = task;
    Eigen::VectorXd targets = y;
    if (task == Task::BinaryClassification) {
        std::set<double> classes(y.data(), y.data() + y.size());
        if (classes.size() > 2) throw InputError("ridge_fit: more than two class labels");
        if (classes.size() == 2) {
            model.label_map = {*classes.begin(), *std::next(classes.begin())};
            for (Eigen::Index i = 0; i < y.size(); ++i)
                targets(i) = y(i) == model.label_map[0] ? -1.0 : 1.0;
        } else {
            model.label_map = {*classes.begin(), *classes.begin()};
            targets.setOnes();
        }
    }
    Eigen::MatrixXd shifted = gram;
    shifted.diagonal().array() += eta;
    model.alpha = solve_spd(shifted, targets);
    return model;
}

/// Regression returns cross * alpha; classification decodes the sign, with 0
/// mapped to the first class.
inline Eigen::VectorXd ridge_predict(const RidgeModel& model, const Eigen::MatrixXd& cross) {
    if (cross.cols() != model.alpha.size()) throw InputError("ridge_predict: width mismatch");
    Eigen::VectorXd s = cross * model.alpha;
    if (model.task == Task::Regression) return s;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        s(i) = s(i) > 0.0 ? model.label_map[1] : model.label_map[0];
    return s;
}

/// Classification: fraction correct. Regression: root mean squared error.
inline double metrics(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred, Task task) {
    if (y_true.size() != y_pred.size()) throw InputError("metrics: length mismatch");
    if (y_true.size() == 0) throw InputError("metrics: empty vectors");
    if (task == Task::BinaryClassification) {
        double correct = 0.0;
        for (Eigen::Index i = 0; i < y_true.size(); ++i)
            if (y_true(i) == y_pred(i)) correct += 1.0;
        return correct / static_cast<double>(y_true.size());
    }
    return std::sqrt((y_true - y_pred).squaredNorm() / static_cast<double>(y_true.size()));
}

// ---------------------------------------------------------------------------
// Method pipelines: transform (or raw kernel) -> pooling / distributional
// gram -> ridge. These wire the pieces the way the experiment protocol does.
// ---------------------------------------------------------------------------

enum class Method { Raw, Kpca, Udica, Coir, Dica };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::Raw: return "input";
        case Method::Kpca: return "kpca";
        case Method::Udica: return "udica";
        case Method::Coir: return "coir";
        case Method::Dica: return "dica";
    }
    return "?";
}

inline Method method_from_string(const std::string& s) {
    if (s == "input" || s == "raw") return Method::Raw;
    if (s == "kpca") return Method::Kpca;
    if (s == "udica") return Method::Udica;
    if (s == "coir") return Method::Coir;
    if (s == "dica") return Method::Dica;
    throw ConfigError("unknown method '" + s + "'");
}

inline FitMode fit_mode_of(Method m) {
    switch (m) {
        case Method::Kpca: return FitMode::Kpca;
        case Method::Udica: return FitMode::Udica;
        case Method::Coir: return FitMode::Coir;
        case Method::Dica: return FitMode::Dica;
        case Method::Raw: break;
    }
    throw ConfigError("raw method has no fit mode");
}

/// One point on the hyperparameter grid. Zeros select data-driven defaults:
/// sigma2 / sigma_y by the median pairwise-distance heuristic, sigma1 by the
/// median MMD between training domains.
struct PipelineConfig {
    Method method = Method::Dica;
    bool distributional = false;
    Task task = Task::BinaryClassification;
    Eigen::Index m = 2;
    double epsilon = 1e-4;
    double lambda = 1e-4;
    double sigma2 = 0.0;
    double sigma_y = 0.0;
    double sigma1 = 0.0;
    double eta = 1.0;
};

struct PipelineResult {
    Eigen::VectorXd predictions;  // flattened test order
    double score = 0.0;           // accuracy (classification) or RMSE (regression)
    double dist_term = 0.0;
    double complexity_term = 0.0;
    PipelineConfig resolved;      // config with data-driven defaults filled in
};

namespace detail {

/// Fit-dependent intermediates shared by every (sigma1, eta, distributional)
/// combination on the grid.
struct FittedParts {
    Eigen::MatrixXd inner_train;   // n x n kernel used by the learner
    Eigen::MatrixXd inner_cross;   // n_t x n
    DomainGram stacked;            // train domains then test domains
    double dist_term = 0.0;
    double complexity_term = 0.0;
    double median_mmd = 1.0;       // over training-domain pairs
    double sigma2 = 0.0;
    double sigma_y = 0.0;
};

/// Median MMD between training-domain embeddings, floored by the mean
/// within-domain feature dispersion. The floor keeps k1 informative when the
/// transform has collapsed the training domains onto each other: an unseen
/// domain then sits at an offset on the order of the within-domain spread,
/// which the raw median would undershoot by orders of magnitude.
inline double median_train_mmd(const DomainGram& dg, const Eigen::MatrixXd& inner_train,
                               const std::vector<Eigen::Index>& train_sizes) {
    const auto n_train_domains = static_cast<Eigen::Index>(train_sizes.size());
    std::vector<double> d;
    for (Eigen::Index i = 0; i < n_train_domains; ++i)
        for (Eigen::Index j = 0; j < i; ++j)
            d.push_back(std::sqrt(std::max(0.0, mmd_squared(dg, i, j))));
    double median = 0.0;
    if (!d.empty()) {
        auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
        std::nth_element(d.begin(), mid, d.end());
        median = *mid;
    }
    // Mean within-domain dispersion: (1/n_i) sum_k inner(k,k) - ||mu_i||^2.
    double disp = 0.0;
    Eigen::Index off = 0;
    for (Eigen::Index i = 0; i < n_train_domains; ++i) {
        const auto ni = train_sizes[static_cast<std::size_t>(i)];
        const double mean_diag = inner_train.diagonal().segment(off, ni).mean();
        disp += std::max(0.0, mean_diag - dg.values(i, i));
        off += ni;
    }
    disp = std::sqrt(disp / static_cast<double>(n_train_domains));
    const double sigma = std::max(median, disp);
    return sigma > 0.0 ? sigma : 1.0;
}

/// Domain gram over train + test domains from per-domain feature means
/// (linear kernel in the projected feature space).
inline DomainGram stacked_domain_gram_from_features(
    const Eigen::MatrixXd& f_train, const std::vector<Eigen::Index>& train_sizes,
    const Eigen::MatrixXd& f_test, const std::vector<Eigen::Index>& test_sizes) {
    const auto n_tr = static_cast<Eigen::Index>(train_sizes.size());
    const auto n_te = static_cast<Eigen::Index>(test_sizes.size());
    Eigen::MatrixXd mu(n_tr + n_te, f_train.cols());
    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < n_tr; ++i) {
        mu.row(i) = f_train.middleRows(row, train_sizes[static_cast<std::size_t>(i)]).colwise().mean();
        row += train_sizes[static_cast<std::size_t>(i)];
    }
    row = 0;
    for (Eigen::Index i = 0; i < n_te; ++i) {
        mu.row(n_tr + i) =
            f_test.middleRows(row, test_sizes[static_cast<std::size_t>(i)]).colwise().mean();
        row += test_sizes[static_cast<std::size_t>(i)];
    }
    DomainGram dg;
    dg.values.resize(n_tr + n_te, n_tr + n_te);
    for (Eigen::Index i = 0; i < mu.rows(); ++i)
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = mu.row(i).dot(mu.row(j));
            dg.values(i, j) = v;
            dg.values(j, i) = v;
        }
    return dg;
}

/// Domain gram over train + test domains by block means of the raw kernel.
inline DomainGram stacked_domain_gram_raw(const KernelSpec& kx, const DomainDataset& train,
                                          const DomainDataset& test,
                                          const GramMatrix& train_gram,
                                          const Eigen::MatrixXd& cross_values) {
    const DomainGram dg_tr = domain_gram(train_gram);
    const GramMatrix test_gram = pooled_gram(kx, test, false);
    const DomainGram dg_te = domain_gram(test_gram);
    const auto n_tr = dg_tr.values.rows();
    const auto n_te = dg_te.values.rows();
    DomainGram dg;
    dg.values.resize(n_tr + n_te, n_tr + n_te);
    dg.values.topLeftCorner(n_tr, n_tr) = dg_tr.values;
    dg.values.bottomRightCorner(n_te, n_te) = dg_te.values;
    const auto train_sizes = train.sizes();
    const auto test_sizes = test.sizes();
    Eigen::Index trow = 0;
    for (Eigen::Index i = 0; i < n_te; ++i) {
        Eigen::Index tcol = 0;
        for (Eigen::Index j = 0; j < n_tr; ++j) {
            const double v = cross_values
                                 .block(trow, tcol, test_sizes[static_cast<std::size_t>(i)],
                                        train_sizes[static_cast<std::size_t>(j)])
                                 .mean();
            dg.values(n_tr + i, j) = v;
            dg.values(j, n_tr + i) = v;
            tcol += train_sizes[static_cast<std::size_t>(j)];
        }
        trow += test_sizes[static_cast<std::size_t>(i)];
    }
    return dg;
}

inline FittedParts build_fitted_parts(const DomainDataset& train, const DomainDataset& test,
                                      const PipelineConfig& cfg) {
    FittedParts parts;
    parts.sigma2 = cfg.sigma2 > 0.0 ? cfg.sigma2
                                    : median_pairwise_distance(flatten(train).inputs);
    const KernelSpec kx = KernelSpec::gaussian(parts.sigma2);
    KernelSpec ky = KernelSpec::delta();
    if (cfg.task == Task::Regression) {
        parts.sigma_y = cfg.sigma_y;
        if (!(parts.sigma_y > 0.0)) {
            // Median of the pooled training target values.
            std::vector<double> vals;
            for (const auto& d : train.domains)
                vals.insert(vals.end(), d.outputs->data(), d.outputs->data() + d.outputs->size());
            auto mid = vals.begin() + static_cast<std::ptrdiff_t>(vals.size() / 2);
            std::nth_element(vals.begin(), mid, vals.end());
            parts.sigma_y = std::abs(*mid) > 0.0 ? std::abs(*mid) : 1.0;
        }
        ky = KernelSpec::gaussian(parts.sigma_y);
    }

    const Eigen::MatrixXd test_inputs = flatten(test).inputs;
    if (cfg.method == Method::Raw) {
        const GramMatrix g = pooled_gram(kx, train, false);
        const CrossGram cg = cross_gram(kx, test_inputs, train);
        parts.inner_train = g.values;
        parts.inner_cross = cg.values;
        parts.stacked = stacked_domain_gram_raw(kx, train, test, g, cg.values);
    } else {
        FitConfig fc;
        fc.mode = fit_mode_of(cfg.method);
        fc.m = cfg.m;
        fc.epsilon = cfg.epsilon;
        fc.lambda = cfg.lambda;
        const Transform t = fit(train, kx, ky, fc);
        const Eigen::MatrixXd f_tr = project_features(t);
        const CrossGram cg = cross_gram_for(t, test_inputs);
        const Eigen::MatrixXd f_te = project_features(t, cg);
        parts.inner_train = exact_symmetric_product(f_tr);
        parts.inner_cross = f_te * f_tr.transpose();
        parts.stacked =
            stacked_domain_gram_from_features(f_tr, train.sizes(), f_te, test.sizes());
        const auto [dist, complexity] = bound_terms(t);
        parts.dist_term = dist;
        parts.complexity_term = complexity;
    }
    parts.median_mmd = median_train_mmd(parts.stacked, parts.inner_train, train.sizes());
    return parts;
}

inline std::vector<int> domain_id_vector(const DomainDataset& data, int offset) {
    std::vector<int> ids;
    ids.reserve(static_cast<std::size_t>(data.total_size()));
    for (Eigen::Index i = 0; i < data.num_domains(); ++i)
        for (Eigen::Index k = 0; k < data.domains[static_cast<std::size_t>(i)].inputs.rows(); ++k)
            ids.push_back(static_cast<int>(i) + offset);
    return ids;
}

inline PipelineResult finish_pipeline(const FittedParts& parts, const DomainDataset& train,
                                      const DomainDataset& test, const PipelineConfig& cfg) {
    PipelineResult res;
    res.resolved = cfg;
    res.resolved.sigma2 = parts.sigma2;
    res.resolved.sigma_y = parts.sigma_y;
    res.dist_term = parts.dist_term;
    res.complexity_term = parts.complexity_term;

    const Eigen::VectorXd y_train = *flatten(train).outputs;
    const Eigen::VectorXd y_test = *flatten(test).outputs;

    Eigen::MatrixXd gram = parts.inner_train;
    Eigen::MatrixXd cross = parts.inner_cross;
    if (cfg.distributional) {
        res.resolved.sigma1 = cfg.sigma1 > 0.0 ? cfg.sigma1 : parts.median_mmd;
        const std::vector<int> ids_tr = domain_id_vector(train, 0);
        const std::vector<int> ids_te =
            domain_id_vector(test, static_cast<int>(train.num_domains()));
        gram = distributional_gram(gram, parts.stacked, res.resolved.sigma1, ids_tr, ids_tr);
        cross = distributional_gram(cross, parts.stacked, res.resolved.sigma1, ids_te, ids_tr);
    }
    const RidgeModel model = ridge_fit(gram, y_train, cfg.eta, cfg.task);
    res.predictions = ridge_predict(model, cross);
    res.score = metrics(y_test, res.predictions, cfg.task);
    return res;
}

}  // namespace detail

/// Runs one method pipeline end to end: fit on train, predict on the held-out
/// test domains. Test domains never enter any Gram used for fitting.
inline PipelineResult run_pipeline(const DomainDataset& train, const DomainDataset& test,
                                   const PipelineConfig& cfg) {
    train.validate();
    test.validate();
    if (!train.has_outputs() || !test.has_outputs())
        throw InputError("run_pipeline: outputs required");
    const detail::FittedParts parts = detail::build_fitted_parts(train, test, cfg);
    return detail::finish_pipeline(parts, train, test, cfg);
}

struct CvResult {
    std::size_t best_index = 0;
    PipelineConfig best;
    Eigen::VectorXd mean_scores;   // one per grid point (higher is better)
    Eigen::MatrixXd fold_scores;   // grid x folds
    std::vector<std::vector<int>> fold_domains;
};

/// Domain-wise cross validation: each fold holds out whole domains
/// (round-robin assignment), matching the unseen-domain objective. The grid
/// point with the best mean score wins; ties break to smaller m, then to the
/// earlier grid index. Fits are shared across grid points that differ only in
/// sigma1 / eta / distributional.
inline CvResult cross_validate(const DomainDataset& data,
                               const std::vector<PipelineConfig>& grid,
                               Eigen::Index n_folds = 10) {
    data.validate();
    if (grid.empty()) throw ConfigError("cross_validate: empty grid");
    const Eigen::Index n_domains = data.num_domains();
    if (n_domains < 2) throw InputError("cross_validate: need at least 2 domains");
    const Eigen::Index folds = std::min(n_folds, n_domains);

    CvResult cv;
    cv.fold_domains.resize(static_cast<std::size_t>(folds));
    for (Eigen::Index i = 0; i < n_domains; ++i)
        cv.fold_domains[static_cast<std::size_t>(i % folds)].push_back(static_cast<int>(i));

    cv.fold_scores.resize(static_cast<Eigen::Index>(grid.size()), folds);
    for (Eigen::Index f = 0; f < folds; ++f) {
        DomainDataset tr, va;
        const auto& held = cv.fold_domains[static_cast<std::size_t>(f)];
        for (Eigen::Index i = 0; i < n_domains; ++i) {
            const bool out = std::find(held.begin(), held.end(), static_cast<int>(i)) != held.end();
            (out ? va : tr).domains.push_back(data.domains[static_cast<std::size_t>(i)]);
        }
        using FitKey = std::tuple<int, Eigen::Index, double, double, double, double>;
        std::map<FitKey, detail::FittedParts> cache;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const PipelineConfig& cfg = grid[g];
            FitKey key{static_cast<int>(cfg.method), cfg.m, cfg.epsilon,
                       cfg.lambda, cfg.sigma2, cfg.sigma_y};
            auto it = cache.find(key);
            if (it == cache.end())
                it = cache.emplace(key, detail::build_fitted_parts(tr, va, cfg)).first;
            const PipelineResult r = detail::finish_pipeline(it->second, tr, va, cfg);
            const double score =
                cfg.task == Task::BinaryClassification ? r.score : -r.score;
            cv.fold_scores(static_cast<Eigen::Index>(g), f) = score;
        }
    }
    cv.mean_scores = cv.fold_scores.rowwise().mean();
    std::size_t best = 0;
    for (std::size_t g = 1; g < grid.size(); ++g) {
        const double s = cv.mean_scores(static_cast<Eigen::Index>(g));
        const double sb = cv.mean_scores(static_cast<Eigen::Index>(best));
        if (s > sb || (s == sb && grid[g].m < grid[best].m)) best = g;
    }
    cv.best_index = best;
    cv.best = grid[best];
    return cv;
}

}  // namespace dica
