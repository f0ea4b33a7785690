#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "dica/domains.hpp"
#include "dica/downstream.hpp"
#include "dica/synth.hpp"

using namespace dica;
using namespace dica::synth;

TEST(Rng, DeterministicStreams) {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.normal(), b.normal());
    Rng c(43);
    bool differs = false;
    Rng a2(42);
    for (int i = 0; i < 10; ++i) differs |= a2.normal() != c.normal();
    EXPECT_TRUE(differs);
}

TEST(Rng, NormalMomentsSane) {
    Rng rng(7);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sq += x * x;
    }
    EXPECT_NEAR(sum / n, 0.0, 0.01);
    EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(Rng, PoissonMeanSane) {
    Rng rng(8);
    const int n = 20000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += static_cast<double>(rng.poisson(200.0));
    EXPECT_NEAR(sum / n, 200.0, 1.0);
}

TEST(SampleWishart, ZeroScaleGivesZeroMatrix) {
    Rng rng(1);
    const auto w = sample_wishart(0.0, 10, 3, rng);
    EXPECT_EQ(w.cwiseAbs().maxCoeff(), 0.0);
}

TEST(SampleWishart, OneDimensionalChiSquareMean) {
    // dim=1: W = s * chi^2_k, mean k*s. Monte Carlo within 3%.
    Rng rng(2);
    const double s = 0.7;
    const int df = 6;
    double sum = 0.0;
    const int reps = 10000;
    for (int i = 0; i < reps; ++i) sum += sample_wishart(s, df, 1, rng)(0, 0);
    EXPECT_NEAR(sum / reps, df * s, 0.03 * df * s);
}

TEST(SampleWishart, SymmetricPsd) {
    Rng rng(3);
    const auto w = sample_wishart(0.2, 10, 5, rng);
    EXPECT_EQ((w - w.transpose()).cwiseAbs().maxCoeff(), 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
}

TEST(SampleWishart, DfBelowDimThrows) {
    Rng rng(4);
    EXPECT_THROW(sample_wishart(0.2, 3, 5, rng), ConfigError);
}

TEST(MakeToy, SameSeedIsBitIdentical) {
    SynthToyConfig cfg;
    cfg.n_domains = 4;
    cfg.poisson_mean = 30.0;
    cfg.seed = 99;
    const auto a = make_toy(cfg);
    const auto b = make_toy(cfg);
    ASSERT_EQ(a.domains.size(), b.domains.size());
    for (std::size_t i = 0; i < a.domains.size(); ++i) {
        EXPECT_EQ((a.domains[i].inputs - b.domains[i].inputs).cwiseAbs().maxCoeff(), 0.0);
        EXPECT_EQ((*a.domains[i].outputs - *b.domains[i].outputs).cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(MakeToy, DomainSizesClampedToAtLeastTwo) {
    SynthToyConfig cfg;
    cfg.n_domains = 20;
    cfg.poisson_mean = 0.05;
    cfg.seed = 5;
    const auto data = make_toy(cfg);
    for (const auto& d : data.domains) EXPECT_GE(d.inputs.rows(), 2);
}

TEST(MakeToy, OutputsAreFinite) {
    SynthToyConfig cfg;
    cfg.n_domains = 6;
    cfg.poisson_mean = 100.0;
    cfg.seed = 6;
    const auto data = make_toy(cfg);
    for (const auto& d : data.domains) EXPECT_TRUE(d.outputs->allFinite());
}

TEST(MakeToy, SampleMomentsMatchDrawnCovariance) {
    // Replay the documented draw order to recover the first domain's Sigma:
    // b1 (dim), b2 (dim), c (1 normal), then the Wishart draw.
    SynthToyConfig cfg;
    cfg.n_domains = 1;
    cfg.dim = 5;
    cfg.seed = 77;
    cfg.domain_size_override = 10000;
    const auto data = make_toy(cfg);

    Rng replay(cfg.seed);
    replay.normal_vector(cfg.dim);  // b1
    replay.normal_vector(cfg.dim);  // b2
    replay.normal();                // c
    const Eigen::MatrixXd sigma =
        sample_wishart(cfg.wishart_scale, cfg.wishart_df, cfg.dim, replay);

    const Eigen::MatrixXd& x = data.domains[0].inputs;
    const Eigen::RowVectorXd mean = x.colwise().mean();
    // Mean within a 4-sigma Monte Carlo bound per coordinate.
    for (Eigen::Index j = 0; j < cfg.dim; ++j) {
        const double sd = std::sqrt(sigma(j, j) / static_cast<double>(x.rows()));
        EXPECT_LE(std::abs(mean(j)), 4.0 * sd + 1e-12);
    }
    const Eigen::MatrixXd centered = x.rowwise() - mean;
    const Eigen::MatrixXd cov =
        centered.transpose() * centered / static_cast<double>(x.rows() - 1);
    const double scale = sigma.cwiseAbs().maxCoeff();
    EXPECT_LT((cov - sigma).cwiseAbs().maxCoeff(), 0.15 * scale);
}

TEST(MakeClassification, SameSeedIdenticalSplit) {
    SynthClassConfig cfg;
    cfg.n_domains = 3;
    cfg.n_test_domains = 2;
    cfg.per_domain_n = 20;
    cfg.seed = 11;
    const auto [tr1, te1] = make_classification(cfg);
    const auto [tr2, te2] = make_classification(cfg);
    EXPECT_EQ((flatten(tr1).inputs - flatten(tr2).inputs).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ((flatten(te1).inputs - flatten(te2).inputs).cwiseAbs().maxCoeff(), 0.0);
}

TEST(MakeClassification, LabelsBalanced) {
    SynthClassConfig cfg;
    cfg.n_domains = 5;
    cfg.n_test_domains = 1;
    cfg.per_domain_n = 51;
    cfg.seed = 12;
    const auto [train, test] = make_classification(cfg);
    for (const auto& d : train.domains) {
        const double pos = (d.outputs->array() > 0).count();
        const double frac = pos / static_cast<double>(d.outputs->size());
        EXPECT_GE(frac, 0.3);
        EXPECT_LE(frac, 0.7);
    }
}

TEST(MakeClassification, ZeroShiftGivesLowDistributionalVariance) {
    SynthClassConfig base;
    base.n_domains = 4;
    base.n_test_domains = 1;
    base.per_domain_n = 150;
    base.seed = 13;

    const auto variance_of = [](const DomainDataset& data) {
        const auto g = pooled_gram(KernelSpec::gaussian(2.0), data);
        return distributional_variance(g, coefficient_matrix(g.domain_sizes));
    };

    auto no_shift = base;
    no_shift.domain_shift_scale = 0.0;
    auto shifted = base;
    shifted.domain_shift_scale = 3.0;
    const double v0 = variance_of(make_classification(no_shift).first);
    const double v1 = variance_of(make_classification(shifted).first);
    EXPECT_LT(v0, 0.1 * v1);
    EXPECT_LT(v0, 0.01);
}

TEST(MakeClassification, LargeSeparationIsLinearlySeparable) {
    SynthClassConfig cfg;
    cfg.n_domains = 3;
    cfg.n_test_domains = 1;
    cfg.per_domain_n = 60;
    cfg.class_separation = 10.0;
    cfg.domain_shift_scale = 1.0;
    cfg.seed = 14;
    const auto [train, test] = make_classification(cfg);

    // Pooled kernel ridge on the training sample reaches >= 99% train accuracy.
    const auto flat = flatten(train);
    const auto g = pooled_gram(KernelSpec::gaussian(median_pairwise_distance(flat.inputs)),
                               train);
    const auto model = ridge_fit(g.values, *flat.outputs, 1e-3, Task::BinaryClassification);
    const auto pred = ridge_predict(model, g.values);
    EXPECT_GE(metrics(*flat.outputs, pred, Task::BinaryClassification), 0.99);
}

TEST(MakeRegressionSurrogate, DeterministicAndConsistent) {
    SynthRegressionConfig cfg;
    cfg.n_domains = 4;
    cfg.per_domain_n = 10;
    cfg.seed = 15;
    const auto a = make_regression_surrogate(cfg);
    const auto b = make_regression_surrogate(cfg);
    EXPECT_EQ((flatten(a.motor).inputs - flatten(b.motor).inputs).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ((flatten(a.motor).inputs - flatten(a.total).inputs).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_TRUE(flatten(a.motor).outputs->allFinite());
    EXPECT_TRUE(flatten(a.total).outputs->allFinite());
}
