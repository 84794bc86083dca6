#include "oracles.hpp"

#include "pglmm/error.hpp"
#include "pglmm/metrics.hpp"
#include "pglmm/predict.hpp"
#include "pglmm/selection.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>

using namespace pglmm;

namespace {

KinshipSet kinship_of(std::vector<Eigen::MatrixXd> matrices, Eigen::Index n) {
    KinshipSet k;
    k.matrices = std::move(matrices);
    for (Eigen::Index i = 0; i < n; ++i) k.sample_ids.push_back("s" + std::to_string(i));
    return k;
}

Eigen::SparseVector<double> sparse(const Eigen::VectorXd& v) {
    Eigen::SparseVector<double> s(v.size());
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        if (v[j] != 0.0) s.insert(j) = v[j];
    }
    return s;
}

/// A one-point path assembled by hand, for testing the predictors in isolation.
PathFit toy_path(const Eigen::MatrixXd& V, double tau, const FamilySpec& family, const Eigen::MatrixXd& X,
                 const Eigen::VectorXd& y, const Eigen::VectorXd& beta, const Eigen::VectorXd& eta,
                 const Eigen::VectorXd& b) {
    PathFit fit;
    fit.theta = ThetaVector::for_family(family, 1);
    fit.theta.tau[0] = tau;
    fit.family = family;
    fit.y = y;
    fit.n_covariates = 1;
    for (Eigen::Index j = 0; j < X.cols(); ++j) fit.column_names.push_back("c" + std::to_string(j));
    fit.rotation = std::make_shared<RotatedProblem>(build_rotation(kinship_of({V}, y.size()), fit.theta, family, X, y));
    PathPoint pt;
    pt.beta = sparse(beta);
    pt.eta = eta;
    pt.b = b;
    fit.points.push_back(pt);
    return fit;
}

/// Path whose points only carry what the information criteria read.
PathFit criterion_path(Eigen::Index n, Eigen::Index components, const std::vector<double>& pql,
                       const std::vector<int>& df) {
    PathFit fit;
    fit.y = Eigen::VectorXd::Zero(n);
    fit.theta = ThetaVector::for_family(FamilySpec::binomial(), static_cast<std::size_t>(components));
    for (std::size_t k = 0; k < pql.size(); ++k) {
        PathPoint pt;
        pt.lambda = 1.0 / static_cast<double>(k + 1);
        pt.pql_loglik = pql[k];
        pt.df = df[k];
        fit.points.push_back(pt);
    }
    return fit;
}

Eigen::VectorXd vec(std::initializer_list<double> values) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v[i++] = x;
    return v;
}

struct FittedBinomial {
    Eigen::MatrixXd V;
    Design design;
    Eigen::VectorXd y;
    PathFit fit;
};

FittedBinomial fitted_binomial(int n, int p, std::uint64_t seed, bool keep_tau = true) {
    std::mt19937_64 rng(seed);
    FittedBinomial out;
    out.V = oracle::random_psd(n, n, rng) / static_cast<double>(n);
    std::binomial_distribution<int> dose(2, 0.3);
    Eigen::MatrixXd G(n, p);
    for (int j = 0; j < p; ++j)
        for (int i = 0; i < n; ++i) G(i, j) = dose(rng);
    Eigen::VectorXd eta = -0.2 + 0.9 * G.col(0).array() - 0.7 * G.col(1).array();
    std::uniform_real_distribution<double> u;
    out.y.resize(n);
    for (int i = 0; i < n; ++i) out.y[i] = u(rng) < 1.0 / (1.0 + std::exp(-eta[i])) ? 1.0 : 0.0;
    out.design = make_design(Eigen::MatrixXd::Ones(n, 1), G);
    const KinshipSet k = kinship_of({out.V}, n);
    NullModelFit null = fit_null(out.y, Eigen::MatrixXd::Ones(n, 1), k, FamilySpec::binomial());
    if (keep_tau && null.theta.tau[0] < 0.1) {
        null.theta.tau[0] = 0.8;
        null.theta.tau_pinned[0] = false;
    }
    PathOptions opts;
    opts.n_lambda = 20;
    opts.lambda_min_ratio = 0.05;
    opts.inner_tol = 1e-16 * n;
    opts.outer_tol = 1e-15;
    opts.max_outer = 5000;
    out.fit = fit_path(null, out.design, out.y, k, FamilySpec::binomial(), opts);
    return out;
}

}  // namespace

// --- Information criteria ---------------------------------------------------

TEST(Gic, BicArithmetic) {
    const PathFit path = criterion_path(100, 1, {-100.0}, {5});
    const double bic = gic(path, std::log(100.0))[0];
    EXPECT_DOUBLE_EQ(bic, 200.0 + std::log(100.0) * 6.0);
    EXPECT_NEAR(bic, 227.631, 5e-4);
    EXPECT_EQ(SelectionCriterion::bic().weight(100), std::log(100.0));
    EXPECT_EQ(SelectionCriterion::aic().weight(100), 2.0);
}

TEST(Gic, LargerDfIsPenalized) {
    const PathFit path = criterion_path(50, 1, {-30.0, -30.0}, {2, 3});
    const auto g = gic(path, 2.0);
    EXPECT_GT(g[1], g[0]);
}

TEST(Gic, BicMinusAicIsExact) {
    const PathFit path = criterion_path(80, 1, {-50.0, -41.3, -37.9, -36.2}, {0, 2, 5, 9});
    const auto aic = gic(path, 2.0);
    const auto bic = gic(path, std::log(80.0));
    for (std::size_t k = 0; k < path.size(); ++k) {
        const double expected = (std::log(80.0) - 2.0) * (path.points[k].df + 1);
        EXPECT_NEAR(bic[k] - aic[k], expected, 1e-13 * std::abs(bic[k])) << k;
    }
}

TEST(Select, TiesGoToTheLargerLambda) {
    std::vector<double> values(10, 5.0);
    values[3] = 1.0;
    values[7] = 1.0;
    EXPECT_EQ(argmin_first(values), 3u);
    values[3] = values[7] = 9.0;
    EXPECT_EQ(argmax_first(values), 3u);
}

TEST(Select, SinglePointPath) {
    const PathFit path = criterion_path(30, 1, {-12.0}, {4});
    EXPECT_EQ(select(path, SelectionCriterion::aic()), 0u);
    EXPECT_EQ(select(path, SelectionCriterion::bic()), 0u);
    EXPECT_EQ(select(path, SelectionCriterion::gic(7.5)), 0u);
}

TEST(Select, InteriorMinimumOnFittedPath) {
    const FittedBinomial f = fitted_binomial(120, 15, 31);
    const auto bic = gic(f.fit, std::log(120.0));
    const std::size_t k = select(f.fit, SelectionCriterion::bic());
    EXPECT_EQ(k, argmin_first(bic));
    EXPECT_GT(k, 0u);
    EXPECT_LT(k, f.fit.size() - 1);
}

TEST(Select, CriterionParsing) {
    EXPECT_EQ(SelectionCriterion::parse("aic").kind, SelectionCriterion::Kind::AIC);
    EXPECT_EQ(SelectionCriterion::parse("bic").kind, SelectionCriterion::Kind::BIC);
    const auto g = SelectionCriterion::parse("gic:3.5");
    EXPECT_EQ(g.kind, SelectionCriterion::Kind::GIC);
    EXPECT_EQ(g.a_n, 3.5);
    EXPECT_EQ(SelectionCriterion::parse("val-auc").kind, SelectionCriterion::Kind::ValidationAuc);
    EXPECT_THROW(SelectionCriterion::parse("gic:-1"), ArgumentError);
    EXPECT_THROW(SelectionCriterion::parse("cv"), ArgumentError);
}

TEST(Select, ModelSizeLookup) {
    const PathFit path = criterion_path(50, 1, {0, 0, 0, 0, 0}, {0, 2, 5, 9, 12});
    EXPECT_EQ(index_for_model_size(path, 10), 3u);
    EXPECT_EQ(index_for_model_size(path, 0), 0u);
    const PathFit tie = criterion_path(50, 1, {0, 0, 0}, {0, 8, 12});
    EXPECT_EQ(index_for_model_size(tie, 10), 1u);
}

// --- Metrics ----------------------------------------------------------------

TEST(Metrics, AucExamples) {
    EXPECT_EQ(metric_auc(vec({0.1, 0.4, 0.35, 0.8}), vec({0, 0, 1, 1})), 0.75);
    EXPECT_EQ(metric_auc(vec({0.3, 0.3, 0.3, 0.3}), vec({0, 1, 0, 1})), 0.5);
    EXPECT_EQ(metric_auc(vec({0.1, 0.2, 0.7, 0.9}), vec({0, 0, 1, 1})), 1.0);
    EXPECT_THROW(metric_auc(vec({0.1, 0.2}), vec({1, 1})), DataError);
}

TEST(Metrics, AucInvariantUnderMonotoneTransform) {
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    Eigen::VectorXd p(200), labels(200);
    for (int i = 0; i < 200; ++i) {
        p[i] = std::round(u(rng) * 50.0) / 50.0;  // coarse, so ties occur
        labels[i] = u(rng) < p[i] ? 1.0 : 0.0;
    }
    const Eigen::VectorXd logit = (p.array() / (1.0 - p.array())).log();
    EXPECT_EQ(metric_auc(p, labels), metric_auc(logit, labels));
}

TEST(Metrics, TprExamples) {
    EXPECT_EQ(metric_tpr({1, 2, 3}, {1, 2, 3}), 1.0);
    EXPECT_EQ(metric_tpr({4, 5}, {1, 2, 3}), 0.0);
    EXPECT_EQ(metric_tpr({1, 2, 3, 4}, {1, 2, 9}), 0.5);
    EXPECT_EQ(metric_tpr({}, {1, 2}), 0.0);
    EXPECT_DOUBLE_EQ(metric_recall({1, 2, 3, 4}, {1, 2, 9}), 2.0 / 3.0);
}

TEST(Metrics, RmseExamples) {
    EXPECT_EQ(metric_rmse(vec({1.5, -2.0}), vec({1.5, -2.0})), 0.0);
    EXPECT_EQ(metric_rmse(vec({1.0}), vec({3.0})), 2.0);
    EXPECT_EQ(metric_rmse(vec({1.0, -1.0, 1.0, -1.0}), vec({0.0, 0.0, 0.0, 0.0})), 1.0);
    EXPECT_THROW(metric_rmse(vec({1.0}), vec({1.0, 2.0})), ArgumentError);
}

// --- GLMM predictor ---------------------------------------------------------

TEST(PredictGlmm, UnrelatedTestSetUsesFixedEffectsOnly) {
    const FittedBinomial f = fitted_binomial(60, 6, 33);
    std::mt19937_64 rng(34);
    const Eigen::MatrixXd Xs = f.design.X.topRows(7) + 0.0 * oracle::random_normal(7, 7, rng);
    const std::size_t k = f.fit.size() - 1;
    const Prediction p = predict_glmm(f.fit, k, Xs, Eigen::MatrixXd::Zero(7, 60));
    const Eigen::VectorXd fixed = Xs * f.fit.beta_dense(k);
    EXPECT_EQ(p.eta, fixed);
    EXPECT_EQ(p.mu, inverse_link(FamilySpec::binomial(), fixed));
}

TEST(PredictGlmm, TestEqualsTrainReproducesFittedLinearPredictor) {
    const FittedBinomial f = fitted_binomial(60, 6, 35);
    ASSERT_GT(f.fit.theta.tau[0], 0.0);
    for (std::size_t k : {std::size_t{0}, f.fit.size() / 2, f.fit.size() - 1}) {
        ASSERT_TRUE(f.fit.points[k].converged);
        const Prediction eig = predict_glmm(f.fit, k, f.design.X, f.V, GlmmPredictorForm::Eigen);
        const Prediction dir = predict_glmm(f.fit, k, f.design.X, f.V, GlmmPredictorForm::Direct);
        EXPECT_LT((eig.eta - f.fit.points[k].eta).cwiseAbs().maxCoeff(), 1e-6) << k;
        EXPECT_LT((dir.eta - f.fit.points[k].eta).cwiseAbs().maxCoeff(), 1e-6) << k;
    }
}

TEST(PredictGlmm, AlgebraicFormsAgree) {
    std::mt19937_64 rng(36);
    for (int t = 0; t < 10; ++t) {
        // Train and test relatedness cut from one joint matrix, as a GRM would be.
        const Eigen::MatrixXd joint = oracle::random_psd(7, 2 + t % 6, rng);
        const Eigen::MatrixXd V = joint.topLeftCorner(5, 5);
        const Eigen::MatrixXd X = (Eigen::MatrixXd(5, 2) << Eigen::VectorXd::Ones(5), oracle::random_normal(5, 1, rng))
                                      .finished();
        const Eigen::VectorXd y = vec({1, 0, 0, 1, 1});
        const Eigen::VectorXd eta = oracle::random_normal(5, 1, rng).col(0);
        const Eigen::VectorXd b = oracle::random_normal(5, 1, rng).col(0);
        const PathFit fit = toy_path(V, 0.7, FamilySpec::binomial(), X, y, Eigen::Vector2d(0.2, -0.4), eta, b);
        const Eigen::MatrixXd Xs = oracle::random_normal(2, 2, rng);
        const Eigen::MatrixXd V12 = joint.bottomLeftCorner(2, 5);
        const Prediction a = predict_glmm(fit, 0, Xs, V12, GlmmPredictorForm::Eigen);
        const Prediction d = predict_glmm(fit, 0, Xs, V12, GlmmPredictorForm::Direct);
        EXPECT_LT((a.eta - d.eta).cwiseAbs().maxCoeff(), 1e-8) << t;
    }
}

TEST(PredictGlmm, ZeroVarianceComponentDropsTheRandomTerm) {
    std::mt19937_64 rng(37);
    const Eigen::MatrixXd V = oracle::random_psd(6, 6, rng);
    const Eigen::MatrixXd X = Eigen::MatrixXd::Ones(6, 1);
    const PathFit fit = toy_path(V, 0.0, FamilySpec::binomial(), X, vec({1, 0, 1, 0, 0, 1}), vec({0.3}),
                                 Eigen::VectorXd::Constant(6, 0.3), Eigen::VectorXd::Zero(6));
    const Prediction p = predict_glmm(fit, 0, Eigen::MatrixXd::Ones(3, 1), oracle::random_normal(3, 6, rng));
    EXPECT_TRUE((p.eta.array() == 0.3).all());
}

TEST(PredictGlmm, RefusesSeveralComponents) {
    PathFit fit = criterion_path(5, 2, {-1.0}, {0});
    fit.column_names = {"a"};
    EXPECT_THROW(predict_glmm(fit, 0, Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Zero(1, 5)), ArgumentError);
}

TEST(PredictGlmm, ShapeAndIndexChecks) {
    const FittedBinomial f = fitted_binomial(40, 3, 38);
    EXPECT_THROW(predict_glmm(f.fit, f.fit.size(), f.design.X, f.V), ArgumentError);
    EXPECT_THROW(predict_glmm(f.fit, 0, f.design.X.leftCols(2), f.V), DataError);
    EXPECT_THROW(predict_glmm(f.fit, 0, f.design.X, f.V.leftCols(10)), DataError);
}

TEST(PredictGlmm, ImpliedComponentCoefficientsShrinkWithTheEigenvalue) {
    // Gaussian, unit weights, the same rotated residual on every eigenvector:
    // the coefficient on component i is Lambda_i / (Lambda_i + phi).
    const int n = 6;
    std::mt19937_64 rng(39);
    const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(oracle::random_normal(n, n, rng)).householderQ();
    const Eigen::VectorXd spectrum = vec({3.0, 2.0, 1.0, 0.5, 0.2, 0.05});
    const Eigen::MatrixXd V = Q * spectrum.asDiagonal() * Q.transpose();
    const Eigen::VectorXd r = Q * Eigen::VectorXd::Ones(n);
    const Eigen::MatrixXd X = Eigen::MatrixXd::Ones(n, 1);
    const PathFit fit = toy_path(V, 1.0, FamilySpec::gaussian(1.0), X, r, vec({0.0}), Eigen::VectorXd::Zero(n),
                                 Eigen::VectorXd::Zero(n));
    const Eigen::VectorXd coef = Q.transpose() * predict_glmm(fit, 0, X, V).eta;
    for (int i = 0; i < n; ++i) {
        EXPECT_NEAR(coef[i], spectrum[i] / (spectrum[i] + 1.0), 1e-10);
        EXPECT_LT(coef[i], 1.0);
        if (i > 0) EXPECT_LE(std::abs(coef[i]), std::abs(coef[i - 1]));
    }
}

// --- PC-adjusted GLM ----------------------------------------------------------

TEST(PredictGlmPc, NoComponents) {
    const FittedBinomial f = fitted_binomial(40, 3, 40, false);
    const PcBasis none = top_pcs(f.V, 0);
    const std::size_t k = f.fit.size() - 1;
    const Prediction p = predict_glm_pc(f.fit, k, none, 1, f.design.X, f.V);
    EXPECT_EQ(p.eta, f.design.X * f.fit.beta_dense(k));
}

TEST(PredictGlmPc, InSampleReproduction) {
    const int n = 80;
    std::mt19937_64 rng(41);
    const Eigen::MatrixXd V = oracle::random_psd(n, n, rng) / n;
    const PcBasis pcs = top_pcs(V, 3);
    std::binomial_distribution<int> dose(2, 0.35);
    Eigen::MatrixXd G(n, 8);
    for (int j = 0; j < 8; ++j)
        for (int i = 0; i < n; ++i) G(i, j) = dose(rng);
    Eigen::VectorXd eta = 0.2 + 0.8 * G.col(0).array() + 2.0 * pcs.scores().col(0).array();
    std::uniform_real_distribution<double> u;
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = u(rng) < 1.0 / (1.0 + std::exp(-eta[i])) ? 1.0 : 0.0;
    Eigen::MatrixXd covariates(n, 4);
    covariates << Eigen::VectorXd::Ones(n), pcs.scores();
    const KinshipSet none = kinship_of({}, n);
    const NullModelFit null = fit_null(y, covariates, none, FamilySpec::binomial());
    PathOptions opts;
    opts.n_lambda = 10;
    opts.lambda_min_ratio = 0.05;
    opts.inner_tol = 1e-16 * n;
    opts.outer_tol = 1e-15;
    opts.max_outer = 5000;
    const Design design = make_design(covariates, G);
    const PathFit fit = fit_path(null, design, y, none, FamilySpec::binomial(), opts);
    Eigen::MatrixXd X_rest(n, 9);
    X_rest << Eigen::VectorXd::Ones(n), G;
    for (std::size_t k = 0; k < fit.size(); k += 3) {
        const Prediction p = predict_glm_pc(fit, k, pcs, 1, X_rest, V);
        EXPECT_LT((p.eta - fit.points[k].eta).cwiseAbs().maxCoeff(), 1e-6) << k;
    }
}

TEST(PredictGlmPc, CoefficientsMatchDenseWeightedLeastSquares) {
    std::mt19937_64 rng(42);
    const Eigen::MatrixXd S = oracle::random_normal(25, 4, rng);
    const Eigen::VectorXd w = (oracle::random_normal(25, 1, rng).col(0).array().abs() + 0.1).matrix();
    const Eigen::VectorXd r = oracle::random_normal(25, 1, rng).col(0);
    const Eigen::VectorXd sw = w.cwiseSqrt();
    const Eigen::VectorXd dense =
        (sw.asDiagonal() * S).colPivHouseholderQr().solve(Eigen::VectorXd(sw.cwiseProduct(r)));
    EXPECT_LT((pc_coefficients(S, w, r) - dense).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(PredictGlmPc, OversizedRequests) {
    std::mt19937_64 rng(43);
    const Eigen::MatrixXd V = oracle::random_psd(5, 5, rng);
    EXPECT_THROW(top_pcs(V, 6), ArgumentError);
    const PcBasis pcs = top_pcs(V, 5);
    EXPECT_EQ(pcs.r(), 5);
    for (Eigen::Index j = 1; j < 5; ++j) EXPECT_GE(pcs.D_r[j - 1], pcs.D_r[j]);
    const PathFit fit = toy_path(V, 0.0, FamilySpec::binomial(), Eigen::MatrixXd::Ones(5, 2), vec({1, 0, 1, 0, 1}),
                                 vec({0.1, 0.0}), Eigen::VectorXd::Zero(5), Eigen::VectorXd::Zero(5));
    EXPECT_THROW(predict_glm_pc(fit, 0, top_pcs(V, 2), 1, Eigen::MatrixXd::Ones(5, 0), V), ArgumentError);
}

// --- Validation selection -----------------------------------------------------

TEST(Validation, LeakageGuard) {
    const FittedBinomial f = fitted_binomial(40, 3, 44);
    ValidationData data;
    data.X = f.design.X.topRows(10);
    data.V12 = f.V.topRows(10);
    data.y = f.y.head(10);
    for (int i = 0; i < 10; ++i) data.sample_ids.push_back("v" + std::to_string(i));
    for (int i = 0; i < 40; ++i) data.training_ids.push_back("s" + std::to_string(i));
    if (data.y.minCoeff() == data.y.maxCoeff()) data.y[0] = 1.0 - data.y[0];
    const std::size_t k = select_by_validation(f.fit, data);
    EXPECT_EQ(k, argmax_first(validation_auc(f.fit, data)));
    data.sample_ids[4] = "s17";
    EXPECT_THROW(select_by_validation(f.fit, data), DataError);
}
