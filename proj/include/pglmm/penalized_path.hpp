#pragma once

#include "pglmm/delimited.hpp"
#include "pglmm/family.hpp"
#include "pglmm/genotype.hpp"
#include "pglmm/kinship.hpp"
#include "pglmm/null_reml.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pglmm {

/// Fixed-effect design: m covariate columns (intercept first) then p variants.
struct Design {
    Eigen::MatrixXd X;
    Eigen::Index n_covariates = 0;
    std::vector<std::string> column_names;

    Eigen::Index n_columns() const { return X.cols(); }
    Eigen::Index n_variants() const { return X.cols() - n_covariates; }
    /// 0 for covariates, 1 for variants.
    Eigen::VectorXd default_penalty_factors() const;
};

Design make_design(const CovariateTable& covariates, const GenotypeMatrix& genotypes);
Design make_design(const Eigen::MatrixXd& covariates, const Eigen::MatrixXd& variants);

/// Affine map between the caller's columns and the centred (and optionally
/// scaled) columns the solver works with. Centring is only applied when an
/// unpenalized constant column is present to absorb it.
struct ColumnTransform {
    Eigen::VectorXd center;
    Eigen::VectorXd scale;
    std::optional<Eigen::Index> intercept;
    double intercept_value = 1.0;

    Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
    Eigen::VectorXd to_raw(const Eigen::VectorXd& internal_beta) const;
    Eigen::VectorXd to_internal(const Eigen::VectorXd& raw_beta) const;
};

ColumnTransform make_column_transform(const Eigen::MatrixXd& X, const Eigen::VectorXd& penalty_factors,
                                      bool standardize);

/// Working problem after rotating by the eigenvectors of K = sum_s tau_s V_s.
/// When K is zero no eigendecomposition is done and the basis is the identity.
struct RotatedProblem {
    bool identity_basis = false;
    Eigen::MatrixXd U;
    Eigen::VectorXd Lambda;
    Eigen::MatrixXd X_star;
    Eigen::VectorXd Y_star;
    double c = 4.0;
    /// 1 / (c + Lambda_i).
    Eigen::VectorXd d;
    /// d-weighted columns of X_star.
    Eigen::MatrixXd dX_star;
    /// sum_i d_i X*_ij^2.
    Eigen::VectorXd denom;

    Eigen::Index n() const { return d.size(); }
    Eigen::VectorXd rotate(const Eigen::VectorXd& v) const;
    Eigen::VectorXd unrotate(const Eigen::VectorXd& v) const;
    /// U, materialised as the identity when identity_basis is set.
    Eigen::MatrixXd basis() const;
    void set_working_response(const Eigen::VectorXd& working_response);
};

/// Eigenvalues below this fraction of the largest are treated as exact zeros.
inline constexpr double kEigenZeroTolerance = 1e-10;

RotatedProblem build_rotation(const KinshipSet& kinship, const ThetaVector& theta,
                              const FamilySpec& family, const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& working_response);

double soft_threshold(double z, double gamma);

/// Exact minimiser over beta_j of the surrogate criterion, holding the other
/// coordinates fixed. `residual` is Y* - X* beta (including beta_j).
double coordinate_update(Eigen::Index j, const RotatedProblem& rotated, const Eigen::VectorXd& beta,
                         const Eigen::VectorXd& residual, double threshold);

struct RandomEffectUpdate {
    Eigen::VectorXd b;
    Eigen::VectorXd eta;
};

/// b = U diag(Lambda/(c+Lambda)) r*, eta = Y~ - U diag(c/(c+Lambda)) r*
/// with r* = Y* - X* beta.
RandomEffectUpdate update_b_eta(const RotatedProblem& rotated, const Eigen::VectorXd& beta,
                                const Eigen::VectorXd& working_response);

/// 0.5 * sum_i d_i (Y*_i - X*_i beta)^2 + lambda * sum_j v_j |beta_j|.
double surrogate_objective(const RotatedProblem& rotated, const Eigen::VectorXd& beta, double lambda,
                           const Eigen::VectorXd& penalty_factors);

/// Largest |sum_i d_i X*_ij r_i| / v_j over penalized columns.
double lambda_max(const RotatedProblem& rotated, const Eigen::VectorXd& residual,
                  const Eigen::VectorXd& penalty_factors);

/// n_lambda log-spaced values from lambda_max down to lambda_max * ratio.
std::vector<double> lambda_grid(double lambda_max, int n_lambda, double lambda_min_ratio);

/// Minus the penalized quasi-likelihood: half the deviance plus b' K^- b / 2.
double negative_pql(const RotatedProblem& rotated, const FamilySpec& family, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& eta, const Eigen::VectorXd& b);

struct PathOptions {
    int n_lambda = 100;
    /// Defaults to 0.01 when n < p and 1e-4 otherwise.
    std::optional<double> lambda_min_ratio;
    /// Empty means default_penalty_factors().
    Eigen::VectorXd penalty_factors;
    /// Defaults to 1e-7 * n.
    std::optional<double> inner_tol;
    double outer_tol = 1e-6;
    int max_outer = 50;
    int max_inner_sweeps = 100000;
    bool standardize_design = true;
    /// Explicit grid; overrides n_lambda and lambda_min_ratio.
    std::vector<double> lambdas;
    /// Proceed when the null fit did not converge.
    bool allow_unconverged_null = false;
};

struct PathPoint {
    double lambda = 0.0;
    /// Raw-scale coefficients for all design columns.
    Eigen::SparseVector<double> beta;
    Eigen::VectorXd b;
    Eigen::VectorXd eta;
    /// Bound-consistent working response used in the last inner solve.
    Eigen::VectorXd working_response;
    double pql_loglik = 0.0;
    /// Nonzero penalized coefficients.
    int df = 0;
    std::vector<Eigen::Index> active_set;
    int n_outer = 0;
    bool converged = false;
};

struct PathFit {
    std::vector<PathPoint> points;
    std::shared_ptr<const RotatedProblem> rotation;
    ColumnTransform transform;
    Eigen::VectorXd penalty_factors;
    double lambda_max = 0.0;
    ThetaVector theta;
    FamilySpec family;
    PathOptions options;
    Eigen::VectorXd y;
    Eigen::Index n_covariates = 0;
    std::vector<std::string> column_names;
    std::vector<std::string> warnings;
    /// Set when the path stopped early.
    std::string diagnostic;

    std::size_t size() const { return points.size(); }
    /// Number of estimated variance components (dispersion excluded).
    Eigen::Index n_variance_components() const { return theta.tau.size(); }
    Eigen::VectorXd beta_dense(std::size_t k) const { return Eigen::VectorXd(points[k].beta); }
};

PathFit fit_path(const NullModelFit& null_fit, const Design& design, const Eigen::VectorXd& y,
                 const KinshipSet& kinship, const FamilySpec& family, const PathOptions& options = {});

}  // namespace pglmm
