#include "pglmm/penalized_path.hpp"

#include "pglmm/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace pglmm {

Eigen::VectorXd Design::default_penalty_factors() const {
    Eigen::VectorXd v = Eigen::VectorXd::Ones(X.cols());
    v.head(n_covariates).setZero();
    return v;
}

Design make_design(const CovariateTable& covariates, const GenotypeMatrix& genotypes) {
    if (covariates.sample_ids != genotypes.sample_ids) {
        throw DataError("covariate and genotype sample orders differ");
    }
    if (genotypes.has_missing()) throw DataError("genotypes must be imputed before building a design");
    Design d = make_design(covariates.values, genotypes.dosages);
    d.column_names = covariates.column_names;
    d.column_names.insert(d.column_names.end(), genotypes.variant_ids.begin(), genotypes.variant_ids.end());
    return d;
}

Design make_design(const Eigen::MatrixXd& covariates, const Eigen::MatrixXd& variants) {
    if (covariates.rows() != variants.rows()) {
        throw DataError("covariates have " + std::to_string(covariates.rows()) + " rows but variants have " +
                        std::to_string(variants.rows()));
    }
    Design d;
    d.n_covariates = covariates.cols();
    d.X.resize(covariates.rows(), covariates.cols() + variants.cols());
    d.X << covariates, variants;
    for (Eigen::Index j = 0; j < d.X.cols(); ++j) {
        d.column_names.push_back(j < d.n_covariates ? "cov" + std::to_string(j)
                                                    : "var" + std::to_string(j - d.n_covariates));
    }
    return d;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd ColumnTransform::apply(const Eigen::MatrixXd& X) const {
    Eigen::MatrixXd out = X.rowwise() - center.transpose();
    return out.array().rowwise() / scale.transpose().array();
}

Eigen::VectorXd ColumnTransform::to_raw(const Eigen::VectorXd& internal_beta) const {
    Eigen::VectorXd raw = internal_beta.array() / scale.array();
    if (intercept) {
        const Eigen::Index k = *intercept;
        raw[k] = internal_beta[k];
        double shift = 0.0;
        for (Eigen::Index j = 0; j < raw.size(); ++j) {
            if (j != k) shift += raw[j] * center[j];
        }
        raw[k] -= shift / intercept_value;
    }
    return raw;
}

Eigen::VectorXd ColumnTransform::to_internal(const Eigen::VectorXd& raw_beta) const {
    Eigen::VectorXd internal = raw_beta.array() * scale.array();
    if (intercept) {
        const Eigen::Index k = *intercept;
        double shift = 0.0;
        for (Eigen::Index j = 0; j < raw_beta.size(); ++j) {
            if (j != k) shift += raw_beta[j] * center[j];
        }
        internal[k] = raw_beta[k] + shift / intercept_value;
    }
    return internal;
}

ColumnTransform make_column_transform(const Eigen::MatrixXd& X, const Eigen::VectorXd& penalty_factors,
                                      bool standardize) {
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    ColumnTransform t;
    t.center = Eigen::VectorXd::Zero(p);
    t.scale = Eigen::VectorXd::Ones(p);
    for (Eigen::Index j = 0; j < p && n > 0; ++j) {
        if (penalty_factors[j] == 0.0 && X(0, j) != 0.0 && (X.col(j).array() == X(0, j)).all()) {
            t.intercept = j;
            t.intercept_value = X(0, j);
            break;
        }
    }
    for (Eigen::Index j = 0; j < p; ++j) {
        if (t.intercept && *t.intercept == j) continue;
        const double mean = X.col(j).mean();
        if (t.intercept) t.center[j] = mean;
        if (standardize) {
            const double sd = std::sqrt((X.col(j).array() - mean).square().mean());
            if (sd > 1e-12 * std::max(1.0, std::abs(mean))) t.scale[j] = sd;
        }
    }
    return t;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd RotatedProblem::rotate(const Eigen::VectorXd& v) const {
    if (identity_basis) return v;
    return U.transpose() * v;
}

Eigen::VectorXd RotatedProblem::unrotate(const Eigen::VectorXd& v) const {
    if (identity_basis) return v;
    return U * v;
}

Eigen::MatrixXd RotatedProblem::basis() const {
    if (identity_basis) return Eigen::MatrixXd::Identity(n(), n());
    return U;
}

void RotatedProblem::set_working_response(const Eigen::VectorXd& working_response) {
    if (working_response.size() != n()) throw ArgumentError("working response length mismatch");
    Y_star = rotate(working_response);
}

RotatedProblem build_rotation(const KinshipSet& kinship, const ThetaVector& theta,
                              const FamilySpec& family, const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& working_response) {
    const Eigen::Index n = X.rows();
    if (working_response.size() != n) throw ArgumentError("working response length mismatch");
    RotatedProblem rot;
    rot.c = sigma_upper_bound_constant(family);

    const bool any_tau = !kinship.empty() && (theta.tau.array() > 0.0).any();
    if (!any_tau) {
        rot.identity_basis = true;
        rot.Lambda = Eigen::VectorXd::Zero(n);
        rot.X_star = X;
    } else {
        if (kinship.n() != n) throw DataError("kinship and design have different sample counts");
        const Eigen::MatrixXd K = random_effect_covariance(kinship, theta);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
        if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition of the random-effect covariance failed");
        rot.U = eig.eigenvectors();
        rot.Lambda = eig.eigenvalues().cwiseMax(0.0);
        const double cutoff = kEigenZeroTolerance * rot.Lambda.maxCoeff();
        for (Eigen::Index i = 0; i < n; ++i) {
            if (rot.Lambda[i] < cutoff) rot.Lambda[i] = 0.0;
        }
        rot.X_star = rot.U.transpose() * X;
    }
    rot.d = (rot.c + rot.Lambda.array()).inverse().matrix();
    rot.dX_star = rot.d.asDiagonal() * rot.X_star;
    rot.denom = (rot.X_star.array().square().colwise() * rot.d.array()).colwise().sum().transpose();
    rot.set_working_response(working_response);
    return rot;
}

double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

double coordinate_update(Eigen::Index j, const RotatedProblem& rotated, const Eigen::VectorXd& beta,
                         const Eigen::VectorXd& residual, double threshold) {
    const double denom = rotated.denom[j];
    if (denom <= 0.0) return 0.0;
    const double z = rotated.dX_star.col(j).dot(residual) + denom * beta[j];
    return soft_threshold(z, threshold) / denom;
}

RandomEffectUpdate update_b_eta(const RotatedProblem& rotated, const Eigen::VectorXd& beta,
                                const Eigen::VectorXd& working_response) {
    const Eigen::VectorXd r = rotated.rotate(working_response) - rotated.X_star * beta;
    RandomEffectUpdate out;
    const Eigen::VectorXd shrink = (rotated.Lambda.array() * rotated.d.array()).matrix();
    const Eigen::VectorXd keep = (rotated.c * rotated.d.array()).matrix();
    out.b = rotated.unrotate(shrink.cwiseProduct(r));
    out.eta = working_response - rotated.unrotate(keep.cwiseProduct(r));
    return out;
}

double surrogate_objective(const RotatedProblem& rotated, const Eigen::VectorXd& beta, double lambda,
                           const Eigen::VectorXd& penalty_factors) {
    const Eigen::VectorXd r = rotated.Y_star - rotated.X_star * beta;
    return 0.5 * (rotated.d.array() * r.array().square()).sum() +
           lambda * (penalty_factors.array() * beta.array().abs()).sum();
}

double lambda_max(const RotatedProblem& rotated, const Eigen::VectorXd& residual,
                  const Eigen::VectorXd& penalty_factors) {
    double best = 0.0;
    bool any = false;
    for (Eigen::Index j = 0; j < penalty_factors.size(); ++j) {
        if (penalty_factors[j] <= 0.0) continue;
        any = true;
        best = std::max(best, std::abs(rotated.dX_star.col(j).dot(residual)) / penalty_factors[j]);
    }
    if (!any) throw ArgumentError("every penalty factor is zero; there is nothing to penalize");
    return best;
}

std::vector<double> lambda_grid(double lambda_max, int n_lambda, double lambda_min_ratio) {
    if (n_lambda < 1) throw ArgumentError("n_lambda must be at least 1");
    if (!(lambda_min_ratio > 0.0) || lambda_min_ratio > 1.0) {
        throw ArgumentError("lambda_min_ratio must lie in (0, 1]");
    }
    std::vector<double> grid(static_cast<std::size_t>(n_lambda));
    grid[0] = lambda_max;
    const double step = n_lambda > 1 ? std::log(lambda_min_ratio) / (n_lambda - 1) : 0.0;
    for (int k = 1; k < n_lambda; ++k) grid[static_cast<std::size_t>(k)] = lambda_max * std::exp(step * k);
    return grid;
}

double negative_pql(const RotatedProblem& rotated, const FamilySpec& family, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& eta, const Eigen::VectorXd& b) {
    double value = 0.5 * quasi_deviance(family, y, inverse_link(family, eta));
    if (!rotated.identity_basis) {
        const Eigen::VectorXd delta = rotated.rotate(b);
        double quad = 0.0;
        for (Eigen::Index i = 0; i < delta.size(); ++i) {
            if (rotated.Lambda[i] > 0.0) quad += delta[i] * delta[i] / rotated.Lambda[i];
        }
        value += 0.5 * quad;
    }
    return value;
}

// ---------------------------------------------------------------------------

namespace {

// Working response whose surrogate fixed point is the exact minimiser of the
// penalized objective: eta + c W (Y~ - eta).
Eigen::VectorXd bound_working_response(const FamilySpec& family, const Eigen::VectorXd& y,
                                       const Eigen::VectorXd& eta, double c) {
    const WorkingState ws = evaluate_working_state(family, y, eta);
    return eta + c * ws.weight_diagonal.cwiseProduct(ws.working_response - eta);
}

class PathSolver {
public:
    PathSolver(RotatedProblem& rot, const FamilySpec& family, const Eigen::VectorXd& y,
               const Eigen::VectorXd& penalty, const PathOptions& options, double inner_tol)
        : rot_(rot), family_(family), y_(y), penalty_(penalty), options_(options), inner_tol_(inner_tol) {}

    Eigen::VectorXd beta;
    Eigen::VectorXd eta;
    Eigen::VectorXd b;
    Eigen::VectorXd working;
    int n_outer = 0;
    bool converged = false;
    bool inner_capped = false;

    /// Outer MM iterations at one lambda. With `unpenalized_only` the
    /// penalized coordinates are held at zero.
    void solve(double lambda, bool unpenalized_only) {
        solve(lambda, unpenalized_only, options_.outer_tol, options_.max_outer);
    }

    void solve(double lambda, bool unpenalized_only, double outer_tol, int max_outer) {
        converged = false;
        double previous = std::numeric_limits<double>::quiet_NaN();
        for (n_outer = 1; n_outer <= max_outer; ++n_outer) {
            working = bound_working_response(family_, y_, eta, rot_.c);
            rot_.set_working_response(working);
            residual_ = rot_.Y_star - rot_.X_star * beta;
            inner(lambda, unpenalized_only);
            const RandomEffectUpdate upd = update_b_eta(rot_, beta, working);
            eta = upd.eta;
            b = upd.b;
            const double objective = negative_pql(rot_, family_, y_, eta, b) +
                                     lambda * (penalty_.array() * beta.array().abs()).sum();
            if (!std::isfinite(objective)) throw NumericalError("objective is not finite");
            if (n_outer > 1 && std::abs(objective - previous) <= outer_tol * std::max(std::abs(objective), 1e-300)) {
                converged = true;
                break;
            }
            previous = objective;
        }
        n_outer = std::min(n_outer, max_outer);
    }

    /// Residual at the working response implied by the current eta.
    void refresh() {
        working = bound_working_response(family_, y_, eta, rot_.c);
        rot_.set_working_response(working);
        residual_ = rot_.Y_star - rot_.X_star * beta;
    }

    const Eigen::VectorXd& residual() const { return residual_; }

private:
    double threshold(Eigen::Index j, double lambda) const {
        return penalty_[j] == 0.0 ? 0.0 : lambda * penalty_[j];
    }

    double sweep(const std::vector<Eigen::Index>& columns, double lambda) {
        double worst = 0.0;
        for (Eigen::Index j : columns) {
            const double old = beta[j];
            const double next = coordinate_update(j, rot_, beta, residual_, threshold(j, lambda));
            if (next == old) continue;
            const double diff = next - old;
            residual_.noalias() -= diff * rot_.X_star.col(j);
            beta[j] = next;
            worst = std::max(worst, rot_.denom[j] * diff * diff);
        }
        return worst;
    }

    void inner(double lambda, bool unpenalized_only) {
        std::vector<Eigen::Index> all;
        for (Eigen::Index j = 0; j < beta.size(); ++j) {
            if (!unpenalized_only || penalty_[j] == 0.0) all.push_back(j);
        }
        int sweeps = 0;
        while (sweeps < options_.max_inner_sweeps) {
            ++sweeps;
            if (sweep(all, lambda) <= inner_tol_) return;
            std::vector<Eigen::Index> active;
            for (Eigen::Index j : all) {
                if (penalty_[j] == 0.0 || beta[j] != 0.0) active.push_back(j);
            }
            while (sweeps < options_.max_inner_sweeps) {
                ++sweeps;
                if (sweep(active, lambda) <= inner_tol_) break;
            }
        }
        inner_capped = true;
    }

    RotatedProblem& rot_;
    const FamilySpec& family_;
    const Eigen::VectorXd& y_;
    const Eigen::VectorXd& penalty_;
    const PathOptions& options_;
    double inner_tol_;
    Eigen::VectorXd residual_;
};

}  // namespace

PathFit fit_path(const NullModelFit& null_fit, const Design& design, const Eigen::VectorXd& y,
                 const KinshipSet& kinship, const FamilySpec& family, const PathOptions& options) {
    const Eigen::Index n = y.size();
    const Eigen::Index m = design.n_covariates;
    if (design.X.rows() != n) throw DataError("design and response have different sample counts");
    validate_response(family, y);
    if (!null_fit.converged && !options.allow_unconverged_null) {
        throw NumericalError("null model did not converge; refusing to fit the path");
    }
    if (null_fit.alpha.size() != m) {
        throw ArgumentError("null fit has " + std::to_string(null_fit.alpha.size()) +
                            " covariate coefficients but the design has " + std::to_string(m));
    }

    PathFit fit;
    fit.theta = null_fit.theta;
    fit.family = family_at(family, null_fit.theta);
    fit.family.validate(n);
    fit.options = options;
    fit.y = y;
    fit.n_covariates = m;
    fit.column_names = design.column_names;

    Eigen::VectorXd v = options.penalty_factors.size() == 0 ? design.default_penalty_factors()
                                                            : options.penalty_factors;
    if (v.size() != design.n_columns()) {
        throw ArgumentError("expected " + std::to_string(design.n_columns()) + " penalty factors, got " +
                            std::to_string(v.size()));
    }
    if ((v.array() < 0.0).any() || !v.allFinite()) throw ArgumentError("penalty factors must be nonnegative");
    if (!(v.array() == 0.0).any()) throw ArgumentError("at least one column (the intercept) must be unpenalized");
    fit.penalty_factors = v;

    fit.transform = make_column_transform(design.X, v, options.standardize_design);
    const Eigen::MatrixXd X_internal = fit.transform.apply(design.X);

    Eigen::VectorXd beta_raw = Eigen::VectorXd::Zero(design.n_columns());
    beta_raw.head(m) = null_fit.alpha;
    Eigen::VectorXd eta = design.X * beta_raw;
    if (null_fit.b.size() == n) eta += null_fit.b;

    const double c = sigma_upper_bound_constant(fit.family);
    auto rot = std::make_shared<RotatedProblem>(
        build_rotation(kinship, fit.theta, fit.family, X_internal, bound_working_response(fit.family, y, eta, c)));
    for (Eigen::Index j = 0; j < rot->denom.size(); ++j) {
        if (rot->denom[j] <= 0.0) {
            fit.warnings.push_back("column " + std::to_string(j) + " is constant after centring; coefficient fixed at 0");
        }
    }

    const Eigen::Index p_pen = (v.array() > 0.0).count();
    const double inner_tol = options.inner_tol.value_or(1e-7 * static_cast<double>(n));
    PathSolver solver(*rot, fit.family, y, v, options, inner_tol);
    solver.beta = fit.transform.to_internal(beta_raw);
    solver.eta = eta;

    // The unpenalized fit is solved tightly so that no penalized column
    // clears the threshold at the top of the grid.
    {
        PathOptions tight = options;
        tight.max_outer = std::max(options.max_outer, 1000);
        PathSolver pre(*rot, fit.family, y, v, tight, std::min(inner_tol, 1e-14 * static_cast<double>(n)));
        pre.beta = solver.beta;
        pre.eta = solver.eta;
        pre.solve(0.0, true, 1e-14, tight.max_outer);
        pre.refresh();
        solver.beta = pre.beta;
        solver.eta = pre.eta;
        // Relative slack so rounding in the first sweep cannot admit a
        // coefficient of order 1e-16 at the top of the grid.
        fit.lambda_max = lambda_max(*rot, pre.residual(), v) * (1.0 + 1e-10);
    }

    std::vector<double> grid = options.lambdas;
    if (grid.empty()) {
        const double ratio = options.lambda_min_ratio.value_or(n > p_pen ? 1e-4 : 0.01);
        grid = lambda_grid(fit.lambda_max, options.n_lambda, ratio);
    }

    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double lambda = grid[k];
        try {
            solver.solve(lambda, false);
        } catch (const NumericalError& e) {
            fit.diagnostic = "path stopped at lambda index " + std::to_string(k) + ": " + e.what();
            break;
        }
        PathPoint point;
        point.lambda = lambda;
        const Eigen::VectorXd raw = fit.transform.to_raw(solver.beta);
        point.beta.resize(raw.size());
        for (Eigen::Index j = 0; j < raw.size(); ++j) {
            if (raw[j] != 0.0) point.beta.insert(j) = raw[j];
        }
        point.b = solver.b;
        point.eta = solver.eta;
        point.working_response = solver.working;
        point.pql_loglik = -negative_pql(*rot, fit.family, y, solver.eta, solver.b);
        for (Eigen::Index j = 0; j < raw.size(); ++j) {
            if (v[j] > 0.0 && solver.beta[j] != 0.0) point.active_set.push_back(j);
        }
        point.df = static_cast<int>(point.active_set.size());
        point.n_outer = solver.n_outer;
        point.converged = solver.converged;
        if (!point.converged) {
            fit.warnings.push_back("lambda index " + std::to_string(k) + " reached max_outer without converging");
        }
        fit.points.push_back(std::move(point));
    }
    if (solver.inner_capped) fit.warnings.push_back("inner coordinate descent hit max_inner_sweeps");
    if (fit.points.empty()) throw NumericalError(fit.diagnostic.empty() ? "empty path" : fit.diagnostic);
    fit.rotation = rot;
    return fit;
}

}  // namespace pglmm
