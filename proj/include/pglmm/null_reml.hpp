#pragma once

#include "pglmm/family.hpp"
#include "pglmm/kinship.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace pglmm {

/// Variance-component parameters: the dispersion (gaussian only) followed by
/// one tau per relatedness matrix. Pinned components are held at zero and
/// excluded from score and information calculations.
struct ThetaVector {
    bool has_phi = false;
    double phi = 1.0;
    Eigen::VectorXd tau;
    std::vector<bool> tau_pinned;

    static ThetaVector for_family(const FamilySpec& family, std::size_t n_components);

    /// Number of entries in the full parameter vector (phi first when present).
    Eigen::Index dim() const { return tau.size() + (has_phi ? 1 : 0); }
    Eigen::VectorXd as_vector() const;
    void assign(const Eigen::VectorXd& values);
    /// Indices (into as_vector()) that are currently estimated.
    std::vector<Eigen::Index> free_indices() const;
    bool pinned(Eigen::Index k) const;
};

/// Family with the dispersion taken from theta when it is estimated.
FamilySpec family_at(const FamilySpec& family, const ThetaVector& theta);

/// Sum_s tau_s V_s.
Eigen::MatrixXd random_effect_covariance(const KinshipSet& kinship, const ThetaVector& theta);

struct GlsSolution {
    Eigen::VectorXd alpha;
    Eigen::VectorXd b;
};

/// Cached pieces of Sigma = W^{-1} + sum_s tau_s V_s and the REML projection P.
class RemlSystem {
public:
    RemlSystem(const WorkingState& working, const Eigen::MatrixXd& X, const KinshipSet& kinship,
               const ThetaVector& theta);

    const Eigen::MatrixXd& projection() const { return P_; }
    const Eigen::MatrixXd& sigma() const { return sigma_; }
    const Eigen::VectorXd& p_y() const { return p_y_; }
    GlsSolution gls() const;
    /// Score for each free component, in free_indices() order.
    Eigen::VectorXd score() const;
    Eigen::MatrixXd average_information() const;
    /// Restricted log quasi-likelihood up to a constant.
    double reml_loglik() const;

private:
    const Eigen::MatrixXd& component(Eigen::Index k) const;

    const Eigen::MatrixXd& X_;
    const KinshipSet& kinship_;
    ThetaVector theta_;
    Eigen::VectorXd y_;
    Eigen::VectorXd v0_;        // diagonal of phi^{-1} W^{-1}, gaussian only
    Eigen::MatrixXd sigma_;
    Eigen::MatrixXd kin_cov_;   // sum_s tau_s V_s
    Eigen::MatrixXd sigma_inv_;
    Eigen::MatrixXd P_;
    Eigen::VectorXd p_y_;
    Eigen::MatrixXd xt_sinv_x_;
    double log_det_sigma_ = 0.0;
    double log_det_xsx_ = 0.0;
};

/// alpha = (X' Sigma^-1 X)^-1 X' Sigma^-1 Y~, b = (sum tau V) Sigma^-1 (Y~ - X alpha).
GlsSolution gls_update(const WorkingState& working, const Eigen::MatrixXd& X,
                       const KinshipSet& kinship, const ThetaVector& theta);

Eigen::VectorXd reml_score(const WorkingState& working, const Eigen::MatrixXd& X,
                           const KinshipSet& kinship, const ThetaVector& theta);

Eigen::MatrixXd average_information(const WorkingState& working, const Eigen::MatrixXd& X,
                                    const KinshipSet& kinship, const ThetaVector& theta);

struct NullFitOptions {
    double tol = 1e-6;
    int max_iter = 100;
    int glm_max_iter = 25;
    double glm_tol = 1e-8;
};

struct NullModelFit {
    Eigen::VectorXd alpha;
    Eigen::VectorXd b;
    ThetaVector theta;
    Eigen::VectorXd working_response;
    Eigen::VectorXd weight_diagonal;
    Eigen::VectorXd eta;
    bool converged = false;
    int n_iterations = 0;
    /// Score of the free components at the final state.
    Eigen::VectorXd score_at_convergence;
    /// Sample variance of the initial GLM working response.
    double initial_working_variance = 0.0;
    std::vector<std::string> warnings;
};

/// Plain GLM fit by iteratively reweighted least squares.
struct GlmFit {
    Eigen::VectorXd alpha;
    WorkingState working;
    int iterations = 0;
    bool converged = false;
};
GlmFit fit_glm(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const FamilySpec& family,
               int max_iter = 25, double tol = 1e-8);

/// AI-REML fit of the model without genetic fixed effects. An empty kinship
/// set reduces to a GLM (with the dispersion estimated for gaussian data).
NullModelFit fit_null(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const KinshipSet& kinship,
                      const FamilySpec& family, const NullFitOptions& options = {});

/// JSON summary plus a binary sidecar ("PGLMMNUL", u64 n, b, weights).
void write_null_fit(const std::filesystem::path& json_path, const std::filesystem::path& bin_path,
                    const NullModelFit& fit, const FamilySpec& family);
NullModelFit read_null_fit(const std::filesystem::path& json_path,
                           const std::filesystem::path& bin_path);

}  // namespace pglmm
