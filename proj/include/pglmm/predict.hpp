#pragma once

#include "pglmm/penalized_path.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace pglmm {

struct Prediction {
    Eigen::VectorXd eta;
    Eigen::VectorXd mu;
};

/// Which algebraic form of the conditional-mean predictor to evaluate.
enum class GlmmPredictorForm {
    /// V12 U (D/tau + U~' W U~)^-1 U~' W r over the positive eigenvalues of V1.
    Eigen,
    /// tau V12 (W^-1 + tau V1)^-1 r.
    Direct,
};

/// True working response and weights at the fitted linear predictor of path point k.
WorkingState fitted_working_state(const PathFit& path, std::size_t k);

/// GLMM prediction for new samples with design rows X_s (same columns as the
/// fit) and cross-relatedness V12 (n_s x n). Requires a single variance
/// component; tau = 0 gives the fixed-effect prediction.
Prediction predict_glmm(const PathFit& path, std::size_t k, const Eigen::MatrixXd& X_s,
                        const Eigen::MatrixXd& V12, GlmmPredictorForm form = GlmmPredictorForm::Eigen);

/// Leading eigenvectors of a training GRM: U_r and eigenvalues D_r.
struct PcBasis {
    Eigen::MatrixXd U_r;
    Eigen::VectorXd D_r;
    Eigen::Index r() const { return D_r.size(); }
    /// U_r diag(D_r), the training PC scores used as covariates.
    Eigen::MatrixXd scores() const { return U_r * D_r.asDiagonal(); }
};

PcBasis top_pcs(const Eigen::MatrixXd& V, Eigen::Index r);

/// (U~' W U~)^-1 U~' W partial_residual.
Eigen::VectorXd pc_coefficients(const Eigen::MatrixXd& scores, const Eigen::VectorXd& weights,
                                const Eigen::VectorXd& partial_residual);

/// GLM-with-PCs prediction. The fit's design holds the r PC scores as
/// unpenalized columns starting at `pc_first_column`; X_s has the fit's
/// columns with the PC block removed.
Prediction predict_glm_pc(const PathFit& path, std::size_t k, const PcBasis& pcs, Eigen::Index pc_first_column,
                          const Eigen::MatrixXd& X_s, const Eigen::MatrixXd& V12);

/// Samples used to tune lambda by held-out AUC.
struct ValidationData {
    Eigen::MatrixXd X;
    Eigen::MatrixXd V12;
    Eigen::VectorXd y;
    std::vector<std::string> sample_ids;
    std::vector<std::string> training_ids;
};

/// Validation AUC of every path point using predict_glmm.
std::vector<double> validation_auc(const PathFit& path, const ValidationData& data);

/// argmax of validation_auc, ties to the larger lambda. Throws DataError if a
/// validation ID also appears among the training IDs.
std::size_t select_by_validation(const PathFit& path, const ValidationData& data);

}  // namespace pglmm
