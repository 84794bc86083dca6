#pragma once

#include <Eigen/Dense>

#include <vector>

namespace pglmm {

/// |selected ∩ truth| / |selected|, defined as 0 for an empty selection.
/// This is what is usually called precision.
double metric_tpr(const std::vector<Eigen::Index>& selected, const std::vector<Eigen::Index>& truth);

/// |selected ∩ truth| / |truth|, 0 when truth is empty.
double metric_recall(const std::vector<Eigen::Index>& selected, const std::vector<Eigen::Index>& truth);

double metric_rmse(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_true);

/// Mann-Whitney AUC: P(case > control) + P(tie)/2 over all case/control pairs.
/// Throws DataError when only one class is present.
double metric_auc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels);

}  // namespace pglmm
