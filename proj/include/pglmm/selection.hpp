#pragma once

#include "pglmm/penalized_path.hpp"

#include <string_view>
#include <vector>

namespace pglmm {

struct SelectionCriterion {
    enum class Kind { AIC, BIC, GIC, ValidationAuc };
    Kind kind = Kind::BIC;
    /// Penalty weight for Kind::GIC.
    double a_n = 2.0;

    static SelectionCriterion aic() { return {Kind::AIC, 2.0}; }
    static SelectionCriterion bic() { return {Kind::BIC, 0.0}; }
    static SelectionCriterion gic(double a_n);
    static SelectionCriterion validation_auc() { return {Kind::ValidationAuc, 0.0}; }

    /// "aic", "bic", "gic:<a_n>" or "val-auc".
    static SelectionCriterion parse(std::string_view text);
    /// a_n for a training sample of size n (AIC 2, BIC log n).
    double weight(Eigen::Index n) const;
};

/// -2 l_PQL + a_n (df + dim(tau)) per lambda.
std::vector<double> gic(const PathFit& path, double a_n);

/// Index of the smallest value; ties go to the earlier (larger lambda) index.
std::size_t argmin_first(const std::vector<double>& values);
/// Index of the largest value; ties go to the earlier index.
std::size_t argmax_first(const std::vector<double>& values);

/// Information-criterion selection. Validation selection goes through
/// select_by_validation in predict.hpp.
std::size_t select(const PathFit& path, const SelectionCriterion& criterion);

/// Index whose active-set size is closest to `size`; ties go to the larger lambda.
std::size_t index_for_model_size(const PathFit& path, int size);

}  // namespace pglmm
