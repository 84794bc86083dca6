#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>

namespace pglmm {

enum class FamilyKind { BinomialLogit, GaussianIdentity };

/// Fitted probabilities are kept inside [kMuClamp, 1 - kMuClamp].
inline constexpr double kMuClamp = 1e-5;

/// Exponential family with its canonical link, dispersion and prior weights.
struct FamilySpec {
    FamilyKind kind = FamilyKind::BinomialLogit;
    double dispersion_phi = 1.0;
    /// Empty means all prior weights equal one.
    Eigen::VectorXd prior_weights;

    static FamilySpec binomial();
    static FamilySpec gaussian(double phi = 1.0);

    bool is_binomial() const { return kind == FamilyKind::BinomialLogit; }
    double prior_weight(Eigen::Index i) const {
        return prior_weights.size() == 0 ? 1.0 : prior_weights[i];
    }

    /// Throws ArgumentError when an invariant is violated.
    void validate(Eigen::Index n) const;
};

FamilyKind parse_family(std::string_view name);
std::string family_name(FamilyKind kind);

/// Linearised state of an iteratively reweighted fit at a given linear predictor.
struct WorkingState {
    Eigen::VectorXd mu;
    Eigen::VectorXd eta;
    Eigen::VectorXd working_response;
    Eigen::VectorXd weight_diagonal;
};

/// Inverse link, clamped for the binomial family.
Eigen::VectorXd inverse_link(const FamilySpec& family, const Eigen::VectorXd& eta);

WorkingState evaluate_working_state(const FamilySpec& family, const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& eta);

/// Minus twice the summed quasi-likelihood.
double quasi_deviance(const FamilySpec& family, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& mu);

/// Constant c with W^{-1} >= c I for every admissible mean: 4 for the logistic
/// model, the dispersion for the gaussian model (valid while prior weights are
/// at most one).
double sigma_upper_bound_constant(const FamilySpec& family);

/// Checks that y is admissible for the family (0/1 for binomial, finite otherwise).
void validate_response(const FamilySpec& family, const Eigen::VectorXd& y);

}  // namespace pglmm
