#include "pglmm/family.hpp"

#include "pglmm/error.hpp"

#include <algorithm>
#include <cmath>

namespace pglmm {

FamilySpec FamilySpec::binomial() { return FamilySpec{FamilyKind::BinomialLogit, 1.0, {}}; }

FamilySpec FamilySpec::gaussian(double phi) {
    return FamilySpec{FamilyKind::GaussianIdentity, phi, {}};
}

void FamilySpec::validate(Eigen::Index n) const {
    if (!(dispersion_phi > 0.0) || !std::isfinite(dispersion_phi)) {
        throw ArgumentError("dispersion must be positive and finite");
    }
    if (is_binomial() && dispersion_phi != 1.0) {
        throw ArgumentError("binomial dispersion is fixed at 1");
    }
    if (prior_weights.size() != 0) {
        if (prior_weights.size() != n) {
            throw ArgumentError("prior weight count " + std::to_string(prior_weights.size()) +
                                " does not match n=" + std::to_string(n));
        }
        if ((prior_weights.array() <= 0.0).any()) {
            throw ArgumentError("prior weights must be strictly positive");
        }
    }
}

FamilyKind parse_family(std::string_view name) {
    if (name == "binomial" || name == "binomial-logit") return FamilyKind::BinomialLogit;
    if (name == "gaussian" || name == "gaussian-identity") return FamilyKind::GaussianIdentity;
    throw ArgumentError("unknown family '" + std::string(name) + "'");
}

std::string family_name(FamilyKind kind) {
    return kind == FamilyKind::BinomialLogit ? "binomial" : "gaussian";
}

namespace {

double clamp_mu(double mu) { return std::clamp(mu, kMuClamp, 1.0 - kMuClamp); }

double logistic(double eta) {
    // Split on sign so exp never overflows.
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

}  // namespace

Eigen::VectorXd inverse_link(const FamilySpec& family, const Eigen::VectorXd& eta) {
    Eigen::VectorXd mu(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        if (!std::isfinite(eta[i])) {
            throw NumericalError("non-finite linear predictor at index " + std::to_string(i));
        }
        mu[i] = family.is_binomial() ? clamp_mu(logistic(eta[i])) : eta[i];
    }
    return mu;
}

WorkingState evaluate_working_state(const FamilySpec& family, const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& eta) {
    if (y.size() != eta.size()) {
        throw ArgumentError("response and linear predictor lengths differ");
    }
    WorkingState state;
    state.eta = eta;
    state.mu = inverse_link(family, eta);
    const Eigen::Index n = eta.size();
    state.working_response.resize(n);
    state.weight_diagonal.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mu = state.mu[i];
        const double a = family.prior_weight(i);
        if (family.is_binomial()) {
            const double variance = mu * (1.0 - mu);
            // g'(mu) = 1 / variance for the logit link.
            state.working_response[i] = eta[i] + (y[i] - mu) / variance;
            state.weight_diagonal[i] = a * variance / family.dispersion_phi;
        } else {
            state.working_response[i] = eta[i] + (y[i] - mu);
            state.weight_diagonal[i] = a / family.dispersion_phi;
        }
    }
    return state;
}

double quasi_deviance(const FamilySpec& family, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& mu) {
    if (y.size() != mu.size()) {
        throw ArgumentError("response and mean lengths differ");
    }
    double total = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double a = family.prior_weight(i);
        if (family.is_binomial()) {
            const double m = mu[i];
            double ll = 0.0;
            if (y[i] > 0.0) ll += y[i] * std::log(m);
            if (y[i] < 1.0) ll += (1.0 - y[i]) * std::log1p(-m);
            total += -2.0 * a * ll;
        } else {
            const double r = y[i] - mu[i];
            total += a * r * r / family.dispersion_phi;
        }
    }
    return total;
}

double sigma_upper_bound_constant(const FamilySpec& family) {
    return family.is_binomial() ? 4.0 : family.dispersion_phi;
}

void validate_response(const FamilySpec& family, const Eigen::VectorXd& y) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (!std::isfinite(y[i])) {
            throw DataError("non-finite response at index " + std::to_string(i));
        }
        if (family.is_binomial() && y[i] != 0.0 && y[i] != 1.0) {
            throw DataError("binomial response must be 0/1; found " + std::to_string(y[i]) +
                            " at index " + std::to_string(i));
        }
    }
}

}  // namespace pglmm
