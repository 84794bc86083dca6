#include "pglmm/null_reml.hpp"

#include "pglmm/binary_io.hpp"
#include "pglmm/error.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace pglmm {

ThetaVector ThetaVector::for_family(const FamilySpec& family, std::size_t n_components) {
    ThetaVector theta;
    theta.has_phi = !family.is_binomial();
    theta.phi = family.dispersion_phi;
    theta.tau = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_components));
    theta.tau_pinned.assign(n_components, false);
    return theta;
}

Eigen::VectorXd ThetaVector::as_vector() const {
    Eigen::VectorXd v(dim());
    Eigen::Index k = 0;
    if (has_phi) v[k++] = phi;
    for (Eigen::Index s = 0; s < tau.size(); ++s) v[k++] = tau[s];
    return v;
}

void ThetaVector::assign(const Eigen::VectorXd& values) {
    if (values.size() != dim()) throw ArgumentError("theta dimension mismatch");
    Eigen::Index k = 0;
    if (has_phi) phi = values[k++];
    for (Eigen::Index s = 0; s < tau.size(); ++s) tau[s] = values[k++];
}

bool ThetaVector::pinned(Eigen::Index k) const {
    if (has_phi) {
        if (k == 0) return false;
        --k;
    }
    return tau_pinned[static_cast<std::size_t>(k)];
}

std::vector<Eigen::Index> ThetaVector::free_indices() const {
    std::vector<Eigen::Index> out;
    for (Eigen::Index k = 0; k < dim(); ++k) {
        if (!pinned(k)) out.push_back(k);
    }
    return out;
}

FamilySpec family_at(const FamilySpec& family, const ThetaVector& theta) {
    FamilySpec out = family;
    if (theta.has_phi) out.dispersion_phi = theta.phi;
    return out;
}

Eigen::MatrixXd random_effect_covariance(const KinshipSet& kinship, const ThetaVector& theta) {
    const Eigen::Index n = kinship.n();
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t s = 0; s < kinship.size(); ++s) {
        const double tau = theta.tau[static_cast<Eigen::Index>(s)];
        if (tau != 0.0) k.noalias() += tau * kinship.matrices[s];
    }
    return k;
}

// ---------------------------------------------------------------------------

RemlSystem::RemlSystem(const WorkingState& working, const Eigen::MatrixXd& X,
                       const KinshipSet& kinship, const ThetaVector& theta)
    : X_(X), kinship_(kinship), theta_(theta), y_(working.working_response) {
    const Eigen::Index n = y_.size();
    if (X.rows() != n || kinship.n() != n) throw ArgumentError("REML inputs have inconsistent sizes");
    if (static_cast<Eigen::Index>(kinship.size()) != theta.tau.size()) {
        throw ArgumentError("theta has " + std::to_string(theta.tau.size()) +
                            " variance components but there are " + std::to_string(kinship.size()) +
                            " kinship matrices");
    }

    kin_cov_ = random_effect_covariance(kinship, theta);
    sigma_ = kin_cov_;
    for (Eigen::Index i = 0; i < n; ++i) sigma_(i, i) += 1.0 / working.weight_diagonal[i];
    if (theta.has_phi) {
        // V0 = phi^{-1} W^{-1}
        v0_ = ((1.0 / working.weight_diagonal.array()) / theta.phi).matrix();
    }

    Eigen::LLT<Eigen::MatrixXd> llt(sigma_);
    if (llt.info() != Eigen::Success) throw NumericalError("Sigma is not positive definite");
    log_det_sigma_ = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    sigma_inv_ = llt.solve(Eigen::MatrixXd::Identity(n, n));

    const Eigen::MatrixXd sinv_x = sigma_inv_ * X;
    xt_sinv_x_ = X.transpose() * sinv_x;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xt_sinv_x_);
    if (qr.rank() < X.cols()) {
        std::ostringstream msg;
        msg << "X' Sigma^-1 X is singular (rank " << qr.rank() << " of " << X.cols()
            << "); collinear covariate columns:";
        for (Eigen::Index k = qr.rank(); k < X.cols(); ++k) msg << ' ' << qr.colsPermutation().indices()[k];
        throw NumericalError(msg.str());
    }
    Eigen::LLT<Eigen::MatrixXd> xllt(xt_sinv_x_);
    if (xllt.info() != Eigen::Success) throw NumericalError("X' Sigma^-1 X is not positive definite");
    log_det_xsx_ = 2.0 * xllt.matrixLLT().diagonal().array().log().sum();
    P_ = sigma_inv_ - sinv_x * xllt.solve(sinv_x.transpose());
    P_ = 0.5 * (P_ + P_.transpose()).eval();
    p_y_ = P_ * y_;
}

const Eigen::MatrixXd& RemlSystem::component(Eigen::Index k) const {
    if (theta_.has_phi) --k;
    return kinship_.matrices[static_cast<std::size_t>(k)];
}

GlsSolution RemlSystem::gls() const {
    GlsSolution out;
    out.alpha = xt_sinv_x_.llt().solve(X_.transpose() * (sigma_inv_ * y_));
    out.b = kin_cov_ * (sigma_inv_ * (y_ - X_ * out.alpha));
    return out;
}

Eigen::VectorXd RemlSystem::score() const {
    const auto free = theta_.free_indices();
    Eigen::VectorXd s(static_cast<Eigen::Index>(free.size()));
    for (std::size_t f = 0; f < free.size(); ++f) {
        const Eigen::Index k = free[f];
        double quad = 0.0;
        double trace = 0.0;
        if (theta_.has_phi && k == 0) {
            quad = (p_y_.array().square() * v0_.array()).sum();
            trace = (P_.diagonal().array() * v0_.array()).sum();
        } else {
            const Eigen::MatrixXd& v = component(k);
            quad = p_y_.dot(v * p_y_);
            trace = P_.cwiseProduct(v).sum();
        }
        s[static_cast<Eigen::Index>(f)] = 0.5 * (quad - trace);
    }
    return s;
}

Eigen::MatrixXd RemlSystem::average_information() const {
    const auto free = theta_.free_indices();
    const auto d = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd m(y_.size(), d);
    for (Eigen::Index f = 0; f < d; ++f) {
        const Eigen::Index k = free[static_cast<std::size_t>(f)];
        if (theta_.has_phi && k == 0) {
            m.col(f) = (v0_.array() * p_y_.array()).matrix();
        } else {
            m.col(f) = component(k) * p_y_;
        }
    }
    Eigen::MatrixXd ai = 0.5 * (m.transpose() * (P_ * m));
    return 0.5 * (ai + ai.transpose());
}

double RemlSystem::reml_loglik() const {
    return -0.5 * log_det_sigma_ - 0.5 * log_det_xsx_ - 0.5 * y_.dot(p_y_);
}

GlsSolution gls_update(const WorkingState& working, const Eigen::MatrixXd& X,
                       const KinshipSet& kinship, const ThetaVector& theta) {
    return RemlSystem(working, X, kinship, theta).gls();
}

Eigen::VectorXd reml_score(const WorkingState& working, const Eigen::MatrixXd& X,
                           const KinshipSet& kinship, const ThetaVector& theta) {
    return RemlSystem(working, X, kinship, theta).score();
}

Eigen::MatrixXd average_information(const WorkingState& working, const Eigen::MatrixXd& X,
                                    const KinshipSet& kinship, const ThetaVector& theta) {
    return RemlSystem(working, X, kinship, theta).average_information();
}

// ---------------------------------------------------------------------------

GlmFit fit_glm(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const FamilySpec& family,
               int max_iter, double tol) {
    const Eigen::Index n = y.size();
    if (X.rows() != n) throw ArgumentError("design rows do not match response length");
    GlmFit fit;
    Eigen::VectorXd eta(n);
    if (family.is_binomial()) {
        const double mean = std::clamp(y.mean(), 0.01, 0.99);
        eta.setConstant(std::log(mean / (1.0 - mean)));
    } else {
        eta.setConstant(y.mean());
    }
    double deviance_old = std::numeric_limits<double>::infinity();
    fit.alpha = Eigen::VectorXd::Zero(X.cols());
    for (int it = 1; it <= max_iter; ++it) {
        fit.iterations = it;
        const WorkingState ws = evaluate_working_state(family, y, eta);
        const Eigen::MatrixXd xtw = X.transpose() * ws.weight_diagonal.asDiagonal();
        const Eigen::MatrixXd xtwx = xtw * X;
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xtwx);
        if (qr.rank() < X.cols()) {
            std::ostringstream msg;
            msg << "covariate matrix is rank deficient; collinear columns:";
            for (Eigen::Index k = qr.rank(); k < X.cols(); ++k) msg << ' ' << qr.colsPermutation().indices()[k];
            throw NumericalError(msg.str());
        }
        fit.alpha = qr.solve(xtw * ws.working_response);
        eta = X * fit.alpha;
        const double deviance = quasi_deviance(family, y, inverse_link(family, eta));
        if (std::abs(deviance - deviance_old) / (std::abs(deviance) + 0.1) < tol) {
            fit.converged = true;
            break;
        }
        deviance_old = deviance;
    }
    fit.working = evaluate_working_state(family, y, eta);
    return fit;
}

namespace {

double sample_variance(const Eigen::VectorXd& v) {
    if (v.size() < 2) return 0.0;
    const double mean = v.mean();
    return (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
}

double relative_change(const Eigen::VectorXd& now, const Eigen::VectorXd& before) {
    double worst = 0.0;
    for (Eigen::Index k = 0; k < now.size(); ++k) {
        const double denom = std::abs(now[k]) + std::abs(before[k]);
        if (denom == 0.0) continue;
        worst = std::max(worst, std::abs(now[k] - before[k]) / denom);
    }
    return worst;
}

/// Applies `step` to the free components, projecting negative values onto a
/// small floor and pinning components projected twice in a row.
void apply_step(ThetaVector& theta, const Eigen::VectorXd& step, double floor,
                std::vector<int>& projected_runs) {
    const auto free = theta.free_indices();
    Eigen::VectorXd values = theta.as_vector();
    for (std::size_t f = 0; f < free.size(); ++f) {
        const Eigen::Index k = free[f];
        double next = values[k] + step[static_cast<Eigen::Index>(f)];
        if (!std::isfinite(next)) throw NumericalError("variance component update is not finite");
        auto& runs = projected_runs[static_cast<std::size_t>(k)];
        if (next < floor) {
            next = floor;
            ++runs;
        } else {
            runs = 0;
        }
        values[k] = next;
    }
    theta.assign(values);
    for (std::size_t f = 0; f < free.size(); ++f) {
        const Eigen::Index k = free[f];
        const bool is_phi = theta.has_phi && k == 0;
        // phi is floored but never pinned: Sigma needs W^{-1} > 0.
        if (!is_phi && projected_runs[static_cast<std::size_t>(k)] >= 2) {
            const Eigen::Index s = theta.has_phi ? k - 1 : k;
            theta.tau[s] = 0.0;
            theta.tau_pinned[static_cast<std::size_t>(s)] = true;
        }
    }
}

struct AiStep {
    Eigen::VectorXd delta;
    std::string note;
};

AiStep ai_step(const Eigen::MatrixXd& ai, const Eigen::VectorXd& score, const ThetaVector& theta,
               Eigen::Index n) {
    AiStep out;
    if (score.size() == 0) {
        out.delta = score;
        return out;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(ai);
    if (llt.info() == Eigen::Success && llt.rcond() > 1e-12) {
        out.delta = llt.solve(score);
        return out;
    }
    const double trace = ai.trace();
    if (trace > 0.0) {
        const double ridge = 1e-6 * trace / static_cast<double>(ai.rows());
        Eigen::MatrixXd damped = ai;
        damped.diagonal().array() += ridge;
        Eigen::LLT<Eigen::MatrixXd> retry(damped);
        if (retry.info() == Eigen::Success) {
            out.delta = retry.solve(score);
            out.note = "average information singular; ridge added";
            return out;
        }
    }
    const Eigen::VectorXd values = theta.as_vector();
    const auto free = theta.free_indices();
    out.delta.resize(score.size());
    for (std::size_t f = 0; f < free.size(); ++f) {
        const double v = values[free[f]];
        out.delta[static_cast<Eigen::Index>(f)] =
            2.0 / static_cast<double>(n) * v * v * score[static_cast<Eigen::Index>(f)];
    }
    out.note = "average information singular; scaled gradient step used";
    return out;
}

}  // namespace

NullModelFit fit_null(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const KinshipSet& kinship,
                      const FamilySpec& family, const NullFitOptions& options) {
    const Eigen::Index n = y.size();
    family.validate(n);
    validate_response(family, y);
    kinship.validate();
    if (X.rows() != n || (!kinship.empty() && kinship.n() != n)) {
        throw DataError("response, covariates and kinship have different sample counts");
    }
    const auto S = static_cast<Eigen::Index>(kinship.size());
    if (n < X.cols() + S) throw DataError("need n >= m + S to fit the null model");

    NullModelFit fit;
    const GlmFit glm = fit_glm(y, X, family, options.glm_max_iter, options.glm_tol);
    if (!glm.converged) fit.warnings.push_back("initial GLM fit did not converge");
    fit.initial_working_variance = sample_variance(glm.working.working_response);
    fit.theta = ThetaVector::for_family(family, kinship.size());

    if (S == 0) {
        fit.alpha = glm.alpha;
        fit.b = Eigen::VectorXd::Zero(n);
        if (fit.theta.has_phi) {
            double rss = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double r = y[i] - glm.working.mu[i];
                rss += family.prior_weight(i) * r * r;
            }
            fit.theta.phi = rss / static_cast<double>(n - X.cols());
        }
        const WorkingState ws = evaluate_working_state(family_at(family, fit.theta), y, glm.working.eta);
        fit.working_response = ws.working_response;
        fit.weight_diagonal = ws.weight_diagonal;
        fit.eta = ws.eta;
        fit.converged = glm.converged;
        fit.n_iterations = glm.iterations;
        return fit;
    }

    ThetaVector& theta = fit.theta;
    const double var0 = fit.initial_working_variance;
    if (!(var0 > 0.0)) throw NumericalError("initial working response has zero variance");
    const double start = var0 / static_cast<double>(theta.has_phi ? S + 1 : S);
    if (theta.has_phi) theta.phi = start;
    theta.tau.setConstant(start);
    const double floor = 1e-6 * var0;
    std::vector<int> projected_runs(static_cast<std::size_t>(theta.dim()), 0);

    WorkingState working = evaluate_working_state(family_at(family, theta), y, glm.working.eta);
    {
        // Single gradient pre-step before the AI iterations.
        const RemlSystem sys(working, X, kinship, theta);
        const Eigen::VectorXd score = sys.score();
        const Eigen::VectorXd values = theta.as_vector();
        const auto free = theta.free_indices();
        Eigen::VectorXd step(score.size());
        for (std::size_t f = 0; f < free.size(); ++f) {
            const double v = values[free[f]];
            step[static_cast<Eigen::Index>(f)] =
                2.0 / static_cast<double>(n) * v * v * score[static_cast<Eigen::Index>(f)];
        }
        apply_step(theta, step, floor, projected_runs);
    }

    Eigen::VectorXd alpha_prev = glm.alpha;
    for (int it = 1; it <= options.max_iter; ++it) {
        fit.n_iterations = it;
        const ThetaVector theta_prev = theta;
        {
            const RemlSystem sys(working, X, kinship, theta);
            const AiStep step = ai_step(sys.average_information(), sys.score(), theta, n);
            if (!step.note.empty()) fit.warnings.push_back("iteration " + std::to_string(it) + ": " + step.note);
            apply_step(theta, step.delta, floor, projected_runs);
        }
        const FamilySpec fam = family_at(family, theta);
        if (theta.has_phi) working = evaluate_working_state(fam, y, working.eta);
        const GlsSolution gls = gls_update(working, X, kinship, theta);
        fit.alpha = gls.alpha;
        fit.b = gls.b;
        working = evaluate_working_state(fam, y, X * gls.alpha + gls.b);

        const double change = 2.0 * std::max(relative_change(fit.alpha, alpha_prev),
                                             relative_change(theta.as_vector(), theta_prev.as_vector()));
        alpha_prev = fit.alpha;
        if (change <= options.tol) {
            fit.converged = true;
            break;
        }
    }
    if (!fit.converged) {
        fit.warnings.push_back("AI-REML did not converge in " + std::to_string(options.max_iter) +
                               " iterations");
    }
    fit.working_response = working.working_response;
    fit.weight_diagonal = working.weight_diagonal;
    fit.eta = working.eta;
    fit.score_at_convergence = RemlSystem(working, X, kinship, theta).score();
    return fit;
}

// ---------------------------------------------------------------------------

namespace {
constexpr std::string_view kNullMagic = "PGLMMNUL";
}

void write_null_fit(const std::filesystem::path& json_path, const std::filesystem::path& bin_path,
                    const NullModelFit& fit, const FamilySpec& family) {
    nlohmann::json j;
    j["family"] = family_name(family.kind);
    j["alpha"] = std::vector<double>(fit.alpha.data(), fit.alpha.data() + fit.alpha.size());
    j["tau"] = std::vector<double>(fit.theta.tau.data(), fit.theta.tau.data() + fit.theta.tau.size());
    j["tau_pinned"] = fit.theta.tau_pinned;
    j["phi"] = fit.theta.phi;
    j["phi_estimated"] = fit.theta.has_phi;
    j["converged"] = fit.converged;
    j["n_iterations"] = fit.n_iterations;
    j["initial_working_variance"] = fit.initial_working_variance;
    j["score_at_convergence"] = std::vector<double>(
        fit.score_at_convergence.data(), fit.score_at_convergence.data() + fit.score_at_convergence.size());
    j["warnings"] = fit.warnings;
    std::ofstream out(json_path);
    if (!out) throw FormatError("cannot write " + json_path.string());
    out << j.dump(2) << '\n';

    std::ofstream bin(bin_path, std::ios::binary);
    if (!bin) throw FormatError("cannot write " + bin_path.string());
    binary::write_magic(bin, kNullMagic);
    binary::write_u64(bin, static_cast<std::uint64_t>(fit.b.size()));
    binary::write_matrix(bin, fit.b.transpose());
    binary::write_matrix(bin, fit.weight_diagonal.transpose());
}

NullModelFit read_null_fit(const std::filesystem::path& json_path,
                           const std::filesystem::path& bin_path) {
    std::ifstream in(json_path);
    if (!in) throw FormatError("cannot open " + json_path.string());
    const nlohmann::json j = nlohmann::json::parse(in);
    NullModelFit fit;
    const auto alpha = j.at("alpha").get<std::vector<double>>();
    fit.alpha = Eigen::Map<const Eigen::VectorXd>(alpha.data(), static_cast<Eigen::Index>(alpha.size()));
    const auto tau = j.at("tau").get<std::vector<double>>();
    fit.theta.tau = Eigen::Map<const Eigen::VectorXd>(tau.data(), static_cast<Eigen::Index>(tau.size()));
    fit.theta.tau_pinned = j.value("tau_pinned", std::vector<bool>(tau.size(), false));
    fit.theta.phi = j.at("phi").get<double>();
    fit.theta.has_phi = j.value("phi_estimated", false);
    fit.converged = j.at("converged").get<bool>();
    fit.n_iterations = j.at("n_iterations").get<int>();
    fit.initial_working_variance = j.value("initial_working_variance", 0.0);

    std::ifstream bin(bin_path, std::ios::binary);
    if (!bin) throw FormatError("cannot open " + bin_path.string());
    binary::expect_magic(bin, kNullMagic, bin_path.string());
    const auto n = static_cast<Eigen::Index>(binary::read_u64(bin, bin_path.string()));
    Eigen::MatrixXd row(1, n);
    binary::read_matrix(bin, row, bin_path.string());
    fit.b = row.transpose();
    binary::read_matrix(bin, row, bin_path.string());
    fit.weight_diagonal = row.transpose();
    return fit;
}

}  // namespace pglmm
