#include "pglmm/predict.hpp"

#include "pglmm/error.hpp"
#include "pglmm/metrics.hpp"
#include "pglmm/selection.hpp"

#include <Eigen/Eigenvalues>

#include <unordered_set>

namespace pglmm {

namespace {

void check_columns(const Eigen::MatrixXd& X_s, Eigen::Index expected) {
    if (X_s.cols() != expected) {
        throw DataError("test design has " + std::to_string(X_s.cols()) + " columns, expected " +
                        std::to_string(expected));
    }
}

void check_cross(const Eigen::MatrixXd& X_s, const Eigen::MatrixXd& V12, Eigen::Index n) {
    if (V12.rows() != X_s.rows()) {
        throw DataError("cross-relatedness has " + std::to_string(V12.rows()) + " rows but there are " +
                        std::to_string(X_s.rows()) + " test samples");
    }
    if (V12.cols() != n) {
        throw DataError("cross-relatedness has " + std::to_string(V12.cols()) + " columns but the training set has " +
                        std::to_string(n) + " samples");
    }
}

}  // namespace

WorkingState fitted_working_state(const PathFit& path, std::size_t k) {
    if (k >= path.size()) throw ArgumentError("lambda index " + std::to_string(k) + " out of range");
    return evaluate_working_state(path.family, path.y, path.points[k].eta);
}

Prediction predict_glmm(const PathFit& path, std::size_t k, const Eigen::MatrixXd& X_s,
                        const Eigen::MatrixXd& V12, GlmmPredictorForm form) {
    if (k >= path.size()) throw ArgumentError("lambda index " + std::to_string(k) + " out of range");
    if (path.theta.tau.size() > 1) {
        throw ArgumentError("GLMM prediction needs a single variance component; with " +
                            std::to_string(path.theta.tau.size()) +
                            " use the in-sample random effects instead");
    }
    const Eigen::Index n = path.y.size();
    check_columns(X_s, static_cast<Eigen::Index>(path.column_names.size()));
    check_cross(X_s, V12, n);

    const PathPoint& point = path.points[k];
    const Eigen::VectorXd beta = point.beta;
    Prediction out;
    out.eta = X_s * beta;

    const double tau = path.theta.tau.size() == 1 ? path.theta.tau[0] : 0.0;
    const RotatedProblem& rot = *path.rotation;
    if (tau > 0.0 && !rot.identity_basis) {
        const WorkingState ws = fitted_working_state(path, k);
        // Y~ - X~ beta = Y~ - (eta - b).
        const Eigen::VectorXd r = ws.working_response - point.eta + point.b;
        const Eigen::VectorXd& w = ws.weight_diagonal;
        if (form == GlmmPredictorForm::Eigen) {
            std::vector<Eigen::Index> positive;
            for (Eigen::Index i = 0; i < rot.Lambda.size(); ++i) {
                if (rot.Lambda[i] > 0.0) positive.push_back(i);
            }
            const auto q = static_cast<Eigen::Index>(positive.size());
            Eigen::MatrixXd U(n, q);
            Eigen::VectorXd D(q);
            for (Eigen::Index j = 0; j < q; ++j) {
                U.col(j) = rot.U.col(positive[static_cast<std::size_t>(j)]);
                D[j] = rot.Lambda[positive[static_cast<std::size_t>(j)]] / tau;
            }
            const Eigen::MatrixXd Ut = U * D.asDiagonal();
            Eigen::MatrixXd A = Ut.transpose() * w.asDiagonal() * Ut;
            A.diagonal() += D / tau;
            const Eigen::VectorXd rhs = Ut.transpose() * w.cwiseProduct(r);
            out.eta += V12 * (U * A.llt().solve(rhs));
        } else {
            const Eigen::MatrixXd V1 = rot.U * (rot.Lambda / tau).asDiagonal() * rot.U.transpose();
            Eigen::MatrixXd S = tau * V1;
            S.diagonal() += w.cwiseInverse();
            out.eta += tau * (V12 * S.llt().solve(r));
        }
    }
    out.mu = inverse_link(path.family, out.eta);
    return out;
}

PcBasis top_pcs(const Eigen::MatrixXd& V, Eigen::Index r) {
    if (V.rows() != V.cols()) throw DataError("GRM must be square");
    if (r < 0 || r > V.rows()) {
        throw ArgumentError("requested " + std::to_string(r) + " PCs but only " + std::to_string(V.rows()) +
                            " are available");
    }
    PcBasis pcs;
    if (r == 0) {
        pcs.U_r.resize(V.rows(), 0);
        return pcs;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(V);
    if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition of the GRM failed");
    const Eigen::Index n = V.rows();
    // Eigen sorts ascending; take the last r columns in descending order.
    pcs.U_r.resize(n, r);
    pcs.D_r.resize(r);
    for (Eigen::Index j = 0; j < r; ++j) {
        Eigen::VectorXd u = eig.eigenvectors().col(n - 1 - j);
        // Fix the sign so the largest-magnitude entry is positive.
        Eigen::Index at = 0;
        u.cwiseAbs().maxCoeff(&at);
        if (u[at] < 0.0) u = -u;
        pcs.U_r.col(j) = u;
        pcs.D_r[j] = eig.eigenvalues()[n - 1 - j];
    }
    return pcs;
}

Eigen::VectorXd pc_coefficients(const Eigen::MatrixXd& scores, const Eigen::VectorXd& weights,
                                const Eigen::VectorXd& partial_residual) {
    if (scores.cols() == 0) return Eigen::VectorXd(0);
    const Eigen::MatrixXd utw = scores.transpose() * weights.asDiagonal();
    const Eigen::MatrixXd gram = utw * scores;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all()) {
        throw NumericalError("PC Gram matrix is singular");
    }
    return ldlt.solve(utw * partial_residual);
}

Prediction predict_glm_pc(const PathFit& path, std::size_t k, const PcBasis& pcs, Eigen::Index pc_first_column,
                          const Eigen::MatrixXd& X_s, const Eigen::MatrixXd& V12) {
    if (k >= path.size()) throw ArgumentError("lambda index " + std::to_string(k) + " out of range");
    const auto total = static_cast<Eigen::Index>(path.column_names.size());
    const Eigen::Index r = pcs.r();
    if (pc_first_column < 0 || pc_first_column + r > total) {
        throw ArgumentError("PC block exceeds the fitted design");
    }
    check_columns(X_s, total - r);
    check_cross(X_s, V12, path.y.size());

    const PathPoint& point = path.points[k];
    const Eigen::VectorXd beta = point.beta;
    Eigen::VectorXd beta_rest(total - r);
    beta_rest << beta.head(pc_first_column), beta.tail(total - pc_first_column - r);

    Prediction out;
    out.eta = X_s * beta_rest;
    if (r > 0) {
        const WorkingState ws = fitted_working_state(path, k);
        const Eigen::MatrixXd scores = pcs.scores();
        // Y~ - X~ beta with the PC columns excluded from X~.
        const Eigen::VectorXd partial =
            ws.working_response - point.eta + scores * beta.segment(pc_first_column, r);
        const Eigen::VectorXd delta = pc_coefficients(scores, ws.weight_diagonal, partial);
        out.eta += V12 * (pcs.U_r * delta);
    }
    out.mu = inverse_link(path.family, out.eta);
    return out;
}

std::vector<double> validation_auc(const PathFit& path, const ValidationData& data) {
    std::vector<double> out;
    out.reserve(path.size());
    for (std::size_t k = 0; k < path.size(); ++k) {
        out.push_back(metric_auc(predict_glmm(path, k, data.X, data.V12).eta, data.y));
    }
    return out;
}

std::size_t select_by_validation(const PathFit& path, const ValidationData& data) {
    const std::unordered_set<std::string> training(data.training_ids.begin(), data.training_ids.end());
    for (const auto& id : data.sample_ids) {
        if (training.count(id)) throw DataError("validation sample '" + id + "' is also in the training set");
    }
    return argmax_first(validation_auc(path, data));
}

}  // namespace pglmm
