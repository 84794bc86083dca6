#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace oracle {

OneWayReml one_way_reml(const Eigen::VectorXd& y, int groups, int size) {
    const double grand = y.mean();
    double ssb = 0.0;
    double ssw = 0.0;
    for (int g = 0; g < groups; ++g) {
        const Eigen::VectorXd block = y.segment(g * size, size);
        const double m = block.mean();
        ssb += size * (m - grand) * (m - grand);
        ssw += (block.array() - m).square().sum();
    }
    const double msb = ssb / (groups - 1);
    const double msw = ssw / (groups * size - groups);
    return {msw, (msb - msw) / size};
}

Eigen::MatrixXd one_way_kinship(int groups, int size) {
    Eigen::MatrixXd V = Eigen::MatrixXd::Zero(groups * size, groups * size);
    for (int g = 0; g < groups; ++g) V.block(g * size, g * size, size, size).setOnes();
    return V;
}

double total_variance_reml(const Eigen::VectorXd& y) {
    return (y.array() - y.mean()).square().sum() / static_cast<double>(y.size() - 1);
}

Eigen::VectorXd logistic_mle(const Eigen::VectorXd& y, const Eigen::MatrixXd& X) {
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(X.cols());
    for (int it = 0; it < 100; ++it) {
        const Eigen::VectorXd eta = X * beta;
        const Eigen::VectorXd mu = (1.0 + (-eta.array()).exp()).inverse().matrix();
        const Eigen::VectorXd w = (mu.array() * (1.0 - mu.array())).matrix();
        const Eigen::MatrixXd H = X.transpose() * w.asDiagonal() * X;
        const Eigen::VectorXd step = H.ldlt().solve(X.transpose() * (y - mu));
        beta += step;
        if (step.lpNorm<Eigen::Infinity>() < 1e-14) break;
    }
    return beta;
}

double reml_loglik(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const Eigen::VectorXd& w,
                   const std::vector<Eigen::MatrixXd>& V, const Eigen::VectorXd& theta) {
    Eigen::MatrixXd S = w.cwiseInverse().asDiagonal();
    for (std::size_t k = 0; k < V.size(); ++k) S += theta[static_cast<Eigen::Index>(k)] * V[k];
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
    const Eigen::MatrixXd Si = lu.inverse();
    const Eigen::MatrixXd XtSiX = X.transpose() * Si * X;
    const Eigen::MatrixXd P = Si - Si * X * XtSiX.inverse() * X.transpose() * Si;
    const double logdet_s = std::log(std::abs(lu.determinant()));
    const double logdet_x = std::log(std::abs(XtSiX.determinant()));
    return -0.5 * (logdet_s + logdet_x + y.dot(P * y));
}

void mixed_model_equations(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const Eigen::VectorXd& w,
                           const Eigen::MatrixXd& K, Eigen::VectorXd& alpha, Eigen::VectorXd& b) {
    const auto n = y.size();
    const auto m = X.cols();
    const Eigen::MatrixXd W = w.asDiagonal();
    Eigen::MatrixXd A(m + n, m + n);
    A.topLeftCorner(m, m) = X.transpose() * W * X;
    A.topRightCorner(m, n) = X.transpose() * W;
    A.bottomLeftCorner(n, m) = W * X;
    A.bottomRightCorner(n, n) = W + K.inverse();
    Eigen::VectorXd rhs(m + n);
    rhs << X.transpose() * W * y, W * y;
    const Eigen::VectorXd sol = A.fullPivLu().solve(rhs);
    alpha = sol.head(m);
    b = sol.tail(n);
}

std::vector<Eigen::VectorXd> lasso_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double w,
                                        const std::vector<double>& lambdas) {
    const auto n = X.rows();
    const auto p = X.cols();
    Eigen::VectorXd mean(p), sd(p);
    Eigen::MatrixXd Z(n, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        mean[j] = X.col(j).mean();
        sd[j] = std::sqrt((X.col(j).array() - mean[j]).square().mean());
        Z.col(j) = (X.col(j).array() - mean[j]) / sd[j];
    }
    const double ybar = y.mean();
    const Eigen::VectorXd yc = y.array() - ybar;

    std::vector<Eigen::VectorXd> out;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    for (double lambda : lambdas) {
        for (int sweep = 0; sweep < 1000000; ++sweep) {
            double change = 0.0;
            for (Eigen::Index j = 0; j < p; ++j) {
                // Partial residual recomputed from scratch each time.
                Eigen::VectorXd r = yc;
                for (Eigen::Index k = 0; k < p; ++k) {
                    if (k != j) r -= Z.col(k) * beta[k];
                }
                const double z = w * Z.col(j).dot(r);
                const double a = w * Z.col(j).squaredNorm();
                const double next = (z > lambda ? z - lambda : (z < -lambda ? z + lambda : 0.0)) / a;
                change = std::max(change, std::abs(next - beta[j]));
                beta[j] = next;
            }
            if (change < 1e-13) break;
        }
        Eigen::VectorXd coef(p + 1);
        coef[0] = ybar;
        for (Eigen::Index j = 0; j < p; ++j) {
            coef[j + 1] = beta[j] / sd[j];
            coef[0] -= coef[j + 1] * mean[j];
        }
        out.push_back(coef);
    }
    return out;
}

double golden_section(const std::function<double(double)>& f, double a, double b, double tol) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - g * (b - a);
    double d = a + g * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

Eigen::VectorXd ridge_random_effect(const Eigen::VectorXd& r, const Eigen::MatrixXd& K, double c) {
    const auto n = r.size();
    const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) / c + K.inverse();
    return A.fullPivLu().solve(r / c);
}

double ProfiledObjective::operator()(const Eigen::VectorXd& beta) const {
    const auto n = y.size();
    const Eigen::VectorXd offset = X * beta;
    double a = 0.0;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    const auto value = [&](double a_, const Eigen::VectorXd& b_) {
        double v = 0.5 * b_.dot(K_inv * b_);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double eta = a_ + offset[i] + b_[i];
            // -log-likelihood of a Bernoulli with logit eta, written stably.
            v += std::log1p(std::exp(-std::abs(eta))) + std::max(eta, 0.0) - y[i] * eta;
        }
        return v;
    };
    double current = value(a, b);
    for (int it = 0; it < 200; ++it) {
        Eigen::VectorXd mu(n), w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            mu[i] = 1.0 / (1.0 + std::exp(-(a + offset[i] + b[i])));
            w[i] = mu[i] * (1.0 - mu[i]);
        }
        Eigen::VectorXd grad(n + 1);
        grad[0] = (mu - y).sum();
        grad.tail(n) = mu - y + K_inv * b;
        Eigen::MatrixXd H(n + 1, n + 1);
        H(0, 0) = w.sum();
        H.block(0, 1, 1, n) = w.transpose();
        H.block(1, 0, n, 1) = w;
        H.block(1, 1, n, n) = K_inv;
        H.block(1, 1, n, n).diagonal() += w;
        const Eigen::VectorXd step = H.ldlt().solve(grad);
        double t = 1.0;
        double next = value(a - step[0], b - step.tail(n));
        while (next > current && t > 1e-10) {
            t *= 0.5;
            next = value(a - t * step[0], b - t * step.tail(n));
        }
        a -= t * step[0];
        b -= t * step.tail(n);
        const double gain = current - next;
        current = next;
        if (step.lpNorm<Eigen::Infinity>() * t < 1e-13 || gain <= 1e-16 * std::abs(current)) break;
    }
    return current + lambda * (scale.array() * beta.array().abs()).sum();
}

Eigen::VectorXd grid_minimise(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd centre,
                              double half_width, int points_per_axis, double final_width) {
    const auto dim = centre.size();
    double best_value = f(centre);
    while (half_width > final_width) {
        Eigen::VectorXd best = centre;
        std::vector<int> idx(static_cast<std::size_t>(dim), 0);
        const double spacing = 2.0 * half_width / (points_per_axis - 1);
        while (true) {
            Eigen::VectorXd point(dim);
            for (Eigen::Index k = 0; k < dim; ++k) {
                point[k] = centre[k] - half_width + spacing * idx[static_cast<std::size_t>(k)];
            }
            const double v = f(point);
            if (v < best_value) {
                best_value = v;
                best = point;
            }
            Eigen::Index k = 0;
            while (k < dim && ++idx[static_cast<std::size_t>(k)] == points_per_axis) {
                idx[static_cast<std::size_t>(k)] = 0;
                ++k;
            }
            if (k == dim) break;
        }
        // Keep the width when the incumbent sits on the edge of the box.
        const bool on_edge = ((best - centre).array().abs() >= half_width - 0.5 * spacing).any();
        centre = best;
        if (!on_edge) half_width *= 0.5;
    }
    return centre;
}

Eigen::MatrixXd random_normal(int rows, int cols, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    Eigen::MatrixXd M(rows, cols);
    for (int j = 0; j < cols; ++j) {
        for (int i = 0; i < rows; ++i) M(i, j) = z(rng);
    }
    return M;
}

Eigen::MatrixXd random_psd(int n, int rank, std::mt19937_64& rng) {
    const Eigen::MatrixXd A = random_normal(n, rank, rng);
    return A * A.transpose() / static_cast<double>(rank);
}

Eigen::MatrixXd random_grm(int n, int variants, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> freq(0.1, 0.9);
    Eigen::MatrixXd Z(n, variants);
    for (int j = 0; j < variants; ++j) {
        std::binomial_distribution<int> g(2, freq(rng));
        for (int i = 0; i < n; ++i) Z(i, j) = g(rng);
        const double mean = Z.col(j).mean();
        double sd = std::sqrt((Z.col(j).array() - mean).square().mean());
        if (sd == 0.0) sd = 1.0;
        Z.col(j) = (Z.col(j).array() - mean) / sd;
    }
    return Z * Z.transpose() / static_cast<double>(variants);
}

}  // namespace oracle
