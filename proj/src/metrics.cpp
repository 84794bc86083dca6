#include "pglmm/metrics.hpp"

#include "pglmm/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace pglmm {

namespace {

std::size_t overlap(const std::vector<Eigen::Index>& a, const std::vector<Eigen::Index>& b) {
    const std::set<Eigen::Index> lookup(b.begin(), b.end());
    const std::set<Eigen::Index> unique(a.begin(), a.end());
    return static_cast<std::size_t>(
        std::count_if(unique.begin(), unique.end(), [&](Eigen::Index j) { return lookup.count(j) > 0; }));
}

}  // namespace

double metric_tpr(const std::vector<Eigen::Index>& selected, const std::vector<Eigen::Index>& truth) {
    const std::set<Eigen::Index> unique(selected.begin(), selected.end());
    if (unique.empty()) return 0.0;
    return static_cast<double>(overlap(selected, truth)) / static_cast<double>(unique.size());
}

double metric_recall(const std::vector<Eigen::Index>& selected, const std::vector<Eigen::Index>& truth) {
    const std::set<Eigen::Index> unique(truth.begin(), truth.end());
    if (unique.empty()) return 0.0;
    return static_cast<double>(overlap(truth, selected)) / static_cast<double>(unique.size());
}

double metric_rmse(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_true) {
    if (beta_hat.size() != beta_true.size()) {
        throw ArgumentError("rmse: lengths differ (" + std::to_string(beta_hat.size()) + " vs " +
                            std::to_string(beta_true.size()) + ")");
    }
    if (beta_hat.size() == 0) throw ArgumentError("rmse: empty coefficient vectors");
    return std::sqrt((beta_hat - beta_true).squaredNorm() / static_cast<double>(beta_hat.size()));
}

double metric_auc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
    if (scores.size() != labels.size()) throw ArgumentError("auc: scores and labels differ in length");
    const auto n = static_cast<std::size_t>(scores.size());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[static_cast<Eigen::Index>(a)] < scores[static_cast<Eigen::Index>(b)];
    });
    // Mid-ranks make the rank-sum statistic equal to wins + ties / 2.
    double case_rank_sum = 0.0;
    double n_cases = 0.0;
    double n_controls = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[static_cast<Eigen::Index>(order[j + 1])] ==
                                scores[static_cast<Eigen::Index>(order[i])]) {
            ++j;
        }
        const double mid_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            const double label = labels[static_cast<Eigen::Index>(order[k])];
            if (label == 1.0) {
                case_rank_sum += mid_rank;
                n_cases += 1.0;
            } else if (label == 0.0) {
                n_controls += 1.0;
            } else {
                throw DataError("auc: labels must be 0/1");
            }
        }
        i = j + 1;
    }
    if (n_cases == 0.0 || n_controls == 0.0) throw DataError("auc: labels contain a single class");
    return (case_rank_sum - n_cases * (n_cases + 1.0) / 2.0) / (n_cases * n_controls);
}

}  // namespace pglmm
