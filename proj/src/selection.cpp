#include "pglmm/selection.hpp"

#include "pglmm/error.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

namespace pglmm {

SelectionCriterion SelectionCriterion::gic(double a_n) {
    if (!(a_n > 0.0) || !std::isfinite(a_n)) throw ArgumentError("GIC weight a_n must be positive");
    return {Kind::GIC, a_n};
}

SelectionCriterion SelectionCriterion::parse(std::string_view text) {
    if (text == "aic") return aic();
    if (text == "bic") return bic();
    if (text == "val-auc") return validation_auc();
    if (text.substr(0, 4) == "gic:") {
        const std::string number(text.substr(4));
        char* end = nullptr;
        const double a = std::strtod(number.c_str(), &end);
        if (number.empty() || end != number.c_str() + number.size()) {
            throw ArgumentError("cannot parse GIC weight '" + number + "'");
        }
        return gic(a);
    }
    throw ArgumentError("unknown criterion '" + std::string(text) + "' (expected aic, bic, gic:A or val-auc)");
}

double SelectionCriterion::weight(Eigen::Index n) const {
    switch (kind) {
        case Kind::AIC: return 2.0;
        case Kind::BIC: return std::log(static_cast<double>(n));
        case Kind::GIC: return a_n;
        case Kind::ValidationAuc: break;
    }
    throw ArgumentError("validation criterion has no information-criterion weight");
}

std::vector<double> gic(const PathFit& path, double a_n) {
    std::vector<double> out;
    out.reserve(path.size());
    const auto components = static_cast<double>(path.n_variance_components());
    for (const auto& point : path.points) {
        out.push_back(-2.0 * point.pql_loglik + a_n * (static_cast<double>(point.df) + components));
    }
    return out;
}

std::size_t argmin_first(const std::vector<double>& values) {
    if (values.empty()) throw ArgumentError("cannot select from an empty path");
    std::size_t best = 0;
    for (std::size_t k = 1; k < values.size(); ++k) {
        if (values[k] < values[best]) best = k;
    }
    return best;
}

std::size_t argmax_first(const std::vector<double>& values) {
    if (values.empty()) throw ArgumentError("cannot select from an empty path");
    std::size_t best = 0;
    for (std::size_t k = 1; k < values.size(); ++k) {
        if (values[k] > values[best]) best = k;
    }
    return best;
}

std::size_t select(const PathFit& path, const SelectionCriterion& criterion) {
    if (criterion.kind == SelectionCriterion::Kind::ValidationAuc) {
        throw ArgumentError("validation selection needs validation data");
    }
    return argmin_first(gic(path, criterion.weight(path.y.size())));
}

std::size_t index_for_model_size(const PathFit& path, int size) {
    if (path.points.empty()) throw ArgumentError("empty path");
    std::size_t best = 0;
    int best_gap = std::abs(path.points[0].df - size);
    for (std::size_t k = 1; k < path.size(); ++k) {
        const int gap = std::abs(path.points[k].df - size);
        if (gap < best_gap) {
            best = k;
            best_gap = gap;
        }
    }
    return best;
}

}  // namespace pglmm
