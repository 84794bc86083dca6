#include "pglmm/genotype.hpp"

#include "pglmm/error.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace pglmm {

bool GenotypeMatrix::has_missing() const { return dosages.array().isNaN().any(); }

GenotypeMatrix GenotypeMatrix::select_samples(const std::vector<std::string>& ids) const {
    std::unordered_map<std::string, Eigen::Index> index;
    for (std::size_t i = 0; i < sample_ids.size(); ++i) {
        index.emplace(sample_ids[i], static_cast<Eigen::Index>(i));
    }
    GenotypeMatrix out;
    out.dosages.resize(static_cast<Eigen::Index>(ids.size()), n_variants());
    out.sample_ids = ids;
    out.variant_ids = variant_ids;
    for (std::size_t r = 0; r < ids.size(); ++r) {
        auto it = index.find(ids[r]);
        if (it == index.end()) {
            throw DataError("sample '" + ids[r] + "' not present in genotype data");
        }
        out.dosages.row(static_cast<Eigen::Index>(r)) = dosages.row(it->second);
    }
    out.allele_freqs = compute_allele_freqs(out.dosages);
    return out;
}

GenotypeMatrix GenotypeMatrix::select_variants(const std::vector<Eigen::Index>& columns) const {
    GenotypeMatrix out;
    out.sample_ids = sample_ids;
    out.dosages.resize(n_samples(), static_cast<Eigen::Index>(columns.size()));
    out.allele_freqs.resize(static_cast<Eigen::Index>(columns.size()));
    for (std::size_t k = 0; k < columns.size(); ++k) {
        const Eigen::Index j = columns[k];
        if (j < 0 || j >= n_variants()) throw ArgumentError("variant index out of range");
        out.dosages.col(static_cast<Eigen::Index>(k)) = dosages.col(j);
        out.variant_ids.push_back(variant_ids[static_cast<std::size_t>(j)]);
        out.allele_freqs[static_cast<Eigen::Index>(k)] =
            allele_freqs.size() == n_variants() ? allele_freqs[j] : std::nan("");
    }
    if (allele_freqs.size() != n_variants()) out.allele_freqs = compute_allele_freqs(out.dosages);
    return out;
}

Eigen::VectorXd compute_allele_freqs(const Eigen::MatrixXd& dosages) {
    Eigen::VectorXd freqs(dosages.cols());
    for (Eigen::Index j = 0; j < dosages.cols(); ++j) {
        double sum = 0.0;
        Eigen::Index count = 0;
        for (Eigen::Index i = 0; i < dosages.rows(); ++i) {
            const double v = dosages(i, j);
            if (!std::isnan(v)) {
                sum += v;
                ++count;
            }
        }
        freqs[j] = count == 0 ? std::nan("") : sum / (2.0 * static_cast<double>(count));
    }
    return freqs;
}

GenotypeMatrix impute_and_filter(const GenotypeMatrix& g, double maf_min, double missing_max,
                                 FilterReport* report) {
    if (!(maf_min >= 0.0 && maf_min < 0.5)) throw ArgumentError("maf_min must lie in [0, 0.5)");
    if (!(missing_max >= 0.0 && missing_max <= 1.0)) {
        throw ArgumentError("missing_max must lie in [0, 1]");
    }
    const Eigen::Index n = g.n_samples();
    FilterReport local;
    const Eigen::VectorXd freqs = compute_allele_freqs(g.dosages);

    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < g.n_variants(); ++j) {
        const auto missing = static_cast<double>(g.dosages.col(j).array().isNaN().count());
        if (n == 0 || missing / static_cast<double>(n) > missing_max || std::isnan(freqs[j])) {
            ++local.dropped_missing;
            continue;
        }
        const double maf = std::min(freqs[j], 1.0 - freqs[j]);
        // A monomorphic column cannot be standardised, whatever maf_min is.
        if (maf < maf_min || maf <= 0.0) {
            ++local.dropped_maf;
            continue;
        }
        keep.push_back(j);
    }
    if (keep.empty()) throw DataError("all variants were removed by the MAF/missingness filter");

    GenotypeMatrix out;
    out.sample_ids = g.sample_ids;
    out.dosages.resize(n, static_cast<Eigen::Index>(keep.size()));
    out.allele_freqs.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        const Eigen::Index j = keep[k];
        const auto col = static_cast<Eigen::Index>(k);
        const double mean = 2.0 * freqs[j];
        for (Eigen::Index i = 0; i < n; ++i) {
            double v = g.dosages(i, j);
            if (std::isnan(v)) {
                v = mean;
                ++local.imputed_entries;
            }
            out.dosages(i, col) = v;
        }
        out.allele_freqs[col] = freqs[j];
        out.variant_ids.push_back(g.variant_ids[static_cast<std::size_t>(j)]);
    }
    if (report) *report = local;
    return out;
}

Eigen::MatrixXd standardize(const Eigen::MatrixXd& dosages, const Eigen::VectorXd& allele_freqs) {
    if (allele_freqs.size() != dosages.cols()) {
        throw ArgumentError("allele frequency count does not match variant count");
    }
    Eigen::MatrixXd out(dosages.rows(), dosages.cols());
    for (Eigen::Index j = 0; j < dosages.cols(); ++j) {
        const double p = allele_freqs[j];
        if (!(p > 0.0 && p < 1.0)) {
            throw DataError("variant " + std::to_string(j) +
                            " has allele frequency outside (0,1); filter it first");
        }
        const double scale = std::sqrt(2.0 * p * (1.0 - p));
        for (Eigen::Index i = 0; i < dosages.rows(); ++i) {
            const double v = dosages(i, j);
            if (std::isnan(v)) throw DataError("standardize requires imputed genotypes");
            out(i, j) = (v - 2.0 * p) / scale;
        }
    }
    return out;
}

Eigen::MatrixXd standardize(const GenotypeMatrix& g) {
    const Eigen::VectorXd freqs =
        g.allele_freqs.size() == g.n_variants() ? g.allele_freqs : compute_allele_freqs(g.dosages);
    return standardize(g.dosages, freqs);
}

}  // namespace pglmm
