#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace pglmm {

/// n x p minor-allele dosages with sample and variant labels. Raw entries are
/// 0/1/2 with NaN marking a missing call; after impute_and_filter missing
/// cells hold the column mean 2p.
struct GenotypeMatrix {
    Eigen::MatrixXd dosages;
    std::vector<std::string> sample_ids;
    std::vector<std::string> variant_ids;
    /// mean(dosage)/2 per variant over the non-missing entries.
    Eigen::VectorXd allele_freqs;

    Eigen::Index n_samples() const { return dosages.rows(); }
    Eigen::Index n_variants() const { return dosages.cols(); }
    bool has_missing() const;

    /// Rows re-ordered (and subset) to match `ids`; throws DataError for unknown IDs.
    GenotypeMatrix select_samples(const std::vector<std::string>& ids) const;
    GenotypeMatrix select_variants(const std::vector<Eigen::Index>& columns) const;
};

/// Non-missing column means divided by two (NaN for an all-missing column).
Eigen::VectorXd compute_allele_freqs(const Eigen::MatrixXd& dosages);

struct FilterReport {
    Eigen::Index dropped_missing = 0;
    Eigen::Index dropped_maf = 0;
    Eigen::Index imputed_entries = 0;
};

/// Drops variants whose missing rate exceeds `missing_max` or whose MAF is
/// below `maf_min`, then mean-imputes the remaining missing cells.
GenotypeMatrix impute_and_filter(const GenotypeMatrix& g, double maf_min, double missing_max,
                                 FilterReport* report = nullptr);

/// Column-wise (g - 2p) / sqrt(2p(1-p)).
Eigen::MatrixXd standardize(const GenotypeMatrix& g);
Eigen::MatrixXd standardize(const Eigen::MatrixXd& dosages, const Eigen::VectorXd& allele_freqs);

}  // namespace pglmm
