#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pglmm {

/// One relatedness matrix with its sample labels.
struct Kinship {
    Eigen::MatrixXd matrix;
    std::vector<std::string> sample_ids;

    /// Principal submatrix for `ids`, in that order.
    Kinship select(const std::vector<std::string>& ids) const;
    /// Rectangular block with rows `row_ids` and columns `col_ids`.
    Eigen::MatrixXd block(const std::vector<std::string>& row_ids,
                          const std::vector<std::string>& col_ids) const;
};

/// S relatedness matrices sharing one sample order.
struct KinshipSet {
    std::vector<Eigen::MatrixXd> matrices;
    std::vector<std::string> sample_ids;

    std::size_t size() const { return matrices.size(); }
    bool empty() const { return matrices.empty(); }
    Eigen::Index n() const { return static_cast<Eigen::Index>(sample_ids.size()); }

    /// Throws DataError unless every matrix is n x n and symmetric within 1e-10.
    void validate() const;
};

/// Result of flooring negative eigenvalues at zero.
struct PsdRepair {
    double min_eigenvalue_before = 0.0;
    bool repaired = false;
};

/// Symmetrises and, if its smallest eigenvalue is negative, rebuilds the
/// matrix from its spectrum with negative eigenvalues set to zero.
PsdRepair floor_to_psd(Eigen::MatrixXd& matrix);

/// G G^T / p' over the chosen standardized variant columns, symmetrised and
/// floored to be positive semi-definite.
Eigen::MatrixXd compute_grm(const Eigen::MatrixXd& standardized,
                            const std::optional<std::vector<Eigen::Index>>& variant_subset = {},
                            PsdRepair* repair = nullptr);

/// Binary layout: "PGLMMGRM", u64 n, n*n row-major f64, all little-endian;
/// sample IDs go one per line to `<path>.id`.
void write_kinship(const std::filesystem::path& path, const Kinship& kinship);
Kinship read_kinship(const std::filesystem::path& path);

std::filesystem::path kinship_id_path(const std::filesystem::path& path);

}  // namespace pglmm
