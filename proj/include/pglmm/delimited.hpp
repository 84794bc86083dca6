#pragma once

#include "pglmm/genotype.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace pglmm {

/// Covariates with an all-ones intercept in column 0.
struct CovariateTable {
    Eigen::MatrixXd values;
    std::vector<std::string> column_names;
    std::vector<std::string> sample_ids;

    CovariateTable select_samples(const std::vector<std::string>& ids) const;
    /// Intercept-only table for the given samples.
    static CovariateTable intercept_only(const std::vector<std::string>& ids);
};

struct PhenotypeVector {
    Eigen::VectorXd values;
    std::vector<std::string> sample_ids;
    std::string name;

    bool is_binary() const;
    PhenotypeVector select_samples(const std::vector<std::string>& ids) const;
};

/// Raw cells of a delimited file with a header row. The delimiter is a tab
/// when the header contains one and a comma otherwise. The sample ID column
/// is the one named "id" in any letter case.
struct DelimitedTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::size_t id_column = 0;
    std::string path;

    std::vector<std::string> ids() const;
    /// Parses cell (row, col); "NA" and empty cells yield NaN when
    /// `allow_missing`, otherwise a DataError naming the coordinates.
    double numeric(std::size_t row, std::size_t col, bool allow_missing) const;
};

DelimitedTable read_delimited(const std::filesystem::path& path);

GenotypeMatrix read_genotypes_delimited(const std::filesystem::path& path);
/// Prepends an intercept column unless the file already has one named
/// "intercept" holding ones.
CovariateTable read_covariates(const std::filesystem::path& path);
/// Uses the first non-ID column unless `column` names another.
PhenotypeVector read_phenotype(const std::filesystem::path& path, const std::string& column = "");

/// Writers used by the simulator and CLI. Values are printed with 17
/// significant digits.
void write_genotypes_delimited(const std::filesystem::path& path, const GenotypeMatrix& g);
void write_covariates(const std::filesystem::path& path, const CovariateTable& table);
void write_phenotype(const std::filesystem::path& path, const PhenotypeVector& pheno);

/// Formats a double so that it round-trips exactly.
std::string format_double(double value);

}  // namespace pglmm
