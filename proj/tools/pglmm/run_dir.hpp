#pragma once

#include "pglmm/kinship.hpp"
#include "pglmm/penalized_path.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace pglmm::cli {

/// Fixed file names inside a run directory.
struct RunFiles {
    std::filesystem::path dir;
    std::filesystem::path null_json() const { return dir / "null.json"; }
    std::filesystem::path null_bin() const { return dir / "null.bin"; }
    std::filesystem::path path_tsv() const { return dir / "path.tsv"; }
    std::filesystem::path beta_tsv() const { return dir / "beta.tsv"; }
    std::filesystem::path path_json() const { return dir / "path.json"; }
    std::filesystem::path eta_bin() const { return dir / "eta.bin"; }
    std::filesystem::path selection_json() const { return dir / "selection.json"; }
};

/// Everything a later command needs from a fitted run.
struct RunModel {
    FamilySpec family;
    ThetaVector theta;
    std::vector<std::string> grm_paths;
    std::vector<std::string> training_ids;
    std::vector<std::string> column_names;
    Eigen::Index n_covariates = 0;
    /// Number of PC covariates (baseline mode); they follow the user covariates.
    Eigen::Index pcs = 0;
    Eigen::Index pc_first_column = 0;
    bool baseline = false;
    std::vector<double> lambdas;
    std::vector<int> df;
    std::vector<double> pql_loglik;
    std::vector<Eigen::VectorXd> beta;
    std::vector<Eigen::VectorXd> eta;
    std::vector<Eigen::VectorXd> b;
    Eigen::VectorXd y;

    std::size_t size() const { return lambdas.size(); }
};

struct RunMetadata {
    std::vector<std::string> grm_paths;
    std::vector<std::string> training_ids;
    Eigen::Index pcs = 0;
    Eigen::Index pc_first_column = 0;
    bool baseline = false;
    nlohmann::json options;
};

/// Writes path.tsv, beta.tsv, path.json and eta.bin.
std::vector<std::filesystem::path> write_path_outputs(const RunFiles& files, const PathFit& fit,
                                                      const RunMetadata& meta);

RunModel read_run(const RunFiles& files);

/// Rebuilds a PathFit good enough for selection and prediction. The training
/// kinship is needed only when a variance component is positive.
PathFit to_path_fit(const RunModel& model, const KinshipSet& training_kinship);

}  // namespace pglmm::cli
