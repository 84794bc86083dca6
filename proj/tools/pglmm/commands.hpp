#pragma once

#include <optional>
#include <string>
#include <vector>

namespace pglmm::cli {

/// Genotype source flags shared by several commands.
struct GenotypeInput {
    std::string bed;
    std::string bim;
    std::string fam;
    std::string csv;
    bool given() const { return !bed.empty() || !csv.empty(); }
};

struct GrmArgs {
    GenotypeInput genotypes;
    double maf = 0.0;
    double max_missing = 1.0;
    /// Optional list of variant IDs; the GRM uses only these.
    std::string extract;
    std::string out;
};

struct FitArgs {
    std::string family = "binomial";
    std::vector<std::string> grm;
    std::string pheno;
    std::string pheno_column;
    std::string covar;
    GenotypeInput genotypes;
    std::string keep;
    double maf = 0.0;
    double max_missing = 1.0;
    int nlambda = 100;
    std::optional<double> lambda_min_ratio;
    std::string penalty_factor;
    std::optional<int> pcs;
    bool no_standardize = false;
    std::optional<double> inner_tol;
    double outer_tol = 1e-6;
    int max_outer = 50;
    double reml_tol = 1e-6;
    int reml_max_iter = 100;
    bool force = false;
    std::string out;
};

struct TestInput {
    GenotypeInput genotypes;
    std::string covar;
    std::string cross_grm;
    /// Optional ID list restricting the genotype file to these samples.
    std::string keep;
};

struct SelectArgs {
    std::string model;
    std::string criterion = "bic";
    TestInput validation;
    std::string validation_pheno;
};

struct PredictArgs {
    std::string model;
    int lambda_index = -1;
    TestInput test;
    std::string out;
};

struct SimulateArgs {
    std::string config;
    std::optional<unsigned long long> seed;
    std::string format = "bed";
    std::string out;
};

struct ScoreArgs {
    std::string truth;
    std::string model;
    int lambda_index = -1;
    std::string criterion;
    std::string scores;
    std::string pheno;
    std::string val_scores;
    std::string val_pheno;
    std::string out;
};

void run_grm(const GrmArgs& args);
void run_fit(const FitArgs& args);
void run_select(const SelectArgs& args);
void run_predict(const PredictArgs& args);
void run_simulate(const SimulateArgs& args);
void run_score(const ScoreArgs& args);

}  // namespace pglmm::cli
