#pragma once

#include "pglmm/delimited.hpp"
#include "pglmm/genotype.hpp"

#include "json.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace pglmm {

/// Parameters of a synthetic case-control study. Genotypes come from
/// independent subpopulations with Balding-Nichols allele frequencies; this
/// is not the BN-PSD admixture model.
struct SimConfig {
    Eigen::Index n = 600;
    Eigen::Index p = 1000;
    /// Fraction of causal variants.
    double c = 0.01;
    double h2_g = 0.5;
    double h2_b = 0.4;
    /// Prevalence under the null.
    double pi0 = 0.1;
    int K = 10;
    double fst_like = 0.1;
    std::uint64_t seed = 1;
    /// Extra variants, not candidates, used only to build the GRM. Zero
    /// means the GRM is built from the candidate variants.
    Eigen::Index n_kinship_variants = 0;
    double age_mean = 50.0;
    double age_sd = 5.0;
    double sex_probability = 0.5;
    /// Train/test split fractions (a third entry adds a validation set).
    std::vector<double> split_ratios = {0.8, 0.2};

    /// Throws ArgumentError when a field is out of range.
    void validate() const;
    Eigen::Index n_causal() const;
    /// sigma^2 = (pi^2/3) / (1 - h2_g - h2_b).
    double latent_scale() const;
};

void to_json(nlohmann::json& j, const SimConfig& config);
void from_json(const nlohmann::json& j, SimConfig& config);

/// Independent RNG streams derived from the config seed.
enum class SimStream : std::uint64_t {
    Genotypes = 1,
    KinshipVariants = 2,
    Covariates = 3,
    Truth = 4,
    Phenotype = 5,
    Split = 6,
};
std::mt19937_64 make_rng(std::uint64_t seed, SimStream stream);

/// Subpopulation of each sample: K equal blocks, remainder to the last.
std::vector<int> population_labels(Eigen::Index n, int K);

/// `n_variants` variants (defaults to config.p) drawn from the given stream.
/// Variants that come out monomorphic in the sample are redrawn.
GenotypeMatrix simulate_genotypes(const SimConfig& config, SimStream stream = SimStream::Genotypes,
                                  Eigen::Index n_variants = -1);

/// Intercept, Sex ~ Bernoulli, Age ~ Normal.
CovariateTable simulate_covariates(const SimConfig& config, const std::vector<std::string>& sample_ids);

struct SimTruth {
    std::vector<Eigen::Index> causal_indices;
    /// Effects per standardized genotype.
    Eigen::VectorXd beta_true;
    /// The same effects per allele copy: beta / sqrt(2 p (1 - p)).
    Eigen::VectorXd beta_true_raw;
    Eigen::VectorXd b_true;
    /// sum_j beta_j G~_j + b.
    Eigen::VectorXd latent_eta;
};

SimTruth simulate_truth(const GenotypeMatrix& genotypes, const Eigen::MatrixXd& V, const SimConfig& config);

/// pi_i from the logistic model with covariate columns named "sex" and "age".
Eigen::VectorXd phenotype_probabilities(const SimTruth& truth, const CovariateTable& covariates,
                                        const SimConfig& config);

Eigen::VectorXd simulate_phenotype(const SimTruth& truth, const CovariateTable& covariates,
                                   const SimConfig& config);

/// Kinship coefficients (half the GRM) from genotypes standardized with each
/// subpopulation's own allele frequencies, so that shared ancestry between
/// unrelated members of one subpopulation does not read as relatedness.
Eigen::MatrixXd within_population_kinship(const GenotypeMatrix& genotypes, const std::vector<int>& populations);

/// Relatedness edges are kinship coefficients strictly above this value.
inline constexpr double kRelatednessThreshold = 0.08838834764831845;  // 2^(-7/2)

struct SplitResult {
    /// Split index per sample, in `ratios` order.
    std::vector<int> labels;
    std::vector<std::string> warnings;
};

/// Assigns whole connected components of the relatedness graph to splits so
/// that split sizes approximate `ratios`.
SplitResult grouped_split(const Eigen::MatrixXd& kinship, const std::vector<double>& ratios, std::uint64_t seed);

nlohmann::json truth_to_json(const SimTruth& truth, const SimConfig& config,
                             const std::vector<std::string>& variant_ids);

}  // namespace pglmm
