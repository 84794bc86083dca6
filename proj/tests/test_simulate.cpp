#include "pglmm/error.hpp"
#include "pglmm/genotype.hpp"
#include "pglmm/kinship.hpp"
#include "pglmm/simulate.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

using namespace pglmm;

namespace {

SimConfig small_config(std::uint64_t seed = 3) {
    SimConfig c;
    c.n = 120;
    c.p = 200;
    c.c = 0.05;
    c.K = 3;
    c.seed = seed;
    return c;
}

std::vector<std::string> ids(Eigen::Index n) {
    std::vector<std::string> out;
    for (Eigen::Index i = 0; i < n; ++i) out.push_back("i" + std::to_string(i));
    return out;
}

SimTruth null_truth(Eigen::Index n, Eigen::Index p) {
    SimTruth t;
    t.beta_true = Eigen::VectorXd::Zero(p);
    t.beta_true_raw = Eigen::VectorXd::Zero(p);
    t.b_true = Eigen::VectorXd::Zero(n);
    t.latent_eta = Eigen::VectorXd::Zero(n);
    return t;
}

CovariateTable sex_age(const Eigen::VectorXd& sex, const Eigen::VectorXd& age) {
    CovariateTable t;
    t.column_names = {"intercept", "sex", "age"};
    t.values.resize(sex.size(), 3);
    t.values << Eigen::VectorXd::Ones(sex.size()), sex, age;
    t.sample_ids = ids(sex.size());
    return t;
}

}  // namespace

TEST(SimPhenotype, NullPrevalenceIsExact) {
    const SimConfig c = small_config();
    const Eigen::VectorXd pi =
        phenotype_probabilities(null_truth(4, 1), sex_age(Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4)), c);
    for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(pi[i], 0.1, 1e-15);
}

TEST(SimPhenotype, SexOddsRatio) {
    const SimConfig c = small_config();
    const Eigen::VectorXd pi =
        phenotype_probabilities(null_truth(2, 1), sex_age(Eigen::Vector2d(0.0, 1.0), Eigen::VectorXd::Zero(2)), c);
    const double odds0 = pi[0] / (1.0 - pi[0]);
    const double odds1 = pi[1] / (1.0 - pi[1]);
    EXPECT_NEAR(odds1 / odds0, 1.0 / 1.3, 1e-14);
}

TEST(SimPhenotype, AgeEffectPerDecade) {
    const SimConfig c = small_config();
    const Eigen::VectorXd pi =
        phenotype_probabilities(null_truth(2, 1), sex_age(Eigen::VectorXd::Zero(2), Eigen::Vector2d(40.0, 50.0)), c);
    EXPECT_NEAR((pi[1] / (1.0 - pi[1])) / (pi[0] / (1.0 - pi[0])), 1.05, 1e-13);
}

TEST(SimPhenotype, MonteCarloPrevalence) {
    SimConfig c = small_config(17);
    const Eigen::Index n = 100000;
    const Eigen::VectorXd y =
        simulate_phenotype(null_truth(n, 1), sex_age(Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)), c);
    EXPECT_NEAR(y.mean(), 0.1, 0.01);
    EXPECT_TRUE(((y.array() == 0.0) || (y.array() == 1.0)).all());
}

TEST(SimTruthDraws, ZeroHeritabilityComponents) {
    SimConfig c = small_config();
    c.h2_g = 0.0;
    const GenotypeMatrix g = simulate_genotypes(c);
    const Eigen::MatrixXd V = compute_grm(standardize(g));
    SimTruth t = simulate_truth(g, V, c);
    EXPECT_EQ(t.beta_true.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_GT(t.b_true.cwiseAbs().maxCoeff(), 0.0);
    c.h2_g = 0.5;
    c.h2_b = 0.0;
    t = simulate_truth(g, V, c);
    EXPECT_EQ(t.b_true.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(static_cast<Eigen::Index>(t.causal_indices.size()), c.n_causal());
}

TEST(SimTruthDraws, SupportMatchesCausalSet) {
    const SimConfig c = small_config();
    const GenotypeMatrix g = simulate_genotypes(c);
    const SimTruth t = simulate_truth(g, compute_grm(standardize(g)), c);
    ASSERT_EQ(t.causal_indices.size(), 10u);
    EXPECT_TRUE(std::is_sorted(t.causal_indices.begin(), t.causal_indices.end()));
    std::set<Eigen::Index> causal(t.causal_indices.begin(), t.causal_indices.end());
    EXPECT_EQ(causal.size(), 10u);
    for (Eigen::Index j = 0; j < c.p; ++j) {
        EXPECT_EQ(t.beta_true[j] != 0.0, causal.count(j) == 1) << j;
        EXPECT_EQ(t.beta_true_raw[j] != 0.0, causal.count(j) == 1) << j;
    }
    const Eigen::MatrixXd Gs = standardize(g);
    const Eigen::VectorXd fixed = Gs * t.beta_true;
    EXPECT_LT((t.latent_eta - fixed - t.b_true).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SimTruthDraws, FixedEffectVarianceOverSeeds) {
    double total = 0.0;
    SimConfig c = small_config();
    c.n = 200;
    c.p = 100;
    c.c = 0.1;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        c.seed = seed;
        const GenotypeMatrix g = simulate_genotypes(c);
        const Eigen::MatrixXd Gs = standardize(g);
        const SimTruth t = simulate_truth(g, Eigen::MatrixXd::Identity(c.n, c.n), c);
        const Eigen::VectorXd f = Gs * t.beta_true;
        total += (f.array() - f.mean()).square().sum() / static_cast<double>(c.n - 1);
    }
    const double expected = c.h2_g * c.latent_scale();
    EXPECT_NEAR(total / 200.0, expected, 0.15 * expected);
}

TEST(SimGenotypes, DivergedSubpopulationsShowInGrm) {
    SimConfig c = small_config();
    c.n = 100;
    c.p = 500;
    c.K = 2;
    c.fst_like = 0.3;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        c.seed = seed;
        const GenotypeMatrix g = simulate_genotypes(c);
        const Eigen::MatrixXd V = compute_grm(standardize(g));
        const std::vector<int> pop = population_labels(c.n, c.K);
        double within = 0.0;
        double between = 0.0;
        int n_within = 0;
        int n_between = 0;
        for (Eigen::Index i = 0; i < c.n; ++i) {
            for (Eigen::Index j = i + 1; j < c.n; ++j) {
                if (pop[i] == pop[j]) {
                    within += V(i, j);
                    ++n_within;
                } else {
                    between += V(i, j);
                    ++n_between;
                }
            }
        }
        EXPECT_GT(within / n_within, between / n_between) << "seed " << seed;
    }
}

TEST(SimGenotypes, HomogeneousPopulation) {
    SimConfig c = small_config();
    c.K = 1;
    c.fst_like = 1e-6;
    c.p = 2000;
    const Eigen::MatrixXd V = compute_grm(standardize(simulate_genotypes(c)));
    double off = 0.0;
    for (Eigen::Index i = 0; i < c.n; ++i)
        for (Eigen::Index j = i + 1; j < c.n; ++j) off += V(i, j);
    EXPECT_NEAR(off / (c.n * (c.n - 1) / 2.0), 0.0, 0.01);
}

TEST(SimGenotypes, DeterministicAndPolymorphic) {
    const SimConfig c = small_config(9);
    const GenotypeMatrix a = simulate_genotypes(c);
    const GenotypeMatrix b = simulate_genotypes(c);
    EXPECT_EQ(a.dosages, b.dosages);
    EXPECT_EQ(a.variant_ids, b.variant_ids);
    for (Eigen::Index j = 0; j < a.n_variants(); ++j) {
        EXPECT_GT(a.dosages.col(j).maxCoeff(), a.dosages.col(j).minCoeff()) << j;
    }
    EXPECT_TRUE(((a.dosages.array() == 0) || (a.dosages.array() == 1) || (a.dosages.array() == 2)).all());
    const GenotypeMatrix other = simulate_genotypes(c, SimStream::KinshipVariants, 50);
    EXPECT_EQ(other.n_variants(), 50);
    EXPECT_NE(other.dosages, a.dosages.leftCols(50));
    const SimTruth t1 = simulate_truth(a, compute_grm(standardize(a)), c);
    const SimTruth t2 = simulate_truth(a, compute_grm(standardize(a)), c);
    EXPECT_EQ(t1.beta_true, t2.beta_true);
    EXPECT_EQ(t1.b_true, t2.b_true);
    const CovariateTable cov = simulate_covariates(c, a.sample_ids);
    EXPECT_EQ(simulate_phenotype(t1, cov, c), simulate_phenotype(t2, cov, c));
}

TEST(SimSplit, IdentityKinshipSizes) {
    const SplitResult s = grouped_split(Eigen::MatrixXd::Identity(100, 100), {0.8, 0.2}, 5);
    ASSERT_EQ(s.labels.size(), 100u);
    EXPECT_EQ(std::count(s.labels.begin(), s.labels.end(), 0), 80);
    EXPECT_EQ(std::count(s.labels.begin(), s.labels.end(), 1), 20);
    EXPECT_TRUE(s.warnings.empty());
    const SplitResult three = grouped_split(Eigen::MatrixXd::Identity(100, 100), {0.6, 0.2, 0.2}, 5);
    for (int k = 0; k < 3; ++k) {
        const double expected = 100.0 * (k == 0 ? 0.6 : 0.2);
        EXPECT_LE(std::abs(std::count(three.labels.begin(), three.labels.end(), k) - expected), 1.0);
    }
}

TEST(SimSplit, FamiliesStayTogether) {
    Eigen::MatrixXd K = Eigen::MatrixXd::Identity(100, 100);
    const std::vector<int> family = {3, 17, 42, 58, 91};
    for (int a : family)
        for (int b : family)
            if (a != b) K(a, b) = 0.25;
    // A second, chained family: 10-11 and 11-12 related, 10-12 not.
    K(10, 11) = K(11, 10) = 0.1;
    K(11, 12) = K(12, 11) = 0.1;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const SplitResult s = grouped_split(K, {0.8, 0.2}, seed);
        for (int a : family) EXPECT_EQ(s.labels[a], s.labels[3]);
        EXPECT_EQ(s.labels[10], s.labels[12]);
        for (Eigen::Index i = 0; i < 100; ++i)
            for (Eigen::Index j = 0; j < 100; ++j)
                if (i != j && K(i, j) > kRelatednessThreshold) EXPECT_EQ(s.labels[i], s.labels[j]);
    }
}

TEST(SimSplit, ThresholdIsStrict) {
    Eigen::MatrixXd K = Eigen::MatrixXd::Identity(4, 4);
    K(0, 1) = K(1, 0) = kRelatednessThreshold;
    EXPECT_EQ(kRelatednessThreshold, std::pow(2.0, -3.5));
    bool apart = false;
    for (std::uint64_t seed = 1; seed <= 50 && !apart; ++seed) {
        const SplitResult s = grouped_split(K, {0.5, 0.5}, seed);
        apart = s.labels[0] != s.labels[1];
    }
    EXPECT_TRUE(apart);
}

TEST(SimSplit, OversizedComponentWarns) {
    const Eigen::MatrixXd K = Eigen::MatrixXd::Constant(10, 10, 0.5);
    const SplitResult s = grouped_split(K, {0.8, 0.2}, 1);
    EXPECT_FALSE(s.warnings.empty());
    EXPECT_TRUE(std::all_of(s.labels.begin(), s.labels.end(), [](int l) { return l == 0; }));
}

TEST(SimSplit, Deterministic) {
    const SplitResult a = grouped_split(Eigen::MatrixXd::Identity(50, 50), {0.7, 0.3}, 8);
    const SplitResult b = grouped_split(Eigen::MatrixXd::Identity(50, 50), {0.7, 0.3}, 8);
    EXPECT_EQ(a.labels, b.labels);
    EXPECT_THROW(grouped_split(Eigen::MatrixXd::Identity(5, 5), {0.7, 0.2}, 1), ArgumentError);
}

TEST(SimConfigTest, ValidationAndJson) {
    SimConfig c = small_config();
    EXPECT_NO_THROW(c.validate());
    EXPECT_DOUBLE_EQ(c.latent_scale(), (M_PI * M_PI / 3.0) / (1.0 - 0.9));
    SimConfig bad = c;
    bad.h2_g = 0.6;
    EXPECT_THROW(bad.validate(), ArgumentError);
    bad = c;
    bad.c = 0.001;
    EXPECT_THROW(bad.validate(), ArgumentError);
    bad = c;
    bad.pi0 = 1.0;
    EXPECT_THROW(bad.validate(), ArgumentError);

    nlohmann::json j = c;
    const SimConfig back = j.get<SimConfig>();
    EXPECT_EQ(nlohmann::json(back), j);
    EXPECT_EQ(back.seed, c.seed);
    EXPECT_EQ(back.split_ratios, c.split_ratios);
}

TEST(SimTruthJson, RecordsBothScales) {
    const SimConfig c = small_config();
    const GenotypeMatrix g = simulate_genotypes(c);
    const SimTruth t = simulate_truth(g, compute_grm(standardize(g)), c);
    const nlohmann::json j = truth_to_json(t, c, g.variant_ids);
    EXPECT_EQ(j.at("causal_indices").size(), t.causal_indices.size());
    EXPECT_EQ(j.dump(), truth_to_json(t, c, g.variant_ids).dump());
    const std::string text = j.dump();
    EXPECT_NE(text.find("beta_true"), std::string::npos);
    EXPECT_NE(text.find("seed"), std::string::npos);
}

TEST(SimSplit, WithinPopulationKinshipSeparatesAncestryFromRelatedness) {
    SimConfig c = small_config(4);
    c.n = 200;
    c.p = 1000;
    c.K = 4;
    c.fst_like = 0.2;
    GenotypeMatrix g = simulate_genotypes(c);
    g.dosages.row(7) = g.dosages.row(8);  // a duplicate sample inside population 0
    const std::vector<int> pop = population_labels(c.n, c.K);
    const Eigen::MatrixXd kin = within_population_kinship(g, pop);
    EXPECT_GT(kin(7, 8), kRelatednessThreshold);
    int edges = 0;
    for (Eigen::Index i = 0; i < c.n; ++i)
        for (Eigen::Index j = i + 1; j < c.n; ++j) edges += kin(i, j) > kRelatednessThreshold;
    EXPECT_EQ(edges, 1);
    const SplitResult s = grouped_split(kin, {0.8, 0.2}, 2);
    EXPECT_EQ(s.labels[7], s.labels[8]);
    EXPECT_EQ(std::count(s.labels.begin(), s.labels.end(), 1), 40);
}
