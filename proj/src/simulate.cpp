#include "pglmm/simulate.hpp"

#include "pglmm/error.hpp"
#include "pglmm/kinship.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace pglmm {

void SimConfig::validate() const {
    if (n < 2) throw ArgumentError("simulation needs n >= 2");
    if (p < 1) throw ArgumentError("simulation needs p >= 1");
    if (!(c > 0.0 && c <= 1.0)) throw ArgumentError("causal fraction c must lie in (0, 1]");
    if (!(h2_g >= 0.0 && h2_g < 1.0) || !(h2_b >= 0.0 && h2_b < 1.0) || !(h2_g + h2_b < 1.0)) {
        throw ArgumentError("need h2_g, h2_b in [0, 1) with h2_g + h2_b < 1");
    }
    if (!(pi0 > 0.0 && pi0 < 1.0)) throw ArgumentError("pi0 must lie in (0, 1)");
    if (K < 1 || K > n) throw ArgumentError("K must lie in [1, n]");
    if (!(fst_like > 0.0 && fst_like < 0.5)) throw ArgumentError("fst_like must lie in (0, 0.5)");
    if (n_kinship_variants < 0) throw ArgumentError("n_kinship_variants must be nonnegative");
    if (!(age_sd >= 0.0)) throw ArgumentError("age_sd must be nonnegative");
    if (!(sex_probability >= 0.0 && sex_probability <= 1.0)) throw ArgumentError("sex_probability must lie in [0, 1]");
    if (n_causal() < 1) throw ArgumentError("round(p * c) must be at least 1");
}

Eigen::Index SimConfig::n_causal() const {
    return static_cast<Eigen::Index>(std::llround(static_cast<double>(p) * c));
}

double SimConfig::latent_scale() const {
    return (std::numbers::pi * std::numbers::pi / 3.0) / (1.0 - h2_g - h2_b);
}

void to_json(nlohmann::json& j, const SimConfig& config) {
    j = nlohmann::json{{"n", config.n},
                       {"p", config.p},
                       {"c", config.c},
                       {"h2_g", config.h2_g},
                       {"h2_b", config.h2_b},
                       {"pi0", config.pi0},
                       {"K", config.K},
                       {"fst_like", config.fst_like},
                       {"seed", config.seed},
                       {"n_kinship_variants", config.n_kinship_variants},
                       {"age_mean", config.age_mean},
                       {"age_sd", config.age_sd},
                       {"sex_probability", config.sex_probability},
                       {"split_ratios", config.split_ratios}};
}

void from_json(const nlohmann::json& j, SimConfig& config) {
    SimConfig d;
    config.n = j.value("n", d.n);
    config.p = j.value("p", d.p);
    config.c = j.value("c", d.c);
    config.h2_g = j.value("h2_g", d.h2_g);
    config.h2_b = j.value("h2_b", d.h2_b);
    config.pi0 = j.value("pi0", d.pi0);
    config.K = j.value("K", d.K);
    config.fst_like = j.value("fst_like", d.fst_like);
    config.seed = j.value("seed", d.seed);
    config.n_kinship_variants = j.value("n_kinship_variants", d.n_kinship_variants);
    config.age_mean = j.value("age_mean", d.age_mean);
    config.age_sd = j.value("age_sd", d.age_sd);
    config.sex_probability = j.value("sex_probability", d.sex_probability);
    config.split_ratios = j.value("split_ratios", d.split_ratios);
}

std::mt19937_64 make_rng(std::uint64_t seed, SimStream stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xFFFFFFFFu), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

std::vector<int> population_labels(Eigen::Index n, int K) {
    if (K < 1) throw ArgumentError("K must be positive");
    const Eigen::Index block = n / K;
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        labels[static_cast<std::size_t>(i)] = block == 0 ? 0 : static_cast<int>(std::min<Eigen::Index>(i / block, K - 1));
    }
    return labels;
}

namespace {

double draw_beta(std::mt19937_64& rng, double a, double b) {
    std::gamma_distribution<double> ga(a, 1.0);
    std::gamma_distribution<double> gb(b, 1.0);
    const double x = ga(rng);
    const double y = gb(rng);
    return x / (x + y);
}

double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

GenotypeMatrix simulate_genotypes(const SimConfig& config, SimStream stream, Eigen::Index n_variants) {
    config.validate();
    const Eigen::Index p = n_variants < 0 ? config.p : n_variants;
    const Eigen::Index n = config.n;
    auto rng = make_rng(config.seed, stream);
    const auto population = population_labels(n, config.K);
    const double F = config.fst_like;

    GenotypeMatrix g;
    g.dosages.resize(n, p);
    std::uniform_real_distribution<double> ancestral(0.1, 0.9);
    std::vector<double> freq(static_cast<std::size_t>(config.K));
    for (Eigen::Index j = 0; j < p; ++j) {
        for (;;) {
            const double pa = ancestral(rng);
            for (auto& f : freq) {
                do {
                    f = draw_beta(rng, pa * (1.0 - F) / F, (1.0 - pa) * (1.0 - F) / F);
                } while (!(f > 0.0 && f < 1.0));
            }
            double total = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                std::binomial_distribution<int> draw(2, freq[static_cast<std::size_t>(population[static_cast<std::size_t>(i)])]);
                g.dosages(i, j) = draw(rng);
                total += g.dosages(i, j);
            }
            if (total > 0.0 && total < 2.0 * static_cast<double>(n)) break;
        }
    }
    const std::string prefix = stream == SimStream::KinshipVariants ? "k" : "snp";
    for (Eigen::Index i = 0; i < n; ++i) g.sample_ids.push_back("s" + std::to_string(i + 1));
    for (Eigen::Index j = 0; j < p; ++j) g.variant_ids.push_back(prefix + std::to_string(j + 1));
    g.allele_freqs = compute_allele_freqs(g.dosages);
    return g;
}

CovariateTable simulate_covariates(const SimConfig& config, const std::vector<std::string>& sample_ids) {
    auto rng = make_rng(config.seed, SimStream::Covariates);
    const auto n = static_cast<Eigen::Index>(sample_ids.size());
    CovariateTable t;
    t.sample_ids = sample_ids;
    t.column_names = {"intercept", "sex", "age"};
    t.values.resize(n, 3);
    std::bernoulli_distribution sex(config.sex_probability);
    std::normal_distribution<double> age(config.age_mean, config.age_sd);
    for (Eigen::Index i = 0; i < n; ++i) {
        t.values(i, 0) = 1.0;
        t.values(i, 1) = sex(rng) ? 1.0 : 0.0;
        t.values(i, 2) = age(rng);
    }
    return t;
}

SimTruth simulate_truth(const GenotypeMatrix& genotypes, const Eigen::MatrixXd& V, const SimConfig& config) {
    config.validate();
    const Eigen::Index n = genotypes.n_samples();
    const Eigen::Index p = genotypes.n_variants();
    if (V.rows() != n || V.cols() != n) throw DataError("kinship does not match the genotype sample count");
    auto rng = make_rng(config.seed, SimStream::Truth);
    const double sigma2 = config.latent_scale();

    SimTruth truth;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const Eigen::Index n_causal = std::min(config.n_causal(), p);
    truth.causal_indices.assign(order.begin(), order.begin() + n_causal);
    std::sort(truth.causal_indices.begin(), truth.causal_indices.end());

    truth.beta_true = Eigen::VectorXd::Zero(p);
    truth.beta_true_raw = Eigen::VectorXd::Zero(p);
    std::normal_distribution<double> unit(0.0, 1.0);
    const double beta_sd = std::sqrt(config.h2_g * sigma2 / static_cast<double>(n_causal));
    for (Eigen::Index j : truth.causal_indices) {
        truth.beta_true[j] = beta_sd * unit(rng);
        const double f = genotypes.allele_freqs[j];
        truth.beta_true_raw[j] = truth.beta_true[j] / std::sqrt(2.0 * f * (1.0 - f));
    }

    truth.b_true = Eigen::VectorXd::Zero(n);
    if (config.h2_b > 0.0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(V);
        if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition of the kinship failed");
        Eigen::VectorXd z(n);
        for (Eigen::Index i = 0; i < n; ++i) z[i] = unit(rng);
        const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        truth.b_true = std::sqrt(config.h2_b * sigma2) * (eig.eigenvectors() * root.cwiseProduct(z));
    }

    const Eigen::MatrixXd G = standardize(genotypes);
    truth.latent_eta = G * truth.beta_true + truth.b_true;
    return truth;
}

Eigen::VectorXd phenotype_probabilities(const SimTruth& truth, const CovariateTable& covariates,
                                        const SimConfig& config) {
    const auto column = [&](const std::string& name) {
        const auto it = std::find(covariates.column_names.begin(), covariates.column_names.end(), name);
        if (it == covariates.column_names.end()) throw DataError("covariates lack a '" + name + "' column");
        return static_cast<Eigen::Index>(it - covariates.column_names.begin());
    };
    const Eigen::Index sex = column("sex");
    const Eigen::Index age = column("age");
    const Eigen::Index n = covariates.values.rows();
    if (truth.latent_eta.size() != n) throw DataError("truth and covariates differ in sample count");
    const double base = std::log(config.pi0 / (1.0 - config.pi0));
    Eigen::VectorXd pi(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double eta = base - std::log(1.3) * covariates.values(i, sex) +
                           std::log(1.05) * covariates.values(i, age) / 10.0 + truth.latent_eta[i];
        if (!std::isfinite(eta)) throw NumericalError("non-finite simulated linear predictor");
        pi[i] = logistic(eta);
    }
    return pi;
}

Eigen::VectorXd simulate_phenotype(const SimTruth& truth, const CovariateTable& covariates,
                                   const SimConfig& config) {
    const Eigen::VectorXd pi = phenotype_probabilities(truth, covariates, config);
    auto rng = make_rng(config.seed, SimStream::Phenotype);
    Eigen::VectorXd y(pi.size());
    for (Eigen::Index i = 0; i < pi.size(); ++i) {
        std::bernoulli_distribution draw(pi[i]);
        y[i] = draw(rng) ? 1.0 : 0.0;
    }
    return y;
}

Eigen::MatrixXd within_population_kinship(const GenotypeMatrix& genotypes, const std::vector<int>& populations) {
    const Eigen::Index n = genotypes.n_samples();
    if (static_cast<Eigen::Index>(populations.size()) != n) {
        throw DataError("population labels do not match the genotype sample count");
    }
    const Eigen::MatrixXd& G = genotypes.dosages;
    Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(n, G.cols());
    const int n_pop = populations.empty() ? 0 : *std::max_element(populations.begin(), populations.end()) + 1;
    for (int k = 0; k < n_pop; ++k) {
        std::vector<Eigen::Index> rows;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (populations[static_cast<std::size_t>(i)] == k) rows.push_back(i);
        }
        if (rows.empty()) continue;
        for (Eigen::Index j = 0; j < G.cols(); ++j) {
            double sum = 0.0;
            for (Eigen::Index i : rows) sum += G(i, j);
            const double f = sum / (2.0 * static_cast<double>(rows.size()));
            const double sd = std::sqrt(2.0 * f * (1.0 - f));
            if (sd <= 0.0) continue;
            for (Eigen::Index i : rows) Z(i, j) = (G(i, j) - 2.0 * f) / sd;
        }
    }
    return 0.5 * compute_grm(Z);
}

SplitResult grouped_split(const Eigen::MatrixXd& kinship, const std::vector<double>& ratios, std::uint64_t seed) {
    const Eigen::Index n = kinship.rows();
    if (kinship.cols() != n) throw DataError("kinship must be square");
    if (ratios.empty()) throw ArgumentError("need at least one split ratio");
    double total = 0.0;
    for (double r : ratios) {
        if (!(r >= 0.0)) throw ArgumentError("split ratios must be nonnegative");
        total += r;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ArgumentError("split ratios must sum to 1");

    std::vector<Eigen::Index> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    const auto find = [&](Eigen::Index i) {
        while (parent[static_cast<std::size_t>(i)] != i) {
            auto& up = parent[static_cast<std::size_t>(i)];
            up = parent[static_cast<std::size_t>(up)];
            i = up;
        }
        return i;
    };
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (kinship(i, j) > kRelatednessThreshold || kinship(j, i) > kRelatednessThreshold) {
                const Eigen::Index a = find(i);
                const Eigen::Index b = find(j);
                if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
            }
        }
    }
    std::vector<std::vector<Eigen::Index>> components;
    std::vector<Eigen::Index> slot(static_cast<std::size_t>(n), -1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index root = find(i);
        auto& s = slot[static_cast<std::size_t>(root)];
        if (s < 0) {
            s = static_cast<Eigen::Index>(components.size());
            components.emplace_back();
        }
        components[static_cast<std::size_t>(s)].push_back(i);
    }

    auto rng = make_rng(seed, SimStream::Split);
    std::shuffle(components.begin(), components.end(), rng);
    std::stable_sort(components.begin(), components.end(),
                     [](const auto& a, const auto& b) { return a.size() > b.size(); });

    SplitResult out;
    out.labels.assign(static_cast<std::size_t>(n), 0);
    const double largest = *std::max_element(ratios.begin(), ratios.end()) * static_cast<double>(n);
    std::vector<double> filled(ratios.size(), 0.0);
    for (const auto& comp : components) {
        std::size_t target = 0;
        if (static_cast<double>(comp.size()) > largest) {
            out.warnings.push_back("a related group of " + std::to_string(comp.size()) +
                                   " samples exceeds the largest split; assigned to the first split");
        } else {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < ratios.size(); ++k) {
                const double deficit = ratios[k] * static_cast<double>(n) - filled[k];
                if (deficit > best) {
                    best = deficit;
                    target = k;
                }
            }
        }
        filled[target] += static_cast<double>(comp.size());
        for (Eigen::Index i : comp) out.labels[static_cast<std::size_t>(i)] = static_cast<int>(target);
    }
    return out;
}

nlohmann::json truth_to_json(const SimTruth& truth, const SimConfig& config,
                             const std::vector<std::string>& variant_ids) {
    const auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    nlohmann::json j;
    j["genotype_model"] = "independent subpopulations, Balding-Nichols frequencies (not BN-PSD admixture)";
    j["config"] = config;
    j["sigma2"] = config.latent_scale();
    j["causal_indices"] = truth.causal_indices;
    std::vector<std::string> ids;
    for (Eigen::Index k : truth.causal_indices) ids.push_back(variant_ids.at(static_cast<std::size_t>(k)));
    j["causal_variant_ids"] = ids;
    j["beta_true_standardized"] = vec(truth.beta_true);
    j["beta_true_per_allele"] = vec(truth.beta_true_raw);
    j["b_true"] = vec(truth.b_true);
    return j;
}

}  // namespace pglmm
