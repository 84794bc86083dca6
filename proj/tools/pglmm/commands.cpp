#include "commands.hpp"

#include "manifest.hpp"
#include "run_dir.hpp"

#include "pglmm/delimited.hpp"
#include "pglmm/error.hpp"
#include "pglmm/kinship.hpp"
#include "pglmm/metrics.hpp"
#include "pglmm/null_reml.hpp"
#include "pglmm/penalized_path.hpp"
#include "pglmm/plink.hpp"
#include "pglmm/predict.hpp"
#include "pglmm/selection.hpp"
#include "pglmm/simulate.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace fs = std::filesystem;

namespace pglmm::cli {

namespace {

fs::path with_extension(const std::string& path, const std::string& ext) {
    fs::path p(path);
    p.replace_extension(ext);
    return p;
}

GenotypeMatrix load_genotypes(const GenotypeInput& in, RunManifest& manifest) {
    if (!in.bed.empty() && !in.csv.empty()) throw ArgumentError("give either --bed or --csv genotypes, not both");
    if (!in.bed.empty()) {
        const fs::path bim = in.bim.empty() ? with_extension(in.bed, ".bim") : fs::path(in.bim);
        const fs::path fam = in.fam.empty() ? with_extension(in.bed, ".fam") : fs::path(in.fam);
        manifest.input(in.bed);
        manifest.input(bim);
        manifest.input(fam);
        return plink::read_bed(in.bed, bim, fam);
    }
    if (!in.csv.empty()) {
        manifest.input(in.csv);
        return read_genotypes_delimited(in.csv);
    }
    throw ArgumentError("no genotypes given (use --bed or --csv)");
}

std::vector<std::string> read_id_list(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream fields(line);
        std::string id;
        if (fields >> id && id[0] != '#') ids.push_back(id);
    }
    return ids;
}

std::unordered_map<std::string, double> read_penalty_factors(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    std::unordered_map<std::string, double> out;
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        std::istringstream fields(line);
        std::string name;
        if (!(fields >> name) || name[0] == '#') continue;
        double v = 0.0;
        if (!(fields >> v)) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected '<column> <factor>'");
        }
        out[name] = v;
    }
    return out;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw FormatError(path.string() + " is not valid JSON");
    return j;
}

fs::path output_dir_of(const fs::path& file) {
    return file.has_parent_path() ? file.parent_path() : fs::path(".");
}

void ensure_parent(const fs::path& file) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

KinshipSet load_kinship_set(const std::vector<std::string>& paths, const std::vector<std::string>& ids,
                            RunManifest* manifest) {
    KinshipSet set;
    set.sample_ids = ids;
    for (const auto& p : paths) {
        if (manifest) manifest->input(p);
        set.matrices.push_back(read_kinship(p).select(ids).matrix);
    }
    return set;
}

/// Test-sample design with the fit's non-PC columns, plus the cross-relatedness block.
struct TestDesign {
    std::vector<std::string> ids;
    Eigen::MatrixXd X;
    Eigen::MatrixXd V12;
};

TestDesign build_test_design(const RunModel& model, const TestInput& input, RunManifest& manifest) {
    GenotypeMatrix g = load_genotypes(input.genotypes, manifest);
    if (!input.keep.empty()) {
        manifest.input(input.keep);
        g = g.select_samples(read_id_list(input.keep));
    }
    TestDesign t;
    t.ids = g.sample_ids;

    const std::unordered_set<std::string> training(model.training_ids.begin(), model.training_ids.end());
    for (const auto& id : t.ids) {
        if (training.count(id)) throw DataError("test sample '" + id + "' was used for training");
    }

    CovariateTable cov = CovariateTable::intercept_only(t.ids);
    if (!input.covar.empty()) {
        manifest.input(input.covar);
        cov = read_covariates(input.covar).select_samples(t.ids);
    }
    const Eigen::Index m_user = model.n_covariates - model.pcs;
    if (cov.values.cols() != m_user) {
        throw DataError("test covariates have " + std::to_string(cov.values.cols()) + " columns, the model expects " +
                        std::to_string(m_user));
    }
    for (Eigen::Index c = 0; c < m_user; ++c) {
        if (cov.column_names[static_cast<std::size_t>(c)] != model.column_names[static_cast<std::size_t>(c)]) {
            throw DataError("test covariate '" + cov.column_names[static_cast<std::size_t>(c)] +
                            "' does not match model column '" + model.column_names[static_cast<std::size_t>(c)] + "'");
        }
    }

    std::unordered_map<std::string, Eigen::Index> variant;
    for (Eigen::Index j = 0; j < g.n_variants(); ++j) variant[g.variant_ids[static_cast<std::size_t>(j)]] = j;
    const Eigen::Index p = static_cast<Eigen::Index>(model.column_names.size()) - model.n_covariates;
    const Eigen::Index n_s = static_cast<Eigen::Index>(t.ids.size());
    t.X.resize(n_s, m_user + p);
    t.X.leftCols(m_user) = cov.values;
    for (Eigen::Index j = 0; j < p; ++j) {
        const auto& name = model.column_names[static_cast<std::size_t>(model.n_covariates + j)];
        const auto it = variant.find(name);
        if (it == variant.end()) throw DataError("test genotypes lack model variant '" + name + "'");
        auto col = g.dosages.col(it->second);
        // Missing calls take the test-set mean dosage.
        double sum = 0.0;
        Eigen::Index count = 0;
        for (Eigen::Index i = 0; i < n_s; ++i) {
            if (!std::isnan(col[i])) {
                sum += col[i];
                ++count;
            }
        }
        const double fill = count > 0 ? sum / static_cast<double>(count) : 0.0;
        for (Eigen::Index i = 0; i < n_s; ++i) t.X(i, m_user + j) = std::isnan(col[i]) ? fill : col[i];
    }

    const bool needs_cross = model.pcs > 0 || (model.theta.tau.array() > 0.0).any();
    if (needs_cross) {
        if (input.cross_grm.empty()) throw ArgumentError("this model needs --cross-grm");
        manifest.input(input.cross_grm);
        t.V12 = read_kinship(input.cross_grm).block(t.ids, model.training_ids);
    } else {
        t.V12 = Eigen::MatrixXd::Zero(n_s, static_cast<Eigen::Index>(model.training_ids.size()));
    }
    return t;
}

/// Prediction for the run's model kind: PC-adjusted GLM for baseline runs,
/// the GLMM conditional mean otherwise.
class RunPredictor {
public:
    RunPredictor(const RunModel& model, RunManifest& manifest) : model_(model) {
        const bool positive_tau = (model.theta.tau.array() > 0.0).any();
        KinshipSet kin;
        kin.sample_ids = model.training_ids;
        if (positive_tau || model.pcs > 0) {
            kin = load_kinship_set(model.grm_paths, model.training_ids, &manifest);
        }
        if (model.pcs > 0) {
            pcs_ = top_pcs(kin.matrices.at(0), model.pcs);
            kin.matrices.clear();
        }
        fit_ = to_path_fit(model, kin);
    }

    const PathFit& fit() const { return fit_; }

    Prediction predict(std::size_t k, const TestDesign& t) const {
        if (model_.pcs > 0) return predict_glm_pc(fit_, k, pcs_, model_.pc_first_column, t.X, t.V12);
        return predict_glmm(fit_, k, t.X, t.V12);
    }

private:
    const RunModel& model_;
    PathFit fit_;
    PcBasis pcs_;
};

void check_lambda_index(int index, std::size_t size) {
    if (index < 0 || static_cast<std::size_t>(index) >= size) {
        throw ArgumentError("lambda index " + std::to_string(index) + " is out of range [0, " +
                            std::to_string(size) + ")");
    }
}

}  // namespace

// ---------------------------------------------------------------------------

void run_grm(const GrmArgs& args) {
    RunManifest manifest("grm");
    manifest.option("maf", args.maf);
    manifest.option("max_missing", args.max_missing);
    GenotypeMatrix raw = load_genotypes(args.genotypes, manifest);
    FilterReport report;
    const GenotypeMatrix g = impute_and_filter(raw, args.maf, args.max_missing, &report);
    manifest.stage("read");
    std::optional<std::vector<Eigen::Index>> subset;
    if (!args.extract.empty()) {
        manifest.input(args.extract);
        std::unordered_map<std::string, Eigen::Index> column;
        for (Eigen::Index j = 0; j < g.n_variants(); ++j) column[g.variant_ids[static_cast<std::size_t>(j)]] = j;
        subset.emplace();
        for (const auto& id : read_id_list(args.extract)) {
            const auto it = column.find(id);
            if (it != column.end()) subset->push_back(it->second);
        }
        if (subset->empty()) throw DataError("none of the --extract variants survived filtering");
    }
    PsdRepair repair;
    Kinship k{compute_grm(standardize(g), subset, &repair), g.sample_ids};
    manifest.stage("grm");

    fs::path out(args.out);
    if (out.extension() != ".grm") out += ".grm";
    ensure_parent(out);
    write_kinship(out, k);
    manifest.output(out);
    manifest.output(kinship_id_path(out));
    manifest.option("variants_used", subset ? static_cast<Eigen::Index>(subset->size()) : g.n_variants());
    manifest.option("dropped_missing", report.dropped_missing);
    manifest.option("dropped_maf", report.dropped_maf);
    manifest.option("psd_repaired", repair.repaired);
    manifest.write(output_dir_of(out));
    std::cerr << "wrote " << out.string() << " (" << k.sample_ids.size() << " samples)\n";
}

void run_fit(const FitArgs& args) {
    RunManifest manifest("fit");
    const FamilySpec family =
        parse_family(args.family) == FamilyKind::BinomialLogit ? FamilySpec::binomial() : FamilySpec::gaussian();
    manifest.option("family", family_name(family.kind));
    manifest.option("grm", args.grm);
    manifest.option("nlambda", args.nlambda);
    if (args.lambda_min_ratio) manifest.option("lambda_min_ratio", *args.lambda_min_ratio);
    if (args.pcs) manifest.option("pcs", *args.pcs);
    manifest.option("standardize", !args.no_standardize);
    manifest.option("force", args.force);

    if (args.pcs && *args.pcs > 0 && args.grm.empty()) throw ArgumentError("--pcs needs --grm to compute PCs");
    if (args.pcs && *args.pcs < 0) throw ArgumentError("--pcs must be nonnegative");

    manifest.input(args.pheno);
    PhenotypeVector pheno = read_phenotype(args.pheno, args.pheno_column);
    std::vector<std::string> ids;
    std::unordered_set<std::string> keep;
    if (!args.keep.empty()) {
        manifest.input(args.keep);
        for (auto& id : read_id_list(args.keep)) keep.insert(id);
    }
    for (std::size_t i = 0; i < pheno.sample_ids.size(); ++i) {
        if (std::isnan(pheno.values[static_cast<Eigen::Index>(i)])) continue;
        if (!keep.empty() && !keep.count(pheno.sample_ids[i])) continue;
        ids.push_back(pheno.sample_ids[i]);
    }
    if (ids.empty()) throw DataError("no samples with a phenotype remain");
    pheno = pheno.select_samples(ids);

    const GenotypeMatrix g = impute_and_filter(load_genotypes(args.genotypes, manifest).select_samples(ids),
                                               args.maf, args.max_missing);
    CovariateTable cov = CovariateTable::intercept_only(ids);
    if (!args.covar.empty()) {
        manifest.input(args.covar);
        cov = read_covariates(args.covar).select_samples(ids);
    }
    manifest.stage("read");

    KinshipSet kinship = load_kinship_set(args.grm, ids, &manifest);
    RunMetadata meta;
    meta.grm_paths = args.grm;
    meta.training_ids = ids;
    if (args.pcs) {
        meta.baseline = true;
        meta.pcs = *args.pcs;
        meta.pc_first_column = cov.values.cols();
        if (meta.pcs > 0) {
            const PcBasis pcs = top_pcs(kinship.matrices.at(0), meta.pcs);
            const Eigen::MatrixXd scores = pcs.scores();
            Eigen::MatrixXd values(cov.values.rows(), cov.values.cols() + meta.pcs);
            values << cov.values, scores;
            cov.values = values;
            for (Eigen::Index k = 0; k < meta.pcs; ++k) cov.column_names.push_back("PC" + std::to_string(k + 1));
        }
        kinship.matrices.clear();
    }

    NullFitOptions null_options;
    null_options.tol = args.reml_tol;
    null_options.max_iter = args.reml_max_iter;
    const NullModelFit null = fit_null(pheno.values, cov.values, kinship, family, null_options);
    manifest.stage("null_fit");

    const RunFiles files{args.out};
    fs::create_directories(files.dir);
    write_null_fit(files.null_json(), files.null_bin(), null, family);
    manifest.output(files.null_json());
    manifest.output(files.null_bin());
    if (!null.converged && !args.force) {
        manifest.write(files.dir);
        throw NumericalError("null model did not converge after " + std::to_string(null.n_iterations) +
                             " iterations (use --force to continue)");
    }

    const Design design = make_design(cov, g);
    PathOptions options;
    options.n_lambda = args.nlambda;
    options.lambda_min_ratio = args.lambda_min_ratio;
    options.inner_tol = args.inner_tol;
    options.outer_tol = args.outer_tol;
    options.max_outer = args.max_outer;
    options.standardize_design = !args.no_standardize;
    options.allow_unconverged_null = args.force;
    if (!args.penalty_factor.empty()) {
        manifest.input(args.penalty_factor);
        options.penalty_factors = design.default_penalty_factors();
        const auto overrides = read_penalty_factors(args.penalty_factor);
        std::unordered_set<std::string> seen;
        for (std::size_t j = 0; j < design.column_names.size(); ++j) {
            const auto it = overrides.find(design.column_names[j]);
            if (it != overrides.end()) {
                options.penalty_factors[static_cast<Eigen::Index>(j)] = it->second;
                seen.insert(it->first);
            }
        }
        for (const auto& [name, _] : overrides) {
            if (!seen.count(name)) throw DataError("penalty factor given for unknown column '" + name + "'");
        }
    }
    const PathFit fit = fit_path(null, design, pheno.values, kinship, family, options);
    manifest.stage("path_fit");

    meta.options = {{"family", family_name(family.kind)},
                    {"nlambda", args.nlambda},
                    {"standardize", !args.no_standardize},
                    {"outer_tol", args.outer_tol},
                    {"max_outer", args.max_outer},
                    {"maf", args.maf},
                    {"max_missing", args.max_missing}};
    for (const auto& p : write_path_outputs(files, fit, meta)) manifest.output(p);
    manifest.stage("write");
    manifest.write(files.dir);
    std::cerr << "fit " << fit.size() << " lambda values; tau = [";
    for (Eigen::Index s = 0; s < null.theta.tau.size(); ++s) std::cerr << (s ? ", " : "") << null.theta.tau[s];
    std::cerr << "]\n";
}

void run_select(const SelectArgs& args) {
    RunManifest manifest("select");
    manifest.option("criterion", args.criterion);
    const RunFiles files{args.model};
    const RunModel model = read_run(files);
    const SelectionCriterion criterion = SelectionCriterion::parse(args.criterion);

    nlohmann::json entry;
    std::size_t chosen = 0;
    if (criterion.kind == SelectionCriterion::Kind::ValidationAuc) {
        if (args.validation_pheno.empty()) throw ArgumentError("val-auc needs --valid-pheno");
        RunPredictor predictor(model, manifest);
        const TestDesign t = build_test_design(model, args.validation, manifest);
        manifest.input(args.validation_pheno);
        const PhenotypeVector labels = read_phenotype(args.validation_pheno).select_samples(t.ids);
        std::vector<double> auc;
        for (std::size_t k = 0; k < model.size(); ++k) {
            auc.push_back(metric_auc(predictor.predict(k, t).eta, labels.values));
        }
        chosen = argmax_first(auc);
        entry["values"] = auc;
    } else {
        // The criteria only need each point's log-likelihood and df.
        PathFit with_components;
        with_components.theta = model.theta;
        for (std::size_t k = 0; k < model.size(); ++k) {
            PathPoint point;
            point.pql_loglik = model.pql_loglik[k];
            point.df = model.df[k];
            with_components.points.push_back(point);
        }
        const auto values = gic(with_components, criterion.weight(model.y.size()));
        chosen = argmin_first(values);
        entry["values"] = values;
        entry["a_n"] = criterion.weight(model.y.size());
    }
    entry["lambda_index"] = chosen;
    entry["lambda"] = model.lambdas[chosen];
    entry["df"] = model.df[chosen];

    nlohmann::json all = nlohmann::json::object();
    if (fs::exists(files.selection_json())) all = read_json(files.selection_json());
    all[args.criterion] = entry;
    write_json(files.selection_json(), all);
    manifest.output(files.selection_json());
    manifest.write(files.dir);
    std::cout << chosen << '\n';
}

void run_predict(const PredictArgs& args) {
    RunManifest manifest("predict");
    manifest.option("lambda_index", args.lambda_index);
    const RunModel model = read_run(RunFiles{args.model});
    check_lambda_index(args.lambda_index, model.size());
    RunPredictor predictor(model, manifest);
    const TestDesign t = build_test_design(model, args.test, manifest);
    const Prediction pred = predictor.predict(static_cast<std::size_t>(args.lambda_index), t);

    const fs::path out(args.out);
    ensure_parent(out);
    std::ofstream file(out);
    if (!file) throw FormatError("cannot write " + out.string());
    file << "id\tscore\n";
    for (std::size_t i = 0; i < t.ids.size(); ++i) {
        file << t.ids[i] << '\t' << format_double(pred.mu[static_cast<Eigen::Index>(i)]) << '\n';
    }
    manifest.output(out);
    manifest.write(output_dir_of(out));
}

void run_simulate(const SimulateArgs& args) {
    RunManifest manifest("simulate");
    SimConfig config;
    if (!args.config.empty()) {
        manifest.input(args.config);
        config = read_json(args.config).get<SimConfig>();
    }
    if (args.seed) config.seed = *args.seed;
    config.validate();
    manifest.option("config", config);
    if (args.format != "bed" && args.format != "csv") throw ArgumentError("--format must be bed or csv");

    const fs::path dir(args.out);
    fs::create_directories(dir);
    const GenotypeMatrix g = simulate_genotypes(config);
    Eigen::MatrixXd V;
    if (config.n_kinship_variants > 0) {
        const GenotypeMatrix extra = simulate_genotypes(config, SimStream::KinshipVariants, config.n_kinship_variants);
        V = compute_grm(standardize(extra));
    } else {
        V = compute_grm(standardize(g));
    }
    const CovariateTable cov = simulate_covariates(config, g.sample_ids);
    const SimTruth truth = simulate_truth(g, V, config);
    const Eigen::VectorXd y = simulate_phenotype(truth, cov, config);
    const SplitResult split = grouped_split(within_population_kinship(g, population_labels(config.n, config.K)),
                                            config.split_ratios, config.seed);
    manifest.stage("simulate");

    std::vector<fs::path> outputs;
    if (args.format == "bed") {
        plink::write_bed(dir / "genotypes", g);
        outputs = {dir / "genotypes.bed", dir / "genotypes.bim", dir / "genotypes.fam"};
    } else {
        write_genotypes_delimited(dir / "genotypes.csv", g);
        outputs = {dir / "genotypes.csv"};
    }
    CovariateTable cov_out = cov;
    write_covariates(dir / "covariates.tsv", cov_out);
    write_phenotype(dir / "phenotype.tsv", PhenotypeVector{y, g.sample_ids, "y"});
    write_kinship(dir / "kinship.grm", Kinship{V, g.sample_ids});
    nlohmann::json truth_json = truth_to_json(truth, config, g.variant_ids);
    truth_json["variant_ids"] = g.variant_ids;
    write_json(dir / "truth.json", truth_json);
    write_json(dir / "config.json", nlohmann::json(config));
    {
        const std::vector<std::string> names = config.split_ratios.size() == 3
                                                   ? std::vector<std::string>{"train", "valid", "test"}
                                                   : std::vector<std::string>{"train", "test"};
        std::ofstream out(dir / "split.tsv");
        out << "id\tsplit\n";
        for (std::size_t i = 0; i < g.sample_ids.size(); ++i) {
            const auto label = static_cast<std::size_t>(split.labels[i]);
            out << g.sample_ids[i] << '\t' << (label < names.size() ? names[label] : std::to_string(label)) << '\n';
        }
    }
    for (const auto& w : split.warnings) std::cerr << "warning: " << w << '\n';
    for (const char* name : {"covariates.tsv", "phenotype.tsv", "kinship.grm", "kinship.grm.id", "truth.json",
                             "config.json", "split.tsv"}) {
        outputs.push_back(dir / name);
    }
    for (const auto& p : outputs) manifest.output(p);
    manifest.write(dir);
}

void run_score(const ScoreArgs& args) {
    RunManifest manifest("score");
    nlohmann::json report = nlohmann::json::object();

    if (!args.model.empty()) {
        const RunFiles files{args.model};
        const RunModel model = read_run(files);
        int index = args.lambda_index;
        if (!args.criterion.empty()) {
            if (index >= 0) throw ArgumentError("give --lambda-index or --criterion, not both");
            const nlohmann::json sel = read_json(files.selection_json());
            if (!sel.contains(args.criterion)) {
                throw ArgumentError("selection.json has no entry for '" + args.criterion + "'; run select first");
            }
            index = sel.at(args.criterion).at("lambda_index").get<int>();
            report["criterion"] = args.criterion;
        }
        check_lambda_index(index, model.size());
        const auto k = static_cast<std::size_t>(index);
        report["lambda_index"] = index;
        report["chosen_lambda"] = model.lambdas[k];
        report["df"] = model.df[k];

        if (!args.truth.empty()) {
            manifest.input(args.truth);
            const nlohmann::json truth = read_json(args.truth);
            const auto variant_ids = truth.at("variant_ids").get<std::vector<std::string>>();
            const auto beta_true = truth.at("beta_true_per_allele").get<std::vector<double>>();
            const auto causal = truth.at("causal_indices").get<std::vector<Eigen::Index>>();
            std::unordered_map<std::string, Eigen::Index> index_of;
            for (std::size_t j = 0; j < variant_ids.size(); ++j) index_of[variant_ids[j]] = static_cast<Eigen::Index>(j);

            const auto p = static_cast<Eigen::Index>(variant_ids.size());
            Eigen::VectorXd beta_hat = Eigen::VectorXd::Zero(p);
            std::vector<Eigen::Index> selected;
            for (std::size_t c = static_cast<std::size_t>(model.n_covariates); c < model.column_names.size(); ++c) {
                const double value = model.beta[k][static_cast<Eigen::Index>(c)];
                const auto it = index_of.find(model.column_names[c]);
                if (it == index_of.end()) continue;
                beta_hat[it->second] = value;
                if (value != 0.0) selected.push_back(it->second);
            }
            report["tpr"] = metric_tpr(selected, causal);
            report["recall"] = metric_recall(selected, causal);
            report["rmse"] = metric_rmse(beta_hat, Eigen::Map<const Eigen::VectorXd>(beta_true.data(), p));
        }
    } else if (!args.truth.empty()) {
        throw ArgumentError("TPR and RMSE need --model");
    }

    const auto auc_of = [&](const std::string& scores_path, const std::string& pheno_path) {
        manifest.input(scores_path);
        manifest.input(pheno_path);
        const PhenotypeVector scores = read_phenotype(scores_path, "score");
        const PhenotypeVector labels = read_phenotype(pheno_path).select_samples(scores.sample_ids);
        return metric_auc(scores.values, labels.values);
    };
    if (!args.scores.empty()) {
        if (args.pheno.empty()) throw ArgumentError("--scores needs --pheno for the labels");
        report["auc_test"] = auc_of(args.scores, args.pheno);
    }
    if (!args.val_scores.empty()) {
        if (args.val_pheno.empty()) throw ArgumentError("--val-scores needs --val-pheno");
        report["auc_val"] = auc_of(args.val_scores, args.val_pheno);
    }

    if (args.out.empty()) {
        std::cout << report.dump(2) << '\n';
    } else {
        const fs::path out(args.out);
        ensure_parent(out);
        write_json(out, report);
        manifest.output(out);
        manifest.write(output_dir_of(out));
    }
}

}  // namespace pglmm::cli
