#include "commands.hpp"
#include "manifest.hpp"

#include "pglmm/error.hpp"

#include "CLI11.hpp"

#include <Eigen/Core>

#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

namespace {

using namespace pglmm::cli;

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kNumerical = 3, kData = 4 };

void add_genotype_flags(CLI::App* cmd, GenotypeInput& in, const std::string& prefix = "") {
    auto* bed = cmd->add_option("--" + prefix + "bed", in.bed, "PLINK .bed file");
    cmd->add_option("--" + prefix + "bim", in.bim, "PLINK .bim file (default: next to the .bed)")->needs(bed);
    cmd->add_option("--" + prefix + "fam", in.fam, "PLINK .fam file (default: next to the .bed)")->needs(bed);
    auto* csv = cmd->add_option("--" + prefix + "csv", in.csv, "delimited dosage file with an id column");
    bed->excludes(csv);
}

int resolve_threads(int flag) {
    if (flag > 0) return flag;
    if (const char* env = std::getenv("PGLMM_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) return n;
        } catch (const std::exception&) {
        }
        throw pglmm::ArgumentError(std::string("PGLMM_THREADS must be a positive integer, got '") + env + "'");
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lasso-penalized generalized linear mixed models for genotype data"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (default: PGLMM_THREADS or all cores)");

    GrmArgs grm;
    auto* grm_cmd = app.add_subcommand("grm", "compute a genetic relatedness matrix");
    add_genotype_flags(grm_cmd, grm.genotypes);
    grm_cmd->add_option("--maf", grm.maf, "minimum minor allele frequency")->check(CLI::Range(0.0, 0.5));
    grm_cmd->add_option("--max-missing", grm.max_missing, "maximum per-variant missing rate")
        ->check(CLI::Range(0.0, 1.0));
    grm_cmd->add_option("--extract", grm.extract, "file of variant IDs to build the GRM from");
    grm_cmd->add_option("--out", grm.out, "output path (.grm is appended if absent)")->required();

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "fit the null model and the lasso path");
    fit_cmd->add_option("--family", fit.family)->check(CLI::IsMember({"binomial", "gaussian"}));
    fit_cmd->add_option("--grm", fit.grm, "relatedness matrix; repeat for several components");
    fit_cmd->add_option("--pheno", fit.pheno, "phenotype file")->required();
    fit_cmd->add_option("--pheno-column", fit.pheno_column, "phenotype column (default: first non-id column)");
    fit_cmd->add_option("--covar", fit.covar, "covariate file");
    add_genotype_flags(fit_cmd, fit.genotypes);
    fit_cmd->add_option("--keep", fit.keep, "file of sample IDs to fit on");
    fit_cmd->add_option("--maf", fit.maf)->check(CLI::Range(0.0, 0.5));
    fit_cmd->add_option("--max-missing", fit.max_missing)->check(CLI::Range(0.0, 1.0));
    fit_cmd->add_option("--nlambda", fit.nlambda)->check(CLI::PositiveNumber);
    fit_cmd->add_option("--lambda-min-ratio", fit.lambda_min_ratio);
    fit_cmd->add_option("--penalty-factor", fit.penalty_factor, "lines of '<column> <factor>'");
    fit_cmd->add_option("--pcs", fit.pcs, "baseline: no random effect, top PCs of the first GRM as covariates");
    fit_cmd->add_flag("--no-standardize", fit.no_standardize, "penalize variants on their raw scale");
    fit_cmd->add_option("--inner-tol", fit.inner_tol);
    fit_cmd->add_option("--outer-tol", fit.outer_tol);
    fit_cmd->add_option("--max-outer", fit.max_outer)->check(CLI::PositiveNumber);
    fit_cmd->add_option("--reml-tol", fit.reml_tol);
    fit_cmd->add_option("--reml-max-iter", fit.reml_max_iter)->check(CLI::PositiveNumber);
    fit_cmd->add_flag("--force", fit.force, "continue after a non-converged null fit");
    fit_cmd->add_option("--out", fit.out, "run directory")->required();

    SelectArgs sel;
    auto* sel_cmd = app.add_subcommand("select", "choose lambda by an information criterion or validation AUC");
    sel_cmd->add_option("--model", sel.model, "run directory")->required();
    sel_cmd->add_option("--criterion", sel.criterion, "aic, bic, gic:<a_n> or val-auc");
    add_genotype_flags(sel_cmd, sel.validation.genotypes, "valid-");
    sel_cmd->add_option("--valid-covar", sel.validation.covar);
    sel_cmd->add_option("--valid-cross-grm", sel.validation.cross_grm);
    sel_cmd->add_option("--valid-pheno", sel.validation_pheno);
    sel_cmd->add_option("--valid-keep", sel.validation.keep, "validation sample IDs within the genotype file");

    PredictArgs pred;
    auto* pred_cmd = app.add_subcommand("predict", "predict risk for held-out samples");
    pred_cmd->add_option("--model", pred.model, "run directory")->required();
    pred_cmd->add_option("--lambda-index", pred.lambda_index)->required();
    add_genotype_flags(pred_cmd, pred.test.genotypes, "test-");
    pred_cmd->add_option("--test-covar", pred.test.covar);
    pred_cmd->add_option("--test-keep", pred.test.keep, "test sample IDs within the genotype file");
    pred_cmd->add_option("--cross-grm", pred.test.cross_grm, "relatedness file covering test and training IDs");
    pred_cmd->add_option("--out", pred.out, "scores file")->required();

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "simulate a structured case-control study");
    sim_cmd->add_option("--config", sim.config, "JSON configuration (defaults when omitted)");
    sim_cmd->add_option("--seed", sim.seed);
    sim_cmd->add_option("--format", sim.format)->check(CLI::IsMember({"bed", "csv"}));
    sim_cmd->add_option("--out", sim.out, "output directory")->required();

    ScoreArgs score;
    auto* score_cmd = app.add_subcommand("score", "evaluate a fit against simulation truth");
    score_cmd->add_option("--truth", score.truth);
    score_cmd->add_option("--model", score.model);
    score_cmd->add_option("--lambda-index", score.lambda_index);
    score_cmd->add_option("--criterion", score.criterion, "use the lambda recorded by select");
    score_cmd->add_option("--scores", score.scores, "test scores from predict");
    score_cmd->add_option("--pheno", score.pheno, "test labels");
    score_cmd->add_option("--val-scores", score.val_scores);
    score_cmd->add_option("--val-pheno", score.val_pheno);
    score_cmd->add_option("--out", score.out, "JSON report (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        Eigen::setNbThreads(resolve_threads(threads));
        if (grm_cmd->parsed()) run_grm(grm);
        else if (fit_cmd->parsed()) run_fit(fit);
        else if (sel_cmd->parsed()) run_select(sel);
        else if (pred_cmd->parsed()) run_predict(pred);
        else if (sim_cmd->parsed()) run_simulate(sim);
        else if (score_cmd->parsed()) run_score(score);
    } catch (const pglmm::ArgumentError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const pglmm::NumericalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumerical;
    } catch (const pglmm::DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kData;
    } catch (const pglmm::FormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kOk;
}
