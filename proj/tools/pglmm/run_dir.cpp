#include "run_dir.hpp"

#include "pglmm/binary_io.hpp"
#include "pglmm/delimited.hpp"
#include "pglmm/error.hpp"
#include "pglmm/selection.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace pglmm::cli {

namespace {

constexpr std::string_view kEtaMagic = "PGLMMETA";

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::vector<std::filesystem::path> write_path_outputs(const RunFiles& files, const PathFit& fit,
                                                      const RunMetadata& meta) {
    const auto n = static_cast<double>(fit.y.size());
    const auto aic = gic(fit, 2.0);
    const auto bic = gic(fit, std::log(n));
    {
        std::ofstream out(files.path_tsv());
        out << "lambda\tdf\tpql_loglik\taic\tbic\n";
        for (std::size_t k = 0; k < fit.size(); ++k) {
            const auto& p = fit.points[k];
            out << format_double(p.lambda) << '\t' << p.df << '\t' << format_double(p.pql_loglik) << '\t'
                << format_double(aic[k]) << '\t' << format_double(bic[k]) << '\n';
        }
    }
    {
        std::ofstream out(files.beta_tsv());
        out << "variant_id\tlambda_index\tbeta\n";
        for (std::size_t k = 0; k < fit.size(); ++k) {
            for (Eigen::SparseVector<double>::InnerIterator it(fit.points[k].beta); it; ++it) {
                out << fit.column_names[static_cast<std::size_t>(it.index())] << '\t' << k << '\t'
                    << format_double(it.value()) << '\n';
            }
        }
    }
    {
        nlohmann::json j;
        j["family"] = family_name(fit.family.kind);
        j["phi"] = fit.family.dispersion_phi;
        j["tau"] = to_std(fit.theta.tau);
        j["tau_pinned"] = fit.theta.tau_pinned;
        j["phi_estimated"] = fit.theta.has_phi;
        j["lambda_max"] = fit.lambda_max;
        std::vector<double> lambdas;
        std::vector<int> df;
        std::vector<double> pql;
        std::vector<bool> converged;
        for (const auto& p : fit.points) {
            lambdas.push_back(p.lambda);
            df.push_back(p.df);
            pql.push_back(p.pql_loglik);
            converged.push_back(p.converged);
        }
        j["lambdas"] = lambdas;
        j["df"] = df;
        j["pql_loglik"] = pql;
        j["converged"] = converged;
        j["column_names"] = fit.column_names;
        j["n_covariates"] = fit.n_covariates;
        j["grm"] = meta.grm_paths;
        j["training_ids"] = meta.training_ids;
        j["pcs"] = meta.pcs;
        j["pc_first_column"] = meta.pc_first_column;
        j["baseline"] = meta.baseline;
        j["options"] = meta.options;
        j["warnings"] = fit.warnings;
        j["diagnostic"] = fit.diagnostic;
        std::ofstream out(files.path_json());
        out << j.dump(2) << '\n';
    }
    {
        std::ofstream out(files.eta_bin(), std::ios::binary);
        binary::write_magic(out, kEtaMagic);
        binary::write_u64(out, fit.size());
        binary::write_u64(out, static_cast<std::uint64_t>(fit.y.size()));
        binary::write_matrix(out, fit.y.transpose());
        for (const auto& p : fit.points) {
            binary::write_matrix(out, p.eta.transpose());
            binary::write_matrix(out, p.b.transpose());
        }
    }
    return {files.path_tsv(), files.beta_tsv(), files.path_json(), files.eta_bin()};
}

RunModel read_run(const RunFiles& files) {
    std::ifstream in(files.path_json());
    if (!in) throw FormatError("no fitted run in " + files.dir.string() + " (missing path.json)");
    const nlohmann::json j = nlohmann::json::parse(in);
    RunModel m;
    m.family.kind = parse_family(j.at("family").get<std::string>());
    m.family.dispersion_phi = j.at("phi").get<double>();
    m.theta.tau = to_eigen(j.at("tau").get<std::vector<double>>());
    m.theta.tau_pinned = j.at("tau_pinned").get<std::vector<bool>>();
    m.theta.has_phi = j.at("phi_estimated").get<bool>();
    m.theta.phi = m.family.dispersion_phi;
    m.lambdas = j.at("lambdas").get<std::vector<double>>();
    m.df = j.at("df").get<std::vector<int>>();
    m.pql_loglik = j.at("pql_loglik").get<std::vector<double>>();
    m.column_names = j.at("column_names").get<std::vector<std::string>>();
    m.n_covariates = j.at("n_covariates").get<Eigen::Index>();
    m.grm_paths = j.at("grm").get<std::vector<std::string>>();
    m.training_ids = j.at("training_ids").get<std::vector<std::string>>();
    m.pcs = j.at("pcs").get<Eigen::Index>();
    m.pc_first_column = j.at("pc_first_column").get<Eigen::Index>();
    m.baseline = j.at("baseline").get<bool>();

    const std::size_t L = m.lambdas.size();
    const auto p = static_cast<Eigen::Index>(m.column_names.size());
    m.beta.assign(L, Eigen::VectorXd::Zero(p));
    std::unordered_map<std::string, Eigen::Index> column;
    for (Eigen::Index c = 0; c < p; ++c) column[m.column_names[static_cast<std::size_t>(c)]] = c;
    std::ifstream beta(files.beta_tsv());
    if (!beta) throw FormatError("cannot open " + files.beta_tsv().string());
    std::string line;
    std::getline(beta, line);
    for (std::size_t line_no = 2; std::getline(beta, line); ++line_no) {
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string name;
        std::size_t k = 0;
        double value = 0.0;
        if (!std::getline(fields, name, '\t') || !(fields >> k >> value)) {
            throw FormatError(files.beta_tsv().string() + ": malformed line " + std::to_string(line_no));
        }
        const auto it = column.find(name);
        if (it == column.end()) throw FormatError(files.beta_tsv().string() + ": unknown column '" + name + "'");
        if (k >= L) throw FormatError(files.beta_tsv().string() + ": lambda index out of range");
        m.beta[k][it->second] = value;
    }

    std::ifstream bin(files.eta_bin(), std::ios::binary);
    if (!bin) throw FormatError("cannot open " + files.eta_bin().string());
    const std::string what = files.eta_bin().string();
    binary::expect_magic(bin, kEtaMagic, what);
    if (binary::read_u64(bin, what) != L) throw FormatError(what + ": lambda count disagrees with path.json");
    const auto n = static_cast<Eigen::Index>(binary::read_u64(bin, what));
    Eigen::MatrixXd row(1, n);
    binary::read_matrix(bin, row, what);
    m.y = row.transpose();
    for (std::size_t k = 0; k < L; ++k) {
        binary::read_matrix(bin, row, what);
        m.eta.push_back(row.transpose());
        binary::read_matrix(bin, row, what);
        m.b.push_back(row.transpose());
    }
    if (static_cast<Eigen::Index>(m.training_ids.size()) != n) {
        throw FormatError(files.dir.string() + ": training ID count disagrees with eta.bin");
    }
    return m;
}

PathFit to_path_fit(const RunModel& model, const KinshipSet& training_kinship) {
    PathFit fit;
    fit.family = model.family;
    fit.theta = model.theta;
    fit.y = model.y;
    fit.column_names = model.column_names;
    fit.n_covariates = model.n_covariates;
    const Eigen::Index n = model.y.size();
    fit.rotation = std::make_shared<RotatedProblem>(build_rotation(
        training_kinship, model.theta, model.family, Eigen::MatrixXd(n, 0), Eigen::VectorXd::Zero(n)));
    for (std::size_t k = 0; k < model.size(); ++k) {
        PathPoint p;
        p.lambda = model.lambdas[k];
        p.df = model.df[k];
        p.pql_loglik = model.pql_loglik[k];
        p.beta = model.beta[k].sparseView(0.0, 0.0);
        p.eta = model.eta[k];
        p.b = model.b[k];
        p.converged = true;
        fit.points.push_back(std::move(p));
    }
    return fit;
}

}  // namespace pglmm::cli
