#include "pglmm/kinship.hpp"

#include "pglmm/binary_io.hpp"
#include "pglmm/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <unordered_map>

namespace pglmm {

namespace {

constexpr std::string_view kKinshipMagic = "PGLMMGRM";

std::unordered_map<std::string, Eigen::Index> index_of(const std::vector<std::string>& ids) {
    std::unordered_map<std::string, Eigen::Index> index;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (!index.emplace(ids[i], static_cast<Eigen::Index>(i)).second) {
            throw DataError("duplicate sample ID '" + ids[i] + "' in kinship");
        }
    }
    return index;
}

std::vector<Eigen::Index> positions(const std::unordered_map<std::string, Eigen::Index>& index,
                                    const std::vector<std::string>& ids) {
    std::vector<Eigen::Index> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        auto it = index.find(id);
        if (it == index.end()) throw DataError("sample '" + id + "' not present in kinship");
        out.push_back(it->second);
    }
    return out;
}

}  // namespace

Kinship Kinship::select(const std::vector<std::string>& ids) const {
    return Kinship{block(ids, ids), ids};
}

Eigen::MatrixXd Kinship::block(const std::vector<std::string>& row_ids,
                               const std::vector<std::string>& col_ids) const {
    const auto index = index_of(sample_ids);
    const auto rows = positions(index, row_ids);
    const auto cols = positions(index, col_ids);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = matrix(rows[i], cols[j]);
        }
    }
    return out;
}

void KinshipSet::validate() const {
    const Eigen::Index size = n();
    for (std::size_t s = 0; s < matrices.size(); ++s) {
        const auto& v = matrices[s];
        if (v.rows() != size || v.cols() != size) {
            throw DataError("kinship matrix " + std::to_string(s) + " is " + std::to_string(v.rows()) +
                            "x" + std::to_string(v.cols()) + ", expected " + std::to_string(size) +
                            "x" + std::to_string(size));
        }
        if ((v - v.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
            throw DataError("kinship matrix " + std::to_string(s) + " is not symmetric");
        }
    }
}

PsdRepair floor_to_psd(Eigen::MatrixXd& matrix) {
    matrix = 0.5 * (matrix + matrix.transpose()).eval();
    PsdRepair result;
    if (matrix.rows() == 0) return result;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(matrix);
    if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition of kinship failed");
    result.min_eigenvalue_before = eig.eigenvalues().minCoeff();
    if (result.min_eigenvalue_before < 0.0) {
        const Eigen::VectorXd floored = eig.eigenvalues().cwiseMax(0.0);
        matrix = eig.eigenvectors() * floored.asDiagonal() * eig.eigenvectors().transpose();
        matrix = 0.5 * (matrix + matrix.transpose()).eval();
        result.repaired = true;
    }
    return result;
}

Eigen::MatrixXd compute_grm(const Eigen::MatrixXd& standardized,
                            const std::optional<std::vector<Eigen::Index>>& variant_subset,
                            PsdRepair* repair) {
    Eigen::MatrixXd used;
    if (variant_subset) {
        if (variant_subset->empty()) throw ArgumentError("variant subset is empty");
        used.resize(standardized.rows(), static_cast<Eigen::Index>(variant_subset->size()));
        for (std::size_t k = 0; k < variant_subset->size(); ++k) {
            const Eigen::Index j = (*variant_subset)[k];
            if (j < 0 || j >= standardized.cols()) throw ArgumentError("variant subset index out of range");
            used.col(static_cast<Eigen::Index>(k)) = standardized.col(j);
        }
    }
    const Eigen::MatrixXd& g = variant_subset ? used : standardized;
    if (g.cols() == 0) throw ArgumentError("cannot compute a GRM from zero variants");

    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(g.rows(), g.rows());
    v.selfadjointView<Eigen::Lower>().rankUpdate(g, 1.0 / static_cast<double>(g.cols()));
    v.triangularView<Eigen::StrictlyUpper>() = v.transpose();
    const PsdRepair info = floor_to_psd(v);
    if (repair) *repair = info;
    return v;
}

std::filesystem::path kinship_id_path(const std::filesystem::path& path) {
    auto p = path;
    p += ".id";
    return p;
}

void write_kinship(const std::filesystem::path& path, const Kinship& kinship) {
    const Eigen::Index n = kinship.matrix.rows();
    if (kinship.matrix.cols() != n) throw DataError("kinship matrix must be square");
    if (static_cast<Eigen::Index>(kinship.sample_ids.size()) != n) {
        throw DataError("kinship has " + std::to_string(n) + " rows but " +
                        std::to_string(kinship.sample_ids.size()) + " sample IDs");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    binary::write_magic(out, kKinshipMagic);
    binary::write_u64(out, static_cast<std::uint64_t>(n));
    binary::write_matrix(out, kinship.matrix);
    if (!out) throw FormatError("failed writing " + path.string());

    std::ofstream ids(kinship_id_path(path));
    for (const auto& id : kinship.sample_ids) ids << id << '\n';
}

Kinship read_kinship(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    binary::expect_magic(in, kKinshipMagic, path.string());
    const auto n = binary::read_u64(in, path.string());
    Kinship k;
    k.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    binary::read_matrix(in, k.matrix, path.string());
    if (in.peek() != std::char_traits<char>::eof()) {
        throw FormatError(path.string() + ": trailing bytes after matrix data");
    }

    std::ifstream ids(kinship_id_path(path));
    if (!ids) throw FormatError("cannot open " + kinship_id_path(path).string());
    std::string line;
    while (std::getline(ids, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) k.sample_ids.push_back(line);
    }
    if (k.sample_ids.size() != n) {
        throw DataError(path.string() + ": matrix is " + std::to_string(n) + "x" + std::to_string(n) +
                        " but the ID file lists " + std::to_string(k.sample_ids.size()) + " samples");
    }
    index_of(k.sample_ids);
    return k;
}

}  // namespace pglmm
