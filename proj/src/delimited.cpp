#include "pglmm/delimited.hpp"

#include "pglmm/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>
#include <unordered_set>

namespace pglmm {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delim, start);
        out.push_back(trim(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

bool is_missing_cell(const std::string& cell) { return cell.empty() || cell == "NA"; }

std::unordered_map<std::string, std::size_t> index_ids(const std::vector<std::string>& ids,
                                                       const std::string& what) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (!index.emplace(ids[i], i).second) {
            throw DataError("duplicate sample ID '" + ids[i] + "' in " + what);
        }
    }
    return index;
}

std::size_t lookup(const std::unordered_map<std::string, std::size_t>& index,
                   const std::string& id, const std::string& what) {
    auto it = index.find(id);
    if (it == index.end()) throw DataError("sample '" + id + "' not present in " + what);
    return it->second;
}

}  // namespace

std::string format_double(double value) {
    if (std::isnan(value)) return "NA";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::vector<std::string> DelimitedTable::ids() const {
    std::vector<std::string> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(row[id_column]);
    return out;
}

double DelimitedTable::numeric(std::size_t row, std::size_t col, bool allow_missing) const {
    const std::string& cell = rows[row][col];
    auto where = [&] {
        return path + ": row " + std::to_string(row + 2) + ", column " + std::to_string(col + 1) +
               " ('" + header[col] + "')";
    };
    if (is_missing_cell(cell)) {
        if (allow_missing) return std::numeric_limits<double>::quiet_NaN();
        throw DataError(where() + ": missing value not allowed");
    }
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = cell.data() + cell.size();
    if (*begin == '+') ++begin;
    auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc() || res.ptr != end) {
        throw DataError(where() + ": non-numeric value '" + cell + "'");
    }
    return value;
}

DelimitedTable read_delimited(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    DelimitedTable table;
    table.path = path.string();
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
    const char delim = line.find('\t') != std::string::npos ? '\t' : ',';
    table.header = split(line, delim);

    bool found = false;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (lower(table.header[c]) == "id") {
            table.id_column = c;
            found = true;
            break;
        }
    }
    if (!found) throw DataError(path.string() + ": no 'id' column in header");

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split(line, delim);
        if (cells.size() != table.header.size()) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(table.header.size()) + " fields, found " +
                              std::to_string(cells.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    index_ids(table.ids(), path.string());
    return table;
}

GenotypeMatrix read_genotypes_delimited(const std::filesystem::path& path) {
    const DelimitedTable table = read_delimited(path);
    GenotypeMatrix g;
    g.sample_ids = table.ids();
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (c == table.id_column) continue;
        cols.push_back(c);
        g.variant_ids.push_back(table.header[c]);
    }
    g.dosages.resize(static_cast<Eigen::Index>(table.rows.size()),
                     static_cast<Eigen::Index>(cols.size()));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        for (std::size_t k = 0; k < cols.size(); ++k) {
            const double v = table.numeric(r, cols[k], true);
            if (!std::isnan(v) && v != 0.0 && v != 1.0 && v != 2.0) {
                throw DataError(table.path + ": row " + std::to_string(r + 2) + ", column " +
                                std::to_string(cols[k] + 1) + ": dosage must be 0, 1 or 2");
            }
            g.dosages(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = v;
        }
    }
    g.allele_freqs = compute_allele_freqs(g.dosages);
    return g;
}

CovariateTable read_covariates(const std::filesystem::path& path) {
    const DelimitedTable table = read_delimited(path);
    CovariateTable out;
    out.sample_ids = table.ids();
    std::vector<std::size_t> cols;
    bool has_intercept = false;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (c == table.id_column) continue;
        if (lower(table.header[c]) == "intercept") {
            has_intercept = true;
            cols.insert(cols.begin(), c);
        } else {
            cols.push_back(c);
        }
    }
    const std::size_t offset = has_intercept ? 0 : 1;
    const auto n = static_cast<Eigen::Index>(table.rows.size());
    out.values.resize(n, static_cast<Eigen::Index>(cols.size() + offset));
    if (!has_intercept) {
        out.values.col(0).setOnes();
        out.column_names.push_back("intercept");
    }
    for (std::size_t k = 0; k < cols.size(); ++k) {
        out.column_names.push_back(table.header[cols[k]]);
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k + offset)) =
                table.numeric(r, cols[k], false);
        }
    }
    if (has_intercept && !(out.values.col(0).array() == 1.0).all()) {
        throw DataError(table.path + ": 'intercept' column must contain only ones");
    }
    return out;
}

PhenotypeVector read_phenotype(const std::filesystem::path& path, const std::string& column) {
    const DelimitedTable table = read_delimited(path);
    std::size_t col = table.header.size();
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (c == table.id_column) continue;
        if (column.empty() || table.header[c] == column) {
            col = c;
            break;
        }
    }
    if (col == table.header.size()) {
        throw DataError(table.path + ": phenotype column " +
                        (column.empty() ? std::string("missing") : "'" + column + "' not found"));
    }
    PhenotypeVector out;
    out.name = table.header[col];
    out.sample_ids = table.ids();
    out.values.resize(static_cast<Eigen::Index>(table.rows.size()));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        out.values[static_cast<Eigen::Index>(r)] = table.numeric(r, col, false);
    }
    return out;
}

bool PhenotypeVector::is_binary() const {
    return (values.array() == 0.0 || values.array() == 1.0).all();
}

CovariateTable CovariateTable::select_samples(const std::vector<std::string>& ids) const {
    const auto index = index_ids(sample_ids, "covariate table");
    CovariateTable out;
    out.column_names = column_names;
    out.sample_ids = ids;
    out.values.resize(static_cast<Eigen::Index>(ids.size()), values.cols());
    for (std::size_t r = 0; r < ids.size(); ++r) {
        out.values.row(static_cast<Eigen::Index>(r)) =
            values.row(static_cast<Eigen::Index>(lookup(index, ids[r], "covariate table")));
    }
    return out;
}

CovariateTable CovariateTable::intercept_only(const std::vector<std::string>& ids) {
    CovariateTable out;
    out.sample_ids = ids;
    out.column_names = {"intercept"};
    out.values = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(ids.size()), 1);
    return out;
}

PhenotypeVector PhenotypeVector::select_samples(const std::vector<std::string>& ids) const {
    const auto index = index_ids(sample_ids, "phenotype file");
    PhenotypeVector out;
    out.name = name;
    out.sample_ids = ids;
    out.values.resize(static_cast<Eigen::Index>(ids.size()));
    for (std::size_t r = 0; r < ids.size(); ++r) {
        out.values[static_cast<Eigen::Index>(r)] =
            values[static_cast<Eigen::Index>(lookup(index, ids[r], "phenotype file"))];
    }
    return out;
}

void write_genotypes_delimited(const std::filesystem::path& path, const GenotypeMatrix& g) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path.string());
    out << "id";
    for (const auto& v : g.variant_ids) out << ',' << v;
    out << '\n';
    for (Eigen::Index i = 0; i < g.n_samples(); ++i) {
        out << g.sample_ids[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < g.n_variants(); ++j) out << ',' << format_double(g.dosages(i, j));
        out << '\n';
    }
}

void write_covariates(const std::filesystem::path& path, const CovariateTable& table) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path.string());
    out << "id";
    // The intercept is implied on read.
    for (std::size_t c = 1; c < table.column_names.size(); ++c) out << '\t' << table.column_names[c];
    out << '\n';
    for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
        out << table.sample_ids[static_cast<std::size_t>(i)];
        for (Eigen::Index c = 1; c < table.values.cols(); ++c) out << '\t' << format_double(table.values(i, c));
        out << '\n';
    }
}

void write_phenotype(const std::filesystem::path& path, const PhenotypeVector& pheno) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path.string());
    out << "id\t" << (pheno.name.empty() ? "y" : pheno.name) << '\n';
    for (Eigen::Index i = 0; i < pheno.values.size(); ++i) {
        out << pheno.sample_ids[static_cast<std::size_t>(i)] << '\t' << format_double(pheno.values[i])
            << '\n';
    }
}

}  // namespace pglmm
