#include "pglmm/plink.hpp"

#include "pglmm/error.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

namespace pglmm::plink {

namespace {

std::vector<std::vector<std::string>> read_whitespace_table(const std::filesystem::path& path,
                                                            std::size_t min_fields) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::vector<std::string> row;
        std::string token;
        while (fields >> token) row.push_back(token);
        if (row.empty()) continue;
        if (row.size() < min_fields) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected at least " +
                              std::to_string(min_fields) + " fields");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

std::uint8_t encode_dosage(double dosage) {
    if (std::isnan(dosage)) return 0b01;
    if (dosage == 2.0) return 0b00;
    if (dosage == 1.0) return 0b10;
    if (dosage == 0.0) return 0b11;
    throw ArgumentError("PLINK dosages must be 0, 1, 2 or missing");
}

double decode_code(std::uint8_t code) {
    switch (code & 0b11) {
        case 0b00: return 2.0;
        case 0b10: return 1.0;
        case 0b11: return 0.0;
        default: return std::numeric_limits<double>::quiet_NaN();
    }
}

GenotypeMatrix read_bed(const std::filesystem::path& bed, const std::filesystem::path& bim,
                        const std::filesystem::path& fam) {
    GenotypeMatrix g;
    for (auto& row : read_whitespace_table(fam, 2)) g.sample_ids.push_back(row[1]);
    for (auto& row : read_whitespace_table(bim, 2)) g.variant_ids.push_back(row[1]);

    const auto n = static_cast<Eigen::Index>(g.sample_ids.size());
    const auto p = static_cast<Eigen::Index>(g.variant_ids.size());
    const auto bytes_per_variant = static_cast<std::size_t>((n + 3) / 4);

    std::ifstream in(bed, std::ios::binary);
    if (!in) throw FormatError("cannot open " + bed.string());
    std::array<std::uint8_t, 3> header{};
    in.read(reinterpret_cast<char*>(header.data()), 3);
    if (in.gcount() != 3 || header[0] != kBedHeader[0] || header[1] != kBedHeader[1]) {
        throw FormatError(bed.string() + ": not a PLINK .bed file (bad magic bytes)");
    }
    if (header[2] != kBedHeader[2]) {
        throw FormatError(bed.string() + ": only SNP-major mode (0x01) is supported");
    }

    const std::size_t expected = 3 + bytes_per_variant * static_cast<std::size_t>(p);
    in.seekg(0, std::ios::end);
    const auto actual = static_cast<std::size_t>(in.tellg());
    if (actual != expected) {
        throw FormatError(bed.string() + ": expected " + std::to_string(expected) +
                          " bytes for " + std::to_string(n) + " samples x " + std::to_string(p) +
                          " variants, found " + std::to_string(actual));
    }
    in.seekg(3);

    g.dosages.resize(n, p);
    std::vector<std::uint8_t> buffer(bytes_per_variant);
    for (Eigen::Index j = 0; j < p; ++j) {
        in.read(reinterpret_cast<char*>(buffer.data()),
                static_cast<std::streamsize>(bytes_per_variant));
        for (Eigen::Index i = 0; i < n; ++i) {
            const std::uint8_t byte = buffer[static_cast<std::size_t>(i / 4)];
            g.dosages(i, j) = decode_code(static_cast<std::uint8_t>(byte >> (2 * (i % 4))));
        }
    }
    g.allele_freqs = compute_allele_freqs(g.dosages);
    return g;
}

GenotypeMatrix read_bed(const std::filesystem::path& prefix) {
    auto with = [&](const char* ext) {
        auto p = prefix;
        p += ext;
        return p;
    };
    return read_bed(with(".bed"), with(".bim"), with(".fam"));
}

void write_bed(const std::filesystem::path& prefix, const GenotypeMatrix& g) {
    auto with = [&](const char* ext) {
        auto p = prefix;
        p += ext;
        return p;
    };
    const Eigen::Index n = g.n_samples();
    const Eigen::Index p = g.n_variants();
    if (static_cast<Eigen::Index>(g.sample_ids.size()) != n ||
        static_cast<Eigen::Index>(g.variant_ids.size()) != p) {
        throw ArgumentError("genotype labels do not match matrix dimensions");
    }

    std::ofstream fam(with(".fam"));
    for (const auto& id : g.sample_ids) fam << id << ' ' << id << " 0 0 0 -9\n";
    std::ofstream bim(with(".bim"));
    for (Eigen::Index j = 0; j < p; ++j) {
        bim << "1\t" << g.variant_ids[static_cast<std::size_t>(j)] << "\t0\t" << (j + 1)
            << "\tA\tG\n";
    }

    std::ofstream bed(with(".bed"), std::ios::binary);
    bed.write(reinterpret_cast<const char*>(kBedHeader.data()), 3);
    const auto bytes_per_variant = static_cast<std::size_t>((n + 3) / 4);
    std::vector<std::uint8_t> buffer(bytes_per_variant);
    for (Eigen::Index j = 0; j < p; ++j) {
        std::fill(buffer.begin(), buffer.end(), std::uint8_t{0});
        for (Eigen::Index i = 0; i < n; ++i) {
            buffer[static_cast<std::size_t>(i / 4)] |=
                static_cast<std::uint8_t>(encode_dosage(g.dosages(i, j)) << (2 * (i % 4)));
        }
        bed.write(reinterpret_cast<const char*>(buffer.data()),
                  static_cast<std::streamsize>(bytes_per_variant));
    }
    if (!bed || !bim || !fam) throw FormatError("failed writing PLINK fileset " + prefix.string());
}

}  // namespace pglmm::plink
