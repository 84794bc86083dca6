#pragma once

#include "pglmm/genotype.hpp"

#include <array>
#include <cstdint>
#include <filesystem>

namespace pglmm::plink {

inline constexpr std::array<std::uint8_t, 3> kBedHeader{0x6C, 0x1B, 0x01};

/// Reads a SNP-major PLINK 1 fileset. Dosages count copies of allele A1.
GenotypeMatrix read_bed(const std::filesystem::path& bed, const std::filesystem::path& bim,
                        const std::filesystem::path& fam);

/// Reads `<prefix>.bed/.bim/.fam`.
GenotypeMatrix read_bed(const std::filesystem::path& prefix);

/// Writes `<prefix>.bed/.bim/.fam`. Dosages must be 0/1/2 or NaN. Variants get
/// placeholder chromosome/position/allele columns in the .bim.
void write_bed(const std::filesystem::path& prefix, const GenotypeMatrix& g);

/// Two-bit code for a dosage (00 -> 2, 10 -> 1, 11 -> 0, 01 -> missing).
std::uint8_t encode_dosage(double dosage);
double decode_code(std::uint8_t code);

}  // namespace pglmm::plink
