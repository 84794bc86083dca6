#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <istream>
#include <ostream>
#include <string_view>

namespace pglmm::binary {

void write_magic(std::ostream& out, std::string_view magic);
/// Throws FormatError if the next bytes are not `magic`.
void expect_magic(std::istream& in, std::string_view magic, std::string_view what);

void write_u64(std::ostream& out, std::uint64_t value);
std::uint64_t read_u64(std::istream& in, std::string_view what);

void write_f64(std::ostream& out, double value);
/// Row-major f64 block.
void write_matrix(std::ostream& out, const Eigen::MatrixXd& m);
void read_matrix(std::istream& in, Eigen::MatrixXd& m, std::string_view what);

}  // namespace pglmm::binary
