#include "pglmm/binary_io.hpp"

#include "pglmm/error.hpp"

#include <array>
#include <bit>
#include <string>
#include <vector>

namespace pglmm::binary {

namespace {

void put_le(std::ostream& out, std::uint64_t bits) {
    std::array<char, 8> bytes{};
    for (std::size_t k = 0; k < 8; ++k) bytes[k] = static_cast<char>((bits >> (8 * k)) & 0xFFu);
    out.write(bytes.data(), 8);
}

std::uint64_t get_le(const unsigned char* bytes) {
    std::uint64_t bits = 0;
    for (std::size_t k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(bytes[k]) << (8 * k);
    return bits;
}

}  // namespace

void write_magic(std::ostream& out, std::string_view magic) {
    out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

void expect_magic(std::istream& in, std::string_view magic, std::string_view what) {
    std::string buf(magic.size(), '\0');
    in.read(buf.data(), static_cast<std::streamsize>(magic.size()));
    if (in.gcount() != static_cast<std::streamsize>(magic.size()) || buf != magic) {
        throw FormatError(std::string(what) + ": bad header magic (expected '" +
                          std::string(magic) + "')");
    }
}

void write_u64(std::ostream& out, std::uint64_t value) { put_le(out, value); }

std::uint64_t read_u64(std::istream& in, std::string_view what) {
    std::array<unsigned char, 8> bytes{};
    in.read(reinterpret_cast<char*>(bytes.data()), 8);
    if (in.gcount() != 8) throw FormatError(std::string(what) + ": truncated header");
    return get_le(bytes.data());
}

void write_f64(std::ostream& out, double value) { put_le(out, std::bit_cast<std::uint64_t>(value)); }

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
    std::vector<char> buf(static_cast<std::size_t>(m.cols()) * 8);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const auto bits = std::bit_cast<std::uint64_t>(m(i, j));
            for (std::size_t k = 0; k < 8; ++k) {
                buf[static_cast<std::size_t>(j) * 8 + k] = static_cast<char>((bits >> (8 * k)) & 0xFFu);
            }
        }
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
}

void read_matrix(std::istream& in, Eigen::MatrixXd& m, std::string_view what) {
    std::vector<unsigned char> buf(static_cast<std::size_t>(m.cols()) * 8);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
            throw FormatError(std::string(what) + ": truncated data at row " + std::to_string(i));
        }
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            m(i, j) = std::bit_cast<double>(get_le(buf.data() + static_cast<std::size_t>(j) * 8));
        }
    }
}

}  // namespace pglmm::binary
