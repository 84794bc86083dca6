#include "manifest.hpp"

#include "pglmm/error.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>

namespace pglmm::cli {

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string() + " for hashing");
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 initialisation failed");
    }
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int k = 0; k < len; ++k) {
        out += hex[digest[k] >> 4];
        out += hex[digest[k] & 0xF];
    }
    return out;
}

RunManifest::RunManifest(std::string command)
    : command_(std::move(command)), last_(std::chrono::steady_clock::now()) {}

void RunManifest::input(const std::filesystem::path& path) {
    inputs_[path.string()] = sha256_file(path);
    const auto ids = path.string() + ".id";
    if (std::filesystem::exists(ids)) inputs_[ids] = sha256_file(ids);
}

void RunManifest::stage(const std::string& name) {
    const auto now = std::chrono::steady_clock::now();
    timings_[name] = std::chrono::duration<double>(now - last_).count();
    last_ = now;
}

void RunManifest::write(const std::filesystem::path& dir) const {
    const auto path = dir / "manifest.json";
    nlohmann::json all = nlohmann::json::object();
    if (std::filesystem::exists(path)) {
        std::ifstream in(path);
        all = nlohmann::json::parse(in, nullptr, false);
        if (all.is_discarded() || !all.is_object()) all = nlohmann::json::object();
    }
    all[command_] = {{"tool_version", kToolVersion},
                     {"options", options_},
                     {"inputs", inputs_},
                     {"outputs", outputs_},
                     {"timings_seconds", timings_}};
    std::ofstream out(path);
    out << all.dump(2) << '\n';
}

}  // namespace pglmm::cli
