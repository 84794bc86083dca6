#pragma once

#include "json.hpp"

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

namespace pglmm::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Collects what one command did; written as an entry of `<dir>/manifest.json`.
class RunManifest {
public:
    explicit RunManifest(std::string command);

    void option(const std::string& name, nlohmann::json value) { options_[name] = std::move(value); }
    void input(const std::filesystem::path& path);
    void output(const std::filesystem::path& path) { outputs_.push_back(path.filename().string()); }
    /// Records the time since the previous stage mark.
    void stage(const std::string& name);

    /// Merges this command's entry into `<dir>/manifest.json`.
    void write(const std::filesystem::path& dir) const;

private:
    std::string command_;
    nlohmann::json options_ = nlohmann::json::object();
    nlohmann::json inputs_ = nlohmann::json::object();
    nlohmann::json timings_ = nlohmann::json::object();
    std::vector<std::string> outputs_;
    std::chrono::steady_clock::time_point last_;
};

}  // namespace pglmm::cli
