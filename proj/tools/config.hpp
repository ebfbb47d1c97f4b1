#pragma once

// Strict reader over a JSON configuration. Every key a command may use must be
// declared; anything else is rejected. Values read (including defaults) are
// recorded so the resolved configuration can be echoed into the output.

#include <json.hpp>

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace cli {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Section {
public:
    Section(const nlohmann::json& node, nlohmann::json& resolved, std::string path, std::set<std::string> allowed);

    [[nodiscard]] bool has(const std::string& key) const;

    double number(const std::string& key, double fallback);
    double number(const std::string& key);
    long long integer(const std::string& key, long long fallback);
    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback);
    bool boolean(const std::string& key, bool fallback);
    std::string text(const std::string& key, const std::string& fallback);
    std::string text(const std::string& key);
    std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback);
    std::vector<long long> integers(const std::string& key, const std::vector<long long>& fallback);
    std::vector<std::string> texts(const std::string& key, const std::vector<std::string>& fallback);

    /// Nested object; a missing key yields an empty section.
    Section child(const std::string& key, std::set<std::string> allowed);

    [[nodiscard]] const std::string& path() const { return path_; }

private:
    [[nodiscard]] std::string where(const std::string& key) const;
    const nlohmann::json* find(const std::string& key) const;

    const nlohmann::json& node_;
    nlohmann::json& resolved_;
    std::string path_;
};

}  // namespace cli
