#pragma once

// Tabular results with a metadata header, serialized as CSV or JSON with
// 17 significant digits so identical runs give identical bytes.

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace cli {

struct Null {};
using Cell = std::variant<Null, double, long long, bool, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    std::vector<std::pair<std::string, Cell>> summary;

    void add_summary(std::string key, Cell value) { summary.emplace_back(std::move(key), std::move(value)); }
};

enum class Format { Csv, Json };

std::string format_number(double value);

/// config_json is the compact resolved config; embedded verbatim.
std::string render(const Table& table, const std::string& config_json, std::uint64_t seed, Format format);

/// Writes to a sibling temporary file and renames it over path.
void write_atomically(const std::string& path, const std::string& content);

}  // namespace cli
