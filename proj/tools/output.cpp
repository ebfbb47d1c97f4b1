#include "output.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <system_error>

#include <unistd.h>

namespace cli {

namespace {

std::string json_string(const std::string& s) {
    std::string out = "\"";
    for (const unsigned char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (c < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += static_cast<char>(c);
                }
        }
    }
    return out + "\"";
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (const char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

std::string cell_text(const Cell& cell, Format format) {
    return std::visit(
        [format](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Null>) {
                return format == Format::Json ? "null" : "";
            } else if constexpr (std::is_same_v<T, double>) {
                if (!std::isfinite(v) && format == Format::Json) return "null";
                return format_number(v);
            } else if constexpr (std::is_same_v<T, long long>) {
                return std::to_string(v);
            } else if constexpr (std::is_same_v<T, bool>) {
                return v ? "true" : "false";
            } else {
                return format == Format::Json ? json_string(v) : csv_field(v);
            }
        },
        cell);
}

}  // namespace

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    if (value == 0.0) return "0";  // folds -0 as well
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::string render(const Table& table, const std::string& config_json, std::uint64_t seed, Format format) {
    std::string out;
    if (format == Format::Csv) {
        out += "# config: " + config_json + "\n";
        out += "# seed: " + std::to_string(seed) + "\n";
        for (const auto& [key, value] : table.summary) out += "# " + key + ": " + cell_text(value, format) + "\n";
        for (std::size_t j = 0; j < table.columns.size(); ++j) {
            if (j) out += ",";
            out += csv_field(table.columns[j]);
        }
        out += "\n";
        for (const auto& row : table.rows) {
            for (std::size_t j = 0; j < row.size(); ++j) {
                if (j) out += ",";
                out += cell_text(row[j], format);
            }
            out += "\n";
        }
        return out;
    }
    out += "{\"config\":" + config_json + ",\"seed\":" + std::to_string(seed) + ",\"summary\":{";
    for (std::size_t k = 0; k < table.summary.size(); ++k) {
        if (k) out += ",";
        out += json_string(table.summary[k].first) + ":" + cell_text(table.summary[k].second, format);
    }
    out += "},\"columns\":[";
    for (std::size_t j = 0; j < table.columns.size(); ++j) {
        if (j) out += ",";
        out += json_string(table.columns[j]);
    }
    out += "],\"rows\":[";
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        out += i ? ",\n[" : "\n[";
        for (std::size_t j = 0; j < table.rows[i].size(); ++j) {
            if (j) out += ",";
            out += cell_text(table.rows[i][j], format);
        }
        out += "]";
    }
    out += "]}\n";
    return out;
}

void write_atomically(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        f.flush();
        if (!f) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw std::runtime_error("failed writing '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw std::runtime_error("cannot rename output into '" + path + "'");
    }
}

}  // namespace cli
