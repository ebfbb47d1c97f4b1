#pragma once

// Helpers for driving the bbgp executable from tests.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

namespace clitest {

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f << text;
}

inline std::string quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return out + "'";
}

struct Workspace {
    fs::path dir;
    std::string cli;

    explicit Workspace(std::string cli_path) : cli(std::move(cli_path)) {
        dir = fs::temp_directory_path() / ("bbgp_cli_" + std::to_string(::getpid()));
        fs::create_directories(dir);
    }
    ~Workspace() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }

    fs::path config(const std::string& name, const std::string& json) const {
        const fs::path p = dir / name;
        write_file(p, json);
        return p;
    }

    /// Runs `bbgp args...`; stderr goes to dir/stderr.txt. Returns the exit status.
    int run(const std::string& args) const {
        const std::string cmd = quote(cli) + " " + args + " 2> " + quote((dir / "stderr.txt").string());
        const int status = std::system(cmd.c_str());
        if (status == -1 || !WIFEXITED(status)) return -1;
        return WEXITSTATUS(status);
    }

    int run(const std::string& sub, const fs::path& cfg, const fs::path& out, const std::string& extra = "") const {
        return run(sub + " --config " + quote(cfg.string()) + " --out " + quote(out.string()) + " " + extra);
    }

    [[nodiscard]] std::string last_stderr() const { return read_file(dir / "stderr.txt"); }
};

/// CSV body parsed as numbers: blank cells become NaN, true/false become 1/0.
struct Csv {
    std::vector<std::string> comments;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    [[nodiscard]] std::size_t col(const std::string& name) const {
        for (std::size_t j = 0; j < columns.size(); ++j)
            if (columns[j] == name) return j;
        throw std::runtime_error("no column " + name);
    }
    [[nodiscard]] std::vector<double> column(const std::string& name) const {
        const std::size_t j = col(name);
        std::vector<double> out;
        for (const auto& r : rows) out.push_back(r[j]);
        return out;
    }
    /// Value of a "# key: value" header line.
    [[nodiscard]] std::string meta(const std::string& key) const {
        const std::string prefix = "# " + key + ": ";
        for (const auto& c : comments)
            if (c.rfind(prefix, 0) == 0) return c.substr(prefix.size());
        throw std::runtime_error("no header " + key);
    }
};

inline std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline Csv parse_csv(const std::string& text) {
    Csv csv;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            csv.comments.push_back(line);
            continue;
        }
        if (csv.columns.empty()) {
            csv.columns = split(line);
            continue;
        }
        std::vector<double> row;
        for (const auto& cell : split(line)) {
            if (cell.empty()) row.push_back(std::nan(""));
            else if (cell == "true") row.push_back(1.0);
            else if (cell == "false") row.push_back(0.0);
            else row.push_back(std::stod(cell));
        }
        csv.rows.push_back(std::move(row));
    }
    return csv;
}

}  // namespace clitest
