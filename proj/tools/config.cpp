#include "config.hpp"

#include <cmath>

namespace cli {

namespace {
const nlohmann::json& empty_object() {
    static const nlohmann::json e = nlohmann::json::object();
    return e;
}
}  // namespace

Section::Section(const nlohmann::json& node, nlohmann::json& resolved, std::string path, std::set<std::string> allowed)
    : node_(node.is_null() ? empty_object() : node), resolved_(resolved), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError("config key '" + path_ + "' must be an object");
    if (!resolved_.is_object()) resolved_ = nlohmann::json::object();
    for (const auto& item : node_.items())
        if (!allowed.count(item.key()))
            throw ConfigError("unknown config key '" + where(item.key()) + "'");
}

std::string Section::where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

bool Section::has(const std::string& key) const { return node_.contains(key); }

const nlohmann::json* Section::find(const std::string& key) const {
    const auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
}

double Section::number(const std::string& key, double fallback) {
    const auto* v = find(key);
    double out = fallback;
    if (v) {
        if (!v->is_number()) throw ConfigError("config key '" + where(key) + "' must be a number");
        out = v->get<double>();
        if (!std::isfinite(out)) throw ConfigError("config key '" + where(key) + "' must be finite");
    }
    resolved_[key] = out;
    return out;
}

double Section::number(const std::string& key) {
    if (!has(key)) throw ConfigError("missing config key '" + where(key) + "'");
    return number(key, 0.0);
}

long long Section::integer(const std::string& key, long long fallback) {
    const auto* v = find(key);
    long long out = fallback;
    if (v) {
        if (!v->is_number_integer()) throw ConfigError("config key '" + where(key) + "' must be an integer");
        out = v->get<long long>();
    }
    resolved_[key] = out;
    return out;
}

std::uint64_t Section::unsigned_integer(const std::string& key, std::uint64_t fallback) {
    const auto* v = find(key);
    std::uint64_t out = fallback;
    if (v) {
        if (!v->is_number_unsigned()) throw ConfigError("config key '" + where(key) + "' must be a non-negative integer");
        out = v->get<std::uint64_t>();
    }
    resolved_[key] = out;
    return out;
}

bool Section::boolean(const std::string& key, bool fallback) {
    const auto* v = find(key);
    bool out = fallback;
    if (v) {
        if (!v->is_boolean()) throw ConfigError("config key '" + where(key) + "' must be true or false");
        out = v->get<bool>();
    }
    resolved_[key] = out;
    return out;
}

std::string Section::text(const std::string& key, const std::string& fallback) {
    const auto* v = find(key);
    std::string out = fallback;
    if (v) {
        if (!v->is_string()) throw ConfigError("config key '" + where(key) + "' must be a string");
        out = v->get<std::string>();
    }
    resolved_[key] = out;
    return out;
}

std::string Section::text(const std::string& key) {
    if (!has(key)) throw ConfigError("missing config key '" + where(key) + "'");
    return text(key, "");
}

std::vector<double> Section::numbers(const std::string& key, const std::vector<double>& fallback) {
    const auto* v = find(key);
    std::vector<double> out = fallback;
    if (v) {
        if (!v->is_array()) throw ConfigError("config key '" + where(key) + "' must be an array of numbers");
        out.clear();
        for (const auto& e : *v) {
            if (!e.is_number()) throw ConfigError("config key '" + where(key) + "' must be an array of numbers");
            out.push_back(e.get<double>());
        }
    }
    resolved_[key] = out;
    return out;
}

std::vector<long long> Section::integers(const std::string& key, const std::vector<long long>& fallback) {
    const auto* v = find(key);
    std::vector<long long> out = fallback;
    if (v) {
        if (!v->is_array()) throw ConfigError("config key '" + where(key) + "' must be an array of integers");
        out.clear();
        for (const auto& e : *v) {
            if (!e.is_number_integer()) throw ConfigError("config key '" + where(key) + "' must be an array of integers");
            out.push_back(e.get<long long>());
        }
    }
    resolved_[key] = out;
    return out;
}

std::vector<std::string> Section::texts(const std::string& key, const std::vector<std::string>& fallback) {
    const auto* v = find(key);
    std::vector<std::string> out = fallback;
    if (v) {
        if (!v->is_array()) throw ConfigError("config key '" + where(key) + "' must be an array of strings");
        out.clear();
        for (const auto& e : *v) {
            if (!e.is_string()) throw ConfigError("config key '" + where(key) + "' must be an array of strings");
            out.push_back(e.get<std::string>());
        }
    }
    resolved_[key] = out;
    return out;
}

Section Section::child(const std::string& key, std::set<std::string> allowed) {
    const auto* v = find(key);
    nlohmann::json& slot = resolved_[key];
    if (!slot.is_object()) slot = nlohmann::json::object();
    return Section(v ? *v : empty_object(), slot, where(key), std::move(allowed));
}

}  // namespace cli
