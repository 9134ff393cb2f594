#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"

namespace collective::io {

/// 17 significant digits (round-trip safe) for every number in a data file.
inline std::string format(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string format(int v) { return std::to_string(v); }
inline std::string format(std::size_t v) { return std::to_string(v); }
inline std::string format(const std::string& s) { return s; }
inline std::string format(const char* s) { return s; }

/// CSV table with a single header line.
class Table {
public:
    explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

    template <class... T>
    void row(const T&... v) {
        static_assert(sizeof...(T) > 0);
        std::vector<std::string> r{format(v)...};
        if (r.size() != header_.size()) throw InvalidArgument("CSV row width does not match header");
        rows_.push_back(std::move(r));
    }

    std::string str() const {
        std::string out;
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i) out += ',';
                out += cells[i];
            }
            out += '\n';
        };
        line(header_);
        for (const auto& r : rows_) line(r);
        return out;
    }

    std::size_t size() const { return rows_.size(); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw Error("cannot write " + path.string());
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& path) {
    return path.string() + ".config.json";
}

/// Writes data files together with a sidecar holding the resolved configuration.
class Artifacts {
public:
    Artifacts(std::filesystem::path dir, nlohmann::json config) : dir_(std::move(dir)), config_(std::move(config)) {}

    std::filesystem::path csv(const std::string& name, const Table& table) { return emit(name, table.str()); }
    std::filesystem::path json(const std::string& name, const nlohmann::json& j) { return emit(name, j.dump(2) + "\n"); }

    const std::vector<std::filesystem::path>& written() const { return written_; }

private:
    std::filesystem::path emit(const std::string& name, const std::string& text) {
        const auto path = dir_ / name;
        write_text(path, text);
        write_text(sidecar_path(path), config_.dump(2) + "\n");
        written_.push_back(path);
        return path;
    }

    std::filesystem::path dir_;
    nlohmann::json config_;
    std::vector<std::filesystem::path> written_;
};

/// Applies "a.b.c=value"; the value is parsed as JSON when possible and kept
/// as a string otherwise. Intermediate objects are created as needed.
inline void apply_override(nlohmann::json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw InvalidArgument("override must look like key=value: " + assignment);
    const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    nlohmann::json* node = &config;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw InvalidArgument("empty path component in override: " + key);
        if (!node->is_object()) throw InvalidArgument("override path crosses a non-object: " + key);
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        if (node->is_null()) *node = nlohmann::json::object();
        start = dot + 1;
    }
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open config " + path.string());
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw InvalidArgument("config is not valid JSON: " + path.string());
    return j;
}

/// A numeric grid given either as an explicit array or as {start, stop, step}
/// (stop included up to rounding).
inline std::vector<double> grid_from_json(const nlohmann::json& j, const std::string& what) {
    std::vector<double> out;
    if (j.is_array()) {
        for (const auto& v : j) out.push_back(v.get<double>());
    } else if (j.is_object()) {
        const double a = j.at("start").get<double>(), b = j.at("stop").get<double>(), h = j.at("step").get<double>();
        if (!(h > 0.0)) throw InvalidArgument(what + ": step must be positive");
        const auto n = static_cast<long>(std::floor((b - a) / h + 1e-9));
        for (long i = 0; i <= n; ++i) out.push_back(a + i * h);
    } else {
        throw InvalidArgument(what + ": expected an array or {start, stop, step}");
    }
    if (out.empty()) throw InvalidArgument(what + ": grid is empty");
    return out;
}

}  // namespace collective::io
