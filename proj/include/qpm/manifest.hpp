#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qpm {

/// Record of one CLI run, written next to the run's outputs so the run can
/// be reproduced exactly. args holds everything after the program name,
/// subcommand included.
struct RunManifest {
    std::string command;
    std::vector<std::string> args;
    std::string version;
    double duration_s = 0.0;
    std::vector<std::string> outputs;
};

inline std::string serialize_manifest(const RunManifest& m) {
    std::string out;
    out += "command=" + m.command + "\n";
    out += "version=" + m.version + "\n";
    char buf[48];
    std::snprintf(buf, sizeof buf, "duration_s=%.6f\n", m.duration_s);
    out += buf;
    for (std::size_t k = 0; k < m.args.size(); ++k)
        out += "arg" + std::to_string(k) + "=" + m.args[k] + "\n";
    for (std::size_t k = 0; k < m.outputs.size(); ++k)
        out += "output" + std::to_string(k) + "=" + m.outputs[k] + "\n";
    return out;
}

/// Flat key=value parser. Unknown keys are ignored so newer tools can add
/// fields; argN/outputN are collected by index, not file order.
inline RunManifest parse_manifest(const std::string& text) {
    RunManifest m;
    std::vector<std::pair<std::size_t, std::string>> args, outputs;

    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("manifest: malformed line: " + line);
        const std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);

        const auto index_of = [&](const char* prefix) -> long {
            const std::size_t n = std::string(prefix).size();
            if (key.size() <= n || key.compare(0, n, prefix) != 0) return -1;
            for (std::size_t k = n; k < key.size(); ++k)
                if (!std::isdigit(static_cast<unsigned char>(key[k]))) return -1;
            return std::strtol(key.c_str() + n, nullptr, 10);
        };

        if (key == "command") {
            m.command = std::move(value);
        } else if (key == "version") {
            m.version = std::move(value);
        } else if (key == "duration_s") {
            char* end = nullptr;
            m.duration_s = std::strtod(value.c_str(), &end);
            if (end == value.c_str())
                throw std::invalid_argument("manifest: bad duration: " + value);
        } else if (const long a = index_of("arg"); a >= 0) {
            args.emplace_back(static_cast<std::size_t>(a), std::move(value));
        } else if (const long o = index_of("output"); o >= 0) {
            outputs.emplace_back(static_cast<std::size_t>(o), std::move(value));
        }
        // anything else: ignored
    }

    std::sort(args.begin(), args.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    std::sort(outputs.begin(), outputs.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    for (auto& [k, v] : args) m.args.push_back(std::move(v));
    for (auto& [k, v] : outputs) m.outputs.push_back(std::move(v));
    return m;
}

inline void write_manifest(const std::string& path, const RunManifest& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    const std::string text = serialize_manifest(m);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("short write on manifest: " + path);
}

inline RunManifest read_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open manifest: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_manifest(buf.str());
}

}  // namespace qpm
