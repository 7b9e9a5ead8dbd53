#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "sdfnet/model.hpp"
#include "sdfnet/rational.hpp"

namespace sdfnet {

struct CostTable {
    double dsp_per_mac = 1.0;
    double lut_base = 150.0;       // fixed control logic per block
    double lut_per_mac = 60.0;     // ConvBank datapath per active MAC
    double lut_per_lane = 25.0;    // Pool/Nonlin banks per parallel lane
};

struct PlatformSpec {
    std::string name = "zynq7045";
    double clock_mhz = 125.0;
    double peak_gops = 270.0;
    std::int64_t dsp_total = 900;
    std::int64_t lut_total = 218600;
    double bram_kb_total = 2400.0;
    double mem_bandwidth_gbps = 4.2;
    int word_bytes = 2;
    double reconfig_time_ms = 80.0;
    CostTable cost;

    double clock_hz() const { return clock_mhz * 1e6; }

    /// B_mem: memory port words/cycle, derived from bandwidth. Kept rational
    /// (milli-word resolution) so Γ stays exact.
    Rat mem_words_per_cycle() const {
        double words = mem_bandwidth_gbps * 1e9 / (word_bytes * clock_hz());
        return Rat(static_cast<std::int64_t>(std::llround(words * 1000)), 1000);
    }

    void check() const {
        if (clock_mhz <= 0 || peak_gops <= 0 || dsp_total < 0 || lut_total < 0 ||
            bram_kb_total < 0 || mem_bandwidth_gbps <= 0 || word_bytes <= 0 ||
            reconfig_time_ms < 0)
            throw ModelError("platform spec: fields must be positive");
    }
};

namespace toml {

// Minimal TOML subset: [section] headers, key = value lines, # comments.
inline std::map<std::string, std::map<std::string, std::string>> parse(const std::string& text) {
    std::map<std::string, std::map<std::string, std::string>> out;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const char* ws = " \t\r";
        s.erase(0, s.find_first_not_of(ws));
        auto end = s.find_last_not_of(ws);
        s.erase(end == std::string::npos ? 0 : end + 1);
        return s;
    };
    while (std::getline(in, line)) {
        lineno++;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ModelError("platform file line " + std::to_string(lineno) +
                                 ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ModelError("platform file line " + std::to_string(lineno) +
                             ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (val.size() >= 2 && val.front() == '"' && val.back() == '"')
            val = val.substr(1, val.size() - 2);
        out[section][key] = val;
    }
    return out;
}

}  // namespace toml

inline PlatformSpec parse_platform(const std::string& text) {
    auto t = toml::parse(text);
    PlatformSpec p;
    auto get = [&](const std::string& sec, const std::string& key, double dflt) {
        auto s = t.find(sec);
        if (s == t.end()) return dflt;
        auto k = s->second.find(key);
        if (k == s->second.end()) return dflt;
        return std::stod(k->second);
    };
    if (t.count("platform") && t["platform"].count("name")) p.name = t["platform"]["name"];
    p.clock_mhz = get("clock", "mhz", p.clock_mhz);
    p.peak_gops = get("clock", "peak_gops", p.peak_gops);
    p.dsp_total = static_cast<std::int64_t>(get("resources", "dsp", double(p.dsp_total)));
    p.lut_total = static_cast<std::int64_t>(get("resources", "lut", double(p.lut_total)));
    p.bram_kb_total = get("resources", "bram_kb", p.bram_kb_total);
    p.mem_bandwidth_gbps = get("memory", "bandwidth_gbps", p.mem_bandwidth_gbps);
    p.word_bytes = static_cast<int>(get("memory", "word_bytes", double(p.word_bytes)));
    p.reconfig_time_ms = get("memory", "reconfig_time_ms", p.reconfig_time_ms);
    p.cost.dsp_per_mac = get("cost_table", "dsp_per_mac", p.cost.dsp_per_mac);
    p.cost.lut_base = get("cost_table", "lut_base", p.cost.lut_base);
    p.cost.lut_per_mac = get("cost_table", "lut_per_mac", p.cost.lut_per_mac);
    p.cost.lut_per_lane = get("cost_table", "lut_per_lane", p.cost.lut_per_lane);
    p.check();
    return p;
}

inline PlatformSpec load_platform(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open platform file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_platform(ss.str());
}

}  // namespace sdfnet
