#pragma once

#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdfnet/dse.hpp"
#include "sdfnet/sdf.hpp"

namespace sdfnet {

inline constexpr const char* kToolName = "sdfnet";
inline constexpr const char* kToolVersion = "0.1.0";

/// FNV-1a, stable across platforms; used for descriptor checksums and
/// platform fingerprints.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setfill('0') << std::setw(16) << v;
    return os.str();
}

// ---------------------------------------------------------------------------
// DesignDescriptor: versioned, self-contained, deterministic key order.
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json descriptor_body(const ConvNetModel& model, const DesignPoint& p,
                                              const std::string& platform_name,
                                              std::uint64_t platform_fingerprint,
                                              std::uint64_t seed) {
    nlohmann::ordered_json j;
    j["format"] = 1;
    j["tool"] = kToolName;
    j["version"] = kToolVersion;
    j["model"] = model.name;
    j["platform"] = {{"name", platform_name}, {"fingerprint", hex64(platform_fingerprint)}};
    j["seed"] = seed;
    j["strategy"] = to_string(p.strategy);
    j["batch"] = p.batch;
    j["cut_points"] = p.cut_points;
    nlohmann::ordered_json coarse = nlohmann::ordered_json::object();
    for (const auto& [l, v] : p.folding.coarse) coarse[l] = v;
    nlohmann::ordered_json fine = nlohmann::ordered_json::object();
    for (const auto& [l, v] : p.folding.fine) fine[l] = v;
    j["folding"] = {{"coarse", coarse}, {"fine", fine}};
    j["performance"] = {{"cycles_per_input", p.perf.cycles_per_input},
                        {"latency_s", p.perf.latency_s},
                        {"throughput_inputs_s", p.perf.throughput_inputs_s},
                        {"throughput_gops", p.perf.throughput_gops}};
    j["resources"] = {{"dsp", p.usage.dsp},
                      {"bram_kb", p.usage.bram_kb},
                      {"lut", p.usage.lut},
                      {"bandwidth_gbps", p.usage.bandwidth_gbps}};
    return j;
}

inline std::string serialize_descriptor(const ConvNetModel& model, const DesignPoint& p,
                                        const std::string& platform_name,
                                        std::uint64_t platform_fingerprint, std::uint64_t seed) {
    auto j = descriptor_body(model, p, platform_name, platform_fingerprint, seed);
    j["checksum"] = hex64(fnv1a(j.dump()));
    return j.dump(2) + "\n";
}

struct Descriptor {
    DesignPoint point;
    std::string model_name;
    std::string platform_name;
    std::string platform_fingerprint;
    std::uint64_t seed = 0;
};

inline Descriptor parse_descriptor(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ModelError(std::string("descriptor: ") + e.what());
    }
    if (j.value("format", 0) != 1) throw ModelError("descriptor: unsupported format version");

    // checksum covers the body with the checksum field removed
    const std::string recorded = j.value("checksum", "");
    nlohmann::ordered_json body = nlohmann::ordered_json::parse(text);
    body.erase("checksum");
    if (recorded != hex64(fnv1a(body.dump())))
        throw ModelError("descriptor: checksum mismatch (file corrupted or edited)");

    Descriptor d;
    d.model_name = j.value("model", "");
    d.platform_name = j.at("platform").value("name", "");
    d.platform_fingerprint = j.at("platform").value("fingerprint", "");
    d.seed = j.value("seed", std::uint64_t{0});
    d.point.strategy = j.value("strategy", "") == std::string("weights_reloading")
                           ? Strategy::WeightsReloading
                           : Strategy::Reconfiguration;
    d.point.batch = j.value("batch", std::int64_t{1});
    for (const auto& c : j.at("cut_points")) d.point.cut_points.push_back(c.get<int>());
    for (const auto& [k, v] : j.at("folding").at("coarse").items())
        d.point.folding.coarse[k] = v.get<std::int64_t>();
    for (const auto& [k, v] : j.at("folding").at("fine").items())
        d.point.folding.fine[k] = v.get<std::int64_t>();
    d.point.perf.cycles_per_input = j.at("performance").value("cycles_per_input", 0.0);
    d.point.perf.latency_s = j.at("performance").value("latency_s", 0.0);
    d.point.perf.throughput_inputs_s = j.at("performance").value("throughput_inputs_s", 0.0);
    d.point.perf.throughput_gops = j.at("performance").value("throughput_gops", 0.0);
    d.point.perf.batch = d.point.batch;
    d.point.usage.dsp = j.at("resources").value("dsp", 0.0);
    d.point.usage.bram_kb = j.at("resources").value("bram_kb", 0.0);
    d.point.usage.lut = j.at("resources").value("lut", 0.0);
    d.point.usage.bandwidth_gbps = j.at("resources").value("bandwidth_gbps", 0.0);
    return d;
}

// ---------------------------------------------------------------------------
// Debug dumps
// ---------------------------------------------------------------------------

inline std::string matrix_csv(const Matrix& m, const SdfGraph& g) {
    std::ostringstream os;
    os << "arc";
    for (const auto& b : g.blocks) os << "," << b.id;
    os << "\n";
    for (std::size_t a = 0; a < m.size(); ++a) {
        os << a;
        for (const auto& v : m[a]) os << "," << rat_str(v);
        os << "\n";
    }
    return os.str();
}

inline std::string graph_dot(const SdfGraph& g) {
    std::ostringstream os;
    os << "digraph sdf {\n  rankdir=LR;\n";
    for (const auto& b : g.blocks)
        os << "  \"" << b.id << "\" [label=\"" << b.id << "\\n" << to_string(b.kind) << "\"];\n";
    for (const auto& arc : g.arcs)
        os << "  \"" << g.blocks[arc.from].id << "\" -> \"" << g.blocks[arc.to].id
           << "\" [label=\"" << rat_str(arc.prod_rate) << " / " << rat_str(arc.cons_rate)
           << "\\nW=" << arc.work << "\"];\n";
    os << "}\n";
    return os.str();
}

inline std::string eval_log_csv(const std::vector<EvalLogRow>& log) {
    std::ostringstream os;
    os << "config_hash,config,throughput_inputs_s,latency_s,throughput_gops,dsp,bram_kb,lut,"
          "bandwidth_gbps,feasible\n";
    os << std::setprecision(12);
    for (const auto& r : log)
        os << hex64(fnv1a(r.key)) << ",\"" << r.key << "\"," << r.throughput << "," << r.latency
           << "," << r.gops << "," << r.dsp << "," << r.bram_kb << "," << r.lut << ","
           << r.bandwidth << "," << (r.feasible ? 1 : 0) << "\n";
    return os.str();
}

inline std::string pareto_csv(const std::vector<ParetoPoint>& front) {
    std::ostringstream os;
    os << "throughput_inputs_s,latency_s,config\n";
    os << std::setprecision(12);
    for (const auto& p : front)
        os << p.throughput << "," << p.latency << ",\"" << p.row.key << "\"\n";
    return os.str();
}

/// Self-contained scatter of throughput vs batch-1 latency.
inline std::string pareto_svg(const std::vector<ParetoPoint>& front) {
    const double width = 640, height = 480, margin = 60;
    double tmax = 1e-12, lmax = 1e-12;
    for (const auto& p : front) {
        tmax = std::max(tmax, p.throughput);
        lmax = std::max(lmax, p.latency);
    }
    auto x = [&](double t) { return margin + (width - 2 * margin) * t / tmax; };
    auto y = [&](double l) { return height - margin - (height - 2 * margin) * l / lmax; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
       << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    os << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "  <line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\""
       << width - margin << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
    os << "  <line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin
       << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
    os << "  <text x=\"" << width / 2 << "\" y=\"" << height - 15
       << "\" text-anchor=\"middle\" font-size=\"13\">throughput (inputs/s)</text>\n";
    os << "  <text x=\"18\" y=\"" << height / 2
       << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 " << height / 2
       << ")\">batch-1 latency (s)</text>\n";
    os << std::setprecision(6);
    for (const auto& p : front)
        os << "  <circle cx=\"" << x(p.throughput) << "\" cy=\"" << y(p.latency)
           << "\" r=\"4\" fill=\"steelblue\"><title>thr=" << p.throughput
           << " lat=" << p.latency << "</title></circle>\n";
    os << "</svg>\n";
    return os.str();
}

}  // namespace sdfnet
