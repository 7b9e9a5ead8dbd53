// sdfnet command line: parse -> optimize -> simulate -> report.
//
// Exit codes: 0 ok, 2 input error, 3 infeasible instance,
//             4 model-vs-simulation divergence above tolerance.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "sdfnet/sdfnet.hpp"

namespace {

constexpr int kExitInput = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitDivergence = 4;

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw sdfnet::ModelError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spill(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw sdfnet::ModelError("cannot write '" + path + "'");
    out << content;
}

sdfnet::ConvNetModel load_model(const std::string& path, const std::string& format) {
    const std::string text = slurp(path);
    if (format == "prototxt") return sdfnet::parse_prototxt(text);
    if (format == "native") return sdfnet::parse_native(text);
    // auto: sniff JSON
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        return c == '{' ? sdfnet::parse_native(text) : sdfnet::parse_prototxt(text);
    }
    throw sdfnet::ModelError("empty model file");
}

sdfnet::PlatformSpec load_platform_arg(std::string path) {
    if (path.empty()) {
        if (const char* env = std::getenv("SDFNET_PLATFORM")) path = env;
    }
    if (path.empty())
        throw sdfnet::ModelError("no platform file (use --platform or SDFNET_PLATFORM)");
    return sdfnet::load_platform(path);
}

int cmd_parse(const std::string& model_path, const std::string& format) {
    auto model = load_model(model_path, format);
    std::cout << "model: " << model.name << "\n";
    std::cout << "input: (" << model.input_shape.channels << ", " << model.input_shape.h << ", "
              << model.input_shape.w << ")\n\n";
    std::cout << std::left << std::setw(20) << "layer" << std::setw(14) << "kind"
              << std::setw(18) << "in (c,h,w)" << std::setw(18) << "out (c,h,w)"
              << "params\n";
    for (int li : model.topo_order()) {
        const auto& l = model.layers[li];
        std::ostringstream in, out, params;
        in << "(" << l.in_shape.channels << "," << l.in_shape.h << "," << l.in_shape.w << ")";
        out << "(" << l.out_shape.channels << "," << l.out_shape.h << "," << l.out_shape.w << ")";
        switch (l.kind) {
            case sdfnet::LayerKind::Convolution:
                params << "K=" << l.kernel << " s=" << l.stride << " p=" << l.padding
                       << " Nf=" << l.num_filters;
                break;
            case sdfnet::LayerKind::Pooling:
                params << "K=" << l.kernel << " s=" << l.stride
                       << " op=" << (l.pool_op == sdfnet::PoolOp::Avg ? "avg" : "max");
                break;
            case sdfnet::LayerKind::InnerProduct:
                params << "Nf=" << l.num_filters;
                break;
            case sdfnet::LayerKind::Split:
                params << "fan_out=" << l.fan_out;
                break;
            default:
                break;
        }
        std::cout << std::left << std::setw(20) << l.id << std::setw(14)
                  << sdfnet::to_string(l.kind) << std::setw(18) << in.str() << std::setw(18)
                  << out.str() << params.str() << "\n";
    }
    return 0;
}

int cmd_optimize(const std::string& model_path, const std::string& format,
                 const std::string& platform_path, const std::string& objective,
                 std::uint64_t seed, int max_partitions, std::int64_t max_batch, int iterations,
                 const std::string& out_path, const std::string& log_path,
                 const std::string& pareto_csv_path, const std::string& pareto_svg_path) {
    auto model = load_model(model_path, format);
    auto platform = load_platform_arg(platform_path);
    const std::uint64_t fingerprint = sdfnet::fnv1a(slurp(platform_path.empty()
                                                              ? std::getenv("SDFNET_PLATFORM")
                                                              : platform_path));
    sdfnet::SearchBounds bounds;
    bounds.max_partitions = max_partitions;
    bounds.max_batch = max_batch;
    sdfnet::AnnealingSchedule sched;
    sched.iterations = iterations;

    if (objective == "pareto") {
        auto res = sdfnet::pareto_search(model, platform, {seed, seed + 1, seed + 2}, bounds,
                                         sched);
        if (!pareto_csv_path.empty()) spill(pareto_csv_path, sdfnet::pareto_csv(res.front));
        if (!pareto_svg_path.empty()) spill(pareto_svg_path, sdfnet::pareto_svg(res.front));
        if (!log_path.empty()) spill(log_path, sdfnet::eval_log_csv(res.log));
        std::cout << "pareto front: " << res.front.size() << " designs\n";
        std::cout << std::setprecision(6);
        for (const auto& p : res.front)
            std::cout << "  throughput " << p.throughput << " inputs/s, latency " << p.latency
                      << " s\n";
        return 0;
    }

    sdfnet::Objective obj;
    obj.kind = objective == "latency" ? sdfnet::Objective::MinLatency
                                      : sdfnet::Objective::MaxThroughput;
    sdfnet::SearchResult res;
    try {
        res = sdfnet::simulated_annealing(model, platform, obj, seed, bounds, sched);
    } catch (const sdfnet::SearchError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        // slack report for the unfolded single-partition design
        sdfnet::DesignPoint probe;
        probe.batch = 1;
        try {
            probe = sdfnet::evaluate_design(model, platform, probe);
            auto f = sdfnet::check_feasible(probe.usage, platform);
            for (const auto& en : f.entries)
                std::cerr << "  " << en.resource << ": used " << en.used << " / budget "
                          << en.budget << " (slack " << en.slack << ")\n";
        } catch (const sdfnet::ModelError&) {
        }
        return kExitInfeasible;
    }
    if (!log_path.empty()) spill(log_path, sdfnet::eval_log_csv(res.log));
    const auto& best = *res.best;
    if (!out_path.empty())
        spill(out_path,
              sdfnet::serialize_descriptor(model, best, platform.name, fingerprint, seed));
    std::cout << "best design (" << objective << "):\n";
    std::cout << "  " << best.key() << "\n";
    std::cout << std::setprecision(6) << "  throughput " << best.perf.throughput_inputs_s
              << " inputs/s (" << best.perf.throughput_gops << " GOp/s), latency "
              << best.perf.latency_s << " s\n";
    std::cout << "  resources: dsp " << best.usage.dsp << ", bram " << best.usage.bram_kb
              << " KB, lut " << best.usage.lut << ", bandwidth " << best.usage.bandwidth_gbps
              << " GB/s\n";
    return 0;
}

int cmd_simulate(const std::string& descriptor_path, const std::string& model_path,
                 const std::string& format, const std::string& platform_path,
                 std::int64_t batch_override, double tolerance) {
    auto desc = sdfnet::parse_descriptor(slurp(descriptor_path));
    auto model = load_model(model_path, format);
    auto platform = load_platform_arg(platform_path);

    sdfnet::DesignPoint point = desc.point;
    if (batch_override > 0) point.batch = batch_override;
    point = sdfnet::evaluate_design(model, platform, point);

    auto part = sdfnet::partition_graph(model, point.cut_points, point.folding,
                                        platform.mem_words_per_cycle());
    double predicted = 0, simulated = 0;
    for (const auto& g : part.subgraphs) {
        predicted += sdfnet::rat_double(sdfnet::analytic_cycles(g, point.batch));
        auto sim = sdfnet::simulate_batch(g, point.batch);
        if (sim.deadlocked || sim.hit_max_cycles) {
            std::cerr << "simulation did not complete\n";
            return kExitDivergence;
        }
        simulated += double(sim.total_cycles);
    }
    const double rel_err = std::abs(predicted - simulated) / simulated;
    std::cout << std::setprecision(8) << "batch " << point.batch << "\n"
              << "predicted cycles: " << predicted << "\n"
              << "simulated cycles: " << simulated << "\n"
              << "relative error:   " << rel_err * 100 << " %\n";
    if (rel_err > tolerance) {
        std::cerr << "divergence above tolerance (" << tolerance * 100 << " %)\n";
        return kExitDivergence;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ConvNet-to-accelerator design space exploration"};
    app.require_subcommand(1);

    std::string model_path, format = "auto", platform_path, objective = "throughput";
    std::string out_path, log_path, pareto_csv_path, pareto_svg_path, descriptor_path;
    std::uint64_t seed = 1;
    int max_partitions = 2, iterations = 1500;
    std::int64_t max_batch = 1024, batch_override = 0;
    double tolerance = 0.05;

    auto* parse = app.add_subcommand("parse", "parse a model and print the layer table");
    parse->add_option("model", model_path)->required();
    parse->add_option("--format", format)->check(CLI::IsMember({"auto", "native", "prototxt"}));

    auto* optimize = app.add_subcommand("optimize", "search the design space");
    optimize->add_option("model", model_path)->required();
    optimize->add_option("--format", format)->check(CLI::IsMember({"auto", "native", "prototxt"}));
    optimize->add_option("--platform", platform_path);
    optimize->add_option("--objective", objective)
        ->check(CLI::IsMember({"throughput", "latency", "pareto"}));
    optimize->add_option("--seed", seed);
    optimize->add_option("--max-partitions", max_partitions);
    optimize->add_option("--max-batch", max_batch);
    optimize->add_option("--iterations", iterations);
    optimize->add_option("--out", out_path);
    optimize->add_option("--log", log_path);
    optimize->add_option("--pareto-csv", pareto_csv_path);
    optimize->add_option("--pareto-svg", pareto_svg_path);

    auto* simulate = app.add_subcommand("simulate", "replay a descriptor against the simulator");
    simulate->add_option("descriptor", descriptor_path)->required();
    simulate->add_option("model", model_path)->required();
    simulate->add_option("--format", format)->check(CLI::IsMember({"auto", "native", "prototxt"}));
    simulate->add_option("--platform", platform_path);
    simulate->add_option("--batch", batch_override);
    simulate->add_option("--tolerance", tolerance);

    CLI11_PARSE(app, argc, argv);

    try {
        if (parse->parsed()) return cmd_parse(model_path, format);
        if (optimize->parsed())
            return cmd_optimize(model_path, format, platform_path, objective, seed,
                                max_partitions, max_batch, iterations, out_path, log_path,
                                pareto_csv_path, pareto_svg_path);
        if (simulate->parsed())
            return cmd_simulate(descriptor_path, model_path, format, platform_path,
                                batch_override, tolerance);
    } catch (const sdfnet::ModelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return 0;
}
