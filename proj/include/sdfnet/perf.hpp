#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "sdfnet/platform.hpp"
#include "sdfnet/sdf.hpp"
#include "sdfnet/transforms.hpp"

namespace sdfnet {

struct PerfEstimate {
    double cycles_per_input = 0;    // batch-1 cycles (fill + II, plus per-mode sums)
    double latency_s = 0;           // batch-1 latency incl. reconfig/reload
    double throughput_inputs_s = 0; // at the requested batch size
    double throughput_gops = 0;
    std::int64_t batch = 1;
};

struct ResourceUsage {
    double dsp = 0;
    double bram_kb = 0;
    double lut = 0;
    double bandwidth_gbps = 0;
};

struct Feasibility {
    struct Entry {
        std::string resource;
        double used = 0, budget = 0, slack = 0;
    };
    bool ok = true;
    std::vector<Entry> entries;

    std::string worst() const {
        for (const auto& e : entries)
            if (e.slack < 0) return e.resource;
        return "";
    }
};

// ---------------------------------------------------------------------------
// Cycle model. The architecture is a feed-forward coarse pipeline, so the
// steady state is governed by the slowest arc endpoint and the batch-1 cost
// adds a pipeline-fill term.
// ---------------------------------------------------------------------------

/// Elements a block must absorb before its first output can leave.
inline std::int64_t fill_elements(const BuildingBlock& b) {
    switch (b.kind) {
        case BlockKind::SlidingWindow:
            return (b.kernel - 1) * b.in_w + b.kernel;  // line buffers + first window
        case BlockKind::Fork:
            return b.broadcast ? b.kernel * b.kernel : 1;
        case BlockKind::ConvBank:
            // full first window, all channels, broadcast over the filter bank
            return b.channels * b.kernel * b.kernel * b.filters;
        case BlockKind::PoolBank:
            return b.kernel * b.kernel;
        default:
            return 1;
    }
}

/// II = max over nonzero (a, n) of W(a, n)/|Γ(a, n)|: cycles the slowest
/// block needs per input at steady state.
inline Rat initiation_interval(const SdfGraph& g) {
    Rat ii(0);
    for (const auto& arc : g.arcs) {
        Rat w(arc.work);
        if (arc.prod_rate > Rat(0)) ii = std::max(ii, w / arc.prod_rate);
        if (arc.cons_rate > Rat(0)) ii = std::max(ii, w / arc.cons_rate);
    }
    return ii;
}

/// Pipeline fill: sum of first-output delays over non-source blocks. The
/// window is capped at the block's per-inference workload, matching what a
/// small frame can actually supply.
inline Rat pipeline_fill(const SdfGraph& g) {
    Rat fill(0);
    for (std::size_t b = 0; b < g.blocks.size(); ++b) {
        if (g.blocks[b].is_source()) continue;
        Rat cons(0);
        for (int a : g.in_arcs(static_cast<int>(b))) cons += g.arcs[a].cons_rate;
        if (cons == Rat(0)) continue;
        const std::int64_t window =
            std::min(fill_elements(g.blocks[b]), workload_in(g, static_cast<int>(b)));
        fill += Rat(window) / cons;
    }
    return fill;
}

inline Rat analytic_cycles(const SdfGraph& g, std::int64_t batch) {
    return pipeline_fill(g) + Rat(batch) * initiation_interval(g);
}

/// Total arithmetic per inference, in ops (2 ops per MAC; pooling and
/// nonlinearities at 1 op per output element).
inline double total_ops(const SdfGraph& g) {
    double ops = 0;
    for (const auto& b : g.blocks) {
        switch (b.kind) {
            case BlockKind::ConvBank:
                ops += 2.0 * double(b.kernel * b.kernel) * double(b.channels) *
                       double(b.out_h * b.out_w) * double(b.filters);
                break;
            case BlockKind::PoolBank:
            case BlockKind::NonlinBank:
                ops += double(b.channels) * double(b.out_h * b.out_w);
                break;
            default:
                break;
        }
    }
    return ops;
}

inline PerfEstimate estimate_single_partition(const SdfGraph& g, const PlatformSpec& platform,
                                              std::int64_t batch) {
    PerfEstimate e;
    e.batch = batch;
    const double cycles1 = rat_double(analytic_cycles(g, 1));
    const double cyclesB = rat_double(analytic_cycles(g, batch));
    e.cycles_per_input = cycles1;
    e.latency_s = cycles1 / platform.clock_hz();
    e.throughput_inputs_s = double(batch) * platform.clock_hz() / cyclesB;
    e.throughput_gops = total_ops(g) * e.throughput_inputs_s / 1e9;
    return e;
}

/// Graph partitioning with reconfiguration: one full-FPGA architecture per
/// partition, full reconfiguration in between, amortised by batching.
inline PerfEstimate estimate_reconfig_design(const Partitioning& p, const PlatformSpec& platform,
                                             std::int64_t batch) {
    PerfEstimate e;
    e.batch = batch;
    const double reconfig_s = platform.reconfig_time_ms / 1e3;
    double total_s = 0, latency_s = 0, ops = 0;
    for (const auto& g : p.subgraphs) {
        const double cyclesB = rat_double(analytic_cycles(g, batch));
        const double cycles1 = rat_double(analytic_cycles(g, 1));
        total_s += reconfig_s + cyclesB / platform.clock_hz();
        latency_s += reconfig_s + cycles1 / platform.clock_hz();
        e.cycles_per_input += cycles1;
        ops += total_ops(g);
    }
    e.latency_s = latency_s;
    e.throughput_inputs_s = double(batch) / total_s;
    e.throughput_gops = ops * e.throughput_inputs_s / 1e9;
    return e;
}

/// Weights reloading: the reference architecture runs every mode in
/// sequence, swapping only weights over the memory bus; no reconfiguration
/// penalty enters the latency.
inline PerfEstimate estimate_weights_reloading_design(const ReferenceArchitecture& ra,
                                                      const PlatformSpec& platform,
                                                      std::int64_t batch) {
    PerfEstimate e;
    e.batch = batch;
    double total_s = 0, latency_s = 0, ops = 0;
    for (std::size_t m = 0; m < ra.modes.size(); ++m) {
        const auto& g = ra.mode_graphs[m];
        const double reload_s =
            double(ra.modes[m].weights_bytes) / (platform.mem_bandwidth_gbps * 1e9);
        const double cyclesB = rat_double(analytic_cycles(g, batch));
        const double cycles1 = rat_double(analytic_cycles(g, 1));
        total_s += reload_s + cyclesB / platform.clock_hz();
        latency_s += reload_s + cycles1 / platform.clock_hz();
        e.cycles_per_input += cycles1;
        ops += total_ops(g);
    }
    e.latency_s = latency_s;
    e.throughput_inputs_s = double(batch) / total_s;
    e.throughput_gops = ops * e.throughput_inputs_s / 1e9;
    return e;
}

// ---------------------------------------------------------------------------
// Resource model: linear in the folding factors, coefficients from the
// platform cost table.
// ---------------------------------------------------------------------------

inline ResourceUsage block_resources(const BuildingBlock& b, const PlatformSpec& platform) {
    ResourceUsage r;
    const auto& ct = platform.cost;
    switch (b.kind) {
        case BlockKind::ConvBank:
            r.dsp = double(b.coarse * b.fine) * ct.dsp_per_mac;
            r.lut = ct.lut_base + double(b.coarse * b.fine) * ct.lut_per_mac;
            break;
        case BlockKind::SlidingWindow:
            r.bram_kb = double((b.kernel - 1) * b.in_w * b.channels * platform.word_bytes) / 1024.0;
            r.lut = ct.lut_base;
            break;
        case BlockKind::PoolBank:
        case BlockKind::NonlinBank:
            r.lut = ct.lut_base + double(b.coarse) * ct.lut_per_lane;
            break;
        default:
            r.lut = ct.lut_base;
            break;
    }
    return r;
}

inline ResourceUsage estimate_resources(const SdfGraph& g, const PlatformSpec& platform) {
    ResourceUsage r;
    for (const auto& b : g.blocks) {
        auto br = block_resources(b, platform);
        r.dsp += br.dsp;
        r.bram_kb += br.bram_kb;
        r.lut += br.lut;
    }
    Rat port(0);
    for (const auto& arc : g.arcs) {
        if (g.blocks[arc.from].is_source()) port += arc.prod_rate;
        if (g.blocks[arc.to].is_sink()) port += arc.cons_rate;
    }
    r.bandwidth_gbps = rat_double(port) * platform.word_bytes * platform.clock_hz() / 1e9;
    return r;
}

/// Reconfigured partitions each own the whole fabric in turn: the design
/// needs the elementwise maximum over partitions.
inline ResourceUsage estimate_resources(const Partitioning& p, const PlatformSpec& platform) {
    ResourceUsage r;
    for (const auto& g : p.subgraphs) {
        auto u = estimate_resources(g, platform);
        r.dsp = std::max(r.dsp, u.dsp);
        r.bram_kb = std::max(r.bram_kb, u.bram_kb);
        r.lut = std::max(r.lut, u.lut);
        r.bandwidth_gbps = std::max(r.bandwidth_gbps, u.bandwidth_gbps);
    }
    return r;
}

/// The reference architecture instantiates the envelope: per pipeline
/// position, the most demanding variant.
inline ResourceUsage estimate_resources(const ReferenceArchitecture& ra,
                                        const PlatformSpec& platform) {
    ResourceUsage r;
    for (const auto& slot : ra.slots) {
        ResourceUsage worst;
        for (const auto& b : slot.variants) {
            auto br = block_resources(b, platform);
            worst.dsp = std::max(worst.dsp, br.dsp);
            worst.bram_kb = std::max(worst.bram_kb, br.bram_kb);
            worst.lut = std::max(worst.lut, br.lut);
        }
        r.dsp += worst.dsp;
        r.bram_kb += worst.bram_kb;
        r.lut += worst.lut;
    }
    for (const auto& g : ra.mode_graphs) {
        auto u = estimate_resources(g, platform);
        r.bandwidth_gbps = std::max(r.bandwidth_gbps, u.bandwidth_gbps);
    }
    return r;
}

/// Budgets are closed: usage equal to the budget is feasible.
inline Feasibility check_feasible(const ResourceUsage& u, const PlatformSpec& platform) {
    Feasibility f;
    auto add = [&](const std::string& name, double used, double budget) {
        f.entries.push_back({name, used, budget, budget - used});
        if (used > budget) f.ok = false;
    };
    add("dsp", u.dsp, double(platform.dsp_total));
    add("bram_kb", u.bram_kb, platform.bram_kb_total);
    add("lut", u.lut, double(platform.lut_total));
    add("bandwidth_gbps", u.bandwidth_gbps, platform.mem_bandwidth_gbps);
    return f;
}

}  // namespace sdfnet
