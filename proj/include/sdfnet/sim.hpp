#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sdfnet/perf.hpp"
#include "sdfnet/sdf.hpp"

namespace sdfnet {

struct SimConfig {
    std::int64_t fifo_depth = 0;      // 0: per-arc default, 2x producer burst
    std::int64_t max_cycles = 50'000'000;
    bool trace = false;
    std::function<void(std::int64_t cycle, const std::string& block, const std::string& event)>
        trace_sink;
};

struct SimResult {
    std::int64_t total_cycles = 0;
    std::vector<std::int64_t> arc_tokens;        // delivered (consumed) per arc
    std::vector<std::int64_t> block_busy_cycles;  // cycles with any token motion
    std::int64_t first_output_cycle = 0;          // first token into a sink
    bool deadlocked = false;
    bool hit_max_cycles = false;
    std::vector<int> starved_arcs;   // empty-FIFO inputs at stall
    std::vector<int> blocked_arcs;   // full-FIFO outputs at stall
};

class SimError : public ModelError {
public:
    explicit SimError(const std::string& what) : ModelError(what) {}
};

namespace detail {

struct EndpointState {
    Rat credit{0};
    std::int64_t moved = 0;  // tokens through this endpoint so far
};

}  // namespace detail

/// Token-level execution under data-driven firing. Each cycle, blocks in
/// topological order bank rational rate credit, then move whole tokens
/// bounded by FIFO occupancy/space and the remaining workload of the arc.
/// Production lags consumption by one cycle (tokens become visible at the
/// cycle boundary) and is gated on the block having absorbed its fill
/// window, so pipeline depth is observable.
inline SimResult simulate_batch(const SdfGraph& g, std::int64_t batch, const SimConfig& cfg = {}) {
    const int nblocks = static_cast<int>(g.blocks.size());
    const int narcs = static_cast<int>(g.arcs.size());

    SimResult res;
    res.arc_tokens.assign(narcs, 0);
    res.block_busy_cycles.assign(nblocks, 0);
    if (narcs == 0) return res;

    std::vector<std::int64_t> work(narcs);       // per-arc workload, batch-scaled
    std::vector<std::int64_t> occ(narcs, 0);     // consumable tokens
    std::vector<std::int64_t> pending(narcs, 0); // produced this cycle
    std::vector<std::int64_t> produced(narcs, 0);
    std::vector<std::int64_t> depth(narcs);
    std::vector<detail::EndpointState> prod_ep(narcs), cons_ep(narcs);

    std::int64_t max_rate_den = 1;
    for (int a = 0; a < narcs; ++a) {
        const auto& arc = g.arcs[a];
        work[a] = arc.work * batch;
        if (arc.prod_rate <= Rat(0) || arc.cons_rate <= Rat(0))
            throw SimError("arc " + std::to_string(a) + " has a non-positive rate");
        const std::int64_t burst = std::max<std::int64_t>(rat_ceil(arc.prod_rate), 1);
        depth[a] = cfg.fifo_depth > 0 ? cfg.fifo_depth : 2 * burst;
        if (depth[a] < burst)
            throw SimError("arc " + std::to_string(a) + ": fifo depth " +
                           std::to_string(depth[a]) + " below producer burst " +
                           std::to_string(burst));
        max_rate_den = std::max({max_rate_den, arc.prod_rate.denominator(),
                                 arc.cons_rate.denominator()});
    }

    // consumed element count per block, and the fill gate
    std::vector<std::int64_t> consumed_total(nblocks, 0);
    std::vector<std::int64_t> in_work(nblocks, 0), out_work(nblocks, 0), fill_need(nblocks);
    for (int b = 0; b < nblocks; ++b) {
        in_work[b] = workload_in(g, b) * batch;
        out_work[b] = workload_out(g, b) * batch;
        fill_need[b] = g.blocks[b].is_source() ? 0 : fill_elements(g.blocks[b]);
    }

    auto done = [&]() {
        for (int a = 0; a < narcs; ++a)
            if (res.arc_tokens[a] < work[a]) return false;
        return true;
    };

    const std::int64_t stall_window = 2 * max_rate_den + 16;
    std::int64_t idle_cycles = 0;
    std::int64_t cycle = 0;

    while (!done()) {
        if (cycle >= cfg.max_cycles) {
            res.hit_max_cycles = true;
            res.total_cycles = cycle;
            return res;
        }
        ++cycle;
        bool any_motion = false;

        for (int b = 0; b < nblocks; ++b) {
            const auto& blk = g.blocks[b];
            bool moved = false;

            // Consume from tokens visible at cycle start. Credit carries
            // fractional remainders; the clamp below only caps surplus banked
            // while starved, so bursts stay bounded without rounding the rate.
            for (int a : g.in_arcs(b)) {
                auto& ep = cons_ep[a];
                const Rat rate = g.arcs[a].cons_rate;
                const std::int64_t burst = std::max<std::int64_t>(rat_ceil(rate), 1);
                ep.credit += rate;
                std::int64_t n = std::min(rat_floor(ep.credit), burst);
                n = std::min({n, occ[a], work[a] - res.arc_tokens[a]});
                if (n > 0) {
                    occ[a] -= n;
                    res.arc_tokens[a] += n;
                    consumed_total[b] += n;
                    moved = true;
                    if (blk.is_sink() && res.first_output_cycle == 0) res.first_output_cycle = cycle;
                    if (cfg.trace && cfg.trace_sink)
                        cfg.trace_sink(cycle, blk.id, "consume " + std::to_string(n));
                }
                ep.credit -= Rat(n);
                if (ep.credit > Rat(burst)) ep.credit = Rat(burst);
            }

            // Produce (visible to consumers from the next cycle on).
            const bool fill_ready = consumed_total[b] >= std::min(fill_need[b], in_work[b]);
            for (int a : g.out_arcs(b)) {
                auto& ep = prod_ep[a];
                const Rat rate = g.arcs[a].prod_rate;
                const std::int64_t burst = std::max<std::int64_t>(rat_ceil(rate), 1);
                ep.credit += rate;
                std::int64_t n = std::min(rat_floor(ep.credit), burst);
                n = std::min(n, depth[a] - occ[a] - pending[a]);
                n = std::min(n, work[a] - produced[a]);
                if (!blk.is_source()) {
                    if (!fill_ready) {
                        n = 0;
                    } else if (in_work[b] > 0) {
                        // causality: outputs track consumed volume
                        const std::int64_t avail =
                            static_cast<std::int64_t>((__int128)consumed_total[b] * out_work[b] /
                                                      in_work[b]) - /*already out*/ 0;
                        std::int64_t already = 0;
                        for (int oa : g.out_arcs(b)) already += produced[oa];
                        n = std::min(n, std::max<std::int64_t>(avail - already, 0));
                    }
                }
                if (n > 0) {
                    pending[a] += n;
                    produced[a] += n;
                    moved = true;
                    if (cfg.trace && cfg.trace_sink)
                        cfg.trace_sink(cycle, blk.id, "produce " + std::to_string(n));
                }
                ep.credit -= Rat(n);
                if (ep.credit > Rat(burst)) ep.credit = Rat(burst);
            }

            if (moved) {
                res.block_busy_cycles[b]++;
                any_motion = true;
            }
        }

        // Cycle boundary: produced tokens become consumable.
        for (int a = 0; a < narcs; ++a) {
            occ[a] += pending[a];
            pending[a] = 0;
        }

        if (any_motion) {
            idle_cycles = 0;
        } else if (++idle_cycles > stall_window) {
            res.deadlocked = true;
            res.total_cycles = cycle;
            for (int a = 0; a < narcs; ++a) {
                if (res.arc_tokens[a] >= work[a]) continue;
                if (occ[a] == 0) res.starved_arcs.push_back(a);
                if (occ[a] >= depth[a]) res.blocked_arcs.push_back(a);
            }
            return res;
        }
    }

    res.total_cycles = cycle;
    return res;
}

inline SimResult simulate(const SdfGraph& g, const SimConfig& cfg = {}) {
    return simulate_batch(g, 1, cfg);
}

}  // namespace sdfnet
