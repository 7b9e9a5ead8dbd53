#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "sdfnet/model.hpp"
#include "sdfnet/sdf.hpp"

namespace sdfnet {

/// Set the coarse folding factor of one block; returns a new graph with the
/// block's rates rescaled. W is untouched (workload is architecture-free).
inline SdfGraph set_coarse_folding(const SdfGraph& g, const std::string& block_id,
                                   std::int64_t c) {
    SdfGraph out = g;
    for (auto& b : out.blocks) {
        if (b.id != block_id) continue;
        detail::check_divides(c, b.coarse_max, "coarse", b.layer_id);
        b.coarse = c;
        rewire_rates(out);
        return out;
    }
    throw ModelError("unknown block id '" + block_id + "'");
}

/// Fine folding: multipliers per dot-product unit, ConvBank only.
inline SdfGraph set_fine_folding(const SdfGraph& g, const std::string& block_id,
                                 std::int64_t f) {
    SdfGraph out = g;
    for (auto& b : out.blocks) {
        if (b.id != block_id) continue;
        if (b.kind != BlockKind::ConvBank)
            throw ModelError("fine folding applies only to ConvBank blocks, '" + block_id +
                             "' is " + to_string(b.kind));
        detail::check_divides(f, b.fine_max, "fine", b.layer_id);
        b.fine = f;
        rewire_rates(out);
        return out;
    }
    throw ModelError("unknown block id '" + block_id + "'");
}

struct Partitioning {
    std::vector<int> cut_points;          // cut after topo position k (1-based count)
    std::vector<std::vector<int>> slices;  // layer positions per partition
    std::vector<SdfGraph> subgraphs;
};

namespace detail {

/// Number of model edges crossing the boundary after the first k layers of
/// the topological order. Valid cut boundaries cross exactly one edge, which
/// keeps split/join regions intact.
inline int crossing_edges(const ConvNetModel& m, const std::vector<int>& order, int k) {
    std::vector<bool> front(m.layers.size(), false);
    for (int i = 0; i < k; ++i) front[order[i]] = true;
    int crossings = 0;
    for (const auto& [a, b] : m.edges) {
        int ai = m.index_of(a), bi = m.index_of(b);
        if (front[ai] != front[bi]) crossings++;
    }
    return crossings;
}

}  // namespace detail

/// Split the model along its depth at the given cut points (counts of layers
/// in topological order). Each subgraph is MemRead/MemWrite terminated;
/// inter-partition data travels through off-chip memory.
inline Partitioning partition_graph(const ConvNetModel& model, std::vector<int> cut_points,
                                    const FoldingConfig& config = {},
                                    Rat mem_words_per_cycle = Rat(2)) {
    const auto order = model.topo_order();
    const int n = static_cast<int>(order.size());
    std::sort(cut_points.begin(), cut_points.end());

    Partitioning p;
    p.cut_points = cut_points;
    int prev = 0;
    auto boundaries = cut_points;
    boundaries.push_back(n);
    for (int cut : boundaries) {
        if (cut <= prev || cut > n)
            throw ModelError("invalid or empty partition at cut point " + std::to_string(cut));
        if (cut < n && detail::crossing_edges(model, order, cut) != 1)
            throw ModelError("cut point " + std::to_string(cut) +
                             " separates a split from its matching join");
        p.slices.emplace_back(order.begin() + prev, order.begin() + cut);
        prev = cut;
    }
    for (const auto& slice : p.slices)
        p.subgraphs.push_back(lower_layers(model, slice, config, mem_words_per_cycle));
    return p;
}

/// All cut-point sets producing at most max_partitions contiguous partitions.
inline std::vector<std::vector<int>> enumerate_partitionings(const ConvNetModel& model,
                                                             int max_partitions) {
    if (max_partitions < 1) throw ModelError("max_partitions must be >= 1");
    const auto order = model.topo_order();
    const int n = static_cast<int>(order.size());
    std::vector<int> valid;
    for (int k = 1; k < n; ++k)
        if (detail::crossing_edges(model, order, k) == 1) valid.push_back(k);

    std::vector<std::vector<int>> result;
    std::vector<int> current;
    auto rec = [&](auto&& self, std::size_t idx) -> void {
        result.push_back(current);
        if (static_cast<int>(current.size()) + 1 >= max_partitions) return;
        for (std::size_t i = idx; i < valid.size(); ++i) {
            current.push_back(valid[i]);
            self(self, i + 1);
            current.pop_back();
        }
    };
    rec(rec, 0);
    return result;
}

struct ArchMode {
    int subgraph = 0;
    std::int64_t weights_bytes = 0;
};

struct ReferenceArchitecture {
    // One slot per pipeline position: the per-subgraph blocks bound there
    // plus the envelope folding factors (elementwise maxima).
    struct Slot {
        std::vector<BuildingBlock> variants;
        std::int64_t c_env = 1;
        std::int64_t f_env = 1;
    };
    std::vector<Slot> slots;
    std::vector<ArchMode> modes;
    std::vector<SdfGraph> mode_graphs;
};

/// Bytes of weights carried by one layer at the given word size.
inline std::int64_t layer_weights_bytes(const LayerSpec& l, int word_bytes) {
    switch (l.kind) {
        case LayerKind::Convolution:
            return l.kernel * l.kernel * l.in_shape.channels * l.num_filters * word_bytes;
        case LayerKind::InnerProduct:
            return l.in_shape.channels * l.num_filters * word_bytes;
        default:
            return 0;
    }
}

/// Derive the single flexible architecture executing all subgraphs as modes.
/// Shorter subgraphs are padded with pass-through slots; the envelope at
/// each position takes the maximum folding parameters over subgraphs.
inline ReferenceArchitecture derive_reference_architecture(const ConvNetModel& model,
                                                           const Partitioning& p,
                                                           int word_bytes) {
    if (p.subgraphs.empty()) throw ModelError("empty partitioning");
    ReferenceArchitecture ra;
    std::size_t positions = 0;
    for (const auto& g : p.subgraphs) {
        if (g.blocks.empty()) throw ModelError("subgraph with no blocks");
        positions = std::max(positions, g.blocks.size());
    }
    ra.slots.resize(positions);
    for (const auto& g : p.subgraphs) {
        for (std::size_t i = 0; i < g.blocks.size(); ++i) {
            const auto& b = g.blocks[i];
            ra.slots[i].variants.push_back(b);
            ra.slots[i].c_env = std::max(ra.slots[i].c_env, b.coarse);
            ra.slots[i].f_env = std::max(ra.slots[i].f_env, b.fine);
        }
    }
    for (std::size_t s = 0; s < p.subgraphs.size(); ++s) {
        ArchMode mode;
        mode.subgraph = static_cast<int>(s);
        for (int li : p.slices[s])
            mode.weights_bytes += layer_weights_bytes(model.layers[li], word_bytes);
        ra.modes.push_back(mode);
        ra.mode_graphs.push_back(p.subgraphs[s]);
    }
    return ra;
}

}  // namespace sdfnet
