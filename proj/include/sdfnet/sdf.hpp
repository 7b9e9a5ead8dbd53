#pragma once

#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "sdfnet/model.hpp"
#include "sdfnet/rational.hpp"

namespace sdfnet {

enum class BlockKind {
    MemRead,
    SlidingWindow,
    Fork,
    ConvBank,
    PoolBank,
    NonlinBank,
    ConcatJoin,
    EltwiseAddJoin,
    MemWrite,
};

inline const char* to_string(BlockKind k) {
    switch (k) {
        case BlockKind::MemRead:        return "MemRead";
        case BlockKind::SlidingWindow:  return "SlidingWindow";
        case BlockKind::Fork:           return "Fork";
        case BlockKind::ConvBank:       return "ConvBank";
        case BlockKind::PoolBank:       return "PoolBank";
        case BlockKind::NonlinBank:     return "NonlinBank";
        case BlockKind::ConcatJoin:     return "ConcatJoin";
        case BlockKind::EltwiseAddJoin: return "EltwiseAddJoin";
        case BlockKind::MemWrite:       return "MemWrite";
    }
    return "?";
}

struct BuildingBlock {
    std::string id;
    BlockKind kind = BlockKind::NonlinBank;
    std::string layer_id;

    std::int64_t coarse = 1;      // c, 1 <= c <= coarse_max, c | coarse_max
    std::int64_t coarse_max = 1;  // N_f for ConvBank, C for Pool/Nonlin banks
    std::int64_t fine = 1;        // f, ConvBank only, f | K^2
    std::int64_t fine_max = 1;    // K^2 for ConvBank

    std::int64_t kernel = 1;
    std::int64_t filters = 1;   // N_f (ConvBank)
    std::int64_t channels = 1;  // input channels of the owning layer
    std::int64_t in_h = 1, in_w = 1, out_h = 1, out_w = 1;
    bool broadcast = false;  // Fork: true when replicating windows across filters

    bool is_source() const { return kind == BlockKind::MemRead; }
    bool is_sink() const { return kind == BlockKind::MemWrite; }

    /// Time-sharing factor applied uniformly to this block's rates.
    Rat fold_scale() const {
        return Rat(coarse, coarse_max) * Rat(fine, fine_max);
    }
};

struct Arc {
    int from = -1;
    int to = -1;
    Rat prod_rate;       // producer's signed-positive rate, elements/cycle
    Rat cons_rate;       // consumer's rate (stored positive)
    std::int64_t work = 0;  // elements crossing this arc per inference
};

struct SdfGraph {
    std::vector<BuildingBlock> blocks;
    std::vector<Arc> arcs;
    Rat mem_words_per_cycle{2};  // B_mem, shared between read and write ports

    std::vector<int> in_arcs(int b) const {
        std::vector<int> out;
        for (std::size_t i = 0; i < arcs.size(); ++i)
            if (arcs[i].to == b) out.push_back(static_cast<int>(i));
        return out;
    }
    std::vector<int> out_arcs(int b) const {
        std::vector<int> out;
        for (std::size_t i = 0; i < arcs.size(); ++i)
            if (arcs[i].from == b) out.push_back(static_cast<int>(i));
        return out;
    }
};

/// Per-layer folding configuration for lowering.
struct FoldingConfig {
    std::map<std::string, std::int64_t> coarse;  // layer id -> c
    std::map<std::string, std::int64_t> fine;    // layer id -> f (conv only)

    std::int64_t coarse_for(const std::string& layer, std::int64_t dflt) const {
        auto it = coarse.find(layer);
        return it == coarse.end() ? dflt : it->second;
    }
    std::int64_t fine_for(const std::string& layer, std::int64_t dflt) const {
        auto it = fine.find(layer);
        return it == fine.end() ? dflt : it->second;
    }
};

using Matrix = std::vector<std::vector<Rat>>;

namespace detail {

/// Base (fully unfolded) production rate of a block, elements/cycle.
inline Rat base_out_rate(const BuildingBlock& b, const Rat& mem_words) {
    switch (b.kind) {
        case BlockKind::MemRead:        return mem_words / 2;
        case BlockKind::SlidingWindow:  return Rat(b.kernel * b.kernel);
        case BlockKind::Fork:
            return b.broadcast ? Rat(b.filters * b.kernel * b.kernel) : Rat(1);
        case BlockKind::ConvBank:       return Rat(b.filters);
        case BlockKind::PoolBank:       return Rat(1);
        case BlockKind::NonlinBank:     return Rat(1);
        case BlockKind::ConcatJoin:     return Rat(1);  // replaced by arrival-rate sum
        case BlockKind::EltwiseAddJoin: return Rat(1);  // replaced by slowest arrival
        case BlockKind::MemWrite:       return Rat(0);
    }
    return Rat(0);
}

inline Rat base_in_rate(const BuildingBlock& b, const Rat& mem_words) {
    switch (b.kind) {
        case BlockKind::MemRead:        return Rat(0);
        case BlockKind::SlidingWindow:  return Rat(1);
        case BlockKind::Fork:
            return b.broadcast ? Rat(b.kernel * b.kernel) : Rat(1);
        case BlockKind::ConvBank:       return Rat(b.filters * b.kernel * b.kernel);
        case BlockKind::PoolBank:       return Rat(b.kernel * b.kernel);
        case BlockKind::NonlinBank:     return Rat(1);
        case BlockKind::ConcatJoin:     return Rat(1);  // per-arc rate set at wiring time
        case BlockKind::EltwiseAddJoin: return Rat(1);  // per-arc rate set at wiring time
        case BlockKind::MemWrite:       return mem_words / 2;
    }
    return Rat(0);
}

inline void check_divides(std::int64_t factor, std::int64_t maximum, const std::string& what,
                          const std::string& layer) {
    if (factor < 1 || factor > maximum || maximum % factor != 0)
        throw ModelError("layer '" + layer + "': " + what + " factor " + std::to_string(factor) +
                         " must divide " + std::to_string(maximum));
}

}  // namespace detail

/// Recompute every arc's folded rates. Join consumption rates deliberately
/// mirror the producer's *unfolded* output rate so that firing balance
/// around split/join cycles is preserved for any folding assignment.
/// Block indices are topological by construction of lower_layers; the pass
/// resolves the effective base rate of nested joins front to back.
inline void rewire_rates(SdfGraph& g) {
    std::vector<Rat> eff_out(g.blocks.size(), Rat(0));
    for (std::size_t b = 0; b < g.blocks.size(); ++b) {
        const auto& blk = g.blocks[b];
        if (blk.kind == BlockKind::ConcatJoin) {
            Rat sum(0);  // merged stream: arrival-rate sum
            for (int a : g.in_arcs(static_cast<int>(b))) sum += eff_out[g.arcs[a].from];
            eff_out[b] = sum;
        } else if (blk.kind == BlockKind::EltwiseAddJoin) {
            Rat slowest(0);  // paced by the slowest arriving stream
            for (int a : g.in_arcs(static_cast<int>(b))) {
                Rat r = eff_out[g.arcs[a].from];
                if (slowest == Rat(0) || r < slowest) slowest = r;
            }
            eff_out[b] = slowest;
        } else {
            eff_out[b] = detail::base_out_rate(blk, g.mem_words_per_cycle);
        }
    }
    for (auto& arc : g.arcs) {
        const auto& p = g.blocks[arc.from];
        const auto& c = g.blocks[arc.to];
        arc.prod_rate = eff_out[arc.from] * p.fold_scale();
        if (c.kind == BlockKind::ConcatJoin || c.kind == BlockKind::EltwiseAddJoin)
            arc.cons_rate = eff_out[arc.from];
        else
            arc.cons_rate = detail::base_in_rate(c, g.mem_words_per_cycle) * c.fold_scale();
    }
}

/// Lower a contiguous slice of the model (positions in topological order)
/// to a building-block pipeline. Slice boundaries get MemRead/MemWrite
/// blocks; interior layer junctions share direct arcs.
inline SdfGraph lower_layers(const ConvNetModel& model, const std::vector<int>& layer_positions,
                             const FoldingConfig& config, Rat mem_words_per_cycle) {
    SdfGraph g;
    g.mem_words_per_cycle = mem_words_per_cycle;

    std::map<int, int> first_block;  // layer index -> entry block
    std::map<int, int> last_block;   // layer index -> exit block
    std::map<int, bool> in_slice;
    for (int li : layer_positions) in_slice[li] = true;

    auto add_block = [&](BuildingBlock b) {
        g.blocks.push_back(std::move(b));
        return static_cast<int>(g.blocks.size()) - 1;
    };
    auto add_arc = [&](int from, int to, std::int64_t work) {
        g.arcs.push_back(Arc{from, to, Rat(0), Rat(0), work});
    };

    for (int li : layer_positions) {
        const auto& l = model.layers[li];
        const auto in = l.in_shape;
        const auto out = l.out_shape;
        const std::int64_t k2 = l.kernel * l.kernel;
        int head = -1, tail = -1;

        // MemRead goes in front of the layer it feeds so block indices stay
        // topological and match reading order.
        bool fed = false;
        for (int p : model.predecessors(li))
            if (in_slice.count(p)) fed = true;
        int mem_in = -1;
        if (!fed) {
            BuildingBlock mr{l.id + ".memrd", BlockKind::MemRead, l.id};
            mr.channels = in.channels;
            mr.in_h = in.h; mr.in_w = in.w;
            mem_in = add_block(mr);
        }

        struct PendingArc { int from, to; std::int64_t work; };
        std::vector<PendingArc> internal;
        auto add_internal = [&](int from, int to, std::int64_t work) {
            internal.push_back({from, to, work});
        };

        switch (l.kind) {
            case LayerKind::Convolution:
            case LayerKind::InnerProduct: {
                const std::int64_t kernel = l.kind == LayerKind::InnerProduct ? 1 : l.kernel;
                const std::int64_t kk = kernel * kernel;
                const std::int64_t c = config.coarse_for(l.id, l.num_filters);
                const std::int64_t f = config.fine_for(l.id, kk);
                detail::check_divides(c, l.num_filters, "coarse", l.id);
                detail::check_divides(f, kk, "fine", l.id);

                BuildingBlock sw{l.id + ".sw", BlockKind::SlidingWindow, l.id};
                sw.kernel = kernel;
                sw.channels = in.channels;
                sw.in_h = in.h; sw.in_w = in.w; sw.out_h = out.h; sw.out_w = out.w;

                BuildingBlock fork{l.id + ".fork", BlockKind::Fork, l.id};
                fork.kernel = kernel;
                fork.filters = l.num_filters;
                fork.channels = in.channels;
                fork.out_h = out.h; fork.out_w = out.w;
                fork.broadcast = true;

                BuildingBlock bank{l.id + ".conv", BlockKind::ConvBank, l.id};
                bank.kernel = kernel;
                bank.filters = l.num_filters;
                bank.channels = in.channels;
                bank.in_h = in.h; bank.in_w = in.w; bank.out_h = out.h; bank.out_w = out.w;
                bank.coarse = c; bank.coarse_max = l.num_filters;
                bank.fine = f; bank.fine_max = kk;

                head = add_block(sw);
                int fi = add_block(fork);
                tail = add_block(bank);
                const std::int64_t windows = in.channels * out.h * out.w * kk;
                add_internal(head, fi, windows);
                add_internal(fi, tail, l.num_filters * windows);
                break;
            }
            case LayerKind::Pooling: {
                const std::int64_t c = config.coarse_for(l.id, in.channels);
                detail::check_divides(c, in.channels, "coarse", l.id);

                BuildingBlock sw{l.id + ".sw", BlockKind::SlidingWindow, l.id};
                sw.kernel = l.kernel;
                sw.channels = in.channels;
                sw.in_h = in.h; sw.in_w = in.w; sw.out_h = out.h; sw.out_w = out.w;

                BuildingBlock bank{l.id + ".pool", BlockKind::PoolBank, l.id};
                bank.kernel = l.kernel;
                bank.channels = in.channels;
                bank.in_h = in.h; bank.in_w = in.w; bank.out_h = out.h; bank.out_w = out.w;
                bank.coarse = c; bank.coarse_max = in.channels;

                head = add_block(sw);
                tail = add_block(bank);
                add_internal(head, tail, in.channels * out.h * out.w * k2);
                break;
            }
            case LayerKind::Nonlinearity: {
                const std::int64_t c = config.coarse_for(l.id, in.channels);
                detail::check_divides(c, in.channels, "coarse", l.id);
                BuildingBlock bank{l.id + ".nonlin", BlockKind::NonlinBank, l.id};
                bank.channels = in.channels;
                bank.in_h = in.h; bank.in_w = in.w; bank.out_h = out.h; bank.out_w = out.w;
                bank.coarse = c; bank.coarse_max = in.channels;
                head = tail = add_block(bank);
                break;
            }
            case LayerKind::Split: {
                BuildingBlock fork{l.id + ".fork", BlockKind::Fork, l.id};
                fork.channels = in.channels;
                fork.in_h = in.h; fork.in_w = in.w; fork.out_h = out.h; fork.out_w = out.w;
                head = tail = add_block(fork);
                break;
            }
            case LayerKind::Concat: {
                BuildingBlock join{l.id + ".concat", BlockKind::ConcatJoin, l.id};
                join.channels = in.channels;
                join.filters = in.channels;
                join.in_h = in.h; join.in_w = in.w; join.out_h = out.h; join.out_w = out.w;
                head = tail = add_block(join);
                break;
            }
            case LayerKind::EltwiseAdd: {
                BuildingBlock join{l.id + ".add", BlockKind::EltwiseAddJoin, l.id};
                join.channels = in.channels;
                join.in_h = in.h; join.in_w = in.w; join.out_h = out.h; join.out_w = out.w;
                head = tail = add_block(join);
                break;
            }
        }

        first_block[li] = head;
        last_block[li] = tail;

        // Inbound arcs first, then the layer's internal pipeline arcs.
        if (fed) {
            for (int p : model.predecessors(li)) {
                if (!in_slice.count(p)) continue;
                add_arc(last_block[p], head, model.layers[p].out_shape.elems());
            }
        } else {
            add_arc(mem_in, head, in.elems());
        }
        for (const auto& pa : internal) add_arc(pa.from, pa.to, pa.work);
    }

    // MemWrite behind every layer with no in-slice consumer.
    for (int li : layer_positions) {
        bool consumed = false;
        for (int s : model.successors(li))
            if (in_slice.count(s)) consumed = true;
        if (consumed) continue;
        const auto& l = model.layers[li];
        BuildingBlock mw{l.id + ".memwr", BlockKind::MemWrite, l.id};
        mw.channels = l.out_shape.channels;
        mw.out_h = l.out_shape.h; mw.out_w = l.out_shape.w;
        int mi = add_block(mw);
        add_arc(last_block[li], mi, l.out_shape.elems());
    }

    rewire_rates(g);
    return g;
}

/// Lower the whole model as a single partition.
inline SdfGraph lower_model(const ConvNetModel& model, const FoldingConfig& config = {},
                            Rat mem_words_per_cycle = Rat(2)) {
    return lower_layers(model, model.topo_order(), config, mem_words_per_cycle);
}

/// Γ: rows = arcs, columns = nodes; production positive, consumption negative.
inline Matrix topology_matrix(const SdfGraph& g) {
    Matrix gamma(g.arcs.size(), std::vector<Rat>(g.blocks.size(), Rat(0)));
    for (std::size_t a = 0; a < g.arcs.size(); ++a) {
        gamma[a][g.arcs[a].from] = g.arcs[a].prod_rate;
        gamma[a][g.arcs[a].to] = -g.arcs[a].cons_rate;
    }
    return gamma;
}

/// W: same sparsity as Γ, both endpoint entries carry the arc's total
/// element count for one inference (flow conservation by construction).
inline Matrix workload_matrix(const SdfGraph& g) {
    Matrix w(g.arcs.size(), std::vector<Rat>(g.blocks.size(), Rat(0)));
    for (std::size_t a = 0; a < g.arcs.size(); ++a) {
        w[a][g.arcs[a].from] = Rat(g.arcs[a].work);
        w[a][g.arcs[a].to] = Rat(g.arcs[a].work);
    }
    return w;
}

inline std::int64_t workload_in(const SdfGraph& g, int block) {
    std::int64_t sum = 0;
    for (int a : g.in_arcs(block)) sum += g.arcs[a].work;
    return sum;
}

inline std::int64_t workload_out(const SdfGraph& g, int block) {
    std::int64_t sum = 0;
    for (int a : g.out_arcs(block)) sum += g.arcs[a].work;
    return sum;
}

/// Exact rank over the rationals (Gaussian elimination).
inline std::size_t matrix_rank(Matrix m) {
    if (m.empty()) return 0;
    const std::size_t rows = m.size(), cols = m[0].size();
    std::size_t rank = 0;
    for (std::size_t col = 0; col < cols && rank < rows; ++col) {
        std::size_t pivot = rank;
        while (pivot < rows && m[pivot][col] == Rat(0)) ++pivot;
        if (pivot == rows) continue;
        std::swap(m[rank], m[pivot]);
        for (std::size_t r = 0; r < rows; ++r) {
            if (r == rank || m[r][col] == Rat(0)) continue;
            Rat factor = m[r][col] / m[rank][col];
            for (std::size_t c2 = col; c2 < cols; ++c2) m[r][c2] -= factor * m[rank][c2];
        }
        ++rank;
    }
    return rank;
}

struct ConsistencyReport {
    bool consistent = false;
    std::vector<std::int64_t> repetition;  // minimal positive integers, per node
    std::vector<int> violating_arcs;       // arc indices whose balance fails
};

/// Propagate firing ratios over a spanning tree of the (undirected) graph
/// and verify every remaining arc. A connected consistent graph has
/// rank(Γ) = M_nodes - 1 and a unique minimal integer repetition vector.
inline ConsistencyReport check_consistency(const SdfGraph& g) {
    ConsistencyReport rep;
    const int n = static_cast<int>(g.blocks.size());
    if (n == 0) return rep;

    std::vector<std::optional<Rat>> q(n);
    q[0] = Rat(1);
    bool progress = true;
    while (progress) {
        progress = false;
        for (std::size_t a = 0; a < g.arcs.size(); ++a) {
            const auto& arc = g.arcs[a];
            if (q[arc.from] && !q[arc.to]) {
                q[arc.to] = *q[arc.from] * arc.prod_rate / arc.cons_rate;
                progress = true;
            } else if (!q[arc.from] && q[arc.to]) {
                q[arc.from] = *q[arc.to] * arc.cons_rate / arc.prod_rate;
                progress = true;
            }
        }
    }
    for (int i = 0; i < n; ++i)
        if (!q[i]) return rep;  // disconnected: not consistent as a single graph

    for (std::size_t a = 0; a < g.arcs.size(); ++a) {
        const auto& arc = g.arcs[a];
        if (*q[arc.from] * arc.prod_rate != *q[arc.to] * arc.cons_rate)
            rep.violating_arcs.push_back(static_cast<int>(a));
    }
    if (!rep.violating_arcs.empty()) return rep;

    std::int64_t lcm = 1;
    for (int i = 0; i < n; ++i) lcm = std::lcm(lcm, q[i]->denominator());
    std::vector<std::int64_t> ints(n);
    std::int64_t gcd = 0;
    for (int i = 0; i < n; ++i) {
        ints[i] = q[i]->numerator() * (lcm / q[i]->denominator());
        gcd = std::gcd(gcd, ints[i]);
    }
    for (auto& v : ints) v /= gcd;

    rep.consistent = true;
    rep.repetition = std::move(ints);
    return rep;
}

}  // namespace sdfnet
