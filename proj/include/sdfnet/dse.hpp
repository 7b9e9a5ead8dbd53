#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sdfnet/model.hpp"
#include "sdfnet/perf.hpp"
#include "sdfnet/platform.hpp"
#include "sdfnet/sdf.hpp"
#include "sdfnet/transforms.hpp"

namespace sdfnet {

enum class Strategy { Reconfiguration, WeightsReloading };

inline const char* to_string(Strategy s) {
    return s == Strategy::Reconfiguration ? "reconfiguration" : "weights_reloading";
}

struct DesignPoint {
    std::vector<int> cut_points;
    FoldingConfig folding;
    Strategy strategy = Strategy::Reconfiguration;
    std::int64_t batch = 1;

    PerfEstimate perf;
    ResourceUsage usage;
    bool feasible = false;

    /// Canonical text form; doubles as the determinism tie-breaker and the
    /// evaluation-log key.
    std::string key() const {
        std::ostringstream os;
        os << "cuts=";
        for (int c : cut_points) os << c << "+";
        os << ";coarse=";
        for (const auto& [l, v] : folding.coarse) os << l << ":" << v << ",";
        os << ";fine=";
        for (const auto& [l, v] : folding.fine) os << l << ":" << v << ",";
        os << ";strategy=" << to_string(strategy) << ";batch=" << batch;
        return os.str();
    }
};

struct Objective {
    enum Kind { MaxThroughput, MinLatency, Multiobjective } kind = MaxThroughput;
    double w_throughput = 1.0;
    double w_latency = 1.0;
    double throughput_ref = 1.0;  // normalisation for Multiobjective
    double latency_ref = 1.0;
};

struct SearchBounds {
    int max_partitions = 2;
    std::int64_t max_batch = 1024;
    std::int64_t space_cap = 1'000'000;
};

struct AnnealingSchedule {
    int iterations = 1500;
    int calibration_samples = 100;
    double final_temp_ratio = 1e-3;
    int max_restarts = 10;
};

struct EvalLogRow {
    std::string key;
    double throughput = 0, latency = 0, gops = 0;
    double dsp = 0, bram_kb = 0, lut = 0, bandwidth = 0;
    bool feasible = false;
};

class SearchError : public ModelError {
public:
    explicit SearchError(const std::string& what) : ModelError(what) {}
};

// ---------------------------------------------------------------------------

/// Evaluate a candidate: lower, estimate performance per strategy, price the
/// resources, check the budget. Pure; results are cached on the point.
inline DesignPoint evaluate_design(const ConvNetModel& model, const PlatformSpec& platform,
                                   DesignPoint point) {
    auto part = partition_graph(model, point.cut_points, point.folding,
                                platform.mem_words_per_cycle());
    if (point.strategy == Strategy::Reconfiguration) {
        point.perf = estimate_reconfig_design(part, platform, point.batch);
        point.usage = estimate_resources(part, platform);
    } else {
        auto ra = derive_reference_architecture(model, part, platform.word_bytes);
        point.perf = estimate_weights_reloading_design(ra, platform, point.batch);
        point.usage = estimate_resources(ra, platform);
    }
    point.feasible = check_feasible(point.usage, platform).ok;
    return point;
}

inline double objective_score(const DesignPoint& p, const Objective& obj) {
    switch (obj.kind) {
        case Objective::MaxThroughput: return p.perf.throughput_inputs_s;
        case Objective::MinLatency:    return -p.perf.latency_s;
        case Objective::Multiobjective:
            return obj.w_throughput * (p.perf.throughput_inputs_s / obj.throughput_ref) -
                   obj.w_latency * (p.perf.latency_s / obj.latency_ref);
    }
    return 0;
}

namespace detail {

inline std::vector<std::int64_t> divisors(std::int64_t n) {
    std::vector<std::int64_t> out;
    for (std::int64_t d = 1; d <= n; ++d)
        if (n % d == 0) out.push_back(d);
    return out;
}

struct SearchAxis {
    std::string layer;
    bool fine = false;  // false: coarse axis
    std::vector<std::int64_t> values;
};

/// Folding axes: conv/inner-product layers search coarse and fine factors.
inline std::vector<SearchAxis> folding_axes(const ConvNetModel& model) {
    std::vector<SearchAxis> axes;
    for (const auto& l : model.layers) {
        if (l.kind != LayerKind::Convolution && l.kind != LayerKind::InnerProduct) continue;
        const std::int64_t kernel = l.kind == LayerKind::InnerProduct ? 1 : l.kernel;
        axes.push_back({l.id, false, divisors(l.num_filters)});
        axes.push_back({l.id, true, divisors(kernel * kernel)});
    }
    return axes;
}

inline std::vector<std::int64_t> batch_values(std::int64_t max_batch) {
    std::vector<std::int64_t> out;
    for (std::int64_t b = 1; b <= max_batch; b *= 2) out.push_back(b);
    return out;
}

inline bool better(const DesignPoint& a, const DesignPoint& b, const Objective& obj) {
    const double sa = objective_score(a, obj), sb = objective_score(b, obj);
    if (sa != sb) return sa > sb;
    const double ra = a.usage.dsp + a.usage.lut + a.usage.bram_kb;
    const double rb = b.usage.dsp + b.usage.lut + b.usage.bram_kb;
    if (ra != rb) return ra < rb;
    return a.key() < b.key();
}

}  // namespace detail

struct SearchResult {
    std::optional<DesignPoint> best;
    std::vector<EvalLogRow> log;
    std::int64_t evaluated = 0;
};

inline EvalLogRow log_row(const DesignPoint& p) {
    return {p.key(),          p.perf.throughput_inputs_s, p.perf.latency_s,
            p.perf.throughput_gops, p.usage.dsp,          p.usage.bram_kb,
            p.usage.lut,      p.usage.bandwidth_gbps,     p.feasible};
}

/// Full enumeration of partitioning x folding x strategy x batch. The true
/// optimum, used as the oracle for the annealer. Refuses spaces above the
/// configured cap.
inline SearchResult exhaustive_search(const ConvNetModel& model, const PlatformSpec& platform,
                                      const Objective& obj, const SearchBounds& bounds = {}) {
    const auto cutsets = enumerate_partitionings(model, bounds.max_partitions);
    const auto axes = detail::folding_axes(model);
    const auto batches = detail::batch_values(bounds.max_batch);

    __int128 space = static_cast<__int128>(cutsets.size()) * 2 * batches.size();
    for (const auto& ax : axes) space *= static_cast<__int128>(ax.values.size());
    if (space > bounds.space_cap)
        throw SearchError("design space has more than " + std::to_string(bounds.space_cap) +
                          " points; use simulated_annealing instead");

    SearchResult res;
    std::vector<std::size_t> idx(axes.size(), 0);
    for (const auto& cuts : cutsets) {
        std::fill(idx.begin(), idx.end(), 0);
        bool axes_done = false;
        while (!axes_done) {
            FoldingConfig fc;
            for (std::size_t i = 0; i < axes.size(); ++i) {
                if (axes[i].fine)
                    fc.fine[axes[i].layer] = axes[i].values[idx[i]];
                else
                    fc.coarse[axes[i].layer] = axes[i].values[idx[i]];
            }
            for (Strategy s : {Strategy::Reconfiguration, Strategy::WeightsReloading}) {
                for (std::int64_t b : batches) {
                    DesignPoint p;
                    p.cut_points = cuts;
                    p.folding = fc;
                    p.strategy = s;
                    p.batch = b;
                    p = evaluate_design(model, platform, p);
                    res.evaluated++;
                    res.log.push_back(log_row(p));
                    if (!p.feasible) continue;
                    if (!res.best || detail::better(p, *res.best, obj)) res.best = p;
                }
            }
            // odometer over folding axes
            axes_done = true;
            for (std::size_t i = 0; i < axes.size(); ++i) {
                if (++idx[i] < axes[i].values.size()) { axes_done = false; break; }
                idx[i] = 0;
            }
            if (axes.empty()) break;
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Simulated annealing. Geometric cooling, neighbourhood of single-parameter
// moves, fully deterministic under a fixed seed.
// ---------------------------------------------------------------------------

namespace detail {

inline DesignPoint random_point(const ConvNetModel& model, const SearchBounds& bounds,
                                const std::vector<std::vector<int>>& cutsets,
                                const std::vector<SearchAxis>& axes,
                                const std::vector<std::int64_t>& batches,
                                std::mt19937_64& rng) {
    DesignPoint p;
    p.cut_points = cutsets[rng() % cutsets.size()];
    for (const auto& ax : axes) {
        std::int64_t v = ax.values[rng() % ax.values.size()];
        (ax.fine ? p.folding.fine : p.folding.coarse)[ax.layer] = v;
    }
    p.strategy = (rng() % 2) ? Strategy::WeightsReloading : Strategy::Reconfiguration;
    p.batch = batches[rng() % batches.size()];
    (void)bounds;
    return p;
}

/// One neighbour move: adjacent divisor on a folding axis, add/remove one
/// cut point, toggle the strategy, or double/halve the batch.
inline DesignPoint neighbour(const ConvNetModel& model, const DesignPoint& cur,
                             const SearchBounds& bounds, const std::vector<int>& valid_cuts,
                             const std::vector<SearchAxis>& axes, std::mt19937_64& rng) {
    DesignPoint p = cur;
    switch (rng() % 4) {
        case 0: {  // folding step
            if (axes.empty()) break;
            const auto& ax = axes[rng() % axes.size()];
            auto& table = ax.fine ? p.folding.fine : p.folding.coarse;
            std::int64_t cur_v = table.count(ax.layer) ? table[ax.layer] : ax.values.back();
            auto it = std::find(ax.values.begin(), ax.values.end(), cur_v);
            std::size_t i = it == ax.values.end() ? ax.values.size() - 1
                                                  : std::size_t(it - ax.values.begin());
            if (ax.values.size() > 1) {
                if (i == 0) i = 1;
                else if (i + 1 == ax.values.size()) i -= 1;
                else i += (rng() % 2) ? 1 : -1;
            }
            table[ax.layer] = ax.values[i];
            break;
        }
        case 1: {  // cut point add/remove
            if (valid_cuts.empty()) break;
            int cut = valid_cuts[rng() % valid_cuts.size()];
            auto it = std::find(p.cut_points.begin(), p.cut_points.end(), cut);
            if (it != p.cut_points.end()) {
                p.cut_points.erase(it);
            } else if (static_cast<int>(p.cut_points.size()) + 2 <= bounds.max_partitions) {
                p.cut_points.push_back(cut);
                std::sort(p.cut_points.begin(), p.cut_points.end());
            }
            break;
        }
        case 2:  // strategy toggle
            p.strategy = p.strategy == Strategy::Reconfiguration ? Strategy::WeightsReloading
                                                                 : Strategy::Reconfiguration;
            break;
        default:  // batch double/halve
            if (rng() % 2) {
                if (p.batch * 2 <= bounds.max_batch) p.batch *= 2;
            } else if (p.batch > 1) {
                p.batch /= 2;
            }
            break;
    }
    (void)model;
    return p;
}

}  // namespace detail

inline SearchResult simulated_annealing(const ConvNetModel& model, const PlatformSpec& platform,
                                        const Objective& obj, std::uint64_t seed,
                                        const SearchBounds& bounds = {},
                                        const AnnealingSchedule& sched = {}) {
    const auto cutsets = enumerate_partitionings(model, bounds.max_partitions);
    const auto axes = detail::folding_axes(model);
    const auto batches = detail::batch_values(bounds.max_batch);
    std::vector<int> valid_cuts;
    {
        const auto order = model.topo_order();
        for (int k = 1; k < static_cast<int>(order.size()); ++k)
            if (detail::crossing_edges(model, order, k) == 1) valid_cuts.push_back(k);
    }

    std::mt19937_64 rng(seed);
    SearchResult res;

    // Feasible starting point, bounded restarts.
    std::optional<DesignPoint> start;
    for (int attempt = 0; attempt < sched.max_restarts * 50 && !start; ++attempt) {
        DesignPoint p = detail::random_point(model, bounds, cutsets, axes, batches, rng);
        p = evaluate_design(model, platform, p);
        res.evaluated++;
        res.log.push_back(log_row(p));
        if (p.feasible) start = p;
    }
    if (!start)
        throw SearchError("no feasible starting point found after bounded restarts");

    // Calibrate the initial temperature from random neighbour deltas.
    double delta_sum = 0;
    int delta_n = 0;
    for (int i = 0; i < sched.calibration_samples; ++i) {
        DesignPoint p = detail::neighbour(model, *start, bounds, valid_cuts, axes, rng);
        p = evaluate_design(model, platform, p);
        res.evaluated++;
        res.log.push_back(log_row(p));
        if (!p.feasible) continue;
        delta_sum += std::abs(objective_score(p, obj) - objective_score(*start, obj));
        delta_n++;
    }
    double t0 = delta_n > 0 ? std::max(delta_sum / delta_n, 1e-12) : 1e-12;
    const double cooling =
        std::pow(sched.final_temp_ratio, 1.0 / std::max(sched.iterations - 1, 1));

    DesignPoint cur = *start;
    DesignPoint best = cur;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double temp = t0;
    for (int it = 0; it < sched.iterations; ++it, temp *= cooling) {
        DesignPoint cand = detail::neighbour(model, cur, bounds, valid_cuts, axes, rng);
        cand = evaluate_design(model, platform, cand);
        res.evaluated++;
        res.log.push_back(log_row(cand));
        if (!cand.feasible) continue;
        const double delta = objective_score(cand, obj) - objective_score(cur, obj);
        if (delta >= 0 || unit(rng) < std::exp(delta / temp)) cur = cand;
        if (detail::better(cur, best, obj)) best = cur;
    }
    res.best = best;
    return res;
}

// ---------------------------------------------------------------------------
// Pareto front over (throughput, batch-1 latency).
// ---------------------------------------------------------------------------

struct ParetoPoint {
    double throughput = 0;
    double latency = 0;
    EvalLogRow row;
};

inline bool dominates(const ParetoPoint& a, const ParetoPoint& b) {
    return a.throughput >= b.throughput && a.latency <= b.latency &&
           (a.throughput > b.throughput || a.latency < b.latency);
}

/// Non-dominated filter (two-objective sweep); result sorted by throughput
/// ascending, duplicates collapsed.
inline std::vector<ParetoPoint> pareto_filter(std::vector<ParetoPoint> pts) {
    std::sort(pts.begin(), pts.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
        return a.throughput != b.throughput ? a.throughput > b.throughput
                                            : a.latency < b.latency;
    });
    std::vector<ParetoPoint> front;
    double best_latency = std::numeric_limits<double>::infinity();
    for (const auto& p : pts) {
        if (p.latency < best_latency) {
            front.push_back(p);
            best_latency = p.latency;
        }
    }
    std::reverse(front.begin(), front.end());
    return front;
}

struct ParetoResult {
    std::vector<ParetoPoint> front;
    std::vector<EvalLogRow> log;
};

/// Annealer sweep: both pure objectives plus scalarised weight mixes; the
/// front is the non-dominated filter over every feasible evaluation seen.
inline ParetoResult pareto_search(const ConvNetModel& model, const PlatformSpec& platform,
                                  const std::vector<std::uint64_t>& seeds,
                                  const SearchBounds& bounds = {},
                                  const AnnealingSchedule& sched = {}) {
    if (seeds.empty()) throw SearchError("pareto_search needs at least one seed");
    ParetoResult out;
    std::vector<DesignPoint> candidates;
    double t_ref = 0, l_ref = 0;
    int failures = 0;

    auto run = [&](const Objective& obj, std::uint64_t seed) -> std::optional<DesignPoint> {
        try {
            auto r = simulated_annealing(model, platform, obj, seed, bounds, sched);
            for (auto& row : r.log) out.log.push_back(row);
            return r.best;
        } catch (const SearchError&) {
            failures++;
            return std::nullopt;
        }
    };

    for (auto seed : seeds) {
        if (auto p = run(Objective{Objective::MaxThroughput}, seed)) {
            t_ref = std::max(t_ref, p->perf.throughput_inputs_s);
            candidates.push_back(*p);
        }
        if (auto p = run(Objective{Objective::MinLatency}, seed)) {
            l_ref = std::max(l_ref, p->perf.latency_s);
            candidates.push_back(*p);
        }
    }
    if (candidates.empty())
        throw SearchError("all annealing runs failed; no feasible design found");

    const double weight_mixes[][2] = {{0.75, 0.25}, {0.5, 0.5}, {0.25, 0.75}};
    for (auto seed : seeds) {
        for (const auto& wm : weight_mixes) {
            Objective obj{Objective::Multiobjective};
            obj.w_throughput = wm[0];
            obj.w_latency = wm[1];
            obj.throughput_ref = std::max(t_ref, 1e-12);
            obj.latency_ref = std::max(l_ref, 1e-12);
            if (auto p = run(obj, seed)) candidates.push_back(*p);
        }
    }

    // Every feasible evaluation seen by the sweep participates in the filter.
    std::vector<ParetoPoint> pts;
    for (const auto& row : out.log)
        if (row.feasible) pts.push_back({row.throughput, row.latency, row});
    out.front = pareto_filter(std::move(pts));
    return out;
}

/// True non-dominated set of an evaluation log (oracle for small spaces).
inline std::vector<ParetoPoint> pareto_of_log(const std::vector<EvalLogRow>& log) {
    std::vector<ParetoPoint> pts;
    for (const auto& row : log)
        if (row.feasible) pts.push_back({row.throughput, row.latency, row});
    return pareto_filter(std::move(pts));
}

}  // namespace sdfnet
