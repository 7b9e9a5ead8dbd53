#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdfnet {

class ModelError : public std::runtime_error {
public:
    explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

enum class LayerKind {
    Convolution,
    Pooling,
    Nonlinearity,
    InnerProduct,
    Split,
    Concat,
    EltwiseAdd,
};

enum class PoolOp { Max, Avg };

inline const char* to_string(LayerKind k) {
    switch (k) {
        case LayerKind::Convolution:  return "Convolution";
        case LayerKind::Pooling:      return "Pooling";
        case LayerKind::Nonlinearity: return "Nonlinearity";
        case LayerKind::InnerProduct: return "InnerProduct";
        case LayerKind::Split:        return "Split";
        case LayerKind::Concat:       return "Concat";
        case LayerKind::EltwiseAdd:   return "EltwiseAdd";
    }
    return "?";
}

inline std::optional<LayerKind> layer_kind_from(const std::string& s) {
    if (s == "Convolution")  return LayerKind::Convolution;
    if (s == "Pooling")      return LayerKind::Pooling;
    if (s == "Nonlinearity") return LayerKind::Nonlinearity;
    if (s == "InnerProduct") return LayerKind::InnerProduct;
    if (s == "Split")        return LayerKind::Split;
    if (s == "Concat")       return LayerKind::Concat;
    if (s == "EltwiseAdd")   return LayerKind::EltwiseAdd;
    return std::nullopt;
}

struct TensorShape {
    std::int64_t channels = 0;
    std::int64_t h = 0;
    std::int64_t w = 0;

    std::int64_t elems() const { return channels * h * w; }
    bool operator==(const TensorShape&) const = default;
};

struct LayerSpec {
    std::string id;
    LayerKind kind = LayerKind::Nonlinearity;

    std::int64_t kernel = 1;       // conv/pool
    std::int64_t stride = 1;       // conv/pool
    std::int64_t padding = 0;      // conv/pool
    std::int64_t num_filters = 0;  // conv/inner-product
    std::int64_t fan_out = 2;      // split
    PoolOp pool_op = PoolOp::Max;

    // Filled by infer_shapes. For InnerProduct the input is flattened to
    // (C*h*w, 1, 1) before the 1x1 convolution view.
    TensorShape in_shape{};
    TensorShape out_shape{};
};

struct ConvNetModel {
    std::string name;
    TensorShape input_shape{};
    std::vector<LayerSpec> layers;
    std::vector<std::pair<std::string, std::string>> edges;

    int index_of(const std::string& id) const {
        for (std::size_t i = 0; i < layers.size(); ++i)
            if (layers[i].id == id) return static_cast<int>(i);
        return -1;
    }

    std::vector<int> predecessors(int li) const {
        std::vector<int> out;
        for (const auto& [a, b] : edges)
            if (index_of(b) == li) out.push_back(index_of(a));
        return out;
    }

    std::vector<int> successors(int li) const {
        std::vector<int> out;
        for (const auto& [a, b] : edges)
            if (index_of(a) == li) out.push_back(index_of(b));
        return out;
    }

    /// Kahn topological order, ties broken by declaration order.
    std::vector<int> topo_order() const {
        const int n = static_cast<int>(layers.size());
        std::vector<int> indeg(n, 0);
        for (const auto& [a, b] : edges) {
            int bi = index_of(b);
            if (bi >= 0) indeg[bi]++;
        }
        std::vector<int> order;
        std::vector<bool> done(n, false);
        while (static_cast<int>(order.size()) < n) {
            int pick = -1;
            for (int i = 0; i < n; ++i)
                if (!done[i] && indeg[i] == 0) { pick = i; break; }
            if (pick < 0) throw ModelError("cycle detected in layer graph");
            done[pick] = true;
            order.push_back(pick);
            for (int s : successors(pick)) indeg[s]--;
        }
        return order;
    }
};

namespace detail {

inline std::int64_t window_out(std::int64_t in, std::int64_t k, std::int64_t stride,
                               std::int64_t pad, const std::string& layer_id) {
    std::int64_t eff = in + 2 * pad - k;
    if (eff < 0)
        throw ModelError("layer '" + layer_id + "': non-positive output dimension (input " +
                         std::to_string(in) + " smaller than kernel " + std::to_string(k) + ")");
    return eff / stride + 1;
}

}  // namespace detail

/// Structural validation: references, acyclicity, source/sink counts,
/// per-kind parameter ranges. Throws ModelError with the offending id.
inline void validate(const ConvNetModel& m) {
    if (m.layers.empty()) throw ModelError("model has no layers");
    if (m.input_shape.channels <= 0 || m.input_shape.h <= 0 || m.input_shape.w <= 0)
        throw ModelError("input shape dimensions must be strictly positive");

    std::map<std::string, int> seen;
    for (const auto& l : m.layers) {
        if (++seen[l.id] > 1) throw ModelError("duplicate layer id '" + l.id + "'");
        if (l.kernel < 1 || l.stride < 1 || l.padding < 0)
            throw ModelError("layer '" + l.id + "': kernel/stride/padding out of range");
        if ((l.kind == LayerKind::Convolution || l.kind == LayerKind::InnerProduct) &&
            l.num_filters < 1)
            throw ModelError("layer '" + l.id + "': num_filters must be >= 1");
        if (l.kind == LayerKind::Split && l.fan_out < 2)
            throw ModelError("layer '" + l.id + "': split fan_out must be >= 2");
    }
    for (const auto& [a, b] : m.edges) {
        if (m.index_of(a) < 0) throw ModelError("dangling edge: unknown layer id '" + a + "'");
        if (m.index_of(b) < 0) throw ModelError("dangling edge: unknown layer id '" + b + "'");
    }

    const int n = static_cast<int>(m.layers.size());
    int sources = 0, sinks = 0;
    for (int i = 0; i < n; ++i) {
        const auto preds = m.predecessors(i);
        const auto succs = m.successors(i);
        const auto& l = m.layers[i];
        if (preds.empty()) sources++;
        if (succs.empty()) sinks++;
        if (preds.size() > 1 && l.kind != LayerKind::Concat && l.kind != LayerKind::EltwiseAdd)
            throw ModelError("layer '" + l.id + "': multiple inputs only allowed on Concat/EltwiseAdd");
        if (succs.size() > 1 && l.kind != LayerKind::Split)
            throw ModelError("layer '" + l.id + "': multiple consumers require an explicit Split");
        if (l.kind == LayerKind::Split && !succs.empty() &&
            static_cast<std::int64_t>(succs.size()) != l.fan_out)
            throw ModelError("layer '" + l.id + "': split fan_out " + std::to_string(l.fan_out) +
                             " does not match consumer count " + std::to_string(succs.size()));
        if ((l.kind == LayerKind::Concat || l.kind == LayerKind::EltwiseAdd) && preds.size() < 2)
            throw ModelError("layer '" + l.id + "': join needs at least two inputs");
    }
    if (sources != 1) throw ModelError("model must have exactly one input layer, found " +
                                       std::to_string(sources));
    if (sinks < 1) throw ModelError("model must have at least one output layer");

    m.topo_order();  // throws on cycles
}

/// Annotate every layer with input/output shapes. conv/pool use
/// floor((in + 2*pad - K)/stride) + 1. Returns a new annotated model.
inline ConvNetModel infer_shapes(ConvNetModel m) {
    const auto order = m.topo_order();
    for (int li : order) {
        auto& l = m.layers[li];
        const auto preds = m.predecessors(li);
        TensorShape in;
        if (preds.empty()) {
            in = m.input_shape;
        } else if (l.kind == LayerKind::Concat) {
            TensorShape first = m.layers[preds[0]].out_shape;
            std::int64_t c = 0;
            for (int p : preds) {
                const auto& s = m.layers[p].out_shape;
                if (s.h != first.h || s.w != first.w)
                    throw ModelError("layer '" + l.id + "': concat inputs disagree on spatial dims");
                c += s.channels;
            }
            in = {c, first.h, first.w};
        } else if (l.kind == LayerKind::EltwiseAdd) {
            TensorShape first = m.layers[preds[0]].out_shape;
            for (int p : preds)
                if (!(m.layers[p].out_shape == first))
                    throw ModelError("layer '" + l.id + "': eltwise inputs disagree on shape");
            in = first;
        } else {
            in = m.layers[preds[0]].out_shape;
        }
        l.in_shape = in;

        switch (l.kind) {
            case LayerKind::Convolution: {
                std::int64_t oh = detail::window_out(in.h, l.kernel, l.stride, l.padding, l.id);
                std::int64_t ow = detail::window_out(in.w, l.kernel, l.stride, l.padding, l.id);
                if (oh < 1 || ow < 1)
                    throw ModelError("layer '" + l.id + "': non-positive output dimension");
                l.out_shape = {l.num_filters, oh, ow};
                break;
            }
            case LayerKind::Pooling: {
                std::int64_t oh = detail::window_out(in.h, l.kernel, l.stride, l.padding, l.id);
                std::int64_t ow = detail::window_out(in.w, l.kernel, l.stride, l.padding, l.id);
                if (oh < 1 || ow < 1)
                    throw ModelError("layer '" + l.id + "': non-positive output dimension");
                l.out_shape = {in.channels, oh, ow};
                break;
            }
            case LayerKind::InnerProduct:
                // Flattened input, 1x1 convolution view.
                l.in_shape = {in.elems(), 1, 1};
                l.out_shape = {l.num_filters, 1, 1};
                break;
            case LayerKind::Nonlinearity:
            case LayerKind::Split:
                l.out_shape = in;
                break;
            case LayerKind::Concat:
            case LayerKind::EltwiseAdd:
                l.out_shape = in;
                break;
        }
    }
    return m;
}

/// validate + infer_shapes in one step.
inline ConvNetModel finalize(ConvNetModel m) {
    validate(m);
    return infer_shapes(std::move(m));
}

}  // namespace sdfnet
