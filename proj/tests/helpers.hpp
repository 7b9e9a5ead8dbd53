#pragma once

#include <random>
#include <string>
#include <vector>

#include "sdfnet/sdfnet.hpp"

namespace testutil {

using namespace sdfnet;

inline LayerSpec conv(const std::string& id, std::int64_t k, std::int64_t nf,
                      std::int64_t stride = 1, std::int64_t pad = 0) {
    LayerSpec l;
    l.id = id;
    l.kind = LayerKind::Convolution;
    l.kernel = k;
    l.stride = stride;
    l.padding = pad;
    l.num_filters = nf;
    return l;
}

inline LayerSpec pool(const std::string& id, std::int64_t k, std::int64_t stride) {
    LayerSpec l;
    l.id = id;
    l.kind = LayerKind::Pooling;
    l.kernel = k;
    l.stride = stride;
    return l;
}

inline LayerSpec relu(const std::string& id) {
    LayerSpec l;
    l.id = id;
    l.kind = LayerKind::Nonlinearity;
    return l;
}

inline LayerSpec split(const std::string& id, std::int64_t fan_out) {
    LayerSpec l;
    l.id = id;
    l.kind = LayerKind::Split;
    l.fan_out = fan_out;
    return l;
}

inline LayerSpec join(const std::string& id, LayerKind kind) {
    LayerSpec l;
    l.id = id;
    l.kind = kind;
    return l;
}

inline ConvNetModel chain_model(const std::string& name, TensorShape input,
                                std::vector<LayerSpec> layers) {
    ConvNetModel m;
    m.name = name;
    m.input_shape = input;
    m.layers = std::move(layers);
    for (std::size_t i = 1; i < m.layers.size(); ++i)
        m.edges.emplace_back(m.layers[i - 1].id, m.layers[i].id);
    return finalize(std::move(m));
}

/// One fully-unfolded conv layer: the five-block pipeline.
inline ConvNetModel single_conv(std::int64_t c, std::int64_t hw, std::int64_t k,
                                std::int64_t nf) {
    return chain_model("single_conv", {c, hw, hw}, {conv("conv1", k, nf)});
}

/// split -> {conv branches} -> join, the irregular-dataflow shape.
inline ConvNetModel branchy_model(LayerKind join_kind, std::int64_t nf1 = 4,
                                  std::int64_t nf2 = 4) {
    ConvNetModel m;
    m.name = "branchy";
    m.input_shape = {2, 8, 8};
    m.layers = {conv("stem", 3, 4, 1, 1), split("fork", 2), conv("a", 3, nf1, 1, 1),
                conv("b", 3, nf2, 1, 1), join("merge", join_kind), pool("tail", 2, 2)};
    m.edges = {{"stem", "fork"}, {"fork", "a"}, {"fork", "b"},
               {"a", "merge"},   {"b", "merge"}, {"merge", "tail"}};
    return finalize(std::move(m));
}

/// Random valid chain/branch models for property suites. Small dims keep
/// the simulator oracle fast.
inline ConvNetModel random_model(std::mt19937_64& rng, int max_layers = 5,
                                 bool allow_branch = true) {
    auto pick = [&](std::int64_t lo, std::int64_t hi) {
        return lo + std::int64_t(rng() % std::uint64_t(hi - lo + 1));
    };
    ConvNetModel m;
    m.name = "random";
    m.input_shape = {pick(1, 3), pick(6, 12), pick(6, 12)};

    const int n_layers = int(pick(1, max_layers));
    const bool branch = allow_branch && n_layers >= 4 && (rng() % 3 == 0);

    std::string prev;
    auto add_chain_layer = [&](int idx) {
        const int what = int(rng() % 4);
        std::string id = "l" + std::to_string(idx);
        if (what == 0) {
            m.layers.push_back(pool(id, 2, 2));
        } else if (what == 1) {
            m.layers.push_back(relu(id));
        } else {
            m.layers.push_back(conv(id, pick(1, 3), pick(1, 6), 1, 1));
        }
        if (!prev.empty()) m.edges.emplace_back(prev, id);
        prev = id;
    };

    if (!branch) {
        for (int i = 0; i < n_layers; ++i) add_chain_layer(i);
    } else {
        add_chain_layer(0);
        const bool eltwise = rng() % 2 == 0;
        const std::int64_t nf = pick(1, 4);
        m.layers.push_back(split("sp", 2));
        m.edges.emplace_back(prev, "sp");
        m.layers.push_back(conv("ba", 3, nf, 1, 1));
        m.layers.push_back(conv("bb", 3, eltwise ? nf : pick(1, 4), 1, 1));
        m.edges.emplace_back("sp", "ba");
        m.edges.emplace_back("sp", "bb");
        m.layers.push_back(join("jn", eltwise ? LayerKind::EltwiseAdd : LayerKind::Concat));
        m.edges.emplace_back("ba", "jn");
        m.edges.emplace_back("bb", "jn");
        prev = "jn";
        for (int i = 5; i < n_layers + 4; ++i) add_chain_layer(i);
    }
    // spatial dims can shrink below kernels on deep random chains; retry
    try {
        return finalize(std::move(m));
    } catch (const ModelError&) {
        return random_model(rng, max_layers, allow_branch);
    }
}

/// Random folding assignment honouring divisibility.
inline FoldingConfig random_folding(const ConvNetModel& m, std::mt19937_64& rng) {
    FoldingConfig fc;
    auto divisors = [](std::int64_t n) {
        std::vector<std::int64_t> out;
        for (std::int64_t d = 1; d <= n; ++d)
            if (n % d == 0) out.push_back(d);
        return out;
    };
    for (const auto& l : m.layers) {
        if (l.kind == LayerKind::Convolution || l.kind == LayerKind::InnerProduct) {
            auto dc = divisors(l.num_filters);
            fc.coarse[l.id] = dc[rng() % dc.size()];
            const std::int64_t k = l.kind == LayerKind::InnerProduct ? 1 : l.kernel;
            auto df = divisors(k * k);
            fc.fine[l.id] = df[rng() % df.size()];
        } else if (l.kind == LayerKind::Pooling || l.kind == LayerKind::Nonlinearity) {
            auto dc = divisors(l.in_shape.channels);
            fc.coarse[l.id] = dc[rng() % dc.size()];
        }
    }
    return fc;
}

inline std::string data_path(const std::string& file) {
    return std::string(SDFNET_TEST_DATA) + "/" + file;
}

inline std::string platform_path(const std::string& file) {
    return std::string(SDFNET_PLATFORM_DIR) + "/" + file;
}

}  // namespace testutil
