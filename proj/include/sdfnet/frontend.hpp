#pragma once

#include <cctype>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdfnet/model.hpp"

namespace sdfnet {

class ParseError : public ModelError {
public:
    ParseError(const std::string& what, int line, int column)
        : ModelError("line " + std::to_string(line) + ", column " + std::to_string(column) +
                     ": " + what),
          line(line), column(column) {}
    int line;
    int column;
};

namespace detail {

inline std::pair<int, int> line_col(const std::string& text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') { line++; col = 1; } else col++;
    }
    return {line, col};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Native JSON format, `format: 1`:
//   {"format":1, "name":..., "input":{"channels":..,"h":..,"w":..},
//    "layers":[{"id":..,"kind":..,...params}], "edges":[["a","b"],...]}
// ---------------------------------------------------------------------------

inline ConvNetModel parse_native(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        auto [line, col] = detail::line_col(text, e.byte > 0 ? e.byte - 1 : 0);
        throw ParseError(std::string("JSON syntax error: ") + e.what(), line, col);
    }
    try {
        if (j.value("format", 0) != 1)
            throw ModelError("unsupported or missing format version (expected format: 1)");
        ConvNetModel m;
        m.name = j.value("name", "unnamed");
        const auto& in = j.at("input");
        m.input_shape = {in.at("channels").get<std::int64_t>(),
                         in.at("h").get<std::int64_t>(),
                         in.at("w").get<std::int64_t>()};
        for (const auto& lj : j.at("layers")) {
            LayerSpec l;
            l.id = lj.at("id").get<std::string>();
            const std::string kind = lj.at("kind").get<std::string>();
            auto k = layer_kind_from(kind);
            if (!k) throw ModelError("unknown layer kind '" + kind + "' in layer '" + l.id + "'");
            l.kind = *k;
            l.kernel = lj.value("kernel_size", std::int64_t{1});
            l.stride = lj.value("stride", std::int64_t{1});
            l.padding = lj.value("padding", std::int64_t{0});
            l.num_filters = lj.value("num_filters", std::int64_t{0});
            l.fan_out = lj.value("fan_out", std::int64_t{2});
            if (lj.value("pool_op", "max") == std::string("avg")) l.pool_op = PoolOp::Avg;
            m.layers.push_back(std::move(l));
        }
        for (const auto& ej : j.at("edges"))
            m.edges.emplace_back(ej.at(0).get<std::string>(), ej.at(1).get<std::string>());
        return finalize(std::move(m));
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(std::string("malformed native model: ") + e.what());
    }
}

inline std::string serialize_native(const ConvNetModel& m) {
    nlohmann::ordered_json j;
    j["format"] = 1;
    j["name"] = m.name;
    j["input"] = {{"channels", m.input_shape.channels}, {"h", m.input_shape.h},
                  {"w", m.input_shape.w}};
    j["layers"] = nlohmann::ordered_json::array();
    for (const auto& l : m.layers) {
        nlohmann::ordered_json lj;
        lj["id"] = l.id;
        lj["kind"] = to_string(l.kind);
        switch (l.kind) {
            case LayerKind::Convolution:
                lj["kernel_size"] = l.kernel;
                lj["stride"] = l.stride;
                lj["padding"] = l.padding;
                lj["num_filters"] = l.num_filters;
                break;
            case LayerKind::Pooling:
                lj["kernel_size"] = l.kernel;
                lj["stride"] = l.stride;
                lj["padding"] = l.padding;
                lj["pool_op"] = l.pool_op == PoolOp::Avg ? "avg" : "max";
                break;
            case LayerKind::InnerProduct:
                lj["num_filters"] = l.num_filters;
                break;
            case LayerKind::Split:
                lj["fan_out"] = l.fan_out;
                break;
            default:
                break;
        }
        j["layers"].push_back(std::move(lj));
    }
    j["edges"] = nlohmann::ordered_json::array();
    for (const auto& [a, b] : m.edges) j["edges"].push_back({a, b});
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Caffe prototxt subset: Input, Convolution, Pooling, ReLU, InnerProduct,
// Concat, Eltwise(SUM); splits are implicit via multiple bottom references.
// phase / fillers / lr fields are ignored.
// ---------------------------------------------------------------------------

namespace prototxt {

struct Token {
    enum Type { Ident, String, Number, LBrace, RBrace, Colon, End } type;
    std::string text;
    int line, col;
};

class Lexer {
public:
    explicit Lexer(const std::string& text) : text_(text) {}

    Token next() {
        skip_ws();
        int line = line_, col = col_;
        if (pos_ >= text_.size()) return {Token::End, "", line, col};
        char c = text_[pos_];
        if (c == '{') { advance(); return {Token::LBrace, "{", line, col}; }
        if (c == '}') { advance(); return {Token::RBrace, "}", line, col}; }
        if (c == ':') { advance(); return {Token::Colon, ":", line, col}; }
        if (c == '"' || c == '\'') {
            char quote = c;
            advance();
            std::string s;
            while (pos_ < text_.size() && text_[pos_] != quote) { s += text_[pos_]; advance(); }
            if (pos_ >= text_.size()) throw ParseError("unterminated string", line, col);
            advance();
            return {Token::String, s, line, col};
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+') {
            std::string s;
            while (pos_ < text_.size() &&
                   (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
                    text_[pos_] == '.' || text_[pos_] == '-' || text_[pos_] == '+' ||
                    text_[pos_] == 'e' || text_[pos_] == 'E')) {
                s += text_[pos_];
                advance();
            }
            return {Token::Number, s, line, col};
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string s;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                    text_[pos_] == '_' || text_[pos_] == '.')) {
                s += text_[pos_];
                advance();
            }
            return {Token::Ident, s, line, col};
        }
        throw ParseError(std::string("unexpected character '") + c + "'", line, col);
    }

private:
    void skip_ws() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }
    void advance() {
        if (text_[pos_] == '\n') { line_++; col_ = 1; } else col_++;
        pos_++;
    }
    const std::string& text_;
    std::size_t pos_ = 0;
    int line_ = 1, col_ = 1;
};

// Generic message node: repeated key -> scalar(s) and key -> sub-block(s).
struct Node {
    std::vector<std::pair<std::string, std::string>> fields;
    std::vector<std::pair<std::string, Node>> blocks;

    const std::string* field(const std::string& key) const {
        for (const auto& [k, v] : fields)
            if (k == key) return &v;
        return nullptr;
    }
    std::vector<std::string> field_all(const std::string& key) const {
        std::vector<std::string> out;
        for (const auto& [k, v] : fields)
            if (k == key) out.push_back(v);
        return out;
    }
    const Node* block(const std::string& key) const {
        for (const auto& [k, v] : blocks)
            if (k == key) return &v;
        return nullptr;
    }
    std::int64_t int_field(const std::string& key, std::int64_t dflt) const {
        const std::string* s = field(key);
        return s ? std::stoll(*s) : dflt;
    }
};

inline Node parse_node(Lexer& lex, Token& tok, bool top_level) {
    Node node;
    while (true) {
        if (tok.type == Token::End) {
            if (!top_level) throw ParseError("unexpected end of file inside block", tok.line, tok.col);
            return node;
        }
        if (tok.type == Token::RBrace) {
            if (top_level) throw ParseError("unmatched '}'", tok.line, tok.col);
            return node;
        }
        if (tok.type != Token::Ident)
            throw ParseError("expected field name, got '" + tok.text + "'", tok.line, tok.col);
        std::string key = tok.text;
        tok = lex.next();
        if (tok.type == Token::LBrace) {
            tok = lex.next();
            Node sub = parse_node(lex, tok, false);
            tok = lex.next();  // past '}'
            node.blocks.emplace_back(key, std::move(sub));
        } else if (tok.type == Token::Colon) {
            tok = lex.next();
            if (tok.type == Token::LBrace) {
                tok = lex.next();
                Node sub = parse_node(lex, tok, false);
                tok = lex.next();
                node.blocks.emplace_back(key, std::move(sub));
            } else if (tok.type == Token::String || tok.type == Token::Number ||
                       tok.type == Token::Ident) {
                node.fields.emplace_back(key, tok.text);
                tok = lex.next();
            } else {
                throw ParseError("expected value after '" + key + ":'", tok.line, tok.col);
            }
        } else {
            throw ParseError("expected ':' or '{' after '" + key + "'", tok.line, tok.col);
        }
    }
}

}  // namespace prototxt

inline ConvNetModel parse_prototxt(const std::string& text) {
    prototxt::Lexer lex(text);
    prototxt::Token tok = lex.next();
    prototxt::Node root = prototxt::parse_node(lex, tok, true);

    ConvNetModel m;
    if (const auto* n = root.field("name")) m.name = *n;

    // Legacy top-level input declaration.
    std::string input_name;
    if (const auto* in = root.field("input")) {
        input_name = *in;
        auto dims = root.field_all("input_dim");
        if (dims.size() == 4) {
            m.input_shape = {std::stoll(dims[1]), std::stoll(dims[2]), std::stoll(dims[3])};
        } else if (const auto* shape = root.block("input_shape")) {
            auto d = shape->field_all("dim");
            if (d.size() != 4)
                throw ModelError("input_shape must carry 4 dims (n, c, h, w)");
            m.input_shape = {std::stoll(d[1]), std::stoll(d[2]), std::stoll(d[3])};
        } else {
            throw ModelError("input '" + input_name + "' declared without dimensions");
        }
    }

    // top name -> producing layer id, updated as layers are read.
    std::map<std::string, std::string> producer;
    if (!input_name.empty()) producer[input_name] = "";  // network input marker

    struct PendingEdge { std::string from_layer; std::string to_layer; };
    std::vector<PendingEdge> edges;

    for (const auto& [bkey, layer] : root.blocks) {
        if (bkey != "layer" && bkey != "layers") continue;
        const std::string* name = layer.field("name");
        const std::string* type = layer.field("type");
        if (!name || !type) throw ModelError("layer block missing name or type");

        if (*type == "Input") {
            const prototxt::Node* ip = layer.block("input_param");
            const prototxt::Node* shape = ip ? ip->block("shape") : nullptr;
            if (!shape) throw ModelError("Input layer '" + *name + "' missing input_param.shape");
            auto d = shape->field_all("dim");
            if (d.size() != 4) throw ModelError("Input layer '" + *name + "' needs 4 dims");
            m.input_shape = {std::stoll(d[1]), std::stoll(d[2]), std::stoll(d[3])};
            for (const auto& top : layer.field_all("top")) producer[top] = "";
            continue;
        }

        LayerSpec l;
        l.id = *name;
        if (*type == "Convolution") {
            l.kind = LayerKind::Convolution;
            const prototxt::Node* p = layer.block("convolution_param");
            if (!p) throw ModelError("Convolution '" + l.id + "' missing convolution_param");
            l.num_filters = p->int_field("num_output", 0);
            l.kernel = p->int_field("kernel_size", 1);
            l.stride = p->int_field("stride", 1);
            l.padding = p->int_field("pad", 0);
            if (p->int_field("group", 1) != 1)
                throw ModelError("Convolution '" + l.id + "': grouped convolution not supported");
            if (p->int_field("dilation", 1) != 1)
                throw ModelError("Convolution '" + l.id + "': dilated convolution not supported");
        } else if (*type == "Pooling") {
            l.kind = LayerKind::Pooling;
            const prototxt::Node* p = layer.block("pooling_param");
            if (!p) throw ModelError("Pooling '" + l.id + "' missing pooling_param");
            l.kernel = p->int_field("kernel_size", 1);
            l.stride = p->int_field("stride", 1);
            l.padding = p->int_field("pad", 0);
            const std::string* op = p->field("pool");
            l.pool_op = (op && *op == "AVE") ? PoolOp::Avg : PoolOp::Max;
        } else if (*type == "ReLU") {
            l.kind = LayerKind::Nonlinearity;
        } else if (*type == "InnerProduct") {
            l.kind = LayerKind::InnerProduct;
            const prototxt::Node* p = layer.block("inner_product_param");
            if (!p) throw ModelError("InnerProduct '" + l.id + "' missing inner_product_param");
            l.num_filters = p->int_field("num_output", 0);
        } else if (*type == "Concat") {
            l.kind = LayerKind::Concat;
        } else if (*type == "Eltwise") {
            const prototxt::Node* p = layer.block("eltwise_param");
            const std::string* op = p ? p->field("operation") : nullptr;
            if (op && *op != "SUM")
                throw ModelError("Eltwise '" + l.id + "': only SUM is supported, got " + *op);
            l.kind = LayerKind::EltwiseAdd;
        } else {
            throw ModelError("unsupported layer type '" + *type + "' (layer '" + *name + "')");
        }

        for (const auto& bottom : layer.field_all("bottom")) {
            auto it = producer.find(bottom);
            if (it == producer.end())
                throw ModelError("layer '" + l.id + "': unknown bottom blob '" + bottom + "'");
            if (!it->second.empty()) edges.push_back({it->second, l.id});
        }
        auto tops = layer.field_all("top");
        for (const auto& top : tops) producer[top] = l.id;
        m.layers.push_back(std::move(l));
    }

    if (m.layers.empty()) throw ModelError("no layers in prototxt");

    m.edges.reserve(edges.size());
    for (const auto& e : edges) m.edges.emplace_back(e.from_layer, e.to_layer);

    // Implicit splits: a layer feeding k > 1 consumers gets an explicit
    // Split node inserted between it and the consumers.
    std::map<std::string, std::vector<std::size_t>> out_edges;
    for (std::size_t i = 0; i < m.edges.size(); ++i) out_edges[m.edges[i].first].push_back(i);
    for (auto& [from, idxs] : out_edges) {
        if (idxs.size() < 2) continue;
        LayerSpec split;
        split.id = from + "_split";
        split.kind = LayerKind::Split;
        split.fan_out = static_cast<std::int64_t>(idxs.size());
        m.layers.push_back(split);
        for (std::size_t i : idxs) m.edges[i].first = split.id;
        m.edges.emplace_back(from, split.id);
    }

    return finalize(std::move(m));
}

}  // namespace sdfnet
