#include "xc/encoder.hpp"

#include <cmath>

#include "xc/hash.hpp"

namespace xc {

void EncoderConfig::validate() const {
    if (H == 0 || d % H != 0) throw std::invalid_argument("EncoderConfig: H must divide d");
    if (V == 0) throw std::invalid_argument("EncoderConfig: vocabulary size not set");
}

std::vector<Parameter*> EncoderLayerWeights::params() {
    return {&Wq, &bq, &Wk, &bk, &Wv, &bv, &Wo, &bo,
            &W1, &b1, &W2, &b2, &ln1_g, &ln1_b, &ln2_g, &ln2_b};
}

namespace {

Parameter make_normal(const std::string& name, std::size_t r, std::size_t c, RandomSource& rng) {
    Parameter p(name, Tensor(r, c));
    for (double& v : p.value.data) v = rng.normal(0.0, 0.02);
    return p;
}

Parameter make_const(const std::string& name, std::size_t n, double fill) {
    Parameter p(name, Tensor({n}));
    for (double& v : p.value.data) v = fill;
    return p;
}

}  // namespace

void TransformerEncoder::init(const EncoderConfig& c, RandomSource& rng) {
    c.validate();
    cfg = c;
    tok_emb = make_normal("tok_emb", c.V, c.d, rng);
    pos_emb = make_normal("pos_emb", c.max_len, c.d, rng);
    layers.clear();
    for (std::size_t l = 1; l <= c.L; ++l) {
        const std::string pre = "layer" + std::to_string(l) + ".";
        EncoderLayerWeights w;
        w.Wq = make_normal(pre + "Wq", c.d, c.d, rng);
        w.bq = make_const(pre + "bq", c.d, 0.0);
        w.Wk = make_normal(pre + "Wk", c.d, c.d, rng);
        w.bk = make_const(pre + "bk", c.d, 0.0);
        w.Wv = make_normal(pre + "Wv", c.d, c.d, rng);
        w.bv = make_const(pre + "bv", c.d, 0.0);
        w.Wo = make_normal(pre + "Wo", c.d, c.d, rng);
        w.bo = make_const(pre + "bo", c.d, 0.0);
        w.W1 = make_normal(pre + "W1", c.d, c.d_ff, rng);
        w.b1 = make_const(pre + "b1", c.d_ff, 0.0);
        w.W2 = make_normal(pre + "W2", c.d_ff, c.d, rng);
        w.b2 = make_const(pre + "b2", c.d, 0.0);
        w.ln1_g = make_const(pre + "ln1_g", c.d, 1.0);
        w.ln1_b = make_const(pre + "ln1_b", c.d, 0.0);
        w.ln2_g = make_const(pre + "ln2_g", c.d, 1.0);
        w.ln2_b = make_const(pre + "ln2_b", c.d, 0.0);
        layers.push_back(std::move(w));
    }
}

std::vector<Parameter*> TransformerEncoder::params() {
    std::vector<Parameter*> out{&tok_emb, &pos_emb};
    for (auto& l : layers)
        for (auto* p : l.params()) out.push_back(p);
    return out;
}

void TransformerEncoder::freeze() {
    for (auto* p : params()) p->trainable = false;
}

bool TransformerEncoder::frozen() const {
    return !tok_emb.trainable;
}

std::uint64_t TransformerEncoder::weights_hash() const {
    std::uint64_t h = hash_tensor(tok_emb.value);
    h = hash_tensor(pos_emb.value, h);
    for (const auto& l : layers)
        for (const auto* p :
             {&l.Wq, &l.bq, &l.Wk, &l.bk, &l.Wv, &l.bv, &l.Wo, &l.bo,
              &l.W1, &l.b1, &l.W2, &l.b2, &l.ln1_g, &l.ln1_b, &l.ln2_g, &l.ln2_b})
            h = hash_tensor(p->value, h);
    return h;
}

Var TransformerEncoder::embed(Tape& tape, const std::vector<TokenId>& tokens) {
    if (tokens.size() > cfg.max_len)
        throw std::invalid_argument("encode: sequence length " + std::to_string(tokens.size()) +
                                    " exceeds max_len " + std::to_string(cfg.max_len));
    std::vector<std::size_t> tok_idx, pos_idx;
    tok_idx.reserve(tokens.size());
    pos_idx.reserve(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i] >= cfg.V)
            throw std::invalid_argument("encode: token id " + std::to_string(tokens[i]) +
                                        " out of range (V=" + std::to_string(cfg.V) + ")");
        tok_idx.push_back(tokens[i]);
        pos_idx.push_back(i);
    }
    Var te = tape.gather_rows(tape.leaf(tok_emb), std::move(tok_idx));
    Var pe = tape.gather_rows(tape.leaf(pos_emb), std::move(pos_idx));
    return tape.add(te, pe);
}

namespace {

/// x * W (+ optional LoRA term (alpha/r) * (x * A) * B) + bias.
Var projection(Tape& tape, Var x, Parameter& w, Parameter& b, LoraAdapter* adapter) {
    Var out = tape.matmul(x, tape.leaf(w));
    if (adapter) {
        Var low = tape.matmul(tape.matmul(x, tape.leaf(adapter->A)), tape.leaf(adapter->B));
        out = tape.add(out, tape.scale(low, adapter->scaling()));
    }
    return tape.add_row_broadcast(out, tape.leaf(b));
}

}  // namespace

Var TransformerEncoder::block(Tape& tape, Var x, std::size_t layer_index, LoraSet* adapters) {
    if (layer_index < 1 || layer_index > cfg.L)
        throw std::invalid_argument("block: layer index " + std::to_string(layer_index) +
                                    " out of range 1.." + std::to_string(cfg.L));
    if (x.cols() != cfg.d)
        throw std::invalid_argument("block: input width " + std::to_string(x.cols()) +
                                    " != d=" + std::to_string(cfg.d));
    EncoderLayerWeights& w = layers[layer_index - 1];
    LoraAdapter* aq = adapters ? adapters->find(layer_index, ProjTag::Query) : nullptr;
    LoraAdapter* av = adapters ? adapters->find(layer_index, ProjTag::Value) : nullptr;

    Var q = projection(tape, x, w.Wq, w.bq, aq);
    Var k = projection(tape, x, w.Wk, w.bk, nullptr);
    Var v = projection(tape, x, w.Wv, w.bv, av);

    const std::size_t dh = cfg.d / cfg.H;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<Var> heads;
    heads.reserve(cfg.H);
    for (std::size_t h = 0; h < cfg.H; ++h) {
        Var qh = tape.slice_cols(q, h * dh, dh);
        Var kh = tape.slice_cols(k, h * dh, dh);
        Var vh = tape.slice_cols(v, h * dh, dh);
        Var scores = tape.scale(tape.matmul_nt(qh, kh), inv_sqrt);
        Var attn = tape.softmax_rows(scores);
        heads.push_back(tape.matmul(attn, vh));
    }
    Var concat = cfg.H == 1 ? heads[0] : tape.concat_cols(heads);
    Var attn_out = tape.add_row_broadcast(tape.matmul(concat, tape.leaf(w.Wo)), tape.leaf(w.bo));
    Var x1 = tape.layer_norm(tape.add(x, attn_out), tape.leaf(w.ln1_g), tape.leaf(w.ln1_b), cfg.eps);

    Var ff = tape.gelu(tape.add_row_broadcast(tape.matmul(x1, tape.leaf(w.W1)), tape.leaf(w.b1)));
    Var ff2 = tape.add_row_broadcast(tape.matmul(ff, tape.leaf(w.W2)), tape.leaf(w.b2));
    return tape.layer_norm(tape.add(x1, ff2), tape.leaf(w.ln2_g), tape.leaf(w.ln2_b), cfg.eps);
}

LayerTrace TransformerEncoder::encode(const std::vector<TokenId>& tokens, LoraSet* adapters) {
    Tape tape;
    LayerTrace trace;
    Var x = embed(tape, tokens);
    trace.h.push_back(x.value());
    for (std::size_t l = 1; l <= cfg.L; ++l) {
        x = block(tape, x, l, adapters);
        trace.h.push_back(x.value());
    }
    return trace;
}

Tensor TransformerEncoder::encode_step(const Tensor& x, std::size_t layer_index,
                                       LoraSet* adapters) {
    Tape tape;
    Var out = block(tape, tape.constant(x), layer_index, adapters);
    return out.value();
}

}  // namespace xc
