#pragma once

#include <cstdint>
#include <vector>

#include "xc/autograd.hpp"
#include "xc/lora.hpp"
#include "xc/random.hpp"

namespace xc {

using TokenId = std::uint32_t;

struct EncoderConfig {
    std::size_t L = 4;        // layer count
    std::size_t d = 32;       // model width
    std::size_t H = 4;        // attention heads (divides d)
    std::size_t d_ff = 64;    // feed-forward width
    std::size_t V = 0;        // vocabulary size
    std::size_t max_len = 256;
    double eps = 1e-5;        // layer-norm epsilon

    void validate() const;
};

struct EncoderLayerWeights {
    Parameter Wq, bq, Wk, bk, Wv, bv, Wo, bo;
    Parameter W1, b1, W2, b2;
    Parameter ln1_g, ln1_b, ln2_g, ln2_b;

    std::vector<Parameter*> params();
};

/// Per-layer hidden states h^(0) (embedding sum) through h^(L).
struct LayerTrace {
    std::vector<Tensor> h;
};

/// Post-layer-norm BERT-style encoder with learned absolute positions.
/// Weights use the row convention: states are len x d, projections apply
/// as x * W + b.
class TransformerEncoder {
public:
    EncoderConfig cfg;
    Parameter tok_emb;  // V x d
    Parameter pos_emb;  // max_len x d
    std::vector<EncoderLayerWeights> layers;

    void init(const EncoderConfig& c, RandomSource& rng);

    std::vector<Parameter*> params();
    void freeze();
    bool frozen() const;
    std::uint64_t weights_hash() const;

    /// Tape builders; leaves for the needed weights are created per call.
    Var embed(Tape& tape, const std::vector<TokenId>& tokens);
    Var block(Tape& tape, Var x, std::size_t layer_index, LoraSet* adapters);

    /// Full forward returning every layer's hidden state.
    LayerTrace encode(const std::vector<TokenId>& tokens, LoraSet* adapters = nullptr);

    /// Single block application, identical to the layer_index-th step
    /// inside encode.
    Tensor encode_step(const Tensor& x, std::size_t layer_index, LoraSet* adapters = nullptr);
};

}  // namespace xc
