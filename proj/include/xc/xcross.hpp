#pragma once

#include <cstdint>
#include <vector>

#include "xc/encoder.hpp"
#include "xc/lora.hpp"

namespace xc {

struct XCrossConfig {
    std::size_t n = 2;        // source domain count
    double beta = 0.5;        // direct-influence coefficient
    double gamma = 0.4;       // interaction coefficient
    std::vector<std::size_t> integrated_layers;  // contiguous top block, ascending
    std::size_t d = 32;

    void validate(std::size_t L) const;
    /// Top-c layers of an L-layer encoder, ascending.
    static std::vector<std::size_t> top_layers(std::size_t L, std::size_t c);
};

/// z entry layout: for each domain m = 0..n-1 a block of 2(n-1) entries,
/// first the direct factors for m' != m ascending, then the interaction
/// factors for m' != m ascending.
std::size_t z_direct_index(std::size_t n, std::size_t m, std::size_t m_prime);
std::size_t z_interact_index(std::size_t n, std::size_t m, std::size_t m_prime);

struct IntegratorLayer {
    std::size_t layer = 0;
    Parameter W_concat;  // 2n(n-1) x n*d, zero-initialized
};

struct FinalMixer {
    Parameter w;  // n entries, initialized to 1/n
};

struct PoolerScorer {
    Parameter W_p;  // d x d
    Parameter b_p;  // d
    Parameter V_c;  // 1 x d
    Parameter b_c;  // 1 x 1

    void init(std::size_t d, RandomSource& rng);
    std::vector<Parameter*> params() { return {&W_p, &b_p, &V_c, &b_c}; }

    /// Eq-style plain ops on a final hidden state (position 0 = [CLS]).
    Tensor pool(const Tensor& h_final) const;
    double score(const Tensor& h_pooled) const;

    /// Tape version over a len x d hidden state.
    Var forward(Tape& tape, Var h_final);
};

/// z = W_concat * [h_1; ...; h_n] for a single token position.
Tensor compute_z(const Tensor& w_concat, const std::vector<Tensor>& h);

/// Eq. 5 refinement for a single token position of domain m.
Tensor refine(const std::vector<Tensor>& h, const Tensor& z, std::size_t m, double beta,
              double gamma);

struct ParamBreakdown {
    std::size_t per_layer_integrator = 0;  // 2n(n-1) * n * d
    std::size_t integrator_total = 0;
    std::size_t mixer = 0;                 // n
    std::size_t head = 0;                  // d^2 + 2d + 1
    std::size_t total = 0;
};

ParamBreakdown trainable_param_count(const XCrossConfig& cfg);

/// The four-stage dynamic integration model: n frozen adapted streams,
/// per-layer trainable integrators, final mixer, pooler/scorer head.
class XCrossModel {
public:
    XCrossConfig cfg;
    TransformerEncoder* base = nullptr;     // frozen
    std::vector<LoraSet*> sources;          // frozen, size n
    std::vector<IntegratorLayer> integrators;
    FinalMixer mixer;
    PoolerScorer head;

    void init(const XCrossConfig& c, TransformerEncoder* encoder,
              std::vector<LoraSet*> source_sets, RandomSource& rng);

    /// Start transparent to one source: copy its trained head and set the
    /// mixer one-hot, so the initial scores equal that source's zero-shot
    /// scores exactly (W_concat stays zero). Training then only has to
    /// improve on the best zero-shot model instead of rediscovering it.
    void warm_start(const PoolerScorer& source_head, std::size_t source_index);

    std::vector<Parameter*> trainable_params();

    /// Stages 1-4: n parallel streams, per-token refinement at integrated
    /// layers, weighted mixing of the final refined states.
    Var forward_hidden(Tape& tape, const std::vector<TokenId>& tokens);
    /// forward_hidden + pooling + scoring (Eqs. 7-8).
    Var forward_score(Tape& tape, const std::vector<TokenId>& tokens);

    Tensor xcross_forward(const std::vector<TokenId>& tokens);

private:
    IntegratorLayer* integrator_for(std::size_t layer);
};

}  // namespace xc
