#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xc/numerics.hpp"
#include "xc/random.hpp"
#include "xc/tensor.hpp"

namespace xc {

enum class ProjTag { Query, Value };

inline const char* proj_tag_name(ProjTag t) { return t == ProjTag::Query ? "query" : "value"; }

/// Low-rank adapter for one attention projection of one layer.
/// The adapted map is W + (alpha/r) * A * B; B starts all-zero so a fresh
/// adapter leaves the base map unchanged.
struct LoraAdapter {
    std::size_t layer = 0;
    ProjTag tag = ProjTag::Query;
    Parameter A;  // d x r
    Parameter B;  // r x d
    double alpha = 32.0;
    std::size_t rank = 16;

    double scaling() const { return alpha_over_r ? alpha / static_cast<double>(rank) : alpha; }

    /// Scaling convention switch; default follows the conventional
    /// alpha/r scaling (alpha=32, r=16 -> multiplier 2).
    bool alpha_over_r = true;
};

/// Per-domain collection of adapters over query/value projections of
/// every encoder layer.
struct LoraSet {
    std::string domain_id;
    std::vector<LoraAdapter> adapters;
    bool frozen = false;

    LoraAdapter* find(std::size_t layer, ProjTag tag);
    const LoraAdapter* find(std::size_t layer, ProjTag tag) const;
    void set_frozen(bool f);
    std::vector<Parameter*> params();
    std::uint64_t weights_hash() const;
};

/// (W + (alpha/r) A B) x, column-vector convention.
Tensor lora_apply(const Tensor& w, const LoraAdapter& adapter, const Tensor& x);

/// A ~ N(0, 0.02^2), B = 0, deterministic per seed.
LoraAdapter init_lora(std::size_t d, std::size_t r, double alpha, std::uint64_t seed);

/// A full query+value adapter set for an L-layer, width-d encoder.
LoraSet init_lora_set(const std::string& domain_id, std::size_t layers, std::size_t d,
                      std::size_t r, double alpha, std::uint64_t seed);

/// Trainable parameter count: sum over adapters of 2 r d.
std::size_t trainable_lora_params(const LoraSet& set);

}  // namespace xc
