#pragma once

#include <string>
#include <vector>

#include "xc/training.hpp"

namespace xc {

/// What a checkpoint carries. Pointers reference caller-owned objects;
/// load fills objects that were constructed with the matching configs.
struct CheckpointState {
    TransformerEncoder* encoder = nullptr;          // required
    std::vector<LoraSet*> lora_sets;                // optional
    XCrossModel* xcross = nullptr;                  // optional
    PoolerScorer* head = nullptr;                   // optional standalone head
    Trainer* trainer = nullptr;                     // optional optimizer/RNG/epoch state
    std::uint64_t seed = 0;
};

/// Deterministic JSON container; frozen components carry hashes that are
/// verified on load.
void save_checkpoint(const std::string& path, const CheckpointState& state);
void load_checkpoint(const std::string& path, CheckpointState& state);

}  // namespace xc
