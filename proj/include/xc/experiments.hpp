#pragma once

#include <string>
#include <vector>

#include "xc/checkpoint.hpp"
#include "xc/training.hpp"

namespace xc {

enum class AblationVariant { Full, NoLayers, NoInteractions, NoExperts };

AblationVariant ablation_from_name(const std::string& name);
const char* ablation_name(AblationVariant v);

/// beta/gamma for a variant given the full model's values.
std::pair<double, double> ablation_coeffs(AblationVariant v, double beta, double gamma);

struct AblationOutcome {
    EvalReport report;
    PhaseResult training;
};

/// Trains and evaluates one variant under identical seeds/config; only
/// beta/gamma differ from the full run. When warm_head is given the model
/// starts transparent to source warm_source (see XCrossModel::warm_start).
AblationOutcome ablate(AblationVariant variant, TransformerEncoder& encoder,
                       std::vector<LoraSet*> sources, const DomainData& target,
                       const TrainingConfig& tcfg, const XCrossConfig& xcfg,
                       const PoolerScorer* warm_head = nullptr, std::size_t warm_source = 0);

struct SweepRun {
    std::size_t size = 0;
    std::size_t subset = 0;
    EvalReport xcross;
    EvalReport lora;
};

struct SweepResult {
    std::vector<std::size_t> sizes;
    std::size_t subsets_per_size = 5;
    double reference_hit1 = 0.0;
    std::vector<SweepRun> runs;
    std::size_t xcross_crossing = 0;  // smallest size whose mean Hit@1 > reference; 0 = never
    std::size_t lora_crossing = 0;
};

/// Smallest size whose mean exceeds the reference, 0 if none does.
std::size_t crossing_size(const std::vector<std::size_t>& sizes,
                          const std::vector<double>& means, double reference);

/// Paper-style data-efficiency protocol: per (size, subset) train a fresh
/// X-Cross and a fresh target LoRA, evaluate both on the test split
/// (capped at tcfg.val_max_instances when nonzero; the reference should be
/// computed under the same cap).
SweepResult data_efficiency_sweep(TransformerEncoder& encoder, std::vector<LoraSet*> sources,
                                  const DomainData& target, double reference_hit1,
                                  const std::vector<std::size_t>& sizes, std::size_t subsets,
                                  const TrainingConfig& tcfg, const XCrossConfig& xcfg);

struct LayerSweepRun {
    std::size_t count = 0;
    EvalReport report;
};

std::vector<LayerSweepRun> layer_count_sweep(TransformerEncoder& encoder,
                                             std::vector<LoraSet*> sources,
                                             const DomainData& target,
                                             const std::vector<std::size_t>& counts,
                                             const TrainingConfig& tcfg,
                                             const XCrossConfig& xcfg);

std::string report_table(const std::vector<EvalReport>& reports);
std::string sweep_csv(const SweepResult& sweep);

}  // namespace xc
