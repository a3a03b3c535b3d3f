#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <vector>

#include "xc/evalharness.hpp"
#include "xc/recdata.hpp"
#include "xc/xcross.hpp"

namespace xc {

struct TrainingConfig {
    double lr = 5e-5;
    double weight_decay = 0.01;
    std::size_t epochs = 40;
    std::size_t negatives = 29;
    std::uint64_t seed = 0;
    double grad_clip = 0.0;  // 0 = off
    bool early_stop = true;
    std::size_t patience = 5;
    std::size_t val_max_instances = 200;
    std::size_t truncate = 8;
    std::size_t max_len = 256;
    // LoRA fine-tuning hyperparameters
    std::size_t lora_rank = 16;
    double lora_alpha = 32.0;
};

/// Eq. 1: -log softmax(scores)[positive_index], max-subtraction stable.
double multiple_choice_loss(const std::vector<double>& scores, std::size_t positive_index);

/// d(loss)/d(scores) = softmax(scores) - onehot(positive_index).
std::vector<double> multiple_choice_loss_grad(const std::vector<double>& scores,
                                              std::size_t positive_index);

/// Frozen-or-trainable encoder + optional adapter set + scoring head.
class SingleDomainModel : public PromptScorer {
public:
    TransformerEncoder* base = nullptr;
    LoraSet* adapters = nullptr;  // may be null (plain encoder)
    PoolerScorer* head = nullptr;

    Var forward_score(Tape& tape, const std::vector<TokenId>& prompt);
    double score_prompt(const std::vector<TokenId>& prompt) override;
};

class XCrossScorer : public PromptScorer {
public:
    explicit XCrossScorer(XCrossModel& m) : model_(&m) {}
    double score_prompt(const std::vector<TokenId>& prompt) override {
        Tape tape;
        return model_->forward_score(tape, prompt).value()[0];
    }

private:
    XCrossModel* model_;
};

using ScoreBuilder = std::function<Var(Tape&, const std::vector<TokenId>&)>;

struct TrainItem {
    MultipleChoiceInstance inst;  // owned copy so temporaries are safe to pass
    const Catalog* catalog;
};

std::vector<TrainItem> to_items(const std::vector<MultipleChoiceInstance>& instances,
                                const Catalog& catalog);

/// One optimizer step per multiple-choice instance (batch size 1: the
/// instance's 30 prompts are scored jointly).
class Trainer {
public:
    Trainer(std::vector<Parameter*> params, TrainingConfig cfg);

    double train_instance(const ScoreBuilder& model, const TrainItem& item);
    double run_epoch(const ScoreBuilder& model, const std::vector<TrainItem>& items);

    std::size_t skipped_prompts() const { return skipped_; }
    std::vector<Parameter*>& params() { return params_; }
    std::vector<AdamWState>& opt_states() { return states_; }
    RandomSource& rng() { return rng_; }
    std::size_t epoch = 0;

private:
    std::vector<Parameter*> params_;
    std::vector<AdamWState> states_;
    TrainingConfig cfg_;
    RandomSource rng_;
    std::size_t skipped_ = 0;
};

struct PhaseResult {
    std::vector<double> epoch_losses;
    std::vector<double> val_hit1;
    std::size_t best_epoch = 0;
};

/// Base pretraining on pooled source data; encoder (weights and
/// embeddings) is frozen afterwards, tmp_head is the caller's to discard.
PhaseResult pretrain_base(TransformerEncoder& encoder, PoolerScorer& tmp_head,
                          const std::vector<TrainItem>& train_items,
                          const std::vector<TrainItem>& valid_items, const TrainingConfig& cfg);

struct LoraTrainOutput {
    LoraSet set;  // frozen on return
    PoolerScorer head;
    PhaseResult result;
};

LoraTrainOutput train_lora_source(TransformerEncoder& encoder, const DomainData& data,
                                  const TrainingConfig& cfg, std::uint64_t init_seed);

/// Trains exactly {W_concat per integrated layer, mixer, head}; all
/// sources and the base must already be frozen.
PhaseResult train_xcross(XCrossModel& model, const DomainData& data, const TrainingConfig& cfg,
                         Trainer* external_trainer = nullptr);

}  // namespace xc
