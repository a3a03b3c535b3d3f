#include "xc/training.hpp"

#include <algorithm>
#include <cmath>

namespace xc {

double multiple_choice_loss(const std::vector<double>& scores, std::size_t positive_index) {
    if (positive_index >= scores.size())
        throw std::invalid_argument("multiple_choice_loss: index out of range");
    double mx = scores[0];
    for (double s : scores) mx = std::max(mx, s);
    double lse = 0.0;
    for (double s : scores) lse += std::exp(s - mx);
    return std::log(lse) - (scores[positive_index] - mx);
}

std::vector<double> multiple_choice_loss_grad(const std::vector<double>& scores,
                                              std::size_t positive_index) {
    if (positive_index >= scores.size())
        throw std::invalid_argument("multiple_choice_loss_grad: index out of range");
    double mx = scores[0];
    for (double s : scores) mx = std::max(mx, s);
    double lse = 0.0;
    std::vector<double> g(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        g[i] = std::exp(scores[i] - mx);
        lse += g[i];
    }
    for (std::size_t i = 0; i < scores.size(); ++i) g[i] /= lse;
    g[positive_index] -= 1.0;
    return g;
}

Var SingleDomainModel::forward_score(Tape& tape, const std::vector<TokenId>& prompt) {
    Var x = base->embed(tape, prompt);
    for (std::size_t l = 1; l <= base->cfg.L; ++l) x = base->block(tape, x, l, adapters);
    return head->forward(tape, x);
}

double SingleDomainModel::score_prompt(const std::vector<TokenId>& prompt) {
    Tape tape;
    return forward_score(tape, prompt).value()[0];
}

std::vector<TrainItem> to_items(const std::vector<MultipleChoiceInstance>& instances,
                                const Catalog& catalog) {
    std::vector<TrainItem> items;
    items.reserve(instances.size());
    for (const auto& i : instances) items.push_back({i, &catalog});
    return items;
}

Trainer::Trainer(std::vector<Parameter*> params, TrainingConfig cfg)
    : params_(std::move(params)), cfg_(cfg), rng_(cfg.seed) {
    states_.reserve(params_.size());
    for (const auto* p : params_) states_.emplace_back(p->value.shape);
}

double Trainer::train_instance(const ScoreBuilder& model, const TrainItem& item) {
    const auto& inst = item.inst;
    std::vector<std::uint32_t> candidates;
    candidates.push_back(inst.positive);
    for (auto id : inst.negatives) candidates.push_back(id);

    std::vector<std::vector<TokenId>> prompts;
    prompts.reserve(candidates.size());
    for (auto id : candidates) {
        auto p = build_prompt(inst.history, id, *item.catalog, cfg_.truncate, cfg_.max_len);
        if (!p) {
            ++skipped_;
            return -1.0;  // instance rejected (prompt overflow)
        }
        prompts.push_back(std::move(*p));
    }

    std::deque<Tape> tapes;
    std::vector<Var> score_vars;
    std::vector<double> scores;
    for (const auto& p : prompts) {
        tapes.emplace_back();
        Var s = model(tapes.back(), p);
        score_vars.push_back(s);
        scores.push_back(s.value()[0]);
    }

    const double loss = multiple_choice_loss(scores, 0);
    const std::vector<double> seeds = multiple_choice_loss_grad(scores, 0);

    for (auto* p : params_) p->zero_grad();
    for (std::size_t i = 0; i < tapes.size(); ++i) tapes[i].backward(score_vars[i], seeds[i]);

    if (cfg_.grad_clip > 0.0) {
        double sq = 0.0;
        for (const auto* p : params_)
            for (double g : p->grad.data) sq += g * g;
        const double norm = std::sqrt(sq);
        if (norm > cfg_.grad_clip) {
            const double s = cfg_.grad_clip / norm;
            for (auto* p : params_)
                for (double& g : p->grad.data) g *= s;
        }
    }

    for (std::size_t i = 0; i < params_.size(); ++i)
        adamw_step(*params_[i], states_[i], cfg_.lr, cfg_.weight_decay);
    return loss;
}

double Trainer::run_epoch(const ScoreBuilder& model, const std::vector<TrainItem>& items) {
    std::vector<std::size_t> order(items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng_.uniform_index(i)]);

    double total = 0.0;
    std::size_t counted = 0;
    for (std::size_t i : order) {
        const double loss = train_instance(model, items[i]);
        if (loss >= 0.0) {
            total += loss;
            ++counted;
        }
    }
    ++epoch;
    return counted ? total / static_cast<double>(counted) : 0.0;
}

namespace {

/// Shared epoch loop with validation-based early stopping; restores the
/// best snapshot when stopping early.
PhaseResult run_phase(Trainer& trainer, const ScoreBuilder& model, PromptScorer& val_scorer,
                      const std::vector<TrainItem>& train_items,
                      const std::vector<TrainItem>& valid_items, const TrainingConfig& cfg) {
    PhaseResult res;
    double best_hit1 = -1.0;
    std::size_t since_best = 0;
    std::vector<Tensor> best_values;

    EvalOptions eopts;
    eopts.truncate = cfg.truncate;
    eopts.max_len = cfg.max_len;
    eopts.max_instances = cfg.val_max_instances;

    std::size_t n_val = valid_items.size();
    if (eopts.max_instances > 0) n_val = std::min(n_val, eopts.max_instances);

    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        res.epoch_losses.push_back(trainer.run_epoch(model, train_items));
        if (n_val > 0) {
            double hit1 = 0.0;
            for (std::size_t i = 0; i < n_val; ++i) {
                const std::size_t rank =
                    rank_candidates(val_scorer, valid_items[i].inst, *valid_items[i].catalog,
                                    eopts);
                hit1 += hit_at_k(rank, 1);
            }
            hit1 *= 100.0 / static_cast<double>(n_val);
            res.val_hit1.push_back(hit1);
            if (hit1 > best_hit1) {
                best_hit1 = hit1;
                res.best_epoch = e;
                since_best = 0;
                if (cfg.early_stop) {
                    best_values.clear();
                    for (const auto* p : trainer.params()) best_values.push_back(p->value);
                }
            } else if (cfg.early_stop && ++since_best >= cfg.patience) {
                break;
            }
        }
    }
    if (!best_values.empty())
        for (std::size_t i = 0; i < trainer.params().size(); ++i)
            trainer.params()[i]->value = best_values[i];
    return res;
}

}  // namespace

PhaseResult pretrain_base(TransformerEncoder& encoder, PoolerScorer& tmp_head,
                          const std::vector<TrainItem>& train_items,
                          const std::vector<TrainItem>& valid_items, const TrainingConfig& cfg) {
    if (train_items.empty()) throw std::invalid_argument("pretrain_base: empty training data");
    std::vector<Parameter*> params = encoder.params();
    for (auto* p : tmp_head.params()) params.push_back(p);
    Trainer trainer(params, cfg);

    SingleDomainModel m;
    m.base = &encoder;
    m.head = &tmp_head;
    ScoreBuilder builder = [&m](Tape& t, const std::vector<TokenId>& p) {
        return m.forward_score(t, p);
    };
    PhaseResult res = run_phase(trainer, builder, m, train_items, valid_items, cfg);
    encoder.freeze();
    return res;
}

LoraTrainOutput train_lora_source(TransformerEncoder& encoder, const DomainData& data,
                                  const TrainingConfig& cfg, std::uint64_t init_seed) {
    if (!encoder.frozen())
        throw std::logic_error("train_lora_source: base encoder must be frozen first");
    LoraTrainOutput out;
    out.set = init_lora_set("domain" + std::to_string(data.catalog.domain), encoder.cfg.L,
                            encoder.cfg.d, cfg.lora_rank, cfg.lora_alpha, init_seed);
    RandomSource head_rng(init_seed ^ 0xabcdef12345ULL);
    out.head.init(encoder.cfg.d, head_rng);

    std::vector<Parameter*> params = out.set.params();
    for (auto* p : out.head.params()) params.push_back(p);
    Trainer trainer(params, cfg);

    SingleDomainModel m;
    m.base = &encoder;
    m.adapters = &out.set;
    m.head = &out.head;
    ScoreBuilder builder = [&m](Tape& t, const std::vector<TokenId>& p) {
        return m.forward_score(t, p);
    };

    auto train = to_items(filter_split(data.instances, Split::Train), data.catalog);
    auto valid = to_items(filter_split(data.instances, Split::Valid), data.catalog);
    out.result = run_phase(trainer, builder, m, train, valid, cfg);
    out.set.set_frozen(true);
    return out;
}

PhaseResult train_xcross(XCrossModel& model, const DomainData& data, const TrainingConfig& cfg,
                         Trainer* external_trainer) {
    for (const auto* s : model.sources)
        if (!s->frozen)
            throw std::logic_error("train_xcross: source adapter set '" + s->domain_id +
                                   "' must be frozen");
    if (!model.base->frozen()) throw std::logic_error("train_xcross: base encoder must be frozen");

    Trainer local(model.trainable_params(), cfg);
    Trainer& trainer = external_trainer ? *external_trainer : local;

    ScoreBuilder builder = [&model](Tape& t, const std::vector<TokenId>& p) {
        return model.forward_score(t, p);
    };
    XCrossScorer scorer(model);
    auto train = to_items(filter_split(data.instances, Split::Train), data.catalog);
    auto valid = to_items(filter_split(data.instances, Split::Valid), data.catalog);
    return run_phase(trainer, builder, scorer, train, valid, cfg);
}

}  // namespace xc
