#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xc/recdata.hpp"

namespace xc {

/// Hit@k in percent, MRR@10 in [0,1].
struct EvalReport {
    double hit1 = 0.0;
    double hit3 = 0.0;
    double hit10 = 0.0;
    double mrr10 = 0.0;
    std::size_t count = 0;
    std::string model_tag;
    std::uint64_t seed = 0;

    bool operator==(const EvalReport&) const = default;
};

/// Read-only candidate scoring interface.
class PromptScorer {
public:
    virtual ~PromptScorer() = default;
    virtual double score_prompt(const std::vector<TokenId>& prompt) = 0;
};

/// Seeded random scores; the chance baseline.
class RandomScorer : public PromptScorer {
public:
    explicit RandomScorer(std::uint64_t seed) : rng_(seed) {}
    double score_prompt(const std::vector<TokenId>&) override { return rng_.uniform(); }

private:
    RandomSource rng_;
};

struct EvalOptions {
    std::size_t truncate = 8;
    std::size_t max_len = 256;
    std::size_t max_instances = 0;  // 0 = all
};

/// 1-based rank of the positive among positive + negatives; ties count
/// against the positive.
std::size_t rank_candidates(PromptScorer& model, const MultipleChoiceInstance& inst,
                            const Catalog& catalog, const EvalOptions& opts = {});

/// Pessimistic rank from raw scores: 1 + #(negatives with score >= positive).
std::size_t rank_from_scores(double positive_score, const std::vector<double>& negative_scores);

int hit_at_k(std::size_t rank, std::size_t k);
double mrr_at_10(std::size_t rank);

EvalReport evaluate(PromptScorer& model, const std::vector<MultipleChoiceInstance>& instances,
                    const Catalog& catalog, const std::string& model_tag = "",
                    const EvalOptions& opts = {});

/// Every (source scorer, target test set) pair.
std::vector<std::vector<EvalReport>> zero_shot_matrix(
    const std::vector<PromptScorer*>& sources,
    const std::vector<std::pair<const std::vector<MultipleChoiceInstance>*, const Catalog*>>&
        targets,
    const EvalOptions& opts = {});

/// Source indices sorted by Hit@1 desc, ties by MRR desc then index asc.
std::vector<std::size_t> select_top_sources(const std::vector<EvalReport>& per_source,
                                            std::size_t n);

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    bool degenerate = false;  // zero variance of differences
};

/// Two-tailed paired Student's t-test.
TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace xc
