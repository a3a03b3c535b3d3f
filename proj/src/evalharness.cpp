#include "xc/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace xc {

std::size_t rank_from_scores(double positive_score, const std::vector<double>& negative_scores) {
    std::size_t rank = 1;
    for (double s : negative_scores)
        if (s >= positive_score) ++rank;
    return rank;
}

std::size_t rank_candidates(PromptScorer& model, const MultipleChoiceInstance& inst,
                            const Catalog& catalog, const EvalOptions& opts) {
    auto pos_prompt = build_prompt(inst.history, inst.positive, catalog, opts.truncate,
                                   opts.max_len);
    if (!pos_prompt) throw std::runtime_error("rank_candidates: prompt exceeds max_len");
    const double pos = model.score_prompt(*pos_prompt);
    std::vector<double> negs;
    negs.reserve(inst.negatives.size());
    for (auto id : inst.negatives) {
        auto p = build_prompt(inst.history, id, catalog, opts.truncate, opts.max_len);
        if (!p) throw std::runtime_error("rank_candidates: prompt exceeds max_len");
        negs.push_back(model.score_prompt(*p));
    }
    return rank_from_scores(pos, negs);
}

int hit_at_k(std::size_t rank, std::size_t k) { return rank <= k ? 1 : 0; }

double mrr_at_10(std::size_t rank) { return rank <= 10 ? 1.0 / static_cast<double>(rank) : 0.0; }

EvalReport evaluate(PromptScorer& model, const std::vector<MultipleChoiceInstance>& instances,
                    const Catalog& catalog, const std::string& model_tag,
                    const EvalOptions& opts) {
    if (instances.empty()) throw std::invalid_argument("evaluate: empty dataset");
    EvalReport r;
    r.model_tag = model_tag;
    std::size_t n = instances.size();
    if (opts.max_instances > 0) n = std::min(n, opts.max_instances);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t rank = rank_candidates(model, instances[i], catalog, opts);
        r.hit1 += hit_at_k(rank, 1);
        r.hit3 += hit_at_k(rank, 3);
        r.hit10 += hit_at_k(rank, 10);
        r.mrr10 += mrr_at_10(rank);
    }
    r.count = n;
    const double inv = 1.0 / static_cast<double>(n);
    r.hit1 *= 100.0 * inv;
    r.hit3 *= 100.0 * inv;
    r.hit10 *= 100.0 * inv;
    r.mrr10 *= inv;
    return r;
}

std::vector<std::vector<EvalReport>> zero_shot_matrix(
    const std::vector<PromptScorer*>& sources,
    const std::vector<std::pair<const std::vector<MultipleChoiceInstance>*, const Catalog*>>&
        targets,
    const EvalOptions& opts) {
    std::vector<std::vector<EvalReport>> matrix;
    for (std::size_t s = 0; s < sources.size(); ++s) {
        std::vector<EvalReport> row;
        for (std::size_t t = 0; t < targets.size(); ++t) {
            EvalReport r = evaluate(*sources[s], *targets[t].first, *targets[t].second,
                                    "src" + std::to_string(s) + "->tgt" + std::to_string(t), opts);
            row.push_back(std::move(r));
        }
        matrix.push_back(std::move(row));
    }
    return matrix;
}

std::vector<std::size_t> select_top_sources(const std::vector<EvalReport>& per_source,
                                            std::size_t n) {
    if (per_source.size() < n)
        throw std::invalid_argument("select_top_sources: fewer than n sources");
    std::vector<std::size_t> order(per_source.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (per_source[a].hit1 != per_source[b].hit1) return per_source[a].hit1 > per_source[b].hit1;
        if (per_source[a].mrr10 != per_source[b].mrr10)
            return per_source[a].mrr10 > per_source[b].mrr10;
        return a < b;
    });
    order.resize(n);
    return order;
}

namespace {

// Regularized incomplete beta via Lentz's continued fraction.
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 200;
    constexpr double kEps = 3e-14;
    constexpr double kFpMin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

double betai(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                               a * std::log(x) + b * std::log(1.0 - x));
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("paired_t_test: need equal lengths >= 2");
    const std::size_t n = a.size();
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i] - mean;
        var += d * d;
    }
    var /= static_cast<double>(n - 1);
    TTestResult r;
    if (var == 0.0) {
        r.degenerate = true;
        r.p = mean == 0.0 ? 1.0 : 0.0;
        return r;
    }
    const double df = static_cast<double>(n - 1);
    r.t = mean / std::sqrt(var / static_cast<double>(n));
    r.p = betai(df / 2.0, 0.5, df / (df + r.t * r.t));
    return r;
}

}  // namespace xc
