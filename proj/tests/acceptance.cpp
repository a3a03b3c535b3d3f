// Acceptance suite: one pass/fail line per criterion. --fast runs the
// sub-minute criteria only; --only N runs a single criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "xc/checkpoint.hpp"
#include "xc/experiments.hpp"
#include "xc/training.hpp"

using namespace xc;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double now_s() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

// ---------------------------------------------------------------- criterion 1

Outcome criterion1() {
    XCrossConfig c;
    c.n = 2;
    c.d = 768;
    c.integrated_layers = {1};
    ParamBreakdown b = trainable_param_count(c);
    const std::size_t lora_per_layer = 2 * 16 * 768;  // one adapted matrix, 2rd
    const bool ok = b.per_layer_integrator == 6144 && lora_per_layer == 24576 &&
                    4 * b.per_layer_integrator == lora_per_layer;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "integrator/layer=%zu lora/layer=%zu ratio=%.2f",
                  b.per_layer_integrator, lora_per_layer,
                  double(b.per_layer_integrator) / double(lora_per_layer));
    return {ok, buf};
}

// ---------------------------------------------------------------- criterion 2

struct GradCheckSetup {
    EncoderConfig ec;
    std::vector<std::vector<TokenId>> prompts;  // 1 positive + negatives
};

GradCheckSetup tiny_setup() {
    GradCheckSetup s;
    s.ec.L = 2;
    s.ec.d = 8;
    s.ec.H = 2;
    s.ec.d_ff = 16;
    s.ec.V = 20;
    s.ec.max_len = 12;
    s.prompts = {
        {0, 5, 9, 13, 2, 7, 11, 3},
        {0, 5, 9, 13, 2, 7, 11, 4},
        {0, 5, 9, 13, 2, 7, 11, 19},
        {0, 5, 9, 13, 2, 7, 11, 8, 6, 1},
    };
    return s;
}

// Loss of one multiple-choice instance under the given score builder.
double eval_loss(const ScoreBuilder& builder, const std::vector<std::vector<TokenId>>& prompts) {
    std::vector<double> scores;
    for (const auto& p : prompts) {
        Tape tape;
        scores.push_back(builder(tape, p).value()[0]);
    }
    return multiple_choice_loss(scores, 0);
}

// Analytic gradients of the same loss, accumulated into Parameter::grad.
void analytic_grads(const ScoreBuilder& builder, const std::vector<std::vector<TokenId>>& prompts,
                    const std::vector<Parameter*>& params) {
    for (auto* p : params) p->zero_grad();
    std::deque<Tape> tapes;
    std::vector<Var> vars;
    std::vector<double> scores;
    for (const auto& p : prompts) {
        tapes.emplace_back();
        vars.push_back(builder(tapes.back(), p));
        scores.push_back(vars.back().value()[0]);
    }
    auto seeds = multiple_choice_loss_grad(scores, 0);
    for (std::size_t i = 0; i < tapes.size(); ++i) tapes[i].backward(vars[i], seeds[i]);
}

double max_rel_error(const ScoreBuilder& builder, const std::vector<std::vector<TokenId>>& prompts,
                     const std::vector<Parameter*>& params) {
    analytic_grads(builder, prompts, params);
    double worst = 0.0;
    for (auto* p : params) {
        for (std::size_t i = 0; i < p->value.numel(); ++i) {
            const double saved = p->value.data[i];
            p->value.data[i] = saved + 1e-5;
            const double up = eval_loss(builder, prompts);
            p->value.data[i] = saved - 1e-5;
            const double dn = eval_loss(builder, prompts);
            p->value.data[i] = saved;
            const double fd = (up - dn) / 2e-5;
            const double a = p->grad.data[i];
            const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-4});
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

Outcome criterion2() {
    auto s = tiny_setup();
    double worst = 0.0;

    // phase: base pretraining (encoder + head trainable)
    {
        TransformerEncoder enc;
        RandomSource rng(71);
        enc.init(s.ec, rng);
        PoolerScorer head;
        head.init(s.ec.d, rng);
        SingleDomainModel m;
        m.base = &enc;
        m.head = &head;
        ScoreBuilder b = [&m](Tape& t, const std::vector<TokenId>& p) {
            return m.forward_score(t, p);
        };
        std::vector<Parameter*> params = enc.params();
        for (auto* p : head.params()) params.push_back(p);
        worst = std::max(worst, max_rel_error(b, s.prompts, params));
    }

    // phase: LoRA fine-tuning (adapters + head trainable, base frozen)
    {
        TransformerEncoder enc;
        RandomSource rng(72);
        enc.init(s.ec, rng);
        enc.freeze();
        LoraSet set = init_lora_set("d0", s.ec.L, s.ec.d, 2, 4.0, 5);
        RandomSource pr(73);
        for (auto& a : set.adapters)  // move B off zero so its grad path is exercised
            for (auto& v : a.B.value.data) v = pr.normal() * 0.05;
        PoolerScorer head;
        head.init(s.ec.d, rng);
        SingleDomainModel m;
        m.base = &enc;
        m.adapters = &set;
        m.head = &head;
        ScoreBuilder b = [&m](Tape& t, const std::vector<TokenId>& p) {
            return m.forward_score(t, p);
        };
        std::vector<Parameter*> params = set.params();
        for (auto* p : head.params()) params.push_back(p);
        worst = std::max(worst, max_rel_error(b, s.prompts, params));
    }

    // phase: X-Cross target training (integrators + mixer + head trainable)
    {
        TransformerEncoder enc;
        RandomSource rng(74);
        enc.init(s.ec, rng);
        enc.freeze();
        LoraSet s0 = init_lora_set("d0", s.ec.L, s.ec.d, 2, 4.0, 7);
        LoraSet s1 = init_lora_set("d1", s.ec.L, s.ec.d, 2, 4.0, 8);
        RandomSource pr(75);
        for (auto* set : {&s0, &s1})
            for (auto& a : set->adapters)
                for (auto& v : a.B.value.data) v = pr.normal() * 0.05;
        s0.set_frozen(true);
        s1.set_frozen(true);
        XCrossConfig xc;
        xc.n = 2;
        xc.d = s.ec.d;
        xc.integrated_layers = {1, 2};
        XCrossModel model;
        model.init(xc, &enc, {&s0, &s1}, rng);
        for (auto& il : model.integrators)  // off-zero so refinement terms are live
            for (auto& v : il.W_concat.value.data) v = pr.normal() * 0.05;
        ScoreBuilder b = [&model](Tape& t, const std::vector<TokenId>& p) {
            return model.forward_score(t, p);
        };
        worst = std::max(worst, max_rel_error(b, s.prompts, model.trainable_params()));
    }

    char buf[96];
    std::snprintf(buf, sizeof(buf), "max rel err %.3e (tol 1e-5)", worst);
    return {worst < 1e-5, buf};
}

// ---------------------------------------------------------------- criterion 3

Outcome criterion3() {
    EncoderConfig ec;
    ec.L = 3;
    ec.d = 16;
    ec.H = 4;
    ec.d_ff = 32;
    ec.V = 40;
    ec.max_len = 32;
    TransformerEncoder enc;
    RandomSource rng(81);
    enc.init(ec, rng);
    enc.freeze();
    LoraSet s0 = init_lora_set("d0", ec.L, ec.d, 2, 4.0, 1);
    LoraSet s1 = init_lora_set("d1", ec.L, ec.d, 2, 4.0, 2);
    RandomSource pr(82);
    for (auto* set : {&s0, &s1})
        for (auto& a : set->adapters)
            for (auto& v : a.B.value.data) v = pr.normal() * 0.1;
    s0.set_frozen(true);
    s1.set_frozen(true);
    XCrossConfig xc;
    xc.n = 2;
    xc.d = ec.d;
    xc.integrated_layers = {2, 3};
    XCrossModel model;
    model.init(xc, &enc, {&s0, &s1}, rng);

    double worst = 0.0;
    RandomSource tok(83);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t pick = trial % 2;
        model.mixer.w.value[0] = pick == 0 ? 1.0 : 0.0;
        model.mixer.w.value[1] = pick == 1 ? 1.0 : 0.0;
        std::vector<TokenId> toks = {0};
        const std::size_t len = 4 + tok.uniform_index(12);
        for (std::size_t i = 0; i < len; ++i)
            toks.push_back(TokenId(1 + tok.uniform_index(ec.V - 1)));
        Tensor h = model.xcross_forward(toks);
        auto ref = enc.encode(toks, pick == 0 ? &s0 : &s1);
        for (std::size_t i = 0; i < h.numel(); ++i)
            worst = std::max(worst, std::abs(h.data[i] - ref.h.back().data[i]));
    }
    char buf[96];
    std::snprintf(buf, sizeof(buf), "max |diff| %.3e over 100 prompts (tol 1e-12)", worst);
    return {worst < 1e-12, buf};
}

// ---------------------------------------------------------------- criterion 4

Outcome criterion4() {
    std::vector<double> equal(30, 0.4);
    const double loss = multiple_choice_loss(equal, 3);
    auto g = multiple_choice_loss_grad(equal, 3);
    double sum = 0.0;
    for (double v : g) sum += v;
    const bool ok = std::abs(loss - 3.401197) < 1e-6 && std::abs(sum) < 1e-12;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "loss %.6f (ln 30), grad sum %.2e", loss, sum);
    return {ok, buf};
}

// ------------------------------------------------- shared pipeline machinery

struct Pipeline {
    Dataset data;
    TransformerEncoder encoder;
    std::vector<LoraTrainOutput> sources;  // one per source domain
    std::size_t target = 0;
    double best_zero_shot_hit1 = 0.0;      // on target test split
    std::size_t best_source = 0;
    EvalReport xcross_report;
    XCrossConfig xcfg;
};

struct PipelineSizes {
    std::size_t users = 850;
    std::size_t pretrain_cap = 300;    // pooled instances per epoch phase cap
    std::size_t lora_cap = 300;
    std::size_t target_train = 500;
    std::size_t pretrain_epochs = 2;
    std::size_t lora_epochs = 3;
    std::size_t xcross_epochs = 4;
    EncoderConfig enc;                  // V filled from the generator config
    std::size_t title_tokens = 4;
    std::size_t integrate_top = 3;
};

TrainingConfig accept_tcfg(std::uint64_t seed) {
    // Desk-scale optimizer settings: the defaults (lr 5e-5, 40 epochs)
    // are sized for the paper's setting; at this scale a larger constant
    // rate converges inside the acceptance budget.
    TrainingConfig t;
    t.lr = 2e-3;
    t.seed = seed;
    t.early_stop = false;
    t.val_max_instances = 60;
    return t;
}

std::vector<MultipleChoiceInstance> cap(std::vector<MultipleChoiceInstance> v, std::size_t n,
                                        std::uint64_t seed) {
    RandomSource rng(seed);
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.uniform_index(i)]);
    if (v.size() > n) v.resize(n);
    return v;
}

Pipeline run_pipeline(std::uint64_t seed, const PipelineSizes& sz) {
    Pipeline pl;
    GeneratorConfig g;
    g.domains = 3;
    g.users_per_domain = sz.users;
    g.title_tokens = sz.title_tokens;
    g.seed = seed;
    pl.data = generate_domains(g);
    pl.target = 2;

    EncoderConfig ec = sz.enc;
    ec.V = g.vocab_size();
    RandomSource rng(seed * 31 + 7);
    pl.encoder.init(ec, rng);

    // phase 1: base pretraining on pooled source data
    {
        std::vector<MultipleChoiceInstance> pooled_train, pooled_valid;
        for (std::size_t m = 0; m < 2; ++m) {
            auto t = filter_split(pl.data.domains[m].instances, Split::Train);
            pooled_train.insert(pooled_train.end(), t.begin(), t.end());
        }
        pooled_train = cap(std::move(pooled_train), sz.pretrain_cap, seed ^ 0x11);
        // same catalog layout across domains, so one catalog serves prompts
        auto train_items = to_items(pooled_train, pl.data.domains[0].catalog);
        auto valid_items =
            to_items(cap(filter_split(pl.data.domains[0].instances, Split::Valid), 60, seed ^ 0x12),
                     pl.data.domains[0].catalog);
        PoolerScorer tmp;
        tmp.init(ec.d, rng);
        auto cfg = accept_tcfg(seed);
        cfg.epochs = sz.pretrain_epochs;
        pretrain_base(pl.encoder, tmp, train_items, valid_items, cfg);
    }

    // phase 2: per-source LoRA
    for (std::size_t m = 0; m < 2; ++m) {
        DomainData capped;
        capped.catalog = pl.data.domains[m].catalog;
        capped.instances = cap(filter_split(pl.data.domains[m].instances, Split::Train),
                               sz.lora_cap, seed ^ (0x21 + m));
        auto valid = cap(filter_split(pl.data.domains[m].instances, Split::Valid), 60,
                         seed ^ (0x31 + m));
        capped.instances.insert(capped.instances.end(), valid.begin(), valid.end());
        auto cfg = accept_tcfg(seed);
        cfg.epochs = sz.lora_epochs;
        pl.sources.push_back(train_lora_source(pl.encoder, capped, cfg, seed * 101 + m));
    }

    // zero-shot reference on the target test split
    auto& target = pl.data.domains[pl.target];
    auto test = filter_split(target.instances, Split::Test);
    for (std::size_t m = 0; m < 2; ++m) {
        SingleDomainModel sm;
        sm.base = &pl.encoder;
        sm.adapters = &pl.sources[m].set;
        sm.head = &pl.sources[m].head;
        auto r = evaluate(sm, test, target.catalog, "zero-shot-src" + std::to_string(m));
        if (r.hit1 > pl.best_zero_shot_hit1) {
            pl.best_zero_shot_hit1 = r.hit1;
            pl.best_source = m;
        }
    }

    // phase 3: X-Cross on the target
    pl.xcfg.n = 2;
    pl.xcfg.d = sz.enc.d;
    pl.xcfg.integrated_layers = XCrossConfig::top_layers(sz.enc.L, sz.integrate_top);
    XCrossModel model;
    RandomSource mrng(seed * 77 + 3);
    model.init(pl.xcfg, &pl.encoder, {&pl.sources[0].set, &pl.sources[1].set}, mrng);
    DomainData tdata;
    tdata.catalog = target.catalog;
    tdata.instances =
        cap(filter_split(target.instances, Split::Train), sz.target_train, seed ^ 0x41);
    auto valid = filter_split(target.instances, Split::Valid);
    tdata.instances.insert(tdata.instances.end(), valid.begin(), valid.end());
    auto cfg = accept_tcfg(seed);
    cfg.epochs = sz.xcross_epochs;
    cfg.early_stop = true;
    cfg.patience = 2;
    train_xcross(model, tdata, cfg);
    XCrossScorer scorer(model);
    pl.xcross_report = evaluate(scorer, test, target.catalog, "xcross");
    pl.xcross_report.seed = seed;
    return pl;
}

PipelineSizes desk_sizes() {
    PipelineSizes sz;
    sz.enc.L = 4;
    sz.enc.d = 32;
    sz.enc.H = 4;
    sz.enc.d_ff = 64;
    return sz;
}

// ---------------------------------------------------------------- criterion 5

Outcome criterion5() {
    PipelineSizes sz = desk_sizes();
    sz.users = 120;
    sz.pretrain_cap = 40;
    sz.lora_cap = 40;
    sz.target_train = 40;
    sz.pretrain_epochs = 1;
    sz.lora_epochs = 1;
    sz.xcross_epochs = 1;

    // run the pipeline but hash frozen pieces around the X-Cross phase
    Pipeline pl = run_pipeline(901, sz);
    auto hb = pl.encoder.weights_hash();
    auto h0 = pl.sources[0].set.weights_hash();
    auto h1 = pl.sources[1].set.weights_hash();

    XCrossModel model;
    RandomSource mrng(5);
    model.init(pl.xcfg, &pl.encoder, {&pl.sources[0].set, &pl.sources[1].set}, mrng);
    DomainData tdata;
    tdata.catalog = pl.data.domains[pl.target].catalog;
    tdata.instances = pl.data.domains[pl.target].instances;
    auto cfg = accept_tcfg(902);
    cfg.epochs = 2;
    train_xcross(model, tdata, cfg);

    const bool ok = pl.encoder.weights_hash() == hb && pl.sources[0].set.weights_hash() == h0 &&
                    pl.sources[1].set.weights_hash() == h1;
    return {ok, ok ? "base + embeddings + source A/B hashes bit-identical"
                   : "frozen weights changed"};
}

// ---------------------------------------------------------------- criterion 6

Outcome criterion6(std::vector<Pipeline>* out_pipelines) {
    PipelineSizes sz = desk_sizes();
    double mean_x = 0.0, mean_ref = 0.0;
    std::string detail;
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    if (const char* e = std::getenv("XC_ACCEPT_SEEDS"))
        seeds.assign(1, std::strtoull(e, nullptr, 10));
    for (std::uint64_t seed : seeds) {
        Pipeline pl = run_pipeline(seed, sz);
        mean_x += pl.xcross_report.hit1 / double(seeds.size());
        mean_ref += pl.best_zero_shot_hit1 / double(seeds.size());
        char buf[80];
        std::snprintf(buf, sizeof(buf), "[seed %llu: x=%.2f zs=%.2f] ",
                      static_cast<unsigned long long>(seed), pl.xcross_report.hit1,
                      pl.best_zero_shot_hit1);
        detail += buf;
        if (out_pipelines) out_pipelines->push_back(std::move(pl));
    }
    char buf[120];
    std::snprintf(buf, sizeof(buf), "mean x-cross %.2f vs best zero-shot %.2f (+2.0 req), floor 6.0",
                  mean_x, mean_ref);
    return {mean_x > mean_ref + 2.0 && mean_x > 6.0, detail + buf};
}

// ---------------------------------------------------------------- criterion 7

Outcome criterion7(std::vector<Pipeline>& pipelines) {
    double full = 0.0, no_layers = 0.0, no_inter = 0.0, no_experts = 0.0;
    int layers_worst = 0;
    std::string detail;
    for (auto& pl : pipelines) {
        const std::uint64_t seed = pl.xcross_report.seed;
        auto cfg = accept_tcfg(seed);
        cfg.epochs = 4;
        cfg.early_stop = true;
        cfg.patience = 2;
        DomainData tdata;
        tdata.catalog = pl.data.domains[pl.target].catalog;
        tdata.instances = cap(filter_split(pl.data.domains[pl.target].instances, Split::Train),
                              500, seed ^ 0x41);
        auto valid = filter_split(pl.data.domains[pl.target].instances, Split::Valid);
        tdata.instances.insert(tdata.instances.end(), valid.begin(), valid.end());

        double v[3];
        int i = 0;
        for (auto variant : {AblationVariant::NoLayers, AblationVariant::NoInteractions,
                             AblationVariant::NoExperts}) {
            auto out = ablate(variant, pl.encoder, {&pl.sources[0].set, &pl.sources[1].set},
                              tdata, cfg, pl.xcfg);
            v[i++] = out.report.hit1;
        }
        full += pl.xcross_report.hit1 / double(pipelines.size());
        no_layers += v[0] / double(pipelines.size());
        no_inter += v[1] / double(pipelines.size());
        no_experts += v[2] / double(pipelines.size());
        if (v[0] <= v[1] && v[0] <= v[2]) ++layers_worst;
        char buf[96];
        std::snprintf(buf, sizeof(buf), "[seed %llu: full=%.2f -L=%.2f -I=%.2f -E=%.2f] ",
                      static_cast<unsigned long long>(seed), pl.xcross_report.hit1, v[0], v[1],
                      v[2]);
        detail += buf;
    }
    const bool ok = full >= no_layers && full >= no_inter && full >= no_experts &&
                    layers_worst >= 2;
    char buf[140];
    std::snprintf(buf, sizeof(buf),
                  "means full=%.2f -Layers=%.2f -Interactions=%.2f -Experts=%.2f; -Layers worst on "
                  "%d/3 seeds",
                  full, no_layers, no_inter, no_experts, layers_worst);
    return {ok, detail + buf};
}

// ---------------------------------------------------------------- criterion 8

Outcome criterion8() {
    // Smaller auxiliary configuration sized for the 90-run sweep.
    PipelineSizes sz;
    sz.enc.L = 2;
    sz.enc.d = 16;
    sz.enc.H = 2;
    sz.enc.d_ff = 32;
    sz.title_tokens = 3;
    sz.integrate_top = 2;
    sz.users = 1750;  // >= 1000 target train instances
    sz.pretrain_cap = 250;
    sz.lora_cap = 250;
    sz.pretrain_epochs = 2;
    sz.lora_epochs = 2;

    Pipeline pl = run_pipeline(11, sz);

    auto tcfg = accept_tcfg(11);
    tcfg.epochs = 3;
    tcfg.early_stop = false;
    tcfg.val_max_instances = 0;  // sweeps skip validation entirely
    const std::vector<std::size_t> sizes = {50, 75, 100, 200, 300, 400, 500, 750, 1000};
    auto sweep =
        data_efficiency_sweep(pl.encoder, {&pl.sources[0].set, &pl.sources[1].set},
                              pl.data.domains[pl.target], pl.best_zero_shot_hit1, sizes, 5, tcfg,
                              pl.xcfg);
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "reference %.2f; crossing sizes x-cross=%zu lora=%zu (x-cross must be <= and > 0)",
                  sweep.reference_hit1, sweep.xcross_crossing, sweep.lora_crossing);
    const bool ok = sweep.xcross_crossing != 0 &&
                    (sweep.lora_crossing == 0 || sweep.xcross_crossing <= sweep.lora_crossing);
    return {ok, buf};
}

// ---------------------------------------------------------------- criterion 9

Outcome criterion9() {
    RandomSource rng(91);
    for (int t = 0; t < 10000; ++t) {
        double pos = rng.uniform();
        std::vector<double> negs(29);
        for (auto& v : negs) v = rng.uniform();
        if (t % 11 == 0) negs[t % 29] = pos;
        std::size_t r = rank_from_scores(pos, negs);
        std::size_t oracle = 1;
        for (double n : negs)
            if (n >= pos) ++oracle;
        if (r != oracle) return {false, "rank mismatch vs brute force"};
        if (hit_at_k(r, 1) != (r <= 1) || hit_at_k(r, 3) != (r <= 3) ||
            hit_at_k(r, 10) != (r <= 10))
            return {false, "hit mismatch"};
        double mrr = r <= 10 ? 1.0 / double(r) : 0.0;
        if (mrr_at_10(r) != mrr) return {false, "mrr mismatch"};
    }
    return {true, "exact match on 10^4 random score sets"};
}

// --------------------------------------------------------------- criterion 10

Outcome criterion10() {
    PipelineSizes sz = desk_sizes();
    sz.users = 150;
    sz.pretrain_cap = 50;
    sz.lora_cap = 50;
    sz.target_train = 60;
    sz.pretrain_epochs = 1;
    sz.lora_epochs = 1;
    sz.xcross_epochs = 2;
    Pipeline a = run_pipeline(77, sz);
    Pipeline b = run_pipeline(77, sz);
    const bool ok = a.xcross_report == b.xcross_report &&
                    a.best_zero_shot_hit1 == b.best_zero_shot_hit1;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "run1 hit1=%.4f run2 hit1=%.4f (all report fields compared)",
                  a.xcross_report.hit1, b.xcross_report.hit1);
    return {ok, buf};
}

}  // namespace

int main(int argc, char** argv) {
    bool fast = false;
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (!std::strcmp(argv[i], "--fast")) fast = true;
        if (!std::strcmp(argv[i], "--only") && i + 1 < argc) only = std::atoi(argv[++i]);
    }

    std::vector<Pipeline> pipelines;  // shared between criteria 6 and 7
    int failures = 0;
    auto run = [&](int id, const char* name, auto fn, bool slow) {
        if (only && only != id) return;
        if (!only && fast && slow) {
            std::printf("criterion %2d SKIP  %s (slow; run without --fast)\n", id, name);
            return;
        }
        const double t0 = now_s();
        Outcome o = fn();
        std::printf("criterion %2d %s  %s — %s (%.1fs)\n", id, o.pass ? "PASS" : "FAIL", name,
                    o.detail.c_str(), now_s() - t0);
        std::fflush(stdout);
        if (!o.pass) ++failures;
    };

    run(1, "parameter-ratio claim", criterion1, false);
    run(2, "gradient correctness (all phases)", criterion2, false);
    run(3, "zero-init transparency", criterion3, false);
    run(4, "loss sanity", criterion4, false);
    run(5, "freeze integrity", criterion5, false);
    run(6, "synthetic transfer", [&] { return criterion6(&pipelines); }, true);
    run(7, "ablation ordering", [&] {
        if (pipelines.empty()) {
            auto o6 = criterion6(&pipelines);
            (void)o6;
        }
        return criterion7(pipelines);
    }, true);
    run(8, "data-efficiency crossing", criterion8, true);
    run(9, "metric oracle equivalence", criterion9, false);
    run(10, "end-to-end determinism", criterion10, false);

    if (failures) std::printf("%d criterion(s) FAILED\n", failures);
    return failures == 0 ? 0 : 1;
}
