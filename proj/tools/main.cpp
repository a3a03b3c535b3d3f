// xcrossctl: end-to-end experiment pipeline driver.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "xc/checkpoint.hpp"
#include "xc/config.hpp"
#include "xc/experiments.hpp"
#include "xc/hash.hpp"
#include "xc/training.hpp"

using namespace xc;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;
    bool force = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "JSON config file");
    cmd->add_option("--set", o.overrides, "dotted key=value override (repeatable)");
    cmd->add_flag("--force", o.force, "allow writing into an existing run directory");
}

RunConfig resolve_config(const CommonOpts& o) { return load_run_config(o.config_path, o.overrides); }

void require_file(const std::string& path, const std::string& producer) {
    if (!fs::exists(path)) {
        std::fprintf(stderr, "missing input: %s (produce it with `xcrossctl %s`)\n", path.c_str(),
                     producer.c_str());
        std::exit(kMissingInput);
    }
}

Dataset load_data(const std::string& dir) {
    require_file(dir + "/catalog_0.jsonl", "gen-data");
    Dataset ds = read_dataset(dir);
    if (fs::exists(dir + "/config.json")) {
        RunConfig rc = load_run_config(dir + "/config.json", {});
        ds.cfg = rc.gen;
    }
    return ds;
}

json peek(const std::string& path) {
    std::ifstream f(path);
    json j;
    f >> j;
    return j;
}

EncoderConfig encoder_config_from(const json& j) {
    const auto& e = j.at("encoder_config");
    EncoderConfig c;
    c.L = e.at("L").get<std::size_t>();
    c.d = e.at("d").get<std::size_t>();
    c.H = e.at("H").get<std::size_t>();
    c.d_ff = e.at("d_ff").get<std::size_t>();
    c.V = e.at("V").get<std::size_t>();
    c.max_len = e.at("max_len").get<std::size_t>();
    c.eps = e.at("eps").get<double>();
    return c;
}

/// Loads the encoder (and optionally the lora sets / head / xcross stack
/// stored alongside it) from a checkpoint written by another subcommand.
struct LoadedModel {
    TransformerEncoder encoder;
    std::vector<LoraSet> lora_sets;
    PoolerScorer head;
    bool has_head = false;
    XCrossModel xcross;
    bool has_xcross = false;
    json raw;
};

LoadedModel load_model(const std::string& path, const std::string& producer) {
    require_file(path, producer);
    LoadedModel m;
    m.raw = peek(path);
    RandomSource rng(0);
    m.encoder.init(encoder_config_from(m.raw), rng);

    CheckpointState st;
    st.encoder = &m.encoder;
    for (const auto& s : m.raw.at("lora_sets")) {
        const auto& advs = s.at("adapters");
        const std::size_t r = advs.at(0).at("rank").get<std::size_t>();
        const double alpha = advs.at(0).at("alpha").get<double>();
        m.lora_sets.push_back(init_lora_set(s.at("domain_id").get<std::string>(),
                                            m.encoder.cfg.L, m.encoder.cfg.d, r, alpha, 0));
    }
    for (auto& s : m.lora_sets) st.lora_sets.push_back(&s);

    if (m.raw.contains("head")) {
        m.head.init(m.encoder.cfg.d, rng);
        st.head = &m.head;
        m.has_head = true;
    }
    if (m.raw.contains("xcross")) {
        const auto& x = m.raw.at("xcross").at("config");
        XCrossConfig xc;
        xc.n = x.at("n").get<std::size_t>();
        xc.beta = x.at("beta").get<double>();
        xc.gamma = x.at("gamma").get<double>();
        xc.integrated_layers = x.at("integrated_layers").get<std::vector<std::size_t>>();
        xc.d = m.encoder.cfg.d;
        std::vector<LoraSet*> srcs;
        for (auto& s : m.lora_sets) srcs.push_back(&s);
        m.xcross.init(xc, &m.encoder, srcs, rng);
        st.xcross = &m.xcross;
        m.has_xcross = true;
    }
    load_checkpoint(path, st);
    return m;
}

void print_report(const EvalReport& r) {
    std::printf("%-24s Hit@1 %6.2f  Hit@3 %6.2f  Hit@10 %6.2f  MRR@10 %6.2f  n=%zu\n",
                r.model_tag.c_str(), r.hit1, r.hit3, r.hit10, r.mrr10 * 100.0, r.count);
}

void write_report_json(const std::string& path, const std::vector<EvalReport>& reports) {
    json out = json::array();
    for (const auto& r : reports)
        out.push_back(json{{"model", r.model_tag},
                           {"seed", r.seed},
                           {"hit1", r.hit1},
                           {"hit3", r.hit3},
                           {"hit10", r.hit10},
                           {"mrr10", r.mrr10},
                           {"count", r.count}});
    std::ofstream(path) << out.dump(1) << "\n";
}

EvalOptions eval_opts(const RunConfig& cfg) {
    EvalOptions e;
    e.truncate = cfg.train.truncate;
    e.max_len = cfg.train.max_len;
    return e;
}

int cmd_gen_data(const CommonOpts& co, const std::string& out) {
    RunConfig cfg = resolve_config(co);
    prepare_run_dir(out, cfg, co.force);
    Dataset ds = generate_domains(cfg.gen);
    write_dataset(out, ds);
    std::size_t total = 0;
    for (const auto& d : ds.domains) total += d.instances.size();
    std::printf("wrote %zu domains, %zu instances to %s\n", ds.domains.size(), total, out.c_str());
    return kOk;
}

constexpr std::size_t kNoHoldout = static_cast<std::size_t>(-1);

int cmd_pretrain(const CommonOpts& co, const std::string& data_dir, const std::string& out,
                 std::size_t target, std::size_t target_cap) {
    RunConfig cfg = resolve_config(co);
    Dataset ds = load_data(data_dir);
    cfg.gen = ds.cfg;
    prepare_run_dir(out, cfg, co.force);
    if (target != kNoHoldout && target >= ds.domains.size()) {
        std::fprintf(stderr, "target domain %zu out of range (%zu domains)\n", target,
                     ds.domains.size());
        return kConfigError;
    }

    TransformerEncoder enc;
    RandomSource rng(cfg.seed * 31 + 7);
    enc.init(cfg.encoder_config(), rng);

    std::vector<TrainItem> train, valid;
    for (std::size_t m = 0; m < ds.domains.size(); ++m) {
        if (m == target && target_cap == 0) continue;
        auto t = to_items(filter_split(ds.domains[m].instances, Split::Train),
                          ds.domains[m].catalog);
        if (m == target && t.size() > target_cap) t.resize(target_cap);
        train.insert(train.end(), t.begin(), t.end());
        if (m == target) continue;  // validate on fully-pooled domains only
        auto v = to_items(filter_split(ds.domains[m].instances, Split::Valid),
                          ds.domains[m].catalog);
        valid.insert(valid.end(), v.begin(), v.end());
    }
    PoolerScorer tmp;
    tmp.init(enc.cfg.d, rng);
    auto res = pretrain_base(enc, tmp, train, valid, cfg.train);

    CheckpointState st;
    st.encoder = &enc;
    st.seed = cfg.seed;
    save_checkpoint(out + "/base.json", st);
    std::printf("pretrained %zu epochs (best %zu), base frozen, hash %s\n",
                res.epoch_losses.size(), res.best_epoch, hash_hex(enc.weights_hash()).c_str());
    std::printf("losses:");
    for (double l : res.epoch_losses) std::printf(" %.4f", l);
    std::printf("  val-hit1:");
    for (double h : res.val_hit1) std::printf(" %.2f", h);
    std::printf("\n");
    return kOk;
}

int cmd_train_source(const CommonOpts& co, const std::string& data_dir, const std::string& base,
                     std::size_t domain, const std::string& out) {
    RunConfig cfg = resolve_config(co);
    Dataset ds = load_data(data_dir);
    LoadedModel bm = load_model(base, "pretrain");
    if (domain >= ds.domains.size()) {
        std::fprintf(stderr, "domain %zu out of range\n", domain);
        return kConfigError;
    }
    prepare_run_dir(out, cfg, co.force);

    auto lo = train_lora_source(bm.encoder, ds.domains[domain], cfg.train,
                                cfg.seed * 101 + domain);
    CheckpointState st;
    st.encoder = &bm.encoder;
    st.lora_sets = {&lo.set};
    st.head = &lo.head;
    st.seed = cfg.seed;
    save_checkpoint(out + "/source.json", st);

    SingleDomainModel m;
    m.base = &bm.encoder;
    m.adapters = &lo.set;
    m.head = &lo.head;
    auto r = evaluate(m, filter_split(ds.domains[domain].instances, Split::Test),
                      ds.domains[domain].catalog, "lora-domain" + std::to_string(domain),
                      eval_opts(cfg));
    print_report(r);
    write_report_json(out + "/report.json", {r});
    std::printf("losses:");
    for (double l : lo.result.epoch_losses) std::printf(" %.4f", l);
    std::printf("  val-hit1:");
    for (double h : lo.result.val_hit1) std::printf(" %.2f", h);
    std::printf("\n");
    return kOk;
}

int cmd_select_sources(const CommonOpts& co, const std::string& data_dir,
                       const std::vector<std::string>& source_paths, std::size_t target,
                       std::size_t n) {
    RunConfig cfg = resolve_config(co);
    Dataset ds = load_data(data_dir);
    if (target >= ds.domains.size()) {
        std::fprintf(stderr, "target domain %zu out of range\n", target);
        return kConfigError;
    }
    auto valid = filter_split(ds.domains[target].instances, Split::Valid);

    std::vector<LoadedModel> models;
    std::vector<EvalReport> per_source;
    for (const auto& p : source_paths) models.push_back(load_model(p, "train-source"));
    for (std::size_t i = 0; i < models.size(); ++i) {
        SingleDomainModel m;
        m.base = &models[i].encoder;
        m.adapters = &models[i].lora_sets.at(0);
        m.head = &models[i].head;
        auto r = evaluate(m, valid, ds.domains[target].catalog, source_paths[i], eval_opts(cfg));
        per_source.push_back(r);
        print_report(r);
    }
    auto order = select_top_sources(per_source, n);
    std::printf("selected:");
    for (auto i : order) std::printf(" %s", source_paths[i].c_str());
    std::printf("\n");
    return kOk;
}

int cmd_train_xcross(const CommonOpts& co, const std::string& data_dir, const std::string& base,
                     const std::vector<std::string>& source_paths, std::size_t target,
                     const std::string& out, const std::string& variant) {
    RunConfig cfg = resolve_config(co);
    Dataset ds = load_data(data_dir);
    LoadedModel bm = load_model(base, "pretrain");
    std::vector<LoadedModel> sources;
    for (const auto& p : source_paths) sources.push_back(load_model(p, "train-source"));
    if (target >= ds.domains.size()) {
        std::fprintf(stderr, "target domain %zu out of range\n", target);
        return kConfigError;
    }
    prepare_run_dir(out, cfg, co.force);

    std::vector<LoraSet*> sets;
    for (auto& s : sources) {
        s.lora_sets.at(0).set_frozen(true);
        sets.push_back(&s.lora_sets.at(0));
    }
    XCrossConfig xc = cfg.xcross_config();
    xc.n = sets.size();
    xc.d = bm.encoder.cfg.d;
    xc.integrated_layers = XCrossConfig::top_layers(bm.encoder.cfg.L,
                                                    std::min(cfg.integrate_top, bm.encoder.cfg.L));

    AblationVariant av = ablation_from_name(variant);
    auto out_run = ablate(av, bm.encoder, sets, ds.domains[target], cfg.train, xc);
    print_report(out_run.report);
    write_report_json(out + "/report.json", {out_run.report});
    std::printf("train losses:");
    for (double l : out_run.training.epoch_losses) std::printf(" %.4f", l);
    std::printf("\n");
    return kOk;
}

int cmd_eval(const CommonOpts& co, const std::string& data_dir, const std::string& model_path,
             std::size_t domain, const std::string& split) {
    RunConfig cfg = resolve_config(co);
    Dataset ds = load_data(data_dir);
    LoadedModel m = load_model(model_path, "train-source or train-xcross");
    if (domain >= ds.domains.size()) {
        std::fprintf(stderr, "domain %zu out of range\n", domain);
        return kConfigError;
    }
    auto instances = filter_split(ds.domains[domain].instances, split_from_name(split));
    EvalReport r;
    if (m.has_xcross) {
        XCrossScorer scorer(m.xcross);
        r = evaluate(scorer, instances, ds.domains[domain].catalog, "xcross", eval_opts(cfg));
    } else if (m.has_head && !m.lora_sets.empty()) {
        SingleDomainModel sm;
        sm.base = &m.encoder;
        sm.adapters = &m.lora_sets.at(0);
        sm.head = &m.head;
        r = evaluate(sm, instances, ds.domains[domain].catalog, "lora", eval_opts(cfg));
    } else {
        std::fprintf(stderr, "checkpoint has no scorable model (head missing)\n");
        return kConfigError;
    }
    print_report(r);
    return kOk;
}

int cmd_sweep(const CommonOpts& co, const std::string& kind, const std::string& data_dir,
              const std::string& base, const std::vector<std::string>& source_paths,
              std::size_t target, const std::string& out) {
    RunConfig cfg = resolve_config(co);
    Dataset ds = load_data(data_dir);
    LoadedModel bm = load_model(base, "pretrain");
    std::vector<LoadedModel> sources;
    for (const auto& p : source_paths) sources.push_back(load_model(p, "train-source"));
    prepare_run_dir(out, cfg, co.force);

    std::vector<LoraSet*> sets;
    for (auto& s : sources) {
        s.lora_sets.at(0).set_frozen(true);
        sets.push_back(&s.lora_sets.at(0));
    }
    XCrossConfig xc = cfg.xcross_config();
    xc.n = sets.size();
    xc.d = bm.encoder.cfg.d;
    xc.integrated_layers = XCrossConfig::top_layers(bm.encoder.cfg.L,
                                                    std::min(cfg.integrate_top, bm.encoder.cfg.L));

    const auto& target_data = ds.domains.at(target);
    if (kind == "data-efficiency") {
        // reference: best zero-shot source on the target test split
        auto test = filter_split(target_data.instances, Split::Test);
        double ref = 0.0;
        for (auto& s : sources) {
            SingleDomainModel m;
            m.base = &bm.encoder;
            m.adapters = &s.lora_sets.at(0);
            m.head = &s.head;
            ref = std::max(ref, evaluate(m, test, target_data.catalog, "zs", eval_opts(cfg)).hit1);
        }
        std::vector<std::size_t> sizes = {50, 75, 100, 200, 300, 400, 500, 750, 1000};
        auto sweep = data_efficiency_sweep(bm.encoder, sets, target_data, ref, sizes, 5,
                                           cfg.train, xc);
        std::ofstream(out + "/sweep.csv") << sweep_csv(sweep);
        std::printf("reference %.2f, crossings: x-cross %zu, lora %zu; csv in %s/sweep.csv\n",
                    ref, sweep.xcross_crossing, sweep.lora_crossing, out.c_str());
        return kOk;
    }
    if (kind == "layers") {
        std::vector<std::size_t> counts;
        for (std::size_t c : {1u, 2u, 4u, 8u})
            if (c <= bm.encoder.cfg.L) counts.push_back(c);
        auto runs = layer_count_sweep(bm.encoder, sets, target_data, counts, cfg.train, xc);
        std::vector<EvalReport> reports;
        for (const auto& r : runs) reports.push_back(r.report);
        std::printf("%s", report_table(reports).c_str());
        write_report_json(out + "/report.json", reports);
        return kOk;
    }
    std::fprintf(stderr, "unknown sweep kind '%s' (data-efficiency|layers)\n", kind.c_str());
    return kConfigError;
}

int cmd_param_report(std::size_t n, std::size_t d, std::size_t r, std::size_t layers) {
    XCrossConfig c;
    c.n = n;
    c.d = d;
    c.integrated_layers = XCrossConfig::top_layers(layers, layers);
    auto b = trainable_param_count(c);
    const std::size_t lora_per_layer = 2 * r * d;  // one adapted matrix
    std::printf("integrator per layer: %zu\n", b.per_layer_integrator);
    std::printf("lora per layer (one adapted matrix, 2rd): %zu\n", lora_per_layer);
    std::printf("ratio: %.0f%%\n", 100.0 * double(b.per_layer_integrator) / double(lora_per_layer));
    std::printf("integrators (%zu layers): %zu, mixer: %zu, head: %zu, total: %zu\n",
                c.integrated_layers.size(), b.integrator_total, b.mixer, b.head, b.total);
    return kOk;
}

int cmd_grad_check() {
    EncoderConfig ec;
    ec.L = 2;
    ec.d = 8;
    ec.H = 2;
    ec.d_ff = 16;
    ec.V = 20;
    ec.max_len = 12;
    std::vector<std::vector<TokenId>> prompts = {
        {0, 5, 9, 13, 2, 7, 11, 3},
        {0, 5, 9, 13, 2, 7, 11, 4},
        {0, 5, 9, 13, 2, 7, 11, 19},
    };

    TransformerEncoder enc;
    RandomSource rng(7);
    enc.init(ec, rng);
    PoolerScorer head;
    head.init(ec.d, rng);
    SingleDomainModel m;
    m.base = &enc;
    m.head = &head;

    auto loss_fn = [&]() {
        std::vector<double> scores;
        for (const auto& p : prompts) {
            Tape tape;
            scores.push_back(m.forward_score(tape, p).value()[0]);
        }
        return multiple_choice_loss(scores, 0);
    };

    std::vector<Parameter*> params = enc.params();
    for (auto* p : head.params()) params.push_back(p);
    for (auto* p : params) p->zero_grad();
    {
        std::deque<Tape> tapes;
        std::vector<Var> vars;
        std::vector<double> scores;
        for (const auto& p : prompts) {
            tapes.emplace_back();
            vars.push_back(m.forward_score(tapes.back(), p));
            scores.push_back(vars.back().value()[0]);
        }
        auto seeds = multiple_choice_loss_grad(scores, 0);
        for (std::size_t i = 0; i < tapes.size(); ++i) tapes[i].backward(vars[i], seeds[i]);
    }

    double worst = 0.0;
    for (auto* p : params)
        for (std::size_t i = 0; i < p->value.numel(); ++i) {
            const double saved = p->value.data[i];
            p->value.data[i] = saved + 1e-5;
            const double up = loss_fn();
            p->value.data[i] = saved - 1e-5;
            const double dn = loss_fn();
            p->value.data[i] = saved;
            const double fd = (up - dn) / 2e-5;
            const double a = p->grad.data[i];
            worst = std::max(worst,
                             std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-4}));
        }
    std::printf("grad-check max relative error: %.3e (tolerance 1e-5)\n", worst);
    return worst < 1e-5 ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dynamic cross-domain integration experiment driver"};
    app.require_subcommand(1);

    CommonOpts co;
    std::string out, data_dir, base, model_path, split = "test", kind, variant = "full";
    std::vector<std::string> source_paths;
    std::size_t domain = 0, target = 0, nsel = 2;
    std::size_t pr_n = 2, pr_d = 768, pr_r = 16, pr_layers = 12;

    auto* gen = app.add_subcommand("gen-data", "generate the synthetic multi-domain dataset");
    add_common(gen, co);
    gen->add_option("--out", out)->required();

    auto* pre = app.add_subcommand("pretrain", "base pretraining on pooled source domains");
    add_common(pre, co);
    pre->add_option("--data", data_dir)->required();
    pre->add_option("--out", out)->required();
    pre->add_option("--target", target, "hold this domain's data out of pretraining");
    std::size_t target_cap = 0;
    pre->add_option("--target-cap", target_cap,
                    "with --target, keep this many of its training instances in the pool");

    auto* ts = app.add_subcommand("train-source", "LoRA fine-tuning for one source domain");
    add_common(ts, co);
    ts->add_option("--data", data_dir)->required();
    ts->add_option("--base", base)->required();
    ts->add_option("--domain", domain)->required();
    ts->add_option("--out", out)->required();

    auto* sel = app.add_subcommand("select-sources", "rank sources by zero-shot on target valid");
    add_common(sel, co);
    sel->add_option("--data", data_dir)->required();
    sel->add_option("--sources", source_paths)->required();
    sel->add_option("--target", target)->required();
    sel->add_option("-n", nsel);

    auto* tx = app.add_subcommand("train-xcross", "train the integration model on the target");
    add_common(tx, co);
    tx->add_option("--data", data_dir)->required();
    tx->add_option("--base", base)->required();
    tx->add_option("--sources", source_paths)->required();
    tx->add_option("--target", target)->required();
    tx->add_option("--out", out)->required();

    auto* ab = app.add_subcommand("ablate", "train an ablated variant");
    add_common(ab, co);
    ab->add_option("--variant", variant, "-Layers | -Interactions | -Experts | full")->required();
    ab->add_option("--data", data_dir)->required();
    ab->add_option("--base", base)->required();
    ab->add_option("--sources", source_paths)->required();
    ab->add_option("--target", target)->required();
    ab->add_option("--out", out)->required();

    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on one domain split");
    add_common(ev, co);
    ev->add_option("--data", data_dir)->required();
    ev->add_option("--model", model_path)->required();
    ev->add_option("--domain", domain)->required();
    ev->add_option("--split", split);

    auto* sw = app.add_subcommand("sweep", "data-efficiency or layer-count sweep");
    add_common(sw, co);
    sw->add_option("--kind", kind, "data-efficiency | layers")->required();
    sw->add_option("--data", data_dir)->required();
    sw->add_option("--base", base)->required();
    sw->add_option("--sources", source_paths)->required();
    sw->add_option("--target", target)->required();
    sw->add_option("--out", out)->required();

    auto* gc = app.add_subcommand("grad-check", "finite-difference gradient verification");

    auto* pr = app.add_subcommand("param-report", "parameter accounting vs LoRA");
    pr->add_option("--n", pr_n);
    pr->add_option("--d", pr_d);
    pr->add_option("--r", pr_r);
    pr->add_option("--layers", pr_layers);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_data(co, out);
        if (pre->parsed())
            return cmd_pretrain(co, data_dir, out,
                                pre->count("--target") ? target : kNoHoldout, target_cap);
        if (ts->parsed()) return cmd_train_source(co, data_dir, base, domain, out);
        if (sel->parsed()) return cmd_select_sources(co, data_dir, source_paths, target, nsel);
        if (tx->parsed())
            return cmd_train_xcross(co, data_dir, base, source_paths, target, out, "full");
        if (ab->parsed())
            return cmd_train_xcross(co, data_dir, base, source_paths, target, out, variant);
        if (ev->parsed()) return cmd_eval(co, data_dir, model_path, domain, split);
        if (sw->parsed()) return cmd_sweep(co, kind, data_dir, base, source_paths, target, out);
        if (gc->parsed()) return cmd_grad_check();
        if (pr->parsed()) return cmd_param_report(pr_n, pr_d, pr_r, pr_layers);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kConfigError;
    }
    return kConfigError;
}
