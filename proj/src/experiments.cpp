#include "xc/experiments.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace xc {

AblationVariant ablation_from_name(const std::string& name) {
    if (name == "full") return AblationVariant::Full;
    if (name == "-Layers" || name == "layers") return AblationVariant::NoLayers;
    if (name == "-Interactions" || name == "interactions") return AblationVariant::NoInteractions;
    if (name == "-Experts" || name == "experts") return AblationVariant::NoExperts;
    throw std::invalid_argument("unknown ablation variant '" + name + "'");
}

const char* ablation_name(AblationVariant v) {
    switch (v) {
        case AblationVariant::Full: return "full";
        case AblationVariant::NoLayers: return "-Layers";
        case AblationVariant::NoInteractions: return "-Interactions";
        default: return "-Experts";
    }
}

std::pair<double, double> ablation_coeffs(AblationVariant v, double beta, double gamma) {
    switch (v) {
        case AblationVariant::Full: return {beta, gamma};
        case AblationVariant::NoLayers: return {0.0, 0.0};
        case AblationVariant::NoInteractions: return {beta, 0.0};
        default: return {0.0, gamma};  // -Experts
    }
}

AblationOutcome ablate(AblationVariant variant, TransformerEncoder& encoder,
                       std::vector<LoraSet*> sources, const DomainData& target,
                       const TrainingConfig& tcfg, const XCrossConfig& xcfg,
                       const PoolerScorer* warm_head, std::size_t warm_source) {
    XCrossConfig cfg = xcfg;
    std::tie(cfg.beta, cfg.gamma) = ablation_coeffs(variant, xcfg.beta, xcfg.gamma);

    XCrossModel model;
    RandomSource rng(tcfg.seed ^ 0x5ca1ab1eULL);
    model.init(cfg, &encoder, sources, rng);
    if (warm_head) model.warm_start(*warm_head, warm_source);

    AblationOutcome out;
    out.training = train_xcross(model, target, tcfg);

    XCrossScorer scorer(model);
    EvalOptions eopts;
    eopts.truncate = tcfg.truncate;
    eopts.max_len = tcfg.max_len;
    out.report = evaluate(scorer, filter_split(target.instances, Split::Test), target.catalog,
                          std::string("xcross") + ablation_name(variant), eopts);
    out.report.seed = tcfg.seed;
    return out;
}

std::size_t crossing_size(const std::vector<std::size_t>& sizes,
                          const std::vector<double>& means, double reference) {
    for (std::size_t i = 0; i < sizes.size(); ++i)
        if (means[i] > reference) return sizes[i];
    return 0;
}

namespace {

/// Target data with the train split replaced by a random subset.
DomainData subset_data(const DomainData& target, std::size_t size, std::uint64_t seed) {
    auto train = filter_split(target.instances, Split::Train);
    if (size > train.size())
        throw std::invalid_argument("data_efficiency_sweep: size " + std::to_string(size) +
                                    " exceeds available " + std::to_string(train.size()));
    RandomSource rng(seed);
    for (std::size_t i = train.size(); i > 1; --i)
        std::swap(train[i - 1], train[rng.uniform_index(i)]);
    train.resize(size);

    DomainData out;
    out.catalog = target.catalog;
    out.instances = std::move(train);
    for (const auto& inst : target.instances)
        if (inst.split != Split::Train) out.instances.push_back(inst);
    return out;
}

}  // namespace

SweepResult data_efficiency_sweep(TransformerEncoder& encoder, std::vector<LoraSet*> sources,
                                  const DomainData& target, double reference_hit1,
                                  const std::vector<std::size_t>& sizes, std::size_t subsets,
                                  const TrainingConfig& tcfg, const XCrossConfig& xcfg) {
    SweepResult res;
    res.sizes = sizes;
    res.subsets_per_size = subsets;
    res.reference_hit1 = reference_hit1;

    EvalOptions eopts;
    eopts.truncate = tcfg.truncate;
    eopts.max_len = tcfg.max_len;
    eopts.max_instances = tcfg.val_max_instances;
    const auto test = filter_split(target.instances, Split::Test);

    for (std::size_t size : sizes) {
        for (std::size_t sub = 0; sub < subsets; ++sub) {
            const std::uint64_t run_seed = tcfg.seed + size * 1000003ULL + sub * 7919ULL;
            DomainData data = subset_data(target, size, run_seed);

            SweepRun run;
            run.size = size;
            run.subset = sub;

            TrainingConfig rcfg = tcfg;
            rcfg.seed = run_seed;

            {
                XCrossModel model;
                RandomSource rng(run_seed ^ 0x5ca1ab1eULL);
                model.init(xcfg, &encoder, sources, rng);
                train_xcross(model, data, rcfg);
                XCrossScorer scorer(model);
                run.xcross = evaluate(scorer, test, target.catalog, "xcross", eopts);
                run.xcross.seed = run_seed;
            }
            {
                LoraTrainOutput lora = train_lora_source(encoder, data, rcfg, run_seed ^ 0x10adULL);
                SingleDomainModel m;
                m.base = &encoder;
                m.adapters = &lora.set;
                m.head = &lora.head;
                run.lora = evaluate(m, test, target.catalog, "lora", eopts);
                run.lora.seed = run_seed;
            }
            res.runs.push_back(std::move(run));
        }
    }

    std::vector<double> xmeans, lmeans;
    for (std::size_t size : sizes) {
        double xs = 0.0, ls = 0.0;
        std::size_t n = 0;
        for (const auto& r : res.runs)
            if (r.size == size) {
                xs += r.xcross.hit1;
                ls += r.lora.hit1;
                ++n;
            }
        xmeans.push_back(xs / static_cast<double>(n));
        lmeans.push_back(ls / static_cast<double>(n));
    }
    res.xcross_crossing = crossing_size(sizes, xmeans, reference_hit1);
    res.lora_crossing = crossing_size(sizes, lmeans, reference_hit1);
    return res;
}

std::vector<LayerSweepRun> layer_count_sweep(TransformerEncoder& encoder,
                                             std::vector<LoraSet*> sources,
                                             const DomainData& target,
                                             const std::vector<std::size_t>& counts,
                                             const TrainingConfig& tcfg,
                                             const XCrossConfig& xcfg) {
    std::vector<LayerSweepRun> out;
    EvalOptions eopts;
    eopts.truncate = tcfg.truncate;
    eopts.max_len = tcfg.max_len;
    const auto test = filter_split(target.instances, Split::Test);
    for (std::size_t c : counts) {
        XCrossConfig cfg = xcfg;
        cfg.integrated_layers = XCrossConfig::top_layers(encoder.cfg.L, c);
        XCrossModel model;
        RandomSource rng(tcfg.seed ^ 0x5ca1ab1eULL);
        model.init(cfg, &encoder, sources, rng);
        train_xcross(model, target, tcfg);
        XCrossScorer scorer(model);
        LayerSweepRun run;
        run.count = c;
        run.report = evaluate(scorer, test, target.catalog,
                              "xcross-top" + std::to_string(c), eopts);
        run.report.seed = tcfg.seed;
        out.push_back(std::move(run));
    }
    return out;
}

std::string report_table(const std::vector<EvalReport>& reports) {
    std::ostringstream os;
    os << "model                        Hit@1   Hit@3  Hit@10  MRR@10   count\n";
    char buf[160];
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof(buf), "%-26s %7.2f %7.2f %7.2f %7.2f %7zu\n",
                      r.model_tag.c_str(), r.hit1, r.hit3, r.hit10, r.mrr10 * 100.0, r.count);
        os << buf;
    }
    return os.str();
}

std::string sweep_csv(const SweepResult& sweep) {
    std::ostringstream os;
    os << "size,subset,model,hit1,hit3,hit10,mrr10,reference_hit1\n";
    for (const auto& r : sweep.runs) {
        os << r.size << "," << r.subset << ",xcross," << r.xcross.hit1 << "," << r.xcross.hit3
           << "," << r.xcross.hit10 << "," << r.xcross.mrr10 << "," << sweep.reference_hit1
           << "\n";
        os << r.size << "," << r.subset << ",lora," << r.lora.hit1 << "," << r.lora.hit3 << ","
           << r.lora.hit10 << "," << r.lora.mrr10 << "," << sweep.reference_hit1 << "\n";
    }
    return os.str();
}

}  // namespace xc
