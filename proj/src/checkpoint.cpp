#include "xc/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "xc/hash.hpp"

using ordered_json = nlohmann::ordered_json;

namespace xc {

namespace {

constexpr int kSchemaVersion = 1;

// Documented on-disk contract for the integrator weight rows (part of the
// checkpoint header so readers can interpret W_concat without the code).
constexpr const char* kZLayoutDoc =
    "z rows: for each domain m=0..n-1 ascending, 2(n-1) rows: first the n-1 "
    "direct factors for m'!=m ascending, then the n-1 interaction factors "
    "for m'!=m ascending";

ordered_json tensor_to_json(const Tensor& t) {
    return ordered_json{{"shape", t.shape}, {"data", t.data}};
}

Tensor tensor_from_json(const ordered_json& j) {
    Tensor t;
    t.shape = j.at("shape").get<std::vector<std::size_t>>();
    t.data = j.at("data").get<std::vector<double>>();
    if (t.data.size() != Tensor::numel_of(t.shape))
        throw std::runtime_error("checkpoint: tensor shape/data mismatch");
    return t;
}

ordered_json params_to_json(const std::vector<const Parameter*>& params) {
    ordered_json out = ordered_json::object();
    for (const auto* p : params) out[p->name] = tensor_to_json(p->value);
    return out;
}

void params_from_json(const ordered_json& j, const std::vector<Parameter*>& params) {
    for (auto* p : params) {
        if (!j.contains(p->name))
            throw std::runtime_error("checkpoint: missing parameter block '" + p->name + "'");
        Tensor t = tensor_from_json(j.at(p->name));
        if (t.shape != p->value.shape)
            throw std::runtime_error("checkpoint: shape mismatch for '" + p->name + "'");
        p->value = std::move(t);
    }
}

std::vector<const Parameter*> as_const(std::vector<Parameter*> v) {
    return {v.begin(), v.end()};
}

}  // namespace

void save_checkpoint(const std::string& path, const CheckpointState& state) {
    if (!state.encoder) throw std::invalid_argument("save_checkpoint: encoder required");
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["seed"] = state.seed;
    j["z_layout"] = kZLayoutDoc;

    const EncoderConfig& c = state.encoder->cfg;
    j["encoder_config"] = ordered_json{{"L", c.L},       {"d", c.d},
                                       {"H", c.H},       {"d_ff", c.d_ff},
                                       {"V", c.V},       {"max_len", c.max_len},
                                       {"eps", c.eps}};
    j["encoder_frozen"] = state.encoder->frozen();
    j["encoder_hash"] = hash_hex(state.encoder->weights_hash());
    j["encoder"] = params_to_json(as_const(state.encoder->params()));

    j["lora_sets"] = ordered_json::array();
    for (const auto* set : state.lora_sets) {
        ordered_json s;
        s["domain_id"] = set->domain_id;
        s["frozen"] = set->frozen;
        s["hash"] = hash_hex(set->weights_hash());
        s["adapters"] = ordered_json::array();
        for (const auto& a : set->adapters) {
            s["adapters"].push_back(ordered_json{{"layer", a.layer},
                                                 {"tag", proj_tag_name(a.tag)},
                                                 {"alpha", a.alpha},
                                                 {"rank", a.rank},
                                                 {"alpha_over_r", a.alpha_over_r},
                                                 {"A", tensor_to_json(a.A.value)},
                                                 {"B", tensor_to_json(a.B.value)}});
        }
        j["lora_sets"].push_back(std::move(s));
    }

    if (state.xcross) {
        ordered_json x;
        const XCrossConfig& xc = state.xcross->cfg;
        x["config"] = ordered_json{{"n", xc.n},
                                   {"beta", xc.beta},
                                   {"gamma", xc.gamma},
                                   {"integrated_layers", xc.integrated_layers},
                                   {"d", xc.d}};
        x["integrators"] = ordered_json::array();
        for (const auto& il : state.xcross->integrators)
            x["integrators"].push_back(
                ordered_json{{"layer", il.layer}, {"W_concat", tensor_to_json(il.W_concat.value)}});
        x["mixer_w"] = tensor_to_json(state.xcross->mixer.w.value);
        x["head"] = params_to_json(as_const(state.xcross->head.params()));
        j["xcross"] = std::move(x);
    }

    if (state.head) j["head"] = params_to_json(as_const(state.head->params()));

    if (state.trainer) {
        ordered_json t;
        t["epoch"] = state.trainer->epoch;
        t["rng_state"] = state.trainer->rng().save_state();
        t["opt_states"] = ordered_json::array();
        const auto& params = state.trainer->params();
        const auto& states = state.trainer->opt_states();
        for (std::size_t i = 0; i < params.size(); ++i) {
            t["opt_states"].push_back(ordered_json{{"name", params[i]->name},
                                                   {"m", tensor_to_json(states[i].m)},
                                                   {"v", tensor_to_json(states[i].v)},
                                                   {"step_count", states[i].step_count},
                                                   {"beta1", states[i].beta1},
                                                   {"beta2", states[i].beta2},
                                                   {"eps", states[i].eps}});
        }
        j["trainer"] = std::move(t);
    }

    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
    f << j.dump(1) << "\n";
}

void load_checkpoint(const std::string& path, CheckpointState& state) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
    ordered_json j;
    f >> j;
    if (j.at("schema_version").get<int>() != kSchemaVersion)
        throw std::runtime_error("load_checkpoint: unsupported schema version");
    state.seed = j.at("seed").get<std::uint64_t>();

    if (!state.encoder) throw std::invalid_argument("load_checkpoint: encoder required");
    params_from_json(j.at("encoder"), state.encoder->params());
    if (j.at("encoder_frozen").get<bool>()) state.encoder->freeze();
    if (hash_hex(state.encoder->weights_hash()) != j.at("encoder_hash").get<std::string>())
        throw std::runtime_error("load_checkpoint: encoder hash mismatch (corrupted checkpoint)");

    const auto& sets = j.at("lora_sets");
    if (sets.size() != state.lora_sets.size())
        throw std::runtime_error("load_checkpoint: expected " +
                                 std::to_string(state.lora_sets.size()) + " lora sets, file has " +
                                 std::to_string(sets.size()));
    for (std::size_t s = 0; s < sets.size(); ++s) {
        LoraSet* set = state.lora_sets[s];
        set->domain_id = sets[s].at("domain_id").get<std::string>();
        const auto& advs = sets[s].at("adapters");
        if (advs.size() != set->adapters.size())
            throw std::runtime_error("load_checkpoint: adapter count mismatch");
        for (std::size_t i = 0; i < advs.size(); ++i) {
            LoraAdapter& a = set->adapters[i];
            a.layer = advs[i].at("layer").get<std::size_t>();
            a.tag = advs[i].at("tag").get<std::string>() == "query" ? ProjTag::Query
                                                                   : ProjTag::Value;
            a.alpha = advs[i].at("alpha").get<double>();
            a.rank = advs[i].at("rank").get<std::size_t>();
            a.alpha_over_r = advs[i].at("alpha_over_r").get<bool>();
            a.A.value = tensor_from_json(advs[i].at("A"));
            a.B.value = tensor_from_json(advs[i].at("B"));
            a.A.grad = Tensor(a.A.value.shape);
            a.B.grad = Tensor(a.B.value.shape);
        }
        set->set_frozen(sets[s].at("frozen").get<bool>());
        if (hash_hex(set->weights_hash()) != sets[s].at("hash").get<std::string>())
            throw std::runtime_error("load_checkpoint: lora set '" + set->domain_id +
                                     "' hash mismatch (corrupted checkpoint)");
    }

    if (state.xcross) {
        const auto& x = j.at("xcross");
        const auto& ints = x.at("integrators");
        if (ints.size() != state.xcross->integrators.size())
            throw std::runtime_error("load_checkpoint: integrator count mismatch");
        for (std::size_t i = 0; i < ints.size(); ++i) {
            state.xcross->integrators[i].layer = ints[i].at("layer").get<std::size_t>();
            state.xcross->integrators[i].W_concat.value =
                tensor_from_json(ints[i].at("W_concat"));
        }
        state.xcross->mixer.w.value = tensor_from_json(x.at("mixer_w"));
        params_from_json(x.at("head"), state.xcross->head.params());
        state.xcross->cfg.beta = x.at("config").at("beta").get<double>();
        state.xcross->cfg.gamma = x.at("config").at("gamma").get<double>();
    }

    if (state.head) params_from_json(j.at("head"), state.head->params());

    if (state.trainer && j.contains("trainer")) {
        const auto& t = j.at("trainer");
        state.trainer->epoch = t.at("epoch").get<std::size_t>();
        state.trainer->rng().load_state(t.at("rng_state").get<std::string>());
        const auto& os = t.at("opt_states");
        auto& params = state.trainer->params();
        auto& states = state.trainer->opt_states();
        if (os.size() != params.size())
            throw std::runtime_error("load_checkpoint: optimizer state count mismatch");
        for (std::size_t i = 0; i < os.size(); ++i) {
            if (os[i].at("name").get<std::string>() != params[i]->name)
                throw std::runtime_error("load_checkpoint: optimizer state name mismatch at " +
                                         std::to_string(i));
            states[i].m = tensor_from_json(os[i].at("m"));
            states[i].v = tensor_from_json(os[i].at("v"));
            states[i].step_count = os[i].at("step_count").get<long>();
            states[i].beta1 = os[i].at("beta1").get<double>();
            states[i].beta2 = os[i].at("beta2").get<double>();
            states[i].eps = os[i].at("eps").get<double>();
        }
    }
}

}  // namespace xc
