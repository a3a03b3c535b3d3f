#include "xc/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace xc {

namespace {

template <typename T>
void pull(const ordered_json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void from_json_section(const ordered_json& j, GeneratorConfig& g) {
    pull(j, "domains", g.domains);
    pull(j, "categories", g.categories);
    pull(j, "items_per_domain", g.items_per_domain);
    pull(j, "zipf_s", g.zipf_s);
    pull(j, "title_tokens", g.title_tokens);
    pull(j, "domain_local_vocab", g.domain_local_vocab);
    pull(j, "tmat", g.tmat);
    pull(j, "ring_spread", g.ring_spread);
    pull(j, "users_per_domain", g.users_per_domain);
    pull(j, "hist_min", g.hist_min);
    pull(j, "hist_max", g.hist_max);
    pull(j, "negatives", g.negatives);
    pull(j, "neg_exponent", g.neg_exponent);
    pull(j, "seed", g.seed);
}

void from_json_section(const ordered_json& j, EncoderConfig& e) {
    pull(j, "L", e.L);
    pull(j, "d", e.d);
    pull(j, "H", e.H);
    pull(j, "d_ff", e.d_ff);
    pull(j, "V", e.V);
    pull(j, "max_len", e.max_len);
    pull(j, "eps", e.eps);
}

void from_json_section(const ordered_json& j, TrainingConfig& t) {
    pull(j, "lr", t.lr);
    pull(j, "weight_decay", t.weight_decay);
    pull(j, "epochs", t.epochs);
    pull(j, "negatives", t.negatives);
    pull(j, "seed", t.seed);
    pull(j, "grad_clip", t.grad_clip);
    pull(j, "early_stop", t.early_stop);
    pull(j, "patience", t.patience);
    pull(j, "val_max_instances", t.val_max_instances);
    pull(j, "truncate", t.truncate);
    pull(j, "max_len", t.max_len);
    pull(j, "lora_rank", t.lora_rank);
    pull(j, "lora_alpha", t.lora_alpha);
}

ordered_json to_json(const RunConfig& c) {
    ordered_json j;
    j["seed"] = c.seed;
    j["gen"] = ordered_json{{"domains", c.gen.domains},
                            {"categories", c.gen.categories},
                            {"items_per_domain", c.gen.items_per_domain},
                            {"zipf_s", c.gen.zipf_s},
                            {"title_tokens", c.gen.title_tokens},
                            {"domain_local_vocab", c.gen.domain_local_vocab},
                            {"ring_spread", c.gen.ring_spread},
                            {"users_per_domain", c.gen.users_per_domain},
                            {"hist_min", c.gen.hist_min},
                            {"hist_max", c.gen.hist_max},
                            {"negatives", c.gen.negatives},
                            {"neg_exponent", c.gen.neg_exponent},
                            {"seed", c.gen.seed}};
    if (!c.gen.tmat.empty()) j["gen"]["tmat"] = c.gen.tmat;
    j["enc"] = ordered_json{{"L", c.enc.L},       {"d", c.enc.d},
                            {"H", c.enc.H},       {"d_ff", c.enc.d_ff},
                            {"V", c.enc.V},       {"max_len", c.enc.max_len},
                            {"eps", c.enc.eps}};
    j["train"] = ordered_json{{"lr", c.train.lr},
                              {"weight_decay", c.train.weight_decay},
                              {"epochs", c.train.epochs},
                              {"negatives", c.train.negatives},
                              {"seed", c.train.seed},
                              {"grad_clip", c.train.grad_clip},
                              {"early_stop", c.train.early_stop},
                              {"patience", c.train.patience},
                              {"val_max_instances", c.train.val_max_instances},
                              {"truncate", c.train.truncate},
                              {"max_len", c.train.max_len},
                              {"lora_rank", c.train.lora_rank},
                              {"lora_alpha", c.train.lora_alpha}};
    j["beta"] = c.beta;
    j["gamma"] = c.gamma;
    j["n_sources"] = c.n_sources;
    j["integrate_top"] = c.integrate_top;
    return j;
}

void apply_overrides(ordered_json& j, const std::vector<std::string>& overrides) {
    for (const auto& ov : overrides) {
        auto eq = ov.find('=');
        if (eq == std::string::npos || eq == 0)
            throw std::invalid_argument("override must be key=value, got '" + ov + "'");
        std::string key = ov.substr(0, eq);
        std::string raw = ov.substr(eq + 1);
        // dotted path -> json pointer
        std::string ptr = "/";
        for (char ch : key) ptr += (ch == '.') ? '/' : ch;
        ordered_json value;
        try {
            value = ordered_json::parse(raw);
        } catch (const ordered_json::parse_error&) {
            value = raw;  // bare string
        }
        j[ordered_json::json_pointer(ptr)] = std::move(value);
    }
}

}  // namespace

XCrossConfig RunConfig::xcross_config() const {
    XCrossConfig x;
    x.n = n_sources;
    x.beta = beta;
    x.gamma = gamma;
    x.d = enc.d;
    x.integrated_layers = XCrossConfig::top_layers(enc.L, integrate_top);
    return x;
}

EncoderConfig RunConfig::encoder_config() const {
    EncoderConfig e = enc;
    if (e.V == 0) e.V = gen.vocab_size();
    return e;
}

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
    ordered_json j = ordered_json::object();
    if (!path.empty()) {
        std::ifstream f(path);
        if (!f) throw std::runtime_error("config file not found: " + path);
        try {
            f >> j;
        } catch (const ordered_json::parse_error& e) {
            throw std::runtime_error("config parse error in " + path + ": " + e.what());
        }
        if (!j.is_object()) throw std::runtime_error("config root must be an object: " + path);
    }
    apply_overrides(j, overrides);

    RunConfig c;
    pull(j, "seed", c.seed);
    if (const char* env = std::getenv("XC_SEED"); env && !j.contains("seed"))
        c.seed = std::strtoull(env, nullptr, 10);
    if (j.contains("gen")) from_json_section(j.at("gen"), c.gen);
    if (j.contains("enc")) from_json_section(j.at("enc"), c.enc);
    if (j.contains("train")) from_json_section(j.at("train"), c.train);
    pull(j, "beta", c.beta);
    pull(j, "gamma", c.gamma);
    pull(j, "n_sources", c.n_sources);
    pull(j, "integrate_top", c.integrate_top);

    // top-level seed flows down unless a section pinned its own
    if (!(j.contains("gen") && j.at("gen").contains("seed"))) c.gen.seed = c.seed;
    if (!(j.contains("train") && j.at("train").contains("seed"))) c.train.seed = c.seed;

    if (c.gen.tmat.empty()) c.gen.tmat = default_tmat(c.gen.categories);
    if (c.integrate_top > c.enc.L)
        throw std::runtime_error("integrate_top exceeds encoder layer count");
    c.gen.validate();
    c.encoder_config().validate();
    c.xcross_config().validate(c.enc.L);
    return c;
}

std::string run_config_json(const RunConfig& cfg) { return to_json(cfg).dump(1) + "\n"; }

void prepare_run_dir(const std::string& dir, const RunConfig& cfg, bool force) {
    fs::path p(dir);
    if (fs::exists(p) && !force)
        throw std::runtime_error("run directory already exists (use --force): " + dir);
    fs::create_directories(p);
    std::ofstream f(p / "config.json");
    if (!f) throw std::runtime_error("cannot write " + (p / "config.json").string());
    f << run_config_json(cfg);
}

}  // namespace xc
