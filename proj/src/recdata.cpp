#include "xc/recdata.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "xc/hash.hpp"

using nlohmann::json;

namespace xc {

void GeneratorConfig::validate() const {
    if (domains < 1) throw std::invalid_argument("GeneratorConfig: domains must be >= 1");
    if (title_tokens < 2) throw std::invalid_argument("GeneratorConfig: title_tokens must be >= 2");
    if (hist_min < 1 || hist_max < hist_min)
        throw std::invalid_argument("GeneratorConfig: bad history range");
    if (ring_spread > 0 && (domains < 2 || categories < 3))
        throw std::invalid_argument(
            "GeneratorConfig: ring_spread needs >= 2 domains and >= 3 categories");
    if (tmat.size() != categories)
        throw std::invalid_argument("GeneratorConfig: tmat must be K x K");
    for (const auto& row : tmat) {
        if (row.size() != categories)
            throw std::invalid_argument("GeneratorConfig: tmat must be K x K");
        double s = 0.0;
        for (double v : row) s += v;
        if (std::abs(s - 1.0) > 1e-9)
            throw std::invalid_argument("GeneratorConfig: tmat row does not sum to 1 (sum=" +
                                        std::to_string(s) + ")");
    }
}

std::uint64_t GeneratorConfig::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](auto v) { h = fnv1a(&v, sizeof(v), h); };
    mix(domains);
    mix(categories);
    mix(items_per_domain);
    mix(zipf_s);
    mix(title_tokens);
    mix(domain_local_vocab);
    mix(users_per_domain);
    mix(hist_min);
    mix(hist_max);
    mix(negatives);
    mix(neg_exponent);
    if (ring_spread) mix(ring_spread);  // keep hashes of shared-tmat configs stable
    for (const auto& row : tmat)
        for (double v : row) mix(v);
    return h;
}

std::vector<std::vector<double>> ring_tmat(std::size_t k, std::size_t offset) {
    std::vector<std::vector<double>> t(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < k; ++i) {
        if (k == 1) {
            t[i][i] = 1.0;
            continue;
        }
        const double rest = k > 2 ? 0.20 / static_cast<double>(k - 2) : 0.0;
        for (std::size_t j = 0; j < k; ++j) t[i][j] = rest;
        t[i][(i + offset) % k] = 0.55;
        t[i][i] = k > 2 ? 0.25 : 0.45;
    }
    return t;
}

std::vector<std::vector<double>> default_tmat(std::size_t k) {
    return ring_tmat(k, 1);
}

std::vector<std::vector<double>> domain_tmat(const GeneratorConfig& cfg, std::size_t dom) {
    if (cfg.ring_spread == 0)
        return cfg.tmat.empty() ? default_tmat(cfg.categories) : cfg.tmat;
    const std::size_t k = cfg.categories;
    if (dom + 1 < cfg.domains)
        return ring_tmat(k, 1 + (dom * cfg.ring_spread) % (k - 1));
    // last domain: uniform mixture of the source domains' dynamics
    std::vector<std::vector<double>> m(k, std::vector<double>(k, 0.0));
    const double w = 1.0 / static_cast<double>(cfg.domains - 1);
    for (std::size_t s = 0; s + 1 < cfg.domains; ++s) {
        auto t = ring_tmat(k, 1 + (s * cfg.ring_spread) % (k - 1));
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) m[i][j] += w * t[i][j];
    }
    return m;
}

const char* split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Valid: return "valid";
        default: return "test";
    }
}

Split split_from_name(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "valid") return Split::Valid;
    if (s == "test") return Split::Test;
    throw std::invalid_argument("unknown split tag '" + s + "'");
}

namespace {

std::size_t sample_discrete(const std::vector<double>& weights, double total, RandomSource& rng) {
    double u = rng.uniform() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        u -= weights[i];
        if (u <= 0.0) return i;
    }
    return weights.size() - 1;
}

}  // namespace

Dataset generate_domains(const GeneratorConfig& cfg_in) {
    GeneratorConfig cfg = cfg_in;
    if (cfg.tmat.empty()) cfg.tmat = default_tmat(cfg.categories);
    cfg.validate();
    Dataset ds;
    ds.cfg = cfg;
    RandomSource rng(cfg.seed);

    const std::size_t k = cfg.categories;
    for (std::size_t dom = 0; dom < cfg.domains; ++dom) {
        DomainData dd;
        dd.catalog.domain = static_cast<std::uint32_t>(dom);
        const auto dmat = domain_tmat(cfg, dom);

        // Catalog: items round-robin over categories, Zipf weight by rank
        // within the category, titles = domain token + shared descriptor +
        // item-unique tokens from the domain-local pool.
        std::vector<std::size_t> rank_in_cat(k, 0);
        for (std::size_t i = 0; i < cfg.items_per_domain; ++i) {
            Item it;
            it.id = static_cast<std::uint32_t>(i);
            it.domain = static_cast<std::uint32_t>(dom);
            it.category = static_cast<std::uint32_t>(i % k);
            const std::size_t rank = rank_in_cat[it.category]++;
            it.weight = std::pow(static_cast<double>(rank + 1), -cfg.zipf_s);
            it.title.push_back(cfg.domain_token(dom));
            it.title.push_back(cfg.descriptor_token(it.category));
            for (std::size_t t = 2; t < cfg.title_tokens; ++t)
                it.title.push_back(cfg.local_token(dom, rng.uniform_index(cfg.domain_local_vocab)));
            dd.catalog.items.push_back(std::move(it));
        }

        // Per-category item lists for trajectory sampling.
        std::vector<std::vector<std::uint32_t>> by_cat(k);
        std::vector<std::vector<double>> wt_by_cat(k);
        std::vector<double> wt_total(k, 0.0);
        for (const auto& it : dd.catalog.items) {
            by_cat[it.category].push_back(it.id);
            wt_by_cat[it.category].push_back(it.weight);
            wt_total[it.category] += it.weight;
        }

        for (std::size_t u = 0; u < cfg.users_per_domain; ++u) {
            const std::size_t h = rng.uniform_int(cfg.hist_min, cfg.hist_max);
            std::vector<std::uint32_t> traj;
            std::vector<bool> used(dd.catalog.items.size(), false);
            std::size_t cat = rng.uniform_index(k);
            while (traj.size() < h + 1) {
                // draw an unused item from the current category
                std::uint32_t pick = 0;
                bool found = false;
                for (int tries = 0; tries < 64; ++tries) {
                    std::size_t j = sample_discrete(wt_by_cat[cat], wt_total[cat], rng);
                    if (!used[by_cat[cat][j]]) {
                        pick = by_cat[cat][j];
                        found = true;
                        break;
                    }
                }
                if (!found) {
                    for (std::size_t j = 0; j < by_cat[cat].size(); ++j)
                        if (!used[by_cat[cat][j]]) {
                            pick = by_cat[cat][j];
                            found = true;
                            break;
                        }
                }
                if (!found)
                    throw std::runtime_error("generate_domains: category " + std::to_string(cat) +
                                             " exhausted; increase items_per_domain");
                used[pick] = true;
                traj.push_back(pick);
                cat = sample_discrete(dmat[cat], 1.0, rng);
            }

            MultipleChoiceInstance inst;
            inst.user = dom * cfg.users_per_domain + u;
            inst.history.assign(traj.begin(), traj.end() - 1);
            inst.positive = traj.back();
            inst.negatives = sample_negatives(dd.catalog, inst.positive, inst.history,
                                              cfg.negatives, rng, cfg.neg_exponent);
            dd.instances.push_back(std::move(inst));
        }

        split_users(dd.instances, cfg.seed + 0x9e3779b97f4a7c15ULL + dom);
        ds.domains.push_back(std::move(dd));
    }
    return ds;
}

std::vector<std::uint32_t> sample_negatives(const Catalog& catalog, std::uint32_t positive,
                                            const std::vector<std::uint32_t>& history,
                                            std::size_t k, RandomSource& rng, double exponent) {
    std::vector<bool> excluded(catalog.items.size(), false);
    excluded.at(positive) = true;
    for (auto id : history) excluded.at(id) = true;

    std::vector<std::uint32_t> ids;
    std::vector<double> weights;
    double total = 0.0;
    for (const auto& it : catalog.items) {
        if (excluded[it.id]) continue;
        ids.push_back(it.id);
        const double w = std::pow(it.weight, exponent);
        weights.push_back(w);
        total += w;
    }
    if (ids.size() < k)
        throw std::invalid_argument("sample_negatives: catalog too small (" +
                                    std::to_string(ids.size()) + " eligible, need " +
                                    std::to_string(k) + ")");
    std::vector<std::uint32_t> out;
    out.reserve(k);
    for (std::size_t draw = 0; draw < k; ++draw) {
        std::size_t j = sample_discrete(weights, total, rng);
        out.push_back(ids[j]);
        total -= weights[j];
        ids.erase(ids.begin() + j);
        weights.erase(weights.begin() + j);
    }
    return out;
}

std::optional<std::vector<TokenId>> build_prompt(const std::vector<std::uint32_t>& history,
                                                 std::uint32_t candidate, const Catalog& catalog,
                                                 std::size_t truncate, std::size_t max_len) {
    std::vector<TokenId> out;
    out.push_back(kClsToken);
    auto push_title = [&](std::uint32_t id) {
        const auto& title = catalog.item(id).title;
        const std::size_t n = std::min(title.size(), truncate);
        for (std::size_t i = 0; i < n; ++i) out.push_back(title[i]);
    };
    for (auto id : history) {
        push_title(id);
        out.push_back(kItemSepToken);
    }
    push_title(candidate);
    out.push_back(kSepToken);
    if (out.size() > max_len) return std::nullopt;
    return out;
}

void split_users(std::vector<MultipleChoiceInstance>& instances, std::uint64_t seed) {
    std::vector<std::uint64_t> users;
    for (const auto& i : instances) users.push_back(i.user);
    std::sort(users.begin(), users.end());
    users.erase(std::unique(users.begin(), users.end()), users.end());

    RandomSource rng(seed);
    for (std::size_t i = users.size(); i > 1; --i)
        std::swap(users[i - 1], users[rng.uniform_index(i)]);

    const std::size_t n = users.size();
    const std::size_t n_valid = n / 5;
    const std::size_t n_test = n / 5;
    std::vector<std::pair<std::uint64_t, Split>> tags;
    for (std::size_t i = 0; i < n; ++i) {
        Split s = Split::Train;
        if (i < n_valid)
            s = Split::Valid;
        else if (i < n_valid + n_test)
            s = Split::Test;
        tags.emplace_back(users[i], s);
    }
    std::sort(tags.begin(), tags.end());
    for (auto& inst : instances) {
        auto it = std::lower_bound(tags.begin(), tags.end(),
                                   std::make_pair(inst.user, Split::Train),
                                   [](const auto& a, const auto& b) { return a.first < b.first; });
        inst.split = it->second;
    }
}

namespace {

constexpr int kSchemaVersion = 1;

json header_json(const GeneratorConfig& cfg, const char* kind) {
    return json{{"schema_version", kSchemaVersion},
                {"kind", kind},
                {"config_hash", hash_hex(cfg.hash())},
                {"seed", cfg.seed}};
}

void check_header(const json& h, const char* kind, const std::string& path) {
    if (!h.contains("schema_version") || h["schema_version"].get<int>() != kSchemaVersion)
        throw std::runtime_error(path + ": unsupported schema version");
    if (!h.contains("kind") || h["kind"].get<std::string>() != kind)
        throw std::runtime_error(path + ": wrong file kind");
}

void check_known_fields(const json& j, std::initializer_list<const char*> known,
                        const std::string& path, std::size_t line) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known)
            if (it.key() == k) ok = true;
        if (!ok)
            throw std::runtime_error(path + ":" + std::to_string(line) + ": unknown field '" +
                                     it.key() + "' (schema version mismatch?)");
    }
}

}  // namespace

void write_instances(const std::string& path, const std::vector<MultipleChoiceInstance>& instances,
                     const GeneratorConfig& cfg) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_instances: cannot open " + path);
    f << header_json(cfg, "instances").dump() << "\n";
    for (const auto& i : instances) {
        json j{{"user", i.user},
               {"history", i.history},
               {"positive", i.positive},
               {"negatives", i.negatives},
               {"split", split_name(i.split)}};
        f << j.dump() << "\n";
    }
}

std::vector<MultipleChoiceInstance> read_instances(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_instances: cannot open " + path);
    std::string line;
    std::size_t lineno = 0;
    std::vector<MultipleChoiceInstance> out;
    bool have_header = false;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": malformed line: " + e.what());
        }
        if (!have_header) {
            check_header(j, "instances", path);
            have_header = true;
            continue;
        }
        check_known_fields(j, {"user", "history", "positive", "negatives", "split"}, path, lineno);
        MultipleChoiceInstance i;
        i.user = j.at("user").get<std::uint64_t>();
        i.history = j.at("history").get<std::vector<std::uint32_t>>();
        i.positive = j.at("positive").get<std::uint32_t>();
        i.negatives = j.at("negatives").get<std::vector<std::uint32_t>>();
        i.split = split_from_name(j.at("split").get<std::string>());
        out.push_back(std::move(i));
    }
    return out;
}

void write_catalog(const std::string& path, const Catalog& catalog, const GeneratorConfig& cfg) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_catalog: cannot open " + path);
    json h = header_json(cfg, "catalog");
    h["domain"] = catalog.domain;
    f << h.dump() << "\n";
    for (const auto& it : catalog.items) {
        json j{{"id", it.id},
               {"domain", it.domain},
               {"category", it.category},
               {"weight", it.weight},
               {"title", it.title}};
        f << j.dump() << "\n";
    }
}

Catalog read_catalog(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_catalog: cannot open " + path);
    std::string line;
    std::size_t lineno = 0;
    Catalog out;
    bool have_header = false;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line);
        if (!have_header) {
            check_header(j, "catalog", path);
            out.domain = j.at("domain").get<std::uint32_t>();
            have_header = true;
            continue;
        }
        check_known_fields(j, {"id", "domain", "category", "weight", "title"}, path, lineno);
        Item it;
        it.id = j.at("id").get<std::uint32_t>();
        it.domain = j.at("domain").get<std::uint32_t>();
        it.category = j.at("category").get<std::uint32_t>();
        it.weight = j.at("weight").get<double>();
        it.title = j.at("title").get<std::vector<TokenId>>();
        out.items.push_back(std::move(it));
    }
    return out;
}

void write_dataset(const std::string& dir, const Dataset& ds) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    for (std::size_t m = 0; m < ds.domains.size(); ++m) {
        const std::string tag = std::to_string(m);
        write_catalog(dir + "/catalog_" + tag + ".jsonl", ds.domains[m].catalog, ds.cfg);
        write_instances(dir + "/instances_" + tag + ".jsonl", ds.domains[m].instances, ds.cfg);
    }
}

Dataset read_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    Dataset ds;
    for (std::size_t m = 0;; ++m) {
        const std::string cpath = dir + "/catalog_" + std::to_string(m) + ".jsonl";
        if (!fs::exists(cpath)) break;
        DomainData dd;
        dd.catalog = read_catalog(cpath);
        dd.instances = read_instances(dir + "/instances_" + std::to_string(m) + ".jsonl");
        ds.domains.push_back(std::move(dd));
    }
    if (ds.domains.empty()) throw std::runtime_error("read_dataset: no catalogs under " + dir);
    return ds;
}

std::vector<MultipleChoiceInstance> filter_split(const std::vector<MultipleChoiceInstance>& all,
                                                 Split s) {
    std::vector<MultipleChoiceInstance> out;
    for (const auto& i : all)
        if (i.split == s) out.push_back(i);
    return out;
}

}  // namespace xc
