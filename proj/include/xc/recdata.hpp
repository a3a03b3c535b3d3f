#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xc/encoder.hpp"
#include "xc/random.hpp"

namespace xc {

/// Fixed special token ids; shared descriptor tokens follow, then domain
/// tokens, then per-domain item-unique pools.
constexpr TokenId kClsToken = 0;
constexpr TokenId kSepToken = 1;
constexpr TokenId kItemSepToken = 2;
constexpr TokenId kSpecialTokens = 3;

struct GeneratorConfig {
    std::size_t domains = 3;           // M
    std::size_t categories = 8;        // K
    std::size_t items_per_domain = 300;
    double zipf_s = 1.0;               // popularity exponent within category
    std::size_t title_tokens = 4;      // T >= 2
    std::size_t domain_local_vocab = 400;  // item-unique token pool per domain
    std::vector<std::vector<double>> tmat;  // K x K shared category transitions
    // When nonzero, domains get distinct category dynamics instead of the
    // shared tmat: domain m < M-1 follows a ring with next-offset
    // 1 + m*ring_spread (mod K-1), and the last domain follows the uniform
    // mixture of the others. Gives each source domain its own transferable
    // pattern and makes the last (target) domain benefit from combining them.
    std::size_t ring_spread = 0;
    std::size_t users_per_domain = 2000;
    std::size_t hist_min = 5;
    std::size_t hist_max = 15;
    std::size_t negatives = 29;
    double neg_exponent = 1.0;         // popularity exponent for negative sampling
    std::uint64_t seed = 0;

    std::size_t vocab_size() const {
        return kSpecialTokens + categories + domains + domains * domain_local_vocab;
    }
    TokenId descriptor_token(std::size_t category) const {
        return static_cast<TokenId>(kSpecialTokens + category);
    }
    TokenId domain_token(std::size_t domain) const {
        return static_cast<TokenId>(kSpecialTokens + categories + domain);
    }
    TokenId local_token(std::size_t domain, std::size_t i) const {
        return static_cast<TokenId>(kSpecialTokens + categories + domains +
                                    domain * domain_local_vocab + i);
    }

    void validate() const;
    std::uint64_t hash() const;
};

/// Ring-biased category transition matrix: mass 0.55 on the next
/// category, 0.25 on staying, remainder spread uniformly.
std::vector<std::vector<double>> default_tmat(std::size_t k);

/// Ring transitions: 0.55 to (i+offset) mod k, 0.25 stay, rest uniform.
std::vector<std::vector<double>> ring_tmat(std::size_t k, std::size_t offset);

/// The K x K matrix actually driving domain `dom` (see ring_spread).
std::vector<std::vector<double>> domain_tmat(const GeneratorConfig& cfg, std::size_t dom);

struct Item {
    std::uint32_t id = 0;        // index within the domain catalog
    std::uint32_t domain = 0;
    std::uint32_t category = 0;
    double weight = 1.0;         // Zipf popularity within category
    std::vector<TokenId> title;  // [domain token, descriptor token, unique tokens...]
};

struct Catalog {
    std::uint32_t domain = 0;
    std::vector<Item> items;

    const Item& item(std::uint32_t id) const { return items.at(id); }
};

enum class Split { Train, Valid, Test };

const char* split_name(Split s);
Split split_from_name(const std::string& s);

struct MultipleChoiceInstance {
    std::uint64_t user = 0;
    std::vector<std::uint32_t> history;    // ordered, unique, 5..15 items
    std::uint32_t positive = 0;
    std::vector<std::uint32_t> negatives;  // pre-sampled, fixed per dataset seed
    Split split = Split::Train;

    bool operator==(const MultipleChoiceInstance&) const = default;
};

struct DomainData {
    Catalog catalog;
    std::vector<MultipleChoiceInstance> instances;
};

struct Dataset {
    GeneratorConfig cfg;
    std::vector<DomainData> domains;
};

/// Full synthetic generation: catalogs, Markov-chain user trajectories,
/// pre-sampled negatives, user splits. Deterministic per cfg.seed.
Dataset generate_domains(const GeneratorConfig& cfg);

/// Weighted sampling without replacement, excluding positive and history.
std::vector<std::uint32_t> sample_negatives(const Catalog& catalog, std::uint32_t positive,
                                            const std::vector<std::uint32_t>& history,
                                            std::size_t k, RandomSource& rng,
                                            double exponent = 1.0);

/// [CLS] (title [ISEP])* candidate-title [SEP]; nullopt when the prompt
/// would exceed max_len.
std::optional<std::vector<TokenId>> build_prompt(const std::vector<std::uint32_t>& history,
                                                 std::uint32_t candidate, const Catalog& catalog,
                                                 std::size_t truncate = 8,
                                                 std::size_t max_len = 256);

/// Tags instances with train/valid/test by disjoint user sets, 3:1:1.
void split_users(std::vector<MultipleChoiceInstance>& instances, std::uint64_t seed);

void write_instances(const std::string& path, const std::vector<MultipleChoiceInstance>& instances,
                     const GeneratorConfig& cfg);
std::vector<MultipleChoiceInstance> read_instances(const std::string& path);

void write_catalog(const std::string& path, const Catalog& catalog, const GeneratorConfig& cfg);
Catalog read_catalog(const std::string& path);

void write_dataset(const std::string& dir, const Dataset& ds);
Dataset read_dataset(const std::string& dir);

std::vector<MultipleChoiceInstance> filter_split(const std::vector<MultipleChoiceInstance>& all,
                                                 Split s);

}  // namespace xc
