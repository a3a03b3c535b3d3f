#include "xc/lora.hpp"

#include "xc/hash.hpp"

namespace xc {

LoraAdapter* LoraSet::find(std::size_t layer, ProjTag tag) {
    for (auto& a : adapters)
        if (a.layer == layer && a.tag == tag) return &a;
    return nullptr;
}

const LoraAdapter* LoraSet::find(std::size_t layer, ProjTag tag) const {
    for (const auto& a : adapters)
        if (a.layer == layer && a.tag == tag) return &a;
    return nullptr;
}

void LoraSet::set_frozen(bool f) {
    frozen = f;
    for (auto& a : adapters) {
        a.A.trainable = !f;
        a.B.trainable = !f;
    }
}

std::vector<Parameter*> LoraSet::params() {
    std::vector<Parameter*> out;
    for (auto& a : adapters) {
        out.push_back(&a.A);
        out.push_back(&a.B);
    }
    return out;
}

std::uint64_t LoraSet::weights_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& a : adapters) {
        h = hash_tensor(a.A.value, h);
        h = hash_tensor(a.B.value, h);
    }
    return h;
}

Tensor lora_apply(const Tensor& w, const LoraAdapter& adapter, const Tensor& x) {
    const std::size_t d = w.rows();
    if (w.cols() != x.numel() || adapter.A.value.rows() != w.cols() ||
        adapter.B.value.cols() != d)
        throw std::invalid_argument("lora_apply: shape mismatch W" + w.shape_str() + " A" +
                                    adapter.A.value.shape_str() + " B" +
                                    adapter.B.value.shape_str() + " x" + x.shape_str());
    const double s = adapter.scaling();
    // Bx, then A(Bx), then Wx + s*A(Bx)
    const std::size_t r = adapter.rank;
    std::vector<double> bx(r, 0.0);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < x.numel(); ++j) bx[i] += adapter.B.value.at(i, j) * x[j];
    Tensor y({d});
    for (std::size_t i = 0; i < d; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < x.numel(); ++j) acc += w.at(i, j) * x[j];
        for (std::size_t k = 0; k < r; ++k) acc += s * adapter.A.value.at(i, k) * bx[k];
        y[i] = acc;
    }
    return y;
}

LoraAdapter init_lora(std::size_t d, std::size_t r, double alpha, std::uint64_t seed) {
    if (r >= d)
        throw std::invalid_argument("init_lora: rank " + std::to_string(r) +
                                    " must be < width " + std::to_string(d));
    RandomSource rng(seed);
    LoraAdapter a;
    a.rank = r;
    a.alpha = alpha;
    a.A = Parameter("lora.A", Tensor(d, r));
    a.B = Parameter("lora.B", Tensor(r, d));
    for (double& v : a.A.value.data) v = rng.normal(0.0, 0.02);
    return a;
}

LoraSet init_lora_set(const std::string& domain_id, std::size_t layers, std::size_t d,
                      std::size_t r, double alpha, std::uint64_t seed) {
    LoraSet set;
    set.domain_id = domain_id;
    RandomSource rng(seed);
    for (std::size_t l = 1; l <= layers; ++l) {
        for (ProjTag tag : {ProjTag::Query, ProjTag::Value}) {
            LoraAdapter a = init_lora(d, r, alpha, rng.next_u64());
            a.layer = l;
            a.tag = tag;
            a.A.name = domain_id + ".L" + std::to_string(l) + "." + proj_tag_name(tag) + ".A";
            a.B.name = domain_id + ".L" + std::to_string(l) + "." + proj_tag_name(tag) + ".B";
            set.adapters.push_back(std::move(a));
        }
    }
    return set;
}

std::size_t trainable_lora_params(const LoraSet& set) {
    std::size_t n = 0;
    for (const auto& a : set.adapters) n += a.A.value.numel() + a.B.value.numel();
    return n;
}

}  // namespace xc
