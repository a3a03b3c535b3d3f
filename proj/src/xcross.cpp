#include "xc/xcross.hpp"

#include <algorithm>
#include <cmath>

namespace xc {

void XCrossConfig::validate(std::size_t L) const {
    if (n < 2) throw std::invalid_argument("XCrossConfig: n must be >= 2");
    if (integrated_layers.empty())
        throw std::invalid_argument("XCrossConfig: integrated_layers must be non-empty");
    // contiguous block ending at the top layer
    for (std::size_t i = 0; i < integrated_layers.size(); ++i) {
        std::size_t expect = L - integrated_layers.size() + 1 + i;
        if (integrated_layers[i] != expect)
            throw std::invalid_argument(
                "XCrossConfig: integrated_layers must be a contiguous top block of 1.." +
                std::to_string(L));
    }
}

std::vector<std::size_t> XCrossConfig::top_layers(std::size_t L, std::size_t c) {
    if (c > L) throw std::invalid_argument("top_layers: count exceeds layer count");
    std::vector<std::size_t> out;
    for (std::size_t l = L - c + 1; l <= L; ++l) out.push_back(l);
    return out;
}

std::size_t z_direct_index(std::size_t n, std::size_t m, std::size_t m_prime) {
    if (m == m_prime || m >= n || m_prime >= n)
        throw std::invalid_argument("z_direct_index: bad domain pair");
    const std::size_t offset = m_prime < m ? m_prime : m_prime - 1;
    return m * 2 * (n - 1) + offset;
}

std::size_t z_interact_index(std::size_t n, std::size_t m, std::size_t m_prime) {
    if (m == m_prime || m >= n || m_prime >= n)
        throw std::invalid_argument("z_interact_index: bad domain pair");
    const std::size_t offset = m_prime < m ? m_prime : m_prime - 1;
    return m * 2 * (n - 1) + (n - 1) + offset;
}

void PoolerScorer::init(std::size_t d, RandomSource& rng) {
    W_p = Parameter("head.W_p", Tensor(d, d));
    for (double& v : W_p.value.data) v = rng.normal(0.0, 0.02);
    b_p = Parameter("head.b_p", Tensor({d}));
    V_c = Parameter("head.V_c", Tensor(1, d));
    for (double& v : V_c.value.data) v = rng.normal(0.0, 0.02);
    b_c = Parameter("head.b_c", Tensor(1, 1));
}

Tensor PoolerScorer::pool(const Tensor& h_final) const {
    if (h_final.rows() == 0) throw std::invalid_argument("pool: empty sequence");
    const std::size_t d = h_final.cols();
    Tensor out({d});
    for (std::size_t j = 0; j < d; ++j) {
        double acc = b_p.value[j];
        for (std::size_t i = 0; i < d; ++i) acc += h_final.at(0, i) * W_p.value.at(i, j);
        out[j] = gelu(acc);
    }
    return out;
}

double PoolerScorer::score(const Tensor& h_pooled) const {
    double acc = b_c.value[0];
    for (std::size_t j = 0; j < h_pooled.numel(); ++j) acc += V_c.value[j] * h_pooled[j];
    return acc;
}

Var PoolerScorer::forward(Tape& tape, Var h_final) {
    if (h_final.rows() == 0) throw std::invalid_argument("pool: empty sequence");
    Var cls = tape.row(h_final, 0);
    Var pooled = tape.gelu(
        tape.add_row_broadcast(tape.matmul(cls, tape.leaf(W_p)), tape.leaf(b_p)));
    return tape.add(tape.dot(pooled, tape.leaf(V_c)), tape.leaf(b_c));
}

Tensor compute_z(const Tensor& w_concat, const std::vector<Tensor>& h) {
    const std::size_t n = h.size();
    const std::size_t d = h[0].numel();
    if (w_concat.cols() != n * d)
        throw std::invalid_argument("compute_z: W_concat " + w_concat.shape_str() +
                                    " vs n*d=" + std::to_string(n * d));
    Tensor z({w_concat.rows()});
    for (std::size_t i = 0; i < w_concat.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t m = 0; m < n; ++m)
            for (std::size_t j = 0; j < d; ++j) acc += w_concat.at(i, m * d + j) * h[m][j];
        z[i] = acc;
    }
    return z;
}

Tensor refine(const std::vector<Tensor>& h, const Tensor& z, std::size_t m, double beta,
              double gamma) {
    const std::size_t n = h.size();
    Tensor out = h[m];
    for (std::size_t mp = 0; mp < n; ++mp) {
        if (mp == m) continue;
        const double zd = z[z_direct_index(n, m, mp)];
        const double zi = z[z_interact_index(n, m, mp)];
        for (std::size_t j = 0; j < out.numel(); ++j)
            out[j] += beta * zd * h[mp][j] + gamma * zi * (h[m][j] - h[mp][j]);
    }
    return out;
}

ParamBreakdown trainable_param_count(const XCrossConfig& cfg) {
    ParamBreakdown b;
    b.per_layer_integrator = 2 * cfg.n * (cfg.n - 1) * cfg.n * cfg.d;
    b.integrator_total = b.per_layer_integrator * cfg.integrated_layers.size();
    b.mixer = cfg.n;
    b.head = cfg.d * cfg.d + 2 * cfg.d + 1;
    b.total = b.integrator_total + b.mixer + b.head;
    return b;
}

void XCrossModel::init(const XCrossConfig& c, TransformerEncoder* encoder,
                       std::vector<LoraSet*> source_sets, RandomSource& rng) {
    if (source_sets.size() != c.n)
        throw std::invalid_argument("XCrossModel: expected " + std::to_string(c.n) +
                                    " source sets, got " + std::to_string(source_sets.size()));
    c.validate(encoder->cfg.L);
    cfg = c;
    cfg.d = encoder->cfg.d;
    base = encoder;
    sources = std::move(source_sets);
    integrators.clear();
    const std::size_t zrows = 2 * cfg.n * (cfg.n - 1);
    for (std::size_t l : cfg.integrated_layers) {
        IntegratorLayer il;
        il.layer = l;
        il.W_concat = Parameter("integrator.L" + std::to_string(l) + ".W_concat",
                                Tensor(zrows, cfg.n * cfg.d));
        integrators.push_back(std::move(il));
    }
    mixer.w = Parameter("mixer.w", Tensor({cfg.n}));
    for (double& v : mixer.w.value.data) v = 1.0 / static_cast<double>(cfg.n);
    head.init(cfg.d, rng);
}

void XCrossModel::warm_start(const PoolerScorer& source_head, std::size_t source_index) {
    if (source_index >= cfg.n)
        throw std::invalid_argument("warm_start: source index " + std::to_string(source_index) +
                                    " out of range (n=" + std::to_string(cfg.n) + ")");
    head.W_p.value = source_head.W_p.value;
    head.b_p.value = source_head.b_p.value;
    head.V_c.value = source_head.V_c.value;
    head.b_c.value = source_head.b_c.value;
    for (std::size_t m = 0; m < cfg.n; ++m) mixer.w.value[m] = m == source_index ? 1.0 : 0.0;
}

std::vector<Parameter*> XCrossModel::trainable_params() {
    std::vector<Parameter*> out;
    for (auto& il : integrators) out.push_back(&il.W_concat);
    out.push_back(&mixer.w);
    for (auto* p : head.params()) out.push_back(p);
    return out;
}

IntegratorLayer* XCrossModel::integrator_for(std::size_t layer) {
    for (auto& il : integrators)
        if (il.layer == layer) return &il;
    return nullptr;
}

Var XCrossModel::forward_hidden(Tape& tape, const std::vector<TokenId>& tokens) {
    for (const auto* s : sources)
        if (!s->frozen) throw std::logic_error("xcross_forward: source '" + s->domain_id +
                                               "' is not frozen");
    if (!base->frozen()) throw std::logic_error("xcross_forward: base encoder is not frozen");

    const std::size_t n = cfg.n;
    Var embedded = base->embed(tape, tokens);
    std::vector<Var> streams(n, embedded);
    for (std::size_t l = 1; l <= base->cfg.L; ++l) {
        for (std::size_t m = 0; m < n; ++m)
            streams[m] = base->block(tape, streams[m], l, sources[m]);
        IntegratorLayer* il = integrator_for(l);
        if (!il) continue;

        // Stage 1-2: per-token scaling factors z = W_concat * h_concat
        Var hcat = tape.concat_cols(streams);
        Var z = tape.matmul_nt(hcat, tape.leaf(il->W_concat));  // len x 2n(n-1)

        // Stage 3: refinement with residual; all terms read the
        // pre-refinement states.
        std::vector<Var> refined;
        refined.reserve(n);
        for (std::size_t m = 0; m < n; ++m) {
            Var acc = streams[m];
            for (std::size_t mp = 0; mp < n; ++mp) {
                if (mp == m) continue;
                if (cfg.beta != 0.0) {
                    Var direct = tape.row_scale(streams[mp], z, z_direct_index(n, m, mp));
                    acc = tape.add(acc, tape.scale(direct, cfg.beta));
                }
                if (cfg.gamma != 0.0) {
                    Var diff = tape.sub(streams[m], streams[mp]);
                    Var inter = tape.row_scale(diff, z, z_interact_index(n, m, mp));
                    acc = tape.add(acc, tape.scale(inter, cfg.gamma));
                }
            }
            refined.push_back(acc);
        }
        streams = std::move(refined);
    }

    // Stage 4: weighted summation of the final refined states.
    Var wleaf = tape.leaf(mixer.w);
    Var out = tape.scale_by_entry(streams[0], wleaf, 0);
    for (std::size_t m = 1; m < n; ++m)
        out = tape.add(out, tape.scale_by_entry(streams[m], wleaf, m));
    return out;
}

Var XCrossModel::forward_score(Tape& tape, const std::vector<TokenId>& tokens) {
    return head.forward(tape, forward_hidden(tape, tokens));
}

Tensor XCrossModel::xcross_forward(const std::vector<TokenId>& tokens) {
    Tape tape;
    return forward_hidden(tape, tokens).value();
}

}  // namespace xc
