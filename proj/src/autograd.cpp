#include "xc/autograd.hpp"

#include <cmath>

namespace xc {

namespace {

// C += A * B
void addmm_nn(Tensor& c, const Tensor& a, const Tensor& b) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = &c.data[i * n];
        const double* ai = &a.data[i * k];
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = ai[kk];
            const double* bk = &b.data[kk * n];
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bk[j];
        }
    }
}

// C += A * B^T   (A: m x k, B: n x k, C: m x n)
void addmm_nt(Tensor& c, const Tensor& a, const Tensor& b) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = &a.data[i * k];
        double* ci = &c.data[i * n];
        for (std::size_t j = 0; j < n; ++j) {
            const double* bj = &b.data[j * k];
            double acc = 0.0;
            for (std::size_t kk = 0; kk < k; ++kk) acc += ai[kk] * bj[kk];
            ci[j] += acc;
        }
    }
}

// C += A^T * B   (A: m x k, B: m x n, C: k x n)
void addmm_tn(Tensor& c, const Tensor& a, const Tensor& b) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = &a.data[i * k];
        const double* bi = &b.data[i * n];
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = ai[kk];
            if (av == 0.0) continue;
            double* ck = &c.data[kk * n];
            for (std::size_t j = 0; j < n; ++j) ck[j] += av * bi[j];
        }
    }
}

}  // namespace

Var Tape::push(Tensor value, bool needs_grad, std::function<void(Tape&, Node&)> bw) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    n.backward = std::move(bw);
    nodes_.push_back(std::move(n));
    return Var{this, nodes_.size() - 1};
}

Tensor& Tape::grad_of(std::size_t i) {
    Node& n = nodes_[i];
    if (n.grad.shape.empty() && !n.value.shape.empty()) n.grad = Tensor(n.value.shape);
    return n.grad;
}

Var Tape::leaf(Parameter& p) {
    Var v = push(p.value, p.trainable, nullptr);
    nodes_[v.idx].leaf = &p;
    return v;
}

Var Tape::constant(Tensor t) { return push(std::move(t), false, nullptr); }

Var Tape::add(Var a, Var b) {
    check_same_shape(a.value(), b.value(), "add");
    Tensor out = a.value();
    const Tensor& bv = b.value();
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += bv[i];
    bool ng = a.value().numel() > 0;
    std::size_t ai = a.idx, bi = b.idx;
    return push(std::move(out), ng, [ai, bi](Tape& t, Node& n) {
        if (t.nodes_[ai].needs_grad) {
            Tensor& ga = t.grad_of(ai);
            for (std::size_t i = 0; i < n.grad.numel(); ++i) ga[i] += n.grad[i];
        }
        if (t.nodes_[bi].needs_grad) {
            Tensor& gb = t.grad_of(bi);
            for (std::size_t i = 0; i < n.grad.numel(); ++i) gb[i] += n.grad[i];
        }
    });
}

Var Tape::sub(Var a, Var b) {
    check_same_shape(a.value(), b.value(), "sub");
    Tensor out = a.value();
    const Tensor& bv = b.value();
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= bv[i];
    std::size_t ai = a.idx, bi = b.idx;
    return push(std::move(out), true, [ai, bi](Tape& t, Node& n) {
        if (t.nodes_[ai].needs_grad) {
            Tensor& ga = t.grad_of(ai);
            for (std::size_t i = 0; i < n.grad.numel(); ++i) ga[i] += n.grad[i];
        }
        if (t.nodes_[bi].needs_grad) {
            Tensor& gb = t.grad_of(bi);
            for (std::size_t i = 0; i < n.grad.numel(); ++i) gb[i] -= n.grad[i];
        }
    });
}

Var Tape::scale(Var a, double c) {
    Tensor out = a.value();
    for (double& v : out.data) v *= c;
    std::size_t ai = a.idx;
    return push(std::move(out), true, [ai, c](Tape& t, Node& n) {
        if (!t.nodes_[ai].needs_grad) return;
        Tensor& ga = t.grad_of(ai);
        for (std::size_t i = 0; i < n.grad.numel(); ++i) ga[i] += c * n.grad[i];
    });
}

Var Tape::matmul(Var a, Var b) {
    Tensor out = xc::matmul(a.value(), b.value());
    std::size_t ai = a.idx, bi = b.idx;
    return push(std::move(out), true, [ai, bi](Tape& t, Node& n) {
        if (t.nodes_[ai].needs_grad) addmm_nt(t.grad_of(ai), n.grad, t.nodes_[bi].value);
        if (t.nodes_[bi].needs_grad) addmm_tn(t.grad_of(bi), t.nodes_[ai].value, n.grad);
    });
}

Var Tape::matmul_nt(Var a, Var b) {
    if (a.value().cols() != b.value().cols())
        throw std::invalid_argument("matmul_nt: shape mismatch " + a.value().shape_str() +
                                    " vs " + b.value().shape_str());
    Tensor out(a.value().rows(), b.value().rows());
    addmm_nt(out, a.value(), b.value());
    std::size_t ai = a.idx, bi = b.idx;
    return push(std::move(out), true, [ai, bi](Tape& t, Node& n) {
        if (t.nodes_[ai].needs_grad) addmm_nn(t.grad_of(ai), n.grad, t.nodes_[bi].value);
        if (t.nodes_[bi].needs_grad) addmm_tn(t.grad_of(bi), n.grad, t.nodes_[ai].value);
    });
}

Var Tape::add_row_broadcast(Var m, Var bias) {
    const Tensor& mv = m.value();
    const Tensor& bv = bias.value();
    if (bv.numel() != mv.cols())
        throw std::invalid_argument("add_row_broadcast: bias " + bv.shape_str() +
                                    " vs matrix " + mv.shape_str());
    Tensor out = mv;
    const std::size_t r = mv.rows(), c = mv.cols();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.data[i * c + j] += bv[j];
    std::size_t mi = m.idx, bi = bias.idx;
    return push(std::move(out), true, [mi, bi, r, c](Tape& t, Node& n) {
        if (t.nodes_[mi].needs_grad) {
            Tensor& gm = t.grad_of(mi);
            for (std::size_t i = 0; i < n.grad.numel(); ++i) gm[i] += n.grad[i];
        }
        if (t.nodes_[bi].needs_grad) {
            Tensor& gb = t.grad_of(bi);
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) gb[j] += n.grad.data[i * c + j];
        }
    });
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
    const std::size_t r = parts[0].value().rows();
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p.value().rows() != r) throw std::invalid_argument("concat_cols: row mismatch");
        total += p.value().cols();
    }
    Tensor out(r, total);
    std::size_t off = 0;
    std::vector<std::size_t> idxs;
    std::vector<std::size_t> offs;
    std::vector<std::size_t> widths;
    for (const auto& p : parts) {
        const Tensor& pv = p.value();
        const std::size_t c = pv.cols();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) out.data[i * total + off + j] = pv.data[i * c + j];
        idxs.push_back(p.idx);
        offs.push_back(off);
        widths.push_back(c);
        off += c;
    }
    return push(std::move(out), true, [idxs, offs, widths, r, total](Tape& t, Node& n) {
        for (std::size_t p = 0; p < idxs.size(); ++p) {
            if (!t.nodes_[idxs[p]].needs_grad) continue;
            Tensor& g = t.grad_of(idxs[p]);
            const std::size_t c = widths[p], off2 = offs[p];
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j)
                    g.data[i * c + j] += n.grad.data[i * total + off2 + j];
        }
    });
}

Var Tape::slice_cols(Var m, std::size_t start, std::size_t count) {
    const Tensor& mv = m.value();
    if (start + count > mv.cols()) throw std::invalid_argument("slice_cols: out of range");
    const std::size_t r = mv.rows(), c = mv.cols();
    Tensor out(r, count);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < count; ++j) out.data[i * count + j] = mv.data[i * c + start + j];
    std::size_t mi = m.idx;
    return push(std::move(out), true, [mi, start, count, r, c](Tape& t, Node& n) {
        if (!t.nodes_[mi].needs_grad) return;
        Tensor& g = t.grad_of(mi);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < count; ++j)
                g.data[i * c + start + j] += n.grad.data[i * count + j];
    });
}

Var Tape::row(Var m, std::size_t i) {
    const Tensor& mv = m.value();
    if (i >= mv.rows()) throw std::invalid_argument("row: index out of range");
    const std::size_t c = mv.cols();
    Tensor out(1, c);
    for (std::size_t j = 0; j < c; ++j) out[j] = mv.data[i * c + j];
    std::size_t mi = m.idx;
    return push(std::move(out), true, [mi, i, c](Tape& t, Node& n) {
        if (!t.nodes_[mi].needs_grad) return;
        Tensor& g = t.grad_of(mi);
        for (std::size_t j = 0; j < c; ++j) g.data[i * c + j] += n.grad[j];
    });
}

Var Tape::gather_rows(Var table, std::vector<std::size_t> indices) {
    const Tensor& tv = table.value();
    const std::size_t c = tv.cols();
    Tensor out(indices.size(), c);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= tv.rows()) throw std::invalid_argument("gather_rows: index out of range");
        for (std::size_t j = 0; j < c; ++j) out.data[i * c + j] = tv.data[indices[i] * c + j];
    }
    std::size_t ti = table.idx;
    return push(std::move(out), true, [ti, indices = std::move(indices), c](Tape& t, Node& n) {
        if (!t.nodes_[ti].needs_grad) return;
        Tensor& g = t.grad_of(ti);
        for (std::size_t i = 0; i < indices.size(); ++i)
            for (std::size_t j = 0; j < c; ++j)
                g.data[indices[i] * c + j] += n.grad.data[i * c + j];
    });
}

Var Tape::row_scale(Var m, Var s, std::size_t s_col) {
    const Tensor& mv = m.value();
    const Tensor& sv = s.value();
    if (sv.rows() != mv.rows() || s_col >= sv.cols())
        throw std::invalid_argument("row_scale: scale " + sv.shape_str() + " vs matrix " +
                                    mv.shape_str());
    const std::size_t r = mv.rows(), c = mv.cols(), sc = sv.cols();
    Tensor out(r, c);
    for (std::size_t i = 0; i < r; ++i) {
        const double f = sv.data[i * sc + s_col];
        for (std::size_t j = 0; j < c; ++j) out.data[i * c + j] = f * mv.data[i * c + j];
    }
    std::size_t mi = m.idx, si = s.idx;
    return push(std::move(out), true, [mi, si, s_col, r, c, sc](Tape& t, Node& n) {
        const Tensor& mv2 = t.nodes_[mi].value;
        const Tensor& sv2 = t.nodes_[si].value;
        if (t.nodes_[mi].needs_grad) {
            Tensor& gm = t.grad_of(mi);
            for (std::size_t i = 0; i < r; ++i) {
                const double f = sv2.data[i * sc + s_col];
                for (std::size_t j = 0; j < c; ++j) gm.data[i * c + j] += f * n.grad.data[i * c + j];
            }
        }
        if (t.nodes_[si].needs_grad) {
            Tensor& gs = t.grad_of(si);
            for (std::size_t i = 0; i < r; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < c; ++j)
                    acc += n.grad.data[i * c + j] * mv2.data[i * c + j];
                gs.data[i * sc + s_col] += acc;
            }
        }
    });
}

Var Tape::scale_by_entry(Var m, Var vec, std::size_t idx) {
    const Tensor& vv = vec.value();
    if (idx >= vv.numel()) throw std::invalid_argument("scale_by_entry: index out of range");
    const double f = vv[idx];
    Tensor out = m.value();
    for (double& v : out.data) v *= f;
    std::size_t mi = m.idx, vi = vec.idx;
    return push(std::move(out), true, [mi, vi, idx, f](Tape& t, Node& n) {
        if (t.nodes_[mi].needs_grad) {
            Tensor& gm = t.grad_of(mi);
            for (std::size_t i = 0; i < n.grad.numel(); ++i) gm[i] += f * n.grad[i];
        }
        if (t.nodes_[vi].needs_grad) {
            Tensor& gv = t.grad_of(vi);
            const Tensor& mv = t.nodes_[mi].value;
            double acc = 0.0;
            for (std::size_t i = 0; i < n.grad.numel(); ++i) acc += n.grad[i] * mv[i];
            gv[idx] += acc;
        }
    });
}

Var Tape::dot(Var a, Var b) {
    check_same_shape(a.value(), b.value(), "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.value().numel(); ++i) acc += a.value()[i] * b.value()[i];
    Tensor out(1, 1);
    out[0] = acc;
    std::size_t ai = a.idx, bi = b.idx;
    return push(std::move(out), true, [ai, bi](Tape& t, Node& n) {
        const double g = n.grad[0];
        const Tensor& av = t.nodes_[ai].value;
        const Tensor& bv = t.nodes_[bi].value;
        if (t.nodes_[ai].needs_grad) {
            Tensor& ga = t.grad_of(ai);
            for (std::size_t i = 0; i < bv.numel(); ++i) ga[i] += g * bv[i];
        }
        if (t.nodes_[bi].needs_grad) {
            Tensor& gb = t.grad_of(bi);
            for (std::size_t i = 0; i < av.numel(); ++i) gb[i] += g * av[i];
        }
    });
}

Var Tape::add_scalar(Var a, Var s) { return add(a, s); }

Var Tape::softmax_rows(Var m) {
    Tensor out = xc::softmax_rows(m.value());
    std::size_t mi = m.idx;
    const std::size_t r = out.rows(), c = out.cols();
    return push(std::move(out), true, [mi, r, c](Tape& t, Node& n) {
        if (!t.nodes_[mi].needs_grad) return;
        Tensor& g = t.grad_of(mi);
        const Tensor& y = n.value;
        for (std::size_t i = 0; i < r; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < c; ++j) s += n.grad.data[i * c + j] * y.data[i * c + j];
            for (std::size_t j = 0; j < c; ++j)
                g.data[i * c + j] += y.data[i * c + j] * (n.grad.data[i * c + j] - s);
        }
    });
}

Var Tape::layer_norm(Var x, Var gain, Var bias, double eps) {
    const Tensor& xv = x.value();
    const std::size_t r = xv.rows(), d = xv.cols();
    Tensor out = xc::layer_norm(xv, gain.value(), bias.value(), eps);
    std::size_t xi = x.idx, gi = gain.idx, bi = bias.idx;
    return push(std::move(out), true, [xi, gi, bi, eps, r, d](Tape& t, Node& n) {
        const Tensor& xv2 = t.nodes_[xi].value;
        const Tensor& gv = t.nodes_[gi].value;
        for (std::size_t i = 0; i < r; ++i) {
            const double* xr = &xv2.data[i * d];
            const double* gr = &n.grad.data[i * d];
            double mean = 0.0;
            for (std::size_t j = 0; j < d; ++j) mean += xr[j];
            mean /= static_cast<double>(d);
            double var = 0.0;
            for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
            var /= static_cast<double>(d);
            const double inv = 1.0 / std::sqrt(var + eps);
            // xhat, dxhat, and the two row means needed by the LN backward
            double m1 = 0.0, m2 = 0.0;
            std::vector<double> xhat(d), dxh(d);
            for (std::size_t j = 0; j < d; ++j) {
                xhat[j] = (xr[j] - mean) * inv;
                dxh[j] = gr[j] * gv[j];
                m1 += dxh[j];
                m2 += dxh[j] * xhat[j];
            }
            m1 /= static_cast<double>(d);
            m2 /= static_cast<double>(d);
            if (t.nodes_[xi].needs_grad) {
                Tensor& gx = t.grad_of(xi);
                for (std::size_t j = 0; j < d; ++j)
                    gx.data[i * d + j] += inv * (dxh[j] - m1 - xhat[j] * m2);
            }
            if (t.nodes_[gi].needs_grad) {
                Tensor& gg = t.grad_of(gi);
                for (std::size_t j = 0; j < d; ++j) gg[j] += gr[j] * xhat[j];
            }
            if (t.nodes_[bi].needs_grad) {
                Tensor& gb = t.grad_of(bi);
                for (std::size_t j = 0; j < d; ++j) gb[j] += gr[j];
            }
        }
    });
}

Var Tape::gelu(Var x) {
    Tensor out = xc::gelu(x.value());
    std::size_t xi = x.idx;
    return push(std::move(out), true, [xi](Tape& t, Node& n) {
        if (!t.nodes_[xi].needs_grad) return;
        Tensor& g = t.grad_of(xi);
        const Tensor& xv = t.nodes_[xi].value;
        for (std::size_t i = 0; i < xv.numel(); ++i)
            g[i] += n.grad[i] * gelu_derivative(xv[i]);
    });
}

void Tape::backward(const std::vector<std::pair<Var, double>>& seeds) {
    // Propagate needs_grad forward lazily: a node created from non-grad
    // parents still carries needs_grad=true by default; harmless, just
    // extra zero work. Seed outputs, then reverse sweep.
    for (const auto& [v, s] : seeds) {
        if (v.value().numel() != 1) throw std::invalid_argument("backward: seed must be scalar");
        grad_of(v.idx)[0] += s;
    }
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        Node& n = nodes_[i];
        if (n.grad.shape.empty()) continue;  // no gradient flowed here
        if (n.backward) n.backward(*this, n);
        if (n.leaf && n.leaf->trainable) {
            Tensor& pg = n.leaf->grad;
            for (std::size_t j = 0; j < n.grad.numel(); ++j) pg[j] += n.grad[j];
        }
    }
}

}  // namespace xc
