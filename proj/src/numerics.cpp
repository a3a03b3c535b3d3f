#include "xc/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace xc {

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.shape.size() != 2 || b.shape.size() != 2 || a.cols() != b.rows())
        throw std::invalid_argument("matmul: shape mismatch " + a.shape_str() + " vs " +
                                    b.shape_str());
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor c(m, n);
    // i-k-j order: row of C accumulated in sequence, k ascending, so the
    // summation order is fixed and the inner loop is stride-1.
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = &c.data[i * n];
        const double* ai = &a.data[i * k];
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = ai[kk];
            const double* bk = &b.data[kk * n];
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bk[j];
        }
    }
    return c;
}

Tensor softmax_rows(const Tensor& m) {
    Tensor out(m.shape);
    const std::size_t r = m.rows(), c = m.cols();
    for (std::size_t i = 0; i < r; ++i) {
        double mx = m.at(i, 0);
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, m.at(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            double e = std::exp(m.at(i, j) - mx);
            out.at(i, j) = e;
            sum += e;
        }
        for (std::size_t j = 0; j < c; ++j) out.at(i, j) /= sum;
    }
    return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    const std::size_t d = x.cols() > 1 || x.shape.size() == 2 ? x.cols() : x.numel();
    Tensor out(x.shape);
    const std::size_t r = x.numel() / d;
    for (std::size_t i = 0; i < r; ++i) {
        const double* xi = &x.data[i * d];
        double* oi = &out.data[i * d];
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += xi[j];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) var += (xi[j] - mean) * (xi[j] - mean);
        var /= static_cast<double>(d);
        const double inv = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < d; ++j)
            oi[j] = gain[j] * (xi[j] - mean) * inv + bias[j];
    }
    return out;
}

double gelu(double x) { return x * 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); }

Tensor gelu(const Tensor& x) {
    Tensor out(x.shape);
    for (std::size_t i = 0; i < x.numel(); ++i) out[i] = gelu(x[i]);
    return out;
}

double gelu_derivative(double x) {
    const double phi = 0.5 * (1.0 + std::erf(x / std::sqrt(2.0)));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    return phi + x * pdf;
}

void adamw_step(Parameter& p, AdamWState& s, double lr, double wd) {
    if (!p.trainable) throw std::logic_error("adamw_step: parameter '" + p.name + "' is frozen");
    check_same_shape(p.value, s.m, "adamw_step");
    s.step_count += 1;
    const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step_count));
    const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step_count));
    for (std::size_t i = 0; i < p.value.numel(); ++i) {
        const double g = p.grad[i];
        s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * g;
        s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * g * g;
        const double mhat = s.m[i] / bc1;
        const double vhat = s.v[i] / bc2;
        p.value[i] -= lr * wd * p.value[i];  // decoupled decay
        p.value[i] -= lr * mhat / (std::sqrt(vhat) + s.eps);
    }
}

std::vector<double> finite_diff_grad(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> theta, double eps) {
    std::vector<double> g(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double orig = theta[i];
        theta[i] = orig + eps;
        const double fp = f(theta);
        theta[i] = orig - eps;
        const double fm = f(theta);
        theta[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw std::runtime_error("finite_diff_grad: non-finite function value");
        g[i] = (fp - fm) / (2.0 * eps);
    }
    return g;
}

}  // namespace xc
