#pragma once

#include <functional>
#include <string>
#include <vector>

#include "xc/tensor.hpp"

namespace xc {

/// Trainable (or frozen) tensor with a gradient accumulator.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    bool trainable = true;

    Parameter() = default;
    Parameter(std::string n, Tensor v, bool train = true)
        : name(std::move(n)), value(std::move(v)), grad(Tensor(value.shape)), trainable(train) {}

    void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }
};

struct AdamWState {
    Tensor m;
    Tensor v;
    long step_count = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    AdamWState() = default;
    explicit AdamWState(const std::vector<std::size_t>& shape) : m(Tensor(shape)), v(Tensor(shape)) {}
};

/// C = A * B with fixed left-to-right summation order.
Tensor matmul(const Tensor& a, const Tensor& b);

/// Row-stable softmax (per-row max subtraction).
Tensor softmax_rows(const Tensor& m);

/// gain * (x - mean) / sqrt(var + eps) + bias, population variance, per vector.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps);

/// Exact GELU: x * Phi(x) with Phi the standard normal CDF.
double gelu(double x);
Tensor gelu(const Tensor& x);
double gelu_derivative(double x);

/// One decoupled-weight-decay Adam step; increments s.step_count.
void adamw_step(Parameter& p, AdamWState& s, double lr, double wd);

/// Central finite differences, (f(x+eps e_i) - f(x-eps e_i)) / (2 eps).
std::vector<double> finite_diff_grad(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> theta, double eps = 1e-5);

}  // namespace xc
