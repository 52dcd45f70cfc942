#pragma once

#include <cstddef>
#include <vector>

#include "modify/rng.hpp"

namespace modify {

// Dense row-major matrix of doubles. All training math runs in 64-bit.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
};

// Feed-forward classifier parameters. weights[k] has shape dims[k] x dims[k+1]
// so a batch propagates as A_{k+1} = relu(A_k * W_k + b_k), with the final
// layer left linear (logits).
struct ParameterSet {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;

    std::size_t layer_count() const { return weights.size(); }
    std::size_t input_dim() const { return weights.empty() ? 0 : weights.front().rows; }
    std::size_t output_dim() const { return weights.empty() ? 0 : weights.back().cols; }
    std::vector<std::size_t> dims() const;

    static ParameterSet zeros(const std::vector<std::size_t>& dims);
    // He-uniform initialization: W ~ U(-b, b) with b = sqrt(6 / fan_in), biases zero.
    static ParameterSet he_uniform(const std::vector<std::size_t>& dims, Rng& rng);

    bool same_shape(const ParameterSet& other) const;
    bool bitwise_equal(const ParameterSet& other) const;
};

// Gradient of a ParameterSet plus the SGD momentum buffers, all shape-identical
// to the parameters they belong to. The momentum buffers persist across steps;
// backward_into only overwrites the gradient half.
struct Gradient {
    std::vector<Matrix> dw;
    std::vector<std::vector<double>> db;
    std::vector<Matrix> mw;
    std::vector<std::vector<double>> mb;

    static Gradient zeros_like(const ParameterSet& params);
};

// SGD-with-momentum state and its polynomial learning-rate schedule.
struct OptimizerState {
    double base_lr = 2.5e-4;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    double power = 0.9;
    std::size_t iter = 0;
    std::size_t max_iter = 1;
};

// lr = base_lr * (1 - iter/max_iter)^power. Throws if max_iter == 0.
double poly_lr(const OptimizerState& opt);

// Logits for a batch (rows = samples). Hidden layers use ReLU with
// derivative 0 at 0; the output layer is linear. Throws on shape mismatch.
Matrix forward(const ParameterSet& params, const Matrix& batch);

// Row-wise softmax with max-subtraction.
Matrix softmax(const Matrix& logits);

// Per-sample losses -log softmax(logits_i)[label_i]. Throws if a label is
// outside [0, cols).
std::vector<double> cross_entropy(const Matrix& logits, const std::vector<std::size_t>& labels);

// Gradient of (1/B) * sum_i w_i * loss_i with respect to all parameters.
// sample_weights must lie in [0, 1]. Runs its own forward pass internally.
Gradient backward(const ParameterSet& params, const Matrix& batch,
                  const std::vector<std::size_t>& labels,
                  const std::vector<double>& sample_weights);

// Same, but writes into an existing Gradient so its momentum buffers survive.
void backward_into(const ParameterSet& params, const Matrix& batch,
                   const std::vector<std::size_t>& labels,
                   const std::vector<double>& sample_weights, Gradient& grad);

// Classic momentum update at the schedule's current learning rate:
//   buf <- m*buf + (g + wd*param); param <- param - lr*buf
// Weight decay applies to weights only, never biases.
void sgd_step(ParameterSet& params, Gradient& grad, const OptimizerState& opt);

}  // namespace modify
