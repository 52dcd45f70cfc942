#include "modify/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace modify {

namespace {

// C = A * B with an i-k-j loop so both B and C stream row-major.
Matrix matmul(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows, b.cols, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

// C = A^T * B without materializing the transpose.
Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
    Matrix c(a.cols, b.cols, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        const double* brow = b.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            double* crow = c.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

// C = A * B^T.
Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows, b.rows, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* brow = b.row(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
            crow[j] = acc;
        }
    }
    return c;
}

void check_forward_shapes(const ParameterSet& params, const Matrix& batch) {
    if (params.weights.empty())
        throw std::invalid_argument("forward: parameter set has no layers");
    if (batch.cols != params.input_dim())
        throw std::invalid_argument(
            "forward: batch has " + std::to_string(batch.cols) +
            " columns but network input dim is " + std::to_string(params.input_dim()));
    for (std::size_t k = 0; k + 1 < params.weights.size(); ++k) {
        if (params.weights[k].cols != params.weights[k + 1].rows)
            throw std::invalid_argument(
                "forward: layer " + std::to_string(k) + " output dim " +
                std::to_string(params.weights[k].cols) + " does not match layer " +
                std::to_string(k + 1) + " input dim " +
                std::to_string(params.weights[k + 1].rows));
    }
}

// Forward pass keeping every layer's post-activation output; [0] is the input.
std::vector<Matrix> forward_activations(const ParameterSet& params, const Matrix& batch) {
    std::vector<Matrix> acts;
    acts.reserve(params.layer_count() + 1);
    acts.push_back(batch);
    for (std::size_t k = 0; k < params.layer_count(); ++k) {
        Matrix z = matmul(acts.back(), params.weights[k]);
        const auto& bias = params.biases[k];
        for (std::size_t i = 0; i < z.rows; ++i) {
            double* zrow = z.row(i);
            for (std::size_t j = 0; j < z.cols; ++j) zrow[j] += bias[j];
        }
        if (k + 1 < params.layer_count()) {
            for (double& v : z.data) v = v > 0.0 ? v : 0.0;
        }
        acts.push_back(std::move(z));
    }
    return acts;
}

}  // namespace

std::vector<std::size_t> ParameterSet::dims() const {
    std::vector<std::size_t> d;
    if (weights.empty()) return d;
    d.push_back(weights.front().rows);
    for (const auto& w : weights) d.push_back(w.cols);
    return d;
}

ParameterSet ParameterSet::zeros(const std::vector<std::size_t>& dims) {
    if (dims.size() < 2) throw std::invalid_argument("ParameterSet: need at least input and output dims");
    ParameterSet p;
    for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
        p.weights.emplace_back(dims[k], dims[k + 1], 0.0);
        p.biases.emplace_back(dims[k + 1], 0.0);
    }
    return p;
}

ParameterSet ParameterSet::he_uniform(const std::vector<std::size_t>& dims, Rng& rng) {
    ParameterSet p = zeros(dims);
    for (auto& w : p.weights) {
        const double bound = std::sqrt(6.0 / static_cast<double>(w.rows));
        for (double& v : w.data) v = rng.uniform(-bound, bound);
    }
    return p;
}

bool ParameterSet::same_shape(const ParameterSet& other) const {
    if (weights.size() != other.weights.size()) return false;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (weights[k].rows != other.weights[k].rows) return false;
        if (weights[k].cols != other.weights[k].cols) return false;
        if (biases[k].size() != other.biases[k].size()) return false;
    }
    return true;
}

bool ParameterSet::bitwise_equal(const ParameterSet& other) const {
    if (!same_shape(other)) return false;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (weights[k].data != other.weights[k].data) return false;
        if (biases[k] != other.biases[k]) return false;
    }
    return true;
}

Gradient Gradient::zeros_like(const ParameterSet& params) {
    Gradient g;
    for (std::size_t k = 0; k < params.layer_count(); ++k) {
        g.dw.emplace_back(params.weights[k].rows, params.weights[k].cols, 0.0);
        g.db.emplace_back(params.biases[k].size(), 0.0);
        g.mw.emplace_back(params.weights[k].rows, params.weights[k].cols, 0.0);
        g.mb.emplace_back(params.biases[k].size(), 0.0);
    }
    return g;
}

double poly_lr(const OptimizerState& opt) {
    if (opt.max_iter == 0) throw std::invalid_argument("poly_lr: max_iter is 0");
    if (opt.iter > opt.max_iter) throw std::invalid_argument("poly_lr: iter exceeds max_iter");
    const double frac = 1.0 - static_cast<double>(opt.iter) / static_cast<double>(opt.max_iter);
    return opt.base_lr * std::pow(frac, opt.power);
}

Matrix forward(const ParameterSet& params, const Matrix& batch) {
    check_forward_shapes(params, batch);
    auto acts = forward_activations(params, batch);
    return std::move(acts.back());
}

Matrix softmax(const Matrix& logits) {
    Matrix p(logits.rows, logits.cols);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const double* z = logits.row(i);
        double* out = p.row(i);
        double m = z[0];
        for (std::size_t j = 1; j < logits.cols; ++j) m = std::max(m, z[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < logits.cols; ++j) {
            out[j] = std::exp(z[j] - m);
            sum += out[j];
        }
        for (std::size_t j = 0; j < logits.cols; ++j) out[j] /= sum;
    }
    return p;
}

std::vector<double> cross_entropy(const Matrix& logits, const std::vector<std::size_t>& labels) {
    if (labels.size() != logits.rows)
        throw std::invalid_argument(
            "cross_entropy: " + std::to_string(labels.size()) + " labels for " +
            std::to_string(logits.rows) + " logit rows");
    std::vector<double> losses(logits.rows);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        if (labels[i] >= logits.cols)
            throw std::invalid_argument(
                "cross_entropy: label " + std::to_string(labels[i]) +
                " out of range for " + std::to_string(logits.cols) + " classes");
        const double* z = logits.row(i);
        double m = z[0];
        for (std::size_t j = 1; j < logits.cols; ++j) m = std::max(m, z[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < logits.cols; ++j) sum += std::exp(z[j] - m);
        losses[i] = std::log(sum) - (z[labels[i]] - m);
    }
    return losses;
}

void backward_into(const ParameterSet& params, const Matrix& batch,
                   const std::vector<std::size_t>& labels,
                   const std::vector<double>& sample_weights, Gradient& grad) {
    check_forward_shapes(params, batch);
    if (labels.size() != batch.rows || sample_weights.size() != batch.rows)
        throw std::invalid_argument(
            "backward: batch rows " + std::to_string(batch.rows) + ", labels " +
            std::to_string(labels.size()) + ", weights " +
            std::to_string(sample_weights.size()) + " must all match");
    if (grad.dw.size() != params.layer_count())
        throw std::invalid_argument("backward: gradient layer count mismatch");

    auto acts = forward_activations(params, batch);
    const Matrix& logits = acts.back();
    const std::size_t batch_size = batch.rows;
    const std::size_t layers = params.layer_count();

    // dL/dlogits for the gated mean loss: (w_i / B) * (softmax - onehot).
    Matrix delta = softmax(logits);
    for (std::size_t i = 0; i < batch_size; ++i) {
        if (labels[i] >= logits.cols)
            throw std::invalid_argument(
                "backward: label " + std::to_string(labels[i]) + " out of range for " +
                std::to_string(logits.cols) + " classes");
        double* row = delta.row(i);
        row[labels[i]] -= 1.0;
        const double scale = sample_weights[i] / static_cast<double>(batch_size);
        for (std::size_t j = 0; j < logits.cols; ++j) row[j] *= scale;
    }

    for (std::size_t k = layers; k-- > 0;) {
        grad.dw[k] = matmul_at_b(acts[k], delta);
        auto& db = grad.db[k];
        std::fill(db.begin(), db.end(), 0.0);
        for (std::size_t i = 0; i < batch_size; ++i) {
            const double* drow = delta.row(i);
            for (std::size_t j = 0; j < db.size(); ++j) db[j] += drow[j];
        }
        if (k > 0) {
            Matrix prev = matmul_a_bt(delta, params.weights[k]);
            // ReLU subgradient: 0 where the activation was clipped (including at 0).
            for (std::size_t i = 0; i < prev.rows; ++i) {
                const double* arow = acts[k].row(i);
                double* prow = prev.row(i);
                for (std::size_t j = 0; j < prev.cols; ++j)
                    if (arow[j] <= 0.0) prow[j] = 0.0;
            }
            delta = std::move(prev);
        }
    }
}

Gradient backward(const ParameterSet& params, const Matrix& batch,
                  const std::vector<std::size_t>& labels,
                  const std::vector<double>& sample_weights) {
    Gradient grad = Gradient::zeros_like(params);
    backward_into(params, batch, labels, sample_weights, grad);
    return grad;
}

void sgd_step(ParameterSet& params, Gradient& grad, const OptimizerState& opt) {
    if (grad.dw.size() != params.layer_count())
        throw std::invalid_argument("sgd_step: gradient layer count mismatch");
    const double lr = poly_lr(opt);
    for (std::size_t k = 0; k < params.layer_count(); ++k) {
        auto& w = params.weights[k].data;
        const auto& dw = grad.dw[k].data;
        auto& mw = grad.mw[k].data;
        if (w.size() != dw.size())
            throw std::invalid_argument("sgd_step: weight shape mismatch at layer " + std::to_string(k));
        for (std::size_t i = 0; i < w.size(); ++i) {
            mw[i] = opt.momentum * mw[i] + (dw[i] + opt.weight_decay * w[i]);
            w[i] -= lr * mw[i];
        }
        auto& b = params.biases[k];
        const auto& db = grad.db[k];
        auto& mb = grad.mb[k];
        for (std::size_t i = 0; i < b.size(); ++i) {
            mb[i] = opt.momentum * mb[i] + db[i];
            b[i] -= lr * mb[i];
        }
    }
}

}  // namespace modify
