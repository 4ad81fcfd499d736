#include "vfu/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vfu/rng.hpp"

namespace vfu {

std::size_t MlpModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers)
        n += layer.weights.data.size() + layer.bias.size();
    return n;
}

void MlpModel::validate() const {
    if (layers.empty()) throw StateError("MlpModel: no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.bias.size() != l.weights.cols)
            throw ShapeError("layer " + std::to_string(i) + ": bias length " +
                             std::to_string(l.bias.size()) + " != output width " +
                             std::to_string(l.weights.cols));
        if (i > 0 && layers[i - 1].weights.cols != l.weights.rows)
            throw ShapeError("layer " + std::to_string(i) + ": input width " +
                             std::to_string(l.weights.rows) + " does not chain from layer " +
                             std::to_string(i - 1) + " output width " +
                             std::to_string(layers[i - 1].weights.cols));
    }
}

MlpModel make_mlp(const std::vector<std::size_t>& dims, std::uint64_t seed) {
    if (dims.size() < 2) throw ConfigError("make_mlp: need at least input and output dims");
    std::mt19937_64 rng(seed);
    MlpModel model;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        DenseLayer layer;
        layer.weights = DenseMatrix(dims[i], dims[i + 1]);
        layer.bias.assign(dims[i + 1], 0.0);
        const double bound = std::sqrt(6.0 / static_cast<double>(dims[i] + dims[i + 1]));
        for (double& w : layer.weights.data) w = uniform_range(rng, -bound, bound);
        layer.activation = (i + 2 < dims.size()) ? Activation::Relu : Activation::Identity;
        model.layers.push_back(std::move(layer));
    }
    return model;
}

DenseMatrix forward(const MlpModel& model, const DenseMatrix& batch, ForwardCache* cache) {
    model.validate();
    if (batch.cols != model.input_dim())
        throw ShapeError("forward: batch width " + std::to_string(batch.cols) +
                         " != layer 0 input width " + std::to_string(model.input_dim()));
    if (cache) {
        *cache = {};
        cache->input = batch;
    }
    DenseMatrix x = batch;
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        const auto& layer = model.layers[li];
        DenseMatrix z = matmul(x, layer.weights);
        for (std::size_t i = 0; i < z.rows; ++i)
            for (std::size_t j = 0; j < z.cols; ++j)
                z(i, j) += layer.bias[j];
        if (cache) cache->pre_activations.push_back(z);
        if (layer.activation == Activation::Relu)
            for (double& v : z.data) v = std::max(v, 0.0);
        if (cache) cache->post_activations.push_back(z);
        x = std::move(z);
    }
    ensure_finite(x, "forward");
    return x;
}

GradientSet zeros_like(const MlpModel& model) {
    GradientSet g;
    for (const auto& layer : model.layers) {
        g.weight_grads.emplace_back(layer.weights.rows, layer.weights.cols);
        g.bias_grads.emplace_back(layer.bias.size(), 0.0);
    }
    return g;
}

GradientSet& GradientSet::add_scaled(const GradientSet& other, double factor) {
    for (std::size_t li = 0; li < weight_grads.size(); ++li) {
        for (std::size_t i = 0; i < weight_grads[li].data.size(); ++i)
            weight_grads[li].data[i] += factor * other.weight_grads[li].data[i];
        for (std::size_t i = 0; i < bias_grads[li].size(); ++i)
            bias_grads[li][i] += factor * other.bias_grads[li][i];
    }
    return *this;
}

void GradientSet::scale(double factor) {
    for (auto& wg : weight_grads)
        for (double& v : wg.data) v *= factor;
    for (auto& bg : bias_grads)
        for (double& v : bg) v *= factor;
    for (double& v : input_gradient.data) v *= factor;
}

GradientSet backward(const MlpModel& model, const ForwardCache& cache,
                     const DenseMatrix& upstream_grad) {
    if (cache.pre_activations.size() != model.layers.size())
        throw StateError("backward: cache does not match model layer count");
    const auto& out = cache.post_activations.back();
    if (!upstream_grad.same_shape(out))
        throw ShapeError("backward: upstream gradient shape mismatch");

    GradientSet grads = zeros_like(model);
    DenseMatrix delta = upstream_grad;
    for (std::size_t li = model.layers.size(); li-- > 0;) {
        const auto& layer = model.layers[li];
        if (layer.activation == Activation::Relu) {
            const auto& pre = cache.pre_activations[li];
            for (std::size_t i = 0; i < delta.data.size(); ++i)
                if (pre.data[i] <= 0.0) delta.data[i] = 0.0;
        }
        const DenseMatrix& layer_input =
            (li == 0) ? cache.input : cache.post_activations[li - 1];
        grads.weight_grads[li] = matmul(transpose(layer_input), delta);
        for (std::size_t i = 0; i < delta.rows; ++i)
            for (std::size_t j = 0; j < delta.cols; ++j)
                grads.bias_grads[li][j] += delta(i, j);
        delta = matmul(delta, transpose(layer.weights));
    }
    grads.input_gradient = std::move(delta);
    return grads;
}

DenseMatrix softmax(const DenseMatrix& logits) {
    DenseMatrix out(logits.rows, logits.cols);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        double mx = logits(i, 0);
        for (std::size_t j = 1; j < logits.cols; ++j) mx = std::max(mx, logits(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < logits.cols; ++j) {
            out(i, j) = std::exp(logits(i, j) - mx);
            sum += out(i, j);
        }
        for (std::size_t j = 0; j < logits.cols; ++j) out(i, j) /= sum;
    }
    return out;
}

DenseMatrix log_softmax(const DenseMatrix& logits) {
    DenseMatrix out(logits.rows, logits.cols);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        double mx = logits(i, 0);
        for (std::size_t j = 1; j < logits.cols; ++j) mx = std::max(mx, logits(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < logits.cols; ++j) sum += std::exp(logits(i, j) - mx);
        const double lse = mx + std::log(sum);
        for (std::size_t j = 0; j < logits.cols; ++j) out(i, j) = logits(i, j) - lse;
    }
    return out;
}

LossResult cross_entropy_loss(const DenseMatrix& logits, const std::vector<int>& labels) {
    if (labels.size() != logits.rows)
        throw ValidationError("cross_entropy_loss: " + std::to_string(labels.size()) +
                              " labels for " + std::to_string(logits.rows) + " rows");
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= logits.cols)
            throw ValidationError("cross_entropy_loss: label " + std::to_string(labels[i]) +
                                  " out of range at row " + std::to_string(i));
    const double n = static_cast<double>(logits.rows);
    const DenseMatrix lsm = log_softmax(logits);
    LossResult res;
    res.grad = softmax(logits);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        res.loss -= lsm(i, static_cast<std::size_t>(labels[i]));
        res.grad(i, static_cast<std::size_t>(labels[i])) -= 1.0;
    }
    res.loss /= n;
    for (double& v : res.grad.data) v /= n;
    return res;
}

LossResult kl_divergence(const DenseMatrix& student_logits, const DenseMatrix& teacher_logits) {
    if (!student_logits.same_shape(teacher_logits))
        throw ShapeError("kl_divergence: student/teacher shape mismatch");
    const double n = static_cast<double>(student_logits.rows);
    const DenseMatrix log_p = log_softmax(student_logits);
    const DenseMatrix log_q = log_softmax(teacher_logits);
    const DenseMatrix p = softmax(student_logits);

    LossResult res;
    res.grad = DenseMatrix(student_logits.rows, student_logits.cols);
    for (std::size_t i = 0; i < p.rows; ++i) {
        double row_kl = 0.0;
        for (std::size_t j = 0; j < p.cols; ++j)
            row_kl += p(i, j) * (log_p(i, j) - log_q(i, j));
        res.loss += row_kl;
        // d/ds_j [sum_c p_c (log p_c - log q_c)] = p_j ((log p_j - log q_j) - row_kl)
        for (std::size_t j = 0; j < p.cols; ++j)
            res.grad(i, j) = p(i, j) * ((log_p(i, j) - log_q(i, j)) - row_kl) / n;
    }
    res.loss = std::max(res.loss / n, 0.0);
    return res;
}

void sgd_step(MlpModel& model, const GradientSet& grads, double lr) {
    if (grads.weight_grads.size() != model.layers.size())
        throw ShapeError("sgd_step: gradient layer count mismatch");
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        auto& layer = model.layers[li];
        if (!grads.weight_grads[li].same_shape(layer.weights))
            throw ShapeError("sgd_step: weight gradient shape mismatch at layer " +
                             std::to_string(li));
        for (std::size_t i = 0; i < layer.weights.data.size(); ++i)
            layer.weights.data[i] -= lr * grads.weight_grads[li].data[i];
        for (std::size_t i = 0; i < layer.bias.size(); ++i)
            layer.bias[i] -= lr * grads.bias_grads[li][i];
    }
}

std::vector<double> flatten_params(const MlpModel& model) {
    std::vector<double> flat;
    flat.reserve(model.parameter_count());
    for (const auto& layer : model.layers) {
        flat.insert(flat.end(), layer.weights.data.begin(), layer.weights.data.end());
        flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
    }
    return flat;
}

void set_params(MlpModel& model, const std::vector<double>& flat) {
    if (flat.size() != model.parameter_count())
        throw ShapeError("set_params: flat vector length mismatch");
    std::size_t pos = 0;
    for (auto& layer : model.layers) {
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), layer.weights.data.size(),
                    layer.weights.data.begin());
        pos += layer.weights.data.size();
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), layer.bias.size(),
                    layer.bias.begin());
        pos += layer.bias.size();
    }
}

std::vector<double> flatten_grads(const MlpModel& model, const GradientSet& grads) {
    std::vector<double> flat;
    flat.reserve(model.parameter_count());
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        flat.insert(flat.end(), grads.weight_grads[li].data.begin(),
                    grads.weight_grads[li].data.end());
        flat.insert(flat.end(), grads.bias_grads[li].begin(), grads.bias_grads[li].end());
    }
    return flat;
}

GradientSet unflatten_grads(const MlpModel& model, const std::vector<double>& flat) {
    GradientSet g = zeros_like(model);
    std::size_t pos = 0;
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                    g.weight_grads[li].data.size(), g.weight_grads[li].data.begin());
        pos += g.weight_grads[li].data.size();
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), g.bias_grads[li].size(),
                    g.bias_grads[li].begin());
        pos += g.bias_grads[li].size();
    }
    return g;
}

void newton_step(MlpModel& model, const LossClosure& loss_fn, double damping, double fd_step) {
    if (damping < 0.0) throw ConfigError("newton_step: damping must be >= 0");
    const std::size_t p = model.parameter_count();
    std::vector<double> v = flatten_params(model);

    auto grad_at = [&](const std::vector<double>& params) {
        MlpModel probe = model;
        set_params(probe, params);
        auto [loss, grads] = loss_fn(probe);
        (void)loss;
        return flatten_grads(probe, grads);
    };

    const std::vector<double> g = grad_at(v);

    // Hessian columns by central differences of the analytic gradient.
    DenseMatrix hess(p, p);
    std::vector<double> probe = v;
    for (std::size_t i = 0; i < p; ++i) {
        probe[i] = v[i] + fd_step;
        const std::vector<double> g_plus = grad_at(probe);
        probe[i] = v[i] - fd_step;
        const std::vector<double> g_minus = grad_at(probe);
        probe[i] = v[i];
        for (std::size_t r = 0; r < p; ++r)
            hess(r, i) = (g_plus[r] - g_minus[r]) / (2.0 * fd_step);
    }
    // Symmetrize and damp.
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i + 1; j < p; ++j) {
            const double s = 0.5 * (hess(i, j) + hess(j, i));
            hess(i, j) = s;
            hess(j, i) = s;
        }
        hess(i, i) += damping;
    }

    const std::vector<double> step = solve_linear(std::move(hess), g);
    for (std::size_t i = 0; i < p; ++i) v[i] -= step[i];
    set_params(model, v);
}

GradientSet finite_diff_grad(const ScalarLossClosure& loss_fn, const MlpModel& model,
                             double step) {
    if (step <= 0.0) throw ConfigError("finite_diff_grad: step must be > 0");
    std::vector<double> v = flatten_params(model);
    std::vector<double> flat(v.size());
    MlpModel probe = model;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double orig = v[i];
        v[i] = orig + step;
        set_params(probe, v);
        const double up = loss_fn(probe);
        v[i] = orig - step;
        set_params(probe, v);
        const double down = loss_fn(probe);
        v[i] = orig;
        flat[i] = (up - down) / (2.0 * step);
    }
    set_params(probe, v);
    return unflatten_grads(model, flat);
}

}  // namespace vfu
