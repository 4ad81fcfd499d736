#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "vfu/matrix.hpp"

namespace vfu {

enum class Activation { Relu, Identity };

// weights are (input_dim x output_dim); forward computes x W + b.
struct DenseLayer {
    DenseMatrix weights;
    std::vector<double> bias;
    Activation activation = Activation::Identity;
};

struct MlpModel {
    std::vector<DenseLayer> layers;

    std::size_t input_dim() const { return layers.front().weights.rows; }
    std::size_t output_dim() const { return layers.back().weights.cols; }
    std::size_t parameter_count() const;
    void validate() const;  // consecutive layer dims must chain
};

// dims = {input, hidden..., output}. Hidden layers relu, output identity.
// Glorot-uniform initialization from the seed.
MlpModel make_mlp(const std::vector<std::size_t>& dims, std::uint64_t seed);

struct ForwardCache {
    DenseMatrix input;
    std::vector<DenseMatrix> pre_activations;   // one per layer
    std::vector<DenseMatrix> post_activations;  // one per layer
};

DenseMatrix forward(const MlpModel& model, const DenseMatrix& batch,
                    ForwardCache* cache = nullptr);

struct GradientSet {
    std::vector<DenseMatrix> weight_grads;
    std::vector<std::vector<double>> bias_grads;
    DenseMatrix input_gradient;  // dL/d(batch)

    GradientSet& add_scaled(const GradientSet& other, double factor);
    void scale(double factor);
};

GradientSet zeros_like(const MlpModel& model);

GradientSet backward(const MlpModel& model, const ForwardCache& cache,
                     const DenseMatrix& upstream_grad);

struct LossResult {
    double loss = 0.0;
    DenseMatrix grad;
};

DenseMatrix softmax(const DenseMatrix& logits);
DenseMatrix log_softmax(const DenseMatrix& logits);

// Mean cross-entropy over rows; grad = (softmax - onehot) / n.
LossResult cross_entropy_loss(const DenseMatrix& logits, const std::vector<int>& labels);

// Mean row-wise KL(softmax(student) || softmax(teacher)); gradient w.r.t.
// student logits only.
LossResult kl_divergence(const DenseMatrix& student_logits, const DenseMatrix& teacher_logits);

void sgd_step(MlpModel& model, const GradientSet& grads, double lr);

// Flat parameter-vector view, used by the Newton update and its tests.
std::vector<double> flatten_params(const MlpModel& model);
void set_params(MlpModel& model, const std::vector<double>& flat);
std::vector<double> flatten_grads(const MlpModel& model, const GradientSet& grads);
GradientSet unflatten_grads(const MlpModel& model, const std::vector<double>& flat);

// loss_fn returns the loss and its analytic gradient at the given model.
using LossClosure = std::function<std::pair<double, GradientSet>(const MlpModel&)>;

// Full-Hessian Newton update: v <- v - (H + damping I)^-1 g, with H built
// by central differences of the analytic gradient. Only for small models.
void newton_step(MlpModel& model, const LossClosure& loss_fn, double damping,
                 double fd_step = 1e-5);

using ScalarLossClosure = std::function<double(const MlpModel&)>;

// Central-difference gradient oracle over all parameters.
GradientSet finite_diff_grad(const ScalarLossClosure& loss_fn, const MlpModel& model,
                             double step);

}  // namespace vfu
