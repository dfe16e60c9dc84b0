#pragma once

#include <span>
#include <vector>

#include "offload/parallel.hpp"
#include "offload/rng.hpp"

namespace offload {

enum class Activation {
  Relu,
  TanhUnit,  // x -> (tanh(x)+1)/2, output strictly in (0,1)
  Linear,
};

double apply_activation(Activation a, double z);
/// Derivative expressed through the post-activation value.
double activation_grad(Activation a, double post);

/// Fully connected layer, weights row-major out x in, double precision.
struct Layer {
  int in = 0;
  int out = 0;
  std::vector<double> w;
  std::vector<double> b;
  Activation act = Activation::Linear;
};

/// Parameter-gradient buffers mirroring a network's layers.
struct Gradients {
  std::vector<std::vector<double>> w, b;
  void zero();
};

/// First/second-moment accumulators for Adam, shaped like the gradients.
struct AdamState {
  std::vector<std::vector<double>> mw, vw, mb, vb;
  std::uint64_t step = 0;
};

/// Plain multilayer perceptron with explicit, deterministic forward and
/// backward passes. No autograd, no hidden state.
class DenseNet {
 public:
  DenseNet() = default;

  static DenseNet mlp(int input, std::span<const int> hidden, int output,
                      Activation hidden_act, Activation output_act);

  /// Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)] per layer.
  void init_uniform(RngStream& rng);

  std::vector<double> forward(std::span<const double> input) const;

  int input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
  int output_dim() const { return layers_.empty() ? 0 : layers_.back().out; }
  int layer_count() const { return static_cast<int>(layers_.size()); }
  const Layer& layer(int l) const { return layers_[l]; }
  Layer& layer(int l) { return layers_[l]; }

  Gradients make_gradients() const;

  std::size_t param_count() const;
  double get_param(std::size_t idx) const;
  void set_param(std::size_t idx, double v);

  /// theta += a * g, exact per-parameter arithmetic.
  void axpy(double a, const Gradients& g);
  /// One Adam step on the descent gradient scale * g (standard bias-corrected
  /// moments, beta1 0.9, beta2 0.999, eps 1e-8).
  void adam_step(const Gradients& g, double scale, AdamState& state, double lr);
  AdamState make_adam_state() const;
  /// theta_target <- omega * theta_primary + (1 - omega) * theta_target.
  void blend_from(const DenseNet& primary, double omega);

  bool same_shape(const DenseNet& other) const;

 private:
  std::vector<Layer> layers_;
};

/// Per-layer post-activations of a batch pass; act[0] is the input batch.
/// Reused across calls to avoid churn.
struct BatchTrace {
  int batch = 0;
  std::vector<std::vector<double>> act;
};

/// Batched forward pass, input row-major batch x input_dim. Results are
/// bit-identical across ExecMode values: every output element is computed
/// with the same fixed-order accumulation.
void forward_batch(const DenseNet& net, std::span<const double> input, int batch,
                   BatchTrace& trace, ExecMode mode);

/// Batched backprop from dL/d(output) (row-major batch x output_dim).
/// Accumulates parameter gradients into `grads` (pass nullptr to skip) with
/// the batch dimension always reduced in sample order, and writes dL/d(input)
/// into `input_grad` when non-null.
void backward_batch(const DenseNet& net, const BatchTrace& trace,
                    std::span<const double> output_grad, Gradients* grads,
                    std::vector<double>* input_grad, ExecMode mode);

}  // namespace offload
