#include "offload/dense_net.hpp"

#include <cmath>
#include <stdexcept>

namespace offload {

double apply_activation(Activation a, double z) {
  switch (a) {
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    case Activation::TanhUnit: return (std::tanh(z) + 1.0) * 0.5;
    case Activation::Linear: return z;
  }
  return z;
}

double activation_grad(Activation a, double post) {
  switch (a) {
    case Activation::Relu: return post > 0.0 ? 1.0 : 0.0;
    case Activation::TanhUnit: {
      double t = 2.0 * post - 1.0;  // = tanh(z)
      return (1.0 - t * t) * 0.5;
    }
    case Activation::Linear: return 1.0;
  }
  return 1.0;
}

DenseNet DenseNet::mlp(int input, std::span<const int> hidden, int output,
                       Activation hidden_act, Activation output_act) {
  if (input <= 0 || output <= 0)
    throw std::invalid_argument("DenseNet::mlp: dimensions must be positive");
  DenseNet net;
  int prev = input;
  for (int h : hidden) {
    if (h <= 0) throw std::invalid_argument("DenseNet::mlp: bad hidden size");
    Layer l;
    l.in = prev;
    l.out = h;
    l.w.assign(static_cast<std::size_t>(h) * prev, 0.0);
    l.b.assign(h, 0.0);
    l.act = hidden_act;
    net.layers_.push_back(std::move(l));
    prev = h;
  }
  Layer last;
  last.in = prev;
  last.out = output;
  last.w.assign(static_cast<std::size_t>(output) * prev, 0.0);
  last.b.assign(output, 0.0);
  last.act = output_act;
  net.layers_.push_back(std::move(last));
  return net;
}

void DenseNet::init_uniform(RngStream& rng) {
  for (Layer& l : layers_) {
    double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
    for (double& v : l.w) v = rng.uniform(-bound, bound);
    for (double& v : l.b) v = rng.uniform(-bound, bound);
  }
}

std::vector<double> DenseNet::forward(std::span<const double> input) const {
  if (static_cast<int>(input.size()) != input_dim())
    throw std::invalid_argument("DenseNet::forward: input dimension mismatch");
  std::vector<double> cur(input.begin(), input.end());
  std::vector<double> next;
  for (const Layer& l : layers_) {
    next.resize(l.out);
    for (int i = 0; i < l.out; ++i) {
      double z = l.b[i] + dot_fixed(cur.data(), l.w.data() + static_cast<std::size_t>(i) * l.in,
                                    l.in);
      next[i] = apply_activation(l.act, z);
    }
    cur.swap(next);
  }
  return cur;
}

Gradients DenseNet::make_gradients() const {
  Gradients g;
  g.w.reserve(layers_.size());
  g.b.reserve(layers_.size());
  for (const Layer& l : layers_) {
    g.w.emplace_back(l.w.size(), 0.0);
    g.b.emplace_back(l.b.size(), 0.0);
  }
  return g;
}

void Gradients::zero() {
  for (auto& v : w) std::fill(v.begin(), v.end(), 0.0);
  for (auto& v : b) std::fill(v.begin(), v.end(), 0.0);
}

std::size_t DenseNet::param_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers_) n += l.w.size() + l.b.size();
  return n;
}

double DenseNet::get_param(std::size_t idx) const {
  for (const Layer& l : layers_) {
    if (idx < l.w.size()) return l.w[idx];
    idx -= l.w.size();
    if (idx < l.b.size()) return l.b[idx];
    idx -= l.b.size();
  }
  throw std::out_of_range("DenseNet::get_param");
}

void DenseNet::set_param(std::size_t idx, double v) {
  for (Layer& l : layers_) {
    if (idx < l.w.size()) {
      l.w[idx] = v;
      return;
    }
    idx -= l.w.size();
    if (idx < l.b.size()) {
      l.b[idx] = v;
      return;
    }
    idx -= l.b.size();
  }
  throw std::out_of_range("DenseNet::set_param");
}

void DenseNet::axpy(double a, const Gradients& g) {
  if (g.w.size() != layers_.size())
    throw std::invalid_argument("DenseNet::axpy: gradient shape mismatch");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    for (std::size_t k = 0; k < layers_[l].w.size(); ++k) layers_[l].w[k] += a * g.w[l][k];
    for (std::size_t k = 0; k < layers_[l].b.size(); ++k) layers_[l].b[k] += a * g.b[l][k];
  }
}

AdamState DenseNet::make_adam_state() const {
  AdamState s;
  for (const Layer& l : layers_) {
    s.mw.emplace_back(l.w.size(), 0.0);
    s.vw.emplace_back(l.w.size(), 0.0);
    s.mb.emplace_back(l.b.size(), 0.0);
    s.vb.emplace_back(l.b.size(), 0.0);
  }
  return s;
}

void DenseNet::adam_step(const Gradients& g, double scale, AdamState& state, double lr) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  if (g.w.size() != layers_.size() || state.mw.size() != layers_.size())
    throw std::invalid_argument("DenseNet::adam_step: shape mismatch");
  state.step += 1;
  double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  auto update = [&](std::vector<double>& theta, const std::vector<double>& grad,
                    std::vector<double>& m, std::vector<double>& v) {
    for (std::size_t k = 0; k < theta.size(); ++k) {
      double gk = scale * grad[k];
      m[k] = beta1 * m[k] + (1.0 - beta1) * gk;
      v[k] = beta2 * v[k] + (1.0 - beta2) * gk * gk;
      theta[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
    }
  };
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    update(layers_[l].w, g.w[l], state.mw[l], state.vw[l]);
    update(layers_[l].b, g.b[l], state.mb[l], state.vb[l]);
  }
}

void DenseNet::blend_from(const DenseNet& primary, double omega) {
  if (!same_shape(primary))
    throw std::invalid_argument("DenseNet::blend_from: shape mismatch");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& p = primary.layers_[l];
    Layer& t = layers_[l];
    for (std::size_t k = 0; k < t.w.size(); ++k)
      t.w[k] = omega * p.w[k] + (1.0 - omega) * t.w[k];
    for (std::size_t k = 0; k < t.b.size(); ++k)
      t.b[k] = omega * p.b[k] + (1.0 - omega) * t.b[k];
  }
}

bool DenseNet::same_shape(const DenseNet& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t l = 0; l < layers_.size(); ++l)
    if (layers_[l].in != other.layers_[l].in || layers_[l].out != other.layers_[l].out)
      return false;
  return true;
}

void forward_batch(const DenseNet& net, std::span<const double> input, int batch,
                   BatchTrace& trace, ExecMode mode) {
  const int in_dim = net.input_dim();
  if (static_cast<int>(input.size()) != batch * in_dim)
    throw std::invalid_argument("forward_batch: input size mismatch");

  trace.batch = batch;
  trace.act.resize(net.layer_count() + 1);
  trace.act[0].assign(input.begin(), input.end());

  for (int l = 0; l < net.layer_count(); ++l) {
    const Layer& ly = net.layer(l);
    const std::vector<double>& a_prev = trace.act[l];
    std::vector<double>& a = trace.act[l + 1];
    a.resize(static_cast<std::size_t>(batch) * ly.out);

    auto run_row = [&](int t) {
      const double* x = a_prev.data() + static_cast<std::size_t>(t) * ly.in;
      double* out = a.data() + static_cast<std::size_t>(t) * ly.out;
      for (int i = 0; i < ly.out; ++i) {
        double z = ly.b[i] + dot_fixed(x, ly.w.data() + static_cast<std::size_t>(i) * ly.in,
                                       ly.in);
        out[i] = apply_activation(ly.act, z);
      }
    };
    if (mode == ExecMode::OpenMP) {
#pragma omp parallel for schedule(static)
      for (int t = 0; t < batch; ++t) run_row(t);
    } else {
      for (int t = 0; t < batch; ++t) run_row(t);
    }
  }
}

void backward_batch(const DenseNet& net, const BatchTrace& trace,
                    std::span<const double> output_grad, Gradients* grads,
                    std::vector<double>* input_grad, ExecMode mode) {
  const int batch = trace.batch;
  const int out_dim = net.output_dim();
  if (static_cast<int>(output_grad.size()) != batch * out_dim)
    throw std::invalid_argument("backward_batch: output_grad size mismatch");

  std::vector<double> delta(output_grad.begin(), output_grad.end());
  std::vector<double> delta_prev;

  for (int l = net.layer_count() - 1; l >= 0; --l) {
    const Layer& ly = net.layer(l);
    const std::vector<double>& a = trace.act[l + 1];
    const std::vector<double>& a_prev = trace.act[l];

    // delta <- dL/dz for this layer
    auto scale_row = [&](int t) {
      double* d = delta.data() + static_cast<std::size_t>(t) * ly.out;
      const double* post = a.data() + static_cast<std::size_t>(t) * ly.out;
      for (int i = 0; i < ly.out; ++i) d[i] *= activation_grad(ly.act, post[i]);
    };
    if (mode == ExecMode::OpenMP) {
#pragma omp parallel for schedule(static)
      for (int t = 0; t < batch; ++t) scale_row(t);
    } else {
      for (int t = 0; t < batch; ++t) scale_row(t);
    }

    if (grads != nullptr) {
      // dW[i,:] = sum_t delta[t,i] * a_prev[t,:], samples always added in
      // index order so the result is independent of the thread count
      std::vector<double>& gw = grads->w[l];
      std::vector<double>& gb = grads->b[l];
      auto accumulate_out = [&](int i) {
        double* wrow = gw.data() + static_cast<std::size_t>(i) * ly.in;
        double gbias = 0.0;
        for (int t = 0; t < batch; ++t) {
          double d = delta[static_cast<std::size_t>(t) * ly.out + i];
          if (d == 0.0) continue;
          const double* x = a_prev.data() + static_cast<std::size_t>(t) * ly.in;
          for (int j = 0; j < ly.in; ++j) wrow[j] += d * x[j];
          gbias += d;
        }
        gb[i] += gbias;
      };
      if (mode == ExecMode::OpenMP) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < ly.out; ++i) accumulate_out(i);
      } else {
        for (int i = 0; i < ly.out; ++i) accumulate_out(i);
      }
    }

    const bool need_input = l > 0 || input_grad != nullptr;
    if (!need_input) break;

    delta_prev.assign(static_cast<std::size_t>(batch) * ly.in, 0.0);
    auto back_row = [&](int t) {
      const double* d = delta.data() + static_cast<std::size_t>(t) * ly.out;
      double* dp = delta_prev.data() + static_cast<std::size_t>(t) * ly.in;
      for (int i = 0; i < ly.out; ++i) {
        double di = d[i];
        if (di == 0.0) continue;
        const double* wrow = ly.w.data() + static_cast<std::size_t>(i) * ly.in;
        for (int j = 0; j < ly.in; ++j) dp[j] += di * wrow[j];
      }
    };
    if (mode == ExecMode::OpenMP) {
#pragma omp parallel for schedule(static)
      for (int t = 0; t < batch; ++t) back_row(t);
    } else {
      for (int t = 0; t < batch; ++t) back_row(t);
    }
    delta.swap(delta_prev);
  }

  if (input_grad != nullptr) *input_grad = std::move(delta);
}

}  // namespace offload
