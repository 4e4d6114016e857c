#include <algorithm>
#include <cmath>
#include <numeric>

#include "ann_fit.hpp"
#include "random.hpp"
#include "triage/error.hpp"
#include "triage/learners.hpp"

namespace triage {

namespace {

struct Activations {
  std::vector<double> h1, h2;
  double out = 0.0;
};

void dense(const DenseLayer& layer, std::span<const double> in, std::vector<double>& out, bool relu) {
  out.resize(layer.outputs);
  for (std::size_t o = 0; o < layer.outputs; ++o) {
    const double* w = layer.weights.data() + o * layer.inputs;
    double z = layer.bias[o];
    for (std::size_t i = 0; i < layer.inputs; ++i) z += w[i] * in[i];
    out[o] = relu ? std::max(0.0, z) : z;
  }
}

double forward(const AnnState& m, std::span<const double> x, Activations& act) {
  dense(m.layers[0], x, act.h1, true);
  dense(m.layers[1], act.h1, act.h2, true);
  std::vector<double> z;
  dense(m.layers[2], act.h2, z, false);
  act.out = z[0];
  return act.out;
}

double bce_from_logit(double z, int y) {
  const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  return softplus - y * z;
}

std::size_t param_count(const AnnState& m) {
  std::size_t n = 0;
  for (const auto& layer : m.layers) n += layer.weights.size() + layer.bias.size();
  return n;
}

/// Adds d(loss)/d(params) for one sample, scaled by `scale`, into `grad`
/// (flatten() layout). Returns the sample loss.
double backprop(const AnnState& m, std::span<const double> x, int y, double scale, Activations& act,
                std::vector<double>& grad) {
  const double z = forward(m, x, act);
  const auto& l0 = m.layers[0];
  const auto& l1 = m.layers[1];
  const auto& l2 = m.layers[2];
  const std::size_t off_w0 = 0;
  const std::size_t off_b0 = off_w0 + l0.weights.size();
  const std::size_t off_w1 = off_b0 + l0.bias.size();
  const std::size_t off_b1 = off_w1 + l1.weights.size();
  const std::size_t off_w2 = off_b1 + l1.bias.size();
  const std::size_t off_b2 = off_w2 + l2.weights.size();

  const double dz = (sigmoid(z) - y) * scale;
  std::vector<double> d2(l1.outputs);
  for (std::size_t i = 0; i < l2.inputs; ++i) {
    grad[off_w2 + i] += dz * act.h2[i];
    d2[i] = act.h2[i] > 0.0 ? dz * l2.weights[i] : 0.0;
  }
  grad[off_b2] += dz;

  std::vector<double> d1(l0.outputs, 0.0);
  for (std::size_t o = 0; o < l1.outputs; ++o) {
    if (d2[o] == 0.0) continue;
    const double* w = l1.weights.data() + o * l1.inputs;
    double* g = grad.data() + off_w1 + o * l1.inputs;
    for (std::size_t i = 0; i < l1.inputs; ++i) {
      g[i] += d2[o] * act.h1[i];
      d1[i] += d2[o] * w[i];
    }
    grad[off_b1 + o] += d2[o];
  }
  for (std::size_t o = 0; o < l0.outputs; ++o) {
    if (act.h1[o] <= 0.0 || d1[o] == 0.0) continue;
    double* g = grad.data() + off_w0 + o * l0.inputs;
    for (std::size_t i = 0; i < l0.inputs; ++i) g[i] += d1[o] * x[i];
    grad[off_b0 + o] += d1[o];
  }
  return bce_from_logit(z, y);
}

void add_l2(const AnnState& m, double l2, double scale, std::vector<double>& grad, double* loss) {
  if (l2 == 0.0) return;
  std::size_t offset = 0;
  for (const auto& layer : m.layers) {
    for (std::size_t k = 0; k < layer.weights.size(); ++k) {
      grad[offset + k] += scale * l2 * layer.weights[k];
      if (loss) *loss += 0.5 * l2 * layer.weights[k] * layer.weights[k];
    }
    offset += layer.weights.size() + layer.bias.size();
  }
}

}  // namespace

AnnState init_ann(std::size_t inputs, std::array<int, 2> hidden_sizes, std::uint64_t seed) {
  detail::Rng rng(seed);
  AnnState m;
  const std::array<std::size_t, 4> widths = {inputs, static_cast<std::size_t>(hidden_sizes[0]),
                                             static_cast<std::size_t>(hidden_sizes[1]), 1};
  for (std::size_t k = 0; k < 3; ++k) {
    auto& layer = m.layers[k];
    layer.inputs = widths[k];
    layer.outputs = widths[k + 1];
    // He-uniform for rectified layers, Glorot-uniform for the output unit.
    const double limit = k < 2 ? std::sqrt(6.0 / static_cast<double>(layer.inputs))
                               : std::sqrt(6.0 / static_cast<double>(layer.inputs + layer.outputs));
    layer.weights.resize(layer.inputs * layer.outputs);
    for (auto& w : layer.weights) w = (2.0 * rng.uniform() - 1.0) * limit;
    layer.bias.assign(layer.outputs, 0.0);
  }
  return m;
}

double ann_forward(const AnnState& model, std::span<const double> x) {
  Activations act;
  return sigmoid(forward(model, x, act));
}

Objective ann_objective(const AnnState& model, const Matrix& x, std::span<const int> y, double l2) {
  Objective obj;
  obj.gradient.assign(param_count(model), 0.0);
  const double scale = 1.0 / static_cast<double>(x.rows());
  Activations act;
  for (std::size_t i = 0; i < x.rows(); ++i) obj.loss += scale * backprop(model, x.row(i), y[i], scale, act, obj.gradient);
  add_l2(model, l2, 1.0, obj.gradient, &obj.loss);
  return obj;
}

std::vector<double> flatten(const AnnState& model) {
  std::vector<double> out;
  out.reserve(param_count(model));
  for (const auto& layer : model.layers) {
    out.insert(out.end(), layer.weights.begin(), layer.weights.end());
    out.insert(out.end(), layer.bias.begin(), layer.bias.end());
  }
  return out;
}

AnnState unflatten_ann(std::span<const double> params, const AnnState& shape) {
  if (params.size() != param_count(shape)) throw Error(ErrorCode::Shape, "ANN parameter vector has the wrong length");
  AnnState m = shape;
  std::size_t offset = 0;
  for (auto& layer : m.layers) {
    std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(offset), layer.weights.size(), layer.weights.begin());
    offset += layer.weights.size();
    std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(offset), layer.bias.size(), layer.bias.begin());
    offset += layer.bias.size();
  }
  return m;
}

namespace detail {

TrainedModel fit_ann(const Matrix& x, std::span<const int> y, const ParamSet& params,
                     std::vector<std::string> feature_names) {
  const auto hp = AnnHyperparams::from(params);
  AnnState model = init_ann(x.cols(), hp.hidden_sizes, hp.seed);
  Rng rng(hp.seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<double> theta = flatten(model);
  const std::size_t p = theta.size();
  std::vector<double> m1(p, 0.0), m2(p, 0.0), grad(p);
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  double beta1_t = 1.0, beta2_t = 1.0;

  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(hp.batch_size);
  Activations act;
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      std::fill(grad.begin(), grad.end(), 0.0);
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t k = start; k < end; ++k) backprop(model, x.row(order[k]), y[order[k]], scale, act, grad);
      add_l2(model, hp.l2, 1.0, grad, nullptr);

      beta1_t *= kBeta1;
      beta2_t *= kBeta2;
      for (std::size_t k = 0; k < p; ++k) {
        m1[k] = kBeta1 * m1[k] + (1.0 - kBeta1) * grad[k];
        m2[k] = kBeta2 * m2[k] + (1.0 - kBeta2) * grad[k] * grad[k];
        const double mhat = m1[k] / (1.0 - beta1_t);
        const double vhat = m2[k] / (1.0 - beta2_t);
        theta[k] -= hp.learning_rate * mhat / (std::sqrt(vhat) + kEps);
      }
      model = unflatten_ann(theta, model);
    }
  }
  return TrainedModel(Family::Ann, params, std::move(feature_names), std::move(model));
}

}  // namespace detail

}  // namespace triage
