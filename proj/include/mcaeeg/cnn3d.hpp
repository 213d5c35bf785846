#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mcaeeg/error.hpp"
#include "mcaeeg/random.hpp"
#include "mcaeeg/tensor.hpp"

namespace mcaeeg::cnn {

using Index3 = std::array<std::size_t, 3>;

// ---------------------------------------------------------------------------
// Layer kernels. Activations are single examples laid out [C, D, H, W].
// ---------------------------------------------------------------------------

inline std::size_t conv_out_size(std::size_t in, std::size_t pad, std::size_t k, std::size_t stride) {
  if (in + 2 * pad < k) throw ShapeError("kernel of size " + std::to_string(k) + " does not fit padded extent");
  return (in + 2 * pad - k) / stride + 1;
}

namespace detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRow = Eigen::Map<RowMatrix>;
using ConstMapRow = Eigen::Map<const RowMatrix>;

inline void require_rank4(const Tensor& x, const char* op) {
  if (x.rank() != 4) throw ShapeError(std::string(op) + ": expected [C, D, H, W], got " + shape_str(x.shape()));
}

struct ConvGeometry {
  std::size_t c, d, h, w;     // input
  std::size_t k;              // cubic kernel
  Index3 pad;
  std::size_t stride;
  std::size_t od, oh, ow;     // output

  ConvGeometry(const Shape& in, std::size_t kernel, Index3 p, std::size_t s)
      : c(in[0]), d(in[1]), h(in[2]), w(in[3]), k(kernel), pad(p), stride(s),
        od(conv_out_size(in[1], p[0], kernel, s)),
        oh(conv_out_size(in[2], p[1], kernel, s)),
        ow(conv_out_size(in[3], p[2], kernel, s)) {
    if (s == 0) throw ShapeError("conv3d: stride must be positive");
  }

  std::size_t rows() const { return c * k * k * k; }
  std::size_t positions() const { return od * oh * ow; }

  /// Visit every (row, position, input offset) triple whose tap lands inside
  /// the input; padded taps are skipped.
  template <typename F>
  void for_each_tap(F&& f) const {
    std::size_t r = 0;
    for (std::size_t ci = 0; ci < c; ++ci)
      for (std::size_t kd = 0; kd < k; ++kd)
        for (std::size_t kh = 0; kh < k; ++kh)
          for (std::size_t kw = 0; kw < k; ++kw, ++r) {
            std::size_t p = 0;
            for (std::size_t z = 0; z < od; ++z) {
              const auto iz = static_cast<std::ptrdiff_t>(z * stride + kd) - static_cast<std::ptrdiff_t>(pad[0]);
              for (std::size_t y = 0; y < oh; ++y) {
                const auto iy = static_cast<std::ptrdiff_t>(y * stride + kh) - static_cast<std::ptrdiff_t>(pad[1]);
                for (std::size_t x = 0; x < ow; ++x, ++p) {
                  const auto ix = static_cast<std::ptrdiff_t>(x * stride + kw) - static_cast<std::ptrdiff_t>(pad[2]);
                  if (iz < 0 || iy < 0 || ix < 0 || iz >= static_cast<std::ptrdiff_t>(d) ||
                      iy >= static_cast<std::ptrdiff_t>(h) || ix >= static_cast<std::ptrdiff_t>(w))
                    continue;
                  f(r, p, ((ci * d + static_cast<std::size_t>(iz)) * h + static_cast<std::size_t>(iy)) * w +
                              static_cast<std::size_t>(ix));
                }
              }
            }
          }
  }
};

inline void check_conv_params(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank4(x, "conv3d");
  if (weight.rank() != 5 || weight.dim(1) != x.dim(0) || weight.dim(2) != weight.dim(3) ||
      weight.dim(3) != weight.dim(4)) {
    throw ShapeError("conv3d: weight " + shape_str(weight.shape()) + " incompatible with input " +
                     shape_str(x.shape()));
  }
  if (bias.rank() != 1 || bias.dim(0) != weight.dim(0)) {
    throw ShapeError("conv3d: bias " + shape_str(bias.shape()) + " does not match weight " +
                     shape_str(weight.shape()));
  }
}

/// Column matrix [C*k^3 x positions] of the input patches.
inline RowMatrix im2col(const Tensor& x, const ConvGeometry& g) {
  RowMatrix cols = RowMatrix::Zero(static_cast<Eigen::Index>(g.rows()), static_cast<Eigen::Index>(g.positions()));
  const auto xd = x.data();
  g.for_each_tap([&](std::size_t r, std::size_t p, std::size_t off) {
    cols(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(p)) = xd[off];
  });
  return cols;
}

}  // namespace detail

/// 3D cross-correlation. x: [C, D, H, W]; weight: [O, C, k, k, k]; bias: [O].
inline Tensor conv3d_forward(const Tensor& x, const Tensor& weight, const Tensor& bias, Index3 pad,
                             std::size_t stride = 1) {
  detail::check_conv_params(x, weight, bias);
  const detail::ConvGeometry g(x.shape(), weight.dim(2), pad, stride);
  const auto o = static_cast<Eigen::Index>(weight.dim(0));
  const auto p = static_cast<Eigen::Index>(g.positions());
  const detail::RowMatrix cols = detail::im2col(x, g);
  Tensor y({weight.dim(0), g.od, g.oh, g.ow});
  detail::MapRow ym(y.data().data(), o, p);
  ym.noalias() = detail::ConstMapRow(weight.data().data(), o, static_cast<Eigen::Index>(g.rows())) * cols;
  for (Eigen::Index i = 0; i < o; ++i) ym.row(i).array() += bias[static_cast<std::size_t>(i)];
  return y;
}

struct ConvGrads {
  Tensor dx, dweight, dbias;
};

/// Gradients of conv3d_forward given the upstream gradient dy.
inline ConvGrads conv3d_backward(const Tensor& x, const Tensor& weight, const Tensor& dy, Index3 pad,
                                 std::size_t stride = 1, bool need_dx = true) {
  detail::require_rank4(x, "conv3d_backward");
  const detail::ConvGeometry g(x.shape(), weight.dim(2), pad, stride);
  if (dy.shape() != Shape{weight.dim(0), g.od, g.oh, g.ow}) {
    throw ShapeError("conv3d_backward: dy shape " + shape_str(dy.shape()) + " does not match output");
  }
  const auto o = static_cast<Eigen::Index>(weight.dim(0));
  const auto p = static_cast<Eigen::Index>(g.positions());
  const auto r = static_cast<Eigen::Index>(g.rows());
  const detail::ConstMapRow dym(dy.data().data(), o, p);
  const detail::RowMatrix cols = detail::im2col(x, g);

  ConvGrads out{Tensor(x.shape()), Tensor(weight.shape()), Tensor({weight.dim(0)})};
  detail::MapRow(out.dweight.data().data(), o, r).noalias() = dym * cols.transpose();
  for (Eigen::Index i = 0; i < o; ++i) out.dbias[static_cast<std::size_t>(i)] = dym.row(i).sum();
  if (need_dx) {
    const detail::RowMatrix dcols = detail::ConstMapRow(weight.data().data(), o, r).transpose() * dym;
    auto dx = out.dx.data();
    g.for_each_tap([&](std::size_t ri, std::size_t pi, std::size_t off) {
      dx[off] += dcols(static_cast<Eigen::Index>(ri), static_cast<Eigen::Index>(pi));
    });
  }
  return out;
}

/// Sentinel in PoolResult::argmax; never produced for a valid window.
inline constexpr std::size_t kNoSource = std::numeric_limits<std::size_t>::max();

struct PoolResult {
  Tensor pooled;
  /// Flat input index chosen for each output element.
  std::vector<std::size_t> argmax;
};

/// Max pooling; padded positions act as -inf and are never selected.
inline PoolResult maxpool3d_forward(const Tensor& x, std::size_t kernel, std::size_t stride, Index3 pad) {
  detail::require_rank4(x, "maxpool3d");
  const std::size_t c = x.dim(0), d = x.dim(1), h = x.dim(2), w = x.dim(3);
  for (std::size_t a = 0; a < 3; ++a) {
    if (pad[a] > kernel / 2) throw ShapeError("maxpool3d: padding must not exceed half the kernel");
  }
  const std::size_t od = conv_out_size(d, pad[0], kernel, stride);
  const std::size_t oh = conv_out_size(h, pad[1], kernel, stride);
  const std::size_t ow = conv_out_size(w, pad[2], kernel, stride);
  PoolResult out{Tensor({c, od, oh, ow}), {}};
  out.argmax.resize(out.pooled.size(), kNoSource);
  const auto xd = x.data();
  std::size_t q = 0;
  for (std::size_t ci = 0; ci < c; ++ci)
    for (std::size_t z = 0; z < od; ++z)
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t xx = 0; xx < ow; ++xx, ++q) {
          double best = -std::numeric_limits<double>::infinity();
          std::size_t arg = kNoSource;
          for (std::size_t kd = 0; kd < kernel; ++kd)
            for (std::size_t kh = 0; kh < kernel; ++kh)
              for (std::size_t kw = 0; kw < kernel; ++kw) {
                const auto iz = static_cast<std::ptrdiff_t>(z * stride + kd) - static_cast<std::ptrdiff_t>(pad[0]);
                const auto iy = static_cast<std::ptrdiff_t>(y * stride + kh) - static_cast<std::ptrdiff_t>(pad[1]);
                const auto ix = static_cast<std::ptrdiff_t>(xx * stride + kw) - static_cast<std::ptrdiff_t>(pad[2]);
                if (iz < 0 || iy < 0 || ix < 0 || iz >= static_cast<std::ptrdiff_t>(d) ||
                    iy >= static_cast<std::ptrdiff_t>(h) || ix >= static_cast<std::ptrdiff_t>(w))
                  continue;
                const std::size_t off = ((ci * d + static_cast<std::size_t>(iz)) * h + static_cast<std::size_t>(iy)) * w +
                                        static_cast<std::size_t>(ix);
                if (arg == kNoSource || xd[off] > best) {
                  best = xd[off];
                  arg = off;
                }
              }
          if (arg == kNoSource) throw ShapeError("maxpool3d: window lies entirely in padding");
          out.pooled[q] = best;
          out.argmax[q] = arg;
        }
  return out;
}

/// Routes each upstream gradient to the input element that won its window.
inline Tensor maxpool3d_backward(const Tensor& dy, const std::vector<std::size_t>& argmax, const Shape& x_shape) {
  if (dy.size() != argmax.size()) throw ShapeError("maxpool3d_backward: argmax/dy size mismatch");
  Tensor dx(x_shape);
  for (std::size_t q = 0; q < dy.size(); ++q) dx[argmax[q]] += dy[q];
  return dx;
}

inline Tensor relu_forward(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  return y;
}

/// x is the ReLU input.
inline Tensor relu_backward(const Tensor& x, const Tensor& dy) {
  Tensor dx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
  return dx;
}

/// y = W x + b for flat x. weight: [out, in].
inline Tensor linear_forward(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (weight.rank() != 2 || weight.dim(1) != x.size() || bias.size() != weight.dim(0)) {
    throw ShapeError("linear: weight " + shape_str(weight.shape()) + " incompatible with input of " +
                     std::to_string(x.size()) + " values");
  }
  const auto o = static_cast<Eigen::Index>(weight.dim(0));
  const auto n = static_cast<Eigen::Index>(weight.dim(1));
  Tensor y({weight.dim(0)});
  Eigen::Map<Eigen::VectorXd> ym(y.data().data(), o);
  ym.noalias() = detail::ConstMapRow(weight.data().data(), o, n) *
                 Eigen::Map<const Eigen::VectorXd>(x.data().data(), n);
  for (std::size_t i = 0; i < bias.size(); ++i) y[i] += bias[i];
  return y;
}

struct LinearGrads {
  Tensor dx, dweight, dbias;
};

inline LinearGrads linear_backward(const Tensor& x, const Tensor& weight, const Tensor& dy) {
  const std::size_t o = weight.dim(0), n = weight.dim(1);
  LinearGrads g{Tensor(x.shape()), Tensor(weight.shape()), Tensor({o})};
  for (std::size_t i = 0; i < o; ++i) {
    g.dbias[i] = dy[i];
    for (std::size_t j = 0; j < n; ++j) {
      g.dweight[i * n + j] = dy[i] * x[j];
      g.dx[j] += weight[i * n + j] * dy[i];
    }
  }
  return g;
}

struct LossResult {
  double loss;
  Tensor dlogits;
};

/// -log softmax(logits)[label] and its gradient softmax - onehot.
inline LossResult softmax_cross_entropy(const Tensor& logits, std::size_t label) {
  if (label >= logits.size()) throw InvalidArgument("softmax_cross_entropy: label out of range");
  double mx = logits[0];
  for (double v : logits.data()) mx = std::max(mx, v);
  double total = 0.0;
  for (double v : logits.data()) total += std::exp(v - mx);
  const double log_z = mx + std::log(total);
  LossResult r{log_z - logits[label], Tensor(logits.shape())};
  for (std::size_t i = 0; i < logits.size(); ++i) r.dlogits[i] = std::exp(logits[i] - log_z);
  r.dlogits[label] -= 1.0;
  return r;
}

// ---------------------------------------------------------------------------
// Network description.
// ---------------------------------------------------------------------------

struct Conv3dSpec {
  std::size_t in_channels, out_channels;
  std::size_t kernel = 3;
  Index3 pad{1, 1, 1};
  std::size_t stride = 1;
};
struct ReluSpec {};
struct MaxPool3dSpec {
  std::size_t kernel = 2;
  std::size_t stride = 2;
  Index3 pad{0, 1, 1};
};
struct FlattenSpec {};
struct LinearSpec {
  std::size_t in_features, out_features;
};

using LayerSpec = std::variant<Conv3dSpec, ReluSpec, MaxPool3dSpec, FlattenSpec, LinearSpec>;

struct NetworkSpec {
  Shape input_shape{1, 32, 5, 3};
  std::vector<LayerSpec> layers;

  /// conv(1->32) relu conv(32->32) relu pool conv(32->64) relu conv(64->64)
  /// relu pool flatten fc(2048->2).
  static NetworkSpec standard() {
    NetworkSpec s;
    s.layers = {Conv3dSpec{1, 32},  ReluSpec{}, Conv3dSpec{32, 32}, ReluSpec{}, MaxPool3dSpec{},
                Conv3dSpec{32, 64}, ReluSpec{}, Conv3dSpec{64, 64}, ReluSpec{}, MaxPool3dSpec{},
                FlattenSpec{},      LinearSpec{2048, 2}};
    return s;
  }

  /// Output shape of every layer, computed without touching data. Throws
  /// ShapeError if any layer cannot accept its input.
  std::vector<Shape> shape_chain() const {
    std::vector<Shape> out;
    Shape cur = input_shape;
    for (const auto& layer : layers) {
      std::visit(
          [&](const auto& l) {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Conv3dSpec>) {
              if (cur.size() != 4 || cur[0] != l.in_channels) {
                throw ShapeError("conv3d expects " + std::to_string(l.in_channels) + " channels, got " +
                                 shape_str(cur));
              }
              cur = {l.out_channels, conv_out_size(cur[1], l.pad[0], l.kernel, l.stride),
                     conv_out_size(cur[2], l.pad[1], l.kernel, l.stride),
                     conv_out_size(cur[3], l.pad[2], l.kernel, l.stride)};
            } else if constexpr (std::is_same_v<T, MaxPool3dSpec>) {
              if (cur.size() != 4) throw ShapeError("maxpool3d expects a rank-4 input");
              cur = {cur[0], conv_out_size(cur[1], l.pad[0], l.kernel, l.stride),
                     conv_out_size(cur[2], l.pad[1], l.kernel, l.stride),
                     conv_out_size(cur[3], l.pad[2], l.kernel, l.stride)};
            } else if constexpr (std::is_same_v<T, FlattenSpec>) {
              cur = {shape_numel(cur)};
            } else if constexpr (std::is_same_v<T, LinearSpec>) {
              if (cur.size() != 1 || cur[0] != l.in_features) {
                throw ShapeError("linear expects " + std::to_string(l.in_features) + " features, got " +
                                 shape_str(cur));
              }
              cur = {l.out_features};
            }
          },
          layer);
      out.push_back(cur);
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Parameters.
// ---------------------------------------------------------------------------

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

struct ModelParams {
  std::vector<Parameter> tensors;
  std::uint64_t seed = 0;

  void zero_grad() {
    for (auto& p : tensors) std::fill(p.grad.data().begin(), p.grad.data().end(), 0.0);
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& p : tensors) n += p.value.size();
    return n;
  }

  bool all_finite() const {
    for (const auto& p : tensors)
      for (double v : p.value.data())
        if (!std::isfinite(v)) return false;
    return true;
  }
};

/// He-normal weights (std sqrt(2 / fan_in)), zero biases, drawn in layer order.
inline ModelParams init_params(const NetworkSpec& spec, std::uint64_t seed) {
  spec.shape_chain();
  ModelParams params;
  params.seed = seed;
  Rng rng(seed);
  std::size_t conv_i = 0, fc_i = 0;
  auto add = [&](std::string name, Shape w_shape, std::size_t fan_in, std::size_t out) {
    Tensor w(w_shape);
    const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& v : w.data()) v = rng.normal() * sd;
    params.tensors.push_back({name + ".weight", w, Tensor(w_shape)});
    params.tensors.push_back({name + ".bias", Tensor({out}), Tensor({out})});
  };
  for (const auto& layer : spec.layers) {
    if (const auto* c = std::get_if<Conv3dSpec>(&layer)) {
      add("conv" + std::to_string(++conv_i), {c->out_channels, c->in_channels, c->kernel, c->kernel, c->kernel},
          c->in_channels * c->kernel * c->kernel * c->kernel, c->out_channels);
    } else if (const auto* l = std::get_if<LinearSpec>(&layer)) {
      add("fc" + std::to_string(++fc_i), {l->out_features, l->in_features}, l->in_features, l->out_features);
    }
  }
  return params;
}

// ---------------------------------------------------------------------------
// Forward / backward over the layer list.
// ---------------------------------------------------------------------------

/// Per-example intermediate values kept for the backward pass.
struct ForwardCache {
  std::vector<Tensor> inputs;                       // input of each layer
  std::vector<std::vector<std::size_t>> argmax;     // per layer (pools only)
  Tensor logits;
};

class Network {
 public:
  explicit Network(NetworkSpec spec, std::uint64_t seed = 0)
      : spec_(std::move(spec)), params_(init_params(spec_, seed)) {
    shapes_ = spec_.shape_chain();
  }

  Network(NetworkSpec spec, ModelParams params) : spec_(std::move(spec)), params_(std::move(params)) {
    shapes_ = spec_.shape_chain();
    std::size_t expected = 0;
    for (const auto& l : spec_.layers) {
      if (std::holds_alternative<Conv3dSpec>(l) || std::holds_alternative<LinearSpec>(l)) expected += 2;
    }
    if (params_.tensors.size() != expected) throw ShapeError("Network: parameter count does not match spec");
  }

  const NetworkSpec& spec() const { return spec_; }
  const std::vector<Shape>& shapes() const { return shapes_; }
  ModelParams& params() { return params_; }
  const ModelParams& params() const { return params_; }

  /// Logits for one example; x may be [D, H, W] (single input channel) or
  /// the full input shape.
  Tensor forward(const Tensor& x) const {
    ForwardCache cache;
    run_forward(x, cache, false);
    return cache.logits;
  }

  std::vector<Tensor> forward_batch(const std::vector<Tensor>& xs) const {
    std::vector<Tensor> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(forward(x));
    return out;
  }

  void run_forward(const Tensor& x, ForwardCache& cache, bool keep) const {
    Tensor cur = as_input(x);
    cache.inputs.clear();
    cache.argmax.assign(spec_.layers.size(), {});
    std::size_t pi = 0;
    for (std::size_t li = 0; li < spec_.layers.size(); ++li) {
      if (keep) cache.inputs.push_back(cur);
      const auto& layer = spec_.layers[li];
      if (const auto* c = std::get_if<Conv3dSpec>(&layer)) {
        cur = conv3d_forward(cur, params_.tensors[pi].value, params_.tensors[pi + 1].value, c->pad, c->stride);
        pi += 2;
      } else if (std::holds_alternative<ReluSpec>(layer)) {
        cur = relu_forward(cur);
      } else if (const auto* p = std::get_if<MaxPool3dSpec>(&layer)) {
        auto r = maxpool3d_forward(cur, p->kernel, p->stride, p->pad);
        cur = std::move(r.pooled);
        if (keep) cache.argmax[li] = std::move(r.argmax);
      } else if (std::holds_alternative<FlattenSpec>(layer)) {
        cur = reshape(cur, {cur.size()});
      } else if (std::holds_alternative<LinearSpec>(layer)) {
        cur = linear_forward(cur, params_.tensors[pi].value, params_.tensors[pi + 1].value);
        pi += 2;
      }
    }
    cache.logits = std::move(cur);
  }

  /// Accumulates d(loss)/d(param) * weight into `grads` (one tensor per
  /// parameter) and returns d(loss)/d(input).
  Tensor run_backward(const ForwardCache& cache, const Tensor& dlogits, std::vector<Tensor>& grads,
                      double weight = 1.0) const {
    Tensor g = dlogits;
    std::size_t pi = params_.tensors.size();
    for (std::size_t li = spec_.layers.size(); li-- > 0;) {
      const auto& layer = spec_.layers[li];
      const Tensor& in = cache.inputs[li];
      if (const auto* c = std::get_if<Conv3dSpec>(&layer)) {
        pi -= 2;
        auto cg = conv3d_backward(in, params_.tensors[pi].value, g, c->pad, c->stride, true);
        axpy(grads[pi], cg.dweight, weight);
        axpy(grads[pi + 1], cg.dbias, weight);
        g = std::move(cg.dx);
      } else if (std::holds_alternative<ReluSpec>(layer)) {
        g = relu_backward(in, g);
      } else if (std::holds_alternative<MaxPool3dSpec>(layer)) {
        g = maxpool3d_backward(g, cache.argmax[li], in.shape());
      } else if (std::holds_alternative<FlattenSpec>(layer)) {
        g = reshape(g, in.shape());
      } else if (std::holds_alternative<LinearSpec>(layer)) {
        pi -= 2;
        auto lg = linear_backward(in, params_.tensors[pi].value, g);
        axpy(grads[pi], lg.dweight, weight);
        axpy(grads[pi + 1], lg.dbias, weight);
        g = std::move(lg.dx);
      }
    }
    return g;
  }

  /// Mean softmax cross-entropy over the batch. Fills every parameter's
  /// grad buffer (overwriting it) and returns the loss.
  /// Optionally records the argmax prediction made during the forward pass.
  double backward(const std::vector<Tensor>& batch, const std::vector<int>& labels,
                  std::vector<int>* predictions = nullptr) {
    if (batch.empty() || batch.size() != labels.size()) {
      throw InvalidArgument("backward: batch and labels must be non-empty and equally long");
    }
    const std::size_t classes = shapes_.back()[0];
    for (int l : labels) {
      if (l < 0 || static_cast<std::size_t>(l) >= classes) {
        throw InvalidArgument("backward: invalid label " + std::to_string(l));
      }
    }
    std::vector<Tensor> grads;
    for (const auto& p : params_.tensors) grads.emplace_back(p.value.shape());
    const double w = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    ForwardCache cache;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      run_forward(batch[i], cache, true);
      const auto lr = softmax_cross_entropy(cache.logits, static_cast<std::size_t>(labels[i]));
      loss += lr.loss;
      if (predictions) predictions->push_back(argmax(cache.logits));
      run_backward(cache, lr.dlogits, grads, w);
    }
    for (std::size_t k = 0; k < grads.size(); ++k) params_.tensors[k].grad = std::move(grads[k]);
    return loss * w;
  }

  /// Mean loss without touching gradients.
  double loss(const std::vector<Tensor>& batch, const std::vector<int>& labels) const {
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      total += softmax_cross_entropy(forward(batch[i]), static_cast<std::size_t>(labels[i])).loss;
    }
    return total / static_cast<double>(batch.size());
  }

  int predict(const Tensor& x) const { return argmax(forward(x)); }

 private:
  static int argmax(const Tensor& logits) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i)
      if (logits[i] > logits[best]) best = i;
    return static_cast<int>(best);
  }

  static void axpy(Tensor& acc, const Tensor& g, double w) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * g[i];
  }

  Tensor as_input(const Tensor& x) const {
    if (x.shape() == spec_.input_shape) return x;
    if (shape_numel(x.shape()) == shape_numel(spec_.input_shape) && x.rank() + 1 == spec_.input_shape.size() &&
        spec_.input_shape[0] == 1) {
      return reshape(x, spec_.input_shape);
    }
    throw ShapeError("forward: input " + shape_str(x.shape()) + " does not match network input " +
                     shape_str(spec_.input_shape));
  }

  NetworkSpec spec_;
  ModelParams params_;
  std::vector<Shape> shapes_;
};

}  // namespace mcaeeg::cnn
