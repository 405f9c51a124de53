#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attribex/tensor.hpp"

namespace attribex {

enum class LayerKind { Dense, Conv2D, ReLU, MaxPool2D, AvgPool2D, Flatten, SoftMinHead, LogSumExpPool };

std::string to_string(LayerKind kind);
std::optional<LayerKind> layer_kind_from_string(const std::string& name);

// One layer of a sequential network. Only the fields relevant to `kind` are
// meaningful:
//   Dense         W[out, in], b[out]          input flattened, output [out]
//   Conv2D        W[oc, c, kh, kw], b[oc]     input [c, h, w], explicit zero pad
//   MaxPool2D     size, stride                input [c, h, w], no padding
//   AvgPool2D     size, stride
//   SoftMinHead   W[m, in], b[m], beta        output [1] = -1/beta log sum exp(-beta z)
//   LogSumExpPool groups, sign, beta          output [groups] = sign/beta log sum exp(sign beta x)
struct Layer {
  LayerKind kind = LayerKind::ReLU;
  std::optional<Tensor> weights;
  std::optional<Tensor> bias;
  std::size_t stride = 1;
  std::size_t pad = 0;
  std::size_t size = 0;
  double beta = 1.0;
  int sign = 1;
  std::vector<std::size_t> groups;

  bool weighted() const noexcept {
    return kind == LayerKind::Dense || kind == LayerKind::Conv2D || kind == LayerKind::SoftMinHead;
  }

  static Layer dense(Tensor w, std::optional<Tensor> b = std::nullopt);
  static Layer conv2d(Tensor w, std::optional<Tensor> b, std::size_t stride, std::size_t pad);
  static Layer relu();
  static Layer max_pool(std::size_t size, std::size_t stride);
  static Layer avg_pool(std::size_t size, std::size_t stride);
  static Layer flatten();
  static Layer soft_min_head(Tensor w, std::optional<Tensor> b, double beta);
  static Layer log_sum_exp_pool(std::vector<std::size_t> groups, int sign, double beta);
};

// a^(0) = x, a^(l) = f_l(a^(l-1)); holds L + 1 tensors.
struct ActivationTrace {
  std::vector<Tensor> activations;

  const Tensor& input() const { return activations.front(); }
  const Tensor& output() const { return activations.back(); }
};

// Immutable after construction, safe to share between threads.
class Network {
 public:
  Network(Shape input_shape, std::vector<Layer> layers, std::string name = {},
          std::vector<std::string> labels = {});

  const Shape& input_shape() const noexcept { return input_shape_; }
  std::size_t input_size() const noexcept { return shape_size(input_shape_); }
  std::size_t output_size() const noexcept { return shape_size(shapes_.back()); }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  const Shape& layer_input_shape(std::size_t i) const { return shapes_.at(i); }
  const Shape& layer_output_shape(std::size_t i) const { return shapes_.at(i + 1); }
  const std::string& name() const noexcept { return name_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  bool has_bias() const;
  std::vector<std::size_t> weighted_layers() const;

  ActivationTrace forward(const Tensor& x) const;
  // f(x) for the selected output component.
  double evaluate(const Tensor& x, std::size_t target) const;
  // Exact reverse-mode gradient of output[target] with respect to x.
  Tensor gradient(const Tensor& x, std::size_t target) const;
  // Gradient given an already computed trace.
  Tensor gradient(const ActivationTrace& trace, std::size_t target) const;

  void check_input(const Tensor& x) const;
  void check_target(std::size_t target) const;

 private:
  Shape input_shape_;
  std::vector<Layer> layers_;
  std::vector<Shape> shapes_;
  std::string name_;
  std::vector<std::string> labels_;
};

// Per-layer primitives, shared by the gradient and relevance passes.
namespace ops {

Tensor forward(const Layer& layer, const Shape& in_shape, const Shape& out_shape, const Tensor& x);
Tensor backward(const Layer& layer, const Shape& in_shape, const Tensor& x, const Tensor& y,
                const Tensor& grad_out);

// Linear part of a weighted layer evaluated with substitute parameters.
// `bias` may be empty.
std::vector<double> linear_forward(const Layer& layer, const Shape& in_shape, const Shape& lin_shape,
                                   std::span<const double> weights, std::span<const double> bias,
                                   std::span<const double> x);
// Transpose of linear_forward with the same substitute weights.
std::vector<double> linear_backward(const Layer& layer, const Shape& in_shape, const Shape& lin_shape,
                                    std::span<const double> weights, std::span<const double> grad_out);
// Output shape of the linear part (SoftMinHead: [m]).
Shape linear_shape(const Layer& layer, const Shape& in_shape);

// Soft pooling weights p = softmax(sign * beta * values), max-subtracted.
std::vector<double> soft_weights(std::span<const double> values, int sign, double beta);
// sign/beta * log sum exp(sign * beta * values) with sorted summation.
double soft_pool(std::span<const double> values, int sign, double beta);

}  // namespace ops

}  // namespace attribex
