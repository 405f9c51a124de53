#include "attribex/network.hpp"

#include <algorithm>
#include <cmath>

#include "attribex/errors.hpp"

namespace attribex {

namespace {

struct KindName {
  LayerKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {LayerKind::Dense, "Dense"},         {LayerKind::Conv2D, "Conv2D"},
    {LayerKind::ReLU, "ReLU"},           {LayerKind::MaxPool2D, "MaxPool2D"},
    {LayerKind::AvgPool2D, "AvgPool2D"}, {LayerKind::Flatten, "Flatten"},
    {LayerKind::SoftMinHead, "SoftMinHead"}, {LayerKind::LogSumExpPool, "LogSumExpPool"},
};

std::size_t pooled_extent(std::size_t in, std::size_t size, std::size_t stride) {
  return (in - size) / stride + 1;
}

Shape infer_output_shape(const Layer& layer, const Shape& in, long index) {
  auto fail = [&](const std::string& field, const std::string& what) -> Shape {
    throw ModelFormatError(index, field, what);
  };
  const std::size_t n_in = shape_size(in);
  switch (layer.kind) {
    case LayerKind::Dense:
    case LayerKind::SoftMinHead: {
      if (!layer.weights) return fail("W", "missing weights");
      const auto& ws = layer.weights->shape();
      if (ws.size() != 2 || ws[1] != n_in)
        return fail("W", "expected shape [units, " + std::to_string(n_in) + "], got " + shape_string(ws));
      if (layer.bias && layer.bias->shape() != Shape{ws[0]})
        return fail("b", "expected " + std::to_string(ws[0]) + " values, got " + std::to_string(layer.bias->size()));
      if (layer.kind == LayerKind::SoftMinHead) {
        if (!(layer.beta > 0.0)) return fail("beta", "must be > 0");
        return Shape{1};
      }
      return Shape{ws[0]};
    }
    case LayerKind::Conv2D: {
      if (in.size() != 3) return fail("", "Conv2D needs input [c, h, w], got " + shape_string(in));
      if (!layer.weights) return fail("W", "missing weights");
      const auto& ws = layer.weights->shape();
      if (ws.size() != 4 || ws[1] != in[0]) return fail("W", "expected [filters, " + std::to_string(in[0]) + ", kh, kw]");
      if (layer.bias && layer.bias->shape() != Shape{ws[0]})
        return fail("b", "expected " + std::to_string(ws[0]) + " values, got " + std::to_string(layer.bias->size()));
      if (layer.stride == 0) return fail("stride", "must be >= 1");
      const std::size_t h = in[1] + 2 * layer.pad, w = in[2] + 2 * layer.pad;
      if (ws[2] > h || ws[3] > w) return fail("kernel", "kernel larger than padded input");
      return Shape{ws[0], pooled_extent(h, ws[2], layer.stride), pooled_extent(w, ws[3], layer.stride)};
    }
    case LayerKind::MaxPool2D:
    case LayerKind::AvgPool2D: {
      if (in.size() != 3) return fail("", "pooling needs input [c, h, w], got " + shape_string(in));
      if (layer.size == 0) return fail("size", "must be >= 1");
      if (layer.stride == 0) return fail("stride", "must be >= 1");
      if (layer.size > in[1] || layer.size > in[2]) return fail("size", "window larger than input");
      return Shape{in[0], pooled_extent(in[1], layer.size, layer.stride), pooled_extent(in[2], layer.size, layer.stride)};
    }
    case LayerKind::ReLU:
      return in;
    case LayerKind::Flatten:
      return Shape{n_in};
    case LayerKind::LogSumExpPool: {
      if (!(layer.beta > 0.0)) return fail("beta", "must be > 0");
      if (layer.sign != 1 && layer.sign != -1) return fail("mode", "must be max or min");
      if (layer.groups.empty()) return fail("groups", "no groups");
      std::size_t total = 0;
      for (auto g : layer.groups) {
        if (g == 0) return fail("groups", "empty group");
        total += g;
      }
      if (total != n_in) return fail("groups", "group sizes sum to " + std::to_string(total) + ", input has " + std::to_string(n_in));
      return Shape{layer.groups.size()};
    }
  }
  return fail("kind", "unknown kind");
}

}  // namespace

std::string to_string(LayerKind kind) {
  for (const auto& kn : kKindNames)
    if (kn.kind == kind) return kn.name;
  return "?";
}

std::optional<LayerKind> layer_kind_from_string(const std::string& name) {
  for (const auto& kn : kKindNames)
    if (name == kn.name) return kn.kind;
  return std::nullopt;
}

Layer Layer::dense(Tensor w, std::optional<Tensor> b) {
  Layer l;
  l.kind = LayerKind::Dense;
  l.weights = std::move(w);
  l.bias = std::move(b);
  return l;
}

Layer Layer::conv2d(Tensor w, std::optional<Tensor> b, std::size_t stride, std::size_t pad) {
  Layer l;
  l.kind = LayerKind::Conv2D;
  l.weights = std::move(w);
  l.bias = std::move(b);
  l.stride = stride;
  l.pad = pad;
  return l;
}

Layer Layer::relu() { return Layer{}; }

Layer Layer::max_pool(std::size_t size, std::size_t stride) {
  Layer l;
  l.kind = LayerKind::MaxPool2D;
  l.size = size;
  l.stride = stride;
  return l;
}

Layer Layer::avg_pool(std::size_t size, std::size_t stride) {
  Layer l = max_pool(size, stride);
  l.kind = LayerKind::AvgPool2D;
  return l;
}

Layer Layer::flatten() {
  Layer l;
  l.kind = LayerKind::Flatten;
  return l;
}

Layer Layer::soft_min_head(Tensor w, std::optional<Tensor> b, double beta) {
  Layer l;
  l.kind = LayerKind::SoftMinHead;
  l.weights = std::move(w);
  l.bias = std::move(b);
  l.beta = beta;
  return l;
}

Layer Layer::log_sum_exp_pool(std::vector<std::size_t> groups, int sign, double beta) {
  Layer l;
  l.kind = LayerKind::LogSumExpPool;
  l.groups = std::move(groups);
  l.sign = sign;
  l.beta = beta;
  return l;
}

Network::Network(Shape input_shape, std::vector<Layer> layers, std::string name, std::vector<std::string> labels)
    : input_shape_(std::move(input_shape)), layers_(std::move(layers)), name_(std::move(name)), labels_(std::move(labels)) {
  if (input_shape_.empty() || shape_size(input_shape_) == 0)
    throw ModelFormatError(-1, "input_shape", "must be non-empty with positive extents");
  for (auto e : input_shape_)
    if (e == 0) throw ModelFormatError(-1, "input_shape", "zero extent");
  if (layers_.empty()) throw ModelFormatError(-1, "layers", "network has no layers");
  shapes_.push_back(input_shape_);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (!l.weighted() && (l.weights || l.bias))
      throw ModelFormatError(static_cast<long>(i), "W", to_string(l.kind) + " takes no weights");
    shapes_.push_back(infer_output_shape(l, shapes_.back(), static_cast<long>(i)));
  }
  if (!labels_.empty() && labels_.size() != output_size())
    throw ModelFormatError(-1, "labels", "expected " + std::to_string(output_size()) + " labels");
}

bool Network::has_bias() const {
  return std::any_of(layers_.begin(), layers_.end(), [](const Layer& l) {
    if (!l.bias) return false;
    return std::any_of(l.bias->values().begin(), l.bias->values().end(), [](double v) { return v != 0.0; });
  });
}

std::vector<std::size_t> Network::weighted_layers() const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < layers_.size(); ++i)
    if (layers_[i].weighted()) idx.push_back(i);
  return idx;
}

void Network::check_input(const Tensor& x) const {
  if (x.size() != input_size())
    throw InputShapeError("network expects " + shape_string(input_shape_) + ", got " + shape_string(x.shape()));
  if (x.shape() != input_shape_ && x.rank() != 1)
    throw InputShapeError("network expects " + shape_string(input_shape_) + ", got " + shape_string(x.shape()));
}

void Network::check_target(std::size_t target) const {
  if (target >= output_size())
    throw ConfigError("target " + std::to_string(target) + " out of range for " + std::to_string(output_size()) + " outputs");
}

ActivationTrace Network::forward(const Tensor& x) const {
  check_input(x);
  ActivationTrace trace;
  trace.activations.reserve(layers_.size() + 1);
  trace.activations.push_back(x.shape() == input_shape_ ? x : x.reshaped(input_shape_));
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Tensor y = ops::forward(layers_[i], shapes_[i], shapes_[i + 1], trace.activations.back());
    check_finite(y.data(), "layer " + std::to_string(i) + " (" + to_string(layers_[i].kind) + ") output");
    trace.activations.push_back(std::move(y));
  }
  return trace;
}

double Network::evaluate(const Tensor& x, std::size_t target) const {
  check_target(target);
  return forward(x).output()[target];
}

Tensor Network::gradient(const Tensor& x, std::size_t target) const { return gradient(forward(x), target); }

Tensor Network::gradient(const ActivationTrace& trace, std::size_t target) const {
  check_target(target);
  Tensor grad(shapes_.back());
  grad[target] = 1.0;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    grad = ops::backward(layers_[i], shapes_[i], trace.activations[i], trace.activations[i + 1], grad);
  }
  check_finite(grad.data(), "gradient");
  return grad;
}

}  // namespace attribex
