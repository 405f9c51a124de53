#include <algorithm>
#include <cmath>
#include <limits>

#include "attribex/errors.hpp"
#include "attribex/network.hpp"

namespace attribex::ops {

namespace {

std::span<const double> bias_of(const Layer& l) {
  if (l.bias) return l.bias->data();
  return {};
}

// Sum of already non-negative terms in ascending order.
double sorted_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

Tensor make(const Shape& shape, std::vector<double> data) { return Tensor(shape, std::move(data)); }

}  // namespace

Shape linear_shape(const Layer& layer, const Shape& in_shape) {
  const auto& ws = layer.weights->shape();
  if (layer.kind == LayerKind::Conv2D) {
    const std::size_t h = in_shape[1] + 2 * layer.pad, w = in_shape[2] + 2 * layer.pad;
    return Shape{ws[0], (h - ws[2]) / layer.stride + 1, (w - ws[3]) / layer.stride + 1};
  }
  return Shape{ws[0]};
}

std::vector<double> linear_forward(const Layer& layer, const Shape& in_shape, const Shape& lin_shape,
                                   std::span<const double> weights, std::span<const double> bias,
                                   std::span<const double> x) {
  const auto& ws = layer.weights->shape();
  std::vector<double> out(shape_size(lin_shape), 0.0);
  if (layer.kind == LayerKind::Conv2D) {
    const std::size_t oc = ws[0], ic = ws[1], kh = ws[2], kw = ws[3];
    const std::size_t H = in_shape[1], W = in_shape[2];
    const std::size_t oh = lin_shape[1], ow = lin_shape[2];
    const long pad = static_cast<long>(layer.pad);
    for (std::size_t o = 0; o < oc; ++o) {
      for (std::size_t r = 0; r < oh; ++r) {
        for (std::size_t c = 0; c < ow; ++c) {
          double acc = bias.empty() ? 0.0 : bias[o];
          for (std::size_t ch = 0; ch < ic; ++ch) {
            for (std::size_t u = 0; u < kh; ++u) {
              const long ir = static_cast<long>(r * layer.stride + u) - pad;
              if (ir < 0 || ir >= static_cast<long>(H)) continue;
              for (std::size_t v = 0; v < kw; ++v) {
                const long icol = static_cast<long>(c * layer.stride + v) - pad;
                if (icol < 0 || icol >= static_cast<long>(W)) continue;
                acc += weights[((o * ic + ch) * kh + u) * kw + v] * x[(ch * H + ir) * W + icol];
              }
            }
          }
          out[(o * oh + r) * ow + c] = acc;
        }
      }
    }
    return out;
  }
  const std::size_t rows = ws[0], cols = ws[1];
  for (std::size_t k = 0; k < rows; ++k) {
    double acc = bias.empty() ? 0.0 : bias[k];
    const double* wrow = weights.data() + k * cols;
    for (std::size_t j = 0; j < cols; ++j) acc += wrow[j] * x[j];
    out[k] = acc;
  }
  return out;
}

std::vector<double> linear_backward(const Layer& layer, const Shape& in_shape, const Shape& lin_shape,
                                    std::span<const double> weights, std::span<const double> grad_out) {
  const auto& ws = layer.weights->shape();
  std::vector<double> g(shape_size(in_shape), 0.0);
  if (layer.kind == LayerKind::Conv2D) {
    const std::size_t oc = ws[0], ic = ws[1], kh = ws[2], kw = ws[3];
    const std::size_t H = in_shape[1], W = in_shape[2];
    const std::size_t oh = lin_shape[1], ow = lin_shape[2];
    const long pad = static_cast<long>(layer.pad);
    for (std::size_t o = 0; o < oc; ++o) {
      for (std::size_t r = 0; r < oh; ++r) {
        for (std::size_t c = 0; c < ow; ++c) {
          const double go = grad_out[(o * oh + r) * ow + c];
          if (go == 0.0) continue;
          for (std::size_t ch = 0; ch < ic; ++ch) {
            for (std::size_t u = 0; u < kh; ++u) {
              const long ir = static_cast<long>(r * layer.stride + u) - pad;
              if (ir < 0 || ir >= static_cast<long>(H)) continue;
              for (std::size_t v = 0; v < kw; ++v) {
                const long icol = static_cast<long>(c * layer.stride + v) - pad;
                if (icol < 0 || icol >= static_cast<long>(W)) continue;
                g[(ch * H + ir) * W + icol] += weights[((o * ic + ch) * kh + u) * kw + v] * go;
              }
            }
          }
        }
      }
    }
    return g;
  }
  const std::size_t rows = ws[0], cols = ws[1];
  for (std::size_t k = 0; k < rows; ++k) {
    const double go = grad_out[k];
    if (go == 0.0) continue;
    const double* wrow = weights.data() + k * cols;
    for (std::size_t j = 0; j < cols; ++j) g[j] += wrow[j] * go;
  }
  return g;
}

std::vector<double> soft_weights(std::span<const double> values, int sign, double beta) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values) m = std::max(m, sign * v);
  std::vector<double> e(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) e[i] = std::exp(beta * (sign * values[i] - m));
  std::vector<double> sorted = e;
  const double total = sorted_sum(sorted);
  for (double& v : e) v /= total;
  return e;
}

// The extremum is factored out in input units, so a singleton group returns
// its value exactly.
double soft_pool(std::span<const double> values, int sign, double beta) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values) m = std::max(m, sign * v);
  std::vector<double> e(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) e[i] = std::exp(beta * (sign * values[i] - m));
  const double total = sorted_sum(e);
  return sign * (m + std::log(total) / beta);
}

Tensor forward(const Layer& layer, const Shape& in_shape, const Shape& out_shape, const Tensor& x) {
  switch (layer.kind) {
    case LayerKind::Dense:
    case LayerKind::Conv2D:
      return make(out_shape, linear_forward(layer, in_shape, out_shape, layer.weights->data(), bias_of(layer), x.data()));
    case LayerKind::SoftMinHead: {
      const Shape ls = linear_shape(layer, in_shape);
      auto z = linear_forward(layer, in_shape, ls, layer.weights->data(), bias_of(layer), x.data());
      return make(out_shape, {soft_pool(z, -1, layer.beta)});
    }
    case LayerKind::ReLU: {
      std::vector<double> y(x.values());
      for (double& v : y) v = v > 0.0 ? v : 0.0;
      return make(out_shape, std::move(y));
    }
    case LayerKind::Flatten:
      return x.reshaped(out_shape);
    case LayerKind::MaxPool2D:
    case LayerKind::AvgPool2D: {
      const std::size_t C = in_shape[0], H = in_shape[1], W = in_shape[2];
      const std::size_t oh = out_shape[1], ow = out_shape[2], k = layer.size, s = layer.stride;
      std::vector<double> y(shape_size(out_shape));
      for (std::size_t ch = 0; ch < C; ++ch)
        for (std::size_t r = 0; r < oh; ++r)
          for (std::size_t c = 0; c < ow; ++c) {
            double acc = layer.kind == LayerKind::MaxPool2D ? -std::numeric_limits<double>::infinity() : 0.0;
            for (std::size_t u = 0; u < k; ++u)
              for (std::size_t v = 0; v < k; ++v) {
                const double a = x[(ch * H + r * s + u) * W + c * s + v];
                if (layer.kind == LayerKind::MaxPool2D)
                  acc = std::max(acc, a);
                else
                  acc += a;
              }
            if (layer.kind == LayerKind::AvgPool2D) acc /= static_cast<double>(k * k);
            y[(ch * oh + r) * ow + c] = acc;
          }
      return make(out_shape, std::move(y));
    }
    case LayerKind::LogSumExpPool: {
      std::vector<double> y(layer.groups.size());
      std::size_t offset = 0;
      for (std::size_t g = 0; g < layer.groups.size(); ++g) {
        y[g] = soft_pool(x.data().subspan(offset, layer.groups[g]), layer.sign, layer.beta);
        offset += layer.groups[g];
      }
      return make(out_shape, std::move(y));
    }
  }
  throw ConfigError("unsupported layer kind");
}

Tensor backward(const Layer& layer, const Shape& in_shape, const Tensor& x, const Tensor& y, const Tensor& grad_out) {
  switch (layer.kind) {
    case LayerKind::Dense:
    case LayerKind::Conv2D:
      return make(in_shape, linear_backward(layer, in_shape, y.shape(), layer.weights->data(), grad_out.data()));
    case LayerKind::SoftMinHead: {
      const Shape ls = linear_shape(layer, in_shape);
      auto z = linear_forward(layer, in_shape, ls, layer.weights->data(), bias_of(layer), x.data());
      auto p = soft_weights(z, -1, layer.beta);
      for (double& v : p) v *= grad_out[0];
      return make(in_shape, linear_backward(layer, in_shape, ls, layer.weights->data(), p));
    }
    case LayerKind::ReLU: {
      std::vector<double> g(grad_out.values());
      for (std::size_t i = 0; i < g.size(); ++i)
        if (!(x[i] > 0.0)) g[i] = 0.0;
      return make(in_shape, std::move(g));
    }
    case LayerKind::Flatten:
      return grad_out.reshaped(in_shape);
    case LayerKind::MaxPool2D:
    case LayerKind::AvgPool2D: {
      const std::size_t C = in_shape[0], H = in_shape[1], W = in_shape[2];
      const std::size_t oh = y.shape()[1], ow = y.shape()[2], k = layer.size, s = layer.stride;
      std::vector<double> g(shape_size(in_shape), 0.0);
      for (std::size_t ch = 0; ch < C; ++ch)
        for (std::size_t r = 0; r < oh; ++r)
          for (std::size_t c = 0; c < ow; ++c) {
            const double go = grad_out[(ch * oh + r) * ow + c];
            if (layer.kind == LayerKind::MaxPool2D) {
              // First index in row-major window order wins ties.
              std::size_t best = (ch * H + r * s) * W + c * s;
              for (std::size_t u = 0; u < k; ++u)
                for (std::size_t v = 0; v < k; ++v) {
                  const std::size_t idx = (ch * H + r * s + u) * W + c * s + v;
                  if (x[idx] > x[best]) best = idx;
                }
              g[best] += go;
            } else {
              const double share = go / static_cast<double>(k * k);
              for (std::size_t u = 0; u < k; ++u)
                for (std::size_t v = 0; v < k; ++v) g[(ch * H + r * s + u) * W + c * s + v] += share;
            }
          }
      return make(in_shape, std::move(g));
    }
    case LayerKind::LogSumExpPool: {
      std::vector<double> g(x.size());
      std::size_t offset = 0;
      for (std::size_t grp = 0; grp < layer.groups.size(); ++grp) {
        auto p = soft_weights(x.data().subspan(offset, layer.groups[grp]), layer.sign, layer.beta);
        for (std::size_t i = 0; i < p.size(); ++i) g[offset + i] = p[i] * grad_out[grp];
        offset += layer.groups[grp];
      }
      return make(in_shape, std::move(g));
    }
  }
  throw ConfigError("unsupported layer kind");
}

}  // namespace attribex::ops
