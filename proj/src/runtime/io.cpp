#include "attribex/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "attribex/errors.hpp"

namespace attribex {

using nlohmann::json;

namespace {

void emit(const json& v, std::string& out, bool pretty, int depth) {
  auto newline = [&](int d) {
    if (!pretty) return;
    out += '\n';
    out.append(static_cast<std::size_t>(2 * d), ' ');
  };
  switch (v.type()) {
    case json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += json(it.key()).dump();
        out += pretty ? ": " : ":";
        emit(it.value(), out, pretty, depth + 1);
      }
      if (!v.empty()) newline(depth);
      out += '}';
      break;
    }
    case json::value_t::array: {
      // Numeric arrays stay on one line even in pretty mode.
      const bool flat = std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); });
      out += '[';
      bool first = true;
      for (const auto& e : v) {
        if (!first) out += pretty && flat ? ", " : ",";
        first = false;
        if (!flat) newline(depth + 1);
        emit(e, out, pretty, depth + 1);
      }
      if (!flat && !v.empty()) newline(depth);
      out += ']';
      break;
    }
    case json::value_t::number_float: {
      const double d = v.get<double>();
      if (!std::isfinite(d)) throw NumericsError("cannot serialize non-finite number");
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.16e", d);
      out += buf;
      break;
    }
    default:
      out += v.dump();
  }
}

json floats(std::span<const double> values) {
  json arr = json::array();
  for (double v : values) arr.push_back(v);
  return arr;
}

std::vector<double> read_floats(const json& arr, long layer, const std::string& field) {
  if (!arr.is_array()) throw ModelFormatError(layer, field, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(arr.size());
  for (const auto& e : arr) {
    if (!e.is_number()) throw ModelFormatError(layer, field, "expected numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

Shape read_shape(const json& arr, long layer, const std::string& field) {
  if (!arr.is_array() || arr.empty()) throw ModelFormatError(layer, field, "expected a non-empty array of extents");
  Shape s;
  for (const auto& e : arr) {
    if (!e.is_number_integer() || e.get<long long>() <= 0)
      throw ModelFormatError(layer, field, "extents must be positive integers");
    s.push_back(e.get<std::size_t>());
  }
  return s;
}

std::size_t read_count(const json& obj, const char* key, long layer, std::optional<std::size_t> fallback = {}) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    throw ModelFormatError(layer, key, "missing");
  }
  const auto& e = obj.at(key);
  if (!e.is_number_integer() || e.get<long long>() < 0) throw ModelFormatError(layer, key, "expected a non-negative integer");
  return e.get<std::size_t>();
}

Tensor make_tensor(Shape shape, std::vector<double> data, long layer, const std::string& field) {
  if (shape_size(shape) != data.size())
    throw ModelFormatError(layer, field,
                           "expected " + std::to_string(shape_size(shape)) + " values, got " + std::to_string(data.size()));
  try {
    return Tensor(std::move(shape), std::move(data));
  } catch (const Error& e) {
    throw ModelFormatError(layer, field, e.what());
  }
}

}  // namespace

std::string dump_json(const json& value, bool pretty) {
  std::string out;
  emit(value, out, pretty, 0);
  if (pretty) out += '\n';
  return out;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ModelFormatError(-1, "", path.string() + ": invalid JSON: " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

json model_to_json(const Network& net) {
  json doc;
  doc["name"] = net.name();
  doc["input_shape"] = net.input_shape();
  json layers = json::array();
  for (const auto& l : net.layers()) {
    json j;
    j["kind"] = to_string(l.kind);
    switch (l.kind) {
      case LayerKind::Dense:
        j["units"] = l.weights->shape()[0];
        break;
      case LayerKind::SoftMinHead:
        j["units"] = l.weights->shape()[0];
        j["beta"] = l.beta;
        break;
      case LayerKind::Conv2D:
        j["filters"] = l.weights->shape()[0];
        j["kernel"] = {l.weights->shape()[2], l.weights->shape()[3]};
        j["stride"] = l.stride;
        j["pad"] = l.pad;
        break;
      case LayerKind::MaxPool2D:
      case LayerKind::AvgPool2D:
        j["size"] = l.size;
        j["stride"] = l.stride;
        break;
      case LayerKind::LogSumExpPool:
        j["groups"] = l.groups;
        j["mode"] = l.sign > 0 ? "max" : "min";
        j["beta"] = l.beta;
        break;
      case LayerKind::ReLU:
      case LayerKind::Flatten:
        break;
    }
    if (l.weights) j["W"] = floats(l.weights->data());
    if (l.bias) j["b"] = floats(l.bias->data());
    layers.push_back(std::move(j));
  }
  doc["layers"] = std::move(layers);
  doc["labels"] = net.labels();
  return doc;
}

Network model_from_json(const json& doc) {
  if (!doc.is_object()) throw ModelFormatError(-1, "", "model must be a JSON object");
  if (!doc.contains("input_shape")) throw ModelFormatError(-1, "input_shape", "missing");
  if (!doc.contains("layers") || !doc.at("layers").is_array()) throw ModelFormatError(-1, "layers", "missing or not an array");
  Shape shape = read_shape(doc.at("input_shape"), -1, "input_shape");
  const Shape input_shape = shape;

  std::vector<Layer> layers;
  Shape current = shape;
  long index = 0;
  for (const auto& j : doc.at("layers")) {
    if (!j.is_object()) throw ModelFormatError(index, "", "layer must be an object");
    if (!j.contains("kind") || !j.at("kind").is_string()) throw ModelFormatError(index, "kind", "missing");
    const std::string kind_name = j.at("kind").get<std::string>();
    auto kind = layer_kind_from_string(kind_name);
    if (!kind) throw ModelFormatError(index, "kind", "unknown kind '" + kind_name + "'");

    Layer l;
    l.kind = *kind;
    const std::size_t n_in = shape_size(current);
    auto read_bias = [&](std::size_t rows) -> std::optional<Tensor> {
      if (!j.contains("b")) return std::nullopt;
      return make_tensor(Shape{rows}, read_floats(j.at("b"), index, "b"), index, "b");
    };
    auto read_beta = [&] {
      if (!j.contains("beta") || !j.at("beta").is_number()) throw ModelFormatError(index, "beta", "missing");
      l.beta = j.at("beta").get<double>();
      if (!(l.beta > 0.0) || !std::isfinite(l.beta)) throw ModelFormatError(index, "beta", "must be > 0");
    };
    switch (l.kind) {
      case LayerKind::Dense:
      case LayerKind::SoftMinHead: {
        if (!j.contains("W")) throw ModelFormatError(index, "W", "missing");
        auto w = read_floats(j.at("W"), index, "W");
        const std::size_t units = read_count(j, "units", index, n_in ? std::optional<std::size_t>(w.size() / n_in) : std::nullopt);
        if (units == 0) throw ModelFormatError(index, "units", "must be >= 1");
        l.weights = make_tensor(Shape{units, n_in}, std::move(w), index, "W");
        l.bias = read_bias(units);
        if (l.kind == LayerKind::SoftMinHead) read_beta();
        break;
      }
      case LayerKind::Conv2D: {
        if (current.size() != 3) throw ModelFormatError(index, "", "Conv2D needs input [c, h, w]");
        if (!j.contains("W")) throw ModelFormatError(index, "W", "missing");
        const std::size_t filters = read_count(j, "filters", index);
        std::size_t kh = 0, kw = 0;
        if (!j.contains("kernel")) throw ModelFormatError(index, "kernel", "missing");
        const auto& k = j.at("kernel");
        if (k.is_number_integer()) {
          kh = kw = k.get<std::size_t>();
        } else if (k.is_array() && k.size() == 2 && k[0].is_number_integer() && k[1].is_number_integer()) {
          kh = k[0].get<std::size_t>();
          kw = k[1].get<std::size_t>();
        } else {
          throw ModelFormatError(index, "kernel", "expected integer or [kh, kw]");
        }
        if (filters == 0 || kh == 0 || kw == 0) throw ModelFormatError(index, "kernel", "extents must be >= 1");
        l.weights = make_tensor(Shape{filters, current[0], kh, kw}, read_floats(j.at("W"), index, "W"), index, "W");
        l.bias = read_bias(filters);
        l.stride = read_count(j, "stride", index, 1);
        l.pad = read_count(j, "pad", index, 0);
        break;
      }
      case LayerKind::MaxPool2D:
      case LayerKind::AvgPool2D:
        l.size = read_count(j, "size", index);
        l.stride = read_count(j, "stride", index, l.size);
        break;
      case LayerKind::LogSumExpPool: {
        if (!j.contains("groups") || !j.at("groups").is_array()) throw ModelFormatError(index, "groups", "missing");
        for (const auto& g : j.at("groups")) {
          if (!g.is_number_integer() || g.get<long long>() <= 0)
            throw ModelFormatError(index, "groups", "group sizes must be positive integers");
          l.groups.push_back(g.get<std::size_t>());
        }
        const std::string mode = j.value("mode", std::string("max"));
        if (mode != "max" && mode != "min") throw ModelFormatError(index, "mode", "must be 'max' or 'min'");
        l.sign = mode == "max" ? 1 : -1;
        read_beta();
        break;
      }
      case LayerKind::ReLU:
      case LayerKind::Flatten:
        if (j.contains("W") || j.contains("b")) throw ModelFormatError(index, "W", kind_name + " takes no weights");
        break;
    }
    layers.push_back(std::move(l));
    // Shape inference (and its errors) is delegated to Network; track the
    // running shape here only to size the weight tensors.
    Network partial(input_shape, layers);
    current = partial.layer_output_shape(layers.size() - 1);
    ++index;
  }

  std::vector<std::string> labels;
  if (doc.contains("labels")) {
    if (!doc.at("labels").is_array()) throw ModelFormatError(-1, "labels", "expected an array of strings");
    for (const auto& s : doc.at("labels")) {
      if (!s.is_string()) throw ModelFormatError(-1, "labels", "expected strings");
      labels.push_back(s.get<std::string>());
    }
  }
  return Network(input_shape, std::move(layers), doc.value("name", std::string{}), std::move(labels));
}

Network load_model(const std::filesystem::path& path) { return model_from_json(read_json_file(path)); }

void save_model(const Network& net, const std::filesystem::path& path) {
  write_text_file(path, dump_json(model_to_json(net), true));
}

std::vector<Sample> dataset_from_json(const json& doc) {
  if (!doc.is_array()) throw ModelFormatError(-1, "", "data file must be a JSON array of samples");
  std::vector<Sample> out;
  long n = 0;
  for (const auto& s : doc) {
    const std::string where = "sample " + std::to_string(n);
    if (!s.is_object() || !s.contains("x")) throw ModelFormatError(-1, "x", where + ": missing");
    auto x = read_floats(s.at("x"), -1, "x");
    Shape shape = s.contains("shape") ? read_shape(s.at("shape"), -1, "shape") : Shape{x.size()};
    if (shape_size(shape) != x.size())
      throw ModelFormatError(-1, "shape", where + ": shape " + shape_string(shape) + " does not match " + std::to_string(x.size()) + " values");
    Sample sample{Tensor(std::move(shape), std::move(x)), std::nullopt};
    if (s.contains("label") && !s.at("label").is_null()) {
      if (!s.at("label").is_number_integer()) throw ModelFormatError(-1, "label", where + ": expected an integer");
      sample.label = s.at("label").get<long>();
    }
    out.push_back(std::move(sample));
    ++n;
  }
  return out;
}

json dataset_to_json(const std::vector<Sample>& samples) {
  json arr = json::array();
  for (const auto& s : samples) {
    json j;
    j["x"] = floats(s.x.data());
    j["shape"] = s.x.shape();
    if (s.label) j["label"] = *s.label;
    arr.push_back(std::move(j));
  }
  return arr;
}

std::vector<Sample> load_dataset(const std::filesystem::path& path) { return dataset_from_json(read_json_file(path)); }

void save_dataset(const std::vector<Sample>& samples, const std::filesystem::path& path) {
  write_text_file(path, dump_json(dataset_to_json(samples), true));
}

}  // namespace attribex
