#include "moco/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "moco/error.hpp"

namespace moco {

std::size_t Prediction::predicted() const {
  return static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

Vector softmax(const Vector& logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  Vector probs(logits.dim());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.dim(); ++i) {
    probs[i] = std::exp(logits[i] - top);
    total += probs[i];
  }
  probs *= 1.0 / total;
  return probs;
}

double cross_entropy(const Vector& logits, std::size_t label) {
  require(label < logits.dim(), "cross_entropy: label out of range");
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double z : logits) total += std::exp(z - top);
  return top + std::log(total) - logits[label];
}

double Classifier::loss(const Vector& x, std::size_t label) const {
  return cross_entropy(forward(x).logits, label);
}

Vector Classifier::input_grad(const Vector& x, std::size_t label) const {
  return loss_and_grad(x, label).grad;
}

// ---------------------------------------------------------------------------

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  require(!layers_.empty(), "Mlp: at least one layer required");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const DenseLayer& l = layers_[i];
    require(l.in > 0 && l.out > 0, "Mlp: layer dimensions must be positive");
    require(l.weights.size() == l.in * l.out, "Mlp: weight count does not match layer shape");
    require(l.bias.dim() == l.out, "Mlp: bias length does not match layer output");
    if (i + 1 < layers_.size()) {
      require(layers_[i + 1].in == l.out, "Mlp: consecutive layer dimensions do not chain");
    }
  }
}

Mlp Mlp::random_init(std::span<const std::size_t> dims, Rng& rng) {
  require(dims.size() >= 2, "Mlp::random_init: need input and output dims");
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    DenseLayer l{dims[i], dims[i + 1], std::vector<double>(dims[i] * dims[i + 1]), Vector(dims[i + 1])};
    const double scale = std::sqrt(2.0 / static_cast<double>(dims[i]));
    for (double& w : l.weights) w = scale * rng.normal();
    layers.push_back(std::move(l));
  }
  return Mlp(std::move(layers));
}

Mlp Mlp::zeros(std::span<const std::size_t> dims) {
  require(dims.size() >= 2, "Mlp::zeros: need input and output dims");
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    layers.push_back({dims[i], dims[i + 1], std::vector<double>(dims[i] * dims[i + 1]), Vector(dims[i + 1])});
  }
  return Mlp(std::move(layers));
}

std::vector<std::size_t> Mlp::dims() const {
  std::vector<std::size_t> out{layers_.front().in};
  for (const DenseLayer& l : layers_) out.push_back(l.out);
  return out;
}

bool Mlp::operator==(const Mlp& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const DenseLayer& a = layers_[i];
    const DenseLayer& b = other.layers_[i];
    if (a.in != b.in || a.out != b.out || a.weights != b.weights || a.bias != b.bias) return false;
  }
  return true;
}

std::vector<Vector> Mlp::forward_trace(const Vector& x) const {
  if (x.dim() != input_dim()) {
    throw ContractViolation("Mlp: input has dim " + std::to_string(x.dim()) + ", expected " +
                            std::to_string(input_dim()));
  }
  std::vector<Vector> pre;
  pre.reserve(layers_.size());
  const Vector* input = &x;
  Vector activated;
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const DenseLayer& l = layers_[li];
    Vector z = l.bias;
    for (std::size_t r = 0; r < l.out; ++r) {
      const double* row = &l.weights[r * l.in];
      double sum = 0.0;
      for (std::size_t c = 0; c < l.in; ++c) sum += row[c] * (*input)[c];
      z[r] += sum;
    }
    pre.push_back(std::move(z));
    if (li + 1 < layers_.size()) {
      activated = pre.back();
      for (double& v : activated) v = std::max(v, 0.0);
      input = &activated;
    }
  }
  return pre;
}

Prediction Mlp::forward(const Vector& x) const {
  std::vector<Vector> pre = forward_trace(x);
  Prediction p{std::move(pre.back()), {}};
  p.probs = softmax(p.logits);
  return p;
}

namespace {

// d loss / d logits for softmax cross-entropy.
Vector logit_grad(const Vector& logits, std::size_t label) {
  Vector g = softmax(logits);
  g[label] -= 1.0;
  return g;
}

Vector relu(const Vector& z) {
  Vector a = z;
  for (double& v : a) v = std::max(v, 0.0);
  return a;
}

}  // namespace

LossGrad Mlp::loss_and_grad(const Vector& x, std::size_t label) const {
  require(label < class_count(), "Mlp::loss_and_grad: label out of range");
  const std::vector<Vector> pre = forward_trace(x);
  LossGrad out;
  out.loss = cross_entropy(pre.back(), label);
  out.predicted = static_cast<std::size_t>(
      std::max_element(pre.back().begin(), pre.back().end()) - pre.back().begin());

  Vector upstream = logit_grad(pre.back(), label);
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const DenseLayer& l = layers_[li];
    Vector down(l.in);
    for (std::size_t r = 0; r < l.out; ++r) {
      const double g = upstream[r];
      if (g == 0.0) continue;
      const double* row = &l.weights[r * l.in];
      for (std::size_t c = 0; c < l.in; ++c) down[c] += g * row[c];
    }
    if (li > 0) {
      const Vector& below = pre[li - 1];
      for (std::size_t c = 0; c < l.in; ++c) {
        if (below[c] <= 0.0) down[c] = 0.0;
      }
    }
    upstream = std::move(down);
  }
  out.grad = std::move(upstream);
  return out;
}

Mlp::ParamGrad Mlp::zero_param_grad() const {
  ParamGrad g;
  for (const DenseLayer& l : layers_) {
    g.weights.emplace_back(l.weights.size(), 0.0);
    g.bias.emplace_back(l.out);
  }
  return g;
}

double Mlp::accumulate_param_grad(const Vector& x, std::size_t label, ParamGrad& into) const {
  const std::vector<Vector> pre = forward_trace(x);
  const double loss = cross_entropy(pre.back(), label);
  Vector upstream = logit_grad(pre.back(), label);
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const DenseLayer& l = layers_[li];
    const Vector input = li == 0 ? x : relu(pre[li - 1]);
    std::vector<double>& gw = into.weights[li];
    for (std::size_t r = 0; r < l.out; ++r) {
      into.bias[li][r] += upstream[r];
      for (std::size_t c = 0; c < l.in; ++c) gw[r * l.in + c] += upstream[r] * input[c];
    }
    if (li == 0) break;
    Vector down(l.in);
    for (std::size_t r = 0; r < l.out; ++r) {
      const double* row = &l.weights[r * l.in];
      for (std::size_t c = 0; c < l.in; ++c) down[c] += upstream[r] * row[c];
    }
    for (std::size_t c = 0; c < l.in; ++c) {
      if (pre[li - 1][c] <= 0.0) down[c] = 0.0;
    }
    upstream = std::move(down);
  }
  return loss;
}

// ---------------------------------------------------------------------------

DefenseWrapper::DefenseWrapper(Mlp inner, std::optional<int> quantization_levels)
    : inner_(std::move(inner)), levels_(quantization_levels) {
  require(!levels_ || *levels_ > 0, "DefenseWrapper: quantization levels must be positive");
}

Vector DefenseWrapper::quantize(const Vector& x) const {
  if (!levels_) return x;
  const double levels = static_cast<double>(*levels_);
  Vector q = x;
  // nearbyint rounds half to even under the default rounding mode.
  for (double& v : q) v = std::nearbyint(v * levels) / levels;
  return q;
}

Prediction DefenseWrapper::forward(const Vector& x) const { return inner_.forward(quantize(x)); }

LossGrad DefenseWrapper::loss_and_grad(const Vector& x, std::size_t label) const {
  if (!levels_) return inner_.loss_and_grad(x, label);
  // Rounding is piecewise constant, so the input gradient is zero.
  const Prediction p = inner_.forward(quantize(x));
  return {cross_entropy(p.logits, label), Vector(x.dim()), p.predicted()};
}

// ---------------------------------------------------------------------------

std::string model_to_json(const Mlp& model) {
  nlohmann::json doc;
  doc["dims"] = model.dims();
  doc["classes"] = model.class_count();
  nlohmann::json layers = nlohmann::json::array();
  for (const DenseLayer& l : model.layers()) {
    layers.push_back({{"w", l.weights}, {"b", l.bias.raw()}});
  }
  doc["layers"] = std::move(layers);
  return doc.dump();
}

Mlp model_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    const auto dims = doc.at("dims").get<std::vector<std::size_t>>();
    const auto classes = doc.at("classes").get<std::size_t>();
    const auto& layers = doc.at("layers");
    if (dims.size() < 2) throw FormatError("model file: 'dims' needs at least two entries");
    if (classes != dims.back()) {
      throw FormatError("model file: 'classes' = " + std::to_string(classes) +
                        " but last dim = " + std::to_string(dims.back()));
    }
    if (!layers.is_array() || layers.size() != dims.size() - 1) {
      throw FormatError("model file: expected " + std::to_string(dims.size() - 1) + " layers");
    }
    std::vector<DenseLayer> out;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      auto w = layers[i].at("w").get<std::vector<double>>();
      auto b = layers[i].at("b").get<std::vector<double>>();
      if (dims[i] == 0 || dims[i + 1] == 0) throw FormatError("model file: zero layer dimension");
      if (w.size() != dims[i] * dims[i + 1] || b.size() != dims[i + 1]) {
        throw FormatError("model file: layer " + std::to_string(i) + " shape mismatch: declared " +
                          std::to_string(dims[i + 1]) + "x" + std::to_string(dims[i]) + ", got " +
                          std::to_string(w.size()) + " weights and " + std::to_string(b.size()) +
                          " biases");
      }
      out.push_back({dims[i], dims[i + 1], std::move(w), Vector(std::move(b))});
    }
    return Mlp(std::move(out));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }
}

void save_model(const Mlp& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << model_to_json(model) << '\n';
  if (!out) throw FormatError("failed writing '" + path + "'");
}

Mlp load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return model_from_json(buffer.str());
}

}  // namespace moco
