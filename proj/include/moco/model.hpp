#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "moco/rng.hpp"
#include "moco/vector.hpp"

namespace moco {

struct Prediction {
  Vector logits;
  Vector probs;

  std::size_t predicted() const;
};

struct LossGrad {
  double loss = 0.0;
  Vector grad;  // d loss / d input
  std::size_t predicted = 0;
};

Vector softmax(const Vector& logits);
// -log softmax(logits)[label], stabilized with log-sum-exp.
double cross_entropy(const Vector& logits, std::size_t label);

/// Anything an attack can query: forward inference plus the input gradient
/// of the cross-entropy loss. Implementations are immutable after
/// construction and safe to share between threads.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::size_t input_dim() const = 0;
  virtual std::size_t class_count() const = 0;

  virtual Prediction forward(const Vector& x) const = 0;
  virtual LossGrad loss_and_grad(const Vector& x, std::size_t label) const = 0;

  double loss(const Vector& x, std::size_t label) const;
  Vector input_grad(const Vector& x, std::size_t label) const;
};

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;  // row-major, out x in
  Vector bias;

  double w(std::size_t row, std::size_t col) const { return weights[row * in + col]; }
};

/// Fully connected ReLU network; identity on the output layer.
class Mlp : public Classifier {
 public:
  explicit Mlp(std::vector<DenseLayer> layers);

  /// He-initialised weights, zero biases. dims = {input, hidden..., classes}.
  static Mlp random_init(std::span<const std::size_t> dims, Rng& rng);
  static Mlp zeros(std::span<const std::size_t> dims);

  std::size_t input_dim() const override { return layers_.front().in; }
  std::size_t class_count() const override { return layers_.back().out; }
  std::vector<std::size_t> dims() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }

  Prediction forward(const Vector& x) const override;
  LossGrad loss_and_grad(const Vector& x, std::size_t label) const override;

  /// Cross-entropy gradient with respect to every weight and bias, laid out
  /// like layers(). Used by the trainer.
  struct ParamGrad {
    std::vector<std::vector<double>> weights;
    std::vector<Vector> bias;
  };
  double accumulate_param_grad(const Vector& x, std::size_t label, ParamGrad& into) const;
  ParamGrad zero_param_grad() const;

  bool operator==(const Mlp& other) const;

 private:
  // Pre-activations of every layer; the last entry holds the logits.
  std::vector<Vector> forward_trace(const Vector& x) const;

  std::vector<DenseLayer> layers_;
};

/// Input-quantization defense: the inner network sees round(x * L) / L.
/// The backward pass treats rounding as piecewise constant, so the input
/// gradient is zero wherever quantization is active.
class DefenseWrapper : public Classifier {
 public:
  DefenseWrapper(Mlp inner, std::optional<int> quantization_levels);

  std::size_t input_dim() const override { return inner_.input_dim(); }
  std::size_t class_count() const override { return inner_.class_count(); }

  Vector quantize(const Vector& x) const;

  Prediction forward(const Vector& x) const override;
  LossGrad loss_and_grad(const Vector& x, std::size_t label) const override;

  const Mlp& inner() const { return inner_; }
  std::optional<int> levels() const { return levels_; }

 private:
  Mlp inner_;
  std::optional<int> levels_;
};

std::string model_to_json(const Mlp& model);
Mlp model_from_json(const std::string& text);
void save_model(const Mlp& model, const std::string& path);
Mlp load_model(const std::string& path);

}  // namespace moco
