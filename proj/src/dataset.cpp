#include "moco/dataset.hpp"

#include <algorithm>
#include <numeric>

#include "moco/error.hpp"
#include "moco/geometry.hpp"

namespace moco {

Dataset make_synthetic(Rng& rng, const SyntheticConfig& config) {
  require(config.dim >= 2, "make_synthetic: dim must be >= 2");
  require(config.class_count >= 2, "make_synthetic: class_count must be >= 2");
  require(config.spread >= 0.0, "make_synthetic: spread must be >= 0");
  require(config.center_width >= 0.0 && config.center_width <= 0.5, "make_synthetic: center_width must lie in [0, 0.5]");

  Dataset data;
  data.dim = config.dim;
  data.class_count = config.class_count;

  // Centres drawn inside [0.5 - w, 0.5 + w]^dim.
  std::vector<Vector> centers;
  for (std::size_t c = 0; c < config.class_count; ++c) {
    Vector center(config.dim);
    const std::size_t k = config.informative == 0 ? config.dim : std::min(config.informative, config.dim);
    for (std::size_t i = 0; i < config.dim; ++i) {
      center[i] = i < k ? rng.uniform(0.5 - config.center_width, 0.5 + config.center_width) : 0.5;
    }
    centers.push_back(std::move(center));
  }

  const std::size_t n_train = config.per_class * 60 / 150;
  const std::size_t n_test = config.per_class * 40 / 150;
  for (std::size_t c = 0; c < config.class_count; ++c) {
    for (std::size_t i = 0; i < config.per_class; ++i) {
      Vector x = centers[c];
      for (double& v : x) v += config.spread * rng.normal();
      Sample s{clip_box(x, 0.0, 1.0), c};
      if (i < n_train) data.train.push_back(std::move(s));
      else if (i < n_train + n_test) data.test.push_back(std::move(s));
      else data.aux.push_back(std::move(s));
    }
  }
  return data;
}

double accuracy(const Classifier& model, const std::vector<Sample>& samples) {
  if (samples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const Sample& s : samples) {
    if (model.forward(s.x).predicted() == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

TrainResult train(Mlp model, const Dataset& data, const TrainConfig& config, Rng& rng) {
  if (data.train.empty()) throw ContractViolation("train: training split is empty");
  require(config.batch_size >= 1, "train: batch_size must be >= 1");
  require(config.lr > 0.0, "train: lr must be positive");

  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    // Fisher-Yates with the project generator keeps runs bitwise reproducible.
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      Mlp::ParamGrad grad = model.zero_param_grad();
      for (std::size_t k = start; k < stop; ++k) {
        const Sample& s = data.train[order[k]];
        model.accumulate_param_grad(s.x, s.label, grad);
      }
      const double step = config.lr / static_cast<double>(stop - start);
      auto& layers = model.mutable_layers();
      for (std::size_t li = 0; li < layers.size(); ++li) {
        for (std::size_t j = 0; j < layers[li].weights.size(); ++j) {
          layers[li].weights[j] -= step * grad.weights[li][j];
        }
        axpy(-step, grad.bias[li], layers[li].bias);
      }
    }
  }

  TrainResult result{std::move(model), 0.0, 0.0};
  result.train_accuracy = accuracy(result.model, data.train);
  result.test_accuracy = accuracy(result.model, data.test);
  return result;
}

}  // namespace moco
