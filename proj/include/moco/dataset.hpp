#pragma once

#include <cstddef>
#include <vector>

#include "moco/model.hpp"
#include "moco/rng.hpp"
#include "moco/vector.hpp"

namespace moco {

struct Sample {
  Vector x;
  std::size_t label = 0;
};

/// Inputs in [0,1]^dim split into disjoint train / test / auxiliary pools.
struct Dataset {
  std::size_t dim = 0;
  std::size_t class_count = 0;
  std::vector<Sample> train;
  std::vector<Sample> test;
  std::vector<Sample> aux;

  std::size_t size() const { return train.size() + test.size() + aux.size(); }
};

struct SyntheticConfig {
  std::size_t dim = 1024;
  std::size_t class_count = 4;
  // Per-class total; split 60:40:50 into train/test/aux (floors, remainder to aux).
  std::size_t per_class = 150;
  double spread = 0.3;
  double center_width = 0.25;   // centres uniform in [0.5 - w, 0.5 + w]
  std::size_t informative = 128;  // leading coordinates whose centres differ; 0 = all
};

/// Gaussian blobs around distinct class centres, clipped to [0,1].
Dataset make_synthetic(Rng& rng, const SyntheticConfig& config);

struct TrainConfig {
  std::size_t epochs = 60;
  double lr = 0.01;
  std::size_t batch_size = 16;
};

struct TrainResult {
  Mlp model;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

/// Minibatch SGD on cross-entropy. Deterministic for a fixed rng state.
TrainResult train(Mlp model, const Dataset& data, const TrainConfig& config, Rng& rng);

double accuracy(const Classifier& model, const std::vector<Sample>& samples);

}  // namespace moco
