#pragma once

#include <vector>

#include "moco/dataset.hpp"
#include "moco/model.hpp"
#include "moco/rng.hpp"

namespace fixture {

struct Toy {
  moco::Mlp model;
  moco::Dataset data;
  std::vector<moco::Sample> correct_test;  // correctly classified test samples
};

// A small trained classifier, built once per test binary.
inline const Toy& toy() {
  static const Toy instance = [] {
    moco::SyntheticConfig sc;
    sc.dim = 48;
    sc.informative = 0;
    moco::Rng dr(moco::derive_seed(2024, "dataset", 0));
    moco::Dataset data = moco::make_synthetic(dr, sc);
    const std::size_t dims[] = {sc.dim, 32, 32, sc.class_count};
    moco::Rng init(moco::derive_seed(2024, "init", 0));
    moco::Rng shuffle(moco::derive_seed(2024, "train", 0));
    moco::TrainResult res = moco::train(moco::Mlp::random_init(dims, init), data, moco::TrainConfig{}, shuffle);
    std::vector<moco::Sample> correct;
    for (const moco::Sample& s : data.test) {
      if (res.model.forward(s.x).predicted() == s.label) correct.push_back(s);
    }
    return Toy{std::move(res.model), std::move(data), std::move(correct)};
  }();
  return instance;
}

}  // namespace fixture
