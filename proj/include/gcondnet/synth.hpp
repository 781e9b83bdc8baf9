#pragma once

#include <cstdint>

#include "gcondnet/dataio.hpp"

namespace gcondnet {

/// Planted-structure binary classification data: `informative` features share
/// a class-aligned latent factor plus a common per-sample factor (so they are
/// correlated with each other); the rest is i.i.d. noise. A small fraction of
/// labels is flipped to keep the task away from saturation.
TabularDataset make_planted_dataset(int n, int d, int informative, std::uint64_t seed,
                                    double signal = 1.0, double shared = 0.6,
                                    double noise = 0.9, double label_flip = 0.05);

/// Small linearly separable two-class set for smoke tests.
TabularDataset make_toy_dataset(int n = 40, int d = 10, std::uint64_t seed = 7);

}  // namespace gcondnet
