#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sptrim/tensor.hpp"

namespace sptrim {

// Labeled spectrogram-like examples with a deterministic train/validation
// split (last 20% of each class).
struct Dataset {
  std::size_t num_classes = 0;
  std::size_t t = 0, f = 0;
  std::vector<Tensor> features;  // each [t, f]
  std::vector<std::size_t> labels;
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> val_idx;
  std::uint64_t seed = 0;
};

// Class k is a unit-amplitude ridge over frequency band k (of K equal bands)
// running down the time axis from a per-example random onset, plus i.i.d.
// Gaussian noise of std noise_sigma. Values are quantized to float32
// precision so feature files round-trip bit-exactly.
Dataset generate_synthetic(std::size_t num_classes, std::size_t n_per_class,
                           std::size_t t, std::size_t f, double noise_sigma,
                           std::uint64_t seed);

// Feature file format: magic "SPTRIM1\n"; little-endian u32 K, count, t, f;
// then per example a u32 label followed by t*f little-endian float32 values,
// row-major.
void save_features(const Dataset& dataset, const std::string& path);
Dataset load_features(const std::string& path);

}  // namespace sptrim
