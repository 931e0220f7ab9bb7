#include "sptrim/data.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "sptrim/errors.hpp"
#include "sptrim/rng.hpp"

namespace sptrim {

namespace {

constexpr char kMagic[8] = {'S', 'P', 'T', 'R', 'I', 'M', '1', '\n'};

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4))
    throw TruncatedError("feature file: truncated");
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f32(std::ostream& os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_u32(os, bits);
}

float read_f32(std::istream& is) {
  std::uint32_t bits = read_u32(is);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

// Deterministic split: per class, the last 20% of its examples in file order
// form the validation set.
void make_split(Dataset& ds) {
  ds.train_idx.clear();
  ds.val_idx.clear();
  std::vector<std::vector<std::size_t>> by_class(ds.num_classes);
  for (std::size_t i = 0; i < ds.labels.size(); ++i)
    by_class[ds.labels[i]].push_back(i);
  for (const auto& idx : by_class) {
    const std::size_t n_val = idx.size() / 5;
    for (std::size_t j = 0; j < idx.size(); ++j) {
      if (j + n_val < idx.size())
        ds.train_idx.push_back(idx[j]);
      else
        ds.val_idx.push_back(idx[j]);
    }
  }
}

}  // namespace

Dataset generate_synthetic(std::size_t num_classes, std::size_t n_per_class,
                           std::size_t t, std::size_t f, double noise_sigma,
                           std::uint64_t seed) {
  if (num_classes < 2) throw ConfigError("generate_synthetic: need K >= 2");
  if (num_classes > f)
    throw ConfigError("generate_synthetic: more classes than frequency bins");
  if (noise_sigma < 0.0)
    throw ConfigError("generate_synthetic: noise_sigma must be >= 0");
  if (n_per_class == 0 || t == 0)
    throw ConfigError("generate_synthetic: empty dataset requested");

  Dataset ds;
  ds.num_classes = num_classes;
  ds.t = t;
  ds.f = f;
  ds.seed = seed;
  Rng rng(seed);
  const std::size_t max_jitter = t / 4;
  for (std::size_t k = 0; k < num_classes; ++k) {
    const std::size_t band_lo = k * f / num_classes;
    const std::size_t band_hi = (k + 1) * f / num_classes;
    for (std::size_t e = 0; e < n_per_class; ++e) {
      Tensor x({t, f});
      const std::size_t onset = rng.index(max_jitter + 1);
      for (std::size_t i = onset; i < t; ++i)
        for (std::size_t j = band_lo; j < band_hi; ++j) x[i * f + j] = 1.0;
      if (noise_sigma > 0.0)
        for (double& v : x.data) v += noise_sigma * rng.normal();
      // Quantize to float32 so the feature file round-trips bit-exactly.
      for (double& v : x.data) v = static_cast<double>(static_cast<float>(v));
      ds.features.push_back(std::move(x));
      ds.labels.push_back(k);
    }
  }
  make_split(ds);
  return ds;
}

void save_features(const Dataset& dataset, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write(kMagic, sizeof(kMagic));
  write_u32(os, static_cast<std::uint32_t>(dataset.num_classes));
  write_u32(os, static_cast<std::uint32_t>(dataset.features.size()));
  write_u32(os, static_cast<std::uint32_t>(dataset.t));
  write_u32(os, static_cast<std::uint32_t>(dataset.f));
  for (std::size_t e = 0; e < dataset.features.size(); ++e) {
    write_u32(os, static_cast<std::uint32_t>(dataset.labels[e]));
    for (double v : dataset.features[e].data)
      write_f32(os, static_cast<float>(v));
  }
  if (!os) throw IoError("write failed: " + path);
}

Dataset load_features(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  char magic[sizeof(kMagic)];
  if (!is.read(magic, sizeof(kMagic)))
    throw TruncatedError("feature file: shorter than header");
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw BadMagicError("feature file: bad magic");

  Dataset ds;
  ds.num_classes = read_u32(is);
  const std::uint32_t count = read_u32(is);
  ds.t = read_u32(is);
  ds.f = read_u32(is);
  for (std::uint32_t e = 0; e < count; ++e) {
    const std::uint32_t label = read_u32(is);
    if (label >= ds.num_classes)
      throw LabelRangeError("feature file: label out of range");
    Tensor x({ds.t, ds.f});
    for (double& v : x.data) v = static_cast<double>(read_f32(is));
    ds.features.push_back(std::move(x));
    ds.labels.push_back(label);
  }
  make_split(ds);
  return ds;
}

}  // namespace sptrim
