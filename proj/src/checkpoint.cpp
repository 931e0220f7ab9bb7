#include "sptrim/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace sptrim {

namespace {

constexpr char kMagic[10] = {'S', 'P', 'T', 'R', 'I', 'M', 'C', 'K', '1', '\n'};

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
    throw TruncatedError("checkpoint: truncated");
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

nlohmann::json config_to_json(const ModelConfig& cfg) {
  return nlohmann::json{
      {"t", cfg.t},
      {"f", cfg.f},
      {"conv1", {cfg.conv1.m, cfg.conv1.r, cfg.conv1.c, cfg.conv1.n, cfg.conv1.s, cfg.conv1.u}},
      {"pool", {cfg.pool_p, cfg.pool_q}},
      {"conv2", {cfg.conv2.m, cfg.conv2.r, cfg.conv2.c, cfg.conv2.n, cfg.conv2.s, cfg.conv2.u}},
      {"num_classes", cfg.num_classes},
      {"seed", cfg.seed}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.t = j.at("t").get<std::size_t>();
  cfg.f = j.at("f").get<std::size_t>();
  const auto& c1 = j.at("conv1");
  cfg.conv1 = {c1.at(0), c1.at(1), c1.at(2), c1.at(3), c1.at(4), c1.at(5)};
  cfg.pool_p = j.at("pool").at(0);
  cfg.pool_q = j.at("pool").at(1);
  const auto& c2 = j.at("conv2");
  cfg.conv2 = {c2.at(0), c2.at(1), c2.at(2), c2.at(3), c2.at(4), c2.at(5)};
  cfg.num_classes = j.at("num_classes").get<std::size_t>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

}  // namespace

Checkpoint checkpoint_from_model(const Model& model, const std::string& stage,
                                 const std::string& rng_state) {
  Checkpoint ckpt;
  ckpt.config = model.config;
  for (std::size_t i = 0; i < kNumParamTensors; ++i)
    ckpt.tensors.emplace_back(kParamNames[i], model.param(i));
  if (model.mask) ckpt.mask_bits = model.mask->bits;
  ckpt.stage = stage;
  ckpt.rng_state = rng_state;
  return ckpt;
}

Model Checkpoint::to_model() const {
  Model model;
  model.config = config;
  for (std::size_t i = 0; i < kNumParamTensors; ++i) {
    bool found = false;
    for (const auto& [name, tensor] : tensors) {
      if (name == kParamNames[i]) {
        model.param(i) = tensor;
        found = true;
        break;
      }
    }
    if (!found)
      throw TensorCountError(std::string("checkpoint: missing tensor ") +
                             kParamNames[i]);
  }
  if (!mask_bits.empty()) model.mask = ChannelMask{mask_bits};
  return model;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write(kMagic, sizeof(kMagic));
  write_u32(os, ckpt.version);

  nlohmann::json meta{{"config", config_to_json(ckpt.config)},
                      {"stage", ckpt.stage},
                      {"rng_state", ckpt.rng_state}};
  const std::string block = meta.dump();
  write_u32(os, static_cast<std::uint32_t>(block.size()));
  os.write(block.data(), static_cast<std::streamsize>(block.size()));

  write_u32(os, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, tensor] : ckpt.tensors) {
    write_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(os, static_cast<std::uint32_t>(tensor.shape.size()));
    for (std::size_t d : tensor.shape)
      write_u32(os, static_cast<std::uint32_t>(d));
    static_assert(sizeof(double) == 8);
    os.write(reinterpret_cast<const char*>(tensor.data.data()),
             static_cast<std::streamsize>(tensor.data.size() * 8));
  }

  write_u32(os, static_cast<std::uint32_t>(ckpt.mask_bits.size()));
  if (!ckpt.mask_bits.empty())
    os.write(reinterpret_cast<const char*>(ckpt.mask_bits.data()),
             static_cast<std::streamsize>(ckpt.mask_bits.size()));
  if (!os) throw IoError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  char magic[sizeof(kMagic)];
  if (!is.read(magic, sizeof(kMagic)))
    throw TruncatedError("checkpoint: shorter than header");
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw BadMagicError("checkpoint: bad magic");

  Checkpoint ckpt;
  ckpt.version = read_u32(is);
  if (ckpt.version != kCheckpointVersion)
    throw VersionError("checkpoint: version " + std::to_string(ckpt.version) +
                       " incompatible with " +
                       std::to_string(kCheckpointVersion));

  const std::uint32_t block_len = read_u32(is);
  std::string block(block_len, '\0');
  if (!is.read(block.data(), block_len))
    throw TruncatedError("checkpoint: truncated config block");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(block);
  } catch (const nlohmann::json::parse_error&) {
    throw IoError("checkpoint: corrupt config block");
  }
  ckpt.config = config_from_json(meta.at("config"));
  ckpt.stage = meta.at("stage").get<std::string>();
  ckpt.rng_state = meta.at("rng_state").get<std::string>();

  const std::uint32_t count = read_u32(is);
  if (count != kNumParamTensors)
    throw TensorCountError("checkpoint: expected " +
                           std::to_string(kNumParamTensors) + " tensors, got " +
                           std::to_string(count));
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint32_t name_len = read_u32(is);
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len))
      throw TruncatedError("checkpoint: truncated tensor name");
    const std::uint32_t rank = read_u32(is);
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = read_u32(is);
    Tensor tensor(shape);
    if (!is.read(reinterpret_cast<char*>(tensor.data.data()),
                 static_cast<std::streamsize>(tensor.data.size() * 8)))
      throw TruncatedError("checkpoint: truncated tensor data");
    ckpt.tensors.emplace_back(std::move(name), std::move(tensor));
  }

  const std::uint32_t mask_len = read_u32(is);
  ckpt.mask_bits.resize(mask_len);
  if (mask_len > 0 &&
      !is.read(reinterpret_cast<char*>(ckpt.mask_bits.data()), mask_len))
    throw TruncatedError("checkpoint: truncated mask");
  return ckpt;
}

}  // namespace sptrim
