#include "serml/trainer.hpp"

#include "binary_io.hpp"

#include <fstream>
#include <stdexcept>

namespace serml {
namespace {

constexpr char kCheckpointMagic[9] = "SERMLCKP";
constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, std::ostream& out) {
  Model model = ckpt.model;
  detail::put_magic(out, kCheckpointMagic);
  detail::put<std::uint32_t>(out, kCheckpointVersion);
  detail::put_string(out, model.config.to_text());
  detail::put<std::int32_t>(out, model.r_max);
  detail::put<std::uint64_t>(out, model.n_users());
  detail::put<std::uint64_t>(out, model.n_items());
  detail::put<std::uint64_t>(out, static_cast<std::uint64_t>(model.encoder.shape().vocab));
  detail::put_string(out, ckpt.data_manifest);
  detail::put<std::int32_t>(out, ckpt.epoch);
  detail::put_string(out, ckpt.rng_state);
  const auto tensors = model.tensors();
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    detail::put_string(out, t.name);
    detail::put<std::int64_t>(out, t.rows);
    detail::put<std::int64_t>(out, t.cols);
    for (double x : t.values) {
      detail::put<double>(out, x);
    }
  }
  if (!out) {
    throw std::runtime_error("checkpoint write failed");
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  save_checkpoint(ckpt, out);
}

Checkpoint load_checkpoint(std::istream& in) {
  detail::expect_magic(in, kCheckpointMagic, "checkpoint");
  if (detail::get<std::uint32_t>(in) != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version");
  }
  const auto config = ModelConfig::from_text(detail::get_string(in));
  const auto r_max = detail::get<std::int32_t>(in);
  const auto n_users = detail::get<std::uint64_t>(in);
  const auto n_items = detail::get<std::uint64_t>(in);
  const auto vocab = detail::get<std::uint64_t>(in);

  Checkpoint ckpt;
  ckpt.model = Model::zeros(config, n_users, n_items, vocab, r_max);
  ckpt.data_manifest = detail::get_string(in);
  ckpt.epoch = detail::get<std::int32_t>(in);
  ckpt.rng_state = detail::get_string(in);

  auto tensors = ckpt.model.tensors();
  if (detail::get<std::uint32_t>(in) != tensors.size()) {
    throw std::runtime_error("checkpoint: tensor count does not match the config");
  }
  for (auto& t : tensors) {
    const auto name = detail::get_string(in);
    const auto rows = detail::get<std::int64_t>(in);
    const auto cols = detail::get<std::int64_t>(in);
    if (name != t.name || rows != t.rows || cols != t.cols) {
      throw std::runtime_error("checkpoint: unexpected tensor '" + name + "' (expected '" + t.name + "')");
    }
    for (double& x : t.values) {
      x = detail::get<double>(in);
    }
  }
  return ckpt;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  return load_checkpoint(in);
}

}  // namespace serml
