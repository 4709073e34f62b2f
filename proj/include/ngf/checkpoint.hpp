#pragma once

// Binary network checkpoints ("NGF1") and their key=value sidecar.
// Byte layout: docs/checkpoint_format.md.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "ngf/net.hpp"

namespace ngf {

std::string encode_checkpoint(const Mlp& net);
Mlp decode_checkpoint(std::string_view bytes);

void write_checkpoint(const std::filesystem::path& path, const Mlp& net);
Mlp read_checkpoint(const std::filesystem::path& path);

struct CheckpointMeta {
  std::string problem;
  std::optional<double> alpha;
  std::uint64_t seed = 0;
  std::string config_hash;
  int input_dim = 0;
  int epoch = 0;
};

/// `<checkpoint>.meta`
std::filesystem::path metadata_path(const std::filesystem::path& checkpoint);
void write_metadata(const std::filesystem::path& checkpoint, const CheckpointMeta& meta);
CheckpointMeta read_metadata(const std::filesystem::path& checkpoint);

}  // namespace ngf
