#include "ngf/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <sstream>

#include "ngf/errors.hpp"
#include "ngf/io.hpp"

namespace ngf {

namespace {

constexpr std::string_view kMagic = "NGF1";
constexpr std::uint32_t kMaxLayers = 1024;
constexpr std::uint32_t kMaxWidth = 1u << 16;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put(std::string& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  out.append(reinterpret_cast<const char*>(b), sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw IoError("checkpoint truncated");
    unsigned char b[sizeof(T)];
    std::memcpy(b, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
      for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
  std::string_view take(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw IoError("checkpoint truncated");
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Mlp& net) {
  validate(net);
  std::string out(kMagic);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.input_dim));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.hidden_widths.size()));
  for (int w : net.hidden_widths) put<std::uint32_t>(out, static_cast<std::uint32_t>(w));
  put<std::uint8_t>(out, static_cast<std::uint8_t>(net.activation));
  for (const auto& w : net.weights)
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) put<double>(out, w(i, j));
  for (const auto& b : net.biases)
    for (Eigen::Index i = 0; i < b.size(); ++i) put<double>(out, b(i));
  return out;
}

Mlp decode_checkpoint(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(kMagic.size()) != kMagic) throw IoError("not an NGF1 checkpoint");
  const auto input_dim = in.get<std::uint32_t>();
  const auto layers = in.get<std::uint32_t>();
  if (input_dim == 0 || input_dim > kMaxWidth || layers > kMaxLayers)
    throw IoError("checkpoint header out of range");
  std::vector<int> widths;
  for (std::uint32_t l = 0; l < layers; ++l) {
    const auto w = in.get<std::uint32_t>();
    if (w == 0 || w > kMaxWidth) throw IoError("checkpoint layer width out of range");
    widths.push_back(static_cast<int>(w));
  }
  const auto act = in.get<std::uint8_t>();
  if (act != static_cast<std::uint8_t>(Activation::Tanh))
    throw UnsupportedActivation("checkpoint activation id " + std::to_string(act));
  Mlp net = make_mlp<double>(static_cast<int>(input_dim), widths, Activation::Tanh);
  for (auto& w : net.weights)
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = in.get<double>();
  for (auto& b : net.biases)
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = in.get<double>();
  if (!in.done()) throw IoError("trailing bytes after checkpoint payload");
  validate(net);
  return net;
}

void write_checkpoint(const std::filesystem::path& path, const Mlp& net) {
  atomic_write(path, encode_checkpoint(net));
}

Mlp read_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

std::filesystem::path metadata_path(const std::filesystem::path& checkpoint) {
  auto p = checkpoint;
  p += ".meta";
  return p;
}

void write_metadata(const std::filesystem::path& checkpoint, const CheckpointMeta& meta) {
  std::string text;
  text += "problem=" + meta.problem + "\n";
  text += "alpha=" + (meta.alpha ? format_real(*meta.alpha) : std::string("none")) + "\n";
  text += "seed=" + std::to_string(meta.seed) + "\n";
  text += "config_hash=" + meta.config_hash + "\n";
  text += "input_dim=" + std::to_string(meta.input_dim) + "\n";
  text += "epoch=" + std::to_string(meta.epoch) + "\n";
  atomic_write(metadata_path(checkpoint), text);
}

CheckpointMeta read_metadata(const std::filesystem::path& checkpoint) {
  std::istringstream in(read_file(metadata_path(checkpoint)));
  CheckpointMeta meta;
  std::string line;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw IoError("malformed metadata line: " + line);
      const auto key = line.substr(0, eq);
      const auto value = line.substr(eq + 1);
      if (key == "problem") meta.problem = value;
      else if (key == "alpha") meta.alpha = value == "none" ? std::nullopt : std::optional(std::stod(value));
      else if (key == "seed") meta.seed = std::stoull(value);
      else if (key == "config_hash") meta.config_hash = value;
      else if (key == "input_dim") meta.input_dim = std::stoi(value);
      else if (key == "epoch") meta.epoch = std::stoi(value);
    }
  } catch (const std::logic_error&) {
    throw IoError("malformed metadata in " + metadata_path(checkpoint).string());
  }
  return meta;
}

}  // namespace ngf
