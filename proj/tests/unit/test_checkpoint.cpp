#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <random>

#include "ngf/checkpoint.hpp"
#include "ngf/errors.hpp"
#include "ngf/io.hpp"

using namespace ngf;
namespace fs = std::filesystem;

namespace {

Mlp random_net(int dim, std::vector<int> widths, std::uint64_t seed) {
  Mlp net = make_mlp<double>(dim, std::move(widths));
  std::mt19937_64 rng(seed);
  init_xavier(net, rng);
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& b : net.biases)
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = n(rng);
  return net;
}

bool bit_equal(const Mlp& a, const Mlp& b) {
  if (a.input_dim != b.input_dim || a.weights.size() != b.weights.size()) return false;
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    if (a.weights[l].rows() != b.weights[l].rows() || a.weights[l].cols() != b.weights[l].cols())
      return false;
    if (std::memcmp(a.weights[l].data(), b.weights[l].data(),
                    sizeof(double) * a.weights[l].size()) != 0)
      return false;
    if (std::memcmp(a.biases[l].data(), b.biases[l].data(), sizeof(double) * a.biases[l].size()) != 0)
      return false;
  }
  return true;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "ngf_test_checkpoint";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("checkpoint round trip is bit-exact") {
  for (int dim : {3, 5}) {
    const Mlp net = random_net(dim, {7, 5, 3}, 11 + dim);
    const Mlp back = decode_checkpoint(encode_checkpoint(net));
    CHECK(bit_equal(net, back));
    const Eigen::VectorXd probe = Eigen::VectorXd::LinSpaced(dim, -0.3, 0.8);
    CHECK(forward(net, probe) == forward(back, probe));
  }
  const auto path = scratch("net.ngf");
  const Mlp net = random_net(3, {40, 40, 40, 40}, 3);
  write_checkpoint(path, net);
  CHECK(bit_equal(read_checkpoint(path), net));
}

TEST_CASE("checkpoint header layout") {
  const Mlp net = random_net(3, {2}, 1);
  const std::string bytes = encode_checkpoint(net);
  CHECK(bytes.substr(0, 4) == "NGF1");
  CHECK(static_cast<unsigned char>(bytes[4]) == 3);
  CHECK(static_cast<unsigned char>(bytes[8]) == 1);
  CHECK(static_cast<unsigned char>(bytes[12]) == 2);
  CHECK(static_cast<unsigned char>(bytes[16]) == 0);
  const std::size_t params = 2 * 3 + 1 * 2 + 2 + 1;
  CHECK(bytes.size() == 17 + 8 * params);
}

TEST_CASE("corrupt checkpoints are rejected") {
  const std::string good = encode_checkpoint(random_net(3, {4}, 2));
  CHECK_THROWS_AS(decode_checkpoint("XXXX" + good.substr(4)), IoError);
  CHECK_THROWS_AS(decode_checkpoint(good.substr(0, good.size() - 1)), IoError);
  CHECK_THROWS_AS(decode_checkpoint(good + "x"), IoError);
  std::string bad_act = good;
  bad_act[16] = 7;
  CHECK_THROWS(decode_checkpoint(bad_act));
  CHECK_THROWS_AS(read_checkpoint(scratch("missing.ngf")), IoError);
}

TEST_CASE("metadata sidecar round trip") {
  const auto path = scratch("meta.ngf");
  CheckpointMeta meta{"interface", 0.0, 12345678901234ULL, "abc123", 5, 20000};
  write_metadata(path, meta);
  CHECK(metadata_path(path).string() == path.string() + ".meta");
  const auto back = read_metadata(path);
  CHECK(back.problem == "interface");
  REQUIRE(back.alpha.has_value());
  CHECK(*back.alpha == 0.0);
  CHECK(back.seed == meta.seed);
  CHECK(back.config_hash == "abc123");
  CHECK(back.input_dim == 5);
  CHECK(back.epoch == 20000);

  meta.alpha.reset();
  write_metadata(path, meta);
  CHECK_FALSE(read_metadata(path).alpha.has_value());
}

TEST_CASE("atomic writes leave no temporaries") {
  const auto dir = scratch("atomic");
  fs::remove_all(dir);
  atomic_write(dir / "a.txt", "hello");
  atomic_write(dir / "a.txt", "world");
  CHECK(read_file(dir / "a.txt") == "world");
  int files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
  CHECK(files == 1);
}
