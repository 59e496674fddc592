#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "crashforge/checkpoint.hpp"
#include "crashforge/errors.hpp"

using namespace crashforge;
namespace fs = std::filesystem;

namespace {
Weights<float> random_weights(std::uint64_t seed) {
  RngStream rng = derive_stream(seed, 0);
  auto w = xavier_init<float>(NetworkSpec::standard(), rng);
  for (auto& b : w.b) {
    for (auto& x : b) x = static_cast<float>(rng.uniform() - 0.5);
  }
  return w;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}
}  // namespace

TEST_CASE("layout") {
  const auto w = random_weights(1);
  const std::string bytes = encode_checkpoint(w);
  CHECK(bytes.substr(0, 4) == "CFW1");
  const std::size_t header = 4 + 8 + 4 + 9 * 5 * 4;
  CHECK(bytes.size() == header + 4 * NetworkSpec::standard().parameter_count() + 8);
  std::uint64_t hash;
  std::memcpy(&hash, bytes.data() + 4, 8);
  CHECK(hash == NetworkSpec::standard().hash());
  // first weight of the first layer, little-endian float
  float first;
  std::memcpy(&first, bytes.data() + header, 4);
  CHECK(first == w.w[0][0]);
}

TEST_CASE("save, load, save is bit-identical") {
  const fs::path dir = fs::temp_directory_path() / "crashforge_unit_ckpt";
  fs::create_directories(dir);
  const auto w = random_weights(2);
  save_checkpoint(dir / "a.cfw", w);
  const auto loaded = load_checkpoint(dir / "a.cfw");
  CHECK(loaded == w);
  save_checkpoint(dir / "b.cfw", loaded);
  CHECK(slurp(dir / "a.cfw") == slurp(dir / "b.cfw"));
  fs::remove_all(dir);
}

TEST_CASE("decode errors") {
  const auto w = random_weights(3);
  const std::string good = encode_checkpoint(w);
  const NetworkSpec spec = NetworkSpec::standard();

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bad_magic, spec), ParseError);
  CHECK_THROWS_AS(decode_checkpoint(good.substr(0, good.size() - 9), spec), ParseError);
  CHECK_THROWS_AS(decode_checkpoint(good + "x", spec), ParseError);

  std::string flipped = good;
  flipped[1000] ^= 0x01;
  CHECK_THROWS_AS(decode_checkpoint(flipped, spec), ChecksumMismatch);

  NetworkSpec other = spec;
  other.dense = {100, 50, 20, 1};
  const std::string foreign = encode_checkpoint(Weights<float>::zeros(other));
  CHECK_THROWS_AS(decode_checkpoint(foreign, spec), SpecHashMismatch);
  CHECK(decode_checkpoint(foreign, other) == Weights<float>::zeros(other));

  CHECK_THROWS_AS(load_checkpoint("/nonexistent/crashforge.cfw"), IoError);
}
