#include "crashforge/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "crashforge/errors.hpp"

namespace crashforge {
namespace {

constexpr char kMagic[4] = {'C', 'F', 'W', '1'};

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename U>
void put(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  Reader(std::string_view bytes, std::string_view origin) : bytes_(bytes), origin_(origin) {}

  template <typename U>
  U get() {
    if (pos_ + sizeof(U) > bytes_.size()) {
      throw ParseError(std::string(origin_) + ": truncated checkpoint at byte " + std::to_string(pos_));
    }
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return v;
  }

  float get_f32() { return std::bit_cast<float>(get<std::uint32_t>()); }
  std::size_t pos() const { return pos_; }

 private:
  std::string_view bytes_;
  std::string_view origin_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Weights<float>& weights) {
  std::string out(kMagic, 4);
  put<std::uint64_t>(out, weights.spec.hash());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(weights.shapes.size()));
  for (const LayerShape& l : weights.shapes) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(l.kind));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(l.out));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(l.in));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(l.kernel));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(l.stride));
  }
  for (std::size_t i = 0; i < weights.shapes.size(); ++i) {
    for (float v : weights.w[i]) put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
    for (float v : weights.b[i]) put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
  put<std::uint64_t>(out, fnv1a(out));
  return out;
}

Weights<float> decode_checkpoint(std::string_view bytes, const NetworkSpec& expected, std::string_view origin) {
  const std::string where(origin);
  if (bytes.size() < 4 + 8 + 4 + 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw ParseError(where + ": not a CFW1 checkpoint");
  }
  {
    // structural size check so truncation reads as a parse error rather than corruption
    Reader h(bytes, origin);
    h.get<std::uint32_t>();
    h.get<std::uint64_t>();
    const std::uint32_t layers = h.get<std::uint32_t>();
    std::uint64_t floats = 0;
    for (std::uint32_t i = 0; i < layers; ++i) {
      const std::uint64_t kind = h.get<std::uint32_t>(), out = h.get<std::uint32_t>(), in = h.get<std::uint32_t>(),
                          k = h.get<std::uint32_t>();
      h.get<std::uint32_t>();
      floats += (kind == static_cast<std::uint32_t>(LayerKind::Conv) ? out * in * k * k : out * in) + out;
    }
    const std::uint64_t want = h.pos() + 4 * floats + 8;
    if (bytes.size() != want) {
      throw ParseError(where + ": checkpoint is " + std::to_string(bytes.size()) + " bytes, header implies " +
                       std::to_string(want));
    }
  }
  const std::string_view body = bytes.substr(0, bytes.size() - 8);
  Reader tail(bytes.substr(bytes.size() - 8), origin);
  if (tail.get<std::uint64_t>() != fnv1a(body)) throw ChecksumMismatch(where + ": checkpoint checksum mismatch");

  Reader r(body, origin);
  r.get<std::uint32_t>();  // magic
  const std::uint64_t hash = r.get<std::uint64_t>();
  if (hash != expected.hash()) {
    throw SpecHashMismatch(where + ": checkpoint was written for a different network spec");
  }
  Weights<float> w = Weights<float>::zeros(expected);
  if (r.get<std::uint32_t>() != w.shapes.size()) throw ShapeMismatch(where + ": layer count mismatch");
  for (std::size_t i = 0; i < w.shapes.size(); ++i) {
    const LayerShape& l = w.shapes[i];
    const std::uint32_t hdr[5] = {r.get<std::uint32_t>(), r.get<std::uint32_t>(), r.get<std::uint32_t>(),
                                  r.get<std::uint32_t>(), r.get<std::uint32_t>()};
    if (hdr[0] != static_cast<std::uint32_t>(l.kind) || hdr[1] != static_cast<std::uint32_t>(l.out) ||
        hdr[2] != static_cast<std::uint32_t>(l.in) || hdr[3] != static_cast<std::uint32_t>(l.kernel) ||
        hdr[4] != static_cast<std::uint32_t>(l.stride)) {
      throw ShapeMismatch(where + ": layer " + std::to_string(i) + " header does not match the spec");
    }
  }
  for (std::size_t i = 0; i < w.shapes.size(); ++i) {
    for (float& v : w.w[i]) v = r.get_f32();
    for (float& v : w.b[i]) v = r.get_f32();
  }
  if (r.pos() != body.size()) throw ParseError(where + ": trailing bytes in checkpoint");
  return w;
}

void save_checkpoint(const std::filesystem::path& path, const Weights<float>& weights) {
  const std::string bytes = encode_checkpoint(weights);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw IoError("failed to write checkpoint " + path.string());
}

Weights<float> load_checkpoint(const std::filesystem::path& path, const NetworkSpec& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return decode_checkpoint(buf.str(), expected, path.string());
}

}  // namespace crashforge
