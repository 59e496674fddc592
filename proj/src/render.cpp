#include "crashforge/render.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <type_traits>
#include <variant>

#include "crashforge/errors.hpp"

namespace crashforge {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Vec3 {
  double x, y, z;
};

Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
Vec3 operator*(double s, Vec3 v) { return {s * v.x, s * v.y, s * v.z}; }
double length(Vec3 v) { return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z); }

bool on_marking(double offset) { return std::abs(offset) <= kMarkingWidth / 2; }

bool dashed_on(double along) {
  const double phase = std::fmod(along, kDashOn + kDashOff);
  return (phase < 0 ? phase + kDashOn + kDashOff : phase) < kDashOn;
}

std::uint8_t highway_ground(Vec2 p, const HighwayGeometry& hw, const RenderProfile& prof) {
  const double half = hw.lane_width * hw.lanes / 2;
  if (p.x < 0.0 || p.x > hw.length || std::abs(p.y) > half) return prof.ground;
  if (std::abs(p.y) >= half - kMarkingWidth) return prof.lane_marking;
  for (int boundary = 1; boundary < hw.lanes; ++boundary) {
    const double y = -half + boundary * hw.lane_width;
    if (on_marking(p.y - y)) {
      const bool solid = hw.opposite_direction;
      if (solid || dashed_on(p.x)) return prof.lane_marking;
    }
  }
  return prof.road;
}

std::uint8_t intersection_ground(Vec2 p, const IntersectionGeometry& ix, const RenderProfile& prof) {
  const double half = ix.lane_width;
  const bool on_ew = std::abs(p.y) <= half && std::abs(p.x) <= ix.arm_length;
  const bool on_ns = std::abs(p.x) <= half && std::abs(p.y) <= ix.arm_length;
  if (!on_ew && !on_ns) return prof.ground;
  if (on_ew && on_ns) return prof.road;  // the box itself carries no markings
  const double across = on_ew ? p.y : p.x;
  if (std::abs(across) >= half - kMarkingWidth || on_marking(across)) return prof.lane_marking;
  return prof.road;
}

// Slab test in the box's local frame. Returns the entry distance along the
// ray parameter, 0 if the origin is inside, or nullopt on a miss.
std::optional<double> ray_box(Vec3 origin, Vec3 dir, const FootprintOBB& box) {
  const double c = std::cos(box.heading), s = std::sin(box.heading);
  const double ox = origin.x - box.center.x, oy = origin.y - box.center.y;
  const double lo[3] = {c * ox + s * oy, -s * ox + c * oy, origin.z};
  const double ld[3] = {c * dir.x + s * dir.y, -s * dir.x + c * dir.y, dir.z};
  const double mn[3] = {-box.half_length, -box.half_width, 0.0};
  const double mx[3] = {box.half_length, box.half_width, kVehicleHeight};
  double t_near = -kInf, t_far = kInf;
  for (int a = 0; a < 3; ++a) {
    if (ld[a] == 0.0) {
      if (lo[a] < mn[a] || lo[a] > mx[a]) return std::nullopt;
      continue;
    }
    double t0 = (mn[a] - lo[a]) / ld[a];
    double t1 = (mx[a] - lo[a]) / ld[a];
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
  }
  if (t_near > t_far || t_far < 0.0) return std::nullopt;
  return std::max(t_near, 0.0);
}

}  // namespace

double CameraModel::focal_px() const { return (image_width / 2.0) / std::tan(horizontal_fov / 2.0); }

RenderProfile RenderProfile::standard() { return RenderProfile{}; }

RenderProfile RenderProfile::shifted() {
  RenderProfile p;
  p.road = 120;
  p.lane_marking = 205;
  p.sky = 225;
  p.ground = 95;
  p.vehicle_body = 55;
  p.fog_color = 170;
  p.noise_std = 8.0;
  p.geometry_jitter = 0.3;
  return p;
}

RenderProfile RenderProfile::by_name(std::string_view name) {
  if (name == "default") return standard();
  if (name == "shifted") return shifted();
  throw ConfigError("unknown render profile '" + std::string(name) + "' (expected default|shifted)");
}

std::string encode_pgm(const Image& image) {
  std::string out = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
  return out;
}

Image decode_pgm(std::string_view bytes, std::string_view origin) {
  std::size_t pos = 0;
  auto fail = [&](const std::string& why) -> ParseError {
    return ParseError(std::string(origin) + ": " + why);
  };
  auto token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return std::string(bytes.substr(start, pos - start));
  };
  if (token() != "P5") throw fail("not a binary PGM (missing P5 magic)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw fail("malformed PGM header");
  }
  if (w <= 0 || h <= 0 || maxval != 255) throw fail("unsupported PGM dimensions or maxval");
  ++pos;  // single whitespace byte before the raster
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (bytes.size() < pos + n) throw fail("truncated PGM raster");
  Image img(w, h);
  std::copy_n(bytes.data() + pos, n, reinterpret_cast<char*>(img.pixels.data()));
  return img;
}

void write_pgm(const std::filesystem::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  const std::string bytes = encode_pgm(image);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed to write image: " + path.string());
}

Image read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return decode_pgm(buf.str(), path.string());
}

int apply_fog(int intensity, double depth, double density, int fog_color) {
  if (density == 0.0) return intensity;
  const double f = std::exp(-density * depth);
  return static_cast<int>(std::lround(intensity * f + fog_color * (1.0 - f)));
}

std::uint8_t ground_intensity(Vec2 p, const RoadGeometry& geometry, const RenderProfile& profile) {
  return std::visit(
      [&](const auto& g) -> std::uint8_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(g)>, HighwayGeometry>) {
          return highway_ground(p, g, profile);
        } else {
          return intersection_ground(p, g, profile);
        }
      },
      geometry);
}

std::vector<SurfaceSample> cast_scene(const VehicleState& ego,
                                      const std::optional<FootprintOBB>& other,
                                      const RoadGeometry& geometry, const CameraModel& camera,
                                      const RenderProfile& profile, double camera_offset) {
  const double ch = std::cos(ego.heading), sh = std::sin(ego.heading);
  const double cp = std::cos(camera.pitch), sp = std::sin(camera.pitch);
  const Vec3 forward{ch * cp, sh * cp, -sp};
  const Vec3 right{sh, -ch, 0.0};
  const Vec3 up{ch * sp, sh * sp, cp};
  const Vec3 origin{ego.x - sh * camera_offset, ego.y + ch * camera_offset, camera.mount_height};
  const double f = camera.focal_px();
  const int w = camera.image_width, h = camera.image_height;

  std::vector<SurfaceSample> out(static_cast<std::size_t>(w) * h);
  for (int row = 0; row < h; ++row) {
    const double v = (h / 2.0 - (row + 0.5)) / f;
    for (int col = 0; col < w; ++col) {
      const double u = ((col + 0.5) - w / 2.0) / f;
      const Vec3 dir = forward + u * right + v * up;
      const double ray_len = length(dir);

      double t_hit = kInf;
      std::uint8_t shade = profile.sky;
      if (dir.z < 0.0) {
        t_hit = -origin.z / dir.z;
        const Vec3 p = origin + t_hit * dir;
        shade = ground_intensity({p.x, p.y}, geometry, profile);
      }
      if (other) {
        if (const auto t_box = ray_box(origin, dir, *other); t_box && *t_box < t_hit) {
          t_hit = *t_box;
          shade = profile.vehicle_body;
        }
      }
      out[static_cast<std::size_t>(row) * w + col] = {shade, t_hit * ray_len};
    }
  }
  return out;
}

Image render_frame(const VehicleState& ego, const std::optional<FootprintOBB>& other,
                   const RoadGeometry& geometry, const CameraModel& camera,
                   const RenderProfile& profile, double fog_density, RngStream& rng) {
  const double offset = profile.geometry_jitter > 0.0 ? profile.geometry_jitter * rng.standard_normal() : 0.0;
  const auto samples = cast_scene(ego, other, geometry, camera, profile, offset);
  Image img(camera.image_width, camera.image_height);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    int value = apply_fog(samples[i].intensity, samples[i].depth, fog_density, profile.fog_color);
    if (profile.noise_std > 0.0) {
      value = static_cast<int>(std::lround(value + profile.noise_std * rng.standard_normal()));
    }
    img.pixels[i] = static_cast<std::uint8_t>(std::clamp(value, 0, 255));
  }
  return img;
}

}  // namespace crashforge
