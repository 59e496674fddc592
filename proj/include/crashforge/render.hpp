#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crashforge/rng.hpp"
#include "crashforge/scenario.hpp"
#include "crashforge/vehicle.hpp"

namespace crashforge {

struct CameraModel {
  double mount_height = 1.2;
  double pitch = 0.026179938779914945;  // 1.5 degrees below the horizon
  double horizontal_fov = 1.5707963267948966;
  int image_width = 200;
  int image_height = 66;

  /// Pinhole focal length in pixels (square pixels).
  double focal_px() const;
};

/// Grayscale intensities and sensor imperfections for one visual domain.
struct RenderProfile {
  std::uint8_t road = 90;
  std::uint8_t lane_marking = 230;
  std::uint8_t sky = 180;
  std::uint8_t ground = 60;
  std::uint8_t vehicle_body = 30;
  std::uint8_t fog_color = 200;
  double noise_std = 0.0;
  double geometry_jitter = 0.0;  // per-frame lateral camera offset std, m

  static RenderProfile standard();
  /// Domain-shifted stand-in for real camera data: other intensities,
  /// sensor noise and mount jitter.
  static RenderProfile shifted();
  /// "default" or "shifted"; throws ConfigError otherwise.
  static RenderProfile by_name(std::string_view name);

  friend bool operator==(const RenderProfile&, const RenderProfile&) = default;
};

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t at(int col, int row) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
  std::uint8_t& at(int col, int row) { return pixels[static_cast<std::size_t>(row) * width + col]; }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Binary PGM: "P5\n<w> <h>\n255\n" followed by the raw bytes.
std::string encode_pgm(const Image& image);
Image decode_pgm(std::string_view bytes, std::string_view origin = "<memory>");
void write_pgm(const std::filesystem::path& path, const Image& image);
Image read_pgm(const std::filesystem::path& path);

/// round(intensity * f + fog_color * (1 - f)) with f = exp(-density * depth).
/// density 0 returns the intensity untouched, including at infinite depth.
int apply_fog(int intensity, double depth, double density, int fog_color);

/// Surface hit for one pixel before fog and noise.
struct SurfaceSample {
  std::uint8_t intensity = 0;
  double depth = 0.0;  // distance along the ray; +inf for sky
};

/// Ray-casts every pixel against the ground plane and the other vehicle's
/// box (1.5 m tall). `camera_offset` shifts the camera to the ego's left.
std::vector<SurfaceSample> cast_scene(const VehicleState& ego,
                                      const std::optional<FootprintOBB>& other,
                                      const RoadGeometry& geometry, const CameraModel& camera,
                                      const RenderProfile& profile, double camera_offset = 0.0);

/// Full frame: jitter draw (when the profile has jitter), ray cast, fog,
/// then row-major Gaussian pixel noise (when noise_std > 0), clamped.
Image render_frame(const VehicleState& ego, const std::optional<FootprintOBB>& other,
                   const RoadGeometry& geometry, const CameraModel& camera,
                   const RenderProfile& profile, double fog_density, RngStream& rng);

/// Ground intensity at a world point (road, markings or off-road).
std::uint8_t ground_intensity(Vec2 p, const RoadGeometry& geometry, const RenderProfile& profile);

inline constexpr double kVehicleHeight = 1.5;
inline constexpr double kMarkingWidth = 0.15;
inline constexpr double kDashOn = 3.0;
inline constexpr double kDashOff = 6.0;

}  // namespace crashforge
