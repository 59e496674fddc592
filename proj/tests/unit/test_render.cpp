#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

#include "crashforge/errors.hpp"
#include "crashforge/render.hpp"
#include "oracles.hpp"

using namespace crashforge;

TEST_CASE("camera focal length") { CHECK(CameraModel{}.focal_px() == doctest::Approx(100.0)); }

TEST_CASE("apply_fog") {
  CHECK(apply_fog(100, 60.0, 0.0, 200) == 100);
  CHECK(apply_fog(100, std::numeric_limits<double>::infinity(), 0.0, 200) == 100);
  CHECK(apply_fog(100, std::numeric_limits<double>::infinity(), 0.01, 200) == 200);
  CHECK(apply_fog(100, 60.0, 0.05, 200) == 195);
  CHECK(oracle::fog_closed_form(100, 60.0, 0.05, 200) == 195);
  for (int i = 0; i <= 255; i += 15) {
    for (double d : {1.0, 7.5, 33.0, 60.0, 140.0}) CHECK(apply_fog(i, d, 0.03, 180) == oracle::fog_closed_form(i, d, 0.03, 180));
  }
}

TEST_CASE("fog identity and 60 m probe") {
  const auto f = oracle::check_fog();
  CHECK(f.zero_density_identical);
  CHECK(std::abs(f.probe_depth - 60.0) < 1.0);
  CHECK(f.probe_rendered == f.probe_expected);
}

TEST_CASE("empty clear scene holds only profile intensities") {
  const RenderProfile p = RenderProfile::standard();
  RngStream rng = derive_stream(0, 0);
  for (const RoadGeometry road : {RoadGeometry{HighwayGeometry{}}, RoadGeometry{IntersectionGeometry{}}}) {
    const VehicleState ego = std::holds_alternative<HighwayGeometry>(road) ? VehicleState{20, -1.75, 0, 10, 0}
                                                                           : VehicleState{-60, -1.75, 0, 10, 0};
    const Image img = render_frame(ego, std::nullopt, road, CameraModel{}, p, 0.0, rng);
    const std::set<int> allowed{p.road, p.lane_marking, p.sky, p.ground};
    std::set<int> seen(img.pixels.begin(), img.pixels.end());
    for (int v : seen) CHECK(allowed.contains(v));
    CHECK(seen.contains(p.sky));
    CHECK(seen.contains(p.road));
    CHECK(seen.contains(p.lane_marking));
    // the horizon sits just above the middle row with the camera pitched down
    CHECK(img.at(100, 0) == p.sky);
    CHECK(img.at(100, 65) == p.road);
  }
}

TEST_CASE("vehicle ten metres ahead projects to the analytic rectangle") {
  const CameraModel cam;
  const RenderProfile p = RenderProfile::standard();
  const VehicleState ego{20, -1.75, 0, 10, 0};
  const FootprintOBB other = FootprintOBB::of({30, -1.75, 0, 10, 0});
  RngStream rng = derive_stream(0, 0);
  const Image img = render_frame(ego, other, HighwayGeometry{}, cam, p, 0.0, rng);

  // near face corners in camera coordinates
  const double f = cam.focal_px(), cp = std::cos(cam.pitch), sp = std::sin(cam.pitch);
  const double dx = 10.0 - vehicle::kLength / 2;
  double col_lo = 1e9, col_hi = -1e9, row_lo = 1e9, row_hi = -1e9;
  for (double lateral : {-vehicle::kWidth / 2, vehicle::kWidth / 2}) {
    for (double z : {0.0, kVehicleHeight}) {
      const double dz = z - cam.mount_height;
      const double fwd = dx * cp - dz * sp, up = dx * sp + dz * cp;
      const double col = cam.image_width / 2.0 + f * lateral / fwd - 0.5;
      const double row = cam.image_height / 2.0 - f * up / fwd - 0.5;
      col_lo = std::min(col_lo, col);
      col_hi = std::max(col_hi, col);
      row_lo = std::min(row_lo, row);
      row_hi = std::max(row_hi, row);
    }
  }

  int min_c = 1000, max_c = -1, min_r = 1000, max_r = -1;
  for (int r = 0; r < img.height; ++r) {
    int first = -1, last = -1, count = 0;
    for (int c = 0; c < img.width; ++c) {
      if (img.at(c, r) != p.vehicle_body) continue;
      if (first < 0) first = c;
      last = c;
      ++count;
    }
    if (count == 0) continue;
    CHECK(count == last - first + 1);
    min_c = std::min(min_c, first);
    max_c = std::max(max_c, last);
    min_r = std::min(min_r, r);
    max_r = std::max(max_r, r);
  }
  REQUIRE(max_c >= 0);
  CHECK(std::abs(min_c - std::ceil(col_lo)) <= 1);
  CHECK(std::abs(max_c - std::floor(col_hi)) <= 1);
  CHECK(std::abs(min_r - std::ceil(row_lo)) <= 1);
  CHECK(std::abs(max_r - std::floor(row_hi)) <= 1);
  CHECK(min_c + max_c == img.width - 1);
}

TEST_CASE("rendering is deterministic, noise comes from the stream") {
  const VehicleState ego{20, -1.75, 0.05, 10, 0};
  const FootprintOBB other = FootprintOBB::of({40, 1.75, 0.1, 10, 0});
  const RenderProfile shifted = RenderProfile::shifted();
  RngStream a = derive_stream(3, 0), b = derive_stream(3, 0), c = derive_stream(4, 0);
  const Image ia = render_frame(ego, other, HighwayGeometry{}, CameraModel{}, shifted, 0.01, a);
  const Image ib = render_frame(ego, other, HighwayGeometry{}, CameraModel{}, shifted, 0.01, b);
  const Image ic = render_frame(ego, other, HighwayGeometry{}, CameraModel{}, shifted, 0.01, c);
  CHECK(ia == ib);
  CHECK(ia != ic);
  CHECK(a.state() == b.state());
}

TEST_CASE("render profiles") {
  CHECK(RenderProfile::by_name("default") == RenderProfile::standard());
  CHECK(RenderProfile::by_name("shifted") == RenderProfile::shifted());
  CHECK(RenderProfile::shifted() != RenderProfile::standard());
  CHECK_THROWS_AS(RenderProfile::by_name("night"), ConfigError);
}

TEST_CASE("pgm encoding") {
  Image img(3, 2);
  img.pixels = {0, 10, 20, 30, 40, 255};
  const std::string bytes = encode_pgm(img);
  CHECK(bytes.substr(0, 11) == "P5\n3 2\n255\n");
  CHECK(bytes.size() == 11 + 6);
  CHECK(decode_pgm(bytes) == img);
  CHECK(decode_pgm("P5\n# comment\n3 2\n255\n" + bytes.substr(11)) == img);
  CHECK_THROWS_AS(decode_pgm("P2\n3 2\n255\n"), ParseError);
  CHECK_THROWS_AS(decode_pgm(bytes.substr(0, 14)), ParseError);
  CHECK_THROWS_AS(decode_pgm("P5\n3 2\n65535\n" + bytes.substr(11)), ParseError);
}
