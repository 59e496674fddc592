#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace crashforge::oracle {
namespace {

struct Span {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  bool empty() const { return lo > hi; }
};

Span row_span(const std::array<Vec2, 4>& poly, double y) {
  Span s;
  for (int i = 0; i < 4; ++i) {
    const Vec2 p = poly[i], q = poly[(i + 1) % 4];
    if ((p.y - y) * (q.y - y) > 0.0) continue;
    if (p.y == q.y) {
      s.lo = std::min({s.lo, p.x, q.x});
      s.hi = std::max({s.hi, p.x, q.x});
      continue;
    }
    const double x = p.x + (y - p.y) / (q.y - p.y) * (q.x - p.x);
    s.lo = std::min(s.lo, x);
    s.hi = std::max(s.hi, x);
  }
  return s;
}

double segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double t = std::clamp(dot(p - a, ab) / dot(ab, ab), 0.0, 1.0);
  return distance(p, a + t * ab);
}

bool contains(const std::array<Vec2, 4>& poly, Vec2 p) {
  for (int i = 0; i < 4; ++i) {
    const Vec2 e = poly[(i + 1) % 4] - poly[i];
    const Vec2 d = p - poly[i];
    if (e.x * d.y - e.y * d.x < 0.0) return false;
  }
  return true;
}

double one_way(const std::array<Vec2, 4>& from, const std::array<Vec2, 4>& to, double spacing) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) {
    const Vec2 a = from[i], b = from[(i + 1) % 4];
    const int n = std::max(1, static_cast<int>(std::ceil(distance(a, b) / spacing)));
    for (int k = 0; k <= n; ++k) {
      const Vec2 p = a + (static_cast<double>(k) / n) * (b - a);
      if (contains(to, p)) return 0.0;
      for (int j = 0; j < 4; ++j) best = std::min(best, segment_distance(p, to[j], to[(j + 1) % 4]));
    }
  }
  return best;
}

double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
double Phi(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

bool raster_overlap(const FootprintOBB& a, const FootprintOBB& b, double cell) {
  const auto pa = a.corners(), pb = b.corners();
  double lo = -std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto* poly : {&pa, &pb}) {
    double plo = (*poly)[0].y, phi_ = (*poly)[0].y;
    for (const Vec2& v : *poly) {
      plo = std::min(plo, v.y);
      phi_ = std::max(phi_, v.y);
    }
    lo = std::max(lo, plo);
    hi = std::min(hi, phi_);
  }
  if (lo > hi) return false;

  std::vector<double> rows;
  for (long k = static_cast<long>(std::ceil(lo / cell)); k * cell <= hi; ++k) rows.push_back(k * cell);
  for (const auto* poly : {&pa, &pb}) {
    for (const Vec2& v : *poly) {
      if (v.y >= lo && v.y <= hi) rows.push_back(v.y);
    }
  }
  for (double y : rows) {
    const Span sa = row_span(pa, y), sb = row_span(pb, y);
    if (sa.empty() || sb.empty()) continue;
    if (sa.hi >= sb.lo && sb.hi >= sa.lo) return true;
  }
  return false;
}

double sampled_clearance(const FootprintOBB& a, const FootprintOBB& b, double spacing) {
  const auto pa = a.corners(), pb = b.corners();
  return std::min(one_way(pa, pb, spacing), one_way(pb, pa, spacing));
}

double signed_separation(const FootprintOBB& a, const FootprintOBB& b) {
  if (!obb_intersect(a, b)) return min_clearance(a, b);
  const auto pa = a.corners(), pb = b.corners();
  double depth = std::numeric_limits<double>::infinity();
  for (const auto* poly : {&pa, &pb}) {
    for (int i = 0; i < 2; ++i) {
      const Vec2 e = (*poly)[i + 1] - (*poly)[i];
      const Vec2 axis = (1.0 / norm(e)) * Vec2{-e.y, e.x};
      double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
      for (const Vec2& v : pa) {
        amin = std::min(amin, dot(v, axis));
        amax = std::max(amax, dot(v, axis));
      }
      for (const Vec2& v : pb) {
        bmin = std::min(bmin, dot(v, axis));
        bmax = std::max(bmax, dot(v, axis));
      }
      depth = std::min(depth, std::min(amax, bmax) - std::max(amin, bmin));
    }
  }
  return -depth;
}

std::pair<FootprintOBB, FootprintOBB> random_obb_pair(RngStream& rng) {
  const auto box = [&](double spread) {
    FootprintOBB b;
    b.center = {spread * (2 * rng.uniform() - 1), spread * (2 * rng.uniform() - 1)};
    b.half_length = 0.25 + 2.25 * rng.uniform();
    b.half_width = 0.25 + 1.25 * rng.uniform();
    b.heading = 2 * std::numbers::pi * rng.uniform();
    return b;
  };
  FootprintOBB a = box(0.0);
  FootprintOBB b = box(6.0);
  return {a, b};
}

std::vector<Vec2> constant_steer_trajectory(double speed, double steer, double dt) {
  const double radius = vehicle::kWheelbase / std::tan(steer);
  const auto steps = static_cast<std::size_t>(std::ceil(2 * std::numbers::pi * radius / (speed * dt)));
  VehicleState s;
  s.speed = speed;
  std::vector<Vec2> pts{s.position()};
  for (std::size_t i = 0; i < steps; ++i) {
    s = step_kinematic(s, 0.0, steer, dt);
    pts.push_back(s.position());
  }
  return pts;
}

int fog_closed_form(int intensity, double depth, double density, int fog_color) {
  const double f = std::exp(-density * depth);
  return static_cast<int>(std::floor(intensity * f + fog_color * (1.0 - f) + 0.5));
}

FogCheck check_fog() {
  const VehicleState ego{20.0, -1.75, 0.0, 20.0, 0.0};
  FootprintOBB other = FootprintOBB::of({45.0, 1.75, std::numbers::pi, 20.0, 0.0});
  const RoadGeometry road = HighwayGeometry{};
  const CameraModel camera;
  const RenderProfile profile = RenderProfile::standard();

  FogCheck out;
  const auto surfaces = cast_scene(ego, other, road, camera, profile);
  RngStream rng = derive_stream(0, 0);
  const Image clear = render_frame(ego, other, road, camera, profile, 0.0, rng);
  out.zero_density_identical = true;
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    out.zero_density_identical = out.zero_density_identical && clear.pixels[i] == surfaces[i].intensity;
  }

  const double density = 0.05;
  double best = std::numeric_limits<double>::infinity();
  for (int row = 0; row < camera.image_height; ++row) {
    for (int col = 0; col < camera.image_width; ++col) {
      const double d = surfaces[static_cast<std::size_t>(row) * camera.image_width + col].depth;
      if (std::abs(d - 60.0) < best) {
        best = std::abs(d - 60.0);
        out.probe_row = row;
        out.probe_col = col;
        out.probe_depth = d;
      }
    }
  }
  RngStream rng2 = derive_stream(0, 0);
  const Image fogged = render_frame(ego, other, road, camera, profile, density, rng2);
  const auto& probe = surfaces[static_cast<std::size_t>(out.probe_row) * camera.image_width + out.probe_col];
  out.probe_rendered = fogged.at(out.probe_col, out.probe_row);
  out.probe_expected = fog_closed_form(probe.intensity, probe.depth, density, profile.fog_color);
  return out;
}

Circle fit_circle(std::span<const Vec2> points) {
  // x^2 + y^2 + D x + E y + F = 0, normal equations by Cramer's rule
  double sxx = 0, sxy = 0, syy = 0, sx = 0, sy = 0, n = 0, sxz = 0, syz = 0, sz = 0;
  for (const Vec2& p : points) {
    const double z = p.x * p.x + p.y * p.y;
    sxx += p.x * p.x;
    sxy += p.x * p.y;
    syy += p.y * p.y;
    sx += p.x;
    sy += p.y;
    sxz += p.x * z;
    syz += p.y * z;
    sz += z;
    n += 1;
  }
  const double m[3][3] = {{sxx, sxy, sx}, {sxy, syy, sy}, {sx, sy, n}};
  const double r[3] = {-sxz, -syz, -sz};
  const auto det = [](const double a[3][3]) {
    return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
           a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  };
  const double d = det(m);
  double sol[3];
  for (int c = 0; c < 3; ++c) {
    double t[3][3];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) t[i][j] = j == c ? r[i] : m[i][j];
    }
    sol[c] = det(t) / d;
  }
  const double cx = -sol[0] / 2, cy = -sol[1] / 2;
  return {cx, cy, std::sqrt(cx * cx + cy * cy - sol[2])};
}

Moments truncated_normal_moments(double mu, double sigma, double lower, double upper) {
  const double a = (lower - mu) / sigma, b = (upper - mu) / sigma;
  const double z = Phi(b) - Phi(a);
  const double shift = (phi(a) - phi(b)) / z;
  const double var = 1.0 + (a * phi(a) - b * phi(b)) / z - shift * shift;
  return {mu + sigma * shift, sigma * sigma * var};
}

Moments clamped_half_normal_moments(double sigma, double cap) {
  const double a = cap / sigma;
  const double tail = std::erfc(a / std::numbers::sqrt2);
  const double m1 = sigma * std::sqrt(2.0 / std::numbers::pi) * (1.0 - std::exp(-0.5 * a * a)) + cap * tail;
  const double m2 = sigma * sigma * (std::erf(a / std::numbers::sqrt2) - 2.0 * a * phi(a)) + cap * cap * tail;
  return {m1, m2 - m1 * m1};
}

bool DistributionCheck::passed() const {
  return std::abs(sample_mean - expected_mean) <= mean_tolerance &&
         std::abs(sample_variance - expected_variance) <= variance_tolerance && min >= lower && max <= upper;
}

std::vector<DistributionCheck> check_default_distributions(std::size_t n, std::uint64_t seed) {
  const SamplingConfig c = SamplingConfig::defaults();
  const std::pair<const char*, const DistributionSpec*> specs[] = {
      {"mass", &c.mass},   {"speed.highway", &c.speed_highway}, {"speed.intersection", &c.speed_intersection},
      {"fog", &c.fog},     {"brake", &c.brake},                 {"lane_change", &c.lane_change},
      {"vertical_offset", &c.vertical_offset}};
  std::vector<DistributionCheck> out;
  std::uint64_t k = 0;
  for (const auto& [name, spec] : specs) {
    RngStream rng = derive_stream(seed, k++);
    std::vector<double> x(n);
    for (auto& v : x) v = sample(*spec, rng);
    double m = 0;
    for (double v : x) m += v;
    m /= n;
    double m2 = 0, m4 = 0;
    for (double v : x) {
      const double d = (v - m) * (v - m);
      m2 += d;
      m4 += d * d;
    }
    m2 /= n;
    m4 /= n;
    const Moments expect = spec->kind == DistributionKind::HalfNormal
                               ? clamped_half_normal_moments(spec->std, spec->upper - spec->mean)
                               : truncated_normal_moments(spec->mean, spec->std, spec->lower, spec->upper);
    const double shift = spec->kind == DistributionKind::HalfNormal ? spec->mean : 0.0;
    DistributionCheck r;
    r.name = name;
    r.expected_mean = expect.mean + shift;
    r.sample_mean = m;
    r.mean_tolerance = 4.0 * std::sqrt(expect.variance / n);
    r.expected_variance = expect.variance;
    r.sample_variance = m2;
    r.variance_tolerance = 4.0 * std::sqrt((m4 - m2 * m2) / n);
    r.min = *std::min_element(x.begin(), x.end());
    r.max = *std::max_element(x.begin(), x.end());
    r.lower = spec->kind == DistributionKind::HalfNormal ? spec->mean : spec->lower;
    r.upper = spec->upper;
    out.push_back(r);
  }
  return out;
}

Weights<double> golden_weights() {
  Weights<double> w = Weights<double>::zeros(NetworkSpec::standard());
  for (std::size_t l = 0; l < w.shapes.size(); ++l) {
    const double fan_in = static_cast<double>(w.shapes[l].fan_in());
    for (std::size_t j = 0; j < w.w[l].size(); ++j) {
      w.w[l][j] = 2.0 / std::sqrt(fan_in) * std::sin(0.7 * j + 1.3 * l + 0.1);
    }
    for (std::size_t j = 0; j < w.b[l].size(); ++j) w.b[l][j] = 0.01 * std::cos(0.3 * j + l);
  }
  return w;
}

std::vector<std::uint8_t> golden_image(int variant) {
  std::vector<std::uint8_t> img(66 * 200);
  for (int r = 0; r < 66; ++r) {
    for (int c = 0; c < 200; ++c) img[r * 200 + c] = static_cast<std::uint8_t>((r * 37 + c * 11 + (r * c) % 7 + 53 * variant) % 256);
  }
  return img;
}

}  // namespace crashforge::oracle
