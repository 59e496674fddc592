#include "crashforge/network.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <optional>

#include "crashforge/errors.hpp"

namespace crashforge {
namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using VecX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

constexpr std::size_t kStandardFlatten = 1152;

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Strided convolutions are unrolled from a polyphase copy of the input,
// phase[c][y][x % s][x / s], so every im2col row segment is contiguous.
template <typename T>
void to_phases(const T* in, const LayerShape& l, T* phase) {
  const int s = l.stride, H = l.input.height, W = l.input.width, PW = (W + s - 1) / s;
  for (int c = 0; c < l.in; ++c) {
    for (int y = 0; y < H; ++y) {
      const T* src = in + (static_cast<std::size_t>(c) * H + y) * W;
      T* dst = phase + (static_cast<std::size_t>(c) * H + y) * s * PW;
      for (int x = 0; x < W; ++x) dst[(x % s) * PW + x / s] = src[x];
    }
  }
}

template <typename T>
void from_phases(const T* phase, const LayerShape& l, T* in) {
  const int s = l.stride, H = l.input.height, W = l.input.width, PW = (W + s - 1) / s;
  for (int c = 0; c < l.in; ++c) {
    for (int y = 0; y < H; ++y) {
      const T* src = phase + (static_cast<std::size_t>(c) * H + y) * s * PW;
      T* dst = in + (static_cast<std::size_t>(c) * H + y) * W;
      for (int x = 0; x < W; ++x) dst[x] = src[(x % s) * PW + x / s];
    }
  }
}

std::size_t phase_size(const LayerShape& l) {
  const int PW = (l.input.width + l.stride - 1) / l.stride;
  return static_cast<std::size_t>(l.in) * l.input.height * l.stride * PW;
}

// cols[(c*k + ky)*k + kx][oy*OW + ox] = in[c][oy*s + ky][ox*s + kx]
// `src` is the input itself for stride 1, else its polyphase copy.
template <typename T>
void im2col(const T* src, const LayerShape& l, T* cols) {
  const int k = l.kernel, s = l.stride, H = l.input.height;
  const int RW = s == 1 ? l.input.width : s * ((l.input.width + s - 1) / s);
  const int PW = RW / s;
  const int OH = l.output.height, OW = l.output.width;
  for (int c = 0; c < l.in; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* row = cols + static_cast<std::size_t>((c * k + ky) * k + kx) * OH * OW;
        const std::size_t shift = static_cast<std::size_t>(kx % s) * PW + kx / s;
        for (int oy = 0; oy < OH; ++oy) {
          const T* seg = src + (static_cast<std::size_t>(c) * H + oy * s + ky) * RW + shift;
          std::copy_n(seg, OW, row + oy * OW);
        }
      }
    }
  }
}

// Adjoint of im2col, accumulating into `dst` (same layout as im2col's src).
template <typename T>
void col2im(const T* cols, const LayerShape& l, T* dst, std::size_t dst_size) {
  const int k = l.kernel, s = l.stride, H = l.input.height;
  const int RW = s == 1 ? l.input.width : s * ((l.input.width + s - 1) / s);
  const int PW = RW / s;
  const int OH = l.output.height, OW = l.output.width;
  std::fill(dst, dst + dst_size, T(0));
  for (int c = 0; c < l.in; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* row = cols + static_cast<std::size_t>((c * k + ky) * k + kx) * OH * OW;
        const std::size_t shift = static_cast<std::size_t>(kx % s) * PW + kx / s;
        for (int oy = 0; oy < OH; ++oy) {
          T* seg = dst + (static_cast<std::size_t>(c) * H + oy * s + ky) * RW + shift;
          const T* r = row + oy * OW;
          for (int ox = 0; ox < OW; ++ox) seg[ox] += r[ox];
        }
      }
    }
  }
}

}  // namespace

// --- spec -------------------------------------------------------------------

NetworkSpec NetworkSpec::standard() {
  NetworkSpec s;
  s.conv = {{24, 5, 2}, {36, 5, 2}, {48, 5, 2}, {64, 3, 1}, {64, 3, 1}};
  s.dense = {100, 50, 10, 1};
  if (s.flatten_size() != kStandardFlatten) {
    throw ShapeMismatch("standard conv stack flattens to " + std::to_string(s.flatten_size()) +
                        ", expected 1152");
  }
  return s;
}

std::vector<LayerShape> NetworkSpec::layers() const {
  if (input.channels < 1 || input.height < 1 || input.width < 1) throw ShapeMismatch("empty network input");
  if (dense.empty() || dense.back() != 1) throw ShapeMismatch("network must end in a single output unit");
  std::vector<LayerShape> out;
  Shape3 cur = input;
  for (std::size_t i = 0; i < conv.size(); ++i) {
    const ConvSpec& c = conv[i];
    if (c.out_channels < 1 || c.kernel < 1 || c.stride < 1) {
      throw ShapeMismatch("conv layer " + std::to_string(i) + " has non-positive dimensions");
    }
    if (cur.height < c.kernel || cur.width < c.kernel) {
      throw ShapeMismatch("conv layer " + std::to_string(i) + ": kernel " + std::to_string(c.kernel) +
                          " exceeds input " + std::to_string(cur.height) + "x" + std::to_string(cur.width));
    }
    const Shape3 next{c.out_channels, (cur.height - c.kernel) / c.stride + 1,
                      (cur.width - c.kernel) / c.stride + 1};
    out.push_back({LayerKind::Conv, c.out_channels, cur.channels, c.kernel, c.stride, cur, next});
    cur = next;
  }
  int in_units = static_cast<int>(cur.size());
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] < 1) throw ShapeMismatch("dense layer " + std::to_string(i) + " has no units");
    out.push_back({LayerKind::Dense, dense[i], in_units, 1, 1, {in_units, 1, 1}, {dense[i], 1, 1}});
    in_units = dense[i];
  }
  return out;
}

std::size_t NetworkSpec::flatten_size() const {
  Shape3 cur = input;
  for (const auto& c : conv) {
    if (cur.height < c.kernel || cur.width < c.kernel || c.stride < 1) return 0;
    cur = {c.out_channels, (cur.height - c.kernel) / c.stride + 1, (cur.width - c.kernel) / c.stride + 1};
  }
  return cur.size();
}

std::size_t NetworkSpec::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers()) n += l.weight_count() + static_cast<std::size_t>(l.out);
  return n;
}

std::string NetworkSpec::describe() const {
  std::string s = "input " + std::to_string(input.channels) + "x" + std::to_string(input.height) + "x" +
                  std::to_string(input.width);
  for (const auto& c : conv) {
    s += "; conv " + std::to_string(c.out_channels) + "@" + std::to_string(c.kernel) + "x" +
         std::to_string(c.kernel) + "/" + std::to_string(c.stride) + " relu";
  }
  s += "; flatten " + std::to_string(flatten_size());
  for (std::size_t i = 0; i < dense.size(); ++i) {
    s += "; dense " + std::to_string(dense[i]) + (i + 1 < dense.size() ? " relu" : " linear");
  }
  return s;
}

std::uint64_t NetworkSpec::hash() const {
  const std::string d = describe();
  return fnv1a(d.data(), d.size());
}

// --- weights ----------------------------------------------------------------

template <typename T>
Weights<T> Weights<T>::zeros(const NetworkSpec& spec) {
  Weights<T> w;
  w.spec = spec;
  w.shapes = spec.layers();
  for (const auto& l : w.shapes) {
    w.w.emplace_back(l.weight_count(), T(0));
    w.b.emplace_back(static_cast<std::size_t>(l.out), T(0));
  }
  return w;
}

template <typename T>
std::size_t Weights<T>::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < w.size(); ++i) n += w[i].size() + b[i].size();
  return n;
}

template <typename T>
T& Weights<T>::parameter(std::size_t index) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (index < w[i].size()) return w[i][index];
    index -= w[i].size();
    if (index < b[i].size()) return b[i][index];
    index -= b[i].size();
  }
  throw ShapeMismatch("parameter index out of range");
}

template <typename T>
T Weights<T>::parameter(std::size_t index) const {
  return const_cast<Weights<T>*>(this)->parameter(index);
}

template <typename T>
Gradients Gradients::like(const Weights<T>& weights) {
  Gradients g;
  for (const auto& v : weights.w) g.w.emplace_back(v.size(), 0.0);
  for (const auto& v : weights.b) g.b.emplace_back(v.size(), 0.0);
  return g;
}

void Gradients::scale(double s) {
  for (auto& v : w) {
    for (double& x : v) x *= s;
  }
  for (auto& v : b) {
    for (double& x : v) x *= s;
  }
}

double Gradients::parameter(std::size_t index) const {
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (index < w[i].size()) return w[i][index];
    index -= w[i].size();
    if (index < b[i].size()) return b[i][index];
    index -= b[i].size();
  }
  throw ShapeMismatch("parameter index out of range");
}

template <typename T>
Weights<T> xavier_init(const NetworkSpec& spec, RngStream& rng) {
  Weights<T> out = Weights<T>::zeros(spec);
  for (std::size_t i = 0; i < out.shapes.size(); ++i) {
    const LayerShape& l = out.shapes[i];
    const double bound = std::sqrt(6.0 / static_cast<double>(l.fan_in() + l.fan_out()));
    for (T& x : out.w[i]) x = static_cast<T>(bound * (2.0 * rng.uniform() - 1.0));
  }
  return out;
}

template <typename T>
void normalize_pixels(std::span<const std::uint8_t> pixels, std::span<T> out) {
  if (pixels.size() != out.size()) throw ShapeMismatch("pixel buffer size mismatch");
  for (std::size_t i = 0; i < pixels.size(); ++i) out[i] = static_cast<T>(pixels[i] / 127.5 - 1.0);
}

// --- evaluator --------------------------------------------------------------

template <typename T>
Network<T>::Network(const NetworkSpec& spec) : spec_(spec), shapes_(spec.layers()) {
  input_.resize(spec.input.size());
  for (const auto& l : shapes_) {
    acts_.emplace_back(l.output.size());
    if (l.kind == LayerKind::Conv) {
      cols_.emplace_back(l.fan_in() * l.output.height * l.output.width);
    } else {
      cols_.emplace_back();
    }
  }
}

template <typename T>
void Network<T>::check(const Weights<T>& weights) const {
  if (weights.spec != spec_ || weights.w.size() != shapes_.size()) {
    throw ShapeMismatch("weights do not match the network spec");
  }
}

template <typename T>
T Network<T>::forward(const Weights<T>& weights, std::span<const std::uint8_t> pixels) {
  if (pixels.size() != spec_.input.size()) {
    throw ShapeMismatch("expected " + std::to_string(spec_.input.width) + "x" +
                        std::to_string(spec_.input.height) + " image, got " + std::to_string(pixels.size()) +
                        " pixels");
  }
  normalize_pixels<T>(pixels, input_);
  return forward(weights, std::span<const T>(input_));
}

template <typename T>
T Network<T>::forward(const Weights<T>& weights, std::span<const T> input) {
  check(weights);
  if (input.size() != spec_.input.size()) throw ShapeMismatch("network input has wrong size");
  if (input.data() != input_.data()) std::copy(input.begin(), input.end(), input_.begin());

  const T* x = input_.data();
  for (std::size_t i = 0; i < shapes_.size(); ++i) {
    const LayerShape& l = shapes_[i];
    const bool last = i + 1 == shapes_.size();
    T* y = acts_[i].data();
    if (l.kind == LayerKind::Conv) {
      const Eigen::Index K = static_cast<Eigen::Index>(l.fan_in());
      const Eigen::Index P = l.output.height * l.output.width;
      if (l.stride == 1) {
        im2col(x, l, cols_[i].data());
      } else {
        phase_.resize(phase_size(l));
        to_phases(x, l, phase_.data());
        im2col(phase_.data(), l, cols_[i].data());
      }
      Eigen::Map<const MatR<T>> W(weights.w[i].data(), l.out, K);
      Eigen::Map<const MatR<T>> C(cols_[i].data(), K, P);
      Eigen::Map<MatR<T>> Y(y, l.out, P);
      Y.noalias() = W * C;
      for (int o = 0; o < l.out; ++o) Y.row(o).array() += weights.b[i][o];
    } else {
      Eigen::Map<const MatR<T>> W(weights.w[i].data(), l.out, l.in);
      Eigen::Map<const VecX<T>> X(x, l.in);
      Eigen::Map<const VecX<T>> B(weights.b[i].data(), l.out);
      Eigen::Map<VecX<T>> Y(y, l.out);
      Y.noalias() = W * X + B;
    }
    if (!last && frozen_) {
      const auto& m = (*frozen_)[i];
      for (std::size_t k = 0; k < acts_[i].size(); ++k) y[k] = m[k] ? y[k] : T(0);
    } else if (!last) {
      for (std::size_t k = 0; k < acts_[i].size(); ++k) y[k] = std::max(y[k], T(0));
    }
    x = y;
  }
  return acts_.back()[0];
}

template <typename T>
T Network<T>::accumulate(const Weights<T>& weights, std::span<const T> input, double label, double scale,
                         Gradients& acc) {
  const T pred = forward(weights, input);
  grad_out_.assign(1, static_cast<T>(2.0 * scale * (static_cast<double>(pred) - label)));

  for (std::size_t i = shapes_.size(); i-- > 0;) {
    const LayerShape& l = shapes_[i];
    const T* x = i == 0 ? input_.data() : acts_[i - 1].data();
    if (i + 1 < shapes_.size()) {
      // Through this layer's ReLU.
      for (std::size_t k = 0; k < grad_out_.size(); ++k) {
        if (!(acts_[i][k] > T(0))) grad_out_[k] = T(0);
      }
    }
    auto& gw = acc.w[i];
    auto& gb = acc.b[i];
    if (l.kind == LayerKind::Conv) {
      const Eigen::Index K = static_cast<Eigen::Index>(l.fan_in());
      const Eigen::Index P = l.output.height * l.output.width;
      Eigen::Map<const MatR<T>> W(weights.w[i].data(), l.out, K);
      Eigen::Map<const MatR<T>> C(cols_[i].data(), K, P);
      Eigen::Map<const MatR<T>> dY(grad_out_.data(), l.out, P);
      grad_w_.resize(static_cast<std::size_t>(l.out * K));
      Eigen::Map<MatR<T>> dW(grad_w_.data(), l.out, K);
      dW.noalias() = dY * C.transpose();
      for (std::size_t k = 0; k < grad_w_.size(); ++k) gw[k] += static_cast<double>(grad_w_[k]);
      for (int o = 0; o < l.out; ++o) {
        double s = 0.0;
        const T* row = grad_out_.data() + static_cast<std::size_t>(o) * P;
        for (Eigen::Index p = 0; p < P; ++p) s += static_cast<double>(row[p]);
        gb[o] += s;
      }
      if (i > 0) {
        grad_cols_.resize(static_cast<std::size_t>(K * P));
        Eigen::Map<MatR<T>> dC(grad_cols_.data(), K, P);
        dC.noalias() = W.transpose() * dY;
        grad_in_.resize(l.input.size());
        if (l.stride == 1) {
          col2im(grad_cols_.data(), l, grad_in_.data(), grad_in_.size());
        } else {
          phase_.resize(phase_size(l));
          col2im(grad_cols_.data(), l, phase_.data(), phase_.size());
          from_phases(phase_.data(), l, grad_in_.data());
        }
      }
    } else {
      for (int o = 0; o < l.out; ++o) {
        const double d = static_cast<double>(grad_out_[o]);
        gb[o] += d;
        if (d == 0.0) continue;
        double* row = gw.data() + static_cast<std::size_t>(o) * l.in;
        for (int k = 0; k < l.in; ++k) row[k] += d * static_cast<double>(x[k]);
      }
      if (i > 0) {
        Eigen::Map<const MatR<T>> W(weights.w[i].data(), l.out, l.in);
        Eigen::Map<const VecX<T>> dY(grad_out_.data(), l.out);
        grad_in_.resize(static_cast<std::size_t>(l.in));
        Eigen::Map<VecX<T>> dX(grad_in_.data(), l.in);
        dX.noalias() = W.transpose() * dY;
      }
    }
    if (i > 0) grad_out_.swap(grad_in_);
  }
  return pred;
}

template <typename T>
typename Network<T>::Masks Network<T>::relu_masks() const {
  Masks m;
  for (std::size_t i = 0; i + 1 < acts_.size(); ++i) {
    m.emplace_back(acts_[i].size());
    for (std::size_t k = 0; k < acts_[i].size(); ++k) m.back()[k] = acts_[i][k] > T(0);
  }
  return m;
}

template <typename T>
BatchResult backward_batch(Network<T>& net, const Weights<T>& weights, std::span<const Sample> batch) {
  if (batch.empty()) throw ShapeMismatch("empty batch");
  BatchResult r;
  r.grads = Gradients::like(weights);
  const double scale = 1.0 / static_cast<double>(batch.size());
  std::vector<T> input(weights.spec.input.size());
  for (const Sample& s : batch) {
    normalize_pixels<T>(s.pixels, input);
    const double pred = static_cast<double>(net.accumulate(weights, input, s.label, scale, r.grads));
    r.loss += (pred - s.label) * (pred - s.label);
  }
  r.loss *= scale;
  if (!std::isfinite(r.loss)) throw NonFiniteLoss("batch loss is not finite (training diverged)");
  return r;
}

template <typename T>
BatchResult backward_batch(const Weights<T>& weights, std::span<const Sample> batch) {
  Network<T> net(weights.spec);
  return backward_batch(net, weights, batch);
}

template <typename T>
void sgd_step(Weights<T>& weights, const Gradients& grads, double learning_rate) {
  for (std::size_t i = 0; i < weights.w.size(); ++i) {
    auto& w = weights.w[i];
    auto& b = weights.b[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      w[k] = static_cast<T>(static_cast<double>(w[k]) - learning_rate * grads.w[i][k]);
    }
    for (std::size_t k = 0; k < b.size(); ++k) {
      b[k] = static_cast<T>(static_cast<double>(b[k]) - learning_rate * grads.b[i][k]);
    }
  }
}

// --- gradient check ---------------------------------------------------------

GradCheckReport gradient_check(const Weights<double>& weights, std::span<const Sample> samples, RngStream& rng,
                               std::size_t probes, double h) {
  Network<double> net(weights.spec);
  const BatchResult analytic = backward_batch(net, weights, samples);
  std::vector<Network<double>::Masks> masks;
  for (const Sample& s : samples) {
    net.forward(weights, s.pixels);
    masks.push_back(net.relu_masks());
  }

  Weights<double> probe = weights;
  bool crossed = false;
  auto loss = [&]() {
    double sum = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
      net.freeze_masks(nullptr);
      net.forward(probe, samples[k].pixels);
      crossed = crossed || net.relu_masks() != masks[k];
      net.freeze_masks(&masks[k]);
      const double d = net.forward(probe, samples[k].pixels) - samples[k].label;
      sum += d * d;
    }
    net.freeze_masks(nullptr);
    return sum / static_cast<double>(samples.size());
  };

  const std::size_t n_layers = weights.w.size();
  GradCheckReport report;
  report.probes_per_layer.assign(n_layers, 0);
  report.max_error_per_layer.assign(n_layers, 0.0);
  for (; report.probes < probes; ++report.probes) {
    const std::size_t layer = report.probes % n_layers;
    const bool bias = rng.bounded(4) == 0;
    auto& vec = bias ? probe.b[layer] : probe.w[layer];
    const std::size_t idx = rng.bounded(vec.size());
    const double grad = bias ? analytic.grads.b[layer][idx] : analytic.grads.w[layer][idx];

    const double saved = vec[idx];
    crossed = false;
    vec[idx] = saved + h;
    const double plus = loss();
    vec[idx] = saved - h;
    const double minus = loss();
    vec[idx] = saved;
    if (crossed) ++report.kink_crossings;

    const double numeric = (plus - minus) / (2.0 * h);
    const double rel = std::abs(grad - numeric) / std::max({std::abs(grad), std::abs(numeric), 1e-8});
    report.max_relative_error = std::max(report.max_relative_error, rel);
    report.max_error_per_layer[layer] = std::max(report.max_error_per_layer[layer], rel);
    ++report.probes_per_layer[layer];
  }
  return report;
}

#define CRASHFORGE_INSTANTIATE(T)                                                                   \
  template struct Weights<T>;                                                                       \
  template class Network<T>;                                                                        \
  template Gradients Gradients::like<T>(const Weights<T>&);                                         \
  template Weights<T> xavier_init<T>(const NetworkSpec&, RngStream&);                               \
  template void normalize_pixels<T>(std::span<const std::uint8_t>, std::span<T>);                   \
  template BatchResult backward_batch<T>(const Weights<T>&, std::span<const Sample>);               \
  template BatchResult backward_batch<T>(Network<T>&, const Weights<T>&, std::span<const Sample>);  \
  template void sgd_step<T>(Weights<T>&, const Gradients&, double);

CRASHFORGE_INSTANTIATE(float)
CRASHFORGE_INSTANTIATE(double)

#undef CRASHFORGE_INSTANTIATE

}  // namespace crashforge
