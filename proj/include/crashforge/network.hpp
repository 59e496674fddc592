#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crashforge/rng.hpp"

namespace crashforge {

struct ConvSpec {
  int out_channels;
  int kernel;
  int stride;

  friend bool operator==(const ConvSpec&, const ConvSpec&) = default;
};

struct Shape3 {
  int channels, height, width;

  std::size_t size() const { return static_cast<std::size_t>(channels) * height * width; }
  friend bool operator==(const Shape3&, const Shape3&) = default;
};

enum class LayerKind : std::uint32_t { Conv = 0, Dense = 1 };

/// Resolved geometry of one parameterised layer.
struct LayerShape {
  LayerKind kind;
  int out;      // output channels or units
  int in;       // input channels or units
  int kernel;   // 1 for dense layers
  int stride;   // 1 for dense layers
  Shape3 input;
  Shape3 output;

  std::size_t weight_count() const { return static_cast<std::size_t>(out) * in * kernel * kernel; }
  std::size_t fan_in() const { return static_cast<std::size_t>(in) * kernel * kernel; }
  std::size_t fan_out() const { return static_cast<std::size_t>(out) * kernel * kernel; }

  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

/// Conv stack (valid padding, ReLU), flatten, dense stack (ReLU on all but
/// the last, which is a single linear output).
struct NetworkSpec {
  Shape3 input{1, 66, 200};
  std::vector<ConvSpec> conv;
  std::vector<int> dense;  // unit counts; the last entry is the output

  static NetworkSpec standard();

  /// Throws ShapeMismatch when a layer does not fit its input.
  std::vector<LayerShape> layers() const;
  std::size_t flatten_size() const;
  std::size_t parameter_count() const;
  /// Canonical one-line description; hashed for checkpoints.
  std::string describe() const;
  std::uint64_t hash() const;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Flattened parameters, ordered layer by layer: conv layers then dense,
/// each as row-major weights [out][in][ky][kx] followed by biases.
template <typename T>
struct Weights {
  NetworkSpec spec;
  std::vector<LayerShape> shapes;
  std::vector<std::vector<T>> w;
  std::vector<std::vector<T>> b;

  static Weights zeros(const NetworkSpec& spec);
  std::size_t parameter_count() const;
  /// Flat index over (w0, b0, w1, b1, ...).
  T& parameter(std::size_t index);
  T parameter(std::size_t index) const;

  template <typename U>
  Weights<U> cast() const {
    Weights<U> out;
    out.spec = spec;
    out.shapes = shapes;
    for (const auto& v : w) out.w.emplace_back(v.begin(), v.end());
    for (const auto& v : b) out.b.emplace_back(v.begin(), v.end());
    return out;
  }

  friend bool operator==(const Weights&, const Weights&) = default;
};

/// Gradient accumulator, always 64-bit.
struct Gradients {
  std::vector<std::vector<double>> w;
  std::vector<std::vector<double>> b;

  template <typename T>
  static Gradients like(const Weights<T>& weights);
  void scale(double s);
  double parameter(std::size_t index) const;
};

/// Uniform in +-sqrt(6 / (fan_in + fan_out)) per weight, drawn layer by layer
/// in storage order; biases zero. Conv fans count kernel area times channels.
template <typename T>
Weights<T> xavier_init(const NetworkSpec& spec, RngStream& rng);

/// x / 127.5 - 1
template <typename T>
void normalize_pixels(std::span<const std::uint8_t> pixels, std::span<T> out);

inline constexpr double kSteeringScaleDeg = 30.0;

struct Sample {
  std::span<const std::uint8_t> pixels;
  double label;  // normalized steering
};

/// Single-sample forward/backward evaluator. Owns scratch buffers, so one
/// instance per thread.
template <typename T>
class Network {
 public:
  explicit Network(const NetworkSpec& spec);

  /// Input must hold spec.input.size() normalized values.
  T forward(const Weights<T>& weights, std::span<const T> input);
  T forward(const Weights<T>& weights, std::span<const std::uint8_t> pixels);

  /// Forward + backward of scale * (pred - label)^2, adding parameter
  /// gradients into acc. Returns the prediction.
  T accumulate(const Weights<T>& weights, std::span<const T> input, double label, double scale,
               Gradients& acc);

  /// ReLU on/off state of every hidden unit after the last forward pass.
  using Masks = std::vector<std::vector<std::uint8_t>>;
  Masks relu_masks() const;

  /// When set, hidden layers multiply by these masks instead of applying
  /// ReLU, evaluating the piecewise-linear branch the masks came from.
  void freeze_masks(const Masks* masks) { frozen_ = masks; }

 private:
  void check(const Weights<T>& weights) const;

  NetworkSpec spec_;
  std::vector<LayerShape> shapes_;
  std::vector<T> input_;
  std::vector<std::vector<T>> acts_;   // post-activation output of each layer
  std::vector<std::vector<T>> cols_;   // im2col buffers for conv layers
  std::vector<T> phase_, grad_out_, grad_in_, grad_cols_, grad_w_;
  const Masks* frozen_ = nullptr;
};

struct BatchResult {
  double loss = 0.0;
  Gradients grads;
};

/// Mean squared error over the batch and its gradient. Throws NonFiniteLoss.
template <typename T>
BatchResult backward_batch(const Weights<T>& weights, std::span<const Sample> batch);

template <typename T>
BatchResult backward_batch(Network<T>& net, const Weights<T>& weights, std::span<const Sample> batch);

/// w -= lr * g
template <typename T>
void sgd_step(Weights<T>& weights, const Gradients& grads, double learning_rate);

struct GradCheckReport {
  std::size_t probes = 0;
  std::size_t kink_crossings = 0;  // probes where +-h switches some ReLU
  double max_relative_error = 0.0;
  std::vector<std::size_t> probes_per_layer;
  std::vector<double> max_error_per_layer;
};

/// Central differences with step h on the 64-bit forward pass against the
/// analytic gradient of the batch loss. Probes cycle through the layers and
/// pick a random weight (or, one time in four, a bias) in each. The +-h
/// evaluations hold every ReLU at its state in the unperturbed pass, so a
/// step that straddles a kink still measures the derivative at w.
/// Relative error is |a - n| / max(|a|, |n|, 1e-8).
GradCheckReport gradient_check(const Weights<double>& weights, std::span<const Sample> samples, RngStream& rng,
                               std::size_t probes = 240, double h = 1e-3);

}  // namespace crashforge
