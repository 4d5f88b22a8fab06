#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace shufflenet {

/// Dimensions of a dense (batch, channel, row, column) activation.
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }

  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Dense 4-D float tensor in batch, channel, row, column order.
///
/// Every dimension is strictly positive and the buffer always holds exactly
/// n*c*h*w values. Operators take tensors by const reference and return new
/// tensors, so a tensor is never modified behind its owner's back.
class Tensor {
 public:
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> values);

  const Shape& shape() const { return shape_; }
  int n() const { return shape_.n; }
  int c() const { return shape_.c; }
  int h() const { return shape_.h; }
  int w() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  /// Contiguous h*w plane of one channel of one batch item.
  std::span<const float> plane(int n, int c) const;
  std::span<float> plane(int n, int c);

  float at(int n, int c, int y, int x) const { return data_[index(n, c, y, x)]; }
  float& at(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) *
               shape_.w +
           x;
  }

  Shape shape_;
  std::vector<float> data_;
};

/// Convolution hyperparameters. Depthwise is groups == c_in == c_out.
struct ConvSpec {
  int c_in = 1;
  int c_out = 1;
  int kh = 1;
  int kw = 1;
  int stride = 1;
  int padding = 0;
  int groups = 1;

  static ConvSpec pointwise(int c_in, int c_out, int groups = 1) {
    return {c_in, c_out, 1, 1, 1, 0, groups};
  }
  static ConvSpec depthwise(int channels, int kernel, int stride) {
    return {channels, channels, kernel, kernel, stride, kernel / 2, channels};
  }

  /// Throws ShapeError unless every field is positive and both channel
  /// counts divide by the group count.
  void validate() const;

  bool is_depthwise() const { return groups > 1 && groups == c_in && groups == c_out; }
  bool is_pointwise() const { return kh == 1 && kw == 1; }

  /// Number of weight values, c_out * (c_in / groups) * kh * kw.
  std::size_t weight_count() const;

  /// Output (rows, cols) for an h x w input. Throws when the kernel does not
  /// fit inside the padded input.
  std::pair<int, int> output_extent(int h, int w) const;

  friend bool operator==(const ConvSpec&, const ConvSpec&) = default;
};

/// Folded inference-form batch normalization: y = x * scale[c] + shift[c].
struct ScaleShift {
  std::vector<float> scale;
  std::vector<float> shift;
};

/// Kernel of logical shape (c_out, c_in / groups, kh, kw) plus optional bias
/// and optional per-output-channel scale/shift. Fully connected layers use
/// the same container with shape (c_out, c_in).
struct Weights {
  std::vector<float> values;
  std::optional<std::vector<float>> bias;
  std::optional<ScaleShift> scale_shift;
};

enum class Activation { None, Relu };

/// Direct grouped convolution with zero padding. Output group b reads only
/// input group b. Bias, then scale/shift, then the activation are applied to
/// each output element.
Tensor conv2d(const Tensor& input, const Weights& weights, const ConvSpec& spec,
              Activation activation = Activation::None);

/// Channel at a*(c/g)+b moves to b*g+a.
Tensor channel_shuffle(const Tensor& input, int groups);

/// First result holds channels [0, c - c_prime), second [c - c_prime, c).
std::pair<Tensor, Tensor> channel_split(const Tensor& input, int c_prime);

Tensor concat_channels(const Tensor& a, const Tensor& b);

Tensor relu(const Tensor& input);
Tensor sigmoid(const Tensor& input);
Tensor add_tensors(const Tensor& a, const Tensor& b);
Tensor apply_scale_shift(const Tensor& input, std::span<const float> scale,
                         std::span<const float> shift);

/// x[n, c, :, :] * gate[n, c, 0, 0]; gate must be spatially 1x1.
Tensor multiply_channels(const Tensor& input, const Tensor& gate);

/// Padded positions never win the max.
Tensor maxpool(const Tensor& input, int kernel, int stride, int padding = 0);

/// Padded positions count as zeros; the divisor is always kernel*kernel.
Tensor avg_pool(const Tensor& input, int kernel, int stride, int padding = 0);

Tensor global_avg_pool(const Tensor& input);

/// Input must be spatially 1x1; weights are (outputs, c) row-major.
Tensor fully_connected(const Tensor& input, const Weights& weights);

}  // namespace shufflenet
