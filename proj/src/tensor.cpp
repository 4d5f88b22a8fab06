#include "shufflenet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "shufflenet/error.hpp"
#include "strcat.hpp"

namespace shufflenet {

using detail::cat;

namespace {

void check_shape(const Shape& s) {
  if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1) {
    throw ShapeError(cat("tensor dimensions must be positive, got (", s.n, ",",
                         s.c, ",", s.h, ",", s.w, ")"));
  }
}

// Floor division for possibly negative numerators, positive divisor.
int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

std::pair<int, int> window_extent(const Shape& s, int kernel, int stride,
                                  int padding, const char* op) {
  if (kernel < 1 || stride < 1 || padding < 0) {
    throw ShapeError(cat(op, ": kernel and stride must be positive"));
  }
  if (kernel > s.h + 2 * padding || kernel > s.w + 2 * padding) {
    throw ShapeError(cat(op, ": window ", kernel, "x", kernel,
                         " exceeds padded input ", s.h, "x", s.w));
  }
  return {(s.h + 2 * padding - kernel) / stride + 1,
          (s.w + 2 * padding - kernel) / stride + 1};
}

}  // namespace

Tensor::Tensor(Shape shape, float fill) : shape_(shape) {
  check_shape(shape_);
  data_.assign(shape_.numel(), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> values)
    : shape_(shape), data_(std::move(values)) {
  check_shape(shape_);
  if (data_.size() != shape_.numel()) {
    throw ShapeError(cat("tensor buffer holds ", data_.size(),
                         " values, shape needs ", shape_.numel()));
  }
}

std::span<const float> Tensor::plane(int n, int c) const {
  return std::span<const float>(data_).subspan(index(n, c, 0, 0), shape_.plane());
}

std::span<float> Tensor::plane(int n, int c) {
  return std::span<float>(data_).subspan(index(n, c, 0, 0), shape_.plane());
}

void ConvSpec::validate() const {
  if (c_in < 1 || c_out < 1 || kh < 1 || kw < 1 || stride < 1 || padding < 0 ||
      groups < 1) {
    throw ShapeError(cat("invalid conv spec: c_in=", c_in, " c_out=", c_out,
                         " kernel=", kh, "x", kw, " stride=", stride,
                         " padding=", padding, " groups=", groups));
  }
  if (c_in % groups != 0 || c_out % groups != 0) {
    throw ShapeError(cat("conv channels ", c_in, "->", c_out,
                         " not divisible by groups=", groups));
  }
}

std::size_t ConvSpec::weight_count() const {
  return static_cast<std::size_t>(c_out) * (c_in / groups) * kh * kw;
}

std::pair<int, int> ConvSpec::output_extent(int h, int w) const {
  if (kh > h + 2 * padding || kw > w + 2 * padding) {
    throw ShapeError(cat("kernel ", kh, "x", kw, " larger than padded input ",
                         h, "x", w, " (padding ", padding, ")"));
  }
  return {(h + 2 * padding - kh) / stride + 1, (w + 2 * padding - kw) / stride + 1};
}

Tensor conv2d(const Tensor& input, const Weights& weights, const ConvSpec& spec,
              Activation activation) {
  spec.validate();
  const Shape& in = input.shape();
  if (in.c != spec.c_in) {
    throw ShapeError(cat("conv2d: input has ", in.c, " channels, spec expects ",
                         spec.c_in));
  }
  if (weights.values.size() != spec.weight_count()) {
    throw ShapeError(cat("conv2d: ", weights.values.size(),
                         " weight values, spec needs ", spec.weight_count()));
  }
  if (weights.bias && weights.bias->size() != static_cast<std::size_t>(spec.c_out)) {
    throw ShapeError("conv2d: bias length differs from c_out");
  }
  if (weights.scale_shift &&
      (weights.scale_shift->scale.size() != static_cast<std::size_t>(spec.c_out) ||
       weights.scale_shift->shift.size() != static_cast<std::size_t>(spec.c_out))) {
    throw ShapeError("conv2d: scale/shift length differs from c_out");
  }

  const auto [oh, ow] = spec.output_extent(in.h, in.w);
  Tensor out(Shape{in.n, spec.c_out, oh, ow});

  const int cin_g = spec.c_in / spec.groups;
  const int cout_g = spec.c_out / spec.groups;
  const int stride = spec.stride;
  const int pad = spec.padding;
  const float* wbase = weights.values.data();

  for (int n = 0; n < in.n; ++n) {
    for (int g = 0; g < spec.groups; ++g) {
      for (int col = 0; col < cout_g; ++col) {
        const int co = g * cout_g + col;
        float* dst = out.plane(n, co).data();
        const float init = weights.bias ? (*weights.bias)[co] : 0.0f;
        std::fill(dst, dst + static_cast<std::size_t>(oh) * ow, init);

        for (int cil = 0; cil < cin_g; ++cil) {
          const float* src = input.plane(n, g * cin_g + cil).data();
          const float* wk =
              wbase + (static_cast<std::size_t>(co) * cin_g + cil) * spec.kh * spec.kw;
          for (int ky = 0; ky < spec.kh; ++ky) {
            // Output rows whose input row iy = oy*stride - pad + ky is in range.
            const int oy_lo = std::max(0, -floor_div(ky - pad, stride));
            const int oy_hi = std::min(oh, floor_div(in.h - 1 + pad - ky, stride) + 1);
            for (int kx = 0; kx < spec.kw; ++kx) {
              const float wv = wk[ky * spec.kw + kx];
              const int ox_lo = std::max(0, -floor_div(kx - pad, stride));
              const int ox_hi = std::min(ow, floor_div(in.w - 1 + pad - kx, stride) + 1);
              if (ox_lo >= ox_hi) continue;
              for (int oy = oy_lo; oy < oy_hi; ++oy) {
                const float* srow = src + static_cast<std::size_t>(oy * stride - pad + ky) * in.w;
                float* drow = dst + static_cast<std::size_t>(oy) * ow;
                if (stride == 1) {
                  const float* s = srow + (kx - pad);
                  for (int ox = ox_lo; ox < ox_hi; ++ox) drow[ox] += wv * s[ox];
                } else {
                  for (int ox = ox_lo; ox < ox_hi; ++ox) {
                    drow[ox] += wv * srow[ox * stride - pad + kx];
                  }
                }
              }
            }
          }
        }

        const std::size_t count = static_cast<std::size_t>(oh) * ow;
        if (weights.scale_shift) {
          const float sc = weights.scale_shift->scale[co];
          const float sh = weights.scale_shift->shift[co];
          for (std::size_t i = 0; i < count; ++i) dst[i] = dst[i] * sc + sh;
        }
        if (activation == Activation::Relu) {
          for (std::size_t i = 0; i < count; ++i) dst[i] = std::max(dst[i], 0.0f);
        }
      }
    }
  }
  return out;
}

Tensor channel_shuffle(const Tensor& input, int groups) {
  const Shape& s = input.shape();
  if (groups < 1 || s.c % groups != 0) {
    throw ShapeError(cat("channel_shuffle: ", s.c, " channels not divisible by g=",
                         groups));
  }
  const int per_group = s.c / groups;
  Tensor out(s);
  for (int n = 0; n < s.n; ++n) {
    for (int a = 0; a < groups; ++a) {
      for (int b = 0; b < per_group; ++b) {
        auto src = input.plane(n, a * per_group + b);
        std::copy(src.begin(), src.end(), out.plane(n, b * groups + a).begin());
      }
    }
  }
  return out;
}

namespace {

Tensor slice_channels(const Tensor& input, int begin, int end) {
  const Shape& s = input.shape();
  Tensor out(Shape{s.n, end - begin, s.h, s.w});
  for (int n = 0; n < s.n; ++n) {
    for (int c = begin; c < end; ++c) {
      auto src = input.plane(n, c);
      std::copy(src.begin(), src.end(), out.plane(n, c - begin).begin());
    }
  }
  return out;
}

}  // namespace

std::pair<Tensor, Tensor> channel_split(const Tensor& input, int c_prime) {
  const int c = input.c();
  if (c_prime <= 0 || c_prime >= c) {
    throw ShapeError(cat("channel_split: c_prime=", c_prime, " outside (0, ", c, ")"));
  }
  return {slice_channels(input, 0, c - c_prime), slice_channels(input, c - c_prime, c)};
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w) {
    throw ShapeError(cat("concat_channels: (", sa.n, ",", sa.h, ",", sa.w,
                         ") vs (", sb.n, ",", sb.h, ",", sb.w, ")"));
  }
  Tensor out(Shape{sa.n, sa.c + sb.c, sa.h, sa.w});
  for (int n = 0; n < sa.n; ++n) {
    for (int c = 0; c < sa.c; ++c) {
      auto src = a.plane(n, c);
      std::copy(src.begin(), src.end(), out.plane(n, c).begin());
    }
    for (int c = 0; c < sb.c; ++c) {
      auto src = b.plane(n, c);
      std::copy(src.begin(), src.end(), out.plane(n, sa.c + c).begin());
    }
  }
  return out;
}

Tensor relu(const Tensor& input) {
  Tensor out(input.shape());
  std::transform(input.data().begin(), input.data().end(), out.data().begin(),
                 [](float v) { return std::max(v, 0.0f); });
  return out;
}

Tensor sigmoid(const Tensor& input) {
  Tensor out(input.shape());
  std::transform(input.data().begin(), input.data().end(), out.data().begin(),
                 [](float v) { return 1.0f / (1.0f + std::exp(-v)); });
  return out;
}

Tensor add_tensors(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(cat("add_tensors: shapes (", a.n(), ",", a.c(), ",", a.h(),
                         ",", a.w(), ") and (", b.n(), ",", b.c(), ",", b.h(),
                         ",", b.w(), ") differ"));
  }
  Tensor out(a.shape());
  std::transform(a.data().begin(), a.data().end(), b.data().begin(),
                 out.data().begin(), [](float x, float y) { return x + y; });
  return out;
}

Tensor apply_scale_shift(const Tensor& input, std::span<const float> scale,
                         std::span<const float> shift) {
  const Shape& s = input.shape();
  if (scale.size() != static_cast<std::size_t>(s.c) ||
      shift.size() != static_cast<std::size_t>(s.c)) {
    throw ShapeError("apply_scale_shift: parameter length differs from channels");
  }
  Tensor out(s);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      auto src = input.plane(n, c);
      auto dst = out.plane(n, c);
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * scale[c] + shift[c];
    }
  }
  return out;
}

Tensor multiply_channels(const Tensor& input, const Tensor& gate) {
  const Shape& s = input.shape();
  const Shape& g = gate.shape();
  if (g.n != s.n || g.c != s.c || g.h != 1 || g.w != 1) {
    throw ShapeError("multiply_channels: gate must be (n, c, 1, 1)");
  }
  Tensor out(s);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float k = gate.at(n, c, 0, 0);
      auto src = input.plane(n, c);
      auto dst = out.plane(n, c);
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * k;
    }
  }
  return out;
}

Tensor maxpool(const Tensor& input, int kernel, int stride, int padding) {
  const Shape& s = input.shape();
  const auto [oh, ow] = window_extent(s, kernel, stride, padding, "maxpool");
  Tensor out(Shape{s.n, s.c, oh, ow});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          float best = -std::numeric_limits<float>::infinity();
          for (int ky = 0; ky < kernel; ++ky) {
            const int iy = oy * stride - padding + ky;
            if (iy < 0 || iy >= s.h) continue;
            for (int kx = 0; kx < kernel; ++kx) {
              const int ix = ox * stride - padding + kx;
              if (ix < 0 || ix >= s.w) continue;
              best = std::max(best, input.at(n, c, iy, ix));
            }
          }
          out.at(n, c, oy, ox) = best;
        }
      }
    }
  }
  return out;
}

Tensor avg_pool(const Tensor& input, int kernel, int stride, int padding) {
  const Shape& s = input.shape();
  const auto [oh, ow] = window_extent(s, kernel, stride, padding, "avg_pool");
  const float inv = 1.0f / static_cast<float>(kernel * kernel);
  Tensor out(Shape{s.n, s.c, oh, ow});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          float sum = 0.0f;
          for (int ky = 0; ky < kernel; ++ky) {
            const int iy = oy * stride - padding + ky;
            if (iy < 0 || iy >= s.h) continue;
            for (int kx = 0; kx < kernel; ++kx) {
              const int ix = ox * stride - padding + kx;
              if (ix < 0 || ix >= s.w) continue;
              sum += input.at(n, c, iy, ix);
            }
          }
          out.at(n, c, oy, ox) = sum * inv;
        }
      }
    }
  }
  return out;
}

Tensor global_avg_pool(const Tensor& input) {
  const Shape& s = input.shape();
  Tensor out(Shape{s.n, s.c, 1, 1});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      double sum = 0.0;
      for (float v : input.plane(n, c)) sum += v;
      out.at(n, c, 0, 0) = static_cast<float>(sum / static_cast<double>(s.plane()));
    }
  }
  return out;
}

Tensor fully_connected(const Tensor& input, const Weights& weights) {
  const Shape& s = input.shape();
  if (s.h != 1 || s.w != 1) {
    throw ShapeError(cat("fully_connected: input must be 1x1 spatially, got ", s.h,
                         "x", s.w));
  }
  if (weights.values.empty() || weights.values.size() % s.c != 0) {
    throw ShapeError("fully_connected: weight count not a multiple of input length");
  }
  const int outputs = static_cast<int>(weights.values.size() / s.c);
  if (weights.bias && weights.bias->size() != static_cast<std::size_t>(outputs)) {
    throw ShapeError("fully_connected: bias length differs from output count");
  }
  Tensor out(Shape{s.n, outputs, 1, 1});
  for (int n = 0; n < s.n; ++n) {
    for (int o = 0; o < outputs; ++o) {
      const float* row = weights.values.data() + static_cast<std::size_t>(o) * s.c;
      float acc = weights.bias ? (*weights.bias)[o] : 0.0f;
      for (int c = 0; c < s.c; ++c) acc += row[c] * input.at(n, c, 0, 0);
      out.at(n, o, 0, 0) = acc;
    }
  }
  return out;
}

}  // namespace shufflenet
