#pragma once

// Reference implementations written independently of the library kernels.
// They favour obviousness over speed.

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "shufflenet/tensor.hpp"

namespace oracle {

using shufflenet::ConvSpec;
using shufflenet::Shape;
using shufflenet::Tensor;
using shufflenet::Weights;

/// Seven nested loops over (n, oc, oy, ox, ic, ky, kx). `trips` counts the
/// multiply-adds that touch a real (non-padding) input element plus those
/// that fall on padding, i.e. every kernel tap of every output.
inline Tensor conv(const Tensor& in, const Weights& wt, const ConvSpec& s, bool relu,
                   std::int64_t* trips = nullptr) {
  const int oh = (in.h() + 2 * s.padding - s.kh) / s.stride + 1;
  const int ow = (in.w() + 2 * s.padding - s.kw) / s.stride + 1;
  const int cin_g = s.c_in / s.groups;
  const int cout_g = s.c_out / s.groups;
  Tensor out(Shape{in.n(), s.c_out, oh, ow});
  for (int n = 0; n < in.n(); ++n) {
    for (int oc = 0; oc < s.c_out; ++oc) {
      const int g = oc / cout_g;
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          double acc = wt.bias ? (*wt.bias)[oc] : 0.0;
          for (int ic = 0; ic < cin_g; ++ic) {
            for (int ky = 0; ky < s.kh; ++ky) {
              for (int kx = 0; kx < s.kw; ++kx) {
                if (trips) ++*trips;
                const int y = oy * s.stride - s.padding + ky;
                const int x = ox * s.stride - s.padding + kx;
                if (y < 0 || y >= in.h() || x < 0 || x >= in.w()) continue;
                const std::size_t widx =
                    ((static_cast<std::size_t>(oc) * cin_g + ic) * s.kh + ky) * s.kw + kx;
                acc += static_cast<double>(wt.values[widx]) * in.at(n, g * cin_g + ic, y, x);
              }
            }
          }
          if (wt.scale_shift) {
            acc = acc * wt.scale_shift->scale[oc] + wt.scale_shift->shift[oc];
          }
          if (relu && acc < 0.0) acc = 0.0;
          out.at(n, oc, oy, ox) = static_cast<float>(acc);
        }
      }
    }
  }
  return out;
}

/// Reshape (g, c/g) then transpose: output k reads input (k % g)*(c/g) + k/g.
inline Tensor shuffle(const Tensor& in, int g) {
  const int per = in.c() / g;
  Tensor out(in.shape());
  for (int n = 0; n < in.n(); ++n)
    for (int k = 0; k < in.c(); ++k)
      for (int y = 0; y < in.h(); ++y)
        for (int x = 0; x < in.w(); ++x) out.at(n, k, y, x) = in.at(n, (k % g) * per + k / g, y, x);
  return out;
}

inline Tensor random_tensor(Shape s, std::mt19937_64& rng, float lo = -1.0f, float hi = 1.0f) {
  std::uniform_real_distribution<float> d(lo, hi);
  Tensor t(s);
  for (float& v : t.data()) v = d(rng);
  return t;
}

inline std::vector<float> random_values(std::size_t n, std::mt19937_64& rng, float lo = -1.0f,
                                        float hi = 1.0f) {
  std::uniform_real_distribution<float> d(lo, hi);
  std::vector<float> v(n);
  for (float& x : v) x = d(rng);
  return v;
}

// Closed-form totals for ShuffleNet v2 at 224x224, written from the channel
// table rather than the graph.
struct Totals {
  std::int64_t flops = 0;
  std::int64_t params = 0;
};

inline void add_conv(Totals& t, std::int64_t hw_out, std::int64_t cin, std::int64_t cout,
                     std::int64_t k, std::int64_t groups) {
  const std::int64_t w = cout * (cin / groups) * k * k;
  t.flops += hw_out * w;
  t.params += w + 2 * cout;  // folded batch-norm scale and shift
}

inline Totals shufflenet_v2(std::array<std::int64_t, 3> widths, std::int64_t conv5) {
  Totals t;
  add_conv(t, 112 * 112, 3, 24, 3, 1);
  std::int64_t cin = 24;
  std::int64_t side = 28;
  const std::array<int, 3> repeats{4, 8, 4};
  for (int s = 0; s < 3; ++s) {
    const std::int64_t c = widths[s];
    const std::int64_t h = c / 2;
    const std::int64_t out = side * side;
    const std::int64_t in = 4 * out;
    add_conv(t, out, cin, cin, 3, cin);  // projection depthwise
    add_conv(t, out, cin, h, 1, 1);
    add_conv(t, in, cin, h, 1, 1);
    add_conv(t, out, h, h, 3, h);
    add_conv(t, out, h, h, 1, 1);
    for (int i = 1; i < repeats[s]; ++i) {
      add_conv(t, out, h, h, 1, 1);
      add_conv(t, out, h, h, 3, h);
      add_conv(t, out, h, h, 1, 1);
    }
    cin = c;
    side /= 2;
  }
  add_conv(t, 7 * 7, cin, conv5, 1, 1);
  t.flops += conv5 * 1000;
  t.params += conv5 * 1000 + 1000;
  return t;
}

}  // namespace oracle
