#include "mlrn/ops.hpp"

#include "mlrn/parallel.hpp"

#include <algorithm>
#include <array>

namespace mlrn {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ShapeError(message);
}

struct Range {
  Index begin;
  Index end;
};

// Output positions whose tap at kernel offset k reads inside the unpadded input.
Range tap_range(Index out_extent, Index in_extent, Index k, Index pad) {
  return {std::max<Index>(0, pad - k), std::min<Index>(out_extent, in_extent + pad - k)};
}

}  // namespace

ConvParams ConvParams::same(Index c_in, Index c_out, Index k_h, Index k_w) {
  require(c_in > 0 && c_out > 0 && k_h > 0 && k_w > 0, "convolution extents must be positive");
  require(k_h % 2 == 1 && k_w % 2 == 1,
          "same-size padding needs odd kernels, got " + std::to_string(k_h) + "x" + std::to_string(k_w));
  ConvParams p;
  p.weight = Tensor::zeros({c_out, c_in, k_h, k_w}, true);
  p.bias = Tensor::zeros({1, c_out, 1, 1}, true);
  p.padding = {(k_h - 1) / 2, (k_w - 1) / 2};
  return p;
}

Tensor conv2d(const Tensor& input, const ConvParams& params) {
  const Shape in = input.shape();
  const Shape ws = params.weight.shape();
  require(in.c == ws.c, "conv2d: input has " + std::to_string(in.c) + " channels but weight " + ws.str() +
                            " expects " + std::to_string(ws.c));
  require(params.bias.shape() == Shape{1, ws.n, 1, 1},
          "conv2d: bias shape " + params.bias.shape().str() + " does not match weight " + ws.str());
  const Index ph = params.padding.h;
  const Index pw = params.padding.w;
  require(ph >= 0 && pw >= 0, "conv2d: negative padding");
  const Index out_h = in.h + 2 * ph - ws.h + 1;
  const Index out_w = in.w + 2 * pw - ws.w + 1;
  require(out_h > 0 && out_w > 0, "conv2d: kernel larger than padded input " + in.str());

  const Shape os{in.n, ws.n, out_h, out_w};
  Values out(os.numel());
  const double* x = input.values().data();
  const double* wt = params.weight.values().data();
  const double* b = params.bias.values().data();
  double* y = out.data();

  // Per output element the taps are summed channel-major, then kernel row,
  // then kernel column, starting from the bias.
  parallel_for(in.n * ws.n, [&](Index job) {
    const Index n = job / ws.n;
    const Index o = job % ws.n;
    double* dst = y + (n * ws.n + o) * os.plane();
    std::fill(dst, dst + os.plane(), b[o]);
    for (Index i = 0; i < in.c; ++i) {
      const double* src = x + (n * in.c + i) * in.plane();
      for (Index ky = 0; ky < ws.h; ++ky) {
        const Range rows = tap_range(out_h, in.h, ky, ph);
        for (Index kx = 0; kx < ws.w; ++kx) {
          const double wv = wt[((o * ws.c + i) * ws.h + ky) * ws.w + kx];
          const Range cols = tap_range(out_w, in.w, kx, pw);
          for (Index r = rows.begin; r < rows.end; ++r) {
            double* drow = dst + r * out_w;
            const double* srow = src + (r + ky - ph) * in.w + (kx - pw);
            for (Index c = cols.begin; c < cols.end; ++c) drow[c] += wv * srow[c];
          }
        }
      }
    }
  });

  const Tensor in_t = input;
  const ConvParams p = params;
  return make_result(
      OpKind::Conv2d, {input, params.weight, params.bias}, os, std::move(out),
      [in_t, p, os](const Values& g, std::span<Values* const> grads) {
        const Shape in = in_t.shape();
        const Shape ws = p.weight.shape();
        const Index ph = p.padding.h;
        const Index pw = p.padding.w;
        const double* x = in_t.values().data();
        const double* wt = p.weight.values().data();
        const double* go = g.data();

        if (Values* gx = grads[0]) {
          double* gxd = gx->data();
          parallel_for(in.n * in.c, [&](Index job) {
            const Index n = job / in.c;
            const Index i = job % in.c;
            double* dst = gxd + (n * in.c + i) * in.plane();
            for (Index o = 0; o < ws.n; ++o) {
              const double* grow0 = go + (n * ws.n + o) * os.plane();
              for (Index ky = 0; ky < ws.h; ++ky) {
                const Range rows = tap_range(os.h, in.h, ky, ph);
                for (Index kx = 0; kx < ws.w; ++kx) {
                  const double wv = wt[((o * ws.c + i) * ws.h + ky) * ws.w + kx];
                  const Range cols = tap_range(os.w, in.w, kx, pw);
                  for (Index r = rows.begin; r < rows.end; ++r) {
                    const double* grow = grow0 + r * os.w;
                    double* drow = dst + (r + ky - ph) * in.w + (kx - pw);
                    for (Index c = cols.begin; c < cols.end; ++c) drow[c] += wv * grow[c];
                  }
                }
              }
            }
          });
        }

        if (Values* gw = grads[1]) {
          double* gwd = gw->data();
          parallel_for(ws.n, [&](Index o) {
            for (Index i = 0; i < ws.c; ++i) {
              for (Index ky = 0; ky < ws.h; ++ky) {
                const Range rows = tap_range(os.h, in.h, ky, ph);
                for (Index kx = 0; kx < ws.w; ++kx) {
                  const Range cols = tap_range(os.w, in.w, kx, pw);
                  // Four interleaved partial sums; fixed lane assignment keeps
                  // the reduction order independent of the build.
                  std::array<double, 4> acc{0.0, 0.0, 0.0, 0.0};
                  for (Index n = 0; n < in.n; ++n) {
                    const double* gplane = go + (n * ws.n + o) * os.plane();
                    const double* xplane = x + (n * in.c + i) * in.plane();
                    for (Index r = rows.begin; r < rows.end; ++r) {
                      const double* grow = gplane + r * os.w;
                      const double* xrow = xplane + (r + ky - ph) * in.w + (kx - pw);
                      Index c = cols.begin;
                      for (; c + 4 <= cols.end; c += 4) {
                        acc[0] += grow[c] * xrow[c];
                        acc[1] += grow[c + 1] * xrow[c + 1];
                        acc[2] += grow[c + 2] * xrow[c + 2];
                        acc[3] += grow[c + 3] * xrow[c + 3];
                      }
                      for (; c < cols.end; ++c) acc[0] += grow[c] * xrow[c];
                    }
                  }
                  gwd[((o * ws.c + i) * ws.h + ky) * ws.w + kx] += (acc[0] + acc[1]) + (acc[2] + acc[3]);
                }
              }
            }
          });
        }

        if (Values* gb = grads[2]) {
          for (Index o = 0; o < ws.n; ++o) {
            double acc = 0.0;
            for (Index n = 0; n < in.n; ++n) {
              const double* gplane = go + (n * ws.n + o) * os.plane();
              for (Index k = 0; k < os.plane(); ++k) acc += gplane[k];
            }
            (*gb)[o] += acc;
          }
        }
      });
}

Tensor relu(const Tensor& input) {
  Values out = input.values().max(0.0);
  const Tensor in_t = input;
  return make_result(OpKind::Relu, {input}, input.shape(), std::move(out),
                     [in_t](const Values& g, std::span<Values* const> grads) {
                       if (grads[0]) *grads[0] += (in_t.values() > 0.0).select(g, 0.0);
                     });
}

Tensor concat_channels(std::span<const Tensor> inputs) {
  require(!inputs.empty(), "concat_channels: no inputs");
  const Shape first = inputs.front().shape();
  Index channels = 0;
  for (const Tensor& t : inputs) {
    const Shape s = t.shape();
    require(s.n == first.n && s.h == first.h && s.w == first.w,
            "concat_channels: " + s.str() + " does not match " + first.str() + " outside the channel axis");
    channels += s.c;
  }
  const Shape os{first.n, channels, first.h, first.w};
  const Index plane = os.plane();
  Values out(os.numel());
  std::vector<Index> offsets;
  Index offset = 0;
  for (const Tensor& t : inputs) {
    offsets.push_back(offset);
    const Index block = t.shape().c * plane;
    for (Index n = 0; n < os.n; ++n) {
      out.segment((n * channels + offset) * plane, block) = t.values().segment(n * block, block);
    }
    offset += t.shape().c;
  }

  std::vector<Index> widths;
  for (const Tensor& t : inputs) widths.push_back(t.shape().c);
  return make_result(OpKind::Concat, {inputs.begin(), inputs.end()}, os, std::move(out),
                     [os, offsets, widths](const Values& g, std::span<Values* const> grads) {
                       const Index plane = os.plane();
                       for (std::size_t k = 0; k < grads.size(); ++k) {
                         if (!grads[k]) continue;
                         const Index block = widths[k] * plane;
                         for (Index n = 0; n < os.n; ++n) {
                           grads[k]->segment(n * block, block) += g.segment((n * os.c + offsets[k]) * plane, block);
                         }
                       }
                     });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "add: shape " + a.shape().str() + " vs " + b.shape().str());
  return make_result(OpKind::Add, {a, b}, a.shape(), a.values() + b.values(),
                     [](const Values& g, std::span<Values* const> grads) {
                       if (grads[0]) *grads[0] += g;
                       if (grads[1]) *grads[1] += g;
                     });
}

namespace {

// Visits every (source index, destination index) pair of the depth-to-space map.
template <typename Fn>
void for_each_shuffle(const Shape& in, Index r, Fn&& fn) {
  const Index oc = in.c / (r * r);
  const Index ow = in.w * r;
  const Index oh = in.h * r;
  for (Index n = 0; n < in.n; ++n)
    for (Index o = 0; o < oc; ++o)
      for (Index dy = 0; dy < r; ++dy)
        for (Index dx = 0; dx < r; ++dx) {
          const Index src_c = o * r * r + dy * r + dx;
          for (Index y = 0; y < in.h; ++y)
            for (Index x = 0; x < in.w; ++x) {
              const Index src = ((n * in.c + src_c) * in.h + y) * in.w + x;
              const Index dst = ((n * oc + o) * oh + y * r + dy) * ow + x * r + dx;
              fn(src, dst);
            }
        }
}

}  // namespace

Tensor pixel_shuffle(const Tensor& input, Index r) {
  const Shape in = input.shape();
  require(r >= 1, "pixel_shuffle: factor must be positive");
  require(in.c % (r * r) == 0, "pixel_shuffle: " + std::to_string(in.c) + " channels not divisible by r^2 = " +
                                   std::to_string(r * r));
  const Shape os{in.n, in.c / (r * r), in.h * r, in.w * r};
  Values out(os.numel());
  const Values& v = input.values();
  for_each_shuffle(in, r, [&](Index src, Index dst) { out[dst] = v[src]; });
  return make_result(OpKind::PixelShuffle, {input}, os, std::move(out),
                     [in, r](const Values& g, std::span<Values* const> grads) {
                       if (!grads[0]) return;
                       Values& gx = *grads[0];
                       for_each_shuffle(in, r, [&](Index src, Index dst) { gx[src] += g[dst]; });
                     });
}

Tensor pixel_unshuffle(const Tensor& input, Index r) {
  const Shape os = input.shape();
  require(r >= 1, "pixel_unshuffle: factor must be positive");
  require(os.h % r == 0 && os.w % r == 0, "pixel_unshuffle: " + os.str() + " not divisible by " + std::to_string(r));
  const Shape in{os.n, os.c * r * r, os.h / r, os.w / r};
  Values out(in.numel());
  const Values& v = input.values();
  for_each_shuffle(in, r, [&](Index src, Index dst) { out[src] = v[dst]; });
  return make_result(OpKind::PixelShuffle, {input}, in, std::move(out),
                     [in, r](const Values& g, std::span<Values* const> grads) {
                       if (!grads[0]) return;
                       Values& gx = *grads[0];
                       for_each_shuffle(in, r, [&](Index src, Index dst) { gx[dst] += g[src]; });
                     });
}

Tensor l1_loss(const Tensor& pred, const Tensor& target) {
  require(pred.shape() == target.shape(), "l1_loss: shape " + pred.shape().str() + " vs " + target.shape().str());
  const double count = static_cast<double>(pred.shape().numel());
  Values diff = pred.values() - target.values();
  Values out = Values::Constant(1, diff.abs().sum() / count);
  return make_result(OpKind::L1Loss, {pred, target.detach()}, {1, 1, 1, 1}, std::move(out),
                     [diff, count](const Values& g, std::span<Values* const> grads) {
                       if (!grads[0]) return;
                       const double scale = g[0] / count;
                       *grads[0] += diff.unaryExpr([scale](double d) {
                         return d > 0.0 ? scale : (d < 0.0 ? -scale : 0.0);
                       });
                     });
}

Tensor sum(const Tensor& input) {
  const Index count = input.shape().numel();
  return make_result(OpKind::Sum, {input}, {1, 1, 1, 1}, Values::Constant(1, input.values().sum()),
                     [count](const Values& g, std::span<Values* const> grads) {
                       if (grads[0]) *grads[0] += Values::Constant(count, g[0]);
                     });
}

Tensor scale(const Tensor& input, double factor) {
  return make_result(OpKind::Scale, {input}, input.shape(), input.values() * factor,
                     [factor](const Values& g, std::span<Values* const> grads) {
                       if (grads[0]) *grads[0] += g * factor;
                     });
}

}  // namespace mlrn
