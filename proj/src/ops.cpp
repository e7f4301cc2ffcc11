#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "tensor.hpp"

namespace scd {

namespace {

using detail::TensorImpl;

// Gradient buffer of an input, or nullptr if it does not need one.
std::vector<double>* sink(const Tensor& t) {
  if (!t.requires_grad()) return nullptr;
  auto& g = t.impl()->grad;
  if (g.empty()) g.assign(t.numel(), 0.0);
  return &g;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

void require_rank(const Tensor& x, std::size_t rank, const char* op) {
  if (x.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_str(x.shape()));
  }
}

// Elementwise unary op with derivative expressed through (input, output).
template <class Fwd, class Deriv>
Tensor unary(const Tensor& x, const char* name, Fwd fwd, Deriv deriv) {
  auto in = x.data();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
  return Tensor::make_result(x.shape(), std::move(out), name, {x}, [x, deriv](const TensorImpl& self) {
    if (auto* gx = sink(x)) {
      auto in = x.data();
      for (std::size_t i = 0; i < in.size(); ++i) (*gx)[i] += self.grad[i] * deriv(in[i], self.data[i]);
    }
  });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  auto A = a.data();
  auto B = b.data();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t l = 0; l < k; ++l) {
      const double s = A[i * k + l];
      const double* brow = B.data() + l * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += s * brow[j];
    }
  }
  record_flops(2ull * m * k * n);
  return Tensor::make_result({m, n}, std::move(out), "matmul", {a, b}, [a, b, m, k, n](const TensorImpl& self) {
    const auto& g = self.grad;
    auto A = a.data();
    auto B = b.data();
    if (auto* ga = sink(a)) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t l = 0; l < k; ++l) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * B[l * n + j];
          (*ga)[i * k + l] += acc;
        }
      }
    }
    if (auto* gb = sink(b)) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t l = 0; l < k; ++l) {
          const double s = A[i * k + l];
          double* grow = gb->data() + l * n;
          for (std::size_t j = 0; j < n; ++j) grow[j] += s * g[i * n + j];
        }
      }
    }
  });
}

Tensor transpose(const Tensor& x) {
  require_rank(x, 2, "transpose");
  const std::size_t m = x.dim(0), n = x.dim(1);
  auto in = x.data();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = in[i * n + j];
  return Tensor::make_result({n, m}, std::move(out), "transpose", {x}, [x, m, n](const TensorImpl& self) {
    if (auto* gx = sink(x)) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) (*gx)[i * n + j] += self.grad[j * m + i];
    }
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  return Tensor::make_result(std::move(shape), std::move(out), "reshape", {x}, [x](const TensorImpl& self) {
    if (auto* gx = sink(x)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*gx)[i] += self.grad[i];
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  auto A = a.data();
  auto B = b.data();
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] + B[i];
  return Tensor::make_result(a.shape(), std::move(out), "add", {a, b}, [a, b](const TensorImpl& self) {
    for (const Tensor* t : {&a, &b}) {
      if (auto* g = sink(*t)) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] += self.grad[i];
      }
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  auto A = a.data();
  auto B = b.data();
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] - B[i];
  return Tensor::make_result(a.shape(), std::move(out), "sub", {a, b}, [a, b](const TensorImpl& self) {
    if (auto* g = sink(a)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] += self.grad[i];
    }
    if (auto* g = sink(b)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  auto A = a.data();
  auto B = b.data();
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] * B[i];
  return Tensor::make_result(a.shape(), std::move(out), "mul", {a, b}, [a, b](const TensorImpl& self) {
    auto A = a.data();
    auto B = b.data();
    if (auto* g = sink(a)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] += self.grad[i] * B[i];
    }
    if (auto* g = sink(b)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] += self.grad[i] * A[i];
    }
  });
}

Tensor scale(const Tensor& x, double factor) {
  return unary(
      x, "scale", [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& x, double value) {
  return unary(
      x, "add_scalar", [value](double v) { return v + value; }, [](double, double) { return 1.0; });
}

Tensor relu(const Tensor& x) {
  return unary(
      x, "relu", [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x, "sigmoid",
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor log(const Tensor& x) {
  return unary(
      x, "log", [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  return unary(
      x, "clamp", [lo, hi](double v) { return std::clamp(v, lo, hi); },
      [lo, hi](double v, double) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  return Tensor::make_result({}, {acc}, "sum", {x}, [x](const TensorImpl& self) {
    if (auto* g = sink(x)) {
      for (auto& v : *g) v += self.grad[0];
    }
  });
}

Tensor mean(const Tensor& x) {
  if (x.numel() == 0) throw ContractError("mean of empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor softmax_rows(const Tensor& x) {
  require_rank(x, 2, "softmax_rows");
  const std::size_t m = x.dim(0), n = x.dim(1);
  auto in = x.data();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = in.data() + i * n;
    double* o = out.data() + i * n;
    const double mx = *std::max_element(row, row + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      o[j] = std::exp(row[j] - mx);
      z += o[j];
    }
    for (std::size_t j = 0; j < n; ++j) o[j] /= z;
  }
  return Tensor::make_result(x.shape(), std::move(out), "softmax_rows", {x}, [x, m, n](const TensorImpl& self) {
    if (auto* gx = sink(x)) {
      for (std::size_t i = 0; i < m; ++i) {
        const double* y = self.data.data() + i * n;
        const double* gy = self.grad.data() + i * n;
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += gy[j] * y[j];
        for (std::size_t j = 0; j < n; ++j) (*gx)[i * n + j] += y[j] * (gy[j] - dot);
      }
    }
  });
}

Tensor log_softmax_rows(const Tensor& x) {
  require_rank(x, 2, "log_softmax_rows");
  const std::size_t m = x.dim(0), n = x.dim(1);
  auto in = x.data();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = in.data() + i * n;
    double* o = out.data() + i * n;
    const double mx = *std::max_element(row, row + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(row[j] - mx);
    const double lz = mx + std::log(z);
    for (std::size_t j = 0; j < n; ++j) o[j] = row[j] - lz;
  }
  return Tensor::make_result(x.shape(), std::move(out), "log_softmax_rows", {x}, [x, m, n](const TensorImpl& self) {
    if (auto* gx = sink(x)) {
      for (std::size_t i = 0; i < m; ++i) {
        const double* y = self.data.data() + i * n;
        const double* gy = self.grad.data() + i * n;
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) total += gy[j];
        for (std::size_t j = 0; j < n; ++j) (*gx)[i * n + j] += gy[j] - std::exp(y[j]) * total;
      }
    }
  });
}

Tensor cosine_rows(const Tensor& a, const Tensor& b, double eps) {
  require_rank(a, 2, "cosine_rows");
  require_same_shape(a, b, "cosine_rows");
  const std::size_t m = a.dim(0), n = a.dim(1);
  auto A = a.data();
  auto B = b.data();
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      dot += A[i * n + j] * B[i * n + j];
      na += A[i * n + j] * A[i * n + j];
      nb += B[i * n + j] * B[i * n + j];
    }
    out[i] = dot / std::max(std::sqrt(na) * std::sqrt(nb), eps);
  }
  return Tensor::make_result({m}, std::move(out), "cosine_rows", {a, b}, [a, b, m, n, eps](const TensorImpl& self) {
    auto A = a.data();
    auto B = b.data();
    auto* ga = sink(a);
    auto* gb = sink(b);
    for (std::size_t i = 0; i < m; ++i) {
      const double* x = A.data() + i * n;
      const double* y = B.data() + i * n;
      double na2 = 0.0, nb2 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        na2 += x[j] * x[j];
        nb2 += y[j] * y[j];
      }
      const double prod = std::sqrt(na2) * std::sqrt(nb2);
      const double g = self.grad[i];
      const double c = self.data[i];
      if (prod > eps) {
        for (std::size_t j = 0; j < n; ++j) {
          if (ga) (*ga)[i * n + j] += g * (y[j] / prod - c * x[j] / na2);
          if (gb) (*gb)[i * n + j] += g * (x[j] / prod - c * y[j] / nb2);
        }
      } else {
        for (std::size_t j = 0; j < n; ++j) {
          if (ga) (*ga)[i * n + j] += g * y[j] / eps;
          if (gb) (*gb)[i * n + j] += g * x[j] / eps;
        }
      }
    }
  });
}

Tensor conv2d(const Tensor& x, const Tensor& kernel, int stride, int padding) {
  require_rank(x, 3, "conv2d input");
  require_rank(kernel, 4, "conv2d kernel");
  if (stride < 1 || padding < 0) throw ContractError("conv2d: stride must be >= 1 and padding >= 0");
  const std::size_t c_in = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t c_out = kernel.dim(0), kk = kernel.dim(2);
  if (kernel.dim(1) != c_in || kernel.dim(3) != kk) {
    throw DimensionError("conv2d: kernel " + shape_str(kernel.shape()) + " incompatible with input " +
                         shape_str(x.shape()));
  }
  if (kk % 2 == 0) throw ContractError("conv2d: kernel size must be odd, got " + std::to_string(kk));
  const long span_h = static_cast<long>(h) + 2L * padding - static_cast<long>(kk);
  const long span_w = static_cast<long>(w) + 2L * padding - static_cast<long>(kk);
  if (span_h < 0 || span_w < 0) {
    throw DimensionError("conv2d: non-positive output extent for input " + shape_str(x.shape()) + " and kernel " +
                         shape_str(kernel.shape()));
  }
  const std::size_t ho = static_cast<std::size_t>(span_h / stride + 1);
  const std::size_t wo = static_cast<std::size_t>(span_w / stride + 1);
  const std::size_t p = ho * wo;
  const std::size_t rows = c_in * kk * kk;

  // im2col: cols[r][q] with r = (ci, ky, kx), q = output pixel.
  auto in = x.data();
  auto cols = std::make_shared<std::vector<double>>(rows * p, 0.0);
  for (std::size_t ci = 0; ci < c_in; ++ci) {
    for (std::size_t ky = 0; ky < kk; ++ky) {
      for (std::size_t kx = 0; kx < kk; ++kx) {
        double* dst = cols->data() + ((ci * kk + ky) * kk + kx) * p;
        for (std::size_t oy = 0; oy < ho; ++oy) {
          const long iy = static_cast<long>(oy * stride + ky) - padding;
          if (iy < 0 || iy >= static_cast<long>(h)) continue;
          for (std::size_t ox = 0; ox < wo; ++ox) {
            const long ix = static_cast<long>(ox * stride + kx) - padding;
            if (ix < 0 || ix >= static_cast<long>(w)) continue;
            dst[oy * wo + ox] = in[(ci * h + static_cast<std::size_t>(iy)) * w + static_cast<std::size_t>(ix)];
          }
        }
      }
    }
  }

  auto K = kernel.data();
  std::vector<double> out(c_out * p, 0.0);
  for (std::size_t o = 0; o < c_out; ++o) {
    double* orow = out.data() + o * p;
    for (std::size_t r = 0; r < rows; ++r) {
      const double wv = K[o * rows + r];
      if (wv == 0.0) continue;
      const double* crow = cols->data() + r * p;
      for (std::size_t q = 0; q < p; ++q) orow[q] += wv * crow[q];
    }
  }
  record_flops(2ull * c_out * rows * p);

  return Tensor::make_result(
      {c_out, ho, wo}, std::move(out), "conv2d", {x, kernel},
      [x, kernel, cols, c_in, h, w, c_out, kk, ho, wo, p, rows, stride, padding](const TensorImpl& self) {
        const auto& g = self.grad;
        if (auto* gk = sink(kernel)) {
          for (std::size_t o = 0; o < c_out; ++o) {
            const double* grow = g.data() + o * p;
            for (std::size_t r = 0; r < rows; ++r) {
              const double* crow = cols->data() + r * p;
              double acc = 0.0;
              for (std::size_t q = 0; q < p; ++q) acc += grow[q] * crow[q];
              (*gk)[o * rows + r] += acc;
            }
          }
        }
        if (auto* gx = sink(x)) {
          auto K = kernel.data();
          std::vector<double> dcols(rows * p, 0.0);
          for (std::size_t o = 0; o < c_out; ++o) {
            const double* grow = g.data() + o * p;
            for (std::size_t r = 0; r < rows; ++r) {
              const double wv = K[o * rows + r];
              if (wv == 0.0) continue;
              double* drow = dcols.data() + r * p;
              for (std::size_t q = 0; q < p; ++q) drow[q] += wv * grow[q];
            }
          }
          for (std::size_t ci = 0; ci < c_in; ++ci) {
            for (std::size_t ky = 0; ky < kk; ++ky) {
              for (std::size_t kx = 0; kx < kk; ++kx) {
                const double* src = dcols.data() + ((ci * kk + ky) * kk + kx) * p;
                for (std::size_t oy = 0; oy < ho; ++oy) {
                  const long iy = static_cast<long>(oy * stride + ky) - padding;
                  if (iy < 0 || iy >= static_cast<long>(h)) continue;
                  for (std::size_t ox = 0; ox < wo; ++ox) {
                    const long ix = static_cast<long>(ox * stride + kx) - padding;
                    if (ix < 0 || ix >= static_cast<long>(w)) continue;
                    (*gx)[(ci * h + static_cast<std::size_t>(iy)) * w + static_cast<std::size_t>(ix)] +=
                        src[oy * wo + ox];
                  }
                }
              }
            }
          }
        }
      });
}

Tensor bias_add(const Tensor& x, const Tensor& bias) {
  if (x.rank() < 1 || bias.rank() != 1 || bias.dim(0) != x.dim(0)) {
    throw DimensionError("bias_add: bias " + shape_str(bias.shape()) + " does not match channels of " +
                         shape_str(x.shape()));
  }
  const std::size_t c = x.dim(0), p = x.numel() / c;
  auto in = x.data();
  auto B = bias.data();
  std::vector<double> out(in.size());
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t q = 0; q < p; ++q) out[ch * p + q] = in[ch * p + q] + B[ch];
  return Tensor::make_result(x.shape(), std::move(out), "bias_add", {x, bias}, [x, bias, c, p](const TensorImpl& self) {
    if (auto* gx = sink(x)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*gx)[i] += self.grad[i];
    }
    if (auto* gb = sink(bias)) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (std::size_t q = 0; q < p; ++q) acc += self.grad[ch * p + q];
        (*gb)[ch] += acc;
      }
    }
  });
}

Tensor channel_affine(const Tensor& x, const Tensor& gamma, const Tensor& beta) {
  if (x.rank() < 1 || gamma.rank() != 1 || gamma.dim(0) != x.dim(0) || beta.shape() != gamma.shape()) {
    throw DimensionError("channel_affine: parameters " + shape_str(gamma.shape()) + "/" + shape_str(beta.shape()) +
                         " do not match channels of " + shape_str(x.shape()));
  }
  const std::size_t c = x.dim(0), p = x.numel() / c;
  auto in = x.data();
  auto G = gamma.data();
  auto B = beta.data();
  std::vector<double> out(in.size());
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t q = 0; q < p; ++q) out[ch * p + q] = G[ch] * in[ch * p + q] + B[ch];
  return Tensor::make_result(
      x.shape(), std::move(out), "channel_affine", {x, gamma, beta}, [x, gamma, beta, c, p](const TensorImpl& self) {
        auto in = x.data();
        auto G = gamma.data();
        auto* gx = sink(x);
        auto* gg = sink(gamma);
        auto* gb = sink(beta);
        for (std::size_t ch = 0; ch < c; ++ch) {
          double acc_g = 0.0, acc_b = 0.0;
          for (std::size_t q = 0; q < p; ++q) {
            const double g = self.grad[ch * p + q];
            if (gx) (*gx)[ch * p + q] += g * G[ch];
            acc_g += g * in[ch * p + q];
            acc_b += g;
          }
          if (gg) (*gg)[ch] += acc_g;
          if (gb) (*gb)[ch] += acc_b;
        }
      });
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require_rank(a, 3, "concat_channels");
  require_rank(b, 3, "concat_channels");
  if (a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2)) {
    throw DimensionError("concat_channels: spatial mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  std::vector<double> out;
  out.reserve(a.numel() + b.numel());
  out.insert(out.end(), a.data().begin(), a.data().end());
  out.insert(out.end(), b.data().begin(), b.data().end());
  const std::size_t na = a.numel();
  return Tensor::make_result({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)}, std::move(out), "concat_channels", {a, b},
                             [a, b, na](const TensorImpl& self) {
                               if (auto* g = sink(a)) {
                                 for (std::size_t i = 0; i < na; ++i) (*g)[i] += self.grad[i];
                               }
                               if (auto* g = sink(b)) {
                                 for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[na + i];
                               }
                             });
}

Tensor upsample_nearest(const Tensor& x, int factor) {
  require_rank(x, 3, "upsample_nearest");
  if (factor < 1) throw ContractError("upsample_nearest: factor must be >= 1");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2), f = static_cast<std::size_t>(factor);
  const std::size_t H = h * f, W = w * f;
  auto in = x.data();
  std::vector<double> out(c * H * W);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < H; ++i)
      for (std::size_t j = 0; j < W; ++j) out[(ch * H + i) * W + j] = in[(ch * h + i / f) * w + j / f];
  return Tensor::make_result({c, H, W}, std::move(out), "upsample_nearest", {x},
                             [x, c, h, w, f, H, W](const TensorImpl& self) {
                               if (auto* g = sink(x)) {
                                 for (std::size_t ch = 0; ch < c; ++ch)
                                   for (std::size_t i = 0; i < H; ++i)
                                     for (std::size_t j = 0; j < W; ++j)
                                       (*g)[(ch * h + i / f) * w + j / f] += self.grad[(ch * H + i) * W + j];
                               }
                             });
}

namespace {

struct Tap {
  std::size_t lo, hi;
  double frac;
};

std::vector<Tap> bilinear_taps(std::size_t in, std::size_t f) {
  std::vector<Tap> taps(in * f);
  for (std::size_t i = 0; i < taps.size(); ++i) {
    double s = (static_cast<double>(i) + 0.5) / static_cast<double>(f) - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in - 1));
    const auto lo = static_cast<std::size_t>(std::floor(s));
    taps[i] = {lo, std::min(lo + 1, in - 1), s - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace

Tensor upsample_bilinear(const Tensor& x, int factor) {
  require_rank(x, 3, "upsample_bilinear");
  if (factor < 1) throw ContractError("upsample_bilinear: factor must be >= 1");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2), f = static_cast<std::size_t>(factor);
  const std::size_t H = h * f, W = w * f;
  auto ty = bilinear_taps(h, f);
  auto tx = bilinear_taps(w, f);
  auto in = x.data();
  std::vector<double> out(c * H * W);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* src = in.data() + ch * h * w;
    for (std::size_t i = 0; i < H; ++i) {
      const auto& a = ty[i];
      for (std::size_t j = 0; j < W; ++j) {
        const auto& b = tx[j];
        const double top = src[a.lo * w + b.lo] * (1 - b.frac) + src[a.lo * w + b.hi] * b.frac;
        const double bot = src[a.hi * w + b.lo] * (1 - b.frac) + src[a.hi * w + b.hi] * b.frac;
        out[(ch * H + i) * W + j] = top * (1 - a.frac) + bot * a.frac;
      }
    }
  }
  return Tensor::make_result({c, H, W}, std::move(out), "upsample_bilinear", {x},
                             [x, c, h, w, H, W, ty, tx](const TensorImpl& self) {
                               auto* g = sink(x);
                               if (!g) return;
                               for (std::size_t ch = 0; ch < c; ++ch) {
                                 double* dst = g->data() + ch * h * w;
                                 for (std::size_t i = 0; i < H; ++i) {
                                   const auto& a = ty[i];
                                   for (std::size_t j = 0; j < W; ++j) {
                                     const auto& b = tx[j];
                                     const double gv = self.grad[(ch * H + i) * W + j];
                                     dst[a.lo * w + b.lo] += gv * (1 - a.frac) * (1 - b.frac);
                                     dst[a.lo * w + b.hi] += gv * (1 - a.frac) * b.frac;
                                     dst[a.hi * w + b.lo] += gv * a.frac * (1 - b.frac);
                                     dst[a.hi * w + b.hi] += gv * a.frac * b.frac;
                                   }
                                 }
                               }
                             });
}

}  // namespace scd
