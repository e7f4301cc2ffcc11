#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace scd {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class Tensor;

namespace detail {

struct TensorImpl;
// Called with the node itself: self.grad holds dL/d(output), self.data the
// forward values. Pushes contributions into the inputs.
using BackwardFn = std::function<void(const TensorImpl& self)>;

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first gradient arrives
  bool requires_grad = false;
  std::uint64_t id = 0;
  std::string op = "leaf";
  std::vector<Tensor> inputs;
  BackwardFn backward_fn;
};

}  // namespace detail

// Dense row-major float64 tensor. Copies share storage and node identity;
// use clone() for an independent value copy.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t dim(std::size_t axis) const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;

  std::span<const double> data() const;
  // Direct write access. Only meaningful on leaves (parameters, inputs).
  std::span<double> mutable_data();
  double item() const;
  double at(std::initializer_list<std::size_t> index) const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);
  bool has_grad() const;
  std::span<const double> grad() const;
  void zero_grad();
  void accumulate_grad(std::span<const double> g);

  std::uint64_t id() const;
  const std::string& op() const;
  const std::vector<Tensor>& inputs() const;

  // True when both handles refer to the same storage (parameter sharing).
  bool same_as(const Tensor& other) const { return impl_ == other.impl_; }
  // Value copy detached from any graph.
  Tensor clone(bool requires_grad = false) const;
  Tensor detach() const { return clone(false); }

  detail::TensorImpl* impl() const { return impl_.get(); }

  // Used by operation implementations to create graph nodes.
  static Tensor make_result(Shape shape, std::vector<double> values, std::string op,
                            std::vector<Tensor> inputs,
                            detail::BackwardFn backward_fn);

 private:
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<detail::TensorImpl> impl_;
};

// Disables graph recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Topologically ordered view of the nodes reachable from a root. Inputs always
// precede their consumers.
struct GraphNode {
  std::uint64_t id;
  std::string op;
  std::vector<std::uint64_t> inputs;
};

struct Graph {
  std::vector<GraphNode> nodes;
  std::size_t index_of(std::uint64_t id) const;
};

Graph trace_graph(const Tensor& root);

// Reverse-mode differentiation from a scalar. Leaf gradients accumulate
// across calls; call zero_grad on the parameters to reset.
void backward(const Tensor& loss);

void zero_grads(std::span<Tensor> tensors);

// Thread-local accumulator of multiply-add FLOPs (2 per MAC) executed by
// conv2d and matmul. Used to cross-check the analytic cost model.
class FlopCounter {
 public:
  FlopCounter();
  ~FlopCounter();
  FlopCounter(const FlopCounter&) = delete;
  FlopCounter& operator=(const FlopCounter&) = delete;
  std::uint64_t flops() const;

 private:
  std::uint64_t start_;
  bool previous_;
};

void record_flops(std::uint64_t flops);

// ---------------------------------------------------------------------------
// Differentiable operations. No implicit broadcasting: the only mixing of
// shapes is scalar scale and the explicit per-channel ops.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);  // 2-D only
Tensor reshape(const Tensor& x, Shape shape);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double value);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor log(const Tensor& x);
// Values outside [lo, hi] are clipped and receive zero gradient.
Tensor clamp(const Tensor& x, double lo, double hi);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

Tensor softmax_rows(const Tensor& x);
Tensor log_softmax_rows(const Tensor& x);
// Row-wise cosine similarity of two m×n matrices -> [m]. The norm product is
// clamped below at eps.
Tensor cosine_rows(const Tensor& a, const Tensor& b, double eps = 1e-12);

// x: [c_in, h, w], kernel: [c_out, c_in, k, k]. Cross-correlation.
Tensor conv2d(const Tensor& x, const Tensor& kernel, int stride, int padding);
// x: [c, h, w] plus bias [c] broadcast over pixels.
Tensor bias_add(const Tensor& x, const Tensor& bias);
// x: [c, h, w]; y = gamma[c] * x + beta[c].
Tensor channel_affine(const Tensor& x, const Tensor& gamma, const Tensor& beta);

Tensor concat_channels(const Tensor& a, const Tensor& b);
Tensor upsample_nearest(const Tensor& x, int factor);
// Half-pixel-centre bilinear interpolation with edge clamping.
Tensor upsample_bilinear(const Tensor& x, int factor);

// ---------------------------------------------------------------------------
// Finite-difference verification.

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t elements = 0;
};

// Compares analytic gradients of scalar f() with respect to every tensor in
// `wrt` against central differences. Per element the error is
// |a - n| / max(1e-8, |a| + |n|).
GradCheckResult grad_check(const std::function<Tensor()>& f, std::span<Tensor> wrt,
                           double step = 1e-3);

double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x, double step = 1e-3);

}  // namespace scd
