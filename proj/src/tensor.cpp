#include "tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "errors.hpp"

namespace scd {

namespace {

std::atomic<std::uint64_t> g_next_id{1};
thread_local bool t_grad_enabled = true;
thread_local bool t_counting = false;
thread_local std::uint64_t t_flops = 0;

std::uint64_t next_id() { return g_next_id.fetch_add(1, std::memory_order_relaxed); }

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const auto n = shape_numel(shape);
  return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("tensor of shape " + shape_str(shape) + " cannot hold " +
                         std::to_string(values.size()) + " values");
  }
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(values);
  impl->requires_grad = requires_grad;
  impl->id = next_id();
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({}, {value}, requires_grad); }

const Shape& Tensor::shape() const { return impl_->shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= impl_->shape.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_str(impl_->shape));
  }
  return impl_->shape[axis];
}

std::size_t Tensor::numel() const { return impl_->data.size(); }

std::span<const double> Tensor::data() const { return impl_->data; }

std::span<double> Tensor::mutable_data() { return impl_->data; }

double Tensor::item() const {
  if (numel() != 1) throw ContractError("item() on tensor of shape " + shape_str(shape()));
  return impl_->data[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  const auto& s = shape();
  if (index.size() != s.size()) throw DimensionError("index rank mismatch for " + shape_str(s));
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (auto i : index) {
    if (i >= s[axis]) throw DimensionError("index out of range for " + shape_str(s));
    flat = flat * s[axis] + i;
    ++axis;
  }
  return impl_->data[flat];
}

bool Tensor::requires_grad() const { return impl_->requires_grad; }

void Tensor::set_requires_grad(bool flag) { impl_->requires_grad = flag; }

bool Tensor::has_grad() const { return !impl_->grad.empty(); }

std::span<const double> Tensor::grad() const { return impl_->grad; }

void Tensor::zero_grad() { std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0); }

void Tensor::accumulate_grad(std::span<const double> g) {
  auto& buf = impl_->grad;
  if (g.size() != impl_->data.size()) throw DimensionError("gradient size mismatch for " + shape_str(shape()));
  if (buf.empty()) buf.assign(impl_->data.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i];
}

std::uint64_t Tensor::id() const { return impl_->id; }

const std::string& Tensor::op() const { return impl_->op; }

const std::vector<Tensor>& Tensor::inputs() const { return impl_->inputs; }

Tensor Tensor::clone(bool requires_grad) const { return from(shape(), impl_->data, requires_grad); }

Tensor Tensor::make_result(Shape shape, std::vector<double> values, std::string op, std::vector<Tensor> inputs,
                           detail::BackwardFn backward_fn) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError("non-finite value produced by " + op);
  }
  Tensor out = from(std::move(shape), std::move(values), false);
  out.impl_->op = std::move(op);
  bool needs = false;
  if (t_grad_enabled) {
    for (const auto& in : inputs) needs = needs || in.requires_grad();
  }
  if (needs) {
    out.impl_->requires_grad = true;
    out.impl_->inputs = std::move(inputs);
    out.impl_->backward_fn = std::move(backward_fn);
  }
  return out;
}

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }

NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

bool grad_enabled() { return t_grad_enabled; }

FlopCounter::FlopCounter() : start_(t_flops), previous_(t_counting) { t_counting = true; }

FlopCounter::~FlopCounter() { t_counting = previous_; }

std::uint64_t FlopCounter::flops() const { return t_flops - start_; }

void record_flops(std::uint64_t flops) {
  if (t_counting) t_flops += flops;
}

// ---------------------------------------------------------------------------

namespace {

// Reachable gradient-carrying nodes, sorted so inputs come first. Ids are
// allocated at creation and an op's inputs always exist before its output,
// so ascending id is a valid topological order.
std::vector<detail::TensorImpl*> reachable_sorted(const Tensor& root) {
  std::vector<detail::TensorImpl*> nodes;
  std::unordered_set<detail::TensorImpl*> seen;
  std::vector<detail::TensorImpl*> stack{root.impl()};
  seen.insert(root.impl());
  while (!stack.empty()) {
    auto* n = stack.back();
    stack.pop_back();
    nodes.push_back(n);
    for (const auto& in : n->inputs) {
      auto* p = in.impl();
      if (p->requires_grad && seen.insert(p).second) stack.push_back(p);
    }
  }
  std::sort(nodes.begin(), nodes.end(), [](auto* a, auto* b) { return a->id < b->id; });
  return nodes;
}

}  // namespace

std::size_t Graph::index_of(std::uint64_t id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id == id) return i;
  }
  throw ContractError("node " + std::to_string(id) + " not in graph");
}

Graph trace_graph(const Tensor& root) {
  Graph g;
  if (!root.requires_grad()) {
    g.nodes.push_back({root.id(), root.op(), {}});
    return g;
  }
  for (auto* n : reachable_sorted(root)) {
    GraphNode node{n->id, n->op, {}};
    for (const auto& in : n->inputs) {
      if (in.requires_grad()) node.inputs.push_back(in.id());
    }
    g.nodes.push_back(std::move(node));
  }
  return g;
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " +
                        (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  }
  if (!loss.requires_grad()) return;
  auto nodes = reachable_sorted(loss);
  // Interior buffers are per-call scratch; only leaves accumulate.
  for (auto* n : nodes) {
    if (n->backward_fn) n->grad.assign(n->data.size(), 0.0);
  }
  auto* root = loss.impl();
  if (root->grad.empty()) root->grad.assign(1, 0.0);
  root->grad[0] += 1.0;
  for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
    auto* n = *it;
    if (!n->backward_fn) continue;
    n->backward_fn(*n);
    n->grad.clear();
    n->grad.shrink_to_fit();
  }
}

void zero_grads(std::span<Tensor> tensors) {
  for (auto& t : tensors) t.zero_grad();
}

// ---------------------------------------------------------------------------

GradCheckResult grad_check(const std::function<Tensor()>& f, std::span<Tensor> wrt, double step) {
  for (auto& t : wrt) t.zero_grad();
  Tensor y = f();
  if (y.numel() != 1) throw ContractError("grad_check requires a scalar function");
  backward(y);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(wrt.size());
  for (auto& t : wrt) {
    if (t.has_grad()) {
      analytic.emplace_back(t.grad().begin(), t.grad().end());
    } else {
      analytic.emplace_back(t.numel(), 0.0);
    }
  }

  GradCheckResult result;
  NoGradGuard no_grad;
  for (std::size_t ti = 0; ti < wrt.size(); ++ti) {
    auto values = wrt[ti].mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      values[i] = original + step;
      const double plus = f().item();
      values[i] = original - step;
      const double minus = f().item();
      values[i] = original;
      const double numeric = (plus - minus) / (2.0 * step);
      const double a = analytic[ti][i];
      const double err = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      result.max_rel_error = std::max(result.max_rel_error, err);
      ++result.elements;
    }
  }
  for (auto& t : wrt) t.zero_grad();
  return result;
}

double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x, double step) {
  const bool previous = x.requires_grad();
  x.set_requires_grad(true);
  std::vector<Tensor> wrt{x};
  auto r = grad_check([&] { return f(x); }, std::span<Tensor>(wrt), step);
  x.set_requires_grad(previous);
  return r.max_rel_error;
}

}  // namespace scd
