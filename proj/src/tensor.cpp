#include "s2d/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace s2d {

std::size_t shape_size(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ")";
  return os.str();
}

const Shape& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::size() const { return node_->values.size(); }
std::vector<double>& Tensor::data() { return node_->values; }
const std::vector<double>& Tensor::data() const { return node_->values; }

double Tensor::item() const {
  if (size() != 1) throw std::logic_error("item() on non-scalar tensor");
  return node_->values[0];
}

bool Tensor::requires_grad() const { return node_->requires_grad; }

Tensor Tensor::detach() const {
  auto n = std::make_shared<Node>();
  n->shape = node_->shape;
  n->values = node_->values;
  return Tensor(n);
}

// ---- factories ----

Tensor zeros(const Shape& s) { return full(s, 0.0); }

Tensor full(const Shape& s, double v) {
  auto n = std::make_shared<Node>();
  n->shape = s;
  n->values.assign(shape_size(s), v);
  return Tensor(n);
}

Tensor scalar(double v) { return full({1}, v); }

Tensor from_vector(std::vector<double> v, const Shape& s) {
  if (v.size() != shape_size(s))
    throw std::invalid_argument("from_vector: size mismatch for " +
                                shape_str(s));
  auto n = std::make_shared<Node>();
  n->shape = s;
  n->values = std::move(v);
  return Tensor(n);
}

Tensor leaf(std::vector<double> v, const Shape& s, bool requires_grad) {
  Tensor t = from_vector(std::move(v), s);
  t.node()->requires_grad = requires_grad;
  return t;
}

// ---- op construction ----

static Tensor make_op(const char* name, Shape shape, std::vector<double> values,
                      std::vector<Tensor> parents, BackwardFn bw) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->values = std::move(values);
  n->op = name;
  bool rg = false;
  for (const auto& p : parents) rg = rg || p.requires_grad();
  if (rg) {
    n->requires_grad = true;
    n->parents.reserve(parents.size());
    for (const auto& p : parents) n->parents.push_back(p.node_ptr());
    n->backward = std::move(bw);
  }
  return Tensor(n);
}

// ---- broadcasting ----

static Shape broadcast_shape(const Shape& a, const Shape& b) {
  Shape out(std::max(a.size(), b.size()));
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::size_t da = i < out.size() - a.size() ? 1 : a[i - (out.size() - a.size())];
    std::size_t db = i < out.size() - b.size() ? 1 : b[i - (out.size() - b.size())];
    if (da != db && da != 1 && db != 1)
      throw std::invalid_argument("incompatible shapes " + shape_str(a) +
                                  " and " + shape_str(b));
    out[i] = std::max(da, db);
  }
  return out;
}

// Strides of `in` right-aligned against `out`, zero where broadcast.
static std::vector<std::size_t> broadcast_strides(const Shape& in,
                                                  const Shape& out) {
  std::vector<std::size_t> strides(out.size(), 0);
  std::size_t acc = 1;
  for (std::size_t i = 0; i < in.size(); ++i) {
    std::size_t j = in.size() - 1 - i;
    std::size_t oj = out.size() - 1 - i;
    strides[oj] = in[j] == 1 ? 0 : acc;
    acc *= in[j];
  }
  return strides;
}

Tensor broadcast_to(const Tensor& t, const Shape& s) {
  if (t.shape() == s) return t;
  Shape check = broadcast_shape(t.shape(), s);
  if (check != s)
    throw std::invalid_argument("cannot broadcast " + shape_str(t.shape()) +
                                " to " + shape_str(s));
  auto strides = broadcast_strides(t.shape(), s);
  std::size_t n = shape_size(s);
  std::vector<double> out(n);
  const auto& x = t.data();
  std::vector<std::size_t> idx(s.size(), 0);
  std::size_t src = 0;
  for (std::size_t o = 0; o < n; ++o) {
    out[o] = x[src];
    for (std::size_t d = s.size(); d-- > 0;) {
      ++idx[d];
      src += strides[d];
      if (idx[d] < s[d]) break;
      idx[d] = 0;
      src -= strides[d] * s[d];
    }
  }
  Shape in_shape = t.shape();
  return make_op("broadcast_to", s, std::move(out), {t},
                 [in_shape](const Tensor& g, const Tensor&) {
                   return std::vector<Tensor>{reduce_to(g, in_shape)};
                 });
}

Tensor reduce_to(const Tensor& t, const Shape& s) {
  if (t.shape() == s) return t;
  Shape check = broadcast_shape(s, t.shape());
  if (check != t.shape())
    throw std::invalid_argument("cannot reduce " + shape_str(t.shape()) +
                                " to " + shape_str(s));
  auto strides = broadcast_strides(s, t.shape());
  const Shape& big = t.shape();
  std::size_t n = t.size();
  std::vector<double> out(shape_size(s), 0.0);
  const auto& x = t.data();
  std::vector<std::size_t> idx(big.size(), 0);
  std::size_t dst = 0;
  for (std::size_t o = 0; o < n; ++o) {
    out[dst] += x[o];
    for (std::size_t d = big.size(); d-- > 0;) {
      ++idx[d];
      dst += strides[d];
      if (idx[d] < big[d]) break;
      idx[d] = 0;
      dst -= strides[d] * big[d];
    }
  }
  Shape in_shape = t.shape();
  return make_op("reduce_to", s, std::move(out), {t},
                 [in_shape](const Tensor& g, const Tensor&) {
                   return std::vector<Tensor>{broadcast_to(g, in_shape)};
                 });
}

// ---- elementwise ----

template <class F>
static std::vector<double> map2(const Tensor& a, const Tensor& b, F f) {
  const auto& x = a.data();
  const auto& y = b.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i], y[i]);
  return out;
}

template <class F>
static std::vector<double> map1(const Tensor& a, F f) {
  const auto& x = a.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}

static void align(const Tensor& a, const Tensor& b, Tensor& a2, Tensor& b2) {
  Shape rs = broadcast_shape(a.shape(), b.shape());
  a2 = broadcast_to(a, rs);
  b2 = broadcast_to(b, rs);
}

Tensor operator+(const Tensor& a, const Tensor& b) {
  Tensor a2, b2;
  align(a, b, a2, b2);
  return make_op("add", a2.shape(), map2(a2, b2, std::plus<double>()),
                 {a2, b2}, [](const Tensor& g, const Tensor&) {
                   return std::vector<Tensor>{g, g};
                 });
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  Tensor a2, b2;
  align(a, b, a2, b2);
  return make_op("sub", a2.shape(), map2(a2, b2, std::minus<double>()),
                 {a2, b2}, [](const Tensor& g, const Tensor&) {
                   return std::vector<Tensor>{g, -g};
                 });
}

Tensor operator*(const Tensor& a, const Tensor& b) {
  Tensor a2, b2;
  align(a, b, a2, b2);
  return make_op("mul", a2.shape(), map2(a2, b2, std::multiplies<double>()),
                 {a2, b2}, [a2, b2](const Tensor& g, const Tensor&) {
                   return std::vector<Tensor>{g * b2, g * a2};
                 });
}

Tensor operator/(const Tensor& a, const Tensor& b) {
  Tensor a2, b2;
  align(a, b, a2, b2);
  return make_op("div", a2.shape(), map2(a2, b2, std::divides<double>()),
                 {a2, b2}, [a2, b2](const Tensor& g, const Tensor&) {
                   return std::vector<Tensor>{g / b2, -g * a2 / (b2 * b2)};
                 });
}

Tensor operator-(const Tensor& a) {
  return make_op("neg", a.shape(), map1(a, std::negate<double>()), {a},
                 [](const Tensor& g, const Tensor&) {
                   return std::vector<Tensor>{-g};
                 });
}

Tensor operator+(const Tensor& a, double b) { return a + scalar(b); }
Tensor operator-(const Tensor& a, double b) { return a - scalar(b); }
Tensor operator*(const Tensor& a, double b) { return a * scalar(b); }
Tensor operator/(const Tensor& a, double b) { return a / scalar(b); }
Tensor operator+(double a, const Tensor& b) { return scalar(a) + b; }
Tensor operator-(double a, const Tensor& b) { return scalar(a) - b; }
Tensor operator*(double a, const Tensor& b) { return scalar(a) * b; }

Tensor exp(const Tensor& t) {
  return make_op("exp", t.shape(), map1(t, [](double x) { return std::exp(x); }),
                 {t}, [](const Tensor& g, const Tensor& self) {
                   return std::vector<Tensor>{g * self};
                 });
}

Tensor log(const Tensor& t) {
  return make_op("log", t.shape(), map1(t, [](double x) { return std::log(x); }),
                 {t}, [t](const Tensor& g, const Tensor&) {
                   return std::vector<Tensor>{g / t};
                 });
}

Tensor sqrt(const Tensor& t) {
  return make_op("sqrt", t.shape(),
                 map1(t, [](double x) { return std::sqrt(x); }), {t},
                 [](const Tensor& g, const Tensor& self) {
                   return std::vector<Tensor>{g * 0.5 / self};
                 });
}

Tensor abs(const Tensor& t) {
  return make_op("abs", t.shape(),
                 map1(t, [](double x) { return std::abs(x); }), {t},
                 [t](const Tensor& g, const Tensor&) {
                   Tensor sign = from_vector(
                       map1(t, [](double x) { return x < 0 ? -1.0 : 1.0; }),
                       t.shape());
                   return std::vector<Tensor>{g * sign};
                 });
}

Tensor square(const Tensor& t) { return t * t; }

static double softplus_val(double x) {
  if (x > 35.0) return x;
  return std::log1p(std::exp(x));
}

static double sigmoid_val(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

Tensor softplus(const Tensor& t) {
  return make_op("softplus", t.shape(), map1(t, softplus_val), {t},
                 [t](const Tensor& g, const Tensor&) {
                   return std::vector<Tensor>{g * sigmoid(t)};
                 });
}

Tensor sigmoid(const Tensor& t) {
  return make_op("sigmoid", t.shape(), map1(t, sigmoid_val), {t},
                 [](const Tensor& g, const Tensor& self) {
                   return std::vector<Tensor>{g * self * (1.0 - self)};
                 });
}

Tensor tanh(const Tensor& t) {
  return make_op("tanh", t.shape(),
                 map1(t, [](double x) { return std::tanh(x); }), {t},
                 [](const Tensor& g, const Tensor& self) {
                   return std::vector<Tensor>{g * (1.0 - self * self)};
                 });
}

Tensor leaky_relu(const Tensor& t, double alpha) {
  return make_op(
      "leaky_relu", t.shape(),
      map1(t, [alpha](double x) { return x >= 0 ? x : alpha * x; }), {t},
      [t, alpha](const Tensor& g, const Tensor&) {
        Tensor mask = from_vector(
            map1(t, [alpha](double x) { return x >= 0 ? 1.0 : alpha; }),
            t.shape());
        return std::vector<Tensor>{g * mask};
      });
}

Tensor clamp(const Tensor& t, double lo, double hi) {
  return make_op(
      "clamp", t.shape(),
      map1(t, [lo, hi](double x) { return std::min(hi, std::max(lo, x)); }),
      {t}, [t, lo, hi](const Tensor& g, const Tensor&) {
        Tensor mask = from_vector(
            map1(t,
                 [lo, hi](double x) { return (x >= lo && x <= hi) ? 1.0 : 0.0; }),
            t.shape());
        return std::vector<Tensor>{g * mask};
      });
}

// ---- shape ----

Tensor reshape(const Tensor& t, const Shape& s) {
  if (shape_size(s) != t.size())
    throw std::invalid_argument("reshape: element count mismatch " +
                                shape_str(t.shape()) + " -> " + shape_str(s));
  Shape in_shape = t.shape();
  return make_op("reshape", s, t.data(), {t},
                 [in_shape](const Tensor& g, const Tensor&) {
                   return std::vector<Tensor>{reshape(g, in_shape)};
                 });
}

Tensor transpose(const Tensor& t) {
  if (t.shape().size() != 2) throw std::invalid_argument("transpose: need 2-D");
  std::size_t r = t.shape()[0], c = t.shape()[1];
  std::vector<double> out(r * c);
  const auto& x = t.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = x[i * c + j];
  return make_op("transpose", {c, r}, std::move(out), {t},
                 [](const Tensor& g, const Tensor&) {
                   return std::vector<Tensor>{transpose(g)};
                 });
}

Tensor concat0(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat0: empty input");
  Shape s = parts[0].shape();
  std::size_t rest = shape_size(s) / s[0];
  std::size_t total = 0;
  for (const auto& p : parts) {
    const Shape& ps = p.shape();
    if (ps.size() != s.size() ||
        !std::equal(ps.begin() + 1, ps.end(), s.begin() + 1))
      throw std::invalid_argument("concat0: trailing dims differ");
    total += ps[0];
  }
  s[0] = total;
  std::vector<double> out;
  out.reserve(total * rest);
  for (const auto& p : parts)
    out.insert(out.end(), p.data().begin(), p.data().end());
  std::vector<std::size_t> lens;
  for (const auto& p : parts) lens.push_back(p.shape()[0]);
  return make_op("concat0", s, std::move(out), parts,
                 [lens](const Tensor& g, const Tensor&) {
                   std::vector<Tensor> gs;
                   std::size_t at = 0;
                   for (auto len : lens) {
                     gs.push_back(slice0(g, at, len));
                     at += len;
                   }
                   return gs;
                 });
}

Tensor slice0(const Tensor& t, std::size_t start, std::size_t len) {
  const Shape& s = t.shape();
  if (s.empty() || start + len > s[0])
    throw std::invalid_argument("slice0: out of range");
  std::size_t rest = t.size() / s[0];
  std::vector<double> out(t.data().begin() + start * rest,
                          t.data().begin() + (start + len) * rest);
  Shape os = s;
  os[0] = len;
  std::size_t head = s[0];
  return make_op("slice0", os, std::move(out), {t},
                 [start, len, head, os](const Tensor& g, const Tensor&) {
                   Shape pre = os, post = os;
                   pre[0] = start;
                   post[0] = head - start - len;
                   std::vector<Tensor> pieces;
                   if (pre[0]) pieces.push_back(zeros(pre));
                   pieces.push_back(g);
                   if (post[0]) pieces.push_back(zeros(post));
                   return std::vector<Tensor>{concat0(pieces)};
                 });
}

Tensor slice_cols(const Tensor& t, std::size_t start, std::size_t len) {
  if (t.shape().size() != 2) throw std::invalid_argument("slice_cols: need 2-D");
  return transpose(slice0(transpose(t), start, len));
}

// ---- reductions ----

Tensor sum(const Tensor& t) { return reduce_to(t, {1}); }

Tensor mean(const Tensor& t) { return sum(t) * (1.0 / double(t.size())); }

Tensor sum_axis(const Tensor& t, std::size_t axis) {
  const Shape& s = t.shape();
  if (axis >= s.size()) throw std::invalid_argument("sum_axis: bad axis");
  Shape keep = s;
  keep[axis] = 1;
  Tensor r = reduce_to(t, keep);
  Shape out = s;
  out.erase(out.begin() + axis);
  if (out.empty()) out = {1};
  return reshape(r, out);
}

// ---- matmul ----

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 ||
      a.shape()[1] != b.shape()[0])
    throw std::invalid_argument("matmul: incompatible shapes " +
                                shape_str(a.shape()) + " x " +
                                shape_str(b.shape()));
  std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  std::vector<double> out(m * n);
  // Fixed-order dot products (4 accumulators, then acc0+acc1+acc2+acc3):
  // each output element is independent of the matrix sizes around it, so
  // results are bitwise stable under row/column subsetting and batching.
  std::vector<double> bt(n * k);
  const double* pb = b.data().data();
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < n; ++c) bt[c * k + r] = pb[r * n + c];
  const double* pa = a.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* ar = pa + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* br = bt.data() + j * k;
      double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
      std::size_t t = 0;
      for (; t + 4 <= k; t += 4) {
        s0 += ar[t] * br[t];
        s1 += ar[t + 1] * br[t + 1];
        s2 += ar[t + 2] * br[t + 2];
        s3 += ar[t + 3] * br[t + 3];
      }
      double s = (s0 + s1) + (s2 + s3);
      for (; t < k; ++t) s += ar[t] * br[t];
      out[i * n + j] = s;
    }
  }
  return make_op("matmul", {m, n}, std::move(out), {a, b},
                 [a, b](const Tensor& g, const Tensor&) {
                   return std::vector<Tensor>{matmul(g, transpose(b)),
                                              matmul(transpose(a), g)};
                 });
}

// ---- scans ----

Tensor cumsum_last(const Tensor& t, bool exclusive, bool reverse) {
  const Shape& s = t.shape();
  if (s.empty()) throw std::invalid_argument("cumsum_last: rank 0");
  std::size_t last = s.back();
  std::size_t rows = t.size() / last;
  const auto& x = t.data();
  std::vector<double> out(t.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * last;
    double* yr = out.data() + r * last;
    double acc = 0.0;
    if (!reverse) {
      for (std::size_t i = 0; i < last; ++i) {
        if (exclusive) {
          yr[i] = acc;
          acc += xr[i];
        } else {
          acc += xr[i];
          yr[i] = acc;
        }
      }
    } else {
      for (std::size_t i = last; i-- > 0;) {
        if (exclusive) {
          yr[i] = acc;
          acc += xr[i];
        } else {
          acc += xr[i];
          yr[i] = acc;
        }
      }
    }
  }
  return make_op("cumsum_last", s, std::move(out), {t},
                 [exclusive, reverse](const Tensor& g, const Tensor&) {
                   return std::vector<Tensor>{
                       cumsum_last(g, exclusive, !reverse)};
                 });
}

// ---- linear plans ----

const LinearPlan& LinearPlan::transposed() const {
  if (!transpose_) {
    auto t = std::make_shared<LinearPlan>();
    t->in_size = out_size;
    t->out_size = in_size;
    std::vector<std::uint32_t> counts(in_size + 1, 0);
    for (auto i : index) ++counts[i + 1];
    for (std::size_t i = 1; i <= in_size; ++i) counts[i] += counts[i - 1];
    t->offsets = counts;
    t->index.resize(index.size());
    t->weight.resize(weight.size());
    std::vector<std::uint32_t> cursor(t->offsets.begin(), t->offsets.end() - 1);
    for (std::size_t o = 0; o < out_size; ++o) {
      for (std::uint32_t k = offsets[o]; k < offsets[o + 1]; ++k) {
        std::uint32_t pos = cursor[index[k]]++;
        t->index[pos] = std::uint32_t(o);
        t->weight[pos] = weight[k];
      }
    }
    transpose_ = std::move(t);
  }
  return *transpose_;
}

PlanBuilder::PlanBuilder(std::size_t in_size)
    : plan_(std::make_shared<LinearPlan>()) {
  plan_->in_size = in_size;
}

void PlanBuilder::begin_row() {
  plan_->offsets.push_back(std::uint32_t(plan_->index.size()));
}

void PlanBuilder::tap(std::size_t idx, double w) {
  if (idx >= plan_->in_size) throw std::logic_error("plan tap out of range");
  plan_->index.push_back(std::uint32_t(idx));
  plan_->weight.push_back(w);
}

PlanPtr PlanBuilder::finish() {
  plan_->offsets.push_back(std::uint32_t(plan_->index.size()));
  plan_->out_size = plan_->offsets.size() - 1;
  return plan_;
}

Tensor apply_plan(const Tensor& t, PlanPtr plan, bool transposed) {
  const LinearPlan& p = transposed ? plan->transposed() : *plan;
  const Shape& s = t.shape();
  if (s.empty() || s.back() != p.in_size)
    throw std::invalid_argument("apply_plan: last dim " + shape_str(s) +
                                " != plan input " + std::to_string(p.in_size));
  std::size_t batch = t.size() / p.in_size;
  std::vector<double> out(batch * p.out_size, 0.0);
  const auto& x = t.data();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xb = x.data() + b * p.in_size;
    double* yb = out.data() + b * p.out_size;
    for (std::size_t o = 0; o < p.out_size; ++o) {
      double acc = 0.0;
      for (std::uint32_t k = p.offsets[o]; k < p.offsets[o + 1]; ++k)
        acc += p.weight[k] * xb[p.index[k]];
      yb[o] = acc;
    }
  }
  Shape os = s;
  os.back() = p.out_size;
  return make_op("apply_plan", os, std::move(out), {t},
                 [plan, transposed](const Tensor& g, const Tensor&) {
                   return std::vector<Tensor>{apply_plan(g, plan, !transposed)};
                 });
}

// ---- autodiff driver ----

std::vector<Tensor> grad(const Tensor& output, const std::vector<Tensor>& wrt) {
  if (output.size() != 1)
    throw std::invalid_argument("grad: output must be scalar");

  // Topological order over the subgraph that requires grad.
  std::vector<NodePtr> order;
  std::unordered_set<Node*> seen;
  struct Frame {
    NodePtr node;
    std::size_t next = 0;
  };
  std::vector<Frame> stack;
  if (output.requires_grad()) {
    stack.push_back({output.node_ptr()});
    seen.insert(output.node());
  }
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.node->parents.size()) {
      NodePtr p = f.node->parents[f.next++];
      if (p->requires_grad && !seen.count(p.get())) {
        seen.insert(p.get());
        stack.push_back({std::move(p)});
      }
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  std::unordered_map<Node*, Tensor> grads;
  if (output.requires_grad())
    grads[output.node()] = full(output.shape(), 1.0);

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = it->get();
    auto gi = grads.find(n);
    if (gi == grads.end() || n->parents.empty()) continue;
    std::vector<Tensor> pg = n->backward(gi->second, Tensor(*it));
    if (pg.size() != n->parents.size())
      throw std::logic_error(std::string("backward arity mismatch in ") + n->op);
    for (std::size_t i = 0; i < pg.size(); ++i) {
      Node* p = n->parents[i].get();
      if (!p->requires_grad) continue;
      auto slot = grads.find(p);
      if (slot == grads.end())
        grads[p] = pg[i];
      else
        slot->second = slot->second + pg[i];
    }
  }

  std::vector<Tensor> out;
  out.reserve(wrt.size());
  for (const auto& w : wrt) {
    auto it = grads.find(w.node());
    out.push_back(it != grads.end() ? it->second : zeros(w.shape()));
  }
  return out;
}

}  // namespace s2d
