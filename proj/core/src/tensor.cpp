#include "erpt/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace erpt {

using detail::TensorData;

namespace {

std::string shape_str(const std::vector<std::size_t>& s) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ")";
  return os.str();
}

[[noreturn]] void shape_fail(const char* op, const std::vector<std::size_t>& a,
                             const std::vector<std::size_t>& b) {
  throw TensorError(std::string(op) + ": incompatible shapes " + shape_str(a) +
                    " and " + shape_str(b));
}

std::size_t numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

// C += A(m,k) * B(k,n)
void gemm_nn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// C += A(m,k) * B(n,k)^T
void gemm_nt(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] += acc;
    }
  }
}

// C += A(k,m)^T * B(k,n)
void gemm_tn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* ap = a + p * m;
    const double* bp = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = ap[i];
      if (av == 0.0) continue;
      double* ci = c + i * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

}  // namespace

Tensor make_node(std::vector<std::size_t> shape, std::vector<Tensor> parents,
                 std::function<void(TensorData&)> backward_fn) {
  Tensor t;
  auto d = std::make_shared<TensorData>();
  d->shape = std::move(shape);
  d->val.assign(numel(d->shape), 0.0);
  for (const auto& p : parents)
    if (p.requires_grad()) d->requires_grad = true;
  if (d->requires_grad) {
    d->parents = std::move(parents);
    d->backward_fn = std::move(backward_fn);
  }
  t.d_ = std::move(d);
  return t;
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  Tensor t;
  auto d = std::make_shared<TensorData>();
  d->shape = std::move(shape);
  d->val.assign(numel(d->shape), 0.0);
  d->requires_grad = requires_grad;
  t.d_ = std::move(d);
  return t;
}

Tensor Tensor::from(std::vector<std::size_t> shape, std::vector<double> values,
                    bool requires_grad) {
  if (numel(shape) != values.size())
    throw TensorError("Tensor::from: " + shape_str(shape) + " does not hold " +
                      std::to_string(values.size()) + " values");
  Tensor t = zeros(std::move(shape), requires_grad);
  t.values() = std::move(values);
  return t;
}

Tensor Tensor::scalar(double v) { return from({1}, {v}); }

const std::vector<std::size_t>& Tensor::shape() const { return d_->shape; }
std::size_t Tensor::size() const { return d_->val.size(); }

std::size_t Tensor::rows() const {
  if (d_->shape.size() != 2) throw TensorError("rows(): tensor is not 2-D");
  return d_->shape[0];
}
std::size_t Tensor::cols() const {
  if (d_->shape.size() != 2) throw TensorError("cols(): tensor is not 2-D");
  return d_->shape[1];
}

std::vector<double>& Tensor::values() { return d_->val; }
const std::vector<double>& Tensor::values() const { return d_->val; }
std::vector<double>& Tensor::grad() { return d_->ensure_grad(); }
bool Tensor::has_grad() const { return !d_->grad.empty(); }
void Tensor::zero_grad() {
  if (!d_->grad.empty()) std::fill(d_->grad.begin(), d_->grad.end(), 0.0);
}
bool Tensor::requires_grad() const { return d_->requires_grad; }

double Tensor::item() const {
  if (size() != 1) throw TensorError("item(): tensor has size " + std::to_string(size()));
  return d_->val[0];
}

// --- ops -----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.cols() != b.rows())
    shape_fail("matmul", a.shape(), b.shape());
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out = make_node({m, n}, {a, b}, [a, b, m, k, n](TensorData& self) {
    if (a.requires_grad()) {
      auto& ga = const_cast<Tensor&>(a).grad();
      gemm_nt(self.grad.data(), b.values().data(), ga.data(), m, n, k);
    }
    if (b.requires_grad()) {
      auto& gb = const_cast<Tensor&>(b).grad();
      gemm_tn(a.values().data(), self.grad.data(), gb.data(), k, m, n);
    }
  });
  gemm_nn(a.values().data(), b.values().data(), out.values().data(), m, k, n);
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_fail("add", a.shape(), b.shape());
  Tensor out = make_node(a.shape(), {a, b}, [a, b](TensorData& self) {
    for (const Tensor* p : {&a, &b}) {
      if (!p->requires_grad()) continue;
      auto& g = const_cast<Tensor*>(p)->grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
  const auto& av = a.values();
  const auto& bv = b.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
  return out;
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  if (x.shape().size() != 2 || bias.shape().size() != 1 ||
      x.cols() != bias.shape()[0])
    shape_fail("add_bias", x.shape(), bias.shape());
  const std::size_t m = x.rows(), n = x.cols();
  Tensor out = make_node({m, n}, {x, bias}, [x, bias, m, n](TensorData& self) {
    if (x.requires_grad()) {
      auto& gx = const_cast<Tensor&>(x).grad();
      for (std::size_t i = 0; i < m * n; ++i) gx[i] += self.grad[i];
    }
    if (bias.requires_grad()) {
      auto& gb = const_cast<Tensor&>(bias).grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gb[j] += self.grad[i * n + j];
    }
  });
  const auto& xv = x.values();
  const auto& bv = bias.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) ov[i * n + j] = xv[i * n + j] + bv[j];
  return out;
}

Tensor scale(const Tensor& a, double c) {
  Tensor out = make_node(a.shape(), {a}, [a, c](TensorData& self) {
    if (!a.requires_grad()) return;
    auto& g = const_cast<Tensor&>(a).grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += c * self.grad[i];
  });
  const auto& av = a.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = c * av[i];
  return out;
}

Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw TensorError("concat: no inputs");
  const auto& s0 = parts[0].shape();
  std::size_t last = 0;
  for (const auto& p : parts) {
    const auto& s = p.shape();
    if (s.size() != s0.size()) shape_fail("concat", s0, s);
    for (std::size_t d = 0; d + 1 < s.size(); ++d)
      if (s[d] != s0[d]) shape_fail("concat", s0, s);
    last += s.back();
  }
  std::vector<std::size_t> oshape = s0;
  oshape.back() = last;
  const std::size_t lead = numel(oshape) / last;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) widths.push_back(p.shape().back());

  Tensor out =
      make_node(oshape, parts, [parts, widths, lead, last](TensorData& self) {
        std::size_t off = 0;
        for (std::size_t pi = 0; pi < parts.size(); ++pi) {
          const std::size_t w = widths[pi];
          if (parts[pi].requires_grad()) {
            auto& g = const_cast<Tensor&>(parts[pi]).grad();
            for (std::size_t r = 0; r < lead; ++r)
              for (std::size_t j = 0; j < w; ++j)
                g[r * w + j] += self.grad[r * last + off + j];
          }
          off += w;
        }
      });
  auto& ov = out.values();
  std::size_t off = 0;
  for (std::size_t pi = 0; pi < parts.size(); ++pi) {
    const std::size_t w = widths[pi];
    const auto& pv = parts[pi].values();
    for (std::size_t r = 0; r < lead; ++r)
      for (std::size_t j = 0; j < w; ++j) ov[r * last + off + j] = pv[r * w + j];
    off += w;
  }
  return out;
}

Tensor mean_axis(const Tensor& a, int axis) {
  if (a.shape().size() != 2 || (axis != 0 && axis != 1))
    throw TensorError("mean_axis: need a 2-D tensor and axis 0 or 1");
  const std::size_t m = a.rows(), n = a.cols();
  if (axis == 0) {
    Tensor out = make_node({n}, {a}, [a, m, n](TensorData& self) {
      if (!a.requires_grad()) return;
      auto& g = const_cast<Tensor&>(a).grad();
      const double inv = 1.0 / static_cast<double>(m);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[i * n + j] += inv * self.grad[j];
    });
    const auto& av = a.values();
    auto& ov = out.values();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ov[j] += av[i * n + j];
    for (std::size_t j = 0; j < n; ++j) ov[j] /= static_cast<double>(m);
    return out;
  }
  Tensor out = make_node({m}, {a}, [a, m, n](TensorData& self) {
    if (!a.requires_grad()) return;
    auto& g = const_cast<Tensor&>(a).grad();
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += inv * self.grad[i];
  });
  const auto& av = a.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += av[i * n + j];
    ov[i] = acc / static_cast<double>(n);
  }
  return out;
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
  if (a.shape().size() != 2 || begin >= end || end > a.rows())
    throw TensorError("slice_rows: bad range [" + std::to_string(begin) + "," +
                      std::to_string(end) + ") for " + shape_str(a.shape()));
  const std::size_t n = a.cols(), m = end - begin;
  Tensor out = make_node({m, n}, {a}, [a, begin, m, n](TensorData& self) {
    if (!a.requires_grad()) return;
    auto& g = const_cast<Tensor&>(a).grad();
    for (std::size_t i = 0; i < m * n; ++i) g[begin * n + i] += self.grad[i];
  });
  const auto& av = a.values();
  std::copy(av.begin() + static_cast<std::ptrdiff_t>(begin * n),
            av.begin() + static_cast<std::ptrdiff_t>(end * n),
            out.values().begin());
  return out;
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  if (a.shape().size() != 2 || begin >= end || end > a.cols())
    throw TensorError("slice_cols: bad range [" + std::to_string(begin) + "," +
                      std::to_string(end) + ") for " + shape_str(a.shape()));
  const std::size_t m = a.rows(), n = a.cols(), w = end - begin;
  Tensor out = make_node({m, w}, {a}, [a, begin, m, n, w](TensorData& self) {
    if (!a.requires_grad()) return;
    auto& g = const_cast<Tensor&>(a).grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j)
        g[i * n + begin + j] += self.grad[i * w + j];
  });
  const auto& av = a.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < w; ++j) ov[i * w + j] = av[i * n + begin + j];
  return out;
}

Tensor transpose(const Tensor& a) {
  if (a.shape().size() != 2) throw TensorError("transpose: tensor is not 2-D");
  const std::size_t m = a.rows(), n = a.cols();
  Tensor out = make_node({n, m}, {a}, [a, m, n](TensorData& self) {
    if (!a.requires_grad()) return;
    auto& g = const_cast<Tensor&>(a).grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[j * m + i];
  });
  const auto& av = a.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) ov[j * m + i] = av[i * n + j];
  return out;
}

Tensor softmax_rows(const Tensor& a) {
  if (a.shape().empty()) throw TensorError("softmax_rows: empty shape");
  const std::size_t n = a.shape().back();
  const std::size_t m = a.size() / n;
  Tensor out = make_node(a.shape(), {a}, [a, m, n](TensorData& self) {
    if (!a.requires_grad()) return;
    auto& g = const_cast<Tensor&>(a).grad();
    for (std::size_t i = 0; i < m; ++i) {
      const double* y = self.val.data() + i * n;
      const double* dy = self.grad.data() + i * n;
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += y[j] * dy[j];
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += y[j] * (dy[j] - dot);
    }
  });
  const auto& av = a.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < m; ++i) {
    const double* x = av.data() + i * n;
    double mx = x[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, x[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(x[j] - mx);
    for (std::size_t j = 0; j < n; ++j) ov[i * n + j] = std::exp(x[j] - mx) / z;
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps) {
  const std::size_t n = x.shape().back();
  if (gain.shape() != std::vector<std::size_t>{n} ||
      bias.shape() != std::vector<std::size_t>{n})
    shape_fail("layer_norm", x.shape(), gain.shape());
  const std::size_t m = x.size() / n;

  // cache per-row mean and inverse stddev for the backward pass
  auto mu = std::make_shared<std::vector<double>>(m);
  auto istd = std::make_shared<std::vector<double>>(m);

  Tensor out = make_node(
      x.shape(), {x, gain, bias}, [x, gain, bias, mu, istd, m, n](TensorData& self) {
        const auto& xv = x.values();
        const auto& gv = gain.values();
        for (std::size_t i = 0; i < m; ++i) {
          const double* dy = self.grad.data() + i * n;
          const double mi = (*mu)[i], si = (*istd)[i];
          if (gain.requires_grad() || bias.requires_grad()) {
            for (std::size_t j = 0; j < n; ++j) {
              const double xh = (xv[i * n + j] - mi) * si;
              if (gain.requires_grad())
                const_cast<Tensor&>(gain).grad()[j] += dy[j] * xh;
              if (bias.requires_grad())
                const_cast<Tensor&>(bias).grad()[j] += dy[j];
            }
          }
          if (x.requires_grad()) {
            auto& gx = const_cast<Tensor&>(x).grad();
            double sum_dyg = 0.0, sum_dyg_xh = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              const double xh = (xv[i * n + j] - mi) * si;
              sum_dyg += dy[j] * gv[j];
              sum_dyg_xh += dy[j] * gv[j] * xh;
            }
            const double invn = 1.0 / static_cast<double>(n);
            for (std::size_t j = 0; j < n; ++j) {
              const double xh = (xv[i * n + j] - mi) * si;
              gx[i * n + j] +=
                  si * (dy[j] * gv[j] - invn * sum_dyg - invn * xh * sum_dyg_xh);
            }
          }
        }
      });
  const auto& xv = x.values();
  const auto& gv = gain.values();
  const auto& bv = bias.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < m; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += xv[i * n + j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = xv[i * n + j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    (*mu)[i] = mean;
    (*istd)[i] = is;
    for (std::size_t j = 0; j < n; ++j)
      ov[i * n + j] = gv[j] * (xv[i * n + j] - mean) * is + bv[j];
  }
  return out;
}

Tensor gelu(const Tensor& a) {
  constexpr double kInvSqrt2 = 0.7071067811865476;
  constexpr double kInvSqrt2Pi = 0.3989422804014327;
  Tensor out = make_node(a.shape(), {a}, [a](TensorData& self) {
    if (!a.requires_grad()) return;
    auto& g = const_cast<Tensor&>(a).grad();
    const auto& xv = a.values();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = xv[i];
      const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
      g[i] += self.grad[i] * (cdf + x * pdf);
    }
  });
  const auto& av = a.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i)
    ov[i] = av[i] * 0.5 * (1.0 + std::erf(av[i] * kInvSqrt2));
  return out;
}

Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids) {
  if (table.shape().size() != 2) throw TensorError("embedding_lookup: table is not 2-D");
  const std::size_t v = table.rows(), d = table.cols(), n = ids.size();
  for (int id : ids)
    if (id < 0 || static_cast<std::size_t>(id) >= v)
      throw TensorError("embedding_lookup: id " + std::to_string(id) +
                        " out of range for table with " + std::to_string(v) + " rows");
  Tensor out = make_node({n, d}, {table}, [table, ids, d](TensorData& self) {
    if (!table.requires_grad()) return;
    auto& g = const_cast<Tensor&>(table).grad();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const std::size_t row = static_cast<std::size_t>(ids[i]);
      for (std::size_t j = 0; j < d; ++j) g[row * d + j] += self.grad[i * d + j];
    }
  });
  const auto& tv = table.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < n; ++i)
    std::copy(tv.begin() + static_cast<std::ptrdiff_t>(ids[i] * d),
              tv.begin() + static_cast<std::ptrdiff_t>((ids[i] + 1) * d),
              ov.begin() + static_cast<std::ptrdiff_t>(i * d));
  return out;
}

namespace {
Tensor cross_entropy_impl(const Tensor& logits, std::vector<std::size_t> rows,
                          std::vector<int> targets) {
  if (logits.shape().size() != 2)
    throw TensorError("cross_entropy: logits are not 2-D");
  if (rows.size() != targets.size())
    throw TensorError("cross_entropy: rows/targets size mismatch");
  const std::size_t v = logits.cols();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= logits.rows())
      throw TensorError("cross_entropy: row index out of range");
    if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= v)
      throw TensorError("cross_entropy: target out of range");
  }
  const std::size_t n = rows.size();
  if (n == 0) return Tensor::scalar(0.0);

  // softmax per selected row, cached for backward
  auto probs = std::make_shared<std::vector<double>>(n * v);
  Tensor out = make_node(
      {1}, {logits}, [logits, rows, targets, probs, n, v](TensorData& self) {
        if (!logits.requires_grad()) return;
        auto& g = const_cast<Tensor&>(logits).grad();
        const double up = self.grad[0] / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
          const double* p = probs->data() + i * v;
          double* gr = g.data() + rows[i] * v;
          for (std::size_t j = 0; j < v; ++j) gr[j] += up * p[j];
          gr[static_cast<std::size_t>(targets[i])] -= up;
        }
      });
  const auto& lv = logits.values();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = lv.data() + rows[i] * v;
    double mx = x[0];
    for (std::size_t j = 1; j < v; ++j) mx = std::max(mx, x[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < v; ++j) z += std::exp(x[j] - mx);
    for (std::size_t j = 0; j < v; ++j)
      (*probs)[i * v + j] = std::exp(x[j] - mx) / z;
    total += mx + std::log(z) - x[static_cast<std::size_t>(targets[i])];
  }
  out.values()[0] = total / static_cast<double>(n);
  return out;
}
}  // namespace

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets) {
  if (logits.shape().size() != 2 || logits.rows() != targets.size())
    throw TensorError("cross_entropy: one target per logits row required");
  std::vector<std::size_t> rows(targets.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return cross_entropy_impl(logits, std::move(rows), targets);
}

Tensor cross_entropy_rows(const Tensor& logits, const std::vector<std::size_t>& rows,
                          const std::vector<int>& targets) {
  return cross_entropy_impl(logits, rows, targets);
}

Tensor cosine_similarity(const Tensor& a, const Tensor& b, double eps) {
  if (a.shape().size() != 1 || a.shape() != b.shape())
    shape_fail("cosine_similarity", a.shape(), b.shape());
  const std::size_t n = a.size();
  const auto& av = a.values();
  const auto& bv = b.values();
  double dot = 0.0, na2 = 0.0, nb2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dot += av[i] * bv[i];
    na2 += av[i] * av[i];
    nb2 += bv[i] * bv[i];
  }
  const double na = std::max(std::sqrt(na2), eps);
  const double nb = std::max(std::sqrt(nb2), eps);
  const double cosv = dot / (na * nb);
  const bool a_live = std::sqrt(na2) > eps;  // norm not clamped
  const bool b_live = std::sqrt(nb2) > eps;

  Tensor out = make_node(
      {1}, {a, b}, [a, b, na, nb, cosv, a_live, b_live, n](TensorData& self) {
        const double up = self.grad[0];
        const auto& av2 = a.values();
        const auto& bv2 = b.values();
        if (a.requires_grad()) {
          auto& g = const_cast<Tensor&>(a).grad();
          for (std::size_t i = 0; i < n; ++i) {
            double d = bv2[i] / (na * nb);
            if (a_live) d -= cosv * av2[i] / (na * na);
            g[i] += up * d;
          }
        }
        if (b.requires_grad()) {
          auto& g = const_cast<Tensor&>(b).grad();
          for (std::size_t i = 0; i < n; ++i) {
            double d = av2[i] / (na * nb);
            if (b_live) d -= cosv * bv2[i] / (nb * nb);
            g[i] += up * d;
          }
        }
      });
  out.values()[0] = cosv;
  return out;
}

Tensor neg_log_softmax_first(const Tensor& v) {
  if (v.shape().size() != 1 || v.size() == 0)
    throw TensorError("neg_log_softmax_first: need a non-empty 1-D tensor");
  const std::size_t n = v.size();
  auto probs = std::make_shared<std::vector<double>>(n);
  Tensor out = make_node({1}, {v}, [v, probs, n](TensorData& self) {
    if (!v.requires_grad()) return;
    auto& g = const_cast<Tensor&>(v).grad();
    const double up = self.grad[0];
    for (std::size_t i = 0; i < n; ++i) g[i] += up * (*probs)[i];
    g[0] -= up;
  });
  const auto& xv = v.values();
  double mx = xv[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, xv[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) z += std::exp(xv[i] - mx);
  for (std::size_t i = 0; i < n; ++i) (*probs)[i] = std::exp(xv[i] - mx) / z;
  out.values()[0] = mx + std::log(z) - xv[0];
  return out;
}

Tensor sum_scalars(const std::vector<Tensor>& xs) {
  if (xs.empty()) return Tensor::scalar(0.0);
  Tensor acc = xs[0];
  for (std::size_t i = 1; i < xs.size(); ++i) acc = add(acc, xs[i]);
  return acc;
}

Tensor mean_scalars(const std::vector<Tensor>& xs) {
  if (xs.empty()) return Tensor::scalar(0.0);
  return scale(sum_scalars(xs), 1.0 / static_cast<double>(xs.size()));
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw TensorError("backward: loss must be a defined size-1 tensor");
  TensorData* root = loss.node();
  if (!root->requires_grad) return;

  // iterative post-order DFS for a topological ordering
  std::vector<TensorData*> order;
  std::unordered_set<TensorData*> visited;
  struct Frame {
    TensorData* node;
    std::size_t next;
  };
  std::vector<Frame> stack{{root, 0}};
  visited.insert(root);
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.node->parents.size()) {
      TensorData* p = f.node->parents[f.next++].node();
      if (p->requires_grad && visited.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  root->ensure_grad()[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorData* n = *it;
    if (n->backward_fn) {
      n->ensure_grad();
      for (const auto& p : n->parents)
        if (p.requires_grad()) const_cast<Tensor&>(p).grad();
      n->backward_fn(*n);
    }
  }
  // single-use tape: release the graph
  for (TensorData* n : order) {
    n->backward_fn = nullptr;
    n->parents.clear();
  }
}

}  // namespace erpt
