// Dense double-precision tensors with reverse-mode automatic
// differentiation on a single-use tape. Shapes are explicit; no
// broadcasting. Enough surface for a small transformer and the
// contrastive losses built on top of it.
#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace erpt {

struct TensorError : std::runtime_error {
  explicit TensorError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {
struct TensorData;
}

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
  static Tensor from(std::vector<std::size_t> shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double v);

  bool defined() const { return d_ != nullptr; }
  const std::vector<std::size_t>& shape() const;
  std::size_t size() const;
  std::size_t rows() const;  // 2-D only
  std::size_t cols() const;  // 2-D only

  std::vector<double>& values();
  const std::vector<double>& values() const;

  // Gradient buffer; allocated (zero-filled) on first access.
  std::vector<double>& grad();
  bool has_grad() const;
  void zero_grad();

  bool requires_grad() const;
  double item() const;  // size-1 tensors only

  detail::TensorData* node() const { return d_.get(); }

 private:
  std::shared_ptr<detail::TensorData> d_;
  friend Tensor make_node(std::vector<std::size_t>, std::vector<Tensor>,
                          std::function<void(detail::TensorData&)>);
  friend void backward(const Tensor&);
};

namespace detail {
struct TensorData {
  std::vector<std::size_t> shape;
  std::vector<double> val;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<Tensor> parents;
  std::function<void(TensorData&)> backward_fn;

  std::size_t size() const { return val.size(); }
  std::vector<double>& ensure_grad() {
    if (grad.empty()) grad.assign(val.size(), 0.0);
    return grad;
  }
};
}  // namespace detail

// --- primitive ops -------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
// x: (m,n), bias: (n); bias added to every row.
Tensor add_bias(const Tensor& x, const Tensor& bias);
Tensor scale(const Tensor& a, double c);
// Concatenate along the last axis; all other dims must agree.
Tensor concat(const std::vector<Tensor>& parts);
// 2-D input; axis 0 gives (cols), axis 1 gives (rows).
Tensor mean_axis(const Tensor& a, int axis);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);
Tensor transpose(const Tensor& a);
Tensor softmax_rows(const Tensor& a);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);
Tensor gelu(const Tensor& a);
Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids);
// Mean cross-entropy over all rows of (n, v) logits.
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets);
// Mean cross-entropy over the selected rows only.
Tensor cross_entropy_rows(const Tensor& logits, const std::vector<std::size_t>& rows,
                          const std::vector<int>& targets);
Tensor cosine_similarity(const Tensor& a, const Tensor& b, double eps = 1e-12);
// v: 1-D scores; returns -log softmax(v)[0], the shared form of the
// contrastive losses (first entry is the positive).
Tensor neg_log_softmax_first(const Tensor& v);

// Sum / mean of scalar tensors, for per-batch loss reduction.
Tensor sum_scalars(const std::vector<Tensor>& xs);
Tensor mean_scalars(const std::vector<Tensor>& xs);

// Reverse-mode sweep from a size-1 tensor. Gradients accumulate into
// the .grad() of every reachable tensor that requires_grad. The tape
// is released afterwards; the graph cannot be replayed.
void backward(const Tensor& loss);

}  // namespace erpt
