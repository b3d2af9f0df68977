#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "latentmath/error.hpp"

namespace latentmath {

// Row-major float32 dense array with optional gradient buffer. Handles share
// storage; the autodiff tape keeps inputs alive through its closures.
struct TensorImpl {
  std::vector<int> shape;
  std::vector<float> data;
  std::vector<float> grad;  // lazily allocated, same size as data
  bool requires_grad = false;
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor full(std::vector<int> shape, float value, bool requires_grad = false);
  static Tensor from_data(std::vector<int> shape, std::vector<float> data,
                          bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<int>& shape() const { return impl_->shape; }
  int dim(int i) const { return impl_->shape[i]; }
  int ndim() const { return static_cast<int>(impl_->shape.size()); }
  std::int64_t numel() const { return static_cast<std::int64_t>(impl_->data.size()); }

  float* data() { return impl_->data.data(); }
  const float* data() const { return impl_->data.data(); }
  std::vector<float>& vec() { return impl_->data; }
  const std::vector<float>& vec() const { return impl_->data; }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool v) { impl_->requires_grad = v; }
  float* grad();          // allocates zeros on first use
  bool has_grad() const { return !impl_->grad.empty(); }
  void zero_grad();
  float item() const;     // scalar tensors only

  std::shared_ptr<TensorImpl> impl() const { return impl_; }

 private:
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
  friend Tensor wrap_impl(std::shared_ptr<TensorImpl>);
  std::shared_ptr<TensorImpl> impl_;
};

// Append-only record of backward closures, topologically ordered by
// construction. One tape per worker thread; RAII activation.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* current();
  void record(const char* op, std::function<void()> backward_fn);
  std::size_t size() const { return nodes_.size(); }

  // runs all closures in reverse order, then clears the tape
  void run_backward_from(std::size_t top);
  void clear();

 private:
  struct Node {
    const char* op;
    std::function<void()> fn;
  };
  std::vector<Node> nodes_;
  Tape* prev_ = nullptr;
};

// Populates gradients of everything the scalar loss depends on; consumes the
// active tape. Throws ShapeError for non-scalar losses, Error(invalid) when
// no tape is active.
void backward(const Tensor& loss);

// --- primitives ---------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float c);
Tensor add_scalar(const Tensor& a, float c);
Tensor recip(const Tensor& a);
Tensor exp_t(const Tensor& a);
Tensor log_t(const Tensor& a);
Tensor sqrt_t(const Tensor& a);
Tensor tanh_t(const Tensor& a);
Tensor sigmoid_t(const Tensor& a);
Tensor relu_t(const Tensor& a);

// 2D matrix product with optional transposes.
Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false, bool trans_b = false);
// batched [G,M,K] x [G,K,N] (or [G,N,K] with trans_b)
Tensor bmm(const Tensor& a, const Tensor& b, bool trans_b = false);

Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& x, int start, int len);
Tensor slice_cols(const Tensor& x, int start, int len);
Tensor reshape(const Tensor& x, std::vector<int> shape);

Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids);

// x: [B,T,C], w: [F,W,C], bias: [F] -> [B,T-W+1,F]; valid padding
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& bias);

// max over the time axis of [B,T,F], ignoring t >= lengths[b]
Tensor max_over_time(const Tensor& x, const std::vector<int>& lengths);
// mean over valid positions of [B,T,D]
Tensor masked_mean_time(const Tensor& x, const std::vector<int>& lengths);

Tensor mean_over_axis(const Tensor& x, int axis);  // 2D
Tensor sum_last(const Tensor& x);                  // [N,K] -> [N]
Tensor sum_all(const Tensor& x);                   // -> scalar [1]

Tensor rows_add(const Tensor& x, const Tensor& v, float alpha = 1.0f);  // x[n,k] + alpha*v[n]
Tensor rows_scale(const Tensor& x, const Tensor& v);                    // x[n,k] * v[n]
Tensor add_bias(const Tensor& x, const Tensor& b);                      // x[n,d] + b[d]

Tensor cosine_rowwise(const Tensor& a, const Tensor& b);  // [N,D] x [N,D] -> [N]

Tensor softmax_last(const Tensor& x);  // max-shifted, over the last axis
Tensor layer_norm_last(const Tensor& x, const Tensor& gain, const Tensor& bias,
                       float eps = 1e-5f);

// constant row-max of [N,K]; used as a detached shift inside log-sum-exp
Tensor max_last_detached(const Tensor& x);

// --- sparse / graph primitives -------------------------------------------------

struct Csr {
  int rows = 0;
  int cols = 0;
  std::vector<int> indptr;   // rows+1
  std::vector<int> indices;
  std::vector<float> values;
};

// adjacency pair with the transpose precomputed for backward
struct CsrPair {
  Csr fwd;
  Csr bwd;
};
CsrPair make_csr_pair(Csr a);

Tensor spmm(const std::shared_ptr<const CsrPair>& a, const Tensor& x);

// mean of row segments [offsets[g], offsets[g+1]) -> [G,D]
Tensor segment_mean(const Tensor& x, const std::vector<int>& offsets);

// --- composites -----------------------------------------------------------------

Tensor normalize_rows(const Tensor& x, float eps = 1e-12f);

// --- optimizer --------------------------------------------------------------------

struct AdamState {
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
  std::int64_t step = 0;
};

// Standard Adam with bias correction; reads each parameter's grad buffer.
void adam_step(std::vector<Tensor>& params, AdamState& state, float lr, float beta1 = 0.9f,
               float beta2 = 0.999f, float eps = 1e-8f);
void zero_grads(std::vector<Tensor>& params);
// returns the pre-clip global norm
float clip_global_norm(std::vector<Tensor>& params, float max_norm);

// --- parallel kernels ----------------------------------------------------------

// worker count for the kernel pool; resolved once from LATENTMATH_WORKERS
int worker_count();
void parallel_for(int begin, int end, const std::function<void(int, int)>& fn);

// C[M,N] (+)= op(A) * op(B); deterministic for any worker count
void gemm(int m, int n, int k, const float* a, bool trans_a, const float* b, bool trans_b,
          float* c, bool accumulate);

}  // namespace latentmath
