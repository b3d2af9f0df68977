#include "latentmath/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <cstring>
#include <mutex>
#include <sstream>
#include <thread>

namespace latentmath {

namespace {

std::string shape_str(const std::vector<int>& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ",";
    os << s[i];
  }
  os << "]";
  return os.str();
}

[[noreturn]] void shape_fail(const char* op, const std::vector<int>& a,
                             const std::vector<int>& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " +
                   shape_str(b));
}

std::int64_t numel_of(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw ShapeError("non-positive dimension in " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::vector<float>& grad_buf(const std::shared_ptr<TensorImpl>& t) {
  if (t->grad.empty()) t->grad.assign(t->data.size(), 0.0f);
  return t->grad;
}

}  // namespace

Tensor wrap_impl(std::shared_ptr<TensorImpl> impl) { return Tensor(std::move(impl)); }

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  auto impl = std::make_shared<TensorImpl>();
  std::int64_t n = numel_of(shape);
  impl->shape = std::move(shape);
  impl->data.assign(static_cast<std::size_t>(n), 0.0f);
  impl->requires_grad = requires_grad;
  return wrap_impl(std::move(impl));
}

Tensor Tensor::full(std::vector<int> shape, float value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::fill(t.vec().begin(), t.vec().end(), value);
  return t;
}

Tensor Tensor::from_data(std::vector<int> shape, std::vector<float> data, bool requires_grad) {
  std::int64_t n = numel_of(shape);
  if (n != static_cast<std::int64_t>(data.size()))
    throw ShapeError("from_data: " + shape_str(shape) + " does not hold " +
                     std::to_string(data.size()) + " values");
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  return wrap_impl(std::move(impl));
}

float* Tensor::grad() { return grad_buf(impl_).data(); }

void Tensor::zero_grad() {
  if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0f);
}

float Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on non-scalar tensor " + shape_str(shape()));
  return impl_->data[0];
}

// --- tape -------------------------------------------------------------------------

namespace {
thread_local Tape* g_current_tape = nullptr;
}

Tape::Tape() {
  prev_ = g_current_tape;
  g_current_tape = this;
}

Tape::~Tape() { g_current_tape = prev_; }

Tape* Tape::current() { return g_current_tape; }

void Tape::record(const char* op, std::function<void()> backward_fn) {
  nodes_.push_back({op, std::move(backward_fn)});
}

void Tape::run_backward_from(std::size_t top) {
  for (std::size_t i = top; i-- > 0;) nodes_[i].fn();
}

void Tape::clear() { nodes_.clear(); }

void backward(const Tensor& loss) {
  if (loss.numel() != 1) throw ShapeError("backward: loss is not scalar");
  Tape* tape = Tape::current();
  if (!tape) throw Error(ErrorCode::invalid_argument, "backward: no active tape");
  if (!loss.requires_grad())
    throw Error(ErrorCode::invalid_argument, "backward: loss was not recorded on the tape");
  grad_buf(loss.impl())[0] += 1.0f;
  tape->run_backward_from(tape->size());
  tape->clear();
}

// --- worker pool -------------------------------------------------------------------

namespace {

// Spin-then-sleep pool: kernel launches come in tight bursts during training,
// so workers spin briefly on the job generation before falling back to a
// condition variable.
class Pool {
 public:
  static Pool& instance() {
    static Pool pool;
    return pool;
  }

  int workers() const { return workers_; }

  void run(int begin, int end, const std::function<void(int, int)>& fn) {
    int span = end - begin;
    if (span <= 0) return;
    if (workers_ <= 1 || span == 1 || inside_worker_) {
      fn(begin, end);
      return;
    }
    int parts = std::min(workers_, span);
    auto job = std::make_shared<Job>();
    job->fn = &fn;
    job->begin = begin;
    job->end = end;
    job->parts = parts;
    job->next_part.store(1, std::memory_order_relaxed);
    job->remaining.store(parts - 1, std::memory_order_relaxed);
    // at most one job is live: the previous run() returned only after its
    // remaining hit zero, so stale workers can only fail the part claim
    std::atomic_store_explicit(&job_, job, std::memory_order_release);
    {
      std::lock_guard lock(m_);  // pairs with the sleep path, no lost wakeups
      generation_.fetch_add(1, std::memory_order_release);
    }
    cv_.notify_all();

    run_part(0, begin, end, parts, fn);

    // help with unclaimed parts; progress never depends on a worker waking
    while (true) {
      int part = job->next_part.fetch_add(1, std::memory_order_relaxed);
      if (part >= parts) break;
      run_part(part, begin, end, parts, fn);
      job->remaining.fetch_sub(1, std::memory_order_release);
    }
    while (job->remaining.load(std::memory_order_acquire) != 0) cpu_pause();
  }

 private:
  Pool() {
    workers_ = 0;
    if (const char* env = std::getenv("LATENTMATH_WORKERS")) workers_ = std::atoi(env);
    if (workers_ <= 0) workers_ = static_cast<int>(std::thread::hardware_concurrency());
    workers_ = std::max(1, std::min(workers_, 16));
    for (int i = 1; i < workers_; ++i) threads_.emplace_back([this] { worker_loop(); });
  }

  ~Pool() {
    stop_.store(true, std::memory_order_release);
    generation_.fetch_add(1, std::memory_order_release);
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  static void cpu_pause() {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_ia32_pause();
#else
    std::this_thread::yield();
#endif
  }

  static void run_part(int part, int begin, int end, int parts,
                       const std::function<void(int, int)>& fn) {
    int span = end - begin;
    int lo = begin + static_cast<int>(static_cast<std::int64_t>(span) * part / parts);
    int hi = begin + static_cast<int>(static_cast<std::int64_t>(span) * (part + 1) / parts);
    if (lo < hi) fn(lo, hi);
  }

  void worker_loop() {
    inside_worker_ = true;
    std::uint64_t seen = generation_.load(std::memory_order_acquire);
    while (true) {
      // spin briefly, then sleep until the next job generation
      int spins = 0;
      while (generation_.load(std::memory_order_acquire) == seen) {
        if (++spins > 20000) {
          std::unique_lock lock(m_);
          cv_.wait(lock, [&] {
            return generation_.load(std::memory_order_acquire) != seen ||
                   stop_.load(std::memory_order_acquire);
          });
          break;
        }
        cpu_pause();
      }
      if (stop_.load(std::memory_order_acquire)) return;
      seen = generation_.load(std::memory_order_acquire);
      auto job = std::atomic_load_explicit(&job_, std::memory_order_acquire);
      if (!job) continue;
      while (true) {
        int part = job->next_part.fetch_add(1, std::memory_order_relaxed);
        if (part >= job->parts) break;
        run_part(part, job->begin, job->end, job->parts, *job->fn);
        job->remaining.fetch_sub(1, std::memory_order_release);
      }
    }
  }

  struct Job {
    const std::function<void(int, int)>* fn = nullptr;
    int begin = 0, end = 0, parts = 0;
    std::atomic<int> next_part{0};
    std::atomic<int> remaining{0};
  };

  static thread_local bool inside_worker_;
  int workers_ = 1;
  std::vector<std::thread> threads_;
  std::mutex m_;
  std::condition_variable cv_;
  std::shared_ptr<Job> job_;
  std::atomic<std::uint64_t> generation_{0};
  std::atomic<bool> stop_{false};
};

thread_local bool Pool::inside_worker_ = false;

}  // namespace

int worker_count() { return Pool::instance().workers(); }

void parallel_for(int begin, int end, const std::function<void(int, int)>& fn) {
  Pool::instance().run(begin, end, fn);
}

// --- gemm -------------------------------------------------------------------------

void gemm(int m, int n, int k, const float* a, bool trans_a, const float* b, bool trans_b,
          float* c, bool accumulate) {
  // bring B to row-major [k,n]
  std::vector<float> bt;
  const float* bp = b;
  if (trans_b) {
    bt.resize(static_cast<std::size_t>(k) * n);
    for (int j = 0; j < n; ++j)
      for (int kk = 0; kk < k; ++kk) bt[static_cast<std::size_t>(kk) * n + j] = b[static_cast<std::size_t>(j) * k + kk];
    bp = bt.data();
  }
  auto body = [&](int i0, int i1) {
    for (int i = i0; i < i1; ++i) {
      float* crow = c + static_cast<std::size_t>(i) * n;
      if (!accumulate) std::memset(crow, 0, sizeof(float) * n);
      for (int kk = 0; kk < k; ++kk) {
        float aik = trans_a ? a[static_cast<std::size_t>(kk) * m + i]
                            : a[static_cast<std::size_t>(i) * k + kk];
        const float* brow = bp + static_cast<std::size_t>(kk) * n;
        for (int j = 0; j < n; ++j) crow[j] += aik * brow[j];
      }
    }
  };
  if (static_cast<std::int64_t>(m) * n * k >= 65536)
    parallel_for(0, m, body);
  else
    body(0, m);
}

// --- op plumbing --------------------------------------------------------------------

namespace {

bool tape_on(std::initializer_list<const Tensor*> ins) {
  if (!Tape::current()) return false;
  for (const Tensor* t : ins)
    if ((*t).requires_grad()) return true;
  return false;
}

Tensor out_like(std::vector<int> shape, bool requires_grad) {
  return Tensor::zeros(std::move(shape), requires_grad);
}

// adds src into dst grad if dst participates in autodiff
void accumulate_grad(const std::shared_ptr<TensorImpl>& t, const float* src, std::size_t n) {
  if (!t->requires_grad) return;
  auto& g = grad_buf(t);
  for (std::size_t i = 0; i < n; ++i) g[i] += src[i];
}

}  // namespace

// --- elementwise -----------------------------------------------------------------

namespace {

template <typename Fwd, typename Bwd>
Tensor binary_same_shape(const char* name, const Tensor& a, const Tensor& b, Fwd fwd, Bwd bwd) {
  if (a.shape() != b.shape()) shape_fail(name, a.shape(), b.shape());
  bool rg = tape_on({&a, &b});
  Tensor out = out_like(a.shape(), rg);
  const std::size_t n = a.vec().size();
  for (std::size_t i = 0; i < n; ++i) out.vec()[i] = fwd(a.vec()[i], b.vec()[i]);
  if (rg) {
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    Tape::current()->record(name, [ai, bi, oi, bwd, n] {
      if (oi->grad.empty()) return;
      for (std::size_t i = 0; i < n; ++i) {
        float ga, gb;
        bwd(oi->grad[i], ai->data[i], bi->data[i], oi->data[i], &ga, &gb);
        if (ai->requires_grad) grad_buf(ai)[i] += ga;
        if (bi->requires_grad) grad_buf(bi)[i] += gb;
      }
    });
  }
  return out;
}

template <typename Fwd, typename Bwd>
Tensor unary(const char* name, const Tensor& a, Fwd fwd, Bwd bwd) {
  bool rg = tape_on({&a});
  Tensor out = out_like(a.shape(), rg);
  const std::size_t n = a.vec().size();
  for (std::size_t i = 0; i < n; ++i) out.vec()[i] = fwd(a.vec()[i]);
  if (rg) {
    auto ai = a.impl(), oi = out.impl();
    Tape::current()->record(name, [ai, oi, bwd, n] {
      if (oi->grad.empty() || !ai->requires_grad) return;
      auto& g = grad_buf(ai);
      for (std::size_t i = 0; i < n; ++i) g[i] += bwd(oi->grad[i], ai->data[i], oi->data[i]);
    });
  }
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_same_shape(
      "add", a, b, [](float x, float y) { return x + y; },
      [](float g, float, float, float, float* ga, float* gb) {
        *ga = g;
        *gb = g;
      });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_same_shape(
      "sub", a, b, [](float x, float y) { return x - y; },
      [](float g, float, float, float, float* ga, float* gb) {
        *ga = g;
        *gb = -g;
      });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_same_shape(
      "mul", a, b, [](float x, float y) { return x * y; },
      [](float g, float x, float y, float, float* ga, float* gb) {
        *ga = g * y;
        *gb = g * x;
      });
}

Tensor scale(const Tensor& a, float c) {
  return unary(
      "scale", a, [c](float x) { return x * c; },
      [c](float g, float, float) { return g * c; });
}

Tensor add_scalar(const Tensor& a, float c) {
  return unary(
      "add_scalar", a, [c](float x) { return x + c; },
      [](float g, float, float) { return g; });
}

Tensor recip(const Tensor& a) {
  return unary(
      "recip", a, [](float x) { return 1.0f / x; },
      [](float g, float, float y) { return -g * y * y; });
}

Tensor exp_t(const Tensor& a) {
  return unary(
      "exp", a, [](float x) { return std::exp(x); },
      [](float g, float, float y) { return g * y; });
}

Tensor log_t(const Tensor& a) {
  return unary(
      "log", a, [](float x) { return std::log(std::max(x, 1e-30f)); },
      [](float g, float x, float) { return g / std::max(x, 1e-30f); });
}

Tensor sqrt_t(const Tensor& a) {
  return unary(
      "sqrt", a, [](float x) { return std::sqrt(x); },
      [](float g, float, float y) { return 0.5f * g / std::max(y, 1e-20f); });
}

Tensor tanh_t(const Tensor& a) {
  return unary(
      "tanh", a, [](float x) { return std::tanh(x); },
      [](float g, float, float y) { return g * (1.0f - y * y); });
}

Tensor sigmoid_t(const Tensor& a) {
  return unary(
      "sigmoid", a, [](float x) { return 1.0f / (1.0f + std::exp(-x)); },
      [](float g, float, float y) { return g * y * (1.0f - y); });
}

Tensor relu_t(const Tensor& a) {
  return unary(
      "relu", a, [](float x) { return x > 0.0f ? x : 0.0f; },
      [](float g, float x, float) { return x > 0.0f ? g : 0.0f; });
}

// --- matmul ------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
  if (a.ndim() != 2 || b.ndim() != 2) shape_fail("matmul", a.shape(), b.shape());
  int m = trans_a ? a.dim(1) : a.dim(0);
  int k = trans_a ? a.dim(0) : a.dim(1);
  int kb = trans_b ? b.dim(1) : b.dim(0);
  int n = trans_b ? b.dim(0) : b.dim(1);
  if (k != kb) shape_fail("matmul", a.shape(), b.shape());

  bool rg = tape_on({&a, &b});
  Tensor out = out_like({m, n}, rg);
  gemm(m, n, k, a.data(), trans_a, b.data(), trans_b, out.data(), false);

  if (rg) {
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    Tape::current()->record("matmul", [ai, bi, oi, m, n, k, trans_a, trans_b] {
      if (oi->grad.empty()) return;
      const float* g = oi->grad.data();
      if (ai->requires_grad) {
        float* da = grad_buf(ai).data();
        if (!trans_a && !trans_b) gemm(m, k, n, g, false, bi->data.data(), true, da, true);
        else if (!trans_a && trans_b) gemm(m, k, n, g, false, bi->data.data(), false, da, true);
        else if (trans_a && !trans_b) gemm(k, m, n, bi->data.data(), false, g, true, da, true);
        else gemm(k, m, n, bi->data.data(), true, g, true, da, true);
      }
      if (bi->requires_grad) {
        float* db = grad_buf(bi).data();
        if (!trans_a && !trans_b) gemm(k, n, m, ai->data.data(), true, g, false, db, true);
        else if (!trans_a && trans_b) gemm(n, k, m, g, true, ai->data.data(), false, db, true);
        else if (trans_a && !trans_b) gemm(k, n, m, ai->data.data(), false, g, false, db, true);
        else gemm(n, k, m, g, true, ai->data.data(), true, db, true);
      }
    });
  }
  return out;
}

Tensor bmm(const Tensor& a, const Tensor& b, bool trans_b) {
  if (a.ndim() != 3 || b.ndim() != 3 || a.dim(0) != b.dim(0))
    shape_fail("bmm", a.shape(), b.shape());
  int groups = a.dim(0), m = a.dim(1), k = a.dim(2);
  int kb = trans_b ? b.dim(2) : b.dim(1);
  int n = trans_b ? b.dim(1) : b.dim(2);
  if (k != kb) shape_fail("bmm", a.shape(), b.shape());

  bool rg = tape_on({&a, &b});
  Tensor out = out_like({groups, m, n}, rg);
  for (int gidx = 0; gidx < groups; ++gidx)
    gemm(m, n, k, a.data() + (std::size_t)gidx * m * k, false,
         b.data() + (std::size_t)gidx * kb * (trans_b ? k : n), trans_b,
         out.data() + (std::size_t)gidx * m * n, false);

  if (rg) {
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    Tape::current()->record("bmm", [ai, bi, oi, groups, m, n, k, trans_b] {
      if (oi->grad.empty()) return;
      for (int gidx = 0; gidx < groups; ++gidx) {
        const float* g = oi->grad.data() + (std::size_t)gidx * m * n;
        const float* apart = ai->data.data() + (std::size_t)gidx * m * k;
        const float* bpart = bi->data.data() + (std::size_t)gidx * (trans_b ? n * k : k * n);
        if (ai->requires_grad) {
          float* da = grad_buf(ai).data() + (std::size_t)gidx * m * k;
          gemm(m, k, n, g, false, bpart, !trans_b, da, true);
        }
        if (bi->requires_grad) {
          float* db = grad_buf(bi).data() + (std::size_t)gidx * (trans_b ? n * k : k * n);
          if (!trans_b) gemm(k, n, m, apart, true, g, false, db, true);
          else gemm(n, k, m, g, true, apart, false, db, true);
        }
      }
    });
  }
  return out;
}

// --- layout ops -----------------------------------------------------------------------

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: empty input");
  int cols = parts[0].dim(1);
  int rows = 0;
  bool rg = false;
  for (const auto& p : parts) {
    if (p.ndim() != 2 || p.dim(1) != cols) shape_fail("concat_rows", parts[0].shape(), p.shape());
    rows += p.dim(0);
    rg = rg || p.requires_grad();
  }
  rg = rg && Tape::current();
  Tensor out = out_like({rows, cols}, rg);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    std::memcpy(out.data() + offset, p.data(), p.vec().size() * sizeof(float));
    offset += p.vec().size();
  }
  if (rg) {
    std::vector<std::shared_ptr<TensorImpl>> impls;
    for (const auto& p : parts) impls.push_back(p.impl());
    auto oi = out.impl();
    Tape::current()->record("concat_rows", [impls, oi] {
      if (oi->grad.empty()) return;
      std::size_t offset = 0;
      for (const auto& p : impls) {
        accumulate_grad(p, oi->grad.data() + offset, p->data.size());
        offset += p->data.size();
      }
    });
  }
  return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: empty input");
  int rows = parts[0].dim(0);
  int cols = 0;
  bool rg = false;
  for (const auto& p : parts) {
    if (p.ndim() != 2 || p.dim(0) != rows) shape_fail("concat_cols", parts[0].shape(), p.shape());
    cols += p.dim(1);
    rg = rg || p.requires_grad();
  }
  rg = rg && Tape::current();
  Tensor out = out_like({rows, cols}, rg);
  int col0 = 0;
  for (const auto& p : parts) {
    int pc = p.dim(1);
    for (int r = 0; r < rows; ++r)
      std::memcpy(out.data() + (std::size_t)r * cols + col0, p.data() + (std::size_t)r * pc,
                  pc * sizeof(float));
    col0 += pc;
  }
  if (rg) {
    std::vector<std::shared_ptr<TensorImpl>> impls;
    for (const auto& p : parts) impls.push_back(p.impl());
    auto oi = out.impl();
    Tape::current()->record("concat_cols", [impls, oi, rows, cols] {
      if (oi->grad.empty()) return;
      int col0 = 0;
      for (const auto& p : impls) {
        int pc = static_cast<int>(p->data.size()) / rows;
        if (p->requires_grad) {
          auto& g = grad_buf(p);
          for (int r = 0; r < rows; ++r)
            for (int c = 0; c < pc; ++c)
              g[(std::size_t)r * pc + c] += oi->grad[(std::size_t)r * cols + col0 + c];
        }
        col0 += pc;
      }
    });
  }
  return out;
}

Tensor slice_rows(const Tensor& x, int start, int len) {
  if (x.ndim() != 2 || start < 0 || len <= 0 || start + len > x.dim(0))
    throw ShapeError("slice_rows: bad range [" + std::to_string(start) + "," +
                     std::to_string(start + len) + ") for " + shape_str(x.shape()));
  int cols = x.dim(1);
  bool rg = tape_on({&x});
  Tensor out = out_like({len, cols}, rg);
  std::memcpy(out.data(), x.data() + (std::size_t)start * cols,
              (std::size_t)len * cols * sizeof(float));
  if (rg) {
    auto xi = x.impl(), oi = out.impl();
    Tape::current()->record("slice_rows", [xi, oi, start, len, cols] {
      if (oi->grad.empty() || !xi->requires_grad) return;
      auto& g = grad_buf(xi);
      for (std::size_t i = 0; i < (std::size_t)len * cols; ++i)
        g[(std::size_t)start * cols + i] += oi->grad[i];
    });
  }
  return out;
}

Tensor slice_cols(const Tensor& x, int start, int len) {
  if (x.ndim() != 2 || start < 0 || len <= 0 || start + len > x.dim(1))
    throw ShapeError("slice_cols: bad range for " + shape_str(x.shape()));
  int rows = x.dim(0), cols = x.dim(1);
  bool rg = tape_on({&x});
  Tensor out = out_like({rows, len}, rg);
  for (int r = 0; r < rows; ++r)
    std::memcpy(out.data() + (std::size_t)r * len, x.data() + (std::size_t)r * cols + start,
                len * sizeof(float));
  if (rg) {
    auto xi = x.impl(), oi = out.impl();
    Tape::current()->record("slice_cols", [xi, oi, rows, cols, start, len] {
      if (oi->grad.empty() || !xi->requires_grad) return;
      auto& g = grad_buf(xi);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < len; ++c)
          g[(std::size_t)r * cols + start + c] += oi->grad[(std::size_t)r * len + c];
    });
  }
  return out;
}

Tensor reshape(const Tensor& x, std::vector<int> shape) {
  if (numel_of(shape) != x.numel()) shape_fail("reshape", x.shape(), shape);
  bool rg = tape_on({&x});
  Tensor out = Tensor::from_data(std::move(shape), x.vec(), rg);
  if (rg) {
    auto xi = x.impl(), oi = out.impl();
    Tape::current()->record("reshape", [xi, oi] {
      if (oi->grad.empty()) return;
      accumulate_grad(xi, oi->grad.data(), oi->grad.size());
    });
  }
  return out;
}

Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids) {
  if (table.ndim() != 2) throw ShapeError("embedding_lookup: table must be 2D");
  int vocab = table.dim(0), dim = table.dim(1);
  for (int id : ids)
    if (id < 0 || id >= vocab)
      throw ShapeError("embedding_lookup: id " + std::to_string(id) + " outside table of " +
                       std::to_string(vocab));
  bool rg = tape_on({&table});
  Tensor out = out_like({static_cast<int>(ids.size()), dim}, rg);
  for (std::size_t i = 0; i < ids.size(); ++i)
    std::memcpy(out.data() + i * dim, table.data() + (std::size_t)ids[i] * dim,
                dim * sizeof(float));
  if (rg) {
    auto ti = table.impl(), oi = out.impl();
    Tape::current()->record("embedding_lookup", [ti, oi, ids, dim] {
      if (oi->grad.empty() || !ti->requires_grad) return;
      auto& g = grad_buf(ti);
      for (std::size_t i = 0; i < ids.size(); ++i)
        for (int d = 0; d < dim; ++d)
          g[(std::size_t)ids[i] * dim + d] += oi->grad[i * dim + d];
    });
  }
  return out;
}

// --- conv / pooling -------------------------------------------------------------------

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& bias) {
  if (x.ndim() != 3 || w.ndim() != 3 || x.dim(2) != w.dim(2))
    shape_fail("conv1d", x.shape(), w.shape());
  int batch = x.dim(0), time = x.dim(1), chans = x.dim(2);
  int filters = w.dim(0), width = w.dim(1);
  if (bias.ndim() != 1 || bias.dim(0) != filters) shape_fail("conv1d", w.shape(), bias.shape());
  if (time < width)
    throw ShapeError("conv1d: sequence length " + std::to_string(time) +
                     " shorter than filter width " + std::to_string(width));
  int out_time = time - width + 1;
  int patch = width * chans;
  int m = batch * out_time;

  auto col = std::make_shared<std::vector<float>>((std::size_t)m * patch);
  for (int b = 0; b < batch; ++b)
    for (int t = 0; t < out_time; ++t)
      std::memcpy(col->data() + ((std::size_t)(b * out_time + t)) * patch,
                  x.data() + ((std::size_t)(b * time + t)) * chans, patch * sizeof(float));

  bool rg = tape_on({&x, &w, &bias});
  Tensor out = out_like({batch, out_time, filters}, rg);
  gemm(m, filters, patch, col->data(), false, w.data(), true, out.data(), false);
  for (int r = 0; r < m; ++r)
    for (int f = 0; f < filters; ++f) out.data()[(std::size_t)r * filters + f] += bias.data()[f];

  if (rg) {
    auto xi = x.impl(), wi = w.impl(), bi = bias.impl(), oi = out.impl();
    Tape::current()->record("conv1d", [xi, wi, bi, oi, col, batch, time, chans, filters, width,
                                       out_time, patch, m] {
      if (oi->grad.empty()) return;
      const float* g = oi->grad.data();
      if (bi->requires_grad) {
        auto& gb = grad_buf(bi);
        for (int r = 0; r < m; ++r)
          for (int f = 0; f < filters; ++f) gb[f] += g[(std::size_t)r * filters + f];
      }
      if (wi->requires_grad)
        gemm(filters, patch, m, g, true, col->data(), false, grad_buf(wi).data(), true);
      if (xi->requires_grad) {
        std::vector<float> dcol((std::size_t)m * patch);
        gemm(m, patch, filters, g, false, wi->data.data(), false, dcol.data(), false);
        auto& gx = grad_buf(xi);
        for (int b = 0; b < batch; ++b)
          for (int t = 0; t < out_time; ++t) {
            const float* src = dcol.data() + ((std::size_t)(b * out_time + t)) * patch;
            float* dst = gx.data() + ((std::size_t)(b * time + t)) * chans;
            for (int i = 0; i < patch; ++i) dst[i] += src[i];
          }
      }
    });
  }
  return out;
}

Tensor max_over_time(const Tensor& x, const std::vector<int>& lengths) {
  if (x.ndim() != 3 || static_cast<int>(lengths.size()) != x.dim(0))
    throw ShapeError("max_over_time: lengths do not match batch of " + shape_str(x.shape()));
  int batch = x.dim(0), time = x.dim(1), feats = x.dim(2);
  bool rg = tape_on({&x});
  Tensor out = out_like({batch, feats}, rg);
  auto argmax = std::make_shared<std::vector<int>>((std::size_t)batch * feats);
  for (int b = 0; b < batch; ++b) {
    int len = std::min(std::max(lengths[b], 1), time);
    for (int f = 0; f < feats; ++f) {
      float best = x.data()[((std::size_t)b * time) * feats + f];
      int arg = 0;
      for (int t = 1; t < len; ++t) {
        float v = x.data()[((std::size_t)b * time + t) * feats + f];
        if (v > best) {
          best = v;
          arg = t;
        }
      }
      out.data()[(std::size_t)b * feats + f] = best;
      (*argmax)[(std::size_t)b * feats + f] = arg;
    }
  }
  if (rg) {
    auto xi = x.impl(), oi = out.impl();
    Tape::current()->record("max_over_time", [xi, oi, argmax, batch, time, feats] {
      if (oi->grad.empty() || !xi->requires_grad) return;
      auto& g = grad_buf(xi);
      for (int b = 0; b < batch; ++b)
        for (int f = 0; f < feats; ++f) {
          int t = (*argmax)[(std::size_t)b * feats + f];
          g[((std::size_t)b * time + t) * feats + f] += oi->grad[(std::size_t)b * feats + f];
        }
    });
  }
  return out;
}

Tensor masked_mean_time(const Tensor& x, const std::vector<int>& lengths) {
  if (x.ndim() != 3 || static_cast<int>(lengths.size()) != x.dim(0))
    throw ShapeError("masked_mean_time: lengths do not match batch of " + shape_str(x.shape()));
  int batch = x.dim(0), time = x.dim(1), dim = x.dim(2);
  bool rg = tape_on({&x});
  Tensor out = out_like({batch, dim}, rg);
  for (int b = 0; b < batch; ++b) {
    int len = std::min(std::max(lengths[b], 1), time);
    for (int t = 0; t < len; ++t)
      for (int d = 0; d < dim; ++d)
        out.data()[(std::size_t)b * dim + d] += x.data()[((std::size_t)b * time + t) * dim + d];
    for (int d = 0; d < dim; ++d) out.data()[(std::size_t)b * dim + d] /= (float)len;
  }
  if (rg) {
    auto xi = x.impl(), oi = out.impl();
    Tape::current()->record("masked_mean_time", [xi, oi, lengths, batch, time, dim] {
      if (oi->grad.empty() || !xi->requires_grad) return;
      auto& g = grad_buf(xi);
      for (int b = 0; b < batch; ++b) {
        int len = std::min(std::max(lengths[b], 1), time);
        for (int t = 0; t < len; ++t)
          for (int d = 0; d < dim; ++d)
            g[((std::size_t)b * time + t) * dim + d] +=
                oi->grad[(std::size_t)b * dim + d] / (float)len;
      }
    });
  }
  return out;
}

// --- reductions -----------------------------------------------------------------------

Tensor mean_over_axis(const Tensor& x, int axis) {
  if (x.ndim() != 2 || (axis != 0 && axis != 1)) throw ShapeError("mean_over_axis: need 2D");
  int rows = x.dim(0), cols = x.dim(1);
  bool rg = tape_on({&x});
  Tensor out = out_like({axis == 0 ? cols : rows}, rg);
  if (axis == 0) {
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) out.data()[c] += x.data()[(std::size_t)r * cols + c];
    for (int c = 0; c < cols; ++c) out.data()[c] /= (float)rows;
  } else {
    for (int r = 0; r < rows; ++r) {
      float s = 0;
      for (int c = 0; c < cols; ++c) s += x.data()[(std::size_t)r * cols + c];
      out.data()[r] = s / (float)cols;
    }
  }
  if (rg) {
    auto xi = x.impl(), oi = out.impl();
    Tape::current()->record("mean_over_axis", [xi, oi, rows, cols, axis] {
      if (oi->grad.empty() || !xi->requires_grad) return;
      auto& g = grad_buf(xi);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
          g[(std::size_t)r * cols + c] +=
              axis == 0 ? oi->grad[c] / (float)rows : oi->grad[r] / (float)cols;
    });
  }
  return out;
}

Tensor sum_last(const Tensor& x) {
  if (x.ndim() < 2) throw ShapeError("sum_last: need at least 2D");
  int cols = x.dim(x.ndim() - 1);
  int rows = static_cast<int>(x.numel() / cols);
  std::vector<int> oshape(x.shape().begin(), x.shape().end() - 1);
  bool rg = tape_on({&x});
  Tensor out = out_like(oshape, rg);
  for (int r = 0; r < rows; ++r) {
    float s = 0;
    for (int c = 0; c < cols; ++c) s += x.data()[(std::size_t)r * cols + c];
    out.data()[r] = s;
  }
  if (rg) {
    auto xi = x.impl(), oi = out.impl();
    Tape::current()->record("sum_last", [xi, oi, rows, cols] {
      if (oi->grad.empty() || !xi->requires_grad) return;
      auto& g = grad_buf(xi);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) g[(std::size_t)r * cols + c] += oi->grad[r];
    });
  }
  return out;
}

Tensor sum_all(const Tensor& x) {
  bool rg = tape_on({&x});
  Tensor out = out_like({1}, rg);
  float s = 0;
  for (float v : x.vec()) s += v;
  out.data()[0] = s;
  if (rg) {
    auto xi = x.impl(), oi = out.impl();
    Tape::current()->record("sum_all", [xi, oi] {
      if (oi->grad.empty() || !xi->requires_grad) return;
      auto& g = grad_buf(xi);
      for (auto& v : g) v += oi->grad[0];
    });
  }
  return out;
}

// --- row/bias ops -----------------------------------------------------------------------

Tensor rows_add(const Tensor& x, const Tensor& v, float alpha) {
  if (x.ndim() != 2 || v.ndim() != 1 || v.dim(0) != x.dim(0)) shape_fail("rows_add", x.shape(), v.shape());
  int rows = x.dim(0), cols = x.dim(1);
  bool rg = tape_on({&x, &v});
  Tensor out = out_like({rows, cols}, rg);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      out.data()[(std::size_t)r * cols + c] = x.data()[(std::size_t)r * cols + c] + alpha * v.data()[r];
  if (rg) {
    auto xi = x.impl(), vi = v.impl(), oi = out.impl();
    Tape::current()->record("rows_add", [xi, vi, oi, rows, cols, alpha] {
      if (oi->grad.empty()) return;
      if (xi->requires_grad) accumulate_grad(xi, oi->grad.data(), oi->grad.size());
      if (vi->requires_grad) {
        auto& g = grad_buf(vi);
        for (int r = 0; r < rows; ++r) {
          float s = 0;
          for (int c = 0; c < cols; ++c) s += oi->grad[(std::size_t)r * cols + c];
          g[r] += alpha * s;
        }
      }
    });
  }
  return out;
}

Tensor rows_scale(const Tensor& x, const Tensor& v) {
  if (x.ndim() != 2 || v.ndim() != 1 || v.dim(0) != x.dim(0)) shape_fail("rows_scale", x.shape(), v.shape());
  int rows = x.dim(0), cols = x.dim(1);
  bool rg = tape_on({&x, &v});
  Tensor out = out_like({rows, cols}, rg);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      out.data()[(std::size_t)r * cols + c] = x.data()[(std::size_t)r * cols + c] * v.data()[r];
  if (rg) {
    auto xi = x.impl(), vi = v.impl(), oi = out.impl();
    Tape::current()->record("rows_scale", [xi, vi, oi, rows, cols] {
      if (oi->grad.empty()) return;
      if (xi->requires_grad) {
        auto& g = grad_buf(xi);
        for (int r = 0; r < rows; ++r)
          for (int c = 0; c < cols; ++c)
            g[(std::size_t)r * cols + c] += oi->grad[(std::size_t)r * cols + c] * vi->data[r];
      }
      if (vi->requires_grad) {
        auto& g = grad_buf(vi);
        for (int r = 0; r < rows; ++r) {
          float s = 0;
          for (int c = 0; c < cols; ++c)
            s += oi->grad[(std::size_t)r * cols + c] * xi->data[(std::size_t)r * cols + c];
          g[r] += s;
        }
      }
    });
  }
  return out;
}

Tensor add_bias(const Tensor& x, const Tensor& b) {
  if (x.ndim() != 2 || b.ndim() != 1 || b.dim(0) != x.dim(1)) shape_fail("add_bias", x.shape(), b.shape());
  int rows = x.dim(0), cols = x.dim(1);
  bool rg = tape_on({&x, &b});
  Tensor out = out_like({rows, cols}, rg);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      out.data()[(std::size_t)r * cols + c] = x.data()[(std::size_t)r * cols + c] + b.data()[c];
  if (rg) {
    auto xi = x.impl(), bi = b.impl(), oi = out.impl();
    Tape::current()->record("add_bias", [xi, bi, oi, rows, cols] {
      if (oi->grad.empty()) return;
      if (xi->requires_grad) accumulate_grad(xi, oi->grad.data(), oi->grad.size());
      if (bi->requires_grad) {
        auto& g = grad_buf(bi);
        for (int r = 0; r < rows; ++r)
          for (int c = 0; c < cols; ++c) g[c] += oi->grad[(std::size_t)r * cols + c];
      }
    });
  }
  return out;
}

// --- similarity ------------------------------------------------------------------------

Tensor cosine_rowwise(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || a.shape() != b.shape()) shape_fail("cosine_rowwise", a.shape(), b.shape());
  int rows = a.dim(0), dim = a.dim(1);
  constexpr float kEps = 1e-12f;
  bool rg = tape_on({&a, &b});
  Tensor out = out_like({rows}, rg);
  auto saved = std::make_shared<std::vector<float>>((std::size_t)rows * 3);  // na, nb, dot
  for (int r = 0; r < rows; ++r) {
    const float* ar = a.data() + (std::size_t)r * dim;
    const float* br = b.data() + (std::size_t)r * dim;
    float dot = 0, na = 0, nb = 0;
    for (int d = 0; d < dim; ++d) {
      dot += ar[d] * br[d];
      na += ar[d] * ar[d];
      nb += br[d] * br[d];
    }
    na = std::sqrt(na) + kEps;
    nb = std::sqrt(nb) + kEps;
    (*saved)[r * 3 + 0] = na;
    (*saved)[r * 3 + 1] = nb;
    (*saved)[r * 3 + 2] = dot;
    out.data()[r] = dot / (na * nb);
  }
  if (rg) {
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    Tape::current()->record("cosine_rowwise", [ai, bi, oi, saved, rows, dim] {
      if (oi->grad.empty()) return;
      for (int r = 0; r < rows; ++r) {
        float g = oi->grad[r];
        if (g == 0.0f) continue;
        float na = (*saved)[r * 3 + 0], nb = (*saved)[r * 3 + 1], dot = (*saved)[r * 3 + 2];
        float c = dot / (na * nb);
        const float* ar = ai->data.data() + (std::size_t)r * dim;
        const float* br = bi->data.data() + (std::size_t)r * dim;
        if (ai->requires_grad) {
          float* ga = grad_buf(ai).data() + (std::size_t)r * dim;
          for (int d = 0; d < dim; ++d) ga[d] += g * (br[d] / (na * nb) - c * ar[d] / (na * na));
        }
        if (bi->requires_grad) {
          float* gb = grad_buf(bi).data() + (std::size_t)r * dim;
          for (int d = 0; d < dim; ++d) gb[d] += g * (ar[d] / (na * nb) - c * br[d] / (nb * nb));
        }
      }
    });
  }
  return out;
}

// --- normalization ------------------------------------------------------------------------

Tensor softmax_last(const Tensor& x) {
  if (x.ndim() < 1) throw ShapeError("softmax_last: rank 0");
  int cols = x.dim(x.ndim() - 1);
  int rows = static_cast<int>(x.numel() / cols);
  bool rg = tape_on({&x});
  Tensor out = out_like(x.shape(), rg);
  for (int r = 0; r < rows; ++r) {
    const float* xr = x.data() + (std::size_t)r * cols;
    float* yr = out.data() + (std::size_t)r * cols;
    float m = xr[0];
    for (int c = 1; c < cols; ++c) m = std::max(m, xr[c]);
    float z = 0;
    for (int c = 0; c < cols; ++c) {
      yr[c] = std::exp(xr[c] - m);
      z += yr[c];
    }
    for (int c = 0; c < cols; ++c) yr[c] /= z;
  }
  if (rg) {
    auto xi = x.impl(), oi = out.impl();
    Tape::current()->record("softmax_last", [xi, oi, rows, cols] {
      if (oi->grad.empty() || !xi->requires_grad) return;
      auto& g = grad_buf(xi);
      for (int r = 0; r < rows; ++r) {
        const float* y = oi->data.data() + (std::size_t)r * cols;
        const float* gy = oi->grad.data() + (std::size_t)r * cols;
        float dot = 0;
        for (int c = 0; c < cols; ++c) dot += gy[c] * y[c];
        for (int c = 0; c < cols; ++c) g[(std::size_t)r * cols + c] += y[c] * (gy[c] - dot);
      }
    });
  }
  return out;
}

Tensor layer_norm_last(const Tensor& x, const Tensor& gain, const Tensor& bias, float eps) {
  int dim = x.dim(x.ndim() - 1);
  if (gain.ndim() != 1 || gain.dim(0) != dim || bias.ndim() != 1 || bias.dim(0) != dim)
    shape_fail("layer_norm_last", x.shape(), gain.shape());
  int rows = static_cast<int>(x.numel() / dim);
  bool rg = tape_on({&x, &gain, &bias});
  Tensor out = out_like(x.shape(), rg);
  auto saved = std::make_shared<std::vector<float>>((std::size_t)rows * (dim + 1));  // xhat, rstd
  for (int r = 0; r < rows; ++r) {
    const float* xr = x.data() + (std::size_t)r * dim;
    float mean = 0;
    for (int d = 0; d < dim; ++d) mean += xr[d];
    mean /= (float)dim;
    float var = 0;
    for (int d = 0; d < dim; ++d) var += (xr[d] - mean) * (xr[d] - mean);
    var /= (float)dim;
    float rstd = 1.0f / std::sqrt(var + eps);
    float* xhat = saved->data() + (std::size_t)r * (dim + 1);
    for (int d = 0; d < dim; ++d) {
      xhat[d] = (xr[d] - mean) * rstd;
      out.data()[(std::size_t)r * dim + d] = xhat[d] * gain.data()[d] + bias.data()[d];
    }
    xhat[dim] = rstd;
  }
  if (rg) {
    auto xi = x.impl(), gi = gain.impl(), bi = bias.impl(), oi = out.impl();
    Tape::current()->record("layer_norm_last", [xi, gi, bi, oi, saved, rows, dim] {
      if (oi->grad.empty()) return;
      for (int r = 0; r < rows; ++r) {
        const float* gy = oi->grad.data() + (std::size_t)r * dim;
        const float* xhat = saved->data() + (std::size_t)r * (dim + 1);
        float rstd = xhat[dim];
        if (gi->requires_grad) {
          auto& gg = grad_buf(gi);
          for (int d = 0; d < dim; ++d) gg[d] += gy[d] * xhat[d];
        }
        if (bi->requires_grad) {
          auto& gb = grad_buf(bi);
          for (int d = 0; d < dim; ++d) gb[d] += gy[d];
        }
        if (xi->requires_grad) {
          float m1 = 0, m2 = 0;
          for (int d = 0; d < dim; ++d) {
            float t = gy[d] * gi->data[d];
            m1 += t;
            m2 += t * xhat[d];
          }
          m1 /= (float)dim;
          m2 /= (float)dim;
          auto& gx = grad_buf(xi);
          for (int d = 0; d < dim; ++d)
            gx[(std::size_t)r * dim + d] += rstd * (gy[d] * gi->data[d] - m1 - xhat[d] * m2);
        }
      }
    });
  }
  return out;
}

Tensor max_last_detached(const Tensor& x) {
  int cols = x.dim(x.ndim() - 1);
  int rows = static_cast<int>(x.numel() / cols);
  Tensor out = Tensor::zeros({rows});
  for (int r = 0; r < rows; ++r) {
    const float* xr = x.data() + (std::size_t)r * cols;
    float m = xr[0];
    for (int c = 1; c < cols; ++c) m = std::max(m, xr[c]);
    out.data()[r] = m;
  }
  return out;
}

// --- sparse / graph ------------------------------------------------------------------------

CsrPair make_csr_pair(Csr a) {
  Csr t;
  t.rows = a.cols;
  t.cols = a.rows;
  t.indptr.assign(t.rows + 1, 0);
  for (int idx : a.indices) t.indptr[idx + 1]++;
  for (int r = 0; r < t.rows; ++r) t.indptr[r + 1] += t.indptr[r];
  t.indices.resize(a.indices.size());
  t.values.resize(a.values.size());
  std::vector<int> cursor(t.indptr.begin(), t.indptr.end() - 1);
  for (int r = 0; r < a.rows; ++r)
    for (int p = a.indptr[r]; p < a.indptr[r + 1]; ++p) {
      int c = a.indices[p];
      t.indices[cursor[c]] = r;
      t.values[cursor[c]] = a.values[p];
      ++cursor[c];
    }
  return CsrPair{std::move(a), std::move(t)};
}

namespace {

void spmm_kernel(const Csr& a, const float* x, int dim, float* y, bool accumulate) {
  for (int r = 0; r < a.rows; ++r) {
    float* yr = y + (std::size_t)r * dim;
    if (!accumulate) std::memset(yr, 0, dim * sizeof(float));
    for (int p = a.indptr[r]; p < a.indptr[r + 1]; ++p) {
      float v = a.values[p];
      const float* xr = x + (std::size_t)a.indices[p] * dim;
      for (int d = 0; d < dim; ++d) yr[d] += v * xr[d];
    }
  }
}

}  // namespace

Tensor spmm(const std::shared_ptr<const CsrPair>& a, const Tensor& x) {
  if (x.ndim() != 2 || x.dim(0) != a->fwd.cols)
    throw ShapeError("spmm: adjacency of " + std::to_string(a->fwd.rows) + "x" +
                     std::to_string(a->fwd.cols) + " against " + shape_str(x.shape()));
  int dim = x.dim(1);
  bool rg = tape_on({&x});
  Tensor out = out_like({a->fwd.rows, dim}, rg);
  spmm_kernel(a->fwd, x.data(), dim, out.data(), false);
  if (rg) {
    auto xi = x.impl(), oi = out.impl();
    Tape::current()->record("spmm", [a, xi, oi, dim] {
      if (oi->grad.empty() || !xi->requires_grad) return;
      spmm_kernel(a->bwd, oi->grad.data(), dim, grad_buf(xi).data(), true);
    });
  }
  return out;
}

Tensor segment_mean(const Tensor& x, const std::vector<int>& offsets) {
  if (x.ndim() != 2 || offsets.size() < 2 || offsets.front() != 0 ||
      offsets.back() != x.dim(0))
    throw ShapeError("segment_mean: offsets do not cover " + shape_str(x.shape()));
  int groups = static_cast<int>(offsets.size()) - 1;
  int dim = x.dim(1);
  bool rg = tape_on({&x});
  Tensor out = out_like({groups, dim}, rg);
  for (int g = 0; g < groups; ++g) {
    int lo = offsets[g], hi = offsets[g + 1];
    int count = std::max(hi - lo, 1);
    for (int r = lo; r < hi; ++r)
      for (int d = 0; d < dim; ++d)
        out.data()[(std::size_t)g * dim + d] += x.data()[(std::size_t)r * dim + d];
    for (int d = 0; d < dim; ++d) out.data()[(std::size_t)g * dim + d] /= (float)count;
  }
  if (rg) {
    auto xi = x.impl(), oi = out.impl();
    Tape::current()->record("segment_mean", [xi, oi, offsets, groups, dim] {
      if (oi->grad.empty() || !xi->requires_grad) return;
      auto& g = grad_buf(xi);
      for (int gi = 0; gi < groups; ++gi) {
        int lo = offsets[gi], hi = offsets[gi + 1];
        float inv = 1.0f / std::max(hi - lo, 1);
        for (int r = lo; r < hi; ++r)
          for (int d = 0; d < dim; ++d)
            g[(std::size_t)r * dim + d] += oi->grad[(std::size_t)gi * dim + d] * inv;
      }
    });
  }
  return out;
}

// --- composites ------------------------------------------------------------------------------

Tensor normalize_rows(const Tensor& x, float eps) {
  Tensor norms = sqrt_t(add_scalar(sum_last(mul(x, x)), eps));
  return rows_scale(x, recip(norms));
}

// --- optimizer --------------------------------------------------------------------------------

void adam_step(std::vector<Tensor>& params, AdamState& state, float lr, float beta1, float beta2,
               float eps) {
  if (state.m.size() != params.size()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(params[i].vec().size(), 0.0f);
      state.v[i].assign(params[i].vec().size(), 0.0f);
    }
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow((double)beta1, (double)state.step);
  const double bc2 = 1.0 - std::pow((double)beta2, (double)state.step);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (p.vec().size() != state.m[i].size())
      throw ShapeError("adam_step: parameter " + std::to_string(i) + " changed size");
    if (!p.has_grad()) continue;
    float* w = p.data();
    const float* g = p.impl()->grad.data();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < m.size(); ++j) {
      m[j] = beta1 * m[j] + (1.0f - beta1) * g[j];
      v[j] = beta2 * v[j] + (1.0f - beta2) * g[j] * g[j];
      float mhat = (float)(m[j] / bc1);
      float vhat = (float)(v[j] / bc2);
      w[j] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

void zero_grads(std::vector<Tensor>& params) {
  for (auto& p : params) p.zero_grad();
}

float clip_global_norm(std::vector<Tensor>& params, float max_norm) {
  double total = 0;
  for (auto& p : params) {
    if (!p.has_grad()) continue;
    for (float g : p.impl()->grad) total += (double)g * g;
  }
  float norm = (float)std::sqrt(total);
  if (norm > max_norm && norm > 0) {
    float s = max_norm / norm;
    for (auto& p : params) {
      if (!p.has_grad()) continue;
      for (float& g : p.impl()->grad) g *= s;
    }
  }
  return norm;
}

}  // namespace latentmath
