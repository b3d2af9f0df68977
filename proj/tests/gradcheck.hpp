#pragma once

// Randomized finite-difference gradient checks for every diffarray primitive.
// The forward reference is evaluated in float64 (oracles.hpp or inline loops
// below), independent of the float32 engine; h = 1e-3, central differences.

#include <functional>
#include <string>
#include <vector>

#include "latentmath/rng.hpp"
#include "latentmath/tensor.hpp"
#include "oracles.hpp"

namespace latentmath::gradcheck {

using oracle::dvec;

struct GradCase {
  std::string name;
  std::vector<Tensor> inputs;                              // all requires_grad
  std::function<Tensor(const std::vector<Tensor>&)> fwd;   // float32 engine
  std::function<dvec(const std::vector<dvec>&)> ref;       // float64 shadow
};

inline Tensor rand_tensor(Rng& rng, std::vector<int> shape, float lo = -2.0f, float hi = 2.0f) {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  std::vector<float> data(n);
  for (auto& v : data) v = static_cast<float>(rng.uniform_real(lo, hi));
  return Tensor::from_data(std::move(shape), std::move(data), true);
}

inline dvec to_dvec(const Tensor& t) {
  dvec out(t.vec().begin(), t.vec().end());
  return out;
}

// max relative error between autodiff gradients and the float64 finite
// difference of the shadow forward
inline double max_rel_err(const GradCase& c, Rng& rng, double h = 1e-3) {
  Tensor out;
  std::vector<float> weights_f;
  dvec weights;
  {
    Tape tape;
    out = c.fwd(c.inputs);
    weights_f.resize(out.numel());
    for (auto& w : weights_f) w = static_cast<float>(rng.uniform_real(-1.0, 1.0));
    weights.assign(weights_f.begin(), weights_f.end());
    Tensor wt = Tensor::from_data(out.shape(), weights_f);
    backward(sum_all(mul(out, wt)));
  }

  std::vector<dvec> dinputs;
  for (const auto& t : c.inputs) dinputs.push_back(to_dvec(t));

  auto weighted = [&](const std::vector<dvec>& xs) {
    dvec y = c.ref(xs);
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * weights[i];
    return s;
  };

  double worst = 0;
  for (std::size_t j = 0; j < c.inputs.size(); ++j) {
    const float* grad =
        c.inputs[j].has_grad() ? c.inputs[j].impl()->grad.data() : nullptr;
    for (std::size_t k = 0; k < dinputs[j].size(); ++k) {
      auto xs = dinputs;
      xs[j][k] += h;
      double fp = weighted(xs);
      xs[j][k] -= 2 * h;
      double fm = weighted(xs);
      double fd = (fp - fm) / (2 * h);
      double g = grad ? grad[k] : 0.0;
      double err = std::abs(g - fd) / (1.0 + std::abs(fd));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

// all primitives with shapes randomized per call
inline std::vector<GradCase> build_cases(Rng& rng) {
  std::vector<GradCase> cases;
  auto dim = [&](int lo, int hi) { return static_cast<int>(rng.uniform_int(lo, hi)); };

  {
    int r = dim(2, 4), c = dim(2, 5);
    auto ref2 = [](auto op) {
      return [op](const std::vector<dvec>& xs) {
        dvec y(xs[0].size());
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = op(xs[0][i], xs[1][i]);
        return y;
      };
    };
    cases.push_back({"add",
                     {rand_tensor(rng, {r, c}), rand_tensor(rng, {r, c})},
                     [](const auto& in) { return add(in[0], in[1]); },
                     ref2([](double a, double b) { return a + b; })});
    cases.push_back({"sub",
                     {rand_tensor(rng, {r, c}), rand_tensor(rng, {r, c})},
                     [](const auto& in) { return sub(in[0], in[1]); },
                     ref2([](double a, double b) { return a - b; })});
    cases.push_back({"mul",
                     {rand_tensor(rng, {r, c}), rand_tensor(rng, {r, c})},
                     [](const auto& in) { return mul(in[0], in[1]); },
                     ref2([](double a, double b) { return a * b; })});
  }

  auto unary_case = [&](const char* name, auto op_f, auto op_d, float lo, float hi) {
    int r = dim(2, 4), c = dim(2, 5);
    Tensor x = rand_tensor(rng, {r, c}, lo, hi);
    cases.push_back({name,
                     {x},
                     [op_f](const std::vector<Tensor>& in) { return op_f(in[0]); },
                     [op_d](const std::vector<dvec>& xs) {
                       dvec y(xs[0].size());
                       for (std::size_t i = 0; i < y.size(); ++i) y[i] = op_d(xs[0][i]);
                       return y;
                     }});
  };
  float sc = static_cast<float>(rng.uniform_real(-2.0, 2.0));
  unary_case(
      "scale", [sc](const Tensor& t) { return scale(t, sc); },
      [sc](double x) { return x * (double)sc; }, -2.f, 2.f);
  unary_case(
      "add_scalar", [sc](const Tensor& t) { return add_scalar(t, sc); },
      [sc](double x) { return x + (double)sc; }, -2.f, 2.f);
  unary_case(
      "recip", [](const Tensor& t) { return recip(t); }, [](double x) { return 1.0 / x; },
      0.5f, 2.f);
  unary_case(
      "exp", [](const Tensor& t) { return exp_t(t); }, [](double x) { return std::exp(x); },
      -1.5f, 1.5f);
  unary_case(
      "log", [](const Tensor& t) { return log_t(t); }, [](double x) { return std::log(x); },
      0.3f, 3.f);
  unary_case(
      "sqrt", [](const Tensor& t) { return sqrt_t(t); }, [](double x) { return std::sqrt(x); },
      0.2f, 3.f);
  unary_case(
      "tanh", [](const Tensor& t) { return tanh_t(t); }, [](double x) { return std::tanh(x); },
      -2.f, 2.f);
  unary_case(
      "sigmoid", [](const Tensor& t) { return sigmoid_t(t); },
      [](double x) { return 1.0 / (1.0 + std::exp(-x)); }, -2.f, 2.f);

  {
    // relu away from the kink
    int r = dim(2, 4), c = dim(2, 5);
    Tensor x = rand_tensor(rng, {r, c}, 0.05f, 2.0f);
    for (auto& v : x.vec())
      if (rng.bernoulli(0.5)) v = -v;
    cases.push_back({"relu",
                     {x},
                     [](const auto& in) { return relu_t(in[0]); },
                     [](const std::vector<dvec>& xs) {
                       dvec y(xs[0].size());
                       for (std::size_t i = 0; i < y.size(); ++i)
                         y[i] = xs[0][i] > 0 ? xs[0][i] : 0.0;
                       return y;
                     }});
  }

  for (bool ta : {false, true})
    for (bool tb : {false, true}) {
      int m = dim(2, 4), k = dim(2, 4), n = dim(2, 4);
      Tensor a = rand_tensor(rng, ta ? std::vector<int>{k, m} : std::vector<int>{m, k});
      Tensor b = rand_tensor(rng, tb ? std::vector<int>{n, k} : std::vector<int>{k, n});
      cases.push_back({std::string("matmul_") + (ta ? "t" : "n") + (tb ? "t" : "n"),
                       {a, b},
                       [ta, tb](const auto& in) { return matmul(in[0], in[1], ta, tb); },
                       [m, n, k, ta, tb](const std::vector<dvec>& xs) {
                         return oracle::ref_matmul(xs[0], xs[1], m, n, k, ta, tb);
                       }});
    }

  for (bool tb : {false, true}) {
    int g = dim(2, 3), m = dim(2, 3), k = dim(2, 3), n = dim(2, 3);
    Tensor a = rand_tensor(rng, {g, m, k});
    Tensor b = rand_tensor(rng, tb ? std::vector<int>{g, n, k} : std::vector<int>{g, k, n});
    cases.push_back({std::string("bmm_") + (tb ? "t" : "n"),
                     {a, b},
                     [tb](const auto& in) { return bmm(in[0], in[1], tb); },
                     [g, m, n, k, tb](const std::vector<dvec>& xs) {
                       dvec y((std::size_t)g * m * n);
                       for (int gi = 0; gi < g; ++gi) {
                         dvec ap(xs[0].begin() + gi * m * k, xs[0].begin() + (gi + 1) * m * k);
                         dvec bp(xs[1].begin() + gi * k * n, xs[1].begin() + (gi + 1) * k * n);
                         dvec cp = oracle::ref_matmul(ap, bp, m, n, k, false, tb);
                         std::copy(cp.begin(), cp.end(), y.begin() + gi * m * n);
                       }
                       return y;
                     }});
  }

  {
    int c = dim(2, 4);
    int r1 = dim(1, 3), r2 = dim(1, 3), r3 = dim(1, 3);
    cases.push_back({"concat_rows",
                     {rand_tensor(rng, {r1, c}), rand_tensor(rng, {r2, c}),
                      rand_tensor(rng, {r3, c})},
                     [](const auto& in) {
                       return concat_rows({in[0], in[1], in[2]});
                     },
                     [](const std::vector<dvec>& xs) {
                       dvec y;
                       for (const auto& x : xs) y.insert(y.end(), x.begin(), x.end());
                       return y;
                     }});
    int r = dim(2, 4);
    int c1 = dim(1, 3), c2 = dim(1, 3);
    cases.push_back({"concat_cols",
                     {rand_tensor(rng, {r, c1}), rand_tensor(rng, {r, c2})},
                     [](const auto& in) {
                       return concat_cols({in[0], in[1]});
                     },
                     [r, c1, c2](const std::vector<dvec>& xs) {
                       dvec y((std::size_t)r * (c1 + c2));
                       for (int i = 0; i < r; ++i) {
                         for (int j = 0; j < c1; ++j) y[i * (c1 + c2) + j] = xs[0][i * c1 + j];
                         for (int j = 0; j < c2; ++j)
                           y[i * (c1 + c2) + c1 + j] = xs[1][i * c2 + j];
                       }
                       return y;
                     }});
  }

  {
    int r = dim(3, 6), c = dim(2, 4);
    int start = dim(0, r - 2), len = dim(1, r - start - 1);
    cases.push_back({"slice_rows",
                     {rand_tensor(rng, {r, c})},
                     [start, len](const auto& in) { return slice_rows(in[0], start, len); },
                     [start, len, c](const std::vector<dvec>& xs) {
                       return dvec(xs[0].begin() + start * c, xs[0].begin() + (start + len) * c);
                     }});
    int cstart = dim(0, c - 2), clen = dim(1, c - cstart - 1);
    cases.push_back({"slice_cols",
                     {rand_tensor(rng, {r, c})},
                     [cstart, clen](const auto& in) { return slice_cols(in[0], cstart, clen); },
                     [r, c, cstart, clen](const std::vector<dvec>& xs) {
                       dvec y((std::size_t)r * clen);
                       for (int i = 0; i < r; ++i)
                         for (int j = 0; j < clen; ++j) y[i * clen + j] = xs[0][i * c + cstart + j];
                       return y;
                     }});
    cases.push_back({"reshape",
                     {rand_tensor(rng, {r, c})},
                     [r, c](const auto& in) {
                       return reshape(in[0], {c * r});
                     },
                     [](const std::vector<dvec>& xs) { return xs[0]; }});
  }

  {
    int vocab = dim(4, 7), d = dim(2, 4), n = dim(3, 6);
    std::vector<int> ids(n);
    for (auto& id : ids) id = static_cast<int>(rng.uniform(vocab));
    cases.push_back({"embedding_lookup",
                     {rand_tensor(rng, {vocab, d})},
                     [ids](const auto& in) { return embedding_lookup(in[0], ids); },
                     [ids, d](const std::vector<dvec>& xs) {
                       dvec y(ids.size() * d);
                       for (std::size_t i = 0; i < ids.size(); ++i)
                         for (int j = 0; j < d; ++j) y[i * d + j] = xs[0][ids[i] * d + j];
                       return y;
                     }});
  }

  {
    int b = dim(1, 2), t = dim(4, 6), c = dim(2, 3), f = dim(2, 3), w = dim(2, 3);
    cases.push_back({"conv1d",
                     {rand_tensor(rng, {b, t, c}), rand_tensor(rng, {f, w, c}),
                      rand_tensor(rng, {f})},
                     [](const auto& in) { return conv1d(in[0], in[1], in[2]); },
                     [b, t, c, f, w](const std::vector<dvec>& xs) {
                       return oracle::ref_conv1d(xs[0], xs[1], xs[2], b, t, c, f, w);
                     }});
  }

  {
    // max_over_time with tie gaps larger than the FD step
    int b = dim(2, 3), t = dim(3, 5), f = dim(2, 3);
    std::vector<int> lengths(b);
    for (auto& l : lengths) l = static_cast<int>(rng.uniform_int(1, t));
    Tensor x = rand_tensor(rng, {b, t, f});
    for (int bi = 0; bi < b; ++bi)
      for (int fi = 0; fi < f; ++fi) {
        // spread the column so the max is isolated
        for (int ti = 0; ti < t; ++ti)
          x.vec()[(bi * t + ti) * f + fi] =
              static_cast<float>(rng.uniform_real(0.0, 0.1)) + 0.5f * ti * ((bi + fi) % 2 ? 1 : -1);
      }
    cases.push_back({"max_over_time",
                     {x},
                     [lengths](const auto& in) { return max_over_time(in[0], lengths); },
                     [b, t, f, lengths](const std::vector<dvec>& xs) {
                       dvec y((std::size_t)b * f);
                       for (int bi = 0; bi < b; ++bi)
                         for (int fi = 0; fi < f; ++fi) {
                           double best = xs[0][(bi * t) * f + fi];
                           for (int ti = 1; ti < lengths[bi]; ++ti)
                             best = std::max(best, xs[0][(bi * t + ti) * f + fi]);
                           y[bi * f + fi] = best;
                         }
                       return y;
                     }});

    std::vector<int> lengths2(b);
    for (auto& l : lengths2) l = static_cast<int>(rng.uniform_int(1, t));
    cases.push_back({"masked_mean_time",
                     {rand_tensor(rng, {b, t, f})},
                     [lengths2](const auto& in) { return masked_mean_time(in[0], lengths2); },
                     [b, t, f, lengths2](const std::vector<dvec>& xs) {
                       dvec y((std::size_t)b * f, 0.0);
                       for (int bi = 0; bi < b; ++bi) {
                         for (int ti = 0; ti < lengths2[bi]; ++ti)
                           for (int fi = 0; fi < f; ++fi)
                             y[bi * f + fi] += xs[0][(bi * t + ti) * f + fi];
                         for (int fi = 0; fi < f; ++fi) y[bi * f + fi] /= lengths2[bi];
                       }
                       return y;
                     }});
  }

  {
    int r = dim(2, 4), c = dim(2, 4);
    for (int axis : {0, 1})
      cases.push_back({std::string("mean_over_axis") + std::to_string(axis),
                       {rand_tensor(rng, {r, c})},
                       [axis](const auto& in) { return mean_over_axis(in[0], axis); },
                       [r, c, axis](const std::vector<dvec>& xs) {
                         if (axis == 0) {
                           dvec y(c, 0.0);
                           for (int i = 0; i < r; ++i)
                             for (int j = 0; j < c; ++j) y[j] += xs[0][i * c + j] / r;
                           return y;
                         }
                         dvec y(r, 0.0);
                         for (int i = 0; i < r; ++i)
                           for (int j = 0; j < c; ++j) y[i] += xs[0][i * c + j] / c;
                         return y;
                       }});
    cases.push_back({"sum_last",
                     {rand_tensor(rng, {r, c})},
                     [](const auto& in) { return sum_last(in[0]); },
                     [r, c](const std::vector<dvec>& xs) {
                       dvec y(r, 0.0);
                       for (int i = 0; i < r; ++i)
                         for (int j = 0; j < c; ++j) y[i] += xs[0][i * c + j];
                       return y;
                     }});
    cases.push_back({"sum_all",
                     {rand_tensor(rng, {r, c})},
                     [](const auto& in) { return sum_all(in[0]); },
                     [](const std::vector<dvec>& xs) {
                       dvec y(1, 0.0);
                       for (double v : xs[0]) y[0] += v;
                       return y;
                     }});
  }

  {
    int r = dim(2, 4), c = dim(2, 4);
    float alpha = static_cast<float>(rng.uniform_real(-1.5, 1.5));
    cases.push_back({"rows_add",
                     {rand_tensor(rng, {r, c}), rand_tensor(rng, {r})},
                     [alpha](const auto& in) { return rows_add(in[0], in[1], alpha); },
                     [r, c, alpha](const std::vector<dvec>& xs) {
                       dvec y((std::size_t)r * c);
                       for (int i = 0; i < r; ++i)
                         for (int j = 0; j < c; ++j)
                           y[i * c + j] = xs[0][i * c + j] + (double)alpha * xs[1][i];
                       return y;
                     }});
    cases.push_back({"rows_scale",
                     {rand_tensor(rng, {r, c}), rand_tensor(rng, {r})},
                     [](const auto& in) { return rows_scale(in[0], in[1]); },
                     [r, c](const std::vector<dvec>& xs) {
                       dvec y((std::size_t)r * c);
                       for (int i = 0; i < r; ++i)
                         for (int j = 0; j < c; ++j) y[i * c + j] = xs[0][i * c + j] * xs[1][i];
                       return y;
                     }});
    cases.push_back({"add_bias",
                     {rand_tensor(rng, {r, c}), rand_tensor(rng, {c})},
                     [](const auto& in) { return add_bias(in[0], in[1]); },
                     [r, c](const std::vector<dvec>& xs) {
                       dvec y((std::size_t)r * c);
                       for (int i = 0; i < r; ++i)
                         for (int j = 0; j < c; ++j) y[i * c + j] = xs[0][i * c + j] + xs[1][j];
                       return y;
                     }});
  }

  {
    int r = dim(2, 4), d = dim(3, 5);
    Tensor a = rand_tensor(rng, {r, d}, 0.4f, 1.6f);
    Tensor b = rand_tensor(rng, {r, d}, 0.4f, 1.6f);
    for (auto& v : a.vec())
      if (rng.bernoulli(0.5)) v = -v;
    for (auto& v : b.vec())
      if (rng.bernoulli(0.5)) v = -v;
    cases.push_back({"cosine_rowwise",
                     {a, b},
                     [](const auto& in) { return cosine_rowwise(in[0], in[1]); },
                     [r, d](const std::vector<dvec>& xs) {
                       return oracle::ref_cosine_rowwise(xs[0], xs[1], r, d);
                     }});
  }

  {
    int r = dim(2, 4), c = dim(3, 6);
    cases.push_back({"softmax_last",
                     {rand_tensor(rng, {r, c})},
                     [](const auto& in) { return softmax_last(in[0]); },
                     [r, c](const std::vector<dvec>& xs) {
                       return oracle::ref_softmax_last(xs[0], r, c);
                     }});
    int d = dim(3, 6);
    cases.push_back({"layer_norm_last",
                     {rand_tensor(rng, {r, d}), rand_tensor(rng, {d}, 0.5f, 1.5f),
                      rand_tensor(rng, {d})},
                     [](const auto& in) { return layer_norm_last(in[0], in[1], in[2]); },
                     [r, d](const std::vector<dvec>& xs) {
                       return oracle::ref_layer_norm(xs[0], xs[1], xs[2], r, d, 1e-5);
                     }});
  }

  {
    // random sparse adjacency
    int nodes = dim(3, 6), d = dim(2, 4);
    Csr adj;
    adj.rows = nodes;
    adj.cols = nodes;
    adj.indptr.push_back(0);
    for (int i = 0; i < nodes; ++i) {
      for (int j = 0; j < nodes; ++j)
        if (rng.bernoulli(0.4)) {
          adj.indices.push_back(j);
          adj.values.push_back(static_cast<float>(rng.uniform_real(0.2, 1.0)));
        }
      adj.indptr.push_back(static_cast<int>(adj.indices.size()));
    }
    auto pair = std::make_shared<const CsrPair>(make_csr_pair(adj));
    cases.push_back({"spmm",
                     {rand_tensor(rng, {nodes, d})},
                     [pair](const auto& in) { return spmm(pair, in[0]); },
                     [pair, nodes, d](const std::vector<dvec>& xs) {
                       dvec y((std::size_t)nodes * d, 0.0);
                       const Csr& A = pair->fwd;
                       for (int i = 0; i < nodes; ++i)
                         for (int p = A.indptr[i]; p < A.indptr[i + 1]; ++p)
                           for (int j = 0; j < d; ++j)
                             y[i * d + j] += (double)A.values[p] * xs[0][A.indices[p] * d + j];
                       return y;
                     }});

    int rows = dim(4, 7), dd = dim(2, 3);
    std::vector<int> offsets{0};
    int at = 0;
    while (at < rows) {
      at = std::min(rows, at + static_cast<int>(rng.uniform_int(1, 3)));
      offsets.push_back(at);
    }
    cases.push_back({"segment_mean",
                     {rand_tensor(rng, {rows, dd})},
                     [offsets](const auto& in) { return segment_mean(in[0], offsets); },
                     [offsets, dd](const std::vector<dvec>& xs) {
                       int groups = static_cast<int>(offsets.size()) - 1;
                       dvec y((std::size_t)groups * dd, 0.0);
                       for (int g = 0; g < groups; ++g) {
                         int lo = offsets[g], hi = offsets[g + 1];
                         for (int i = lo; i < hi; ++i)
                           for (int j = 0; j < dd; ++j) y[g * dd + j] += xs[0][i * dd + j];
                         for (int j = 0; j < dd; ++j) y[g * dd + j] /= std::max(hi - lo, 1);
                       }
                       return y;
                     }});
  }

  return cases;
}

struct SweepResult {
  double worst_err = 0;
  std::string worst_case;
};

inline SweepResult sweep(int seeds, std::uint64_t base_seed = 0xd1f5a88eULL) {
  SweepResult res;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(base_seed + s);
    auto cases = build_cases(rng);
    for (const auto& c : cases) {
      double err = max_rel_err(c, rng);
      if (err > res.worst_err) {
        res.worst_err = err;
        res.worst_case = c.name + " (seed " + std::to_string(s) + ")";
      }
    }
  }
  return res;
}

}  // namespace latentmath::gradcheck
