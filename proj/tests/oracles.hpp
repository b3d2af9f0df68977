#pragma once

// Double-precision shadow implementations of the diffarray primitives, written
// as direct loops independent of the float32 engine. They exist purely as the
// finite-difference oracle for gradient checks.

#include <cmath>
#include <functional>
#include <vector>

namespace latentmath::oracle {

using dvec = std::vector<double>;

inline dvec ref_matmul(const dvec& a, const dvec& b, int m, int n, int k, bool ta, bool tb) {
  dvec c(static_cast<std::size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0;
      for (int kk = 0; kk < k; ++kk) {
        double av = ta ? a[kk * m + i] : a[i * k + kk];
        double bv = tb ? b[j * k + kk] : b[kk * n + j];
        s += av * bv;
      }
      c[i * n + j] = s;
    }
  return c;
}

inline dvec ref_conv1d(const dvec& x, const dvec& w, const dvec& bias, int batch, int time,
                       int chans, int filters, int width) {
  int out_time = time - width + 1;
  dvec y(static_cast<std::size_t>(batch) * out_time * filters, 0.0);
  for (int b = 0; b < batch; ++b)
    for (int t = 0; t < out_time; ++t)
      for (int f = 0; f < filters; ++f) {
        double s = bias[f];
        for (int i = 0; i < width; ++i)
          for (int c = 0; c < chans; ++c)
            s += x[((b * time) + t + i) * chans + c] * w[(f * width + i) * chans + c];
        y[((b * out_time) + t) * filters + f] = s;
      }
  return y;
}

inline dvec ref_softmax_last(const dvec& x, int rows, int cols) {
  dvec y(x.size());
  for (int r = 0; r < rows; ++r) {
    double m = x[r * cols];
    for (int c = 1; c < cols; ++c) m = std::max(m, x[r * cols + c]);
    double z = 0;
    for (int c = 0; c < cols; ++c) {
      y[r * cols + c] = std::exp(x[r * cols + c] - m);
      z += y[r * cols + c];
    }
    for (int c = 0; c < cols; ++c) y[r * cols + c] /= z;
  }
  return y;
}

inline dvec ref_layer_norm(const dvec& x, const dvec& gain, const dvec& bias, int rows, int dim,
                           double eps) {
  dvec y(x.size());
  for (int r = 0; r < rows; ++r) {
    double mean = 0;
    for (int d = 0; d < dim; ++d) mean += x[r * dim + d];
    mean /= dim;
    double var = 0;
    for (int d = 0; d < dim; ++d) var += (x[r * dim + d] - mean) * (x[r * dim + d] - mean);
    var /= dim;
    double rstd = 1.0 / std::sqrt(var + eps);
    for (int d = 0; d < dim; ++d)
      y[r * dim + d] = (x[r * dim + d] - mean) * rstd * gain[d] + bias[d];
  }
  return y;
}

inline dvec ref_cosine_rowwise(const dvec& a, const dvec& b, int rows, int dim) {
  dvec y(rows);
  for (int r = 0; r < rows; ++r) {
    double dot = 0, na = 0, nb = 0;
    for (int d = 0; d < dim; ++d) {
      dot += a[r * dim + d] * b[r * dim + d];
      na += a[r * dim + d] * a[r * dim + d];
      nb += b[r * dim + d] * b[r * dim + d];
    }
    y[r] = dot / ((std::sqrt(na) + 1e-12) * (std::sqrt(nb) + 1e-12));
  }
  return y;
}

}  // namespace latentmath::oracle
