#include "latentmath/heads.hpp"

#include <cmath>

#include "latentmath/encoders.hpp"

namespace latentmath {

const char* paradigm_name(Paradigm p) {
  switch (p) {
    case Paradigm::projection_onehot: return "projection-onehot";
    case Paradigm::projection_dense: return "projection-dense";
    case Paradigm::translation: return "translation";
  }
  return "?";
}

Paradigm paradigm_from_name(const std::string& name) {
  if (name == "projection-onehot") return Paradigm::projection_onehot;
  if (name == "projection-dense") return Paradigm::projection_dense;
  if (name == "translation") return Paradigm::translation;
  throw ConfigError("unknown paradigm '" + name + "'");
}

ProjectionHead::ProjectionHead(int d, int op_dim, Rng& rng)
    : weight(glorot({d, d + op_dim}, rng)), bias(Tensor::zeros({d}, true)) {}

Tensor ProjectionHead::predict(const Tensor& t_emb, const Tensor& e_x) const {
  if (t_emb.dim(0) != e_x.dim(0))
    throw ShapeError("projection: operation and premise batches differ");
  Tensor joined = concat_cols({t_emb, e_x});
  if (joined.dim(1) != weight.dim(1))
    throw ShapeError("projection: head expects " + std::to_string(weight.dim(1)) +
                     " inputs, got " + std::to_string(joined.dim(1)));
  return add_bias(matmul(joined, weight, false, true), bias);
}

TranslationHead::TranslationHead(int d, bool shared_diag)
    : diag(Tensor::full({kNumOps, d}, 1.0f, true)), shared(shared_diag) {}

Tensor TranslationHead::scale_premise(const Tensor& e_x, const std::vector<int>& op_ids) const {
  if (static_cast<int>(op_ids.size()) != e_x.dim(0))
    throw ShapeError("translation: op ids do not match the premise batch");
  if (e_x.dim(1) != diag.dim(1))
    throw ShapeError("translation: head dimension " + std::to_string(diag.dim(1)) +
                     " vs embedding " + std::to_string(e_x.dim(1)));
  std::vector<int> rows = op_ids;
  if (shared) std::fill(rows.begin(), rows.end(), 0);
  return mul(e_x, embedding_lookup(diag, rows));
}

double score_from_cosine(double cosine) {
  double delta = 1.0 - cosine;
  return -(delta * delta);
}

double cosine_of(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.size() != b.size())
    throw ShapeError("cosine_of: lengths " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += (double)a[i] * b[i];
    na += (double)a[i] * a[i];
    nb += (double)b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0)
    throw Error(ErrorCode::invalid_argument, "cosine_of: zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace latentmath
