#pragma once

#include <string>
#include <vector>

#include "latentmath/rng.hpp"
#include "latentmath/symbolic.hpp"
#include "latentmath/tensor.hpp"

namespace latentmath {

enum class Paradigm { projection_onehot, projection_dense, translation };

const char* paradigm_name(Paradigm p);
Paradigm paradigm_from_name(const std::string& name);

// single linear layer over the concatenation (t || e_x)
struct ProjectionHead {
  Tensor weight;  // [d, d + op_dim]
  Tensor bias;    // [d]

  ProjectionHead() = default;
  ProjectionHead(int d, int op_dim, Rng& rng);

  // t_emb: [B, op_dim], e_x: [B, d] -> [B, d]
  Tensor predict(const Tensor& t_emb, const Tensor& e_x) const;
};

// per-operation diagonal scaling T (the translation vector t lives in the
// dense operation encoder)
struct TranslationHead {
  Tensor diag;  // [6, d], initialized at 1 (identity scaling)
  bool shared = false;  // ablation: use row 0 for every operation

  TranslationHead() = default;
  TranslationHead(int d, bool shared_diag);

  // T o e_x, rows selected per op id -> [B, d]
  Tensor scale_premise(const Tensor& e_x, const std::vector<int>& op_ids) const;
};

// -(1 - cos)^2: <= 0, equal to 0 iff the cosine is 1; monotone in cosine
double score_from_cosine(double cosine);

// cosine of two equal-length vectors; throws Error(invalid_argument) on a
// zero vector
double cosine_of(const std::vector<float>& a, const std::vector<float>& b);

}  // namespace latentmath
