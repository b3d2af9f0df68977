#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "latentmath/dataset.hpp"
#include "latentmath/model.hpp"

namespace latentmath {

// --- ranking metrics -----------------------------------------------------------

// relevance flags in rank order (descending score, ties by candidate index)
double average_precision(const std::vector<bool>& ranked_relevance);
int hit_at_k(const std::vector<bool>& ranked_relevance, int k);

// stable rank order: by descending score, ties broken by candidate index
std::vector<int> rank_order(const std::vector<double>& scores);

struct RandomBaseline {
  double map = 0;   // x100
  double hit1 = 0;  // x100
  double hit3 = 0;  // x100
};

// Monte Carlo baseline for uniformly random rankings
RandomBaseline random_ranking_baseline(int num_pos, int num_total, int samples,
                                       std::uint64_t seed);

// --- model-side caches -----------------------------------------------------------

// tokenized / tree inputs, valid for a fixed vocabulary pair
class InputCache {
 public:
  InputCache(const TokenVocab& tokens, const NodeLabelVocab& labels)
      : tokens_(&tokens), labels_(&labels) {}
  const EncodedExpr* get(const Expr& e);

 private:
  const TokenVocab* tokens_;
  const NodeLabelVocab* labels_;
  std::unordered_map<Expr, std::unique_ptr<EncodedExpr>, ExprHash, ExprEq> cache_;
};

// raw expression-encoder embeddings for one model snapshot
class EmbeddingCache {
 public:
  EmbeddingCache(const Model& model, InputCache& inputs) : model_(&model), inputs_(&inputs) {}
  void ensure(const std::vector<Expr>& exprs);
  const std::vector<float>& get(const Expr& e) const;

 private:
  const Model* model_;
  InputCache* inputs_;
  std::unordered_map<Expr, std::vector<float>, ExprHash, ExprEq> rows_;
};

// --- protocol reports ---------------------------------------------------------------

struct MetricReport {
  std::string mode;
  int num_vars = 0;  // 0 unless grouped by premise variable count
  int n = 0;
  double map = 0;   // x100
  double hit1 = 0;  // x100
  double hit3 = 0;  // x100
};

struct StepReport {
  int step = 0;
  int n = 0;
  double hit1 = 0;  // x100
};

struct SeparationReport {
  std::string mode;
  int n = 0;
  double before = 0;  // x100
  double after = 0;   // x100
};

// candidate scores for one instance under the model's paradigm ranking rule
std::vector<double> score_candidates(const Model& model, EmbeddingCache& cache,
                                     const Expr& premise, OpKind op,
                                     const std::vector<Expr>& candidates);

// cross-op and intra-op retrieval (4 positives ranked among 24)
std::vector<MetricReport> eval_retrieval(const Model& model, InputCache& inputs,
                                         const std::vector<EvalInstance>& instances);

// latent propagation over chains; Hit@1 of the true conclusion among the 5
// per-step candidates
std::vector<StepReport> eval_multistep(const Model& model, InputCache& inputs,
                                       const std::vector<MultiStepChain>& chains, int max_steps);

std::vector<SeparationReport> latent_separation(const Model& model, InputCache& inputs,
                                                const std::vector<EvalInstance>& instances);

// MAP per premise-variable-count group {2..5}, per mode
std::vector<MetricReport> eval_length_generalisation(const Model& model, InputCache& inputs,
                                                     const std::vector<EvalInstance>& instances);

// --- 2D export -------------------------------------------------------------------------

struct Export2dRow {
  int id = 0;
  std::string kind;  // premise | positive | negative | predicted
  double x = 0;
  double y = 0;
};

struct Export2d {
  std::vector<Export2dRow> before;
  std::vector<Export2dRow> after;
};

Export2d export_2d(const Model& model, InputCache& inputs,
                   const std::vector<EvalInstance>& instances, int max_instances);

// PCA helper (double precision, deterministic): projects rows onto the top-2
// principal components. Throws Error(invalid_argument) when all points
// coincide.
std::vector<std::pair<double, double>> pca_2d(const std::vector<std::vector<double>>& rows);

}  // namespace latentmath
