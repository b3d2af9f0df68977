#include "latentmath/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "latentmath/rng.hpp"

namespace latentmath {

double average_precision(const std::vector<bool>& ranked_relevance) {
  int relevant = 0;
  double sum = 0;
  for (std::size_t i = 0; i < ranked_relevance.size(); ++i) {
    if (!ranked_relevance[i]) continue;
    ++relevant;
    sum += static_cast<double>(relevant) / static_cast<double>(i + 1);
  }
  if (relevant == 0)
    throw Error(ErrorCode::invalid_argument, "average_precision: no relevant candidates");
  return sum / relevant;
}

int hit_at_k(const std::vector<bool>& ranked_relevance, int k) {
  if (k < 1) throw Error(ErrorCode::invalid_argument, "hit_at_k: k must be >= 1");
  for (int i = 0; i < static_cast<int>(ranked_relevance.size()) && i < k; ++i)
    if (ranked_relevance[i]) return 1;
  return 0;
}

std::vector<int> rank_order(const std::vector<double>& scores) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  return order;
}

RandomBaseline random_ranking_baseline(int num_pos, int num_total, int samples,
                                       std::uint64_t seed) {
  Rng rng(seed);
  std::vector<bool> flags(num_total, false);
  std::fill(flags.begin(), flags.begin() + num_pos, true);
  double ap = 0, h1 = 0, h3 = 0;
  std::vector<int> perm(num_total);
  for (int s = 0; s < samples; ++s) {
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    std::vector<bool> ranked(num_total);
    for (int i = 0; i < num_total; ++i) ranked[i] = flags[perm[i]];
    ap += average_precision(ranked);
    h1 += hit_at_k(ranked, 1);
    h3 += hit_at_k(ranked, 3);
  }
  return {100.0 * ap / samples, 100.0 * h1 / samples, 100.0 * h3 / samples};
}

// --- caches ------------------------------------------------------------------------

const EncodedExpr* InputCache::get(const Expr& e) {
  auto it = cache_.find(e);
  if (it != cache_.end()) return it->second.get();
  auto enc = std::make_unique<EncodedExpr>(encode_expr_input(e, *tokens_, *labels_));
  return cache_.emplace(e, std::move(enc)).first->second.get();
}

void EmbeddingCache::ensure(const std::vector<Expr>& exprs) {
  std::vector<Expr> missing;
  std::set<const ExprNode*> queued;
  for (const auto& e : exprs)
    if (!rows_.count(e) && queued.insert(e.get()).second) missing.push_back(e);
  const int kBatch = 128;
  for (std::size_t at = 0; at < missing.size(); at += kBatch) {
    std::size_t hi = std::min(missing.size(), at + kBatch);
    std::vector<const EncodedExpr*> batch;
    for (std::size_t i = at; i < hi; ++i) batch.push_back(inputs_->get(missing[i]));
    Tensor out = model_->encoder->encode_batch(batch);  // no tape active: pure forward
    const int d = out.dim(1);
    for (std::size_t i = at; i < hi; ++i) {
      const float* row = out.data() + (i - at) * d;
      rows_.emplace(missing[i], std::vector<float>(row, row + d));
    }
  }
}

const std::vector<float>& EmbeddingCache::get(const Expr& e) const {
  auto it = rows_.find(e);
  if (it == rows_.end())
    throw Error(ErrorCode::internal, "embedding cache miss for " + serialize_functional(e));
  return it->second;
}

// --- paradigm geometry ----------------------------------------------------------------

namespace {

std::vector<float> tensor_row(const Tensor& t) {
  return std::vector<float>(t.vec().begin(), t.vec().end());
}

std::vector<float> op_row(const Model& model, OpKind op) {
  return tensor_row(model.op_encoder->encode(op));
}

// paradigm prediction from an arbitrary premise-side embedding (used both for
// single-step scoring and latent propagation)
std::vector<float> predict_vector(const Model& model, const std::vector<float>& premise,
                                  OpKind op, bool resolved) {
  const int d = static_cast<int>(premise.size());
  if (model.paradigm == Paradigm::translation) {
    Tensor e = Tensor::from_data({1, d}, premise);
    Tensor scaled = model.translation.scale_premise(e, {static_cast<int>(op)});
    std::vector<float> out = tensor_row(scaled);
    if (resolved) {
      auto t = op_row(model, op);
      for (int i = 0; i < d; ++i) out[i] -= t[i];
    }
    return out;
  }
  Tensor t = Tensor::from_data({1, model.op_encoder->dim()}, op_row(model, op));
  Tensor e = Tensor::from_data({1, d}, premise);
  return tensor_row(model.projection.predict(t, e));
}

}  // namespace

std::vector<double> score_candidates(const Model& model, EmbeddingCache& cache,
                                     const Expr& premise, OpKind op,
                                     const std::vector<Expr>& candidates) {
  std::vector<Expr> all{premise};
  all.insert(all.end(), candidates.begin(), candidates.end());
  cache.ensure(all);

  const auto& e_x = cache.get(premise);
  std::vector<double> scores;
  scores.reserve(candidates.size());
  if (model.paradigm == Paradigm::translation) {
    // rank by cos(T o e_x, e_y + t)
    std::vector<float> anchor = predict_vector(model, e_x, op, /*resolved=*/false);
    auto t = op_row(model, op);
    for (const auto& cand : candidates) {
      std::vector<float> target = cache.get(cand);
      for (std::size_t i = 0; i < target.size(); ++i) target[i] += t[i];
      scores.push_back(cosine_of(anchor, target));
    }
  } else {
    // rank by cos(pi(t || e_x), e_y)
    std::vector<float> pred = predict_vector(model, e_x, op, false);
    for (const auto& cand : candidates) scores.push_back(cosine_of(pred, cache.get(cand)));
  }
  return scores;
}

// --- retrieval --------------------------------------------------------------------------

namespace {

struct Accumulator {
  double ap = 0, h1 = 0, h3 = 0;
  int n = 0;
  void add(const std::vector<bool>& ranked) {
    ap += average_precision(ranked);
    h1 += hit_at_k(ranked, 1);
    h3 += hit_at_k(ranked, 3);
    ++n;
  }
  MetricReport report(const std::string& mode, int num_vars = 0) const {
    MetricReport r;
    r.mode = mode;
    r.num_vars = num_vars;
    r.n = n;
    if (n > 0) {
      r.map = 100.0 * ap / n;
      r.hit1 = 100.0 * h1 / n;
      r.hit3 = 100.0 * h3 / n;
    }
    return r;
  }
};

std::vector<bool> ranked_relevance_for(const Model& model, EmbeddingCache& cache,
                                       const EvalInstance& inst) {
  std::vector<Expr> candidates = inst.positives;
  candidates.insert(candidates.end(), inst.negatives.begin(), inst.negatives.end());
  auto scores = score_candidates(model, cache, inst.premise, inst.operation, candidates);
  auto order = rank_order(scores);
  std::vector<bool> ranked(order.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    ranked[i] = order[i] < static_cast<int>(inst.positives.size());
  return ranked;
}

}  // namespace

std::vector<MetricReport> eval_retrieval(const Model& model, InputCache& inputs,
                                         const std::vector<EvalInstance>& instances) {
  EmbeddingCache cache(model, inputs);
  Accumulator cross, intra;
  for (const auto& inst : instances) {
    auto ranked = ranked_relevance_for(model, cache, inst);
    (inst.mode == "cross-op" ? cross : intra).add(ranked);
  }
  return {cross.report("cross-op"), intra.report("intra-op")};
}

std::vector<StepReport> eval_multistep(const Model& model, InputCache& inputs,
                                       const std::vector<MultiStepChain>& chains, int max_steps) {
  EmbeddingCache cache(model, inputs);
  std::vector<double> hits(max_steps, 0);
  std::vector<int> counts(max_steps, 0);
  for (const auto& chain : chains) {
    if (chain.steps.empty()) continue;
    std::vector<Expr> exprs{chain.steps.front().triple.premise};
    for (const auto& s : chain.steps) {
      exprs.push_back(s.triple.conclusion);
      exprs.insert(exprs.end(), s.cross_negatives.begin(), s.cross_negatives.end());
      exprs.insert(exprs.end(), s.intra_negatives.begin(), s.intra_negatives.end());
    }
    cache.ensure(exprs);

    std::vector<float> state = cache.get(chain.steps.front().triple.premise);
    for (std::size_t k = 0; k < chain.steps.size() && k < static_cast<std::size_t>(max_steps);
         ++k) {
      const auto& step = chain.steps[k];
      state = predict_vector(model, state, step.triple.operation, /*resolved=*/true);
      // rank the 5 candidates against the propagated embedding by cosine
      std::vector<Expr> candidates{step.triple.conclusion};
      candidates.insert(candidates.end(), step.cross_negatives.begin(),
                        step.cross_negatives.end());
      candidates.insert(candidates.end(), step.intra_negatives.begin(),
                        step.intra_negatives.end());
      std::vector<double> scores;
      for (const auto& c : candidates) scores.push_back(cosine_of(state, cache.get(c)));
      auto order = rank_order(scores);
      if (order[0] == 0) hits[k] += 1;
      counts[k] += 1;
    }
  }
  std::vector<StepReport> out;
  for (int k = 0; k < max_steps; ++k) {
    StepReport r;
    r.step = k + 1;
    r.n = counts[k];
    r.hit1 = counts[k] ? 100.0 * hits[k] / counts[k] : 0.0;
    out.push_back(r);
  }
  return out;
}

std::vector<SeparationReport> latent_separation(const Model& model, InputCache& inputs,
                                                const std::vector<EvalInstance>& instances) {
  EmbeddingCache cache(model, inputs);
  struct Acc {
    double before = 0, after = 0;
    int n = 0;
  };
  Acc cross, intra;
  for (const auto& inst : instances) {
    std::vector<Expr> all{inst.premise};
    all.insert(all.end(), inst.positives.begin(), inst.positives.end());
    all.insert(all.end(), inst.negatives.begin(), inst.negatives.end());
    cache.ensure(all);
    const auto& e_x = cache.get(inst.premise);

    auto mean_cos = [&](const std::vector<float>& anchor, const std::vector<Expr>& set,
                        bool transformed) {
      double s = 0;
      auto t = op_row(model, inst.operation);
      for (const auto& e : set) {
        std::vector<float> target = cache.get(e);
        if (transformed && model.paradigm == Paradigm::translation)
          for (std::size_t i = 0; i < target.size(); ++i) target[i] += t[i];
        s += cosine_of(anchor, target);
      }
      return s / static_cast<double>(set.size());
    };

    double before = mean_cos(e_x, inst.positives, false) - mean_cos(e_x, inst.negatives, false);
    std::vector<float> anchor = model.paradigm == Paradigm::translation
                                    ? predict_vector(model, e_x, inst.operation, false)
                                    : predict_vector(model, e_x, inst.operation, false);
    double after =
        mean_cos(anchor, inst.positives, true) - mean_cos(anchor, inst.negatives, true);

    Acc& acc = inst.mode == "cross-op" ? cross : intra;
    acc.before += before;
    acc.after += after;
    acc.n += 1;
  }
  auto make = [](const char* mode, const Acc& a) {
    SeparationReport r;
    r.mode = mode;
    r.n = a.n;
    if (a.n) {
      r.before = 100.0 * a.before / a.n;
      r.after = 100.0 * a.after / a.n;
    }
    return r;
  };
  return {make("cross-op", cross), make("intra-op", intra)};
}

std::vector<MetricReport> eval_length_generalisation(const Model& model, InputCache& inputs,
                                                     const std::vector<EvalInstance>& instances) {
  EmbeddingCache cache(model, inputs);
  std::map<std::pair<int, std::string>, Accumulator> groups;
  for (int k = 2; k <= 5; ++k) {
    groups[{k, "cross-op"}];
    groups[{k, "intra-op"}];
  }
  for (const auto& inst : instances) {
    int k = static_cast<int>(free_symbols(inst.premise).size());
    auto ranked = ranked_relevance_for(model, cache, inst);
    groups[{k, inst.mode}].add(ranked);
  }
  std::vector<MetricReport> out;
  for (const auto& [key, acc] : groups) out.push_back(acc.report(key.second, key.first));
  return out;
}

// --- PCA ---------------------------------------------------------------------------------

std::vector<std::pair<double, double>> pca_2d(const std::vector<std::vector<double>>& rows) {
  if (rows.size() < 3)
    throw Error(ErrorCode::invalid_argument, "pca_2d: need at least 3 embeddings");
  const int n = static_cast<int>(rows.size());
  const int d = static_cast<int>(rows[0].size());

  std::vector<double> mean(d, 0);
  for (const auto& r : rows)
    for (int j = 0; j < d; ++j) mean[j] += r[j];
  for (auto& m : mean) m /= n;

  std::vector<std::vector<double>> centered(n, std::vector<double>(d));
  double spread = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) {
      centered[i][j] = rows[i][j] - mean[j];
      spread += centered[i][j] * centered[i][j];
    }
  if (spread < 1e-24)
    throw Error(ErrorCode::invalid_argument, "pca_2d: degenerate covariance (identical points)");

  std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0));
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < d; ++a)
      for (int b = a; b < d; ++b) cov[a][b] += centered[i][a] * centered[i][b];
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) {
      cov[a][b] /= n;
      cov[b][a] = cov[a][b];
    }

  // cyclic Jacobi sweeps
  std::vector<std::vector<double>> v(d, std::vector<double>(d, 0));
  for (int i = 0; i < d; ++i) v[i][i] = 1;
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0;
    for (int p = 0; p < d; ++p)
      for (int q = p + 1; q < d; ++q) off += cov[p][q] * cov[p][q];
    if (off < 1e-22) break;
    for (int p = 0; p < d; ++p)
      for (int q = p + 1; q < d; ++q) {
        if (std::abs(cov[p][q]) < 1e-18) continue;
        double theta = (cov[q][q] - cov[p][p]) / (2 * cov[p][q]);
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        double c = 1.0 / std::sqrt(t * t + 1);
        double s = t * c;
        for (int k = 0; k < d; ++k) {
          double akp = cov[k][p], akq = cov[k][q];
          cov[k][p] = c * akp - s * akq;
          cov[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < d; ++k) {
          double apk = cov[p][k], aqk = cov[q][k];
          cov[p][k] = c * apk - s * aqk;
          cov[q][k] = s * apk + c * aqk;
        }
        for (int k = 0; k < d; ++k) {
          double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
  }

  std::vector<std::pair<double, int>> eig(d);
  for (int i = 0; i < d; ++i) eig[i] = {cov[i][i], i};
  std::stable_sort(eig.begin(), eig.end(), [](const auto& a, const auto& b) {
    return a.first > b.first;
  });
  int c0 = eig[0].second, c1 = d > 1 ? eig[1].second : eig[0].second;

  std::vector<std::pair<double, double>> out(n);
  for (int i = 0; i < n; ++i) {
    double x = 0, y = 0;
    for (int j = 0; j < d; ++j) {
      x += centered[i][j] * v[j][c0];
      y += centered[i][j] * v[j][c1];
    }
    out[i] = {x, y};
  }
  return out;
}

Export2d export_2d(const Model& model, InputCache& inputs,
                   const std::vector<EvalInstance>& instances, int max_instances) {
  EmbeddingCache cache(model, inputs);
  Export2d result;
  std::vector<std::vector<double>> before_rows, after_rows;
  std::vector<std::pair<int, std::string>> meta;

  int used = 0;
  for (const auto& inst : instances) {
    if (used >= max_instances) break;
    std::vector<Expr> all{inst.premise};
    all.insert(all.end(), inst.positives.begin(), inst.positives.end());
    all.insert(all.end(), inst.negatives.begin(), inst.negatives.end());
    cache.ensure(all);

    const auto& e_x = cache.get(inst.premise);
    std::vector<float> anchor = predict_vector(model, e_x, inst.operation, false);
    auto t = op_row(model, inst.operation);
    auto push = [&](const std::vector<float>& raw, const std::string& kind) {
      before_rows.emplace_back(raw.begin(), raw.end());
      std::vector<float> after = raw;
      if (kind == "premise" || kind == "predicted") {
        after = anchor;
      } else if (model.paradigm == Paradigm::translation) {
        for (std::size_t i = 0; i < after.size(); ++i) after[i] += t[i];
      }
      after_rows.emplace_back(after.begin(), after.end());
      meta.emplace_back(used, kind);
    };

    push(e_x, "premise");
    push(anchor, "predicted");
    for (const auto& p : inst.positives) push(cache.get(p), "positive");
    for (const auto& n : inst.negatives) push(cache.get(n), "negative");
    ++used;
  }

  auto before_xy = pca_2d(before_rows);
  auto after_xy = pca_2d(after_rows);
  for (std::size_t i = 0; i < meta.size(); ++i) {
    result.before.push_back({meta[i].first, meta[i].second, before_xy[i].first,
                             before_xy[i].second});
    result.after.push_back({meta[i].first, meta[i].second, after_xy[i].first,
                            after_xy[i].second});
  }
  return result;
}

}  // namespace latentmath
