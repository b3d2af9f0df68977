#include "latentmath/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <unordered_map>
#include <unordered_set>

namespace latentmath {

namespace {

// substream tags so the phases draw from independent streams
constexpr std::uint64_t kPhasePremise = 1ULL << 40;
constexpr std::uint64_t kPhaseCorpus = 2ULL << 40;
constexpr std::uint64_t kPhaseChains = 3ULL << 40;
constexpr std::uint64_t kPhaseEval = 4ULL << 40;

int reciprocal_minus_one(double p, const char* name) {
  if (p <= 0.0 || p > 1.0)
    throw ConfigError(std::string(name) + " must be in (0,1], got " + std::to_string(p));
  double inv = 1.0 / p;
  double rounded = std::round(inv);
  if (std::abs(inv - rounded) > 1e-9)
    throw ConfigError(std::string(name) + " must be the reciprocal of a positive integer, got " +
                      std::to_string(p));
  return static_cast<int>(rounded) - 1;
}

bool is_unary_name(const std::string& s) {
  return s == "cos" || s == "sin" || s == "log" || s == "exp";
}

FuncKind func_of_name(const std::string& s) {
  if (s == "cos") return FuncKind::cos;
  if (s == "sin") return FuncKind::sin;
  if (s == "log") return FuncKind::log;
  return FuncKind::exp;
}

}  // namespace

Expr build_premise(const PremiseSpec& spec, const Vocabulary& vocab, Rng& rng) {
  if (static_cast<int>(vocab.names.size()) < spec.num_variables)
    throw ConfigError("vocabulary has fewer names than num_variables");
  std::vector<std::string> combiners, unaries;
  for (const auto& op : spec.operator_pool)
    (is_unary_name(op) ? unaries : combiners).push_back(op);
  if (combiners.empty())
    throw ConfigError("operator pool needs at least one of Sum/Product/Division");

  for (int attempt = 0; attempt < 50; ++attempt) {
    auto idx = rng.sample_indices(vocab.names.size(), spec.num_variables);
    std::vector<std::string> names;
    for (auto i : idx) names.push_back(vocab.names[i]);

    auto combine = [&](const std::string& op, std::vector<Expr> parts) -> Expr {
      if (op == "Sum") return make_sum(std::move(parts));
      if (op == "Product") return make_product(std::move(parts));
      // Division: first over the product of the rest
      std::vector<Expr> den(parts.begin() + 1, parts.end());
      Expr d = den.size() == 1 ? den[0] : make_product(std::move(den));
      return div(parts[0], d);
    };

    std::vector<Expr> leaves;
    for (const auto& n : names) leaves.push_back(make_symbol(n));
    Expr e = spec.num_variables == 1 ? leaves[0]
                                     : combine(rng.pick(combiners), leaves);

    for (int step = 1; step < spec.construction_steps; ++step) {
      const std::string& op = rng.pick(spec.operator_pool);
      if (is_unary_name(op)) {
        e = make_function(func_of_name(op), e);
      } else {
        Expr s = make_symbol(names[rng.uniform(names.size())]);
        e = combine(op, {e, s});
      }
    }

    if (static_cast<int>(free_symbols(e).size()) == spec.num_variables) return e;
  }
  throw Error(ErrorCode::invalid_argument,
              "build_premise: 50 attempts failed to hit the variable count");
}

Expr randomize_premise(const Expr& e, const RandomizationConfig& cfg, Rng& rng) {
  const int p = reciprocal_minus_one(cfg.p_r, "p_r");
  const int p_c = reciprocal_minus_one(cfg.p_e, "p_e");
  std::map<std::string, Expr> subs;
  for (const auto& name : free_symbols(e)) {  // std::set: deterministic order
    // random.choice([0]*p + [1])
    bool replace = rng.uniform(static_cast<std::uint64_t>(p) + 1) == static_cast<std::uint64_t>(p);
    if (!replace) continue;
    bool exponentiate =
        rng.uniform(static_cast<std::uint64_t>(p_c) + 1) == static_cast<std::uint64_t>(p_c);
    std::int64_t c = rng.uniform_int(cfg.const_min, cfg.const_max);
    Expr s = make_symbol(name);
    if (!exponentiate) {
      if (rng.uniform(2) == 0)
        subs[name] = mul(s, make_int(c));
      else
        subs[name] = div(s, make_int(c));
    } else {
      c = rng.uniform_int(cfg.const_min, cfg.const_max);  // the algorithm redraws here
      subs[name] = make_power(s, make_int(c));
    }
  }
  if (subs.empty()) return e;
  return substitute(e, subs);
}

std::vector<DerivationTriple> build_single_step_corpus(const std::vector<SplitPremise>& premises,
                                                       const Vocabulary& vocab, int v_size,
                                                       std::uint64_t seed) {
  if (v_size < 4) throw ConfigError("v_size must be >= 4");
  std::vector<DerivationTriple> out;
  for (std::size_t pi = 0; pi < premises.size(); ++pi) {
    const auto& sp = premises[pi];
    Rng rng = Rng::substream(seed, kPhaseCorpus + pi);
    auto idx = rng.sample_indices(vocab.names.size(), v_size);
    std::vector<std::string> operands;
    for (auto i : idx) operands.push_back(vocab.names[i]);

    for (int opi = 0; opi < kNumOps; ++opi) {
      OpKind op = static_cast<OpKind>(opi);
      std::unordered_set<Expr, ExprHash, ExprEq> seen;
      std::vector<std::string> flags;
      for (const auto& v : operands) {
        std::string operand = v;
        auto r = try_apply_operation(sp.premise, op, operand);
        if (!r && op == OpKind::integration) {
          // resample the operand for integration failures
          std::unordered_set<std::string> used(operands.begin(), operands.end());
          for (int tries = 0; tries < 10 && !r; ++tries) {
            operand = vocab.names[rng.uniform(vocab.names.size())];
            if (!used.insert(operand).second) continue;
            r = try_apply_operation(sp.premise, op, operand);
          }
        }
        if (!r) {
          flags.push_back("integration_shortfall");
          continue;
        }
        if (expr_equal(*r, sp.premise)) {
          flags.push_back("identity_conclusion");
          continue;
        }
        if (!seen.insert(*r).second) continue;  // canonical duplicate
        DerivationTriple t;
        t.premise = sp.premise;
        t.operation = op;
        t.operand = operand;
        t.conclusion = std::move(*r);
        t.num_premise_vars = sp.num_vars;
        t.split = sp.split;
        t.flags = flags;
        out.push_back(std::move(t));
        flags.clear();
      }
    }
  }
  return out;
}

std::vector<MultiStepChain> build_multistep_corpus(const std::vector<SplitPremise>& premises,
                                                   const std::string& source_split,
                                                   const Vocabulary& vocab, int target_chains,
                                                   int max_steps, std::uint64_t seed) {
  std::vector<const SplitPremise*> pool;
  for (const auto& p : premises)
    if (p.split == source_split) pool.push_back(&p);
  if (pool.empty()) throw ConfigError("no premises in split '" + source_split + "'");

  std::vector<MultiStepChain> chains;
  Rng order_rng = Rng::substream(seed, kPhaseChains);
  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  order_rng.shuffle(order);

  int chain_id = 0;
  for (std::size_t oi = 0; oi < order.size() && chain_id < target_chains; ++oi) {
    Rng rng = Rng::substream(seed, kPhaseChains + 1 + oi);
    const SplitPremise& start = *pool[order[oi]];
    MultiStepChain chain;
    chain.chain_id = chain_id;
    Expr current = start.premise;

    for (int k = 0; k < max_steps; ++k) {
      bool made_step = false;
      for (int tries = 0; tries < 10 && !made_step; ++tries) {
        OpKind op = static_cast<OpKind>(rng.uniform(kNumOps));
        std::string operand = vocab.names[rng.uniform(vocab.names.size())];
        auto r = try_apply_operation(current, op, operand);
        if (!r || expr_equal(*r, current)) continue;

        // candidates: 1 positive + 2 cross-op + 2 intra-op negatives, distinct
        std::vector<Expr> all{*r};
        auto distinct = [&](const Expr& e) {
          for (const auto& x : all)
            if (expr_equal(x, e)) return false;
          return true;
        };
        std::vector<Expr> cross, intra;
        for (int ct = 0; ct < 30 && cross.size() < 2; ++ct) {
          OpKind op2 = static_cast<OpKind>(rng.uniform(kNumOps));
          if (op2 == op) continue;
          std::string v2 = vocab.names[rng.uniform(vocab.names.size())];
          auto n = try_apply_operation(current, op2, v2);
          if (!n || !distinct(*n)) continue;
          cross.push_back(*n);
          all.push_back(*n);
        }
        for (int it = 0; it < 30 && intra.size() < 2; ++it) {
          const SplitPremise& other = *pool[rng.uniform(pool.size())];
          if (expr_equal(other.premise, start.premise)) continue;
          std::string v2 = vocab.names[rng.uniform(vocab.names.size())];
          auto n = try_apply_operation(other.premise, op, v2);
          if (!n || !distinct(*n)) continue;
          intra.push_back(*n);
          all.push_back(*n);
        }
        if (cross.size() < 2 || intra.size() < 2) continue;

        ChainStep step;
        step.triple.premise = current;
        step.triple.operation = op;
        step.triple.operand = operand;
        step.triple.conclusion = *r;
        step.triple.num_premise_vars = start.num_vars;
        step.triple.split = source_split;
        step.cross_negatives = std::move(cross);
        step.intra_negatives = std::move(intra);
        chain.steps.push_back(std::move(step));
        current = *r;
        made_step = true;
      }
      if (!made_step) break;  // stuck: truncate
    }

    if (chain.steps.size() >= 2) {
      chains.push_back(std::move(chain));
      ++chain_id;
    }
  }
  return chains;
}

namespace {

struct PremiseGroup {
  Expr premise;
  int num_vars = 0;
  // per operation: conclusions in operand order (already deduplicated)
  std::vector<std::vector<Expr>> by_op = std::vector<std::vector<Expr>>(kNumOps);
};

}  // namespace

std::vector<EvalInstance> build_eval_sets(const std::vector<DerivationTriple>& corpus,
                                          const std::string& split, int count,
                                          std::uint64_t seed, EvalBuildStats* stats) {
  // group triples of the split by canonical premise, preserving first-seen order
  std::vector<PremiseGroup> groups;
  std::unordered_map<Expr, std::size_t, ExprHash, ExprEq> index;
  for (const auto& t : corpus) {
    if (t.split != split) continue;
    auto [it, inserted] = index.emplace(t.premise, groups.size());
    if (inserted) {
      groups.emplace_back();
      groups.back().premise = t.premise;
      groups.back().num_vars = t.num_premise_vars;
    }
    groups[it->second].by_op[static_cast<int>(t.operation)].push_back(t.conclusion);
  }

  EvalBuildStats local;
  EvalBuildStats& st = stats ? *stats : local;

  auto contains = [](const std::vector<Expr>& xs, const Expr& e) {
    for (const auto& x : xs)
      if (expr_equal(x, e)) return true;
    return false;
  };

  // Four negative slots per operation; an operation with fewer than four
  // distinct conclusions fills its slots cyclically (the source pipeline kept
  // duplicate conclusions, e.g. repeated zero derivatives).
  auto fill_slots = [&st](const std::vector<Expr>& pool, std::vector<Expr>& out) {
    for (int i = 0; i < 4; ++i) out.push_back(pool[i % pool.size()]);
    if (pool.size() < 4) st.padded_negative_slots += static_cast<std::int64_t>(4 - pool.size());
  };

  // premises usable as intra-op negative sources, per operation
  std::vector<std::vector<std::size_t>> intra_sources(kNumOps);
  for (std::size_t gi = 0; gi < groups.size(); ++gi)
    for (int op = 0; op < kNumOps; ++op)
      if (!groups[gi].by_op[op].empty()) intra_sources[op].push_back(gi);

  Rng rng = Rng::substream(seed, kPhaseEval + std::hash<std::string>()(split));
  std::vector<EvalInstance> cross, intra;

  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& g = groups[gi];
    for (int op = 0; op < kNumOps; ++op) {
      if (g.by_op[op].size() < 4) {
        ++st.skipped_insufficient_positives;
        continue;
      }
      std::vector<Expr> positives(g.by_op[op].begin(), g.by_op[op].begin() + 4);

      // cross-op: 4 slots from each of the 5 other operations on the same premise
      bool ok = true;
      std::vector<Expr> negatives;
      for (int other = 0; other < kNumOps && ok; ++other) {
        if (other == op) continue;
        if (g.by_op[other].empty()) {
          ok = false;
          break;
        }
        fill_slots(g.by_op[other], negatives);
      }
      for (const auto& n : negatives)
        if (contains(positives, n)) {
          ok = false;
          break;
        }
      if (ok) {
        cross.push_back({g.premise, static_cast<OpKind>(op), "cross-op", positives, negatives});
      } else {
        ++st.skipped_overlap;
      }

      // intra-op: 4 slots from each of 5 distinct other premises, same operation
      const auto& sources = intra_sources[op];
      if (sources.size() >= 6) {
        bool built = false;
        for (int attempt = 0; attempt < 20 && !built; ++attempt) {
          auto pick = rng.sample_indices(sources.size(), 6);  // headroom to skip self
          std::vector<Expr> negs;
          int used = 0;
          bool overlap = false;
          for (auto si : pick) {
            if (sources[si] == gi) continue;
            if (used == 5) break;
            fill_slots(groups[sources[si]].by_op[op], negs);
            ++used;
          }
          for (const auto& n : negs)
            if (contains(positives, n)) overlap = true;
          if (used == 5 && !overlap) {
            intra.push_back(
                {g.premise, static_cast<OpKind>(op), "intra-op", positives, std::move(negs)});
            built = true;
          }
        }
        if (!built) ++st.skipped_overlap;
      }
    }
  }

  st.available_cross = static_cast<std::int64_t>(cross.size());
  st.available_intra = static_cast<std::int64_t>(intra.size());

  rng.shuffle(cross);
  rng.shuffle(intra);
  if (static_cast<int>(cross.size()) > count) cross.resize(count);
  if (static_cast<int>(intra.size()) > count) intra.resize(count);

  std::vector<EvalInstance> out;
  out.reserve(cross.size() + intra.size());
  for (auto& i : cross) out.push_back(std::move(i));
  for (auto& i : intra) out.push_back(std::move(i));
  return out;
}

std::vector<DerivationTriple> filter_by_variable_count(const std::vector<DerivationTriple>& corpus,
                                                       int k) {
  std::vector<DerivationTriple> out;
  for (const auto& t : corpus)
    if (t.num_premise_vars == k) out.push_back(t);
  return out;
}

GeneratedData generate_all(const GenerateConfig& cfg) {
  if (cfg.vocabulary.names.empty()) throw ConfigError("empty vocabulary");
  if (cfg.min_vars < 2 || cfg.max_vars > 5 || cfg.min_vars > cfg.max_vars)
    throw ConfigError("variable counts must satisfy 2 <= min <= max <= 5");
  RandomizationConfig rcfg{cfg.p_r, cfg.p_e, cfg.vocabulary.const_min, cfg.vocabulary.const_max};
  reciprocal_minus_one(cfg.p_r, "p_r");
  reciprocal_minus_one(cfg.p_e, "p_e");

  GeneratedData data;
  std::vector<SplitPremise> premises;
  std::unordered_set<Expr, ExprHash, ExprEq> seen;

  std::uint64_t premise_index = 0;
  std::int64_t retry_exhausted = 0;
  auto make_split = [&](const std::string& split, int want) {
    int made = 0;
    std::int64_t attempts = 0;
    const std::int64_t cap = static_cast<std::int64_t>(want) * 64 + 1000;
    while (made < want && attempts < cap) {
      ++attempts;
      Rng rng = Rng::substream(cfg.seed, kPhasePremise + premise_index++);
      PremiseSpec spec;
      spec.num_variables = static_cast<int>(rng.uniform_int(cfg.min_vars, cfg.max_vars));
      spec.construction_steps = static_cast<int>(
          rng.uniform_int(cfg.construction_steps_min, cfg.construction_steps_max));
      spec.operator_pool = cfg.operator_pool;
      Expr e;
      try {
        e = build_premise(spec, cfg.vocabulary, rng);
        e = randomize_premise(e, rcfg, rng);
      } catch (const Error&) {
        ++retry_exhausted;
        continue;
      }
      if (static_cast<int>(free_symbols(e).size()) != spec.num_variables) continue;
      if (!seen.insert(e).second) continue;  // canonical dedup across all splits
      premises.push_back({e, spec.num_variables, split});
      ++made;
    }
    if (made < want)
      throw Error(ErrorCode::internal, "premise generation exhausted for split " + split);
  };
  make_split("train", cfg.premises_train);
  make_split("dev", cfg.premises_dev);
  make_split("test", cfg.premises_test);

  data.triples = build_single_step_corpus(premises, cfg.vocabulary, cfg.v_size, cfg.seed);
  data.chains = build_multistep_corpus(premises, "test", cfg.vocabulary, cfg.multistep_chains,
                                       cfg.multistep_max_steps, cfg.seed);
  EvalBuildStats dev_stats, test_stats;
  data.eval_dev = build_eval_sets(data.triples, "dev", cfg.eval_dev_count, cfg.seed, &dev_stats);
  data.eval_test =
      build_eval_sets(data.triples, "test", cfg.eval_test_count, cfg.seed, &test_stats);

  data.metadata.seed = cfg.seed;
  data.metadata.p_r = cfg.p_r;
  data.metadata.p_e = cfg.p_e;
  data.metadata.vocabulary = cfg.vocabulary.names;
  auto& counts = data.metadata.counts;
  counts["premises_train"] = cfg.premises_train;
  counts["premises_dev"] = cfg.premises_dev;
  counts["premises_test"] = cfg.premises_test;
  counts["triples"] = static_cast<std::int64_t>(data.triples.size());
  counts["chains"] = static_cast<std::int64_t>(data.chains.size());
  counts["eval_dev"] = static_cast<std::int64_t>(data.eval_dev.size());
  counts["eval_test"] = static_cast<std::int64_t>(data.eval_test.size());
  counts["eval_dev_available_cross"] = dev_stats.available_cross;
  counts["eval_dev_available_intra"] = dev_stats.available_intra;
  counts["eval_test_available_cross"] = test_stats.available_cross;
  counts["eval_test_available_intra"] = test_stats.available_intra;
  counts["eval_skipped_insufficient_positives"] =
      dev_stats.skipped_insufficient_positives + test_stats.skipped_insufficient_positives;
  counts["eval_skipped_overlap"] = dev_stats.skipped_overlap + test_stats.skipped_overlap;
  counts["eval_padded_negative_slots"] =
      dev_stats.padded_negative_slots + test_stats.padded_negative_slots;
  counts["premise_retry_exhausted"] = retry_exhausted;
  return data;
}

void write_generated(const GeneratedData& data, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_single_step(out_dir + "/singlestep.jsonl", data.triples);
  write_multi_step(out_dir + "/multistep.jsonl", data.chains);
  write_eval_instances(out_dir + "/eval_dev.jsonl", data.eval_dev);
  write_eval_instances(out_dir + "/eval_test.jsonl", data.eval_test);
  write_metadata(out_dir + "/metadata.json", data.metadata);
}

}  // namespace latentmath
