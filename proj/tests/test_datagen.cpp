#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <unordered_set>

#include "latentmath/datagen.hpp"
#include "latentmath/dataset.hpp"

using namespace latentmath;

namespace {

GenerateConfig small_config(std::uint64_t seed = 42) {
  GenerateConfig cfg;
  cfg.seed = seed;
  cfg.premises_train = 60;
  cfg.premises_dev = 25;
  cfg.premises_test = 40;
  cfg.eval_dev_count = 40;
  cfg.eval_test_count = 60;
  cfg.multistep_chains = 20;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("build_premise hits the requested variable count") {
  Vocabulary vocab{{"o", "r", "u", "w", "x", "z"}, 2, 9};
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    PremiseSpec spec;
    spec.num_variables = 2 + static_cast<int>(rng.uniform(4));
    spec.construction_steps = 1 + static_cast<int>(rng.uniform(3));
    Expr e = build_premise(spec, vocab, rng);
    REQUIRE(static_cast<int>(free_symbols(e).size()) == spec.num_variables);
  }
}

TEST_CASE("build_premise forced case: two symbols, one step, Sum pool") {
  Vocabulary vocab{{"x", "y"}, 2, 9};
  PremiseSpec spec;
  spec.num_variables = 2;
  spec.construction_steps = 1;
  spec.operator_pool = {"Sum"};
  Rng rng(1);
  Expr e = build_premise(spec, vocab, rng);
  CHECK(serialize_functional(e) == "Add(Symbol('x'), Symbol('y'))");
}

TEST_CASE("randomize_premise") {
  Expr e = add(make_symbol("x"), make_symbol("y"));

  SUBCASE("p_r at the no-replacement limit leaves the premise unchanged") {
    RandomizationConfig cfg;
    cfg.p_r = 1.0 / 1000000.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
      Rng rng(s);
      CHECK(expr_equal(randomize_premise(e, cfg, rng), e));
    }
  }

  SUBCASE("p_r = p_e = 1 exponentiates every symbol") {
    RandomizationConfig cfg;
    cfg.p_r = 1.0;
    cfg.p_e = 1.0;
    Rng rng(3);
    Expr r = randomize_premise(e, cfg, rng);
    // x^a + y^b with a, b in {2..9}
    REQUIRE(r->kind() == ExprKind::sum);
    REQUIRE(r->args().size() == 2);
    for (const auto& t : r->args()) {
      REQUIRE(t->kind() == ExprKind::power);
      CHECK(t->base()->kind() == ExprKind::symbol);
      REQUIRE(t->exponent()->kind() == ExprKind::constant);
      CHECK(t->exponent()->value().num >= 2);
      CHECK(t->exponent()->value().num <= 9);
    }
  }

  SUBCASE("replacement frequency matches p_r = 0.5 over 10000 symbols") {
    RandomizationConfig cfg;  // p_r = 0.5
    Rng rng(99);
    Expr single = make_symbol("x");
    int replaced = 0;
    for (int i = 0; i < 10000; ++i) {
      Expr r = randomize_premise(single, cfg, rng);
      if (!expr_equal(r, single)) ++replaced;
    }
    double freq = replaced / 10000.0;
    CHECK(freq > 0.48);
    CHECK(freq < 0.52);
  }

  SUBCASE("invalid rates are rejected") {
    RandomizationConfig cfg;
    cfg.p_r = 0.4;  // not a reciprocal of an integer
    Rng rng(1);
    CHECK_THROWS_AS(randomize_premise(e, cfg, rng), ConfigError);
  }
}

TEST_CASE("single-step corpus validity and structure") {
  auto cfg = small_config();
  auto data = generate_all(cfg);

  REQUIRE(!data.triples.empty());
  // every emitted triple re-validates against apply_operation
  std::unordered_set<Expr, ExprHash, ExprEq> train_premises, other_premises;
  for (const auto& t : data.triples) {
    auto r = try_apply_operation(t.premise, t.operation, t.operand);
    REQUIRE(r.has_value());
    REQUIRE(expr_equal(*r, t.conclusion));
    REQUIRE(!expr_equal(t.premise, t.conclusion));
    REQUIRE(static_cast<int>(free_symbols(t.premise).size()) == t.num_premise_vars);
    if (t.split == "train")
      train_premises.insert(t.premise);
    else
      other_premises.insert(t.premise);
  }
  // split hygiene: no canonical premise in more than one split
  for (const auto& p : train_premises) CHECK(other_premises.find(p) == other_premises.end());

  // at most 24 triples per premise, counts match the premise totals
  std::unordered_map<Expr, int, ExprHash, ExprEq> per_premise;
  for (const auto& t : data.triples) per_premise[t.premise]++;
  CHECK(per_premise.size() == 125);  // 60 + 25 + 40
  for (const auto& [p, n] : per_premise) CHECK(n <= 24);
}

TEST_CASE("eval instances satisfy the structural invariants") {
  auto cfg = small_config();
  auto data = generate_all(cfg);

  // corpus lookup: premise -> op -> distinct conclusions
  std::unordered_map<Expr, std::vector<std::unordered_set<Expr, ExprHash, ExprEq>>, ExprHash,
                     ExprEq>
      lookup;
  for (const auto& t : data.triples) {
    auto& slot = lookup[t.premise];
    if (slot.empty()) slot.resize(kNumOps);
    slot[static_cast<int>(t.operation)].insert(t.conclusion);
  }

  auto check_set = [&](const std::vector<EvalInstance>& instances) {
    for (const auto& inst : instances) {
      REQUIRE(inst.positives.size() == 4);
      REQUIRE(inst.negatives.size() == 20);
      // positives distinct and disjoint from negatives
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = i + 1; j < 4; ++j)
          REQUIRE(!expr_equal(inst.positives[i], inst.positives[j]));
      for (const auto& p : inst.positives)
        for (const auto& n : inst.negatives) REQUIRE(!expr_equal(p, n));

      auto& slot = lookup[inst.premise];
      REQUIRE(!slot.empty());
      int op = static_cast<int>(inst.operation);
      for (const auto& p : inst.positives) REQUIRE(slot[op].count(p) == 1);

      if (inst.mode == "cross-op") {
        // negatives derive from the same premise under the 5 other operations
        for (const auto& n : inst.negatives) {
          bool found = false;
          for (int other = 0; other < kNumOps && !found; ++other)
            if (other != op && slot[other].count(n)) found = true;
          REQUIRE(found);
        }
      } else {
        REQUIRE(inst.mode == "intra-op");
        // negatives derive from other premises under the same operation
        for (const auto& n : inst.negatives) {
          REQUIRE(!lookup[inst.premise][op].count(n));
          bool found = false;
          for (const auto& [prem, ops] : lookup) {
            if (expr_equal(prem, inst.premise)) continue;
            if (ops[op].count(n)) {
              found = true;
              break;
            }
          }
          REQUIRE(found);
        }
      }
    }
  };
  check_set(data.eval_dev);
  check_set(data.eval_test);

  int cross = 0, intra = 0;
  for (const auto& i : data.eval_dev) (i.mode == "cross-op" ? cross : intra)++;
  CHECK(cross > 10);
  CHECK(intra > 10);
}

TEST_CASE("multi-step chains are consistent") {
  auto cfg = small_config();
  auto data = generate_all(cfg);
  REQUIRE(!data.chains.empty());
  for (const auto& chain : data.chains) {
    REQUIRE(chain.steps.size() >= 2);
    REQUIRE(chain.steps.size() <= 6);
    for (std::size_t k = 0; k < chain.steps.size(); ++k) {
      const auto& s = chain.steps[k];
      if (k > 0) REQUIRE(expr_equal(s.triple.premise, chain.steps[k - 1].triple.conclusion));
      auto r = try_apply_operation(s.triple.premise, s.triple.operation, s.triple.operand);
      REQUIRE(r.has_value());
      REQUIRE(expr_equal(*r, s.triple.conclusion));
      REQUIRE(s.cross_negatives.size() == 2);
      REQUIRE(s.intra_negatives.size() == 2);
      // the 5 candidates are pairwise distinct
      std::vector<Expr> all{s.triple.conclusion};
      all.insert(all.end(), s.cross_negatives.begin(), s.cross_negatives.end());
      all.insert(all.end(), s.intra_negatives.begin(), s.intra_negatives.end());
      for (std::size_t i = 0; i < all.size(); ++i)
        for (std::size_t j = i + 1; j < all.size(); ++j)
          REQUIRE(!expr_equal(all[i], all[j]));
    }
  }
}

TEST_CASE("filter_by_variable_count partitions the corpus") {
  auto cfg = small_config();
  auto data = generate_all(cfg);
  std::size_t total = 0;
  for (int k = 2; k <= 5; ++k) {
    auto part = filter_by_variable_count(data.triples, k);
    for (const auto& t : part) CHECK(t.num_premise_vars == k);
    total += part.size();
  }
  CHECK(total == data.triples.size());
}

TEST_CASE("identical seeds produce byte-identical dataset files") {
  namespace fs = std::filesystem;
  auto cfg = small_config(1234);
  fs::path dir1 = fs::temp_directory_path() / "latentmath_gen_a";
  fs::path dir2 = fs::temp_directory_path() / "latentmath_gen_b";
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  write_generated(generate_all(cfg), dir1.string());
  write_generated(generate_all(cfg), dir2.string());
  for (const char* name : {"singlestep.jsonl", "multistep.jsonl", "eval_dev.jsonl",
                           "eval_test.jsonl", "metadata.json"}) {
    CHECK(slurp((dir1 / name).string()) == slurp((dir2 / name).string()));
  }
  // and a different seed changes the data
  auto cfg2 = small_config(77);
  fs::path dir3 = fs::temp_directory_path() / "latentmath_gen_c";
  fs::remove_all(dir3);
  write_generated(generate_all(cfg2), dir3.string());
  CHECK(slurp((dir1 / "singlestep.jsonl").string()) !=
        slurp((dir3 / "singlestep.jsonl").string()));
}

TEST_CASE("dataset files round-trip") {
  namespace fs = std::filesystem;
  auto cfg = small_config(5);
  auto data = generate_all(cfg);
  fs::path dir = fs::temp_directory_path() / "latentmath_gen_rt";
  fs::remove_all(dir);
  write_generated(data, dir.string());

  auto triples = read_single_step((dir / "singlestep.jsonl").string());
  REQUIRE(triples.size() == data.triples.size());
  for (std::size_t i = 0; i < triples.size(); ++i) {
    CHECK(expr_equal(triples[i].premise, data.triples[i].premise));
    CHECK(expr_equal(triples[i].conclusion, data.triples[i].conclusion));
    CHECK(triples[i].operation == data.triples[i].operation);
    CHECK(triples[i].split == data.triples[i].split);
  }
  auto chains = read_multi_step((dir / "multistep.jsonl").string());
  REQUIRE(chains.size() == data.chains.size());
  auto eval = read_eval_instances((dir / "eval_dev.jsonl").string());
  REQUIRE(eval.size() == data.eval_dev.size());
  auto meta = read_metadata((dir / "metadata.json").string());
  CHECK(meta.seed == 5);
  CHECK(meta.vocabulary == cfg.vocabulary.names);
}
