#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "latentmath/dataset.hpp"
#include "latentmath/expr.hpp"
#include "latentmath/rng.hpp"
#include "latentmath/symbolic.hpp"

namespace latentmath {

// Symbol randomisation parameters. p_r and p_e must be reciprocals of
// positive integers so that 1/p_r - 1 and 1/p_e - 1 are the choice-list
// lengths of the sampling procedure.
struct RandomizationConfig {
  double p_r = 0.5;
  double p_e = 0.25;
  int const_min = 2;
  int const_max = 9;
};

struct PremiseSpec {
  int num_variables = 2;        // within [2,5]
  int construction_steps = 1;   // >= 1
  std::vector<std::string> operator_pool = {"Sum", "Product", "Division",
                                            "cos", "sin", "log", "exp"};
};

struct GenerateConfig {
  std::uint64_t seed = 1;
  Vocabulary vocabulary{{"o", "r", "u", "w", "x", "z"}, 2, 9};
  int premises_train = 2000;
  int premises_dev = 250;
  int premises_test = 450;
  int min_vars = 2;
  int max_vars = 5;
  int construction_steps_min = 1;
  int construction_steps_max = 3;
  std::vector<std::string> operator_pool = {"Sum", "Product", "Division",
                                            "cos", "sin", "log", "exp"};
  double p_r = 0.5;
  double p_e = 0.25;
  int v_size = 4;
  int eval_dev_count = 600;    // per mode
  int eval_test_count = 1200;  // per mode
  int multistep_chains = 400;
  int multistep_max_steps = 6;
};

// Samples symbols and combines them through pool operators for the requested
// number of steps; retries until the free-symbol count matches (at most 50
// attempts, then throws).
Expr build_premise(const PremiseSpec& spec, const Vocabulary& vocab, Rng& rng);

// Algorithm-style symbol randomisation: each free symbol is independently
// replaced (prob p_r) by s^c (prob p_e) or by s*c / s/c (fair coin),
// c uniform in the constant range; substitution is simultaneous.
Expr randomize_premise(const Expr& e, const RandomizationConfig& cfg, Rng& rng);

struct SplitPremise {
  Expr premise;
  int num_vars;
  std::string split;
};

std::vector<DerivationTriple> build_single_step_corpus(const std::vector<SplitPremise>& premises,
                                                       const Vocabulary& vocab, int v_size,
                                                       std::uint64_t seed);

std::vector<MultiStepChain> build_multistep_corpus(const std::vector<SplitPremise>& premises,
                                                   const std::string& source_split,
                                                   const Vocabulary& vocab, int target_chains,
                                                   int max_steps, std::uint64_t seed);

struct EvalBuildStats {
  std::int64_t skipped_insufficient_positives = 0;
  std::int64_t skipped_overlap = 0;
  std::int64_t padded_negative_slots = 0;
  std::int64_t available_cross = 0;
  std::int64_t available_intra = 0;
};

// Builds cross-op and intra-op instances for one split from the corpus and
// samples `count` per mode (or all available, recorded in stats).
std::vector<EvalInstance> build_eval_sets(const std::vector<DerivationTriple>& corpus,
                                          const std::string& split, int count,
                                          std::uint64_t seed, EvalBuildStats* stats = nullptr);

std::vector<DerivationTriple> filter_by_variable_count(const std::vector<DerivationTriple>& corpus,
                                                       int k);

struct GeneratedData {
  std::vector<DerivationTriple> triples;
  std::vector<MultiStepChain> chains;
  std::vector<EvalInstance> eval_dev;
  std::vector<EvalInstance> eval_test;
  DatasetMetadata metadata;
};

GeneratedData generate_all(const GenerateConfig& cfg);

// writes singlestep.jsonl, multistep.jsonl, eval_dev.jsonl, eval_test.jsonl,
// metadata.json into out_dir
void write_generated(const GeneratedData& data, const std::string& out_dir);

}  // namespace latentmath
