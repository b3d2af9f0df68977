#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "latentmath/expr.hpp"
#include "latentmath/symbolic.hpp"

namespace latentmath {

// one atomic derivation step; the unit of training data
struct DerivationTriple {
  Expr premise;
  OpKind operation;
  std::string operand;
  Expr conclusion;
  int num_premise_vars = 0;
  std::string split;               // train | dev | test
  std::vector<std::string> flags;  // e.g. integration_shortfall
};

// candidates attached to one chain step: the true conclusion plus
// 2 cross-operational and 2 intra-operational negatives
struct ChainStep {
  DerivationTriple triple;
  std::vector<Expr> cross_negatives;
  std::vector<Expr> intra_negatives;
};

struct MultiStepChain {
  int chain_id = 0;
  std::vector<ChainStep> steps;  // step k premise == step k-1 conclusion
};

struct EvalInstance {
  Expr premise;
  OpKind operation;
  std::string mode;  // cross-op | intra-op
  std::vector<Expr> positives;  // 4
  std::vector<Expr> negatives;  // 20
};

struct DatasetMetadata {
  std::uint64_t seed = 0;
  double p_r = 0.5;
  double p_e = 0.25;
  std::vector<std::string> vocabulary;
  std::map<std::string, std::int64_t> counts;
};

// line-delimited JSON records; byte-identical for identical inputs
void write_single_step(const std::string& path, const std::vector<DerivationTriple>& triples);
std::vector<DerivationTriple> read_single_step(const std::string& path);

void write_multi_step(const std::string& path, const std::vector<MultiStepChain>& chains);
std::vector<MultiStepChain> read_multi_step(const std::string& path);

void write_eval_instances(const std::string& path, const std::vector<EvalInstance>& instances);
std::vector<EvalInstance> read_eval_instances(const std::string& path);

void write_metadata(const std::string& path, const DatasetMetadata& meta);
DatasetMetadata read_metadata(const std::string& path);

}  // namespace latentmath
