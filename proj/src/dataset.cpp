#include "latentmath/dataset.hpp"

#include <fstream>

#include <json.hpp>

namespace latentmath {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  return in;
}

OpKind op_of(const json& j) {
  auto op = op_from_name(j.get<std::string>());
  if (!op) throw IoError("unknown operation '" + j.get<std::string>() + "'");
  return *op;
}

json triple_json(const DerivationTriple& t) {
  return json{{"premise_latex", serialize_latex(t.premise)},
              {"premise_fn", serialize_functional(t.premise)},
              {"operation", op_name(t.operation)},
              {"operand", t.operand},
              {"conclusion_latex", serialize_latex(t.conclusion)},
              {"conclusion_fn", serialize_functional(t.conclusion)},
              {"num_premise_vars", t.num_premise_vars},
              {"split", t.split},
              {"flags", t.flags}};
}

DerivationTriple triple_from(const json& j) {
  DerivationTriple t;
  t.premise = parse_functional(j.at("premise_fn").get<std::string>());
  t.operation = op_of(j.at("operation"));
  t.operand = j.at("operand").get<std::string>();
  t.conclusion = parse_functional(j.at("conclusion_fn").get<std::string>());
  t.num_premise_vars = j.at("num_premise_vars").get<int>();
  t.split = j.at("split").get<std::string>();
  if (j.contains("flags")) t.flags = j.at("flags").get<std::vector<std::string>>();
  return t;
}

}  // namespace

void write_single_step(const std::string& path, const std::vector<DerivationTriple>& triples) {
  auto out = open_out(path);
  for (const auto& t : triples) out << triple_json(t).dump() << "\n";
}

std::vector<DerivationTriple> read_single_step(const std::string& path) {
  auto in = open_in(path);
  std::vector<DerivationTriple> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(triple_from(json::parse(line)));
  }
  return out;
}

void write_multi_step(const std::string& path, const std::vector<MultiStepChain>& chains) {
  auto out = open_out(path);
  for (const auto& chain : chains)
    for (std::size_t k = 0; k < chain.steps.size(); ++k) {
      const auto& step = chain.steps[k];
      json j = triple_json(step.triple);
      j["chain_id"] = chain.chain_id;
      j["step_index"] = static_cast<int>(k + 1);
      json cross = json::array(), intra = json::array();
      for (const auto& e : step.cross_negatives) cross.push_back(serialize_functional(e));
      for (const auto& e : step.intra_negatives) intra.push_back(serialize_functional(e));
      j["neg_cross_fn"] = cross;
      j["neg_intra_fn"] = intra;
      out << j.dump() << "\n";
    }
}

std::vector<MultiStepChain> read_multi_step(const std::string& path) {
  auto in = open_in(path);
  std::map<int, MultiStepChain> by_id;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    ChainStep step;
    step.triple = triple_from(j);
    for (const auto& s : j.at("neg_cross_fn")) step.cross_negatives.push_back(parse_functional(s.get<std::string>()));
    for (const auto& s : j.at("neg_intra_fn")) step.intra_negatives.push_back(parse_functional(s.get<std::string>()));
    int id = j.at("chain_id").get<int>();
    int index = j.at("step_index").get<int>();
    auto& chain = by_id[id];
    chain.chain_id = id;
    if (static_cast<int>(chain.steps.size()) + 1 != index)
      throw IoError(path + ": chain " + std::to_string(id) + " has out-of-order steps");
    chain.steps.push_back(std::move(step));
  }
  std::vector<MultiStepChain> out;
  out.reserve(by_id.size());
  for (auto& [id, chain] : by_id) out.push_back(std::move(chain));
  return out;
}

void write_eval_instances(const std::string& path, const std::vector<EvalInstance>& instances) {
  auto out = open_out(path);
  for (const auto& inst : instances) {
    json pos = json::array(), neg = json::array();
    for (const auto& e : inst.positives) pos.push_back(serialize_functional(e));
    for (const auto& e : inst.negatives) neg.push_back(serialize_functional(e));
    json j{{"premise_fn", serialize_functional(inst.premise)},
           {"operation", op_name(inst.operation)},
           {"mode", inst.mode},
           {"positives_fn", pos},
           {"negatives_fn", neg}};
    out << j.dump() << "\n";
  }
}

std::vector<EvalInstance> read_eval_instances(const std::string& path) {
  auto in = open_in(path);
  std::vector<EvalInstance> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    EvalInstance inst;
    inst.premise = parse_functional(j.at("premise_fn").get<std::string>());
    inst.operation = op_of(j.at("operation"));
    inst.mode = j.at("mode").get<std::string>();
    for (const auto& s : j.at("positives_fn")) inst.positives.push_back(parse_functional(s.get<std::string>()));
    for (const auto& s : j.at("negatives_fn")) inst.negatives.push_back(parse_functional(s.get<std::string>()));
    out.push_back(std::move(inst));
  }
  return out;
}

void write_metadata(const std::string& path, const DatasetMetadata& meta) {
  auto out = open_out(path);
  json j{{"seed", meta.seed},
         {"p_r", meta.p_r},
         {"p_e", meta.p_e},
         {"vocabulary", meta.vocabulary},
         {"counts", meta.counts}};
  out << j.dump(2) << "\n";
}

DatasetMetadata read_metadata(const std::string& path) {
  auto in = open_in(path);
  json j = json::parse(in);
  DatasetMetadata meta;
  meta.seed = j.at("seed").get<std::uint64_t>();
  meta.p_r = j.at("p_r").get<double>();
  meta.p_e = j.at("p_e").get<double>();
  meta.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
  if (j.contains("counts"))
    meta.counts = j.at("counts").get<std::map<std::string, std::int64_t>>();
  return meta;
}

}  // namespace latentmath
