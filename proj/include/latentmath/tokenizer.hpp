#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "latentmath/expr.hpp"

namespace latentmath {

// Greedy longest-match tokenizer over the LaTeX surface form: control
// sequences, single letters, digit runs, and the operator/bracket set.
std::vector<std::string> tokenize_latex(const std::string& text);

// token <-> id map with reserved PAD=0 and UNK=1; frozen after building
class TokenVocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  TokenVocab();
  static TokenVocab build(const std::vector<std::string>& texts);

  int id(const std::string& token) const;
  std::vector<int> encode(const std::string& latex) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  void add(const std::string& token);  // building only
  // token-per-line, id = line number
  void save(const std::string& path) const;
  static TokenVocab load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> to_id_;
};

// expression AST as a labeled tree; node order is the pre-order walk
struct OperationTree {
  std::vector<std::string> labels;
  std::vector<std::pair<int, int>> edges;  // parent -> child
};

OperationTree build_operation_tree(const Expr& e);

// label <-> id map for graph encoders; same reserved ids and file format
using NodeLabelVocab = TokenVocab;

NodeLabelVocab build_node_label_vocab(const std::vector<OperationTree>& trees);

}  // namespace latentmath
