#include "latentmath/tokenizer.hpp"

#include <cctype>
#include <fstream>

namespace latentmath {

std::vector<std::string> tokenize_latex(const std::string& text) {
  static const std::vector<std::string> control = {"\\cos", "\\sin", "\\log", "\\exp", "\\frac"};
  static const std::string singles = "+-*/^_(){}=";
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c == ' ' || c == '\t') {
      ++i;
      continue;
    }
    if (c == '\\') {
      bool matched = false;
      for (const auto& cs : control)
        if (text.compare(i, cs.size(), cs) == 0) {
          out.push_back(cs);
          i += cs.size();
          matched = true;
          break;
        }
      if (!matched) {
        // unknown control sequence: consume the whole name as one UNK-ish token
        std::size_t j = i + 1;
        while (j < text.size() && std::isalpha((unsigned char)text[j])) ++j;
        out.push_back(text.substr(i, j - i));
        i = j;
      }
      continue;
    }
    if (std::isdigit((unsigned char)c)) {
      std::size_t j = i;
      while (j < text.size() && std::isdigit((unsigned char)text[j])) ++j;
      out.push_back(text.substr(i, j - i));
      i = j;
      continue;
    }
    if (std::isalpha((unsigned char)c)) {
      out.push_back(std::string(1, c));
      ++i;
      continue;
    }
    if (singles.find(c) != std::string::npos) {
      out.push_back(std::string(1, c));
      ++i;
      continue;
    }
    out.push_back(std::string(1, c));  // anything else becomes its own (likely UNK) token
    ++i;
  }
  return out;
}

TokenVocab::TokenVocab() {
  add("<pad>");
  add("<unk>");
}

void TokenVocab::add(const std::string& token) {
  if (to_id_.count(token)) return;
  to_id_[token] = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
}

TokenVocab TokenVocab::build(const std::vector<std::string>& texts) {
  TokenVocab v;
  for (const auto& t : texts)
    for (const auto& tok : tokenize_latex(t)) v.add(tok);
  return v;
}

int TokenVocab::id(const std::string& token) const {
  auto it = to_id_.find(token);
  return it == to_id_.end() ? kUnk : it->second;
}

std::vector<int> TokenVocab::encode(const std::string& latex) const {
  std::vector<int> out;
  for (const auto& tok : tokenize_latex(latex)) out.push_back(id(tok));
  return out;
}

void TokenVocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& t : tokens_) out << t << "\n";
}

TokenVocab TokenVocab::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  TokenVocab v;
  v.tokens_.clear();
  v.to_id_.clear();
  std::string line;
  while (std::getline(in, line)) v.add(line);
  if (v.size() < 2) throw IoError(path + ": vocabulary missing reserved tokens");
  return v;
}

namespace {

std::string node_label(const Expr& e) {
  switch (e->kind()) {
    case ExprKind::sum: return "Add";
    case ExprKind::product: return "Mul";
    case ExprKind::power: return "Pow";
    case ExprKind::function: return func_name(e->func());
    case ExprKind::symbol: return e->name();
    case ExprKind::constant: {
      const Rat& v = e->value();
      if (v.is_integer())
        return (v.num >= -9 && v.num <= 9) ? std::to_string(v.num) : "INT";
      if (v.num >= -9 && v.num <= 9 && v.den <= 9)
        return std::to_string(v.num) + "/" + std::to_string(v.den);
      return "RAT";
    }
  }
  return "?";
}

int add_nodes(const Expr& e, OperationTree& tree) {
  int self = static_cast<int>(tree.labels.size());
  tree.labels.push_back(node_label(e));
  for (const auto& a : e->args()) {
    int child = add_nodes(a, tree);
    tree.edges.emplace_back(self, child);
  }
  return self;
}

}  // namespace

OperationTree build_operation_tree(const Expr& e) {
  OperationTree tree;
  add_nodes(e, tree);
  return tree;
}

NodeLabelVocab build_node_label_vocab(const std::vector<OperationTree>& trees) {
  NodeLabelVocab v;
  for (const auto& t : trees)
    for (const auto& l : t.labels) v.add(l);
  return v;
}

}  // namespace latentmath
