#pragma once

#include <memory>
#include <string>
#include <vector>

#include "latentmath/rng.hpp"
#include "latentmath/symbolic.hpp"
#include "latentmath/tensor.hpp"
#include "latentmath/tokenizer.hpp"

namespace latentmath {

struct EncoderConfig {
  std::string family = "lstm";  // gcn | graphsage | cnn | lstm | transformer | bag
  int embedding_dim = 64;
  int layers = 0;  // 0 picks the family default: gcn/graphsage 6, lstm 2, transformer 6
  int heads = 6;   // transformer only
  std::vector<std::pair<int, int>> filters = {{3, 100}, {4, 100}, {5, 100}};  // cnn only

  int resolved_layers() const;
};

// per-expression encoder input, cached once per dataset expression
struct EncodedExpr {
  std::vector<int> token_ids;  // sequence families
  std::vector<int> node_ids;   // graph families, pre-order
  std::vector<std::pair<int, int>> edges;
};

EncodedExpr encode_expr_input(const Expr& e, const TokenVocab& tokens,
                              const NodeLabelVocab& labels);

class ExpressionEncoder {
 public:
  virtual ~ExpressionEncoder() = default;
  // [B, d]; throws Error(invalid_argument) on an empty batch or empty input
  virtual Tensor encode_batch(const std::vector<const EncodedExpr*>& batch) = 0;
  virtual std::vector<std::pair<std::string, Tensor>> named_params() = 0;
  const EncoderConfig& config() const { return config_; }

 protected:
  explicit ExpressionEncoder(EncoderConfig cfg) : config_(std::move(cfg)) {}
  EncoderConfig config_;
};

std::unique_ptr<ExpressionEncoder> make_encoder(const EncoderConfig& cfg, int token_vocab_size,
                                                int label_vocab_size, Rng& rng);

// lookup-table operation encoder; one-hot rows are exact basis vectors and
// carry no gradient, dense rows are learned
class OperationEncoder {
 public:
  enum class Mode { one_hot, dense };

  OperationEncoder(Mode mode, int dim, Rng& rng);

  Mode mode() const { return mode_; }
  int dim() const { return mode_ == Mode::one_hot ? kNumOps : dim_; }
  Tensor& table() { return table_; }
  const Tensor& table() const { return table_; }

  Tensor encode(OpKind op) const;                       // [dim]
  Tensor encode_batch(const std::vector<int>& op_ids) const;  // [B, dim]

 private:
  Mode mode_;
  int dim_;
  Tensor table_;
};

// init helpers shared across modules
Tensor glorot(std::vector<int> shape, Rng& rng);
Tensor gaussian(std::vector<int> shape, float stddev, Rng& rng);

}  // namespace latentmath
