#include "latentmath/encoders.hpp"

#include <algorithm>
#include <cmath>

namespace latentmath {

int EncoderConfig::resolved_layers() const {
  if (layers > 0) return layers;
  if (family == "gcn" || family == "graphsage" || family == "transformer") return 6;
  if (family == "lstm") return 2;
  return 1;
}

EncodedExpr encode_expr_input(const Expr& e, const TokenVocab& tokens,
                              const NodeLabelVocab& labels) {
  EncodedExpr out;
  out.token_ids = tokens.encode(serialize_latex(e));
  OperationTree tree = build_operation_tree(e);
  for (const auto& l : tree.labels) out.node_ids.push_back(labels.id(l));
  out.edges = std::move(tree.edges);
  return out;
}

Tensor glorot(std::vector<int> shape, Rng& rng) {
  int fan_in = shape.size() == 2 ? shape[1] : shape[0];
  int fan_out = shape[0];
  float limit = std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  std::vector<float> data(n);
  for (auto& v : data) v = static_cast<float>(rng.uniform_real(-limit, limit));
  return Tensor::from_data(std::move(shape), std::move(data), true);
}

Tensor gaussian(std::vector<int> shape, float stddev, Rng& rng) {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  std::vector<float> data(n);
  for (auto& v : data) v = static_cast<float>(rng.normal() * stddev);
  return Tensor::from_data(std::move(shape), std::move(data), true);
}

namespace {

void check_batch(const std::vector<const EncodedExpr*>& batch, bool graph) {
  if (batch.empty()) throw Error(ErrorCode::invalid_argument, "encode_batch: empty batch");
  for (const auto* e : batch) {
    if (!e || (graph ? e->node_ids.empty() : e->token_ids.empty()))
      throw Error(ErrorCode::invalid_argument, "encode_batch: empty input");
  }
}

struct Linear {
  Tensor w;  // [out, in]
  Tensor b;  // [out]
  Linear() = default;
  Linear(int out, int in, Rng& rng) : w(glorot({out, in}, rng)), b(Tensor::zeros({out}, true)) {}
  Tensor apply(const Tensor& x) const { return add_bias(matmul(x, w, false, true), b); }
  void collect(const std::string& prefix, std::vector<std::pair<std::string, Tensor>>& out) {
    out.emplace_back(prefix + ".w", w);
    out.emplace_back(prefix + ".b", b);
  }
};

// --- bag ------------------------------------------------------------------------

class BagEncoder final : public ExpressionEncoder {
 public:
  BagEncoder(EncoderConfig cfg, int vocab, Rng& rng)
      : ExpressionEncoder(std::move(cfg)),
        emb_(gaussian({vocab, config_.embedding_dim}, 0.02f, rng)),
        out_(config_.embedding_dim, config_.embedding_dim, rng) {}

  Tensor encode_batch(const std::vector<const EncodedExpr*>& batch) override {
    check_batch(batch, false);
    std::vector<int> flat, offsets{0};
    for (const auto* e : batch) {
      flat.insert(flat.end(), e->token_ids.begin(), e->token_ids.end());
      offsets.push_back(static_cast<int>(flat.size()));
    }
    Tensor tok = embedding_lookup(emb_, flat);
    return out_.apply(segment_mean(tok, offsets));
  }

  std::vector<std::pair<std::string, Tensor>> named_params() override {
    std::vector<std::pair<std::string, Tensor>> p{{"token_emb", emb_}};
    out_.collect("readout", p);
    return p;
  }

 private:
  Tensor emb_;
  Linear out_;
};

// --- cnn ------------------------------------------------------------------------

class CnnEncoder final : public ExpressionEncoder {
 public:
  CnnEncoder(EncoderConfig cfg, int vocab, Rng& rng)
      : ExpressionEncoder(std::move(cfg)),
        emb_(gaussian({vocab, config_.embedding_dim}, 0.02f, rng)) {
    int total = 0;
    for (auto [width, count] : config_.filters) {
      filters_.push_back(glorot({count, width, config_.embedding_dim}, rng));
      biases_.push_back(Tensor::zeros({count}, true));
      total += count;
    }
    out_ = Linear(config_.embedding_dim, total, rng);
  }

  Tensor encode_batch(const std::vector<const EncodedExpr*>& batch) override {
    check_batch(batch, false);
    const int b = static_cast<int>(batch.size());
    int max_len = 1;
    std::vector<int> lengths(b);
    for (int i = 0; i < b; ++i) {
      lengths[i] = static_cast<int>(batch[i]->token_ids.size());
      max_len = std::max(max_len, lengths[i]);
    }

    std::vector<Tensor> pooled;
    for (std::size_t fi = 0; fi < filters_.size(); ++fi) {
      int width = config_.filters[fi].first;
      // each branch front-pads by width-1 so a window ends at every real token
      int padded = width - 1 + max_len;
      std::vector<int> ids;
      ids.reserve(static_cast<std::size_t>(b) * padded);
      for (int i = 0; i < b; ++i) {
        for (int k = 0; k < width - 1; ++k) ids.push_back(TokenVocab::kPad);
        ids.insert(ids.end(), batch[i]->token_ids.begin(), batch[i]->token_ids.end());
        ids.resize(static_cast<std::size_t>(i + 1) * padded, TokenVocab::kPad);
      }
      Tensor x = reshape(embedding_lookup(emb_, ids), {b, padded, config_.embedding_dim});
      Tensor conv = conv1d(x, filters_[fi], biases_[fi]);  // [b, max_len, count]
      pooled.push_back(max_over_time(relu_t(conv), lengths));
    }
    return out_.apply(concat_cols(pooled));
  }

  std::vector<std::pair<std::string, Tensor>> named_params() override {
    std::vector<std::pair<std::string, Tensor>> p{{"token_emb", emb_}};
    for (std::size_t i = 0; i < filters_.size(); ++i) {
      p.emplace_back("conv" + std::to_string(i) + ".w", filters_[i]);
      p.emplace_back("conv" + std::to_string(i) + ".b", biases_[i]);
    }
    out_.collect("readout", p);
    return p;
  }

 private:
  Tensor emb_;
  std::vector<Tensor> filters_, biases_;
  Linear out_;
};

// --- lstm ------------------------------------------------------------------------

class LstmEncoder final : public ExpressionEncoder {
 public:
  LstmEncoder(EncoderConfig cfg, int vocab, Rng& rng)
      : ExpressionEncoder(std::move(cfg)),
        emb_(gaussian({vocab, config_.embedding_dim}, 0.02f, rng)) {
    int d = config_.embedding_dim;
    for (int l = 0; l < config_.resolved_layers(); ++l) {
      w_ih_.push_back(glorot({4 * d, d}, rng));
      w_hh_.push_back(glorot({4 * d, d}, rng));
      bias_.push_back(Tensor::zeros({4 * d}, true));
    }
    out_ = Linear(d, d, rng);
  }

  Tensor encode_batch(const std::vector<const EncodedExpr*>& batch) override {
    check_batch(batch, false);
    const int b = static_cast<int>(batch.size());
    const int d = config_.embedding_dim;
    int max_len = 1;
    std::vector<int> lengths(b);
    for (int i = 0; i < b; ++i) {
      lengths[i] = static_cast<int>(batch[i]->token_ids.size());
      max_len = std::max(max_len, lengths[i]);
    }

    const int layers = config_.resolved_layers();
    std::vector<Tensor> h(layers), c(layers);
    for (int l = 0; l < layers; ++l) {
      h[l] = Tensor::zeros({b, d});
      c[l] = Tensor::zeros({b, d});
    }

    Tensor last = Tensor::zeros({b, d});
    for (int t = 0; t < max_len; ++t) {
      std::vector<int> ids(b);
      std::vector<float> at_end(b, 0.0f);
      for (int i = 0; i < b; ++i) {
        ids[i] = t < lengths[i] ? batch[i]->token_ids[t] : TokenVocab::kPad;
        at_end[i] = (t == lengths[i] - 1) ? 1.0f : 0.0f;
      }
      Tensor x = embedding_lookup(emb_, ids);
      for (int l = 0; l < layers; ++l) {
        Tensor gates = add_bias(add(matmul(x, w_ih_[l], false, true),
                                    matmul(h[l], w_hh_[l], false, true)),
                                bias_[l]);
        Tensor in_g = sigmoid_t(slice_cols(gates, 0, d));
        Tensor forget_g = sigmoid_t(slice_cols(gates, d, d));
        Tensor cand = tanh_t(slice_cols(gates, 2 * d, d));
        Tensor out_g = sigmoid_t(slice_cols(gates, 3 * d, d));
        c[l] = add(mul(forget_g, c[l]), mul(in_g, cand));
        h[l] = mul(out_g, tanh_t(c[l]));
        x = h[l];
      }
      // keep the top-layer state at each sequence's final real token
      last = add(last, rows_scale(h[layers - 1], Tensor::from_data({b}, at_end)));
    }
    return out_.apply(last);
  }

  std::vector<std::pair<std::string, Tensor>> named_params() override {
    std::vector<std::pair<std::string, Tensor>> p{{"token_emb", emb_}};
    for (std::size_t l = 0; l < w_ih_.size(); ++l) {
      p.emplace_back("lstm" + std::to_string(l) + ".w_ih", w_ih_[l]);
      p.emplace_back("lstm" + std::to_string(l) + ".w_hh", w_hh_[l]);
      p.emplace_back("lstm" + std::to_string(l) + ".bias", bias_[l]);
    }
    out_.collect("readout", p);
    return p;
  }

 private:
  Tensor emb_;
  std::vector<Tensor> w_ih_, w_hh_, bias_;
  Linear out_;
};

// --- transformer -----------------------------------------------------------------

class TransformerEncoder final : public ExpressionEncoder {
 public:
  TransformerEncoder(EncoderConfig cfg, int vocab, Rng& rng)
      : ExpressionEncoder(std::move(cfg)),
        emb_(gaussian({vocab, config_.embedding_dim}, 0.02f, rng)) {
    int d = config_.embedding_dim;
    if (d % config_.heads != 0)
      throw ConfigError("embedding_dim must be divisible by the head count");
    for (int l = 0; l < config_.resolved_layers(); ++l) {
      Block blk;
      blk.q = Linear(d, d, rng);
      blk.k = Linear(d, d, rng);
      blk.v = Linear(d, d, rng);
      blk.o = Linear(d, d, rng);
      blk.ff1 = Linear(4 * d, d, rng);
      blk.ff2 = Linear(d, 4 * d, rng);
      blk.ln1_g = Tensor::full({d}, 1.0f, true);
      blk.ln1_b = Tensor::zeros({d}, true);
      blk.ln2_g = Tensor::full({d}, 1.0f, true);
      blk.ln2_b = Tensor::zeros({d}, true);
      blocks_.push_back(std::move(blk));
    }
    out_ = Linear(d, d, rng);
  }

  Tensor encode_batch(const std::vector<const EncodedExpr*>& batch) override {
    check_batch(batch, false);
    const int b = static_cast<int>(batch.size());
    const int d = config_.embedding_dim;
    const int heads = config_.heads;
    const int dh = d / heads;
    int max_len = 1;
    std::vector<int> lengths(b);
    for (int i = 0; i < b; ++i) {
      lengths[i] = static_cast<int>(batch[i]->token_ids.size());
      max_len = std::max(max_len, lengths[i]);
    }
    const int t = max_len;

    std::vector<int> ids;
    ids.reserve(static_cast<std::size_t>(b) * t);
    for (int i = 0; i < b; ++i) {
      ids.insert(ids.end(), batch[i]->token_ids.begin(), batch[i]->token_ids.end());
      ids.resize(static_cast<std::size_t>(i + 1) * t, TokenVocab::kPad);
    }

    Tensor x = add(embedding_lookup(emb_, ids), positional(b, t, d));  // [b*t, d]

    // additive attention mask: -1e9 on PAD keys, replicated per head
    std::vector<float> mask(static_cast<std::size_t>(b) * t * t, 0.0f);
    for (int i = 0; i < b; ++i)
      for (int q = 0; q < t; ++q)
        for (int k = lengths[i]; k < t; ++k)
          mask[(static_cast<std::size_t>(i) * t + q) * t + k] = -1e9f;
    Tensor mask_t = Tensor::from_data({b, t, t}, std::move(mask));

    const float inv_sqrt_dh = 1.0f / std::sqrt(static_cast<float>(dh));
    for (auto& blk : blocks_) {
      Tensor q = blk.q.apply(x), k = blk.k.apply(x), v = blk.v.apply(x);
      std::vector<Tensor> ctx;
      for (int hi = 0; hi < heads; ++hi) {
        Tensor qh = reshape(slice_cols(q, hi * dh, dh), {b, t, dh});
        Tensor kh = reshape(slice_cols(k, hi * dh, dh), {b, t, dh});
        Tensor vh = reshape(slice_cols(v, hi * dh, dh), {b, t, dh});
        Tensor scores = add(scale(bmm(qh, kh, true), inv_sqrt_dh), mask_t);
        Tensor attn = softmax_last(scores);
        ctx.push_back(reshape(bmm(attn, vh), {b * t, dh}));
      }
      Tensor attn_out = blk.o.apply(concat_cols(ctx));
      x = layer_norm_last(add(x, attn_out), blk.ln1_g, blk.ln1_b);
      Tensor ff = blk.ff2.apply(relu_t(blk.ff1.apply(x)));
      x = layer_norm_last(add(x, ff), blk.ln2_g, blk.ln2_b);
    }

    Tensor pooled = masked_mean_time(reshape(x, {b, t, d}), lengths);
    return out_.apply(pooled);
  }

  std::vector<std::pair<std::string, Tensor>> named_params() override {
    std::vector<std::pair<std::string, Tensor>> p{{"token_emb", emb_}};
    for (std::size_t l = 0; l < blocks_.size(); ++l) {
      auto& blk = blocks_[l];
      std::string pre = "block" + std::to_string(l);
      blk.q.collect(pre + ".q", p);
      blk.k.collect(pre + ".k", p);
      blk.v.collect(pre + ".v", p);
      blk.o.collect(pre + ".o", p);
      blk.ff1.collect(pre + ".ff1", p);
      blk.ff2.collect(pre + ".ff2", p);
      p.emplace_back(pre + ".ln1.g", blk.ln1_g);
      p.emplace_back(pre + ".ln1.b", blk.ln1_b);
      p.emplace_back(pre + ".ln2.g", blk.ln2_g);
      p.emplace_back(pre + ".ln2.b", blk.ln2_b);
    }
    out_.collect("readout", p);
    return p;
  }

 private:
  struct Block {
    Linear q, k, v, o, ff1, ff2;
    Tensor ln1_g, ln1_b, ln2_g, ln2_b;
  };

  Tensor positional(int b, int t, int d) {
    std::vector<float> pos(static_cast<std::size_t>(b) * t * d);
    for (int p = 0; p < t; ++p)
      for (int i = 0; i < d; ++i) {
        double angle = p / std::pow(10000.0, (2.0 * (i / 2)) / d);
        float v = static_cast<float>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
        for (int bi = 0; bi < b; ++bi) pos[(static_cast<std::size_t>(bi) * t + p) * d + i] = v;
      }
    return Tensor::from_data({b * t, d}, std::move(pos));
  }

  Tensor emb_;
  std::vector<Block> blocks_;
  Linear out_;
};

// --- graph encoders ---------------------------------------------------------------

// block-diagonal normalized adjacency over a batch of trees (undirected)
std::shared_ptr<const CsrPair> batch_adjacency(const std::vector<const EncodedExpr*>& batch,
                                               bool self_loops, bool symmetric_norm,
                                               std::vector<int>& offsets) {
  offsets.assign(1, 0);
  int total = 0;
  for (const auto* e : batch) {
    total += static_cast<int>(e->node_ids.size());
    offsets.push_back(total);
  }
  std::vector<std::vector<int>> adj(total);
  for (std::size_t gi = 0; gi < batch.size(); ++gi) {
    int base = offsets[gi];
    for (auto [p, c] : batch[gi]->edges) {
      adj[base + p].push_back(base + c);
      adj[base + c].push_back(base + p);
    }
    if (self_loops)
      for (int n = 0; n < offsets[gi + 1] - base; ++n) adj[base + n].push_back(base + n);
  }
  for (auto& row : adj) std::sort(row.begin(), row.end());

  Csr m;
  m.rows = total;
  m.cols = total;
  m.indptr.push_back(0);
  for (int r = 0; r < total; ++r) {
    for (int c : adj[r]) {
      m.indices.push_back(c);
      float v;
      if (symmetric_norm)
        v = 1.0f / std::sqrt(static_cast<float>(adj[r].size()) * adj[c].size());
      else
        v = 1.0f / static_cast<float>(adj[r].size());
      m.values.push_back(v);
    }
    m.indptr.push_back(static_cast<int>(m.indices.size()));
  }
  return std::make_shared<const CsrPair>(make_csr_pair(std::move(m)));
}

class GcnEncoder final : public ExpressionEncoder {
 public:
  GcnEncoder(EncoderConfig cfg, int label_vocab, Rng& rng)
      : ExpressionEncoder(std::move(cfg)),
        emb_(gaussian({label_vocab, config_.embedding_dim}, 0.02f, rng)) {
    int d = config_.embedding_dim;
    for (int l = 0; l < config_.resolved_layers(); ++l) layers_.emplace_back(d, d, rng);
    out_ = Linear(d, d, rng);
  }

  Tensor encode_batch(const std::vector<const EncodedExpr*>& batch) override {
    check_batch(batch, true);
    std::vector<int> flat, offsets;
    for (const auto* e : batch) flat.insert(flat.end(), e->node_ids.begin(), e->node_ids.end());
    auto adj = batch_adjacency(batch, /*self_loops=*/true, /*symmetric_norm=*/true, offsets);
    Tensor x = embedding_lookup(emb_, flat);
    for (auto& lin : layers_) x = relu_t(lin.apply(spmm(adj, x)));
    return out_.apply(segment_mean(x, offsets));
  }

  std::vector<std::pair<std::string, Tensor>> named_params() override {
    std::vector<std::pair<std::string, Tensor>> p{{"label_emb", emb_}};
    for (std::size_t l = 0; l < layers_.size(); ++l)
      layers_[l].collect("gcn" + std::to_string(l), p);
    out_.collect("readout", p);
    return p;
  }

 private:
  Tensor emb_;
  std::vector<Linear> layers_;
  Linear out_;
};

class SageEncoder final : public ExpressionEncoder {
 public:
  SageEncoder(EncoderConfig cfg, int label_vocab, Rng& rng)
      : ExpressionEncoder(std::move(cfg)),
        emb_(gaussian({label_vocab, config_.embedding_dim}, 0.02f, rng)) {
    int d = config_.embedding_dim;
    for (int l = 0; l < config_.resolved_layers(); ++l) layers_.emplace_back(d, 2 * d, rng);
    out_ = Linear(d, d, rng);
  }

  Tensor encode_batch(const std::vector<const EncodedExpr*>& batch) override {
    check_batch(batch, true);
    std::vector<int> flat, offsets;
    for (const auto* e : batch) flat.insert(flat.end(), e->node_ids.begin(), e->node_ids.end());
    auto adj = batch_adjacency(batch, /*self_loops=*/false, /*symmetric_norm=*/false, offsets);
    Tensor x = embedding_lookup(emb_, flat);
    for (auto& lin : layers_) {
      Tensor neigh = spmm(adj, x);  // row-normalized neighbor mean
      x = relu_t(lin.apply(concat_cols({x, neigh})));
    }
    return out_.apply(segment_mean(x, offsets));
  }

  std::vector<std::pair<std::string, Tensor>> named_params() override {
    std::vector<std::pair<std::string, Tensor>> p{{"label_emb", emb_}};
    for (std::size_t l = 0; l < layers_.size(); ++l)
      layers_[l].collect("sage" + std::to_string(l), p);
    out_.collect("readout", p);
    return p;
  }

 private:
  Tensor emb_;
  std::vector<Linear> layers_;
  Linear out_;
};

}  // namespace

std::unique_ptr<ExpressionEncoder> make_encoder(const EncoderConfig& cfg, int token_vocab_size,
                                                int label_vocab_size, Rng& rng) {
  if (cfg.embedding_dim <= 0) throw ConfigError("embedding_dim must be positive");
  if (cfg.family == "bag") return std::make_unique<BagEncoder>(cfg, token_vocab_size, rng);
  if (cfg.family == "cnn") return std::make_unique<CnnEncoder>(cfg, token_vocab_size, rng);
  if (cfg.family == "lstm") return std::make_unique<LstmEncoder>(cfg, token_vocab_size, rng);
  if (cfg.family == "transformer")
    return std::make_unique<TransformerEncoder>(cfg, token_vocab_size, rng);
  if (cfg.family == "gcn") return std::make_unique<GcnEncoder>(cfg, label_vocab_size, rng);
  if (cfg.family == "graphsage") return std::make_unique<SageEncoder>(cfg, label_vocab_size, rng);
  throw ConfigError("unknown encoder family '" + cfg.family + "'");
}

OperationEncoder::OperationEncoder(Mode mode, int dim, Rng& rng) : mode_(mode), dim_(dim) {
  if (mode_ == Mode::one_hot) {
    std::vector<float> eye(kNumOps * kNumOps, 0.0f);
    for (int i = 0; i < kNumOps; ++i) eye[i * kNumOps + i] = 1.0f;
    table_ = Tensor::from_data({kNumOps, kNumOps}, std::move(eye), false);
  } else {
    table_ = gaussian({kNumOps, dim_}, 0.02f, rng);
  }
}

Tensor OperationEncoder::encode(OpKind op) const {
  return reshape(embedding_lookup(table_, {static_cast<int>(op)}), {dim()});
}

Tensor OperationEncoder::encode_batch(const std::vector<int>& op_ids) const {
  for (int id : op_ids)
    if (id < 0 || id >= kNumOps)
      throw Error(ErrorCode::invalid_argument, "operation id out of range");
  return embedding_lookup(table_, op_ids);
}

}  // namespace latentmath
