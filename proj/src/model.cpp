#include "latentmath/model.hpp"

#include <json.hpp>

#include "latentmath/checkpoint.hpp"

namespace latentmath {

using nlohmann::json;

void TrainConfig::validate() const {
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2 for in-batch negatives");
  if (tau <= 0) throw ConfigError("tau must be positive");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (learning_rate <= 0) throw ConfigError("learning_rate must be positive");
  paradigm_from_name(paradigm);
  if (encoder.embedding_dim <= 0) throw ConfigError("embedding_dim must be positive");
  if (train_num_vars != 0 && (train_num_vars < 2 || train_num_vars > 5))
    throw ConfigError("train_num_vars must be 0 or within [2,5]");
}

std::vector<std::pair<std::string, Tensor>> Model::named_params() const {
  std::vector<std::pair<std::string, Tensor>> out;
  for (auto& [name, t] : encoder->named_params()) out.emplace_back("encoder." + name, t);
  if (op_encoder->mode() == OperationEncoder::Mode::dense)
    out.emplace_back("op_encoder.table", op_encoder->table());
  if (paradigm == Paradigm::translation) {
    out.emplace_back("head.diag", translation.diag);
  } else {
    out.emplace_back("head.weight", projection.weight);
    out.emplace_back("head.bias", projection.bias);
  }
  return out;
}

std::vector<Tensor> Model::params() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_params()) out.push_back(t);
  return out;
}

Model build_model(const TrainConfig& cfg, int token_vocab_size, int label_vocab_size) {
  cfg.validate();
  Model m;
  m.paradigm = paradigm_from_name(cfg.paradigm);
  Rng rng(cfg.seed ^ 0xabcdef1234ULL);
  m.encoder = make_encoder(cfg.encoder, token_vocab_size, label_vocab_size, rng);
  const int d = cfg.encoder.embedding_dim;
  if (m.paradigm == Paradigm::projection_onehot) {
    m.op_encoder = std::make_unique<OperationEncoder>(OperationEncoder::Mode::one_hot, d, rng);
    m.projection = ProjectionHead(d, kNumOps, rng);
  } else if (m.paradigm == Paradigm::projection_dense) {
    m.op_encoder = std::make_unique<OperationEncoder>(OperationEncoder::Mode::dense, d, rng);
    m.projection = ProjectionHead(d, d, rng);
  } else {
    // translation requires operation embeddings of the expression dimension
    m.op_encoder = std::make_unique<OperationEncoder>(OperationEncoder::Mode::dense, d, rng);
    m.translation = TranslationHead(d, cfg.shared_translation_diag);
  }
  return m;
}

namespace {

json config_json(const TrainConfig& cfg) {
  json j;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["learning_rate"] = cfg.learning_rate;
  j["tau"] = cfg.tau;
  j["seed"] = cfg.seed;
  j["paradigm"] = cfg.paradigm;
  j["grad_clip"] = cfg.grad_clip;
  j["adam_beta1"] = cfg.adam_beta1;
  j["adam_beta2"] = cfg.adam_beta2;
  j["adam_eps"] = cfg.adam_eps;
  j["shared_translation_diag"] = cfg.shared_translation_diag;
  j["train_num_vars"] = cfg.train_num_vars;
  j["encoder"] = {{"family", cfg.encoder.family},
                  {"embedding_dim", cfg.encoder.embedding_dim},
                  {"layers", cfg.encoder.layers},
                  {"heads", cfg.encoder.heads}};
  json filters = json::array();
  for (auto [w, c] : cfg.encoder.filters) filters.push_back({w, c});
  j["encoder"]["filters"] = std::move(filters);
  return j;
}

TrainConfig config_from_json(const json& j) {
  TrainConfig cfg;
  cfg.epochs = j.at("epochs").get<int>();
  cfg.batch_size = j.at("batch_size").get<int>();
  cfg.learning_rate = j.at("learning_rate").get<float>();
  cfg.tau = j.at("tau").get<float>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.paradigm = j.at("paradigm").get<std::string>();
  cfg.grad_clip = j.at("grad_clip").get<float>();
  cfg.adam_beta1 = j.at("adam_beta1").get<float>();
  cfg.adam_beta2 = j.at("adam_beta2").get<float>();
  cfg.adam_eps = j.at("adam_eps").get<float>();
  cfg.shared_translation_diag = j.at("shared_translation_diag").get<bool>();
  cfg.train_num_vars = j.value("train_num_vars", 0);
  const auto& e = j.at("encoder");
  cfg.encoder.family = e.at("family").get<std::string>();
  cfg.encoder.embedding_dim = e.at("embedding_dim").get<int>();
  cfg.encoder.layers = e.at("layers").get<int>();
  cfg.encoder.heads = e.at("heads").get<int>();
  cfg.encoder.filters.clear();
  for (const auto& f : e.at("filters"))
    cfg.encoder.filters.emplace_back(f[0].get<int>(), f[1].get<int>());
  return cfg;
}

}  // namespace

void save_bundle(const std::string& path, const ModelBundle& bundle) {
  Checkpoint ckpt;
  for (auto& [name, t] : bundle.model.named_params()) ckpt.tensors.emplace(name, t);

  json meta;
  meta["config"] = config_json(bundle.config);
  meta["epoch"] = bundle.epoch;
  meta["token_vocab"] = bundle.token_vocab.tokens();
  meta["label_vocab"] = bundle.label_vocab.tokens();
  json hist = json::array();
  for (const auto& h : bundle.history)
    hist.push_back({{"epoch", h.epoch},
                    {"loss", h.loss},
                    {"dev_cross_map", h.dev_cross_map},
                    {"dev_intra_map", h.dev_intra_map},
                    {"avg_map", h.avg_map}});
  meta["history"] = std::move(hist);
  ckpt.meta_json = meta.dump();
  save_checkpoint(path, ckpt);
}

ModelBundle load_bundle(const std::string& path) {
  Checkpoint ckpt = load_checkpoint(path);
  json meta = json::parse(ckpt.meta_json);

  ModelBundle bundle;
  bundle.config = config_from_json(meta.at("config"));
  bundle.epoch = meta.at("epoch").get<int>();
  for (const auto& h : meta.at("history")) {
    EpochMetrics m;
    m.epoch = h.at("epoch").get<int>();
    m.loss = h.at("loss").get<double>();
    m.dev_cross_map = h.at("dev_cross_map").get<double>();
    m.dev_intra_map = h.at("dev_intra_map").get<double>();
    m.avg_map = h.at("avg_map").get<double>();
    bundle.history.push_back(m);
  }

  TokenVocab tv;
  for (const auto& t : meta.at("token_vocab")) {
    std::string tok = t.get<std::string>();
    tv.add(tok);
  }
  // reserved ids are re-added first by the constructor; verify alignment
  if (tv.tokens() != meta.at("token_vocab").get<std::vector<std::string>>())
    throw IoError(path + ": token vocabulary does not start with the reserved ids");
  bundle.token_vocab = tv;

  NodeLabelVocab lv;
  for (const auto& t : meta.at("label_vocab")) lv.add(t.get<std::string>());
  if (lv.tokens() != meta.at("label_vocab").get<std::vector<std::string>>())
    throw IoError(path + ": label vocabulary does not start with the reserved ids");
  bundle.label_vocab = lv;

  bundle.model = build_model(bundle.config, bundle.token_vocab.size(), bundle.label_vocab.size());
  for (auto& [name, t] : bundle.model.named_params()) {
    auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end()) throw IoError(path + ": checkpoint missing tensor " + name);
    if (it->second.shape() != t.shape())
      throw ShapeError(path + ": tensor " + name + " has mismatched shape");
    std::copy(it->second.vec().begin(), it->second.vec().end(), t.vec().begin());
  }
  return bundle;
}

void copy_params_into(const Model& src, Model& dst) {
  auto a = src.named_params();
  auto b = dst.named_params();
  if (a.size() != b.size()) throw ShapeError("copy_params_into: parameter lists differ");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].second.shape() != b[i].second.shape())
      throw ShapeError("copy_params_into: shape mismatch at " + a[i].first);
    std::copy(a[i].second.vec().begin(), a[i].second.vec().end(), b[i].second.vec().begin());
  }
}

}  // namespace latentmath
