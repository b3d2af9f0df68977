#pragma once

#include <memory>
#include <string>
#include <vector>

#include "latentmath/encoders.hpp"
#include "latentmath/heads.hpp"

namespace latentmath {

struct TrainConfig {
  int epochs = 10;
  int batch_size = 64;
  float learning_rate = 1e-4f;
  float tau = 20.0f;  // similarity scale of the contrastive objective
  std::uint64_t seed = 1;
  std::string paradigm = "translation";  // projection-onehot | projection-dense | translation
  EncoderConfig encoder;
  float grad_clip = 1.0f;
  float adam_beta1 = 0.9f;
  float adam_beta2 = 0.999f;
  float adam_eps = 1e-8f;
  bool shared_translation_diag = false;
  int train_num_vars = 0;  // 0 = all; k restricts training premises to k variables
  std::string resume_checkpoint;

  void validate() const;
};

// expression encoder + operation encoder + paradigm head
struct Model {
  Paradigm paradigm = Paradigm::translation;
  std::unique_ptr<ExpressionEncoder> encoder;
  std::unique_ptr<OperationEncoder> op_encoder;
  ProjectionHead projection;
  TranslationHead translation;

  std::vector<std::pair<std::string, Tensor>> named_params() const;
  std::vector<Tensor> params() const;
  int dim() const { return encoder->config().embedding_dim; }
};

Model build_model(const TrainConfig& cfg, int token_vocab_size, int label_vocab_size);

struct EpochMetrics {
  int epoch = 0;
  double loss = 0;
  double dev_cross_map = 0;
  double dev_intra_map = 0;
  double avg_map = 0;
};

// everything needed to reload and run a trained model
struct ModelBundle {
  TrainConfig config;
  TokenVocab token_vocab;
  NodeLabelVocab label_vocab;
  Model model;
  int epoch = 0;
  std::vector<EpochMetrics> history;
};

void save_bundle(const std::string& path, const ModelBundle& bundle);
ModelBundle load_bundle(const std::string& path);

// deep copy of parameter values (shapes must match)
void copy_params_into(const Model& src, Model& dst);

}  // namespace latentmath
