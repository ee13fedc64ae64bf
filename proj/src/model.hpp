#pragma once

#include <string>
#include <utility>
#include <vector>

#include "checkpoint.hpp"
#include "encoder.hpp"

namespace unidial {

struct ModelConfig {
  EncoderConfig enc;
  std::size_t patch = 8;
  std::size_t channels = 3;
  std::size_t vocab = 0;  // filled from the corpus vocabulary
};

// All trainable state of the unified encoder: embedding tables, the patch
// projection, the transformer stack and the tied-output bias.
class Model {
 public:
  Model(ModelConfig cfg, Rng& rng);

  const ModelConfig& config() const { return cfg_; }
  EmbeddingTables& tables() { return tables_; }
  const EmbeddingTables& tables() const { return tables_; }
  PatchEmbedConfig& patch() { return patch_; }
  const PatchEmbedConfig& patch() const { return patch_; }
  std::vector<LayerWeights>& layers() { return layers_; }
  const std::vector<LayerWeights>& layers() const { return layers_; }
  Tensor& lm_bias() { return lm_bias_; }
  const Tensor& lm_bias() const { return lm_bias_; }
  const Tensor& embed_ln_gain() const { return embed_ln_gain_; }
  const Tensor& embed_ln_bias() const { return embed_ln_bias_; }

  // Embedding-sum layer norm + dropout, applied before the first block.
  Tensor embed_norm(const Tensor& rows, bool training, Rng& rng) const;

  std::vector<std::pair<std::string, Tensor>> named_parameters() const;
  std::vector<Tensor> parameters() const;
  std::size_t parameter_count() const;
  std::size_t patch_parameter_count() const;  // brute-force scalar count
  void zero_grads() const;

  // Rebinds one parameter handle (shape-checked). Copies of a Model share
  // tensor storage; rebinding on a copy leaves the original untouched.
  void set_parameter(const std::string& name, Tensor t);

  void write_checkpoint(Checkpoint& ck) const;
  // Shapes must match the constructed config exactly.
  void read_checkpoint(const Checkpoint& ck);

 private:
  template <typename Fn>
  void for_each_parameter(Fn&& fn);

  ModelConfig cfg_;
  EmbeddingTables tables_;
  PatchEmbedConfig patch_;
  std::vector<LayerWeights> layers_;
  Tensor lm_bias_;
  Tensor embed_ln_gain_, embed_ln_bias_;
};

}  // namespace unidial
