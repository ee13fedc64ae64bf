#include "model.hpp"

namespace unidial {

namespace {

constexpr double kInitStd = 0.02;

Tensor init_normal(Shape shape, Rng& rng) {
  std::vector<double> d(shape_size(shape));
  for (auto& v : d) v = kInitStd * rng.normal();
  return Tensor::from_data(std::move(shape), std::move(d),
                           /*requires_grad=*/true);
}

}  // namespace

Model::Model(ModelConfig cfg, Rng& rng) : cfg_(cfg) {
  if (cfg_.vocab < static_cast<std::size_t>(Vocab::kReservedCount)) {
    throw ParamError("Model: vocab size " + std::to_string(cfg_.vocab) +
                     " smaller than the reserved token set");
  }
  if (cfg_.enc.dim == 0 || cfg_.enc.heads == 0 ||
      cfg_.enc.dim % cfg_.enc.heads != 0) {
    throw ParamError("Model: hidden dim must be a positive multiple of heads");
  }
  const std::size_t d = cfg_.enc.dim;
  tables_.word = init_normal({cfg_.vocab, d}, rng);
  tables_.position = init_normal({cfg_.enc.max_len, d}, rng);
  tables_.segment = init_normal({2, d}, rng);

  patch_.patch = cfg_.patch;
  patch_.channels = cfg_.channels;
  patch_.dim = d;
  patch_.weight = init_normal({cfg_.patch * cfg_.patch * cfg_.channels, d}, rng);
  patch_.bias = Tensor::zeros({d}, true);

  layers_.reserve(cfg_.enc.layers);
  for (std::size_t i = 0; i < cfg_.enc.layers; ++i) {
    LayerWeights w;
    w.wq = init_normal({d, d}, rng);
    w.bq = Tensor::zeros({d}, true);
    w.wk = init_normal({d, d}, rng);
    w.wv = init_normal({d, d}, rng);
    w.bv = Tensor::zeros({d}, true);
    w.wo = init_normal({d, d}, rng);
    w.bo = Tensor::zeros({d}, true);
    w.ln1_gain = Tensor::full({d}, 1.0, true);
    w.ln1_bias = Tensor::zeros({d}, true);
    w.fc1_w = init_normal({d, cfg_.enc.ffn}, rng);
    w.fc1_b = Tensor::zeros({cfg_.enc.ffn}, true);
    w.fc2_w = init_normal({cfg_.enc.ffn, d}, rng);
    w.fc2_b = Tensor::zeros({d}, true);
    w.ln2_gain = Tensor::full({d}, 1.0, true);
    w.ln2_bias = Tensor::zeros({d}, true);
    layers_.push_back(std::move(w));
  }
  lm_bias_ = Tensor::zeros({cfg_.vocab}, true);
  embed_ln_gain_ = Tensor::full({d}, 1.0, true);
  embed_ln_bias_ = Tensor::zeros({d}, true);
}

Tensor Model::embed_norm(const Tensor& rows, bool training, Rng& rng) const {
  Tensor normed = layer_norm(rows, embed_ln_gain_, embed_ln_bias_);
  return dropout(normed, cfg_.enc.dropout, training, rng);
}

template <typename Fn>
void Model::for_each_parameter(Fn&& fn) {
  fn("embed/word", tables_.word);
  fn("embed/position", tables_.position);
  fn("embed/segment", tables_.segment);
  fn("patch/weight", patch_.weight);
  fn("patch/bias", patch_.bias);
  fn("embed/ln_gain", embed_ln_gain_);
  fn("embed/ln_bias", embed_ln_bias_);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto& w = layers_[i];
    const std::string p = "layer" + std::to_string(i) + "/";
    fn(p + "wq", w.wq);
    fn(p + "bq", w.bq);
    fn(p + "wk", w.wk);
    fn(p + "wv", w.wv);
    fn(p + "bv", w.bv);
    fn(p + "wo", w.wo);
    fn(p + "bo", w.bo);
    fn(p + "ln1_gain", w.ln1_gain);
    fn(p + "ln1_bias", w.ln1_bias);
    fn(p + "fc1_w", w.fc1_w);
    fn(p + "fc1_b", w.fc1_b);
    fn(p + "fc2_w", w.fc2_w);
    fn(p + "fc2_b", w.fc2_b);
    fn(p + "ln2_gain", w.ln2_gain);
    fn(p + "ln2_bias", w.ln2_bias);
  }
  fn("lm/bias", lm_bias_);
}

std::vector<std::pair<std::string, Tensor>> Model::named_parameters() const {
  std::vector<std::pair<std::string, Tensor>> out;
  const_cast<Model*>(this)->for_each_parameter(
      [&](const std::string& name, Tensor& t) { out.emplace_back(name, t); });
  return out;
}

void Model::set_parameter(const std::string& name, Tensor t) {
  bool found = false;
  for_each_parameter([&](const std::string& n, Tensor& slot) {
    if (n != name) return;
    if (t.shape() != slot.shape()) {
      throw ShapeError("set_parameter: " + name + " expects " +
                       shape_str(slot.shape()) + ", got " +
                       shape_str(t.shape()));
    }
    slot = t;
    found = true;
  });
  if (!found) throw IndexError("set_parameter: unknown parameter " + name);
}

std::vector<Tensor> Model::parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.size();
  return n;
}

std::size_t Model::patch_parameter_count() const {
  return patch_.weight.size() + patch_.bias.size();
}

void Model::zero_grads() const {
  for (auto p : parameters()) p.zero_grad();
}

void Model::write_checkpoint(Checkpoint& ck) const {
  for (const auto& [name, t] : named_parameters()) {
    ck.tensors.push_back({name, t.shape(), t.data()});
  }
}

void Model::read_checkpoint(const Checkpoint& ck) {
  for (auto& [name, t] : named_parameters()) {
    const Checkpoint::Entry* e = ck.find(name);
    if (e == nullptr) {
      throw DataError("checkpoint: missing tensor " + name);
    }
    if (e->shape != t.shape()) {
      throw DataError("checkpoint: tensor " + name + " has shape " +
                      shape_str(e->shape) + ", model expects " +
                      shape_str(t.shape()));
    }
    t.mutable_data() = e->values;
  }
}

}  // namespace unidial
