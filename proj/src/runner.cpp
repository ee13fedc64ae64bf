#include "runner.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace unidial {

namespace fs = std::filesystem;

namespace {

// independent rng streams per purpose so one knob cannot shift another
constexpr std::uint64_t kInitSalt = 1;
constexpr std::uint64_t kTrainSalt = 2;
constexpr std::uint64_t kShuffleSalt = 3;

SynthSpec synth_spec_for(const RunConfig& cfg, const std::string& split,
                         std::size_t dialogs) {
  SynthSpec s;
  s.seed = cfg.data.synth_seed;
  s.dialogs = dialogs;
  s.turns = cfg.data.synth_turns;
  s.candidates = cfg.data.synth_candidates;
  s.image_size = cfg.data.synth_image_size;
  s.patch = cfg.model.patch;
  s.image_fraction = cfg.data.synth_image_fraction;
  s.color_fraction = cfg.data.synth_color_fraction;
  s.split = split;
  return s;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot open for writing: " + path.string());
  f << text;
}

void append_metrics_lines(std::ostringstream& os, const std::string& prefix,
                          const RankMetrics& m) {
  os << prefix << "count=" << m.count << "\n";
  os << prefix << "r_at_1=" << format_double(m.r_at_1) << "\n";
  os << prefix << "r_at_5=" << format_double(m.r_at_5) << "\n";
  os << prefix << "r_at_10=" << format_double(m.r_at_10) << "\n";
  os << prefix << "mrr=" << format_double(m.mrr) << "\n";
  os << prefix << "mean_rank=" << format_double(m.mean_rank) << "\n";
  if (m.ndcg.has_value())
    os << prefix << "ndcg=" << format_double(*m.ndcg) << "\n";
}

nlohmann::json metrics_json(const RankMetrics& m) {
  nlohmann::json j;
  j["count"] = m.count;
  j["r_at_1"] = m.r_at_1;
  j["r_at_5"] = m.r_at_5;
  j["r_at_10"] = m.r_at_10;
  j["mrr"] = m.mrr;
  j["mean_rank"] = m.mean_rank;
  if (m.ndcg.has_value()) j["ndcg"] = *m.ndcg;
  return j;
}

ModelConfig model_config_with_vocab(const RunConfig& cfg, std::size_t vocab) {
  ModelConfig mc = cfg.model;
  mc.vocab = vocab;
  return mc;
}

// rank every instance; the cache fills on first use of each candidate
std::vector<RankingResult> rank_split(const std::vector<TokenizedInstance>& toks,
                                      const Model& model,
                                      CandidateCache* cache) {
  std::vector<RankingResult> results;
  results.reserve(toks.size());
  for (const auto& inst : toks) {
    Ranking r = rank_candidates(inst, model, cache);
    RankingResult res;
    res.permutation = r.order;
    res.gt_index = static_cast<std::size_t>(inst.gt_index);
    res.relevance = inst.relevance;
    res.kind = inst.kind;
    results.push_back(std::move(res));
  }
  return results;
}

std::size_t total_params_formula(const ModelConfig& mc, std::size_t vocab) {
  const std::size_t d = mc.enc.dim;
  const std::size_t f = mc.enc.ffn;
  std::size_t n = vocab * d + mc.enc.max_len * d + 2 * d;
  n += 2 * d;  // embedding layer norm
  n += count_patch_params(mc.patch, mc.channels, d);
  n += mc.enc.layers *
       (4 * d * d + 3 * d + 2 * d + (d * f + f) + (f * d + d) + 2 * d);
  n += vocab;  // tied-output bias
  return n;
}

}  // namespace

DatasetBundle load_dataset(const RunConfig& cfg) {
  DatasetBundle bundle;
  if (cfg.data.source == "synthetic") {
    bundle.train = synth_instances(generate_synthetic(
        synth_spec_for(cfg, "train", cfg.data.synth_dialogs)));
    bundle.eval = synth_instances(generate_synthetic(
        synth_spec_for(cfg, "eval", cfg.data.synth_eval_dialogs)));
  } else {
    if (cfg.data.train_path.empty()) {
      throw ParamError("data.train_path is required with data.source=visdial");
    }
    bundle.train = load_visdial(cfg.data.train_path, "train", "",
                                cfg.data.image_dir);
    if (!cfg.data.eval_path.empty()) {
      bundle.eval = load_visdial(cfg.data.eval_path, "eval",
                                 cfg.data.dense_path, cfg.data.image_dir);
    }
  }
  auto transform = [&](std::vector<DialogInstance>& split) {
    for (auto& inst : split) {
      if (cfg.data.max_turns >= 0) {
        inst = truncate_history(inst,
                                static_cast<std::size_t>(cfg.data.max_turns));
      }
      if (!cfg.data.use_image) inst = strip_image(inst);
    }
  };
  transform(bundle.train);
  transform(bundle.eval);
  return bundle;
}

TrainOutcome run_train(const RunConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  DatasetBundle bundle = load_dataset(cfg);
  if (bundle.train.empty()) throw DataError("run_train: training split is empty");

  Vocab vocab = Vocab::build(corpus_text(bundle.train));
  auto toks = tokenize_instances(bundle.train, vocab, cfg.model.patch);

  Rng init_rng(Rng::mix(cfg.train.seed, kInitSalt));
  Model model(model_config_with_vocab(cfg, vocab.size()), init_rng);

  const std::string hash = config_hash_hex(cfg);
  write_text(fs::path(out_dir) / "config.txt", resolved_text(cfg));
  vocab.save((fs::path(out_dir) / "vocab.txt").string());

  const std::string ckpt_path = (fs::path(out_dir) / "model.ckpt").string();
  auto save_checkpoint = [&](std::uint64_t steps) {
    Checkpoint ck;
    ck.meta["config_hash"] = hash;
    ck.step = steps;
    ck.vocab = vocab.tokens();
    model.write_checkpoint(ck);
    ck.save(ckpt_path);
  };
  save_checkpoint(0);

  auto params = model.parameters();
  AdamState adam(AdamConfig{.lr = cfg.train.lr, .beta2 = cfg.train.adam_beta2},
                 params);
  Rng train_rng(Rng::mix(cfg.train.seed, kTrainSalt));
  TrainHyper hyper;
  hyper.weights = {cfg.train.alpha, cfg.train.beta};
  hyper.mlm_rate = cfg.train.mlm_rate;
  hyper.mlm_bert_split = cfg.train.mlm_bert_split;
  hyper.negatives = cfg.train.negatives;

  std::ostringstream log;
  TrainOutcome outcome;
  outcome.checkpoint_path = ckpt_path;
  outcome.vocab_size = vocab.size();
  bool stop = false;
  for (std::size_t epoch = 0; epoch < cfg.train.epochs && !stop; ++epoch) {
    const auto batches =
        batch_indices(toks.size(), cfg.train.batch,
                      Rng::mix(Rng::mix(cfg.train.seed, kShuffleSalt), epoch));
    double loss_sum = 0.0;
    std::size_t n_batches = 0;
    for (const auto& batch_ids : batches) {
      std::vector<const TokenizedInstance*> batch;
      batch.reserve(batch_ids.size());
      for (std::size_t i : batch_ids) batch.push_back(&toks[i]);
      if (cfg.train.warmup_steps > 0) {
        const double ramp = std::min(
            1.0, double(outcome.steps + 1) / double(cfg.train.warmup_steps));
        adam.set_lr(cfg.train.lr * ramp);
      }
      outcome.final_loss = train_step(batch, model, hyper, adam, train_rng);
      loss_sum += outcome.final_loss;
      ++n_batches;
      ++outcome.steps;
      if (cfg.train.max_steps > 0 && outcome.steps >= cfg.train.max_steps) {
        stop = true;
        break;
      }
    }
    save_checkpoint(outcome.steps);
    log << "epoch=" << epoch << " steps=" << outcome.steps << " mean_loss="
        << format_double(loss_sum / static_cast<double>(n_batches)) << "\n";
    if (cfg.train.eval_every > 0 && (epoch + 1) % cfg.train.eval_every == 0 &&
        !bundle.eval.empty()) {
      auto eval_toks = tokenize_instances(bundle.eval, vocab, cfg.model.patch);
      CandidateCache cache;
      SplitReport rep = aggregate_split(rank_split(eval_toks, model, &cache));
      log << "epoch=" << epoch
          << " eval_r_at_1=" << format_double(rep.overall.r_at_1)
          << " eval_mrr=" << format_double(rep.overall.mrr) << "\n";
    }
    write_text(fs::path(out_dir) / "train_log.txt", log.str());
  }
  write_text(fs::path(out_dir) / "train_log.txt", log.str());
  return outcome;
}

SplitReport run_eval(const RunConfig& cfg, const std::string& checkpoint,
                     const std::string& split, const std::string& out_dir) {
  Checkpoint ck = Checkpoint::load(checkpoint);
  const std::string hash = config_hash_hex(cfg);
  const auto stored = ck.meta.find("config_hash");
  if (stored == ck.meta.end() || stored->second != hash) {
    throw DataError(
        "run_eval: checkpoint " + checkpoint + " was trained under config " +
        (stored == ck.meta.end() ? std::string("<missing>") : stored->second) +
        " but this run resolves to " + hash +
        "; evaluate with the training config (and seed) or retrain");
  }
  if (ck.vocab.empty()) {
    throw DataError("run_eval: checkpoint has no embedded vocabulary");
  }
  Vocab vocab = Vocab::from_tokens(ck.vocab);

  DatasetBundle bundle = load_dataset(cfg);
  const std::vector<DialogInstance>* instances = nullptr;
  if (split == "train") {
    instances = &bundle.train;
  } else if (split == "eval") {
    instances = &bundle.eval;
  } else {
    throw ParamError("run_eval: split must be train or eval, got '" + split +
                     "'");
  }
  if (instances->empty()) {
    throw DataError("run_eval: split '" + split + "' is empty");
  }
  auto toks = tokenize_instances(*instances, vocab, cfg.model.patch);

  Rng init_rng(0);
  Model model(model_config_with_vocab(cfg, vocab.size()), init_rng);
  model.read_checkpoint(ck);

  fs::create_directories(out_dir);
  const std::string cache_path =
      (fs::path(out_dir) / "candidates.ckpt").string();
  CandidateCache cache;
  if (fs::exists(cache_path)) {
    Checkpoint cache_ck = Checkpoint::load(cache_path);
    const auto cache_hash = cache_ck.meta.find("config_hash");
    if (cache_hash != cache_ck.meta.end() && cache_hash->second == hash) {
      cache = CandidateCache::load(cache_path);
    }
  }

  SplitReport report = aggregate_split(rank_split(toks, model, &cache));
  cache.save(cache_path, {{"config_hash", hash}});

  std::ostringstream txt;
  txt << "config_hash=" << hash << "\n";
  txt << "split=" << split << "\n";
  txt << format_report(report);
  write_text(fs::path(out_dir) / "metrics.txt", txt.str());
  write_text(fs::path(out_dir) / "config.txt", resolved_text(cfg));

  nlohmann::json j;
  j["config_hash"] = hash;
  j["split"] = split;
  j["overall"] = metrics_json(report.overall);
  j["by_kind"] = nlohmann::json::object();
  for (const auto& [kind, m] : report.by_kind) j["by_kind"][kind] = metrics_json(m);
  write_text(fs::path(out_dir) / "metrics.json", j.dump(1) + "\n");

  return report;
}

std::vector<std::string> run_generate(const RunConfig& cfg,
                                      const std::string& checkpoint,
                                      std::size_t start, std::size_t count,
                                      std::size_t max_len) {
  if (count == 0) throw ParamError("run_generate: count must be >= 1");
  if (max_len == 0) throw ParamError("run_generate: max_len must be >= 1");
  Checkpoint ck = Checkpoint::load(checkpoint);
  const std::string hash = config_hash_hex(cfg);
  const auto stored = ck.meta.find("config_hash");
  if (stored == ck.meta.end() || stored->second != hash) {
    throw DataError("run_generate: checkpoint/config hash mismatch");
  }
  Vocab vocab = Vocab::from_tokens(ck.vocab);
  DatasetBundle bundle = load_dataset(cfg);
  if (bundle.eval.empty()) {
    throw DataError("run_generate: eval split is empty");
  }
  if (start >= bundle.eval.size() || start + count > bundle.eval.size()) {
    throw ParamError("run_generate: selector [" + std::to_string(start) +
                     ", " + std::to_string(start + count) +
                     ") out of range for " +
                     std::to_string(bundle.eval.size()) + " instances");
  }
  std::vector<DialogInstance> picked(
      bundle.eval.begin() + static_cast<std::ptrdiff_t>(start),
      bundle.eval.begin() + static_cast<std::ptrdiff_t>(start + count));
  auto toks = tokenize_instances(picked, vocab, cfg.model.patch);

  Rng init_rng(0);
  Model model(model_config_with_vocab(cfg, vocab.size()), init_rng);
  model.read_checkpoint(ck);

  std::vector<std::string> out;
  out.reserve(toks.size());
  for (const auto& inst : toks)
    out.push_back(detokenize(generate_answer(inst, model, max_len), vocab));
  return out;
}

std::vector<AblationCell> run_ablate(const RunConfig& cfg,
                                     const std::vector<int>& turns_list,
                                     const std::vector<int>& vis_list,
                                     const std::string& out_dir) {
  if (turns_list.empty() || vis_list.empty()) {
    throw ParamError("run_ablate: empty condition grid");
  }
  fs::create_directories(out_dir);
  std::vector<AblationCell> cells;
  for (int turns : turns_list) {
    for (int vis : vis_list) {
      AblationCell cell;
      cell.turns = turns;
      cell.vis = vis;
      RunConfig cell_cfg = cfg;
      cell_cfg.data.max_turns = turns;
      cell_cfg.data.use_image = vis != 0;
      const fs::path cell_dir = fs::path(out_dir) /
                                ("cell_turns" + std::to_string(turns) +
                                 "_vis" + std::to_string(vis));
      try {
        TrainOutcome t = run_train(cell_cfg, cell_dir.string());
        cell.report = run_eval(cell_cfg, t.checkpoint_path, "eval",
                               cell_dir.string());
      } catch (const Error& e) {
        cell.failed = true;
        cell.error = e.what();
      }
      cells.push_back(std::move(cell));
    }
  }
  write_text(fs::path(out_dir) / "ablation.tsv", format_ablation_table(cells));
  return cells;
}

std::string format_ablation_table(const std::vector<AblationCell>& cells) {
  std::ostringstream os;
  os << "turns\tvis\tsubset\tmetric\tvalue\n";
  for (const auto& cell : cells) {
    const std::string cond =
        std::to_string(cell.turns) + "\t" + std::to_string(cell.vis) + "\t";
    if (cell.failed) {
      os << cond << "-\terror\t" << cell.error << "\n";
      continue;
    }
    auto emit = [&](const std::string& subset, const RankMetrics& m) {
      os << cond << subset << "\tcount\t" << m.count << "\n";
      os << cond << subset << "\tr_at_1\t" << format_double(m.r_at_1) << "\n";
      os << cond << subset << "\tr_at_5\t" << format_double(m.r_at_5) << "\n";
      os << cond << subset << "\tmrr\t" << format_double(m.mrr) << "\n";
      os << cond << subset << "\tmean_rank\t" << format_double(m.mean_rank)
         << "\n";
      if (m.ndcg.has_value())
        os << cond << subset << "\tndcg\t" << format_double(*m.ndcg) << "\n";
    };
    emit("overall", cell.report.overall);
    for (const auto& [kind, m] : cell.report.by_kind) emit(kind, m);
  }
  return os.str();
}

std::string run_params(const RunConfig& cfg) {
  std::ostringstream os;
  os << "config_hash=" << config_hash_hex(cfg) << "\n";

  std::size_t vocab_size = cfg.vocab_hint;
  bool vocab_from_corpus = false;
  try {
    DatasetBundle bundle = load_dataset(cfg);
    if (!bundle.train.empty()) {
      vocab_size = Vocab::build(corpus_text(bundle.train)).size();
      vocab_from_corpus = true;
    }
  } catch (const Error&) {
    // no reachable corpus; fall back to the configured hint
  }
  os << "vocab_size=" << vocab_size
     << (vocab_from_corpus ? " (from corpus)\n" : " (vocab_hint)\n");

  const std::size_t total = total_params_formula(cfg.model, vocab_size);
  os << "total_parameters=" << total << "\n";
  os << "patch_parameters=" << count_patch_params(cfg.model.patch,
                                                  cfg.model.channels,
                                                  cfg.model.enc.dim)
     << "\n";

  // construct the model and recount unless the config is too large to build
  if (total <= 20000000) {
    Rng rng(0);
    Model model(model_config_with_vocab(cfg, vocab_size), rng);
    os << "constructed_parameters=" << model.parameter_count() << "\n";
    os << "constructed_patch_parameters=" << model.patch_parameter_count()
       << "\n";
    if (model.parameter_count() != total ||
        model.patch_parameter_count() !=
            count_patch_params(cfg.model.patch, cfg.model.channels,
                               cfg.model.enc.dim)) {
      throw ContractError("run_params: formula disagrees with the built model");
    }
  } else {
    os << "constructed_parameters=skipped (config too large to instantiate)\n";
  }

  os << "patch_parameters[patch=32,channels=3,dim=768]="
     << count_patch_params(32, 3, 768) << "\n";
  os << "patch_parameters[patch=32,channels=3,dim=192]="
     << count_patch_params(32, 3, 192) << "\n";
  os << "note=a 0.59M patch projection corresponds to hidden size 192 under "
        "(P*P*C+1)*D; at hidden size 768 the same projection costs 2,360,064 "
        "parameters (~2.36M)\n";

  RunConfig base;
  apply_preset(base, "bert-base");
  os << "bert_base_total_parameters[vocab=" << base.vocab_hint
     << "]=" << total_params_formula(base.model, base.vocab_hint) << "\n";
  return os.str();
}

std::string run_synth(const RunConfig& cfg, const std::string& out_dir) {
  SynthSpec train = synth_spec_for(cfg, "train", cfg.data.synth_dialogs);
  SynthSpec eval = synth_spec_for(cfg, "eval", cfg.data.synth_eval_dialogs);
  write_synth_dataset(train, eval, out_dir);
  std::ostringstream os;
  os << "config_hash=" << config_hash_hex(cfg) << "\n";
  os << "wrote=" << out_dir << "/corpus_train.json (" << cfg.data.synth_dialogs
     << " dialogs)\n";
  os << "wrote=" << out_dir << "/corpus_eval.json ("
     << cfg.data.synth_eval_dialogs << " dialogs)\n";
  os << "wrote=" << out_dir << "/dense_eval.json\n";
  os << "wrote=" << out_dir << "/images/*.ufr\n";
  return os.str();
}

std::string mask_grid_text(std::size_t context_len, std::size_t answer_len,
                           bool bidirectional) {
  if (bidirectional) {
    return mask_grid(bidirectional_mask_pattern(context_len + answer_len));
  }
  return mask_grid(seq2seq_mask_pattern(context_len, answer_len));
}

std::string format_report(const SplitReport& report) {
  std::ostringstream os;
  append_metrics_lines(os, "", report.overall);
  for (const auto& [kind, m] : report.by_kind)
    append_metrics_lines(os, "kind." + kind + ".", m);
  return os.str();
}

}  // namespace unidial
