#include "data.hpp"

#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace unidial {

namespace {

nlohmann::json parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed JSON in " + path + ": " + e.what());
  }
}

const std::string& pool_at(const std::vector<std::string>& pool, int index,
                           const char* pool_name, const std::string& where) {
  if (index < 0 || index >= static_cast<int>(pool.size())) {
    throw DataError("dangling " + std::string(pool_name) + " index " +
                    std::to_string(index) + " at " + where);
  }
  return pool[static_cast<std::size_t>(index)];
}

}  // namespace

VisdialCorpus load_corpus_json(const std::string& path) {
  nlohmann::json j = parse_file(path);
  VisdialCorpus corpus;
  try {
    if (j.contains("split")) corpus.split = j["split"].get<std::string>();
    const auto& data = j.at("data");
    corpus.questions = data.at("questions").get<std::vector<std::string>>();
    corpus.answers = data.at("answers").get<std::vector<std::string>>();
    std::size_t d = 0;
    for (const auto& dj : data.at("dialogs")) {
      VisdialCorpus::Dialog dialog;
      dialog.image_id = dj.at("image_id").get<long>();
      dialog.caption = dj.value("caption", std::string());
      std::size_t t = 0;
      for (const auto& tj : dj.at("dialog")) {
        VisdialCorpus::Turn turn;
        const std::string where = "dialog " + std::to_string(d) + " turn " +
                                  std::to_string(t) + " of " + path;
        turn.question = tj.at("question").get<int>();
        turn.answer = tj.at("answer").get<int>();
        turn.answer_options = tj.at("answer_options").get<std::vector<int>>();
        if (!tj.contains("gt_index")) {
          throw DataError("missing gt_index at " + where);
        }
        turn.gt_index = tj.at("gt_index").get<int>();
        turn.kind = tj.value("question_kind", std::string());
        if (turn.gt_index < 0 ||
            turn.gt_index >= static_cast<int>(turn.answer_options.size())) {
          throw DataError("gt_index " + std::to_string(turn.gt_index) +
                          " out of range at " + where);
        }
        // validate pool references eagerly so errors name the position
        pool_at(corpus.questions, turn.question, "question", where);
        pool_at(corpus.answers, turn.answer, "answer", where);
        for (int opt : turn.answer_options)
          pool_at(corpus.answers, opt, "answer option", where);
        dialog.turns.push_back(std::move(turn));
        ++t;
      }
      corpus.dialogs.push_back(std::move(dialog));
      ++d;
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("unexpected structure in " + path + ": " + e.what());
  }
  return corpus;
}

void save_corpus_json(const VisdialCorpus& corpus, const std::string& path) {
  nlohmann::json data;
  data["questions"] = corpus.questions;
  data["answers"] = corpus.answers;
  data["dialogs"] = nlohmann::json::array();
  for (const auto& d : corpus.dialogs) {
    nlohmann::json dj;
    dj["image_id"] = d.image_id;
    dj["caption"] = d.caption;
    dj["dialog"] = nlohmann::json::array();
    for (const auto& t : d.turns) {
      nlohmann::json tj;
      tj["question"] = t.question;
      tj["answer"] = t.answer;
      tj["answer_options"] = t.answer_options;
      tj["gt_index"] = t.gt_index;
      if (!t.kind.empty()) tj["question_kind"] = t.kind;
      dj["dialog"].push_back(std::move(tj));
    }
    data["dialogs"].push_back(std::move(dj));
  }
  nlohmann::json j;
  j["version"] = "1.0";
  j["split"] = corpus.split;
  j["data"] = std::move(data);
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot open for writing: " + path);
  f << j.dump(1) << "\n";
}

std::vector<DenseAnnotation> load_dense_json(const std::string& path) {
  nlohmann::json j = parse_file(path);
  std::vector<DenseAnnotation> out;
  try {
    for (const auto& r : j) {
      DenseAnnotation a;
      a.image_id = r.at("image_id").get<long>();
      a.round_id = r.at("round_id").get<int>();
      a.relevance = r.at("gt_relevance").get<std::vector<double>>();
      out.push_back(std::move(a));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("unexpected dense-annotation structure in " + path +
                    ": " + e.what());
  }
  return out;
}

void save_dense_json(const std::vector<DenseAnnotation>& dense,
                     const std::string& path) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& a : dense) {
    j.push_back({{"image_id", a.image_id},
                 {"round_id", a.round_id},
                 {"gt_relevance", a.relevance}});
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot open for writing: " + path);
  f << j.dump(1) << "\n";
}

std::vector<DialogInstance> expand_instances(
    const VisdialCorpus& corpus, const std::vector<DenseAnnotation>& dense,
    const ImageStore& images) {
  std::unordered_map<long, const DenseAnnotation*> dense_by_key;
  for (const auto& a : dense) {
    dense_by_key[a.image_id * 1000 + a.round_id] = &a;
  }
  std::vector<DialogInstance> out;
  for (std::size_t d = 0; d < corpus.dialogs.size(); ++d) {
    const auto& dialog = corpus.dialogs[d];
    std::shared_ptr<const ImageRaster> raster;
    if (auto it = images.find(dialog.image_id); it != images.end()) {
      raster = it->second;
    }
    std::vector<std::string> history;
    for (std::size_t t = 0; t < dialog.turns.size(); ++t) {
      const auto& turn = dialog.turns[t];
      const std::string where =
          "dialog " + std::to_string(d) + " turn " + std::to_string(t);
      DialogInstance inst;
      inst.image_id = dialog.image_id;
      inst.image = raster;
      inst.caption = dialog.caption;
      inst.history = history;
      inst.current = pool_at(corpus.questions, turn.question, "question", where);
      for (int opt : turn.answer_options) {
        inst.candidates.push_back(
            pool_at(corpus.answers, opt, "answer option", where));
        inst.candidate_ids.push_back(opt);
      }
      inst.gt_index = turn.gt_index;
      inst.kind = turn.kind;
      inst.dialog_index = static_cast<int>(d);
      inst.turn_index = static_cast<int>(t);
      if (auto it = dense_by_key.find(dialog.image_id * 1000 +
                                      static_cast<int>(t) + 1);
          it != dense_by_key.end()) {
        if (it->second->relevance.size() != inst.candidates.size()) {
          throw DataError("dense annotation length mismatch at " + where);
        }
        inst.relevance = it->second->relevance;
      }
      out.push_back(std::move(inst));
      history.push_back(
          pool_at(corpus.questions, turn.question, "question", where));
      history.push_back(pool_at(corpus.answers, turn.answer, "answer", where));
    }
  }
  return out;
}

std::vector<DialogInstance> load_visdial(const std::string& path,
                                         const std::string& expected_split,
                                         const std::string& dense_path,
                                         const std::string& image_dir) {
  VisdialCorpus corpus = load_corpus_json(path);
  if (!expected_split.empty() && !corpus.split.empty() &&
      corpus.split != expected_split) {
    throw DataError("split mismatch: " + path + " declares '" + corpus.split +
                    "', expected '" + expected_split + "'");
  }
  std::vector<DenseAnnotation> dense;
  if (!dense_path.empty()) dense = load_dense_json(dense_path);
  ImageStore images;
  if (!image_dir.empty()) {
    for (const auto& dialog : corpus.dialogs) {
      const auto file = std::filesystem::path(image_dir) /
                        (std::to_string(dialog.image_id) + ".ufr");
      if (std::filesystem::exists(file)) {
        images[dialog.image_id] =
            std::make_shared<ImageRaster>(load_raster(file.string()));
      }
    }
  }
  return expand_instances(corpus, dense, images);
}

DialogInstance truncate_history(const DialogInstance& inst,
                                std::size_t max_turns) {
  DialogInstance out = inst;
  const std::size_t keep = 2 * max_turns;
  if (out.history.size() > keep) {
    out.history.erase(out.history.begin(),
                      out.history.end() - static_cast<std::ptrdiff_t>(keep));
  }
  return out;
}

DialogInstance strip_image(const DialogInstance& inst) {
  DialogInstance out = inst;
  out.image.reset();
  return out;
}

std::vector<std::vector<std::size_t>> batch_indices(
    std::size_t count, std::size_t batch_size, std::uint64_t shuffle_seed) {
  if (batch_size == 0) throw ParamError("batch_indices: batch size must be >= 1");
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  Rng rng(shuffle_seed);
  shuffle(order, rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < count; start += batch_size) {
    const std::size_t end = std::min(count, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

std::vector<TokenizedInstance> tokenize_instances(
    const std::vector<DialogInstance>& instances, const Vocab& vocab,
    std::size_t patch) {
  std::vector<TokenizedInstance> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) {
    TokenizedInstance t;
    t.caption = tokenize(inst.caption, vocab);
    for (const auto& u : inst.history) t.history.push_back(tokenize(u, vocab));
    t.current = tokenize(inst.current, vocab);
    for (const auto& c : inst.candidates)
      t.candidates.push_back(tokenize(c, vocab));
    t.candidate_ids = inst.candidate_ids;
    t.gt_index = inst.gt_index;
    t.relevance = inst.relevance;
    t.kind = inst.kind;
    t.image_id = inst.image_id;
    if (inst.image != nullptr) t.patches = patchify(*inst.image, patch);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<std::string> corpus_text(
    const std::vector<DialogInstance>& insts) {
  std::vector<std::string> out;
  for (const auto& inst : insts) {
    out.push_back(inst.caption);
    for (const auto& u : inst.history) out.push_back(u);
    out.push_back(inst.current);
    for (const auto& c : inst.candidates) out.push_back(c);
  }
  return out;
}

}  // namespace unidial
