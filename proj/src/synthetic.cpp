#include "synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

namespace unidial {

namespace {

struct ColorDef {
  const char* name;
  double r, g, b;
};

const ColorDef kColors[] = {
    {"red", 1.00, 0.00, 0.00},    {"green", 0.00, 0.80, 0.00},
    {"blue", 0.00, 0.00, 1.00},   {"yellow", 1.00, 1.00, 0.00},
    {"purple", 0.60, 0.00, 0.80}, {"cyan", 0.00, 1.00, 1.00},
    {"orange", 1.00, 0.55, 0.00}, {"pink", 1.00, 0.60, 0.80},
    {"brown", 0.55, 0.30, 0.10},  {"gray", 0.50, 0.50, 0.50},
    {"olive", 0.50, 0.50, 0.00},  {"teal", 0.00, 0.50, 0.50},
    {"navy", 0.00, 0.00, 0.45},   {"maroon", 0.55, 0.00, 0.10},
    {"lime", 0.70, 1.00, 0.30},   {"gold", 0.90, 0.80, 0.20},
};
constexpr std::size_t kColorCount = 16;

const char* kShapes[] = {"square", "circle", "cross",
                         "triangle", "diamond", "ring"};
constexpr std::size_t kShapeCount = 6;

const char* kPositions[] = {"top left", "top right", "bottom left",
                            "bottom right"};

constexpr double kBackground = 0.08;

const char* kCaption = "a photo of four colored shapes in a grid";
const char* kHistoryQuestion = "what was the previous answer ?";

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string color_question(std::size_t pos) {
  return "what color is the " + std::string(kPositions[pos]) + " shape ?";
}

std::string shape_question(std::size_t pos) {
  return "what shape is in the " + std::string(kPositions[pos]) + " ?";
}

// fixed question pool: 4 color + 4 shape + 1 history
std::vector<std::string> question_pool() {
  std::vector<std::string> q;
  for (std::size_t p = 0; p < 4; ++p) q.push_back(color_question(p));
  for (std::size_t p = 0; p < 4; ++p) q.push_back(shape_question(p));
  q.push_back(kHistoryQuestion);
  return q;
}

// disjoint id ranges let one images/ directory serve several splits
long image_id_base(const std::string& split) {
  if (split == "train") return 1000000;
  if (split == "eval" || split == "val") return 2000000;
  return 3000000 + static_cast<long>(fnv1a(split) % 997) * 1000;
}

bool inside_shape(std::size_t shape, double y, double x, double cell) {
  const double m = cell / 8.0;
  const double c = cell / 2.0;
  const double dy = y - c;
  const double dx = x - c;
  const double r = c - m;
  switch (shape) {
    case 0:  // square
      return y >= m && y < cell - m && x >= m && x < cell - m;
    case 1:  // circle
      return dy * dy + dx * dx <= r * r;
    case 2:  // cross
      return (std::fabs(dx) <= cell / 8.0 && y >= m && y < cell - m) ||
             (std::fabs(dy) <= cell / 8.0 && x >= m && x < cell - m);
    case 3:  // triangle (lower-left)
      return y >= m && y < cell - m && x >= m && x <= y;
    case 4:  // diamond
      return std::fabs(dx) + std::fabs(dy) <= r;
    case 5:  // ring
      return dy * dy + dx * dx <= r * r &&
             dy * dy + dx * dx >= (0.55 * r) * (0.55 * r);
    default:
      return false;
  }
}

}  // namespace

const std::vector<std::string>& synth_color_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& c : kColors) v.push_back(c.name);
    return v;
  }();
  return names;
}

const std::vector<std::string>& synth_shape_names() {
  static const std::vector<std::string> names(std::begin(kShapes),
                                              std::end(kShapes));
  return names;
}

const std::vector<std::string>& synth_position_names() {
  static const std::vector<std::string> names(std::begin(kPositions),
                                              std::end(kPositions));
  return names;
}

const std::vector<std::string>& synth_answer_pool() {
  static const std::vector<std::string> pool = [] {
    std::vector<std::string> v = synth_color_names();
    for (const auto& s : synth_shape_names()) v.push_back(s);
    return v;
  }();
  return pool;
}

SyntheticWorld synth_world(std::uint64_t seed, const std::string& split,
                           std::size_t dialog_index) {
  Rng rng(Rng::mix(Rng::mix(seed, fnv1a(split)), 2 * dialog_index));
  SyntheticWorld world;
  // four distinct colors so position questions are unambiguous
  std::vector<std::size_t> colors(kColorCount);
  for (std::size_t i = 0; i < kColorCount; ++i) colors[i] = i;
  shuffle(colors, rng);
  for (std::size_t cell = 0; cell < 4; ++cell) {
    world.cells[cell].color = colors[cell];
    world.cells[cell].shape = rng.uniform_index(kShapeCount);
  }
  return world;
}

ImageRaster render_world(const SyntheticWorld& world, std::size_t image_size) {
  if (image_size == 0 || image_size % 2 != 0) {
    throw ParamError("render_world: image size must be positive and even");
  }
  const std::size_t cell = image_size / 2;
  ImageRaster img;
  img.height = img.width = image_size;
  img.channels = 3;
  img.pixels.assign(image_size * image_size * 3, kBackground);
  for (std::size_t ci = 0; ci < 4; ++ci) {
    const std::size_t oy = (ci / 2) * cell;
    const std::size_t ox = (ci % 2) * cell;
    const ColorDef& color = kColors[world.cells[ci].color];
    const std::size_t shape = world.cells[ci].shape;
    for (std::size_t y = 0; y < cell; ++y) {
      for (std::size_t x = 0; x < cell; ++x) {
        if (!inside_shape(shape, y + 0.5, x + 0.5, double(cell))) continue;
        img.at(oy + y, ox + x, 0) = color.r;
        img.at(oy + y, ox + x, 1) = color.g;
        img.at(oy + y, ox + x, 2) = color.b;
      }
    }
  }
  return img;
}

SynthCorpus generate_synthetic(const SynthSpec& spec) {
  if (spec.patch == 0 || spec.image_size % spec.patch != 0) {
    throw ParamError("generate_synthetic: patch " + std::to_string(spec.patch) +
                     " does not divide image size " +
                     std::to_string(spec.image_size));
  }
  if (spec.candidates < 2) {
    throw ParamError("generate_synthetic: need at least 2 candidates");
  }
  if (spec.candidates > synth_answer_pool().size()) {
    throw ParamError("generate_synthetic: candidate count " +
                     std::to_string(spec.candidates) +
                     " exceeds the distinct answer inventory of " +
                     std::to_string(synth_answer_pool().size()));
  }
  if (spec.image_fraction < 0.0 || spec.image_fraction > 1.0) {
    throw ParamError("generate_synthetic: image fraction outside [0, 1]");
  }
  if (spec.color_fraction < 0.0 || spec.color_fraction > 1.0) {
    throw ParamError("generate_synthetic: color fraction outside [0, 1]");
  }
  if (spec.turns == 0) {
    throw ParamError("generate_synthetic: dialogs need at least one turn");
  }

  SynthCorpus out;
  out.corpus.split = spec.split;
  out.corpus.questions = question_pool();
  out.corpus.answers = synth_answer_pool();

  const std::size_t pool_size = out.corpus.answers.size();
  for (std::size_t d = 0; d < spec.dialogs; ++d) {
    SyntheticWorld world = synth_world(spec.seed, spec.split, d);
    Rng rng(Rng::mix(Rng::mix(spec.seed, fnv1a(spec.split)), 2 * d + 1));

    VisdialCorpus::Dialog dialog;
    dialog.image_id = image_id_base(spec.split) + static_cast<long>(d + 1);
    dialog.caption = kCaption;
    out.images[dialog.image_id] =
        std::make_shared<ImageRaster>(render_world(world, spec.image_size));

    int previous_answer = -1;
    for (std::size_t t = 0; t < spec.turns; ++t) {
      VisdialCorpus::Turn turn;
      const bool image_turn =
          t == 0 || rng.uniform() < spec.image_fraction;
      if (image_turn) {
        const std::size_t pos = rng.uniform_index(4);
        const bool about_color = rng.uniform() < spec.color_fraction;
        turn.kind = "image";
        if (about_color) {
          turn.question = static_cast<int>(pos);
          turn.answer = static_cast<int>(world.cells[pos].color);
        } else {
          turn.question = static_cast<int>(4 + pos);
          turn.answer = static_cast<int>(kColorCount + world.cells[pos].shape);
        }
      } else {
        turn.kind = "history";
        turn.question = 8;
        turn.answer = previous_answer;
      }

      // candidate set: gt + distinct distractors from the global pool
      std::vector<int> distractors;
      for (std::size_t a = 0; a < pool_size; ++a)
        if (static_cast<int>(a) != turn.answer)
          distractors.push_back(static_cast<int>(a));
      shuffle(distractors, rng);
      distractors.resize(spec.candidates - 1);
      turn.gt_index = static_cast<int>(rng.uniform_index(spec.candidates));
      turn.answer_options = distractors;
      turn.answer_options.insert(
          turn.answer_options.begin() + turn.gt_index, turn.answer);

      // relevance: 1 for the gt, 0.2 for same-category answers
      DenseAnnotation ann;
      ann.image_id = dialog.image_id;
      ann.round_id = static_cast<int>(t) + 1;
      const bool gt_is_color = turn.answer < static_cast<int>(kColorCount);
      for (int opt : turn.answer_options) {
        if (opt == turn.answer) {
          ann.relevance.push_back(1.0);
        } else if ((opt < static_cast<int>(kColorCount)) == gt_is_color) {
          ann.relevance.push_back(0.2);
        } else {
          ann.relevance.push_back(0.0);
        }
      }
      out.dense.push_back(std::move(ann));

      previous_answer = turn.answer;
      dialog.turns.push_back(std::move(turn));
    }
    out.corpus.dialogs.push_back(std::move(dialog));
  }
  return out;
}

std::vector<DialogInstance> synth_instances(const SynthCorpus& corpus) {
  return expand_instances(corpus.corpus, corpus.dense, corpus.images);
}

void write_synth_dataset(const SynthSpec& train_spec,
                         const SynthSpec& eval_spec,
                         const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "images");
  SynthCorpus train = generate_synthetic(train_spec);
  SynthCorpus eval = generate_synthetic(eval_spec);
  save_corpus_json(train.corpus,
                   (fs::path(out_dir) / "corpus_train.json").string());
  save_corpus_json(eval.corpus,
                   (fs::path(out_dir) / "corpus_eval.json").string());
  save_dense_json(eval.dense,
                  (fs::path(out_dir) / "dense_eval.json").string());
  auto dump_images = [&](const ImageStore& images) {
    for (const auto& [id, raster] : images) {
      save_raster(*raster, (fs::path(out_dir) / "images" /
                            (std::to_string(id) + ".ufr"))
                               .string());
    }
  };
  dump_images(train.images);
  dump_images(eval.images);
}

}  // namespace unidial
