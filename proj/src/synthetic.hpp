#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "data.hpp"

namespace unidial {

// Colored-shape grids with templated QA. Every question is answerable from
// one evidence source by construction: "image" questions read a cell of the
// 2x2 shape grid, "history" questions repeat the preceding turn's answer.
// Rendering and QA are pure functions of (seed, split, dialog index).
struct SynthSpec {
  std::uint64_t seed = 1;
  std::size_t dialogs = 500;
  std::size_t turns = 10;
  std::size_t candidates = 20;
  std::size_t image_size = 32;
  std::size_t patch = 8;
  double image_fraction = 0.5;  // share of turns asking about the image
  double color_fraction = 0.5;  // share of image questions asking color
  std::string split = "train";
};

struct SyntheticWorld {
  struct Cell {
    std::size_t color = 0;
    std::size_t shape = 0;
  };
  // top left, top right, bottom left, bottom right
  std::array<Cell, 4> cells;
};

struct SynthCorpus {
  VisdialCorpus corpus;
  ImageStore images;
  std::vector<DenseAnnotation> dense;
};

const std::vector<std::string>& synth_color_names();   // 16 entries
const std::vector<std::string>& synth_shape_names();   // 6 entries
const std::vector<std::string>& synth_position_names();  // 4 entries

// The full single-word answer inventory (colors then shapes); candidate pool
// ids index into this list.
const std::vector<std::string>& synth_answer_pool();

SyntheticWorld synth_world(std::uint64_t seed, const std::string& split,
                           std::size_t dialog_index);

ImageRaster render_world(const SyntheticWorld& world, std::size_t image_size);

SynthCorpus generate_synthetic(const SynthSpec& spec);

std::vector<DialogInstance> synth_instances(const SynthCorpus& corpus);

// Writes train/eval corpus files, the eval dense annotations and all rasters
// into out_dir (corpus_train.json, corpus_eval.json, dense_eval.json,
// images/<id>.ufr).
void write_synth_dataset(const SynthSpec& train_spec,
                         const SynthSpec& eval_spec,
                         const std::string& out_dir);

}  // namespace unidial
