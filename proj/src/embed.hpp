#pragma once

#include <cstddef>
#include <vector>

#include "ops.hpp"
#include "tensor.hpp"

namespace unidial {

// Segment ids: 0 for the vision block ([CLS], patches, [EOI]), 1 for text.
constexpr std::size_t kSegmentVision = 0;
constexpr std::size_t kSegmentText = 1;

struct EmbeddingTables {
  Tensor word;      // [V × D]
  Tensor position;  // [L_max × D]
  Tensor segment;   // [2 × D]
};

// Shared linear projection applied to every flattened patch.
struct PatchEmbedConfig {
  std::size_t patch = 0;
  std::size_t channels = 0;
  std::size_t dim = 0;
  Tensor weight;  // [(P*P*C) × D]
  Tensor bias;    // [D]
};

// patches · W + b
Tensor patch_project(const Tensor& patches, const PatchEmbedConfig& cfg);

// row i = word[ids_i] + position[positions_i] + segment[segments_i]
Tensor embed_tokens(const std::vector<std::size_t>& ids,
                    const EmbeddingTables& tables,
                    const std::vector<std::size_t>& positions,
                    const std::vector<std::size_t>& segments);

// row i = projected_i + position[positions_i] + segment[0]
Tensor embed_patches(const Tensor& projected, const EmbeddingTables& tables,
                     const std::vector<std::size_t>& positions);

// (P^2·C)·D weights plus D bias scalars.
std::size_t count_patch_params(std::size_t patch, std::size_t channels,
                               std::size_t dim);

}  // namespace unidial
