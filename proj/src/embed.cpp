#include "embed.hpp"

namespace unidial {

Tensor patch_project(const Tensor& patches, const PatchEmbedConfig& cfg) {
  const std::size_t expect = cfg.patch * cfg.patch * cfg.channels;
  if (patches.ndim() != 2 || patches.cols() != expect) {
    throw ShapeError("patch_project: patches " + shape_str(patches.shape()) +
                     " do not match projection rows " + std::to_string(expect));
  }
  return add_rowvec(matmul(patches, cfg.weight), cfg.bias);
}

Tensor embed_tokens(const std::vector<std::size_t>& ids,
                    const EmbeddingTables& tables,
                    const std::vector<std::size_t>& positions,
                    const std::vector<std::size_t>& segments) {
  if (ids.size() != positions.size() || ids.size() != segments.size()) {
    throw ContractError("embed_tokens: ids/positions/segments lengths differ");
  }
  return add(add(gather_rows(tables.word, ids),
                 gather_rows(tables.position, positions)),
             gather_rows(tables.segment, segments));
}

Tensor embed_patches(const Tensor& projected, const EmbeddingTables& tables,
                     const std::vector<std::size_t>& positions) {
  if (projected.ndim() != 2 || positions.size() != projected.rows()) {
    throw ContractError("embed_patches: positions do not match patch rows");
  }
  const std::vector<std::size_t> seg(positions.size(), kSegmentVision);
  return add(add(projected, gather_rows(tables.position, positions)),
             gather_rows(tables.segment, seg));
}

std::size_t count_patch_params(std::size_t patch, std::size_t channels,
                               std::size_t dim) {
  return patch * patch * channels * dim + dim;
}

}  // namespace unidial
