#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace unidial {

// Single-file tensor container:
//   bytes 0..7   magic "UDCKPT01"
//   bytes 8..15  manifest length (u64, little-endian)
//   manifest     UTF-8 JSON: {"meta": {...}, "tensors": [{name, shape,
//                offset, count}, ...]} with offsets counted in doubles from
//                the start of the payload
//   payload      raw float64 little-endian, row-major, in manifest order
// Round-trips are bit-exact.
struct Checkpoint {
  struct Entry {
    std::string name;
    Shape shape;
    std::vector<double> values;
  };

  // string-valued metadata plus a few typed fields used by the trainer
  std::map<std::string, std::string> meta;
  std::uint64_t step = 0;
  std::vector<std::string> vocab;  // empty when not applicable
  std::vector<Entry> tensors;

  const Entry* find(const std::string& name) const;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace unidial
