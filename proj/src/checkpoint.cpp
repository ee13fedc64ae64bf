#include "checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace unidial {

namespace {

constexpr char kMagic[8] = {'U', 'D', 'C', 'K', 'P', 'T', '0', '1'};

void put_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

const Checkpoint::Entry* Checkpoint::find(const std::string& name) const {
  for (const auto& e : tensors)
    if (e.name == name) return &e;
  return nullptr;
}

void Checkpoint::save(const std::string& path) const {
  nlohmann::json manifest;
  manifest["meta"] = nlohmann::json::object();
  for (const auto& [k, v] : meta) manifest["meta"][k] = v;
  manifest["meta"]["step"] = step;
  if (!vocab.empty()) manifest["meta"]["vocab"] = vocab;
  manifest["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& e : tensors) {
    manifest["tensors"].push_back({{"name", e.name},
                                   {"shape", e.shape},
                                   {"offset", offset},
                                   {"count", e.values.size()}});
    offset += e.values.size();
  }
  const std::string mtext = manifest.dump();

  std::string blob;
  blob.reserve(16 + mtext.size() + offset * 8);
  blob.append(kMagic, 8);
  put_u64_le(blob, mtext.size());
  blob += mtext;
  for (const auto& e : tensors) {
    for (double d : e.values) {
      const std::uint64_t bits = std::bit_cast<std::uint64_t>(d);
      put_u64_le(blob, bits);
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("checkpoint: cannot open for writing: " + path);
  f.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!f) throw DataError("checkpoint: write failed: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("checkpoint: cannot open: " + path);
  std::string blob((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  if (blob.size() < 16 || std::memcmp(blob.data(), kMagic, 8) != 0) {
    throw DataError("checkpoint: bad magic in " + path);
  }
  const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());
  const std::uint64_t mlen = get_u64_le(bytes + 8);
  if (16 + mlen > blob.size()) {
    throw DataError("checkpoint: truncated manifest in " + path);
  }
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(blob.substr(16, mlen));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint: manifest parse error in " + path + ": " +
                    e.what());
  }

  Checkpoint ck;
  if (manifest.contains("meta")) {
    for (auto& [k, v] : manifest["meta"].items()) {
      if (k == "step") {
        ck.step = v.get<std::uint64_t>();
      } else if (k == "vocab") {
        ck.vocab = v.get<std::vector<std::string>>();
      } else if (v.is_string()) {
        ck.meta[k] = v.get<std::string>();
      }
    }
  }
  const std::size_t payload_off = 16 + mlen;
  const std::size_t payload_doubles = (blob.size() - payload_off) / 8;
  for (const auto& t : manifest["tensors"]) {
    Entry e;
    e.name = t.at("name").get<std::string>();
    e.shape = t.at("shape").get<Shape>();
    const std::uint64_t off = t.at("offset").get<std::uint64_t>();
    const std::uint64_t count = t.at("count").get<std::uint64_t>();
    if (count != shape_size(e.shape)) {
      throw DataError("checkpoint: entry " + e.name + " count " +
                      std::to_string(count) + " does not match shape " +
                      shape_str(e.shape));
    }
    if (off + count > payload_doubles) {
      throw DataError("checkpoint: entry " + e.name + " exceeds payload in " +
                      path);
    }
    e.values.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      const std::uint64_t bits =
          get_u64_le(bytes + payload_off + (off + i) * 8);
      e.values[i] = std::bit_cast<double>(bits);
    }
    ck.tensors.push_back(std::move(e));
  }
  return ck;
}

}  // namespace unidial
