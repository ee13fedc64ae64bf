#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "error.hpp"

namespace unidial {

// Token inventory with fixed reserved ids 0..6. The file form is one token
// per line, line number = id, reserved tokens first.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kCls = 1;
  static constexpr int kSep = 2;
  static constexpr int kEnd = 3;
  static constexpr int kEoi = 4;
  static constexpr int kMask = 5;
  static constexpr int kUnk = 6;
  static constexpr int kReservedCount = 7;

  Vocab();  // reserved tokens only

  // Reserved tokens plus the sorted unique words of the corpus.
  static Vocab build(const std::vector<std::string>& corpus_lines);

  int id(const std::string& token) const;  // kUnk when absent
  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }
  bool is_special(int id) const { return id >= 0 && id < kReservedCount; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  void save(const std::string& path) const;
  static Vocab load(const std::string& path);
  static Vocab from_tokens(std::vector<std::string> tokens);

 private:
  void add(const std::string& token);
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Lowercase, split punctuation into single-character tokens, split on
// whitespace. Total and deterministic on any input string.
std::vector<std::string> split_words(const std::string& text);

std::vector<int> tokenize(const std::string& text, const Vocab& vocab);

// Joins tokens with single spaces; the normalized form round-trips.
std::string detokenize(const std::vector<int>& ids, const Vocab& vocab);

}  // namespace unidial
