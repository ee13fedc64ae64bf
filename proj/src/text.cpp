#include "text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

namespace unidial {

namespace {
const char* kReserved[Vocab::kReservedCount] = {
    "[PAD]", "[CLS]", "[SEP]", "[END]", "[EOI]", "[MASK]", "[UNK]"};
}

Vocab::Vocab() {
  for (const char* t : kReserved) add(t);
}

void Vocab::add(const std::string& token) {
  if (index_.count(token)) return;
  index_[token] = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
}

Vocab Vocab::build(const std::vector<std::string>& corpus_lines) {
  std::set<std::string> words;
  for (const auto& line : corpus_lines) {
    for (auto& w : split_words(line)) words.insert(std::move(w));
  }
  Vocab v;
  for (const auto& w : words) v.add(w);
  return v;
}

int Vocab::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || id >= static_cast<int>(tokens_.size())) {
    throw IndexError("Vocab::token: id " + std::to_string(id) +
                     " out of range for vocab of " +
                     std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

void Vocab::save(const std::string& path) const {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("Vocab::save: cannot open " + path);
  for (const auto& t : tokens_) f << t << "\n";
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("Vocab::load: cannot open " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(f, line)) tokens.push_back(line);
  return from_tokens(std::move(tokens));
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < kReservedCount) {
    throw DataError("Vocab: token list shorter than the reserved prefix");
  }
  for (int i = 0; i < kReservedCount; ++i) {
    if (tokens[static_cast<std::size_t>(i)] != kReserved[i]) {
      throw DataError("Vocab: reserved token mismatch at id " +
                      std::to_string(i) + ": got " +
                      tokens[static_cast<std::size_t>(i)]);
    }
  }
  Vocab v;
  v.tokens_.clear();
  v.index_.clear();
  for (auto& t : tokens) v.add(t);
  if (v.tokens_.size() != tokens.size()) {
    throw DataError("Vocab: duplicate token in list");
  }
  return v;
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) {
      out.push_back(word);
      word.clear();
    }
  };
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      word.push_back(static_cast<char>(std::tolower(c)));
    } else if (std::isspace(c)) {
      flush();
    } else {
      // punctuation becomes its own token
      flush();
      out.emplace_back(1, static_cast<char>(c));
    }
  }
  flush();
  return out;
}

std::vector<int> tokenize(const std::string& text, const Vocab& vocab) {
  std::vector<int> ids;
  for (const auto& w : split_words(text)) ids.push_back(vocab.id(w));
  return ids;
}

std::string detokenize(const std::vector<int>& ids, const Vocab& vocab) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ' ';
    out += vocab.token(ids[i]);
  }
  return out;
}

}  // namespace unidial
