#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "agree/corpus.hpp"
#include "json.hpp"

namespace agree {

// Word ids for the capped vocabulary. Ids are contiguous from 0: reserved
// symbols first, then words by descending frequency, then one pseudo-token
// per POS tag seen in training. Out-of-vocabulary words map to the pseudo-token
// of their tag; tags never seen in training map to kUnknown.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnknown = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kEmpty = 4;  // stands in for an empty filtered input
  static constexpr int kReserved = 5;

  struct WordInfo {
    std::string majority_tag;
    double majority_fraction = 0.0;
    std::size_t count = 0;
  };

  Vocab() = default;
  Vocab(std::vector<std::string> words, std::vector<std::string> tags, std::vector<WordInfo> info);

  int id(std::string_view form, std::string_view pos) const;
  std::optional<int> word_id(std::string_view form) const;
  std::optional<int> tag_id(std::string_view pos) const;
  bool is_word(int id) const { return id >= kReserved && id < kReserved + static_cast<int>(words_.size()); }

  std::string token_string(int id) const;
  std::size_t size() const { return static_cast<std::size_t>(kReserved) + words_.size() + tags_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  const std::vector<std::string>& tags() const { return tags_; }
  const WordInfo& info(std::size_t word_rank) const { return info_.at(word_rank); }

  nlohmann::json to_json() const;
  static Vocab from_json(const nlohmann::json& j);
  // Hex SHA-256 of the canonical JSON dump.
  std::string digest() const;

 private:
  std::vector<std::string> words_;
  std::vector<std::string> tags_;
  std::vector<WordInfo> info_;
  std::unordered_map<std::string, int> word_ids_;
  std::unordered_map<std::string, int> tag_ids_;
};

// Keeps the `cap` most frequent lowercased forms; ties broken lexicographically.
Vocab build_vocab(const std::vector<Sentence>& train, std::size_t cap);

// Fraction of tokens in `sentences` that map to a POS pseudo-token.
double replaced_fraction(const Vocab& vocab, const std::vector<Sentence>& sentences);

}  // namespace agree
