#include "agree/vocab.hpp"

#include <algorithm>
#include <set>

#include "agree/common.hpp"
#include "agree/digest.hpp"

namespace agree {

namespace {
constexpr std::string_view kReservedNames[] = {"<pad>", "<unk>", "<s>", "</s>", "<empty>"};
}

Vocab::Vocab(std::vector<std::string> words, std::vector<std::string> tags, std::vector<WordInfo> info)
    : words_(std::move(words)), tags_(std::move(tags)), info_(std::move(info)) {
  if (info_.size() != words_.size()) info_.resize(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) word_ids_.emplace(words_[i], kReserved + static_cast<int>(i));
  const int tag_base = kReserved + static_cast<int>(words_.size());
  for (std::size_t i = 0; i < tags_.size(); ++i) tag_ids_.emplace(tags_[i], tag_base + static_cast<int>(i));
}

std::optional<int> Vocab::word_id(std::string_view form) const {
  auto it = word_ids_.find(to_lower(form));
  if (it == word_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> Vocab::tag_id(std::string_view pos) const {
  auto it = tag_ids_.find(std::string(pos));
  if (it == tag_ids_.end()) return std::nullopt;
  return it->second;
}

int Vocab::id(std::string_view form, std::string_view pos) const {
  if (auto w = word_id(form)) return *w;
  return tag_id(pos).value_or(kUnknown);
}

std::string Vocab::token_string(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= size()) return "<invalid>";
  if (id < kReserved) return std::string(kReservedNames[id]);
  if (is_word(id)) return words_[static_cast<std::size_t>(id - kReserved)];
  return tags_[static_cast<std::size_t>(id - kReserved) - words_.size()];
}

nlohmann::json Vocab::to_json() const {
  auto info = nlohmann::json::array();
  for (const auto& w : info_) info.push_back({w.majority_tag, w.majority_fraction, w.count});
  return {{"reserved", std::vector<std::string>(std::begin(kReservedNames), std::end(kReservedNames))},
          {"words", words_},
          {"tags", tags_},
          {"word_info", info}};
}

Vocab Vocab::from_json(const nlohmann::json& j) {
  std::vector<WordInfo> info;
  for (const auto& w : j.at("word_info")) {
    info.push_back({w.at(0).get<std::string>(), w.at(1).get<double>(), w.at(2).get<std::size_t>()});
  }
  return Vocab(j.at("words").get<std::vector<std::string>>(), j.at("tags").get<std::vector<std::string>>(),
               std::move(info));
}

std::string Vocab::digest() const { return sha256_hex(to_json().dump()); }

Vocab build_vocab(const std::vector<Sentence>& train, std::size_t cap) {
  if (train.empty()) throw DataError("cannot build a vocabulary from an empty training set");
  std::map<std::string, std::map<std::string, std::size_t>> tag_counts;
  std::map<std::string, std::size_t> counts;
  std::set<std::string> tags;
  for (const auto& s : train) {
    for (const auto& t : s.tokens) {
      const std::string lower = to_lower(t.form);
      ++counts[lower];
      ++tag_counts[lower][t.pos];
      tags.insert(t.pos);
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > cap) ranked.resize(cap);

  std::vector<std::string> words;
  std::vector<Vocab::WordInfo> info;
  for (const auto& [w, n] : ranked) {
    words.push_back(w);
    const auto& tc = tag_counts[w];
    auto best = std::max_element(tc.begin(), tc.end(),
                                 [](const auto& a, const auto& b) { return a.second < b.second; });
    info.push_back({best->first, static_cast<double>(best->second) / static_cast<double>(n), n});
  }
  return Vocab(std::move(words), std::vector<std::string>(tags.begin(), tags.end()), std::move(info));
}

double replaced_fraction(const Vocab& vocab, const std::vector<Sentence>& sentences) {
  std::size_t total = 0;
  std::size_t replaced = 0;
  for (const auto& s : sentences) {
    for (const auto& t : s.tokens) {
      ++total;
      if (!vocab.word_id(t.form)) ++replaced;
    }
  }
  return total ? static_cast<double>(replaced) / static_cast<double>(total) : 0.0;
}

}  // namespace agree
