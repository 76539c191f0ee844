#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "agree/corpus.hpp"
#include "agree/extract.hpp"
#include "agree/train.hpp"
#include "json.hpp"

namespace agree {

// Experiment configuration: a JSON tree of known keys with defaults. Files
// and "a.b.c=value" assignments are merged on top; unknown keys are rejected.
class Config {
 public:
  Config();

  void merge_file(const std::string& path);
  void merge(const nlohmann::json& overrides);
  // "key.path=value"; value is parsed as JSON when possible, else taken as a string.
  void set(std::string_view assignment);

  const nlohmann::json& tree() const { return tree_; }
  const nlohmann::json& at(std::string_view dotted) const;

  ReadOptions read_options() const;
  SplitAssignment split() const;
  ExtractOptions extract_options() const;
  std::uint64_t extract_seed() const;
  std::size_t vocab_cap() const;
  TrainConfig train_config() const;
  double probe_threshold() const;

 private:
  nlohmann::json tree_;
  bool train_fraction_set_ = false;
};

}  // namespace agree
