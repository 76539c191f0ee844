#pragma once

#include <cstddef>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace agree {

struct Token {
  int index = 0;     // 1-based position
  std::string form;
  std::string lower;
  std::string pos;
  int head = 0;      // 0 = root
  std::string deprel;
};

struct Sentence {
  std::string id;    // "<file>:<first line>-<last line>"
  std::vector<Token> tokens;

  std::size_t size() const { return tokens.size(); }
  // 1-based access, matching Token::index and Token::head.
  const Token& at(int index) const { return tokens.at(static_cast<std::size_t>(index - 1)); }
};

// 1-based column positions in the tab-separated input. Defaults follow CoNLL-X.
struct ColumnLayout {
  int id = 1;
  int form = 2;
  int pos = 5;
  int head = 7;
  int deprel = 8;
};

struct ReadWarning {
  std::size_t line = 0;
  std::string message;
};

struct ReadOptions {
  ColumnLayout columns;
  // Sentences with max_len or more tokens are filtered; 0 disables the filter.
  std::size_t max_len = 50;
};

// Streams sentences from a CoNLL-style file. Malformed blocks are skipped
// and recorded in warnings(); filtered (too long) blocks are only counted.
class ConllReader {
 public:
  ConllReader(const std::string& path, ReadOptions options = {});

  std::optional<Sentence> next();

  const std::vector<ReadWarning>& warnings() const { return warnings_; }
  std::size_t filtered() const { return filtered_; }

 private:
  std::optional<Sentence> parse_block(const std::vector<std::pair<std::size_t, std::string>>& lines);

  std::ifstream in_;
  std::string name_;
  ReadOptions options_;
  std::size_t line_no_ = 0;
  std::vector<ReadWarning> warnings_;
  std::size_t filtered_ = 0;
};

struct Corpus {
  std::vector<Sentence> sentences;
  std::vector<ReadWarning> warnings;
  std::size_t filtered = 0;
};

Corpus read_conll(const std::string& path, const ReadOptions& options = {});

// Writes sentences in the given column layout; unused columns are "_".
void write_conll(std::ostream& out, const std::vector<Sentence>& sentences,
                 const ColumnLayout& columns = {});

// Checks the structural invariants of a parsed sentence; empty string when valid.
std::string validate(const Sentence& s);

enum class Split { Train, Valid, Test };
std::string_view to_string(Split s);

struct SplitAssignment {
  double train = 0.09;
  double valid = 0.01;
  double test = 0.90;
  std::uint64_t seed = 0;

  void check() const;
};

Split assign_split(std::string_view sentence_id, const SplitAssignment& split);

}  // namespace agree
