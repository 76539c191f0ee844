#include "agree/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <ostream>

#include "agree/common.hpp"

namespace agree {
namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return cols;
}

std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

ConllReader::ConllReader(const std::string& path, ReadOptions options)
    : in_(path), name_(std::filesystem::path(path).filename().string()), options_(options) {
  if (!in_) throw DataError("cannot read corpus file: " + path);
}

std::optional<Sentence> ConllReader::next() {
  std::string line;
  std::vector<std::pair<std::size_t, std::string>> block;
  while (true) {
    bool got = static_cast<bool>(std::getline(in_, line));
    if (got) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
    }
    if (!got || is_blank(line)) {
      if (!block.empty()) {
        auto s = parse_block(block);
        block.clear();
        if (s) return s;
      }
      if (!got) return std::nullopt;
      continue;
    }
    if (line.front() == '#') continue;
    block.emplace_back(line_no_, line);
  }
}

std::optional<Sentence> ConllReader::parse_block(
    const std::vector<std::pair<std::size_t, std::string>>& lines) {
  const auto& c = options_.columns;
  const int needed = std::max({c.id, c.form, c.pos, c.head, c.deprel});
  Sentence s;
  s.id = name_ + ":" + std::to_string(lines.front().first) + "-" + std::to_string(lines.back().first);

  auto fail = [&](std::size_t line, std::string msg) -> std::optional<Sentence> {
    warnings_.push_back({line, std::move(msg)});
    return std::nullopt;
  };

  for (const auto& [line_no, text] : lines) {
    auto cols = split_tabs(text);
    if (static_cast<int>(cols.size()) < needed) {
      return fail(line_no, "expected at least " + std::to_string(needed) + " columns");
    }
    auto id_col = cols[c.id - 1];
    // Multiword-token ranges and empty nodes carry no head of their own.
    if (id_col.find_first_of("-.") != std::string_view::npos) continue;
    auto index = parse_int(id_col);
    auto head = parse_int(cols[c.head - 1]);
    if (!index) return fail(line_no, "non-numeric token index '" + std::string(id_col) + "'");
    if (!head) return fail(line_no, "non-numeric head '" + std::string(cols[c.head - 1]) + "'");
    Token t;
    t.index = *index;
    t.form = std::string(cols[c.form - 1]);
    t.lower = to_lower(t.form);
    t.pos = std::string(cols[c.pos - 1]);
    t.head = *head;
    t.deprel = std::string(cols[c.deprel - 1]);
    s.tokens.push_back(std::move(t));
  }
  if (auto problem = validate(s); !problem.empty()) return fail(lines.front().first, problem);
  if (options_.max_len > 0 && s.size() >= options_.max_len) {
    ++filtered_;
    return std::nullopt;
  }
  return s;
}

std::string validate(const Sentence& s) {
  if (s.tokens.empty()) return "empty sentence";
  const int n = static_cast<int>(s.tokens.size());
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const Token& t = s.tokens[static_cast<std::size_t>(i)];
    if (t.index != i + 1) return "token indices are not contiguous at position " + std::to_string(i + 1);
    if (t.head < 0 || t.head > n) return "head out of range at token " + std::to_string(t.index);
    if (t.head == t.index) return "token " + std::to_string(t.index) + " is its own head";
    if (t.pos.empty()) return "empty POS tag at token " + std::to_string(t.index);
    if (t.head == 0) ++roots;
  }
  if (roots == 0) return "no root token";
  return {};
}

Corpus read_conll(const std::string& path, const ReadOptions& options) {
  ConllReader reader(path, options);
  Corpus corpus;
  while (auto s = reader.next()) corpus.sentences.push_back(std::move(*s));
  corpus.warnings = reader.warnings();
  corpus.filtered = reader.filtered();
  return corpus;
}

void write_conll(std::ostream& out, const std::vector<Sentence>& sentences, const ColumnLayout& columns) {
  const int width = std::max({columns.id, columns.form, columns.pos, columns.head, columns.deprel, 10});
  for (const auto& s : sentences) {
    for (const auto& t : s.tokens) {
      std::vector<std::string> cols(static_cast<std::size_t>(width), "_");
      cols[columns.id - 1] = std::to_string(t.index);
      cols[columns.form - 1] = t.form;
      cols[columns.pos - 1] = t.pos;
      cols[columns.head - 1] = std::to_string(t.head);
      cols[columns.deprel - 1] = t.deprel;
      for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "\t" : "") << cols[i];
      out << '\n';
    }
    out << '\n';
  }
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    case Split::Test: return "test";
  }
  return "test";
}

void SplitAssignment::check() const {
  for (double f : {train, valid, test}) {
    if (!(f >= 0.0 && f <= 1.0)) throw UsageError("split fractions must lie in [0, 1]");
  }
  if (std::abs(train + valid + test - 1.0) > 1e-9) throw UsageError("split fractions must sum to 1");
}

Split assign_split(std::string_view sentence_id, const SplitAssignment& split) {
  const double u = unit_interval(stable_hash(sentence_id, split.seed, HashStream::Split));
  if (u < split.train) return Split::Train;
  if (u < split.train + split.valid) return Split::Valid;
  return Split::Test;
}

}  // namespace agree
