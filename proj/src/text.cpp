#include "rescnn/text.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace rescnn::text {

// ---- ingestion --------------------------------------------------------------

IngestResult ingest_csv(std::istream& in, const CsvColumns& columns) {
  csv::Reader reader(in);
  csv::Record rec;
  std::vector<csv::ParseIssue> header_issues;
  if (!reader.next(rec, header_issues)) throw DataError("CSV input is empty");
  if (!header_issues.empty()) throw DataError(fmt::format("line {}: malformed CSV header", header_issues[0].line));

  auto column = [&](const std::string& name) {
    auto it = std::find(rec.fields.begin(), rec.fields.end(), name);
    if (it == rec.fields.end()) throw ConfigError("CSV header is missing column '" + name + "'");
    return static_cast<std::size_t>(it - rec.fields.begin());
  };
  const std::size_t text_col = column(columns.text);
  const std::size_t label_col = column(columns.label);
  const std::size_t width = rec.fields.size();

  IngestResult r;
  for (;;) {
    const std::size_t before = r.issues.size();
    const bool more = reader.next(rec, r.issues);
    r.skipped += r.issues.size() - before;
    if (!more) break;
    if (rec.fields.size() != width) {
      r.issues.push_back({rec.line, fmt::format("expected {} fields, found {}", width, rec.fields.size())});
      ++r.skipped;
      continue;
    }
    if (rec.fields[text_col].empty()) {
      r.issues.push_back({rec.line, "empty text"});
      ++r.skipped;
      continue;
    }
    r.records.push_back({rec.fields[text_col], rec.fields[label_col], rec.line});
  }
  return r;
}

IngestResult ingest_csv(const std::filesystem::path& path, const CsvColumns& columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open CSV file " + path.string());
  return ingest_csv(in, columns);
}

// ---- UTF-8 ------------------------------------------------------------------

namespace {

constexpr char32_t kInvalid = 0xFFFFFFFF;

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t n = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      cp = b0;
      n = 1;
    } else if ((b0 & 0xE0) == 0xC0) {
      cp = b0 & 0x1F;
      n = 2;
    } else if ((b0 & 0xF0) == 0xE0) {
      cp = b0 & 0x0F;
      n = 3;
    } else if ((b0 & 0xF8) == 0xF0) {
      cp = b0 & 0x07;
      n = 4;
    } else {
      out.push_back(kInvalid);
      ++i;
      continue;
    }
    if (i + n > s.size()) {
      out.push_back(kInvalid);
      ++i;
      continue;
    }
    bool ok = true;
    for (std::size_t k = 1; k < n; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok) {
      out.push_back(kInvalid);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += n;
  }
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

// Emoji, pictographs and other symbol blocks, plus the joiners and selectors
// that glue emoji sequences together.
bool is_symbol_codepoint(char32_t c) {
  struct Range {
    char32_t lo, hi;
  };
  static constexpr Range kRanges[] = {
      {0x200D, 0x200D},   {0x20E3, 0x20E3},   {0x2190, 0x21FF},   {0x2300, 0x23FF},
      {0x2460, 0x24FF},   {0x25A0, 0x27BF},   {0x2900, 0x297F},   {0x2B00, 0x2BFF},
      {0x3030, 0x3030},   {0x303D, 0x303D},   {0x3297, 0x3297},   {0x3299, 0x3299},
      {0xFE00, 0xFE0F},   {0x1F000, 0x1FAFF}, {0xE0020, 0xE007F},
  };
  for (const auto& r : kRanges)
    if (c >= r.lo && c <= r.hi) return true;
  return false;
}

bool is_unicode_space(char32_t c) {
  return c == 0x00A0 || c == 0x1680 || (c >= 0x2000 && c <= 0x200B) || c == 0x2028 || c == 0x2029 ||
         c == 0x202F || c == 0x205F || c == 0x3000;
}

bool is_control(char32_t c) { return c < 0x20 || (c >= 0x7F && c <= 0x9F) || c == kInvalid; }

bool is_edge_punct(char32_t c) {
  if (c < 0x80) return std::ispunct(static_cast<int>(c)) != 0;
  return (c >= 0x2010 && c <= 0x2027) || c == 0x00AB || c == 0x00BB || c == 0x00BF || c == 0x00A1;
}

// Decodes the handful of HTML entities that survive in tweet dumps, repeating
// until nothing changes so doubly-escaped text is handled in one pass.
std::string decode_entities(std::string s) {
  static const std::pair<std::string_view, std::string_view> kEntities[] = {
      {"&amp;", "&"}, {"&lt;", "<"}, {"&gt;", ">"}, {"&quot;", "\""}, {"&#39;", "'"}, {"&apos;", "'"}};
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& [from, to] : kEntities) {
      for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos;) {
        s.replace(pos, from.size(), to);
        pos += to.size();
        changed = true;
      }
    }
  }
  return s;
}

std::u32string strip_edges(const std::u32string& t) {
  std::size_t b = 0, e = t.size();
  while (b < e && t[b] != U'@' && is_edge_punct(t[b])) ++b;
  while (e > b && is_edge_punct(t[e - 1])) --e;
  return t.substr(b, e - b);
}

std::string to_utf8(const std::u32string& s) {
  std::string out;
  for (char32_t c : s) append_utf8(out, c);
  return out;
}

bool is_url(const std::string& t) {
  return t.find("://") != std::string::npos || t.rfind("www.", 0) == 0;
}

}  // namespace

// ---- cleaning ---------------------------------------------------------------

StopWords parse_stopwords(std::istream& in) {
  StopWords words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto b = line.find_first_not_of(" \t");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t");
    words.insert(line.substr(b, e - b + 1));
  }
  return words;
}

StopWords load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open stop-word list " + path.string());
  return parse_stopwords(in);
}

std::string stopwords_fingerprint(const StopWords& words) {
  std::vector<std::string> sorted(words.begin(), words.end());
  std::sort(sorted.begin(), sorted.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& w : sorted) {
    for (unsigned char c : w) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= '\n';
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

const std::vector<std::string>& emoticons() {
  static const std::vector<std::string> kList = {
      ":)", ":-)", ":(", ":-(", ":d", ":-d", ";)", ";-)", ";d", ":p", ":-p", ";p", ":o", ":-o", ":/", ":-/",
      ":\\", ":'(", ":')", ":*", ":-*", ":|", ":-|", ":]", ":[", ":3", "=)", "=(", "=d", "(:", "):", "d:",
      ">:(", ">:)", "<3", "</3", "^_^", "^^", "-_-", "o_o", "xd", "xp", "t_t"};
  return kList;
}

std::string clean_text(std::string_view s, const StopWords& stopwords) {
  static const std::unordered_set<std::string> kEmoticons(emoticons().begin(), emoticons().end());

  // Character pass: lowercase ASCII, turn separators into spaces, drop symbols.
  std::u32string chars;
  for (char32_t c : decode_utf8(decode_entities(std::string(s)))) {
    if (c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v' || is_unicode_space(c)) {
      chars.push_back(U' ');
    } else if (is_control(c) || is_symbol_codepoint(c)) {
      chars.push_back(U' ');
    } else {
      chars.push_back(c < 0x80 ? static_cast<char32_t>(std::tolower(static_cast<int>(c))) : c);
    }
  }

  auto dropped = [&](const std::string& t) {
    return t.empty() || t[0] == '@' || is_url(t) || kEmoticons.count(t) > 0 || stopwords.count(t) > 0;
  };

  std::string out;
  std::size_t i = 0;
  while (i < chars.size()) {
    while (i < chars.size() && chars[i] == U' ') ++i;
    std::size_t j = i;
    while (j < chars.size() && chars[j] != U' ') ++j;
    if (j == i) break;
    const std::u32string raw = chars.substr(i, j - i);
    i = j;
    if (dropped(to_utf8(raw))) continue;
    const std::string word = to_utf8(strip_edges(raw));
    if (dropped(word)) continue;
    if (!out.empty()) out += ' ';
    out += word;
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  auto space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  while (i < s.size()) {
    while (i < s.size() && space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !space(s[j])) ++j;
    if (j > i) tokens.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return tokens;
}

// ---- de-duplication ---------------------------------------------------------

DedupResult deduplicate(std::vector<CleanRecord> records) {
  DedupResult r;
  std::unordered_set<std::string> seen;
  for (auto& rec : records) {
    if (seen.insert(rec.cleaned).second) {
      r.records.push_back(std::move(rec));
    } else {
      ++r.removed;
    }
  }
  return r;
}

// ---- vocabulary -------------------------------------------------------------

Vocab Vocab::build(const std::vector<std::vector<std::string>>& corpus, std::size_t min_freq) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& doc : corpus)
    for (const auto& t : doc) ++counts[t];
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [t, n] : counts)
    if (n >= min_freq && t != kPadToken && t != kOovToken) kept.emplace_back(t, n);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> tokens{kPadToken, kOovToken};
  std::vector<std::size_t> freqs{0, 0};
  for (auto& [t, n] : kept) {
    tokens.push_back(t);
    freqs.push_back(n);
  }
  return from_tokens(std::move(tokens), std::move(freqs));
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens, std::vector<std::size_t> frequencies) {
  if (tokens.size() < 2 || tokens[0] != kPadToken || tokens[1] != kOovToken) {
    throw DataError("vocabulary must start with the reserved <pad> and <unk> entries");
  }
  if (frequencies.size() != tokens.size()) throw DataError("vocabulary token and frequency lists differ in length");
  Vocab v;
  v.tokens_ = std::move(tokens);
  v.freqs_ = std::move(frequencies);
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (!v.index_.emplace(v.tokens_[i], static_cast<std::int64_t>(i)).second) {
      throw DataError("duplicate vocabulary token '" + v.tokens_[i] + "'");
    }
  }
  return v;
}

Vocab Vocab::truncated(std::size_t max_size) const {
  if (max_size < 2) throw ConfigError("vocabulary size must be at least 2 (padding and OOV)");
  const std::size_t n = std::min(max_size, tokens_.size());
  return from_tokens({tokens_.begin(), tokens_.begin() + static_cast<std::ptrdiff_t>(n)},
                     {freqs_.begin(), freqs_.begin() + static_cast<std::ptrdiff_t>(n)});
}

std::int64_t Vocab::index(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end() || it->second < 2) return kOovId;
  return it->second;
}

bool Vocab::contains(std::string_view token) const { return index(token) != kOovId; }

std::vector<std::int64_t> encode_words(const std::vector<std::string>& tokens, const Vocab& vocab, std::size_t length) {
  std::vector<std::int64_t> ids(length, kPadId);
  for (std::size_t i = 0; i < std::min(length, tokens.size()); ++i) ids[i] = vocab.index(tokens[i]);
  return ids;
}

const std::u32string& char_alphabet() {
  static const std::u32string kAlphabet = U"abcdefghijklmnopqrstuvwxyz0123456789-,;.!?:'\"/\\|_@#$%^&*~`+=<>()[]{} ";
  return kAlphabet;
}

std::vector<std::int64_t> quantize_chars(std::string_view s, std::size_t length) {
  static const std::unordered_map<char32_t, std::int64_t> kIndex = [] {
    std::unordered_map<char32_t, std::int64_t> m;
    const auto& a = char_alphabet();
    for (std::size_t i = 0; i < a.size(); ++i) m.emplace(a[i], static_cast<std::int64_t>(i + 1));
    return m;
  }();
  std::vector<std::int64_t> ids(length, 0);
  const std::u32string chars = decode_utf8(s);
  for (std::size_t i = 0; i < std::min(length, chars.size()); ++i) {
    char32_t c = chars[i];
    if (c < 0x80) c = static_cast<char32_t>(std::tolower(static_cast<int>(c)));
    auto it = kIndex.find(c);
    ids[i] = it == kIndex.end() ? 0 : it->second;
  }
  return ids;
}

// ---- embeddings ---------------------------------------------------------------

Tensor load_glove(std::istream& in, const Vocab& vocab, Rng& rng, std::size_t dim) {
  Tensor table({vocab.size(), dim});
  std::vector<bool> found(vocab.size(), false);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto sp = line.find(' ');
    if (sp == std::string::npos || sp == 0) throw DataError(fmt::format("GloVe line {}: expected a token followed by {} values", line_no, dim));
    const std::string_view token(line.data(), sp);
    const std::int64_t id = vocab.index(token);
    const bool wanted = id != kOovId && !found[static_cast<std::size_t>(id)];

    const char* p = line.data() + sp;
    const char* end = line.data() + line.size();
    std::size_t n = 0;
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      double v = 0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc() || (next < end && *next != ' ')) {
        throw DataError(fmt::format("GloVe line {}: malformed number in vector for '{}'", line_no, token));
      }
      if (n < dim && wanted) table.at(static_cast<std::size_t>(id), n) = v;
      ++n;
      p = next;
    }
    if (n != dim) throw DataError(fmt::format("GloVe line {}: expected {} values for '{}', found {}", line_no, dim, token, n));
    if (wanted) found[static_cast<std::size_t>(id)] = true;
  }
  for (std::size_t i = 1; i < vocab.size(); ++i) {
    if (found[i]) continue;
    for (std::size_t j = 0; j < dim; ++j) table.at(i, j) = rng.uniform(-0.5, 0.5) / 100.0;
  }
  return table;
}

Tensor load_glove(const std::filesystem::path& path, const Vocab& vocab, Rng& rng, std::size_t dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open GloVe file " + path.string());
  return load_glove(in, vocab, rng, dim);
}

Tensor random_embedding(const Vocab& vocab, Rng& rng, std::size_t dim) {
  std::istringstream empty;
  return load_glove(empty, vocab, rng, dim);
}

// ---- labels -----------------------------------------------------------------

LabelEncoder LabelEncoder::parse(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("label map line {}: expected 'source = class'", line_no));
    const std::string source = trim(line.substr(0, eq));
    if (source.empty()) throw ConfigError(fmt::format("label map line {}: empty source label", line_no));
    entries.emplace_back(source, trim(line.substr(eq + 1)));
  }
  return from_map(std::move(entries));
}

LabelEncoder LabelEncoder::from_map(std::vector<std::pair<std::string, std::string>> source_map) {
  LabelEncoder e;
  for (auto& [source, cls] : source_map) {
    for (const auto& [s, c] : e.source_map_) {
      if (s == source) throw ConfigError(fmt::format("label map: source label '{}' mapped twice", source));
    }
    if (!cls.empty() && std::find(e.classes_.begin(), e.classes_.end(), cls) == e.classes_.end()) e.classes_.push_back(cls);
    e.source_map_.emplace_back(std::move(source), std::move(cls));
  }
  if (e.classes_.empty()) throw ConfigError("label map defines no classes");
  return e;
}

LabelEncoder LabelEncoder::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open label map " + path.string());
  return parse(in);
}

LabelEncoder LabelEncoder::from_classes(std::vector<std::string> classes) {
  LabelEncoder e;
  for (auto& c : classes) {
    if (std::find(e.classes_.begin(), e.classes_.end(), c) != e.classes_.end()) throw ConfigError("duplicate class '" + c + "'");
    e.source_map_.emplace_back(c, c);
    e.classes_.push_back(std::move(c));
  }
  return e;
}

int LabelEncoder::encode(const std::string& class_name) const {
  auto it = std::find(classes_.begin(), classes_.end(), class_name);
  if (it == classes_.end()) throw IndexError("unknown class '" + class_name + "'");
  return static_cast<int>(it - classes_.begin());
}

const std::string& LabelEncoder::decode(int index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= classes_.size()) {
    throw IndexError("class index " + std::to_string(index) + " out of range");
  }
  return classes_[static_cast<std::size_t>(index)];
}

LabelEncoder::Source LabelEncoder::map_source(const std::string& source_label, int& index) const {
  for (const auto& [s, c] : source_map_) {
    if (s != source_label) continue;
    if (c.empty()) return Source::kDropped;
    index = encode(c);
    return Source::kMapped;
  }
  return Source::kUnknown;
}

// ---- splitting --------------------------------------------------------------

SplitIndices stratified_split(const std::vector<int>& labels, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("split fraction must be in (0, 1)");
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(order, rng);

  std::map<int, std::size_t> per_class;
  for (int l : labels) ++per_class[l];
  std::map<int, std::size_t> quota;
  for (const auto& [label, n] : per_class) {
    if (n < 2) throw DataError(fmt::format("class {} has {} sample(s); a stratified split needs at least 2", label, n));
    const auto want = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    quota[label] = std::clamp<std::size_t>(want, 1, n - 1);
  }
  SplitIndices s;
  for (std::size_t i : order) {
    auto& q = quota[labels[i]];
    if (q > 0) {
      s.train.push_back(i);
      --q;
    } else {
      s.test.push_back(i);
    }
  }
  return s;
}

Split split_train_test(const std::vector<EncodedSample>& samples, double fraction, std::uint64_t seed) {
  std::vector<int> labels;
  labels.reserve(samples.size());
  for (const auto& s : samples) labels.push_back(s.label);
  const auto idx = stratified_split(labels, fraction, seed);
  Split out;
  for (std::size_t i : idx.train) out.train.push_back(samples[i]);
  for (std::size_t i : idx.test) out.test.push_back(samples[i]);
  return out;
}

namespace {

std::string join_ids(const std::vector<std::int64_t>& ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(ids[i]);
  }
  return s;
}

std::vector<std::int64_t> parse_ids(const std::string& field, std::size_t line) {
  std::vector<std::int64_t> ids;
  const char* p = field.data();
  const char* end = p + field.size();
  while (p < end) {
    while (p < end && *p == ' ') ++p;
    if (p == end) break;
    std::int64_t v = 0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc()) throw DataError(fmt::format("prepared data line {}: malformed id list", line));
    ids.push_back(v);
    p = next;
  }
  return ids;
}

}  // namespace

void write_samples(const std::filesystem::path& path, const std::vector<EncodedSample>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "label,word_ids,char_ids\n";
  for (const auto& s : samples) out << s.label << ',' << join_ids(s.word_ids) << ',' << join_ids(s.char_ids) << '\n';
  if (!out) throw DataError("error writing " + path.string());
}

std::vector<EncodedSample> read_samples(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open prepared data " + path.string());
  csv::Reader reader(in);
  csv::Record rec;
  std::vector<csv::ParseIssue> issues;
  if (!reader.next(rec, issues) || rec.fields != csv::Row{"label", "word_ids", "char_ids"}) {
    throw DataError(path.string() + ": not a prepared dataset (bad header)");
  }
  std::vector<EncodedSample> samples;
  while (reader.next(rec, issues)) {
    if (rec.fields.size() != 3) throw DataError(fmt::format("{} line {}: expected 3 fields", path.string(), rec.line));
    EncodedSample s;
    auto label = parse_ids(rec.fields[0], rec.line);
    if (label.size() != 1) throw DataError(fmt::format("{} line {}: bad label", path.string(), rec.line));
    s.label = static_cast<int>(label[0]);
    s.word_ids = parse_ids(rec.fields[1], rec.line);
    s.char_ids = parse_ids(rec.fields[2], rec.line);
    samples.push_back(std::move(s));
  }
  if (!issues.empty()) throw DataError(fmt::format("{} line {}: {}", path.string(), issues[0].line, issues[0].message));
  return samples;
}

// ---- sidecar ----------------------------------------------------------------------

std::string dataset_info_json(const DatasetInfo& info) {
  nlohmann::ordered_json j;
  j["pipeline_version"] = info.pipeline_version;
  j["seed"] = info.seed;
  j["word_len"] = info.word_len;
  j["char_len"] = info.char_len;
  j["min_freq"] = info.min_freq;
  j["train_fraction"] = info.train_fraction;
  j["stopwords_fnv1a64"] = info.stopwords_fingerprint;
  j["classes"] = info.labels.classes();
  auto& map = j["label_map"] = nlohmann::ordered_json::array();
  for (const auto& [s, c] : info.labels.source_map()) map.push_back({s, c});
  auto& stats = j["stats"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : info.stats) stats[k] = v;
  j["vocab"] = {{"size", info.vocab.size()}, {"tokens", info.vocab.tokens()}, {"frequencies", info.vocab.frequencies()}};
  return j.dump(1) + "\n";
}

DatasetInfo parse_dataset_info(const std::string& text) {
  DatasetInfo info;
  try {
    const auto j = nlohmann::ordered_json::parse(text);
    info.pipeline_version = j.at("pipeline_version").get<int>();
    if (info.pipeline_version != kPipelineVersion) {
      throw DataError(fmt::format("prepared data uses pipeline version {}, this build reads version {}",
                                  info.pipeline_version, kPipelineVersion));
    }
    info.seed = j.at("seed").get<std::uint64_t>();
    info.word_len = j.at("word_len").get<std::size_t>();
    info.char_len = j.at("char_len").get<std::size_t>();
    info.min_freq = j.at("min_freq").get<std::size_t>();
    info.train_fraction = j.at("train_fraction").get<double>();
    info.stopwords_fingerprint = j.at("stopwords_fnv1a64").get<std::string>();
    std::vector<std::pair<std::string, std::string>> map;
    for (const auto& e : j.at("label_map")) map.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
    info.labels = LabelEncoder::from_map(std::move(map));
    if (info.labels.classes() != j.at("classes").get<std::vector<std::string>>()) {
      throw DataError("dataset sidecar: class list disagrees with the label map");
    }
    for (const auto& [k, v] : j.at("stats").items()) info.stats.emplace_back(k, v.get<std::size_t>());
    const auto& v = j.at("vocab");
    info.vocab = Vocab::from_tokens(v.at("tokens").get<std::vector<std::string>>(),
                                    v.at("frequencies").get<std::vector<std::size_t>>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed dataset sidecar: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("dataset sidecar: ") + e.what());
  }
  return info;
}

void write_dataset_info(const std::filesystem::path& path, const DatasetInfo& info) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << dataset_info_json(info);
  if (!out) throw DataError("error writing " + path.string());
}

DatasetInfo read_dataset_info(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset sidecar " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_dataset_info(ss.str());
}

}  // namespace rescnn::text
