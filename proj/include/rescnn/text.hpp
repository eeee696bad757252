#pragma once

// Tweet ingestion and encoding: CSV reading, cleaning, de-duplication,
// vocabulary and label encoding, character quantization, GloVe loading and
// stratified splitting.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "rescnn/csv.hpp"
#include "rescnn/rng.hpp"
#include "rescnn/tensor.hpp"

namespace rescnn::text {

inline constexpr int kPipelineVersion = 1;
inline constexpr std::size_t kCharLength = 1014;
inline constexpr std::size_t kDefaultWordLength = 100;
inline constexpr std::int64_t kPadId = 0;
inline constexpr std::int64_t kOovId = 1;

// ---- ingestion --------------------------------------------------------------

struct RawRecord {
  std::string text;
  std::string label;
  std::size_t line = 0;  // first physical line of the row in the source file
};

struct CsvColumns {
  std::string text = "tweet_text";
  std::string label = "cyberbullying_type";
};

struct IngestResult {
  std::vector<RawRecord> records;
  std::size_t skipped = 0;
  std::vector<csv::ParseIssue> issues;  // one per skipped row
};

/// Throws ConfigError if the header lacks either column. Malformed rows, rows
/// with the wrong field count and rows with empty text are skipped and listed.
IngestResult ingest_csv(std::istream& in, const CsvColumns& columns = {});
IngestResult ingest_csv(const std::filesystem::path& path, const CsvColumns& columns = {});

// ---- cleaning ---------------------------------------------------------------

using StopWords = std::unordered_set<std::string>;

/// One lowercase word per line; blank lines and '#' comments ignored.
StopWords load_stopwords(const std::filesystem::path& path);
StopWords parse_stopwords(std::istream& in);
/// FNV-1a 64 over the sorted list, rendered as 16 hex digits.
std::string stopwords_fingerprint(const StopWords& words);

/// ASCII emoticons removed as whole tokens (compared lowercase).
const std::vector<std::string>& emoticons();

/// Lowercase; drop URLs, @mentions, emoji/pictographs, ASCII emoticons and
/// control characters; strip '#' and edge punctuation from words; drop
/// stop-words; collapse whitespace. Idempotent.
std::string clean_text(std::string_view s, const StopWords& stopwords);

/// Split on ASCII whitespace.
std::vector<std::string> tokenize(std::string_view s);

// ---- de-duplication ---------------------------------------------------------

struct CleanRecord {
  std::string raw;
  std::string cleaned;
  std::string label;
  std::size_t line = 0;
};

struct DedupResult {
  std::vector<CleanRecord> records;
  std::size_t removed = 0;
};

/// Keeps the first record for each distinct cleaned text, preserving order.
DedupResult deduplicate(std::vector<CleanRecord> records);

// ---- vocabulary -------------------------------------------------------------

/// Index 0 is padding, index 1 out-of-vocabulary; corpus tokens start at 2,
/// most frequent first with ties broken alphabetically.
class Vocab {
 public:
  static Vocab build(const std::vector<std::vector<std::string>>& corpus, std::size_t min_freq = 1);
  /// Rebuild from tokens in index order (including the two reserved entries).
  static Vocab from_tokens(std::vector<std::string> tokens, std::vector<std::size_t> frequencies);
  /// The first `max_size` entries (reserved ones included).
  Vocab truncated(std::size_t max_size) const;

  std::size_t size() const { return tokens_.size(); }
  std::int64_t index(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(std::size_t i) const { return tokens_.at(i); }
  std::size_t frequency(std::size_t i) const { return freqs_.at(i); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::vector<std::size_t>& frequencies() const { return freqs_; }

  bool operator==(const Vocab& o) const { return tokens_ == o.tokens_ && freqs_ == o.freqs_; }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::size_t> freqs_;
  std::unordered_map<std::string, std::int64_t> index_;
};

inline constexpr const char* kPadToken = "<pad>";
inline constexpr const char* kOovToken = "<unk>";

/// Vocab ids (OOV -> 1), right-padded with 0 or truncated to `length`.
std::vector<std::int64_t> encode_words(const std::vector<std::string>& tokens, const Vocab& vocab,
                                       std::size_t length = kDefaultWordLength);

/// The 69-symbol character alphabet: a-z, 0-9, 32 ASCII punctuation marks, space.
const std::u32string& char_alphabet();

/// Alphabet index 1..69 per character after lowercasing, 0 for anything else,
/// padded with 0 or truncated to `length` characters.
std::vector<std::int64_t> quantize_chars(std::string_view s, std::size_t length = kCharLength);

// ---- embeddings ---------------------------------------------------------------

/// Reads a GloVe text file (token followed by `dim` decimals per line) into a
/// vocab.size() x dim table. Tokens missing from the file get values drawn
/// uniform(-0.5, 0.5) / 100 from `rng`, in index order; row 0 is zero.
/// Throws DataError naming the line for malformed lines or wrong widths.
Tensor load_glove(const std::filesystem::path& path, const Vocab& vocab, Rng& rng, std::size_t dim = 100);
Tensor load_glove(std::istream& in, const Vocab& vocab, Rng& rng, std::size_t dim = 100);

/// The table used when no GloVe file is given: every row drawn as for a
/// missing token, padding row zero.
Tensor random_embedding(const Vocab& vocab, Rng& rng, std::size_t dim = 100);

// ---- labels -----------------------------------------------------------------

/// Maps source dataset labels onto an ordered list of class names. Config
/// lines look like `source = class`; an empty class drops the source label.
/// Class indices follow first appearance in the file.
class LabelEncoder {
 public:
  static LabelEncoder parse(std::istream& in);
  static LabelEncoder load(const std::filesystem::path& path);
  static LabelEncoder from_classes(std::vector<std::string> classes);
  static LabelEncoder from_map(std::vector<std::pair<std::string, std::string>> source_map);

  std::size_t size() const { return classes_.size(); }
  const std::vector<std::string>& classes() const { return classes_; }

  /// Class index for a class name; throws IndexError if unknown.
  int encode(const std::string& class_name) const;
  const std::string& decode(int index) const;

  enum class Source { kMapped, kDropped, kUnknown };
  /// Resolves a raw dataset label through the source map.
  Source map_source(const std::string& source_label, int& index) const;
  const std::vector<std::pair<std::string, std::string>>& source_map() const { return source_map_; }

 private:
  std::vector<std::string> classes_;
  std::vector<std::pair<std::string, std::string>> source_map_;
};

// ---- samples and splitting ----------------------------------------------------

struct EncodedSample {
  std::vector<std::int64_t> word_ids;
  std::vector<std::int64_t> char_ids;
  int label = 0;

  bool operator==(const EncodedSample&) const = default;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded shuffle, then per class the first round(fraction * n_c) indices
/// (clamped to [1, n_c - 1]) go to train and the rest to test. Throws
/// DataError if a class has fewer than two samples.
SplitIndices stratified_split(const std::vector<int>& labels, double fraction, std::uint64_t seed);

struct Split {
  std::vector<EncodedSample> train;
  std::vector<EncodedSample> test;
};

Split split_train_test(const std::vector<EncodedSample>& samples, double fraction, std::uint64_t seed);

/// Prepared-dataset CSV: header `label,word_ids,char_ids`, ids space separated.
void write_samples(const std::filesystem::path& path, const std::vector<EncodedSample>& samples);
std::vector<EncodedSample> read_samples(const std::filesystem::path& path);

// ---- prepared dataset sidecar ---------------------------------------------------

struct DatasetInfo {
  int pipeline_version = kPipelineVersion;
  std::uint64_t seed = 0;
  std::size_t word_len = kDefaultWordLength;
  std::size_t char_len = kCharLength;
  std::size_t min_freq = 1;
  double train_fraction = 0.8;
  std::string stopwords_fingerprint;
  LabelEncoder labels = LabelEncoder::from_classes({"age", "ethnicity", "gender", "religion", "other"});
  Vocab vocab = Vocab::from_tokens({kPadToken, kOovToken}, {0, 0});
  std::vector<std::pair<std::string, std::size_t>> stats;  // in reporting order
};

std::string dataset_info_json(const DatasetInfo& info);
DatasetInfo parse_dataset_info(const std::string& json);
void write_dataset_info(const std::filesystem::path& path, const DatasetInfo& info);
DatasetInfo read_dataset_info(const std::filesystem::path& path);

}  // namespace rescnn::text
