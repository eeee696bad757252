#include "rescnn/cli.hpp"

#include <omp.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "rescnn/checkpoint.hpp"
#include "rescnn/metrics.hpp"
#include "rescnn/model.hpp"
#include "rescnn/projection.hpp"
#include "rescnn/text.hpp"
#include "rescnn/training.hpp"

#ifndef RESCNN_DATA_DIR
#define RESCNN_DATA_DIR "data"
#endif

namespace fs = std::filesystem;

namespace rescnn::cli {

namespace {

struct Options {
  std::string data;
  std::string glove;
  std::string out;
  std::string config;
  std::string checkpoint;
  std::string model = "combined";
  std::string stopwords = std::string(RESCNN_DATA_DIR) + "/stopwords.txt";
  std::string labels = std::string(RESCNN_DATA_DIR) + "/labels.cfg";
  std::string text_column = "tweet_text";
  std::string label_column = "cyberbullying_type";
  std::string split = "test";
  std::string format = "all";
  std::string word_checkpoint;
  std::string char_checkpoint;
  std::vector<std::string> arch;
  std::vector<std::string> texts;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch;
  std::optional<double> lr;
  std::optional<double> dropout;
  std::optional<std::size_t> vocab;
  std::optional<std::size_t> word_len;
  std::optional<std::size_t> min_freq;
  double train_fraction = 0.8;
  std::size_t components = 2;
  std::size_t top = 1000;
  int decimals = 1;
  int threads = 0;
  bool pretrain = false;
  bool char_dense_head = false;
};

struct Settings {
  TrainConfig train;
  ModelConfig model;
};

void print(std::ostream& os, const std::string& s) { os << s << std::flush; }

// Config file keys go to TrainConfig first, then ModelConfig; flags override both.
Settings resolve(const Options& o) {
  Settings s;
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw ConfigError("cannot open config file " + o.config);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const auto eq = line.find('=');
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      if (eq == std::string::npos) throw ConfigError(fmt::format("{} line {}: expected key = value", o.config, line_no));
      auto trim = [](std::string x) {
        const auto b = x.find_first_not_of(" \t\r");
        return b == std::string::npos ? std::string() : x.substr(b, x.find_last_not_of(" \t\r") - b + 1);
      };
      const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
      if (!s.train.set(key, value) && !s.model.set(key, value)) {
        throw ConfigError(fmt::format("{} line {}: unknown key '{}'", o.config, line_no, key));
      }
    }
  }
  for (const auto& item : o.arch) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || !s.model.set(item.substr(0, eq), item.substr(eq + 1))) {
      throw ConfigError("--arch expects key=value with a model size key, got '" + item + "'");
    }
  }
  if (o.seed) s.train.seed = *o.seed;
  if (o.epochs) s.train.epochs = *o.epochs;
  if (o.batch) s.train.batch = *o.batch;
  if (o.lr) s.train.lr = *o.lr;
  if (o.dropout) s.train.dropout = *o.dropout;
  if (o.word_len) s.train.word_len = *o.word_len;
  if (o.char_dense_head) s.model.char_dense_head = true;
  s.model.dropout = s.train.dropout;
  s.train.validate();
  return s;
}

fs::path require_out(const Options& o) {
  if (o.out.empty()) throw ConfigError("--out is required");
  fs::create_directories(o.out);
  return o.out;
}

void require_file(const std::string& path, const char* flag) {
  if (path.empty()) throw ConfigError(std::string(flag) + " is required");
  if (!fs::is_regular_file(path)) throw ConfigError(fmt::format("{} {}: no such file", flag, path));
}

void require_dir(const std::string& path, const char* flag) {
  if (path.empty()) throw ConfigError(std::string(flag) + " is required");
  if (!fs::is_directory(path)) throw ConfigError(fmt::format("{} {}: no such directory", flag, path));
}

// ---- prepare --------------------------------------------------------------------

int cmd_prepare(const Options& o, std::ostream& out, std::ostream& err) {
  require_file(o.data, "--data");
  const Settings s = resolve(o);
  const fs::path dir = require_out(o);
  const auto labels = text::LabelEncoder::load(o.labels);
  const auto stopwords = text::load_stopwords(o.stopwords);

  auto ingest = text::ingest_csv(fs::path(o.data), text::CsvColumns{o.text_column, o.label_column});
  for (std::size_t i = 0; i < std::min<std::size_t>(ingest.issues.size(), 10); ++i) {
    print(err, fmt::format("warning: {} line {}: {}\n", o.data, ingest.issues[i].line, ingest.issues[i].message));
  }
  if (ingest.issues.size() > 10) print(err, fmt::format("warning: {} more skipped rows\n", ingest.issues.size() - 10));

  std::size_t dropped = 0, unknown = 0, empty = 0;
  std::vector<text::CleanRecord> cleaned;
  std::vector<std::string> unknown_labels;
  for (auto& r : ingest.records) {
    int idx = 0;
    const auto status = labels.map_source(r.label, idx);
    if (status == text::LabelEncoder::Source::kDropped) {
      ++dropped;
      continue;
    }
    if (status == text::LabelEncoder::Source::kUnknown) {
      if (std::find(unknown_labels.begin(), unknown_labels.end(), r.label) == unknown_labels.end()) {
        unknown_labels.push_back(r.label);
        print(err, fmt::format("warning: label '{}' is not in {}; rows skipped\n", r.label, o.labels));
      }
      ++unknown;
      continue;
    }
    std::string c = text::clean_text(r.text, stopwords);
    if (c.empty()) {
      ++empty;
      continue;
    }
    cleaned.push_back({std::move(r.text), std::move(c), labels.decode(idx), r.line});
  }
  auto dedup = text::deduplicate(std::move(cleaned));
  if (dedup.records.empty()) throw DataError("no usable records left after cleaning");

  std::vector<std::vector<std::string>> corpus;
  for (const auto& r : dedup.records) corpus.push_back(text::tokenize(r.cleaned));
  text::DatasetInfo info;
  info.seed = s.train.seed;
  info.word_len = s.train.word_len;
  info.min_freq = o.min_freq.value_or(1);
  if (info.min_freq == 0) throw ConfigError("--min-freq must be positive");
  info.train_fraction = o.train_fraction;
  info.stopwords_fingerprint = text::stopwords_fingerprint(stopwords);
  info.labels = labels;
  info.vocab = text::Vocab::build(corpus, info.min_freq);
  if (o.vocab) info.vocab = info.vocab.truncated(*o.vocab);

  std::vector<text::EncodedSample> samples;
  samples.reserve(dedup.records.size());
  for (std::size_t i = 0; i < dedup.records.size(); ++i) {
    const auto& r = dedup.records[i];
    samples.push_back({text::encode_words(corpus[i], info.vocab, info.word_len),
                       text::quantize_chars(text::clean_text(r.raw, {}), info.char_len), labels.encode(r.label)});
  }
  const auto split = text::split_train_test(samples, o.train_fraction, s.train.seed);

  info.stats = {{"rows_read", ingest.records.size() + ingest.skipped},
                {"rows_skipped", ingest.skipped},
                {"label_dropped", dropped},
                {"label_unknown", unknown},
                {"empty_after_cleaning", empty},
                {"duplicates_removed", dedup.removed},
                {"samples", samples.size()},
                {"train", split.train.size()},
                {"test", split.test.size()}};
  for (std::size_t c = 0; c < labels.size(); ++c) {
    std::size_t tr = 0, te = 0;
    for (const auto& x : split.train) tr += x.label == static_cast<int>(c);
    for (const auto& x : split.test) te += x.label == static_cast<int>(c);
    info.stats.emplace_back("train_" + labels.classes()[c], tr);
    info.stats.emplace_back("test_" + labels.classes()[c], te);
  }

  text::write_samples(dir / "train.csv", split.train);
  text::write_samples(dir / "test.csv", split.test);
  text::write_dataset_info(dir / "dataset.json", info);

  for (const auto& [k, v] : info.stats) print(out, fmt::format("{:<24} {}\n", k, v));
  print(out, fmt::format("{:<24} {}\n", "vocab_size", info.vocab.size()));
  print(out, fmt::format("wrote {}, {}, {}\n", (dir / "train.csv").string(), (dir / "test.csv").string(),
                         (dir / "dataset.json").string()));
  return kExitOk;
}

// ---- train ----------------------------------------------------------------------

struct Prepared {
  text::DatasetInfo info;
  fs::path dir;
};

Prepared load_prepared(const std::string& dir) {
  require_dir(dir, "--data");
  return {text::read_dataset_info(fs::path(dir) / "dataset.json"), dir};
}

ModelConfig model_config_for(const Settings& s, const text::DatasetInfo& info) {
  ModelConfig c = s.model;
  c.vocab = info.vocab.size();
  c.word_len = info.word_len;
  c.char_len = info.char_len;
  c.classes = info.labels.size();
  return c;
}

void check_compatible(const Model& m, const text::DatasetInfo& info) {
  const auto& c = m.spec.config;
  if (c.classes != info.labels.size()) {
    throw CheckpointError(fmt::format("checkpoint predicts {} classes, dataset has {}", c.classes, info.labels.size()));
  }
  if (m.spec.uses_words() && (c.vocab != info.vocab.size() || c.word_len != info.word_len)) {
    throw CheckpointError(fmt::format("checkpoint expects vocab {} and word length {}, dataset has {} and {}", c.vocab,
                                      c.word_len, info.vocab.size(), info.word_len));
  }
  if (m.spec.uses_chars() && c.char_len != info.char_len) {
    throw CheckpointError(fmt::format("checkpoint expects {} characters, dataset has {}", c.char_len, info.char_len));
  }
}

Model train_one(ModelKind kind, const ModelConfig& mc, const TrainConfig& tc, const std::vector<text::EncodedSample>& data,
                Rng& init_rng, const Tensor* glove, const fs::path& dir, std::ostream& out) {
  Model m = kind == ModelKind::kWord   ? build_word_model(mc, init_rng, glove)
            : kind == ModelKind::kChar ? build_char_model(mc, init_rng)
                                       : build_combined_model(mc, init_rng, glove);
  print(out, fmt::format("training {} model: {} parameters, {} samples, {} epochs\n", model_kind_name(kind),
                         m.params.element_count(), data.size(), tc.epochs));
  const auto log = fit(m, data, tc, [&](const EpochStats& e) {
    print(out, fmt::format("epoch {}/{} loss {:.6f} accuracy {:.4f} ({:.1f}s)\n", e.epoch, tc.epochs, e.loss, e.accuracy,
                           e.seconds));
  });
  const std::string name = model_kind_name(kind);
  save_checkpoint(m, dir / (name + ".ckpt"));
  log.write_csv(dir / (name + "_log.csv"));
  print(out, fmt::format("wrote {}\n", (dir / (name + ".ckpt")).string()));
  return m;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream&) {
  const Prepared prep = load_prepared(o.data);
  Settings s = resolve(o);
  s.train.model = parse_model_kind(o.model);
  if (!o.glove.empty()) require_file(o.glove, "--glove");
  const fs::path dir = require_out(o);
  const ModelConfig mc = model_config_for(s, prep.info);
  const auto data = text::read_samples(prep.dir / "train.csv");

  Rng root(s.train.seed);
  Rng glove_rng = root.fork();
  std::optional<Tensor> glove;
  if (!o.glove.empty()) {
    glove = text::load_glove(fs::path(o.glove), prep.info.vocab, glove_rng, mc.embed_dim);
    print(out, fmt::format("loaded GloVe vectors for a {} x {} table\n", glove->dim(0), glove->dim(1)));
  }
  const Tensor* glove_ptr = glove ? &*glove : nullptr;
  Rng word_rng = root.fork(), char_rng = root.fork(), combined_rng = root.fork();

  if (s.train.model != ModelKind::kCombined || !o.pretrain) {
    if (o.pretrain) throw ConfigError("--pretrain applies to the combined model only");
    Rng& rng = s.train.model == ModelKind::kWord ? word_rng : s.train.model == ModelKind::kChar ? char_rng : combined_rng;
    train_one(s.train.model, mc, s.train, data, rng, glove_ptr, dir, out);
    return kExitOk;
  }

  // Branch networks first, then the combined model starts from their checkpoints.
  ModelConfig word_cfg = mc;
  word_cfg.lstm_hidden = mc.residual_hidden;
  fs::path word_ckpt = o.word_checkpoint, char_ckpt = o.char_checkpoint;
  if (word_ckpt.empty()) {
    train_one(ModelKind::kWord, word_cfg, s.train, data, word_rng, glove_ptr, dir, out);
    word_ckpt = dir / "word.ckpt";
  }
  if (char_ckpt.empty()) {
    train_one(ModelKind::kChar, mc, s.train, data, char_rng, nullptr, dir, out);
    char_ckpt = dir / "char.ckpt";
  }
  const Model word = load_checkpoint(word_ckpt, ModelKind::kWord);
  const Model chars = load_checkpoint(char_ckpt, ModelKind::kChar);
  check_compatible(word, prep.info);
  check_compatible(chars, prep.info);

  Model m = build_combined_model(mc, combined_rng, glove_ptr);
  init_combined_from_branches(m.spec, m.params, word.spec, word.params, chars.spec, chars.params);
  print(out, fmt::format("initialized combined model from {} and {}\n", word_ckpt.string(), char_ckpt.string()));
  print(out, fmt::format("training combined model: {} parameters, {} samples, {} epochs\n", m.params.element_count(),
                         data.size(), s.train.epochs));
  const auto log = fit(m, data, s.train, [&](const EpochStats& e) {
    print(out, fmt::format("epoch {}/{} loss {:.6f} accuracy {:.4f} ({:.1f}s)\n", e.epoch, s.train.epochs, e.loss,
                           e.accuracy, e.seconds));
  });
  save_checkpoint(m, dir / "combined.ckpt");
  log.write_csv(dir / "combined_log.csv");
  print(out, fmt::format("wrote {}\n", (dir / "combined.ckpt").string()));
  return kExitOk;
}

// ---- evaluate ---------------------------------------------------------------------

int cmd_evaluate(const Options& o, std::ostream& out, std::ostream&) {
  require_file(o.checkpoint, "--checkpoint");
  const Prepared prep = load_prepared(o.data);
  if (o.split != "test" && o.split != "train") throw ConfigError("--split must be test or train");
  const Model m = load_checkpoint(fs::path(o.checkpoint));
  check_compatible(m, prep.info);
  const auto samples = text::read_samples(prep.dir / (o.split + ".csv"));
  if (samples.empty()) throw DataError("no samples in the " + o.split + " split");

  std::vector<int> truth;
  for (const auto& x : samples) truth.push_back(x.label);
  const auto pred = argmax_rows(predict(m, samples, o.batch.value_or(64)));
  const auto report =
      precision_recall_f1(confusion(truth, pred, prep.info.labels.size()), prep.info.labels.classes());

  const RenderOptions ro{o.decimals};
  print(out, render_report(report, ReportFormat::kTable, ro));
  if (!o.out.empty()) {
    const fs::path dir = require_out(o);
    auto write = [&](const std::string& name, ReportFormat f) {
      std::ofstream f_out(dir / name, std::ios::binary);
      if (!f_out) throw DataError("cannot write " + (dir / name).string());
      f_out << render_report(report, f, ro);
    };
    const bool all = o.format == "all";
    if (!all) parse_report_format(o.format);
    if (all || o.format == "table") write("report.txt", ReportFormat::kTable);
    if (all || o.format == "json") write("report.json", ReportFormat::kJson);
    if (all || o.format == "csv") write("report.csv", ReportFormat::kCsv);
  }
  return kExitOk;
}

// ---- predict -----------------------------------------------------------------------

int cmd_predict(const Options& o, std::ostream& out, std::istream& in) {
  require_file(o.checkpoint, "--checkpoint");
  const Prepared prep = load_prepared(o.data);
  const Model m = load_checkpoint(fs::path(o.checkpoint));
  check_compatible(m, prep.info);
  const auto stopwords = text::load_stopwords(o.stopwords);
  if (text::stopwords_fingerprint(stopwords) != prep.info.stopwords_fingerprint) {
    throw DataError("stop-word list " + o.stopwords + " differs from the one used to prepare the data");
  }
  std::vector<std::string> texts = o.texts;
  if (texts.empty()) {
    for (std::string line; std::getline(in, line);) texts.push_back(line);
  }
  for (const auto& t : texts) {
    const std::string cleaned = text::clean_text(t, stopwords);
    if (cleaned.empty()) {
      print(out, "empty-after-cleaning\n");
      continue;
    }
    text::EncodedSample s{text::encode_words(text::tokenize(cleaned), prep.info.vocab, prep.info.word_len),
                          text::quantize_chars(text::clean_text(t, {}), prep.info.char_len), 0};
    const Tensor p = predict(m, {s}, 1);
    const int best = argmax_rows(p)[0];
    std::string line = prep.info.labels.decode(best);
    for (std::size_t c = 0; c < p.dim(1); ++c) line += fmt::format("\t{:.9f}", p.at(0, c));
    print(out, line + "\n");
  }
  return kExitOk;
}

// ---- project -----------------------------------------------------------------------

int cmd_project(const Options& o, std::ostream& out, std::ostream& err) {
  require_file(o.checkpoint, "--checkpoint");
  const Prepared prep = load_prepared(o.data);
  const Model m = load_checkpoint(fs::path(o.checkpoint));
  check_compatible(m, prep.info);
  if (!m.spec.uses_words()) throw ConfigError("the char model has no word embedding to project");
  if (o.components < 2 || o.components > 3) throw ConfigError("--components must be 2 or 3");
  const auto& table = std::get<EmbeddingParams>(m.params.layers[m.spec.index_of("embedding")]).table;
  const Tensor rows = top_rows(table, o.top);
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < rows.dim(0); ++i) tokens.push_back(prep.info.vocab.token(i + 2));
  const auto points = pca_project(rows, o.components, tokens);
  if (points.rank_deficient) {
    print(err, fmt::format("warning: embedding rows have rank {} < {} components\n", points.rank, o.components));
  }
  const fs::path dir = require_out(o);
  export_points(points, dir / "projection.csv");
  for (std::size_t c = 0; c < points.explained_ratio.size(); ++c) {
    print(out, fmt::format("component {} explained variance {:.4f}\n", c + 1, points.explained_ratio[c]));
  }
  print(out, fmt::format("wrote {} points to {}\n", tokens.size(), (dir / "projection.csv").string()));
  return kExitOk;
}

// ---- params ---------------------------------------------------------------------------

int cmd_params(const Options& o, std::ostream& out) {
  Settings s = resolve(o);
  if (o.vocab) s.model.vocab = *o.vocab;
  const auto spec = model_spec(parse_model_kind(o.model), s.model);
  print(out, render_parameter_table(count_parameters(spec)));
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cyberbullying classifiers: word BiLSTM, character CNN and residual combined model", "rescnn"};
  app.require_subcommand(1);
  Options o;

  app.add_option("--threads", o.threads, "OpenMP threads (0 = runtime default)")->envname("RESCNN_THREADS");

  auto* prepare = app.add_subcommand("prepare", "Clean, encode and split a raw tweet CSV");
  auto* train = app.add_subcommand("train", "Train a model on a prepared dataset");
  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on a prepared split");
  auto* predict_cmd = app.add_subcommand("predict", "Classify texts with a checkpoint");
  auto* project = app.add_subcommand("project", "PCA projection of the word embedding");
  auto* params = app.add_subcommand("params", "Per-layer parameter counts");

  auto data_opt = [&](CLI::App* c, const char* help) { c->add_option("--data", o.data, help)->envname("RESCNN_DATA"); };
  auto out_opt = [&](CLI::App* c) { c->add_option("--out", o.out, "Output directory")->envname("RESCNN_OUT"); };
  auto seed_opt = [&](CLI::App* c) { c->add_option("--seed", o.seed, "Random seed")->envname("RESCNN_SEED"); };
  auto config_opt = [&](CLI::App* c) {
    c->add_option("--config", o.config, "key = value file (training and model size keys)")->envname("RESCNN_CONFIG");
  };
  auto arch_opt = [&](CLI::App* c) {
    c->add_option("--arch", o.arch, "Model size override key=value (repeatable)")->envname("RESCNN_ARCH");
  };
  auto stop_opt = [&](CLI::App* c) {
    c->add_option("--stopwords", o.stopwords, "Stop-word list")->envname("RESCNN_STOPWORDS");
  };
  auto checkpoint_opt = [&](CLI::App* c) {
    c->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->envname("RESCNN_CHECKPOINT");
  };

  data_opt(prepare, "Raw CSV file");
  out_opt(prepare);
  seed_opt(prepare);
  config_opt(prepare);
  stop_opt(prepare);
  prepare->add_option("--labels", o.labels, "Label map")->envname("RESCNN_LABELS");
  prepare->add_option("--vocab", o.vocab, "Keep at most this many vocabulary entries")->envname("RESCNN_VOCAB");
  prepare->add_option("--word-len", o.word_len, "Words per sample after padding/truncation");
  prepare->add_option("--min-freq", o.min_freq, "Minimum token frequency");
  prepare->add_option("--train-fraction", o.train_fraction, "Share of each class used for training");
  prepare->add_option("--text-column", o.text_column, "Text column name");
  prepare->add_option("--label-column", o.label_column, "Label column name");

  data_opt(train, "Prepared dataset directory");
  out_opt(train);
  seed_opt(train);
  config_opt(train);
  arch_opt(train);
  train->add_option("--model", o.model, "word, char or combined")->envname("RESCNN_MODEL");
  train->add_option("--epochs", o.epochs, "Training epochs")->envname("RESCNN_EPOCHS");
  train->add_option("--batch", o.batch, "Mini-batch size")->envname("RESCNN_BATCH");
  train->add_option("--lr", o.lr, "Adam learning rate")->envname("RESCNN_LR");
  train->add_option("--dropout", o.dropout, "Dropout rate")->envname("RESCNN_DROPOUT");
  train->add_option("--glove", o.glove, "GloVe text file")->envname("RESCNN_GLOVE");
  train->add_flag("--pretrain", o.pretrain, "Train word and char models first and start the combined model from them")
      ->envname("RESCNN_PRETRAIN");
  train->add_option("--word-checkpoint", o.word_checkpoint, "Pretrained word model (with --pretrain)");
  train->add_option("--char-checkpoint", o.char_checkpoint, "Pretrained char model (with --pretrain)");
  train->add_flag("--char-dense-head", o.char_dense_head, "Keep the char model's wide dense layers in the combined model");

  data_opt(evaluate, "Prepared dataset directory");
  out_opt(evaluate);
  checkpoint_opt(evaluate);
  evaluate->add_option("--split", o.split, "test or train");
  evaluate->add_option("--format", o.format, "table, json, csv or all");
  evaluate->add_option("--decimals", o.decimals, "Digits after the decimal point in percentages");
  evaluate->add_option("--batch", o.batch, "Inference batch size");

  data_opt(predict_cmd, "Prepared dataset directory (for the vocabulary and labels)");
  checkpoint_opt(predict_cmd);
  stop_opt(predict_cmd);
  predict_cmd->add_option("texts", o.texts, "Texts to classify (stdin lines when omitted)");

  data_opt(project, "Prepared dataset directory (for token labels)");
  out_opt(project);
  checkpoint_opt(project);
  project->add_option("--components", o.components, "2 or 3");
  project->add_option("--top", o.top, "Number of most frequent tokens to project");

  params->add_option("kind", o.model, "word, char or combined");
  params->add_option("--model", o.model, "word, char or combined");
  params->add_option("--vocab", o.vocab, "Vocabulary size")->envname("RESCNN_VOCAB");
  config_opt(params);
  arch_opt(params);
  params->add_flag("--char-dense-head", o.char_dense_head, "Keep the char model's wide dense layers in the combined model");

  std::vector<const char*> argv{"rescnn"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (o.threads > 0) omp_set_num_threads(o.threads);
    if (prepare->parsed()) return cmd_prepare(o, out, err);
    if (train->parsed()) return cmd_train(o, out, err);
    if (evaluate->parsed()) return cmd_evaluate(o, out, err);
    if (predict_cmd->parsed()) return cmd_predict(o, out, in);
    if (project->parsed()) return cmd_project(o, out, err);
    if (params->parsed()) return cmd_params(o, out);
  } catch (const ConfigError& e) {
    print(err, fmt::format("error: {}\n", e.what()));
    return kExitUsage;
  } catch (const NumericError& e) {
    print(err, fmt::format("numeric failure: {}\n", e.what()));
    return kExitNumeric;
  } catch (const DataError& e) {
    print(err, fmt::format("data error: {}\n", e.what()));
    return kExitData;
  } catch (const CheckpointError& e) {
    print(err, fmt::format("checkpoint error: {}\n", e.what()));
    return kExitData;
  } catch (const DimensionError& e) {
    print(err, fmt::format("data error: {}\n", e.what()));
    return kExitData;
  } catch (const IndexError& e) {
    print(err, fmt::format("data error: {}\n", e.what()));
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    print(err, fmt::format("file error: {}\n", e.what()));
    return kExitData;
  } catch (const std::exception& e) {
    print(err, fmt::format("error: {}\n", e.what()));
    return kExitFailure;
  }
  return kExitUsage;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  return run(args, std::cin, out, err);
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace rescnn::cli
