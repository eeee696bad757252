// One PASS/FAIL/SKIP line per acceptance criterion; exits non-zero on any FAIL.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "gradient_suite.hpp"
#include "oracles.hpp"
#include "rescnn/cli.hpp"
#include "rescnn/lstm.hpp"
#include "rescnn/metrics.hpp"
#include "rescnn/model.hpp"
#include "rescnn/projection.hpp"
#include "rescnn/training.hpp"
#include "support.hpp"

using namespace rescnn;
using namespace rescnn::testing;
namespace fs = std::filesystem;

namespace {

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

Outcome parameter_goldens() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::size_t> word_expected{2706400, 2510848, 32800, 165};
  const std::vector<std::size_t> char_expected{123904, 459008, 196864, 196864, 196864, 196864, 8913920, 1049600, 32800, 165};
  ModelConfig cfg;
  cfg.vocab = 27064;
  const auto word = count_parameters(word_model_spec(cfg));
  const auto chars = count_parameters(char_model_spec(cfg));
  const double secs = seconds_since(t0);
  const bool ok = word.nonzero() == word_expected && word.total == 5250213 && chars.nonzero() == char_expected &&
                  chars.total == 11366853 && secs < 1.0;
  return {ok ? Status::kPass : Status::kFail,
          fmt::format("word [{}] total {}; char [{}] total {} ({:.3f} s)", join(word.nonzero()), word.total,
                      join(chars.nonzero()), chars.total, secs)};
}

// Closed-form count of the default combined model, written independently of
// the layer graph.
std::size_t combined_formula(const ModelConfig& c) {
  auto lstm = [](std::size_t h, std::size_t in) { return 2 * 4 * (h * (h + in) + h); };
  auto dense = [](std::size_t in, std::size_t out) { return in * out + out; };
  auto conv = [](std::size_t in, std::size_t out, std::size_t k) { return out * in * k + out; };
  const std::size_t width = 2 * c.residual_hidden;
  std::size_t n = c.vocab * c.embed_dim;
  n += lstm(c.residual_hidden, c.embed_dim) + dense(c.embed_dim, width);
  n += (c.residual_blocks - 1) * lstm(c.residual_hidden, width);
  n += lstm(c.branch_hidden, width);
  n += conv(c.alphabet, c.conv_filters, 7) + conv(c.conv_filters, c.conv_filters, 7) +
       4 * conv(c.conv_filters, c.conv_filters, 3);
  n += lstm(c.branch_hidden, c.conv_filters);
  n += dense(4 * c.branch_hidden, c.dense_hidden) + dense(c.dense_hidden, c.classes);
  return n;
}

Outcome combined_count() {
  ModelConfig cfg;
  const auto table = count_parameters(combined_model_spec(cfg));
  auto layer = [&](const std::string& name) {
    for (const auto& l : table.layers)
      if (l.name == name) return l.parameters;
    return std::size_t{0};
  };
  bool branches = layer("embedding") == 2706400 && layer("res1_lstm") == 2510848 && layer("conv1") == 123904 &&
                  layer("conv2") == 459008;
  for (const char* c : {"conv3", "conv4", "conv5", "conv6"}) branches = branches && layer(c) == 196864;

  std::ostringstream out, err;
  const int code = cli::run({"params", "combined"}, out, err);
  const bool printed = code == 0 && out.str().find(std::to_string(table.total)) != std::string::npos;
  const bool ok = table.total == 26308005 && table.total == combined_formula(cfg) && branches && printed;
  return {ok ? Status::kPass : Status::kFail,
          fmt::format("total {} (closed form {}), branch layers {}, `params combined` {}", table.total,
                      combined_formula(cfg), branches ? "match" : "differ", printed ? "prints it" : "does not")};
}

Outcome gradient_suite_check() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cases = gradient_suite(2024, 5);
  const double secs = seconds_since(t0);
  double worst = 0;
  std::string worst_case;
  for (const auto& c : cases) {
    if (c.rel_error >= worst) {
      worst = c.rel_error;
      worst_case = c.layer + " " + c.shape;
    }
  }
  bool covered = true;
  for (const auto& l : kGradLayers) {
    std::size_t n = 0;
    for (const auto& c : cases) n += c.layer == l;
    covered = covered && n >= 5;
  }
  const bool ok = covered && worst < 1e-4 && secs < 60.0;
  return {ok ? Status::kPass : Status::kFail,
          fmt::format("{} cases over {} layers, worst rel err {:.2e} ({}), {:.1f} s", cases.size(), kGradLayers.size(),
                      worst, worst_case, secs)};
}

Outcome lstm_oracle() {
  const double diff = lstm_oracle_max_diff(99, 100);
  return {diff < 1e-10 ? Status::kPass : Status::kFail, fmt::format("100 draws, max |diff| {:.2e}", diff)};
}

Outcome overfit_smoke() {
  const auto t0 = std::chrono::steady_clock::now();
  ModelConfig mc;
  mc.vocab = 50;
  mc.lstm_hidden = 32;
  mc.word_len = 12;
  const auto data = separable_word_dataset(200, 5, mc.vocab, mc.word_len, 11);
  Rng rng(5);
  Model m = build_word_model(mc, rng);
  TrainConfig tc;
  tc.epochs = 50;
  tc.batch = 16;
  tc.seed = 3;
  std::vector<int> truth;
  for (const auto& s : data) truth.push_back(s.label);
  std::size_t reached = 0;
  double best = 0;
  fit(m, data, tc, [&](const EpochStats& e) {
    const double acc = accuracy(argmax_rows(predict(m, data)), truth);
    best = std::max(best, acc);
    if (!reached && acc >= 0.99) reached = e.epoch;
  });
  const double secs = seconds_since(t0);
  const bool ok = reached > 0 && secs < 300.0;
  return {ok ? Status::kPass : Status::kFail,
          reached ? fmt::format("99% train accuracy at epoch {} of 50 ({:.1f} s)", reached, secs)
                  : fmt::format("best train accuracy {:.3f} after 50 epochs ({:.1f} s)", best, secs)};
}

Outcome metrics_oracle() {
  const auto r = precision_recall_f1(confusion({0, 0, 1}, {0, 1, 1}));
  const bool hand = r.classes[0].precision == 1.0 && r.classes[1].precision == 0.5 && r.classes[0].recall == 0.5 &&
                    r.classes[1].recall == 1.0 && std::abs(r.classes[0].f1 - 2.0 / 3.0) < 1e-15 &&
                    std::abs(r.classes[1].f1 - 2.0 / 3.0) < 1e-15 && r.macro.precision == 0.75;
  // Balanced fixture: 40 samples per class with assorted mistakes.
  Rng rng(17);
  std::vector<int> t, p;
  for (int c = 0; c < 5; ++c)
    for (int i = 0; i < 40; ++i) {
      t.push_back(c);
      p.push_back(rng.uniform() < 0.7 ? c : static_cast<int>(rng.below(5)));
    }
  const auto b = precision_recall_f1(confusion(t, p));
  const double gap = std::max({std::abs(b.macro.precision - b.weighted.precision), std::abs(b.macro.recall - b.weighted.recall),
                               std::abs(b.macro.f1 - b.weighted.f1)});
  const bool ok = hand && gap < 1e-12;
  return {ok ? Status::kPass : Status::kFail,
          fmt::format("P=[{},{}] R=[{},{}] F1=[{:.6f},{:.6f}] macro-P={}; balanced macro-weighted gap {:.1e}",
                      r.classes[0].precision, r.classes[1].precision, r.classes[0].recall, r.classes[1].recall,
                      r.classes[0].f1, r.classes[1].f1, r.macro.precision, gap)};
}

Outcome char_geometry() {
  const auto lengths = char_geometry_trace(ModelConfig{});
  const std::vector<std::size_t> expected{1014, 1008, 336, 330, 110, 108, 106, 104, 102, 34, 8704};
  return {lengths == expected ? Status::kPass : Status::kFail, "lengths " + join(lengths)};
}

Outcome pca_check() {
  Rng rng(8);
  double worst = 0;
  for (int trial = 0; trial < 3; ++trial) {
    const Tensor x = random_tensor({50, 100}, rng);
    for (std::size_t k : {2, 3, 10}) {
      const auto got = pca_project(x, k);
      const auto ref = pca_covariance_oracle(x, k);
      worst = std::max(worst, max_diff_up_to_sign(got.coords, ref.coords));
    }
  }
  // Points on a line in 100-D.
  const Tensor dir = random_tensor({100}, rng), origin = random_tensor({100}, rng);
  Tensor line({30, 100});
  for (std::size_t i = 0; i < 30; ++i) {
    const double s = rng.uniform(-5, 5);
    for (std::size_t j = 0; j < 100; ++j) line.at(i, j) = origin[j] + s * dir[j];
  }
  const auto proj = pca_project(line, 1);
  const double dist_err = max_abs_diff(pairwise_distances(line), pairwise_distances(proj.coords));
  const bool ok = worst < 1e-8 && dist_err < 1e-10;
  return {ok ? Status::kPass : Status::kFail,
          fmt::format("oracle max diff {:.2e} (50x100, k=2,3,10), collinear distance error {:.2e}", worst, dist_err)};
}

std::string without_seconds(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

Outcome determinism() {
  const std::vector<std::string> files{"train.csv", "test.csv", "dataset.json"};
  std::vector<fs::path> prep, trained;
  for (int run = 0; run < 2; ++run) {
    const fs::path p = temp_dir("accept_prep"), t = temp_dir("accept_train");
    std::ostringstream out, err;
    if (cli::run({"prepare", "--data", fixture("tweets_small.csv").string(), "--out", p.string(), "--seed", "7"}, out,
                 err) != 0) {
      return {Status::kFail, "prepare failed: " + err.str()};
    }
    if (cli::run({"train", "--data", p.string(), "--out", t.string(), "--model", "combined", "--pretrain", "--seed", "7",
                  "--config", fixture("train_tiny.cfg").string()},
                 out, err) != 0) {
      return {Status::kFail, "train failed: " + err.str()};
    }
    prep.push_back(p);
    trained.push_back(t);
  }
  std::size_t compared = 0;
  for (const auto& f : files) {
    if (read_file(prep[0] / f) != read_file(prep[1] / f)) return {Status::kFail, "prepare output differs: " + f};
    ++compared;
  }
  for (const char* kind : {"word", "char", "combined"}) {
    const std::string ckpt = std::string(kind) + ".ckpt", log = std::string(kind) + "_log.csv";
    const std::string a = read_file(trained[0] / ckpt);
    if (a.empty() || a != read_file(trained[1] / ckpt)) return {Status::kFail, "checkpoint differs: " + ckpt};
    if (without_seconds(read_file(trained[0] / log)) != without_seconds(read_file(trained[1] / log))) {
      return {Status::kFail, "training log differs: " + log};
    }
    compared += 2;
  }
  for (const auto& d : prep) fs::remove_all(d);
  for (const auto& d : trained) fs::remove_all(d);
  return {Status::kPass,
          fmt::format("{} outputs byte-identical across reruns (prepare files, word/char/combined checkpoints; "
                      "training logs compared without the wall-clock column)",
                      compared)};
}

Outcome full_reproduction() {
  const char* dataset = std::getenv("RESCNN_FULL_DATASET");
  const char* glove = std::getenv("RESCNN_FULL_GLOVE");
  if (!dataset || !glove) {
    return {Status::kSkip, "optional; set RESCNN_FULL_DATASET and RESCNN_FULL_GLOVE to run (see README runbook)"};
  }
  const fs::path prep = temp_dir("full_prep"), run = temp_dir("full_train");
  std::ostringstream out, err;
  if (cli::run({"prepare", "--data", dataset, "--out", prep.string()}, out, err) != 0) return {Status::kFail, err.str()};
  const char* epochs = std::getenv("RESCNN_FULL_EPOCHS");
  if (cli::run({"train", "--data", prep.string(), "--out", run.string(), "--model", "combined", "--glove", glove,
                "--epochs", epochs ? epochs : "10"},
               out, err) != 0) {
    return {Status::kFail, err.str()};
  }
  if (cli::run({"evaluate", "--data", prep.string(), "--checkpoint", (run / "combined.ckpt").string(), "--out",
                run.string(), "--format", "json"},
               out, err) != 0) {
    return {Status::kFail, err.str()};
  }
  const auto report = report_from_json(read_file(run / "report.json"));
  const double f1 = report.macro.f1;
  return {std::abs(f1 - 0.92) <= 0.03 ? Status::kPass : Status::kFail, fmt::format("macro F1 {:.3f} (target 0.92 +/- 0.03)", f1)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"parameter-count goldens (word, char)", parameter_goldens},
      {"combined-model parameter count", combined_count},
      {"layer gradient suite", gradient_suite_check},
      {"LSTM step vs scalar oracle", lstm_oracle},
      {"overfit smoke test", overfit_smoke},
      {"metrics oracle", metrics_oracle},
      {"char-model geometry", char_geometry},
      {"PCA oracle and collinear case", pca_check},
      {"prepare/train determinism", determinism},
      {"full reproduction (optional)", full_reproduction},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {Status::kFail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.status == Status::kPass ? "PASS" : o.status == Status::kFail ? "FAIL" : "SKIP";
    failed += o.status == Status::kFail;
    std::cout << fmt::format("[{}] {:>2}. {}: {}\n", tag, i + 1, criteria[i].first, o.detail) << std::flush;
  }
  std::cout << fmt::format("{} of {} criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
