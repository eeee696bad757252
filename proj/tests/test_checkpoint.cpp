#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "rescnn/checkpoint.hpp"
#include "support.hpp"

using namespace rescnn;
namespace rt = rescnn::testing;

namespace {

std::string saved(const Model& m) {
  std::ostringstream out(std::ios::binary);
  save_checkpoint(m, out);
  return out.str();
}

Model load_string(const std::string& bytes, std::optional<ModelKind> kind = std::nullopt) {
  std::istringstream in(bytes, std::ios::binary);
  return load_checkpoint(in, kind);
}

}  // namespace

class CheckpointRoundTrip : public ::testing::TestWithParam<ModelKind> {};

TEST_P(CheckpointRoundTrip, ValuesAreFloat32RoundedAndBytesStable) {
  Rng rng(3);
  ModelConfig c = rt::tiny_combined_config();
  c.char_dense_head = GetParam() == ModelKind::kCombined;
  Model m{model_spec(GetParam(), c), {}};
  m.params = init_params(m.spec, rng);
  const std::string bytes = saved(m);
  const Model back = load_string(bytes, GetParam());
  EXPECT_EQ(back.spec.config, c);
  EXPECT_EQ(back.spec.kind, GetParam());
  ModelParams rounded = m.params;
  round_to_f32(rounded);
  const auto want = rounded.named(m.spec);
  const auto got = back.params.named(back.spec);
  ASSERT_EQ(want.size(), got.size());
  for (std::size_t t = 0; t < want.size(); ++t) {
    EXPECT_EQ(want[t].name, got[t].name);
    EXPECT_EQ(*want[t].tensor, *got[t].tensor) << want[t].name;
    for (std::size_t i = 0; i < want[t].tensor->numel(); ++i) {
      EXPECT_LE(std::abs((*want[t].tensor)[i] - (*m.params.named(m.spec)[t].tensor)[i]),
                std::abs((*want[t].tensor)[i]) * 6e-8);
    }
  }
  EXPECT_EQ(saved(back), bytes);
}

INSTANTIATE_TEST_SUITE_P(Kinds, CheckpointRoundTrip,
                         ::testing::Values(ModelKind::kWord, ModelKind::kChar, ModelKind::kCombined),
                         [](const auto& info) { return std::string(model_kind_name(info.param)); });

TEST(Checkpoint, RejectsWrongKind) {
  Rng rng(4);
  const std::string bytes = saved(build_word_model(rt::tiny_word_config(), rng));
  EXPECT_THROW(load_string(bytes, ModelKind::kChar), CheckpointError);
  EXPECT_NO_THROW(load_string(bytes));
}

TEST(Checkpoint, RejectsTruncationAndTrailingBytes) {
  Rng rng(5);
  const std::string bytes = saved(build_word_model(rt::tiny_word_config(), rng));
  for (std::size_t cut : {std::size_t{5}, bytes.size() / 2, bytes.size() - 1}) {
    EXPECT_THROW(load_string(bytes.substr(0, cut)), CheckpointError) << cut;
  }
  EXPECT_THROW(load_string(bytes + "x"), CheckpointError);
}

TEST(Checkpoint, RejectsBadMagicAndVersion) {
  Rng rng(6);
  std::string bytes = saved(build_word_model(rt::tiny_word_config(), rng));
  std::string magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(load_string(magic), CheckpointError);
  std::string version = bytes;
  version.replace(version.find("version 1"), 9, "version 7");
  EXPECT_THROW(load_string(version), CheckpointError);
}

TEST(Checkpoint, HeaderIsReadableText) {
  Rng rng(7);
  const std::string bytes = saved(build_word_model(rt::tiny_word_config(), rng));
  EXPECT_EQ(bytes.rfind("rescnn-checkpoint\nversion 1\nkind word\n", 0), 0u);
  EXPECT_NE(bytes.find("\nembedding.table 2 20 4 0\n"), std::string::npos);
}

TEST(Checkpoint, MissingFileIsCheckpointError) {
  EXPECT_THROW(load_checkpoint(rt::temp_dir("ckpt") / "nope.ckpt"), CheckpointError);
}
