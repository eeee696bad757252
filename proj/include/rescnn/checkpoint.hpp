#pragma once

// Checkpoint file layout:
//
//   rescnn-checkpoint
//   version 1
//   kind <word|char|combined>
//   config <ModelConfig::to_string()>
//   tensors <count>
//   <name> <rank> <d0> ... <offset>      one line per tensor, offsets in elements
//   end
//   <payload: every tensor as little-endian float32, in header order>

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "rescnn/model.hpp"

namespace rescnn {

inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const Model& model, std::ostream& out);
void save_checkpoint(const Model& model, const std::filesystem::path& path);

/// Throws CheckpointError on a bad magic or version, a truncated or oversized
/// payload, header tensors that disagree with the spec rebuilt from the stored
/// config, or (when `expected` is given) a different model kind.
Model load_checkpoint(std::istream& in, std::optional<ModelKind> expected = std::nullopt);
Model load_checkpoint(const std::filesystem::path& path, std::optional<ModelKind> expected = std::nullopt);

/// Rounds every parameter to float32, matching what a save/load cycle yields.
void round_to_f32(ModelParams& params);

}  // namespace rescnn
