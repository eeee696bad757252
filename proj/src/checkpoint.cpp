#include "rescnn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace rescnn {

namespace {

constexpr const char* kMagic = "rescnn-checkpoint";

void put_f32(std::string& buf, double v) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
  for (int i = 0; i < 4; ++i) buf += static_cast<char>((bits >> (8 * i)) & 0xFF);
}

double get_f32(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return static_cast<double>(std::bit_cast<float>(bits));
}

std::string read_line(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) throw CheckpointError(fmt::format("checkpoint truncated while reading {}", what));
  return line;
}

std::string expect_field(std::istream& in, const std::string& key) {
  const std::string line = read_line(in, key.c_str());
  if (line.rfind(key + " ", 0) != 0) {
    throw CheckpointError(fmt::format("checkpoint header: expected '{}' line, got '{}'", key, line));
  }
  return line.substr(key.size() + 1);
}

}  // namespace

void save_checkpoint(const Model& model, std::ostream& out) {
  const auto tensors = model.params.named(model.spec);
  std::string header = fmt::format("{}\nversion {}\nkind {}\nconfig {}\ntensors {}\n", kMagic, kCheckpointVersion,
                                    model_kind_name(model.spec.kind), model.spec.config.to_string(), tensors.size());
  std::size_t offset = 0;
  for (const auto& t : tensors) {
    header += fmt::format("{} {}", t.name, t.tensor->rank());
    for (auto d : t.tensor->shape()) header += fmt::format(" {}", d);
    header += fmt::format(" {}\n", offset);
    offset += t.tensor->numel();
  }
  header += "end\n";
  std::string payload;
  payload.reserve(offset * 4);
  for (const auto& t : tensors)
    for (double v : t.tensor->data()) put_f32(payload, v);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw CheckpointError("error writing checkpoint");
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  save_checkpoint(model, out);
}

Model load_checkpoint(std::istream& in, std::optional<ModelKind> expected) {
  if (read_line(in, "magic") != kMagic) throw CheckpointError("not a rescnn checkpoint (bad magic)");
  const std::string version = expect_field(in, "version");
  if (version != std::to_string(kCheckpointVersion)) {
    throw CheckpointError(fmt::format("checkpoint version {} is not supported (expected {})", version, kCheckpointVersion));
  }
  ModelKind kind;
  try {
    kind = parse_model_kind(expect_field(in, "kind"));
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint header: ") + e.what());
  }
  if (expected && *expected != kind) {
    throw CheckpointError(fmt::format("checkpoint holds a {} model, expected {}", model_kind_name(kind),
                                      model_kind_name(*expected)));
  }
  ModelConfig config;
  try {
    config = ModelConfig::parse(expect_field(in, "config"));
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint header: ") + e.what());
  }

  Model model{model_spec(kind, config), {}};
  model.params = zero_params(model.spec);
  auto tensors = model.params.named(model.spec);

  const std::string count_str = expect_field(in, "tensors");
  if (count_str != std::to_string(tensors.size())) {
    throw CheckpointError(fmt::format("checkpoint lists {} tensors, a {} model has {}", count_str,
                                      model_kind_name(kind), tensors.size()));
  }
  std::size_t offset = 0;
  for (const auto& t : tensors) {
    std::istringstream line(read_line(in, "tensor table"));
    std::string name;
    std::size_t rank = 0;
    line >> name >> rank;
    Shape shape(rank);
    for (auto& d : shape) line >> d;
    std::size_t stored_offset = 0;
    line >> stored_offset;
    if (!line) throw CheckpointError("checkpoint header: malformed tensor line for " + t.name);
    if (name != t.name) throw CheckpointError(fmt::format("checkpoint tensor '{}' where '{}' was expected", name, t.name));
    if (shape != t.tensor->shape()) {
      throw CheckpointError(fmt::format("checkpoint tensor {} has shape {}, model expects {}", name, shape_str(shape),
                                        shape_str(t.tensor->shape())));
    }
    if (stored_offset != offset) throw CheckpointError("checkpoint header: inconsistent offset for " + name);
    offset += t.tensor->numel();
  }
  if (read_line(in, "header end") != "end") throw CheckpointError("checkpoint header: missing 'end'");

  std::string payload(offset * 4, '\0');
  in.read(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (static_cast<std::size_t>(in.gcount()) != payload.size()) {
    throw CheckpointError(fmt::format("checkpoint truncated: payload has {} of {} bytes", in.gcount(), payload.size()));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw CheckpointError("checkpoint has trailing bytes after payload");

  const auto* p = reinterpret_cast<const unsigned char*>(payload.data());
  for (auto& t : tensors)
    for (double& v : t.tensor->data()) {
      v = get_f32(p);
      p += 4;
    }
  return model;
}

Model load_checkpoint(const std::filesystem::path& path, std::optional<ModelKind> expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  return load_checkpoint(in, expected);
}

void round_to_f32(ModelParams& params) {
  for (auto& layer : params.layers) {
    std::visit(
        [](auto& lp) {
          using T = std::decay_t<decltype(lp)>;
          auto round = [](Tensor& t) {
            for (double& v : t.data()) v = static_cast<double>(static_cast<float>(v));
          };
          if constexpr (std::is_same_v<T, EmbeddingParams>) {
            round(lp.table);
          } else if constexpr (std::is_same_v<T, nn::DenseParams>) {
            round(lp.weight);
            round(lp.bias);
          } else if constexpr (std::is_same_v<T, ConvParams>) {
            round(lp.kernels);
            round(lp.bias);
          } else if constexpr (std::is_same_v<T, nn::BiLstmParams>) {
            for (Tensor* t : lp.forward.tensors()) round(*t);
            for (Tensor* t : lp.backward.tensors()) round(*t);
          }
        },
        layer);
  }
}

}  // namespace rescnn
