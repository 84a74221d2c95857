#include "mtl/train/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mtl/error.hpp"

namespace mtl::train {
namespace {

using Kind = CheckpointError::Kind;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  void need(std::size_t n, const char* what) {
    if (in_.size() - pos_ < n) throw CheckpointError(Kind::Truncated, std::string("checkpoint truncated while reading ") + what);
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(in_[pos_++])) << (8 * i);
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(in_[pos_++])) << (8 * i);
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  std::string str(const char* what) {
    const std::uint64_t n = u64(what);
    need(n, what);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

nlohmann::ordered_json parse_json(const std::string& text, const char* what) {
  try {
    return nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(Kind::Corrupt, std::string("checkpoint ") + what + " is not valid JSON: " + e.what());
  }
}

std::vector<std::pair<std::string, Shape>> expected_layout(const nlohmann::ordered_json& config) {
  if (!config.contains("encoder") || !config.contains("heads")) {
    throw CheckpointError(Kind::Corrupt, "checkpoint config lacks encoder/heads description");
  }
  encoder::EncoderConfig enc;
  try {
    enc = encoder_config_from_json(config.at("encoder"));
    enc.validate();
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(Kind::Corrupt, std::string("checkpoint encoder config invalid: ") + e.what());
  }
  auto layout = encoder::parameter_layout(enc);
  try {
    for (const auto& h : config.at("heads")) {
      const TaskId task = parse_task(h.at("task").get<std::string>());
      layout.emplace_back(model::head_weight_name(task), Shape{enc.d_model, kNumClasses});
      layout.emplace_back(model::head_bias_name(task), Shape{kNumClasses});
    }
  } catch (const std::exception& e) {
    throw CheckpointError(Kind::Corrupt, std::string("checkpoint head list invalid: ") + e.what());
  }
  return layout;
}

}  // namespace

nlohmann::ordered_json encoder_config_to_json(const encoder::EncoderConfig& c) {
  return nlohmann::ordered_json{{"vocab_size", c.vocab_size},
                                {"d_model", c.d_model},
                                {"n_layers", c.n_layers},
                                {"n_heads", c.n_heads},
                                {"d_ff", c.d_ff},
                                {"max_len", c.max_len},
                                {"dropout", c.dropout},
                                {"pooling", encoder::pooling_name(c.pooling)},
                                {"use_positional", c.use_positional},
                                {"init_std", c.init_std},
                                {"layer_norm_eps", c.layer_norm_eps}};
}

encoder::EncoderConfig encoder_config_from_json(const nlohmann::ordered_json& j, encoder::EncoderConfig c) {
  if (!j.is_object()) throw ConfigError("encoder config must be an object");
  auto size = [&](const char* key, std::size_t& field) {
    if (j.contains(key)) {
      if (!j[key].is_number_unsigned()) throw ConfigError(std::string("encoder.") + key + " must be a positive integer");
      field = j[key].get<std::size_t>();
    }
  };
  auto real = [&](const char* key, double& field) {
    if (j.contains(key)) {
      if (!j[key].is_number()) throw ConfigError(std::string("encoder.") + key + " must be a number");
      field = j[key].get<double>();
    }
  };
  size("vocab_size", c.vocab_size);
  size("d_model", c.d_model);
  size("n_layers", c.n_layers);
  size("n_heads", c.n_heads);
  size("d_ff", c.d_ff);
  size("max_len", c.max_len);
  real("dropout", c.dropout);
  real("init_std", c.init_std);
  real("layer_norm_eps", c.layer_norm_eps);
  if (j.contains("pooling")) c.pooling = encoder::parse_pooling(j["pooling"].get<std::string>());
  if (j.contains("use_positional")) c.use_positional = j["use_positional"].get<bool>();
  return c;
}

std::string serialize_checkpoint(const Checkpoint& ck) {
  Writer w;
  w.bytes("MTLC", 4);
  w.u32(kCheckpointVersion);
  w.str(ck.config.dump());
  w.u64(ck.params.size());
  for (const auto& e : ck.params.entries()) {
    w.str(e.name);
    const Shape& shape = e.tensor.shape();
    w.u8(static_cast<std::uint8_t>(shape.size()));
    for (std::size_t d : shape) w.u64(d);
    for (double v : e.tensor.data()) w.f64(v);
  }
  w.str(ck.metadata.dump());
  return w.take();
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "MTLC", 4) != 0) {
    throw CheckpointError(Kind::NotACheckpoint, "not a checkpoint (bad magic)");
  }
  Reader r(bytes.substr(4));
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError(Kind::VersionMismatch, "checkpoint version " + std::to_string(version) +
                                                     " is not supported (expected " +
                                                     std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint ck;
  ck.config = parse_json(r.str("config"), "config");
  const auto layout = expected_layout(ck.config);
  const std::uint64_t count = r.u64("parameter count");
  if (count != layout.size()) {
    throw CheckpointError(Kind::ShapeMismatch, "checkpoint holds " + std::to_string(count) +
                                                   " parameters but its config implies " +
                                                   std::to_string(layout.size()));
  }
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = r.str("parameter name");
    const auto& [expected_name, expected_shape] = layout[i];
    if (name != expected_name) {
      throw CheckpointError(Kind::Corrupt, "checkpoint parameter " + std::to_string(i) + " is '" + name +
                                               "', expected '" + expected_name + "'");
    }
    const std::uint8_t rank = r.u8("rank");
    Shape shape(rank);
    for (auto& d : shape) d = r.u64("dims");
    if (shape != expected_shape) {
      throw CheckpointError(Kind::ShapeMismatch, "shape mismatch for parameter " + name + ": file has " +
                                                     shape_string(shape) + ", config implies " +
                                                     shape_string(expected_shape));
    }
    const std::size_t n = shape_numel(shape);
    r.need(n * 8, "payload");
    std::vector<double> values(n);
    for (double& v : values) v = r.f64("payload");
    ck.params.add(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  ck.metadata = parse_json(r.str("metadata"), "metadata");
  if (!r.done()) throw CheckpointError(Kind::Corrupt, "checkpoint has trailing bytes");
  return ck;
}

void write_file_atomic(const std::string& path, std::string_view contents) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw DataError("failed writing " + tmp);
  }
  std::filesystem::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  write_file_atomic(path, serialize_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::string& path) { return deserialize_checkpoint(read_file(path)); }

Checkpoint make_checkpoint(const model::MultitaskModel& model, nlohmann::ordered_json config,
                           nlohmann::ordered_json metadata) {
  config["encoder"] = encoder_config_to_json(model.config);
  nlohmann::ordered_json heads = nlohmann::ordered_json::array();
  for (const auto& h : model.heads) heads.push_back({{"task", task_name(h.task)}, {"weight", h.weight}});
  config["heads"] = std::move(heads);
  return Checkpoint{std::move(config), model.params.clone(), std::move(metadata)};
}

model::MultitaskModel model_from_checkpoint(const Checkpoint& ck) {
  model::MultitaskModel m;
  m.config = encoder_config_from_json(ck.config.at("encoder"));
  for (const auto& h : ck.config.at("heads")) {
    m.heads.push_back({parse_task(h.at("task").get<std::string>()), h.value("weight", 1.0)});
  }
  m.params = ck.params.clone();
  return m;
}

}  // namespace mtl::train
