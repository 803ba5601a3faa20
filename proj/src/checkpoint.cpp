#include <cstdint>
#include <string_view>
#include <utility>

#include <json.hpp>
#include <zlib.h>

#include "binio.hpp"
#include "rep3net/model/trainer.hpp"

namespace rep3net::model {

namespace {

using nlohmann::json;

constexpr std::string_view kMagic = "R3CKPT";

struct NamedTensor {
  std::string name;
  nn::Tensor* tensor;
};

std::vector<NamedTensor> named_tensors(FusionModel<float>& net) {
  std::vector<NamedTensor> out;
  for (nn::Param<float>* p : net.params()) out.push_back({p->name, &p->value});
  out.push_back({"bn1.running_mean", &net.bn1.running_mean});
  out.push_back({"bn1.running_var", &net.bn1.running_var});
  out.push_back({"bn2.running_mean", &net.bn2.running_mean});
  out.push_back({"bn2.running_var", &net.bn2.running_var});
  return out;
}

json stats_json(const desc::FeatureStats& s) { return {{"retained", s.retained}, {"mean", s.mean}, {"std", s.std}}; }

desc::FeatureStats stats_from(const json& j) {
  desc::FeatureStats s;
  s.retained = j.at("retained").get<std::vector<std::size_t>>();
  s.mean = j.at("mean").get<std::vector<double>>();
  s.std = j.at("std").get<std::vector<double>>();
  if (s.mean.size() != s.retained.size() || s.std.size() != s.retained.size()) {
    throw FormatError("feature statistics have inconsistent lengths");
  }
  return s;
}

json config_json(const FusionConfig& c) {
  return {{"use_descriptors", c.use_descriptors},
          {"use_embeddings", c.use_embeddings},
          {"use_graph", c.use_graph},
          {"gcn_hidden", c.gcn_hidden},
          {"gcn_dropout", c.gcn_dropout},
          {"fc1", c.fc1},
          {"fc2", c.fc2},
          {"dropout", c.dropout},
          {"batch_size", c.batch_size},
          {"lr", c.lr},
          {"lr_min", c.lr_min},
          {"weight_decay", c.weight_decay},
          {"decoupled_weight_decay", c.decoupled_weight_decay},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"variance_threshold", c.variance_threshold},
          {"correlation_threshold", c.correlation_threshold},
          {"pretrained_gcn", c.pretrained_gcn}};
}

FusionConfig config_from(const json& j) {
  FusionConfig c;
  c.use_descriptors = j.at("use_descriptors").get<bool>();
  c.use_embeddings = j.at("use_embeddings").get<bool>();
  c.use_graph = j.at("use_graph").get<bool>();
  c.gcn_hidden = j.at("gcn_hidden").get<std::size_t>();
  c.gcn_dropout = j.at("gcn_dropout").get<double>();
  c.fc1 = j.at("fc1").get<std::size_t>();
  c.fc2 = j.at("fc2").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.lr = j.at("lr").get<double>();
  c.lr_min = j.at("lr_min").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.decoupled_weight_decay = j.at("decoupled_weight_decay").get<bool>();
  c.epochs = j.at("epochs").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.variance_threshold = j.at("variance_threshold").get<double>();
  c.correlation_threshold = j.at("correlation_threshold").get<double>();
  c.pretrained_gcn = j.at("pretrained_gcn").get<std::string>();
  return c;
}

json shape_json(const ModelShape& s) {
  return {{"use_descriptors", s.use_descriptors}, {"use_embeddings", s.use_embeddings}, {"use_graph", s.use_graph},
          {"descriptor_width", s.descriptor_width}, {"embedding_width", s.embedding_width},
          {"gcn_hidden", s.gcn_hidden}, {"gcn_dropout", s.gcn_dropout}, {"fc1", s.fc1}, {"fc2", s.fc2},
          {"dropout", s.dropout}};
}

ModelShape shape_from(const json& j) {
  ModelShape s;
  s.use_descriptors = j.at("use_descriptors").get<bool>();
  s.use_embeddings = j.at("use_embeddings").get<bool>();
  s.use_graph = j.at("use_graph").get<bool>();
  s.descriptor_width = j.at("descriptor_width").get<std::size_t>();
  s.embedding_width = j.at("embedding_width").get<std::size_t>();
  s.gcn_hidden = j.at("gcn_hidden").get<std::size_t>();
  s.gcn_dropout = j.at("gcn_dropout").get<double>();
  s.fc1 = j.at("fc1").get<std::size_t>();
  s.fc2 = j.at("fc2").get<std::size_t>();
  s.dropout = j.at("dropout").get<double>();
  return s;
}

std::uint32_t crc32_of(const char* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data), chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

struct ArrayEntry {
  std::string name;
  std::size_t rows, cols;
};

// Parsed container before any model is constructed.
struct Container {
  json manifest;
  std::vector<ArrayEntry> arrays;
  binio::Reader payload;
};

Container open_container(const char* data, std::size_t size, const std::string& what) {
  if (size < kMagic.size() || std::string_view(data, kMagic.size()) != kMagic) throw FormatError(what + ": bad magic");
  binio::Reader r(data, size, what);
  r.take(kMagic.size());
  const auto version = r.le<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError(what + ": version mismatch (file has version " + std::to_string(version) +
                      ", this build reads version " + std::to_string(kCheckpointVersion) + ")");
  }
  const auto manifest_len = r.le<std::uint32_t>();
  if (r.remaining() < static_cast<std::size_t>(manifest_len) + 4) throw FormatError(what + ": truncated file");
  const std::string manifest_text = r.text(manifest_len);
  const bool crc_ok = crc32_of(data, size - 4) == binio::Reader(data + size - 4, 4, what).le<std::uint32_t>();

  Container c{json(), {}, r};
  try {
    c.manifest = json::parse(manifest_text);
    for (const json& a : c.manifest.at("arrays")) {
      if (a.at("dtype").get<std::string>() != "f32") throw FormatError(what + ": unsupported dtype");
      const auto shape = a.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 2) throw FormatError(what + ": arrays must be two-dimensional");
      c.arrays.push_back({a.at("name").get<std::string>(), shape[0], shape[1]});
    }
  } catch (const json::exception&) {
    throw FormatError(what + (crc_ok ? ": corrupt manifest" : ": checksum mismatch"));
  }
  std::size_t payload = 0;
  for (const ArrayEntry& a : c.arrays) payload += a.rows * a.cols * 4;
  if (r.remaining() < payload + 4) throw FormatError(what + ": truncated file");
  if (r.remaining() > payload + 4) throw FormatError(what + ": checksum mismatch (unexpected trailing bytes)");
  if (!crc_ok) throw FormatError(what + ": checksum mismatch");
  c.payload = r;
  return c;
}

}  // namespace

std::string config_to_json(const FusionConfig& config) { return config_json(config).dump(); }

std::vector<char> encode_checkpoint(const TrainedModel& model) {
  TrainedModel copy = model;  // named_tensors needs mutable access
  const auto tensors = named_tensors(copy.net);
  json arrays = json::array();
  for (const NamedTensor& t : tensors) {
    arrays.push_back({{"name", t.name}, {"dtype", "f32"}, {"shape", {t.tensor->rows, t.tensor->cols}}});
  }
  const json manifest = {{"format", "R3CKPT"},
                         {"version", kCheckpointVersion},
                         {"config", config_json(model.config)},
                         {"shape", shape_json(model.net.shape)},
                         {"descriptor_schema", model.descriptor_schema},
                         {"descriptor_names", model.descriptor_names},
                         {"raw_embedding_width", model.raw_embedding_width},
                         {"descriptor_stats", stats_json(model.descriptor_stats)},
                         {"embedding_stats", stats_json(model.embedding_stats)},
                         {"scaler", {{"mean", model.scaler.mean}, {"std", model.scaler.std}}},
                         {"best_epoch", model.best_epoch},
                         {"fold_index", model.fold_index},
                         {"arrays", arrays}};
  const std::string text = manifest.dump();
  binio::Writer w;
  w.text(kMagic);
  w.le(kCheckpointVersion);
  w.le(static_cast<std::uint32_t>(text.size()));
  w.text(text);
  for (const NamedTensor& t : tensors) {
    for (float v : t.tensor->data) w.f32(v);
  }
  const auto& buf = w.buffer();
  w.le(crc32_of(buf.data(), buf.size()));
  return w.buffer();
}

TrainedModel decode_checkpoint(const char* data, std::size_t size, const std::string& what) {
  Container c = open_container(data, size, what);
  TrainedModel m;
  try {
    const json& j = c.manifest;
    m.config = config_from(j.at("config"));
    m.descriptor_schema = j.at("descriptor_schema").get<std::string>();
    m.descriptor_names = j.at("descriptor_names").get<std::vector<std::string>>();
    m.raw_embedding_width = j.at("raw_embedding_width").get<std::size_t>();
    m.descriptor_stats = stats_from(j.at("descriptor_stats"));
    m.embedding_stats = stats_from(j.at("embedding_stats"));
    m.scaler.mean = j.at("scaler").at("mean").get<double>();
    m.scaler.std = j.at("scaler").at("std").get<double>();
    m.best_epoch = j.at("best_epoch").get<int>();
    m.fold_index = j.at("fold_index").get<int>();
    m.net = FusionModel<float>(shape_from(j.at("shape")));
  } catch (const json::exception& e) {
    throw FormatError(what + ": corrupt manifest (" + e.what() + ")");
  } catch (const ShapeError& e) {
    throw FormatError(what + ": corrupt manifest (" + e.what() + ")");
  }
  const auto tensors = named_tensors(m.net);
  if (tensors.size() != c.arrays.size()) throw FormatError(what + ": array list does not match the model layout");
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const ArrayEntry& a = c.arrays[i];
    nn::Tensor& t = *tensors[i].tensor;
    if (a.name != tensors[i].name || a.rows != t.rows || a.cols != t.cols) {
      throw FormatError(what + ": array '" + a.name + "' does not match the model layout");
    }
    for (float& v : t.data) v = c.payload.f32();
  }
  return m;
}

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path) {
  binio::write_file_atomic(path, encode_checkpoint(model));
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
  const std::vector<char> bytes = binio::read_file(path);
  return decode_checkpoint(bytes.data(), bytes.size(), path.string());
}

void load_pretrained_gcn(FusionModel<float>& net, const std::filesystem::path& path) {
  const std::vector<char> bytes = binio::read_file(path);
  Container c = open_container(bytes.data(), bytes.size(), path.string());
  std::vector<std::pair<std::string, nn::Tensor*>> targets;
  for (nn::Param<float>* p : net.gcn.params()) targets.emplace_back(p->name, &p->value);
  std::size_t copied = 0;
  for (const ArrayEntry& a : c.arrays) {
    const char* at = c.payload.take(a.rows * a.cols * 4);
    for (auto& [name, tensor] : targets) {
      if (name != a.name) continue;
      if (tensor->rows != a.rows || tensor->cols != a.cols) {
        throw ShapeError("width mismatch: pretrained array '" + a.name + "' has a different shape");
      }
      binio::Reader r(at, a.rows * a.cols * 4, path.string());
      for (float& v : tensor->data) v = r.f32();
      ++copied;
    }
  }
  if (copied != targets.size()) throw DataError(path.string() + ": pretrained file lacks graph-block arrays");
}

}  // namespace rep3net::model
