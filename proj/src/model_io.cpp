#include "fftcae/model_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include <json.hpp>
#include <zlib.h>

#include "fftcae/errors.hpp"
#include "fftcae/file_util.hpp"

namespace fftcae {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'F', 'C', 'A', 'E'};

class Writer {
 public:
  template <typename T>
  void put(T value) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    bytes.insert(bytes.end(), raw, raw + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes.insert(bytes.end(), p, p + n);
  }

  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, data_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, raw, sizeof(T));
    return value;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw ModelFormatError("model file is truncated");
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

json config_to_json(const PipelineConfig& c) {
  json layers = json::array();
  for (const auto& l : c.layer_spec)
    layers.push_back({{"kind", nn::to_string(l.kind)}, {"filters", l.filters}, {"kernel", l.kernel}, {"stride", l.stride}});
  const auto& t = c.training;
  return {{"phi", c.phi.tag == PhiKind::Tag::Log ? "log" : "id"},
          {"phi_epsilon", c.phi.epsilon},
          {"padded_length_m", c.padded_length_m},
          {"sample_rate_hz", c.sample_rate_hz},
          {"layers", layers},
          {"bn_epsilon", c.bn_epsilon},
          {"bn_momentum", c.bn_momentum},
          {"training",
           {{"lr", t.lr},
            {"max_epochs", t.max_epochs},
            {"patience", t.patience},
            {"batch_size", t.batch_size},
            {"val_fraction", t.val_fraction},
            {"seed", t.seed}}}};
}

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  const std::string phi = j.at("phi").get<std::string>();
  if (phi != "log" && phi != "id") throw ModelFormatError("unknown phi '" + phi + "'");
  c.phi = phi == "log" ? PhiKind::log() : PhiKind::identity();
  c.phi.epsilon = j.at("phi_epsilon").get<double>();
  c.padded_length_m = j.at("padded_length_m").get<Eigen::Index>();
  c.sample_rate_hz = j.at("sample_rate_hz").get<int>();
  c.layer_spec.clear();
  for (const auto& l : j.at("layers"))
    c.layer_spec.push_back({nn::layer_kind_from_string(l.at("kind").get<std::string>()), l.at("filters").get<Eigen::Index>(),
                            l.at("kernel").get<Eigen::Index>(), l.at("stride").get<Eigen::Index>()});
  c.bn_epsilon = j.at("bn_epsilon").get<double>();
  c.bn_momentum = j.at("bn_momentum").get<double>();
  const auto& t = j.at("training");
  c.training.lr = t.at("lr").get<double>();
  c.training.max_epochs = t.at("max_epochs").get<int>();
  c.training.patience = t.at("patience").get<int>();
  c.training.batch_size = t.at("batch_size").get<int>();
  c.training.val_fraction = t.at("val_fraction").get<double>();
  c.training.seed = t.at("seed").get<std::uint64_t>();
  return c;
}

// Visits every stored parameter in file order; `f` receives a reference.
template <typename Net, typename F>
void for_each_parameter(Net& net, F&& f) {
  for (auto& layer : net.layers()) {
    std::visit(
        [&f](auto& l) {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, nn::Conv1D<double>> || std::is_same_v<L, nn::ConvTranspose1D<double>>) {
            for (Eigen::Index o = 0; o < l.out_channels(); ++o)
              for (Eigen::Index i = 0; i < l.in_channels(); ++i)
                for (Eigen::Index tau = 0; tau < l.kernel_size(); ++tau) f(l.weight(o, i, tau));
            for (auto& b : l.bias()) f(b);
          } else if constexpr (std::is_same_v<L, nn::BatchNorm<double>>) {
            for (auto& v : l.gamma()) f(v);
            for (auto& v : l.beta()) f(v);
            for (auto& v : l.running_mean()) f(v);
            for (auto& v : l.running_var()) f(v);
          }
        },
        layer);
  }
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const ConvAEModel& model) {
  json meta;
  meta["format"] = "fftcae-model";
  meta["config"] = config_to_json(model.config);
  meta["best_epoch"] = model.best_epoch;
  meta["train_log"] = json::array();
  for (const auto& e : model.train_log)
    meta["train_log"].push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}});
  const std::string text = meta.dump();

  std::vector<double> params;
  for_each_parameter(model.network, [&params](const double& v) { params.push_back(v); });

  Writer w;
  w.put_bytes(kMagic, sizeof(kMagic));
  w.put(kModelFormatVersion);
  w.put(static_cast<std::uint32_t>(text.size()));
  w.put_bytes(text.data(), text.size());
  w.put(static_cast<std::uint64_t>(params.size()));
  for (double v : params) w.put(v);
  w.put(crc32_of(w.bytes));
  return std::move(w.bytes);
}

ConvAEModel deserialize_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw ModelFormatError("not a model file (bad magic)");
  if (bytes.size() < sizeof(kMagic) + 4) throw ModelFormatError("model file is truncated");
  const auto body = bytes.first(bytes.size() - 4);
  std::uint32_t stored = Reader(bytes.last(4)).get<std::uint32_t>();
  if (stored != crc32_of(body)) throw ModelFormatError("model file checksum mismatch (corrupted or truncated)");

  Reader r(body);
  r.take(sizeof(kMagic));
  const auto version = r.get<std::uint16_t>();
  if (version != kModelFormatVersion) throw ModelFormatError("unsupported model format version " + std::to_string(version));
  const auto meta_len = r.get<std::uint32_t>();
  const auto meta_bytes = r.take(meta_len);

  ConvAEModel model;
  try {
    const json meta = json::parse(meta_bytes.begin(), meta_bytes.end());
    if (meta.at("format").get<std::string>() != "fftcae-model") throw ModelFormatError("unexpected format tag");
    model.config = config_from_json(meta.at("config"));
    model.best_epoch = meta.at("best_epoch").get<int>();
    for (const auto& e : meta.at("train_log"))
      model.train_log.push_back({e.at("epoch").get<int>(), e.at("train_loss").get<double>(), e.at("val_loss").get<double>()});
    validate(model.config);
    if (model.config.padded_length_m == 0) throw ModelFormatError("padded length is missing");
    model.network = nn::Network<double>::build(model.config.layer_spec, 1, model.config.bn_epsilon, model.config.bn_momentum);
  } catch (const json::exception& e) {
    throw ModelFormatError(std::string("bad model metadata: ") + e.what());
  } catch (const ModelFormatError&) {
    throw;
  } catch (const Error& e) {
    throw ModelFormatError(std::string("invalid model config: ") + e.what());
  }

  const auto count = r.get<std::uint64_t>();
  std::uint64_t expected = 0;
  for_each_parameter(model.network, [&expected](double&) { ++expected; });
  if (count != expected || r.remaining() != count * sizeof(double))
    throw ModelFormatError("parameter count " + std::to_string(count) + " does not match the architecture (" +
                           std::to_string(expected) + ")");
  for_each_parameter(model.network, [&r](double& v) {
    v = r.get<double>();
    if (!std::isfinite(v)) throw ModelFormatError("model contains non-finite parameters");
  });
  for (const auto& layer : model.network.layers())
    if (const auto* bn = std::get_if<nn::BatchNorm<double>>(&layer))
      if ((bn->running_var().array() < 0).any()) throw ModelFormatError("negative running variance");
  return model;
}

void save_model(const ConvAEModel& model, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

ConvAEModel load_model(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

}  // namespace fftcae
