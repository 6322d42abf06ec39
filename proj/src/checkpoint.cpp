#include "rrn/checkpoint.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include "rrn/error.hpp"
#include "rrn/experiment.hpp"

namespace rrn {
namespace {

nlohmann::json normalizer_json(const AffineNormalizer& n) { return {{"shift", n.shift()}, {"scale", n.scale()}}; }

AffineNormalizer normalizer_from(const nlohmann::json& j) {
  return AffineNormalizer(j.at("shift").get<std::vector<double>>(), j.at("scale").get<std::vector<double>>());
}

std::string pair_name(LandmarkName a, LandmarkName b) {
  return std::string(to_string(a)) + "-" + std::string(to_string(b));
}

nlohmann::json specs_json(const std::vector<LayerSpec>& specs) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : specs) out.push_back(to_json(s));
  return out;
}

}  // namespace

nlohmann::json checkpoint_json(RrnModel& model) {
  nlohmann::json j;
  j["format"] = "rrn-checkpoint";
  j["version"] = kCheckpointVersion;
  j["seed"] = model.seed();
  j["config"] = to_json(model.config());

  const auto first = model.pairs().front();
  j["layers"] = {{"pairwise", specs_json(model.pairwise_unit(first.first, first.second).specs())},
                 {"fusion", specs_json(model.fusion_unit(model.inputs().front()).specs())}};

  nlohmann::json tensors = nlohmann::json::object();
  for (const auto& t : model.state_tensors()) {
    tensors[t.name] = {{"shape", t.tensor->shape()},
                       {"values", std::vector<double>(t.tensor->values().begin(), t.tensor->values().end())}};
  }
  j["tensors"] = std::move(tensors);

  nlohmann::json moments = nlohmann::json::object();
  auto& store = model.params();
  for (std::size_t i = 0; i < store.size(); ++i) {
    moments[store.param(i).name] = {{"m", store.state(i).m}, {"v", store.state(i).v}};
  }
  j["optimizer"] = {{"kind", "adam"}, {"step", store.step()}, {"moments", std::move(moments)}};

  std::ostringstream rng_state;
  rng_state << model.rng();
  j["rng"] = rng_state.str();

  nlohmann::json features = nlohmann::json::object();
  for (const auto& [a, b] : model.pairs()) features[pair_name(a, b)] = normalizer_json(model.feature_normalizer(a, b));
  j["normalizers"] = {{"features", std::move(features)}, {"targets", normalizer_json(model.target_normalizer())}};
  return j;
}

RrnModel model_from_checkpoint(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "rrn-checkpoint") throw LoadError("not an rrn checkpoint");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) throw LoadError("unsupported checkpoint version " + std::to_string(version));
    RrnModel model = RrnModel::build(rrn_config_from_json(j.at("config")), j.at("seed").get<std::uint64_t>());

    const auto first = model.pairs().front();
    if (j.at("layers").at("pairwise") != specs_json(model.pairwise_unit(first.first, first.second).specs()) ||
        j.at("layers").at("fusion") != specs_json(model.fusion_unit(model.inputs().front()).specs())) {
      throw LoadError("checkpoint layer specs do not match its config");
    }

    const auto& tensors = j.at("tensors");
    for (const auto& t : model.state_tensors()) {
      if (!tensors.contains(t.name)) throw LoadError("checkpoint lacks tensor '" + t.name + "'");
      const auto& entry = tensors.at(t.name);
      if (entry.at("shape").get<std::vector<std::size_t>>() != t.tensor->shape()) {
        throw LoadError("tensor '" + t.name + "' has the wrong shape");
      }
      const auto values = entry.at("values").get<std::vector<double>>();
      std::copy(values.begin(), values.end(), t.tensor->values().begin());
    }

    auto& store = model.params();
    const auto& opt = j.at("optimizer");
    store.set_step(opt.at("step").get<std::int64_t>());
    for (std::size_t i = 0; i < store.size(); ++i) {
      const auto& mom = opt.at("moments").at(store.param(i).name);
      store.state(i).m = mom.at("m").get<std::vector<double>>();
      store.state(i).v = mom.at("v").get<std::vector<double>>();
      if (store.state(i).m.size() != store.param(i).tensor->size() ||
          store.state(i).v.size() != store.param(i).tensor->size()) {
        throw LoadError("optimizer state of '" + store.param(i).name + "' has the wrong size");
      }
    }

    std::istringstream rng_state(j.at("rng").get<std::string>());
    rng_state >> model.rng();

    std::map<RrnModel::PairKey, AffineNormalizer> features;
    for (const auto& [a, b] : model.pairs()) {
      features[{a, b}] = normalizer_from(j.at("normalizers").at("features").at(pair_name(a, b)));
    }
    model.set_normalizers(std::move(features), normalizer_from(j.at("normalizers").at("targets")));
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw LoadError(std::string("checkpoint config invalid: ") + e.what());
  } catch (const ShapeError& e) {
    throw LoadError(std::string("checkpoint inconsistent: ") + e.what());
  }
}

void save_checkpoint(RrnModel& model, const std::filesystem::path& path) {
  const auto j = checkpoint_json(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write checkpoint '" + path.string() + "'");
  if (path.extension() == ".json") {
    out << j.dump() << '\n';
  } else {
    const auto bytes = nlohmann::json::to_cbor(j);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  }
}

RrnModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open checkpoint '" + path.string() + "'");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.empty()) throw LoadError("checkpoint '" + path.string() + "' is empty");
  nlohmann::json j;
  try {
    j = bytes.front() == '{' ? nlohmann::json::parse(bytes) : nlohmann::json::from_cbor(bytes);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("checkpoint '" + path.string() + "' cannot be decoded: " + e.what());
  }
  return model_from_checkpoint(j);
}

}  // namespace rrn
