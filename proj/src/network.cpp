#include "misr4d/network.hpp"

#include <filesystem>
#include <fstream>

namespace misr4d {

namespace fs = std::filesystem;

void ModelConfig::validate() const {
  if (in_views < 1) throw config_error("model: in_views must be >= 1");
  if (encoder_channels.size() < 2) throw config_error("model: need at least 2 encoder blocks");
  for (size_t i = 1; i < encoder_channels.size(); ++i)
    if (encoder_channels[i] <= encoder_channels[i - 1])
      throw config_error("model: encoder_channels must be strictly increasing");
  if (encoder_channels[0] < 1) throw config_error("model: encoder_channels must be positive");
  if (upscale < 1) throw config_error("model: upscale must be >= 1");
  if (f_int_ratio <= 0 || f_int_ratio > 1) throw config_error("model: f_int_ratio in (0, 1]");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"in_views", in_views},
          {"encoder_channels", encoder_channels},
          {"upscale", upscale},
          {"f_int_ratio", f_int_ratio},
          {"prelu_init", prelu_init}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.in_views = j.value("in_views", c.in_views);
  if (j.contains("encoder_channels"))
    c.encoder_channels = j.at("encoder_channels").get<std::vector<int>>();
  c.upscale = j.value("upscale", c.upscale);
  c.f_int_ratio = j.value("f_int_ratio", c.f_int_ratio);
  c.prelu_init = j.value("prelu_init", c.prelu_init);
  c.validate();
  return c;
}

void save_checkpoint(const std::string& dir, Model<float>& model,
                     const nlohmann::json& provenance) {
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["model"] = model.cfg.to_json();
  manifest["provenance"] = provenance;
  nlohmann::json arrays = nlohmann::json::array();
  for (auto& p : model.params()) {
    const std::string file = p.name + ".bin";
    arrays.push_back({{"name", p.name},
                      {"shape", p.shape},
                      {"file", file},
                      {"dtype", "float32"},
                      {"trainable", p.trainable}});
    std::ofstream out(fs::path(dir) / file, std::ios::binary);
    if (!out) throw config_error("checkpoint: cannot write " + file);
    out.write(reinterpret_cast<const char*>(p.value->data()),
              static_cast<std::streamsize>(p.value->size() * sizeof(float)));
  }
  manifest["arrays"] = arrays;
  std::ofstream mf(fs::path(dir) / "manifest.json");
  mf << manifest.dump(2) << "\n";
}

std::unique_ptr<Model<float>> load_checkpoint(const std::string& dir,
                                              nlohmann::json* manifest_out) {
  std::ifstream mf(fs::path(dir) / "manifest.json");
  if (!mf) throw config_error("checkpoint: missing manifest.json in " + dir);
  nlohmann::json manifest = nlohmann::json::parse(mf);
  auto model = std::make_unique<Model<float>>(ModelConfig::from_json(manifest.at("model")));

  std::map<std::string, ParamRef<float>> by_name;
  for (auto& p : model->params()) by_name[p.name] = p;

  for (const auto& arr : manifest.at("arrays")) {
    const std::string name = arr.at("name");
    auto it = by_name.find(name);
    if (it == by_name.end()) throw config_error("checkpoint: unknown array " + name);
    std::ifstream in(fs::path(dir) / arr.at("file").get<std::string>(), std::ios::binary);
    if (!in) throw config_error("checkpoint: missing array file for " + name);
    auto& vec = *it->second.value;
    in.read(reinterpret_cast<char*>(vec.data()),
            static_cast<std::streamsize>(vec.size() * sizeof(float)));
    if (static_cast<size_t>(in.gcount()) != vec.size() * sizeof(float))
      throw config_error("checkpoint: array " + name + " has wrong size");
  }
  if (manifest_out) *manifest_out = manifest;
  return model;
}

} // namespace misr4d
