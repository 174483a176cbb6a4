#include "bonlab/harness/model_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "bonlab/harness/csv.hpp"

namespace bonlab::harness {

std::string model_to_json(const prm::PrmModel& model) {
  nlohmann::ordered_json j;
  j["format"] = "bonlab-prm";
  j["version"] = kModelFormatVersion;
  j["input_dim"] = model.shape().input_dim;
  j["hidden"] = model.shape().hidden;
  j["layout"] = {"W", "b", "w_mu", "b_mu", "w_var", "b_var"};
  auto params = nlohmann::ordered_json::array();
  for (double p : model.params()) params.push_back(format_real(p));
  j["params"] = std::move(params);
  return j.dump(2) + "\n";
}

prm::PrmModel model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("model file is not valid JSON: ") + e.what());
  }
  if (j.value("format", "") != "bonlab-prm") throw DataError("not a bonlab-prm model file");
  if (j.value("version", 0) != kModelFormatVersion) {
    throw DataError("unsupported model version " + j.value("version", nlohmann::json()).dump());
  }
  const prm::PrmShape shape{j.at("input_dim").get<int>(), j.at("hidden").get<int>()};
  std::vector<double> params;
  for (const auto& v : j.at("params")) {
    const auto s = v.get<std::string>();
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw DataError("bad parameter value '" + s + "'");
    params.push_back(x);
  }
  try {
    return prm::PrmModel(shape, std::move(params));
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
}

void save_model(const prm::PrmModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << model_to_json(model);
}

prm::PrmModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace bonlab::harness
