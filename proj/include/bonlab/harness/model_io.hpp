#pragma once

#include <filesystem>
#include <string>

#include "bonlab/prm/model.hpp"

namespace bonlab::harness {

inline constexpr int kModelFormatVersion = 1;

/// Model file layout, fields in this order:
///   format  "bonlab-prm"
///   version kModelFormatVersion
///   input_dim, hidden
///   layout  ["W", "b", "w_mu", "b_mu", "w_var", "b_var"]
///   params  flat parameter vector, each entry the shortest round-trip
///           decimal string of the double
std::string model_to_json(const prm::PrmModel& model);
prm::PrmModel model_from_json(const std::string& text);

void save_model(const prm::PrmModel& model, const std::filesystem::path& path);
prm::PrmModel load_model(const std::filesystem::path& path);

}  // namespace bonlab::harness
