#pragma once

#include "kucb/mdp.hpp"

#include <filesystem>
#include <string>

namespace kucb {

/// JSON document with "states", "actions", "rewards" (S x A) and
/// "transitions" (S x A x S) as nested arrays, plus "mixing_eps".
[[nodiscard]] std::string model_to_json(const MdpModel &model);
[[nodiscard]] MdpModel model_from_json(const std::string &text);

void write_model(const MdpModel &model, const std::filesystem::path &path);
[[nodiscard]] MdpModel read_model(const std::filesystem::path &path);

}  // namespace kucb
