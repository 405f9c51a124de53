#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "attribex/network.hpp"
#include "attribex/tensor.hpp"

namespace attribex {

struct Sample {
  Tensor x;
  std::optional<long> label;
};

// JSON text with every floating-point number written as %.16e, i.e. with 17
// significant digits, so parse(dump(v)) is bit-exact. Integers stay integral.
std::string dump_json(const nlohmann::json& value, bool pretty = false);
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

nlohmann::json model_to_json(const Network& net);
Network model_from_json(const nlohmann::json& doc);
Network load_model(const std::filesystem::path& path);
void save_model(const Network& net, const std::filesystem::path& path);

std::vector<Sample> dataset_from_json(const nlohmann::json& doc);
nlohmann::json dataset_to_json(const std::vector<Sample>& samples);
std::vector<Sample> load_dataset(const std::filesystem::path& path);
void save_dataset(const std::vector<Sample>& samples, const std::filesystem::path& path);

}  // namespace attribex
