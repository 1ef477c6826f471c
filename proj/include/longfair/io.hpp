#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "longfair/scm.hpp"
#include "longfair/sensitivity.hpp"
#include "longfair/trainer.hpp"

namespace longfair {

inline constexpr int kSchemaVersion = 1;

std::uint64_t fnv1a(std::string_view bytes);
std::string hash_hex(std::uint64_t h);

// Write-temp-then-rename; partial output never lands under the final name.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content);
std::string read_file(const std::filesystem::path& path);

nlohmann::json vec_to_json(const Vec& v);
Vec vec_from_json(const nlohmann::json& j);
nlohmann::json mat_to_json(const Mat& m);
Mat mat_from_json(const nlohmann::json& j);

// Panel persistence: one individual trajectory per JSONL line.
std::string panel_to_jsonl(const PanelDataset& panel);
PanelDataset panel_from_jsonl(const std::string& text);

// Model file with enough context to rebuild and cross-check a run.
struct ModelFile {
  DecisionModel model;
  std::string algorithm;
  int horizon = 0;
  std::string config_hash;
  std::uint64_t seed = 0;
};

std::string model_to_json(const ModelFile& mf);
ModelFile model_from_json(const std::string& text);

// Trace rows hold only deterministic fields so reruns are byte-identical;
// wall times are reported on the console instead.
std::string trace_to_jsonl(const RrmTrace& trace,
                           const std::string& config_hash = {},
                           std::uint64_t seed = 0);

// Comment line stamped at the top of emitted CSV files.
std::string csv_stamp(const std::string& config_hash, std::uint64_t seed);

nlohmann::json sensitivity_to_json(const SensitivityReport& report);

}  // namespace longfair
