#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace spect::pipeline {

inline constexpr const char* kToolVersion = "0.1.0";

/// Provenance record written next to every command's outputs. Contents are
/// deterministic unless timings are explicitly enabled.
class RunManifest {
 public:
  explicit RunManifest(std::string command);

  void set_config(nlohmann::ordered_json config) { config_ = std::move(config); }
  nlohmann::ordered_json& config() { return config_; }
  void add_seed(const std::string& name, std::uint64_t seed);
  void add_input(const std::string& path) { inputs_.push_back(path); }
  void add_output(const std::string& path) { outputs_.push_back(path); }
  void add_timing(const std::string& phase, double seconds);
  void enable_timings(bool on) { timings_enabled_ = on; }

  nlohmann::ordered_json to_json() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::string command_;
  nlohmann::ordered_json config_ = nlohmann::ordered_json::object();
  nlohmann::ordered_json seeds_ = nlohmann::ordered_json::object();
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  std::vector<std::pair<std::string, double>> timings_;
  bool timings_enabled_ = false;
};

/// Process-wide default for new manifests (the CLI's --record-timings).
void set_record_timings(bool on);
bool record_timings();

/// Writes text through a temporary file and rename.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace spect::pipeline
