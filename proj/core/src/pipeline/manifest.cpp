#include "spect/pipeline/manifest.hpp"

#include <atomic>
#include <fstream>
#include <sstream>

#include "spect/array_io.hpp"
#include "spect/error.hpp"

namespace spect::pipeline {

namespace {
std::atomic<bool> g_record_timings{false};
}

void set_record_timings(bool on) { g_record_timings = on; }
bool record_timings() { return g_record_timings; }

RunManifest::RunManifest(std::string command)
    : command_(std::move(command)), timings_enabled_(g_record_timings) {}

void RunManifest::add_seed(const std::string& name, std::uint64_t seed) { seeds_[name] = seed; }

void RunManifest::add_timing(const std::string& phase, double seconds) {
  timings_.emplace_back(phase, seconds);
}

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["tool"] = "spect";
  j["version"] = kToolVersion;
  j["command"] = command_;
  j["config"] = config_;
  j["seeds"] = seeds_;
  j["inputs"] = inputs_;
  j["outputs"] = outputs_;
  if (timings_enabled_) {
    nlohmann::ordered_json t = nlohmann::ordered_json::object();
    for (const auto& [phase, seconds] : timings_) t[phase] = seconds;
    j["timings_seconds"] = t;
  }
  return j;
}

void RunManifest::write(const std::filesystem::path& path) const {
  write_text_atomic(path, to_json().dump(2) + "\n");
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path.string(),
                    std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(FormatError::Kind::kIo, "cannot open: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace spect::pipeline
