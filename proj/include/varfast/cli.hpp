#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "varfast/pipeline.hpp"
#include "varfast/verify.hpp"

namespace varfast {

struct RunConfig {
  std::uint64_t seed = 0;
  ModelConfig model;
  ExecutionMode mode = ExecutionMode::Exact;
};

// Flat key=value lines; '#' starts a comment, blank lines are ignored.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

// Throws ConfigError on an unknown key or a value outside its range.
void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
void validate_run_config(const RunConfig& cfg);

// ASCII "h w c\n" header followed by h*w*c little-endian doubles.
void write_image(const std::filesystem::path& path, const TokenMap& image);
TokenMap read_image(const std::filesystem::path& path);

nlohmann::ordered_json trace_to_json(const RunConfig& cfg, const RunTrace& trace);
nlohmann::ordered_json report_to_json(const BoundReport& report);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace varfast
