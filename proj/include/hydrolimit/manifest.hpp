#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace hydrolimit {

struct OutputFile {
  std::string name;  // relative to the output directory
  std::uintmax_t bytes = 0;
  std::string sha256;  // lowercase hex
};

/// Record of one CLI run: enough to rerun it exactly and to audit the outputs.
struct RunManifest {
  std::string tool_version;
  std::string command;
  std::string config;  // canonical resolved config document
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string started;   // UTC, ISO 8601
  std::string finished;
  std::vector<std::pair<std::string, double>> stages;  // seconds
  std::vector<OutputFile> outputs;
  bool partial = false;
  std::string error;
  std::string summary_json;  // study summary as a JSON object
};

/// Hex SHA-256 of a file's bytes; throws IoError.
std::string sha256_file(const std::filesystem::path& path);

/// Fills name, size and digest for a file inside `dir`.
OutputFile describe_output(const std::filesystem::path& dir, const std::string& name);

std::string utc_timestamp();

std::string manifest_json(const RunManifest& manifest);
void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

}  // namespace hydrolimit
