#include "hydrolimit/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <memory>

#include <json.hpp>

#include "hydrolimit/error.hpp"

namespace hydrolimit {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
  const std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                                     &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::IoError, "digest initialisation failed");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 15]);
  }
  return out;
}

OutputFile describe_output(const std::filesystem::path& dir, const std::string& name) {
  const auto path = dir / name;
  std::error_code ec;
  const auto bytes = std::filesystem::file_size(path, ec);
  if (ec) throw Error(Errc::IoError, "cannot stat " + path.string());
  return {name, bytes, sha256_file(path)};
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::array<char, 32> buf{};
  std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf.data();
}

std::string manifest_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["tool"] = "hydrolimit";
  j["tool_version"] = m.tool_version;
  j["command"] = m.command;
  j["seed"] = m.seed;
  j["threads"] = m.threads;
  j["started"] = m.started;
  j["finished"] = m.finished;
  j["partial"] = m.partial;
  if (!m.error.empty()) j["error"] = m.error;
  j["config"] = m.config;
  auto& stages = j["stages"] = nlohmann::ordered_json::array();
  for (const auto& [name, seconds] : m.stages) stages.push_back({{"stage", name}, {"seconds", seconds}});
  auto& outputs = j["outputs"] = nlohmann::ordered_json::array();
  for (const auto& f : m.outputs) {
    outputs.push_back({{"file", f.name}, {"bytes", f.bytes}, {"sha256", f.sha256}});
  }
  j["summary"] = m.summary_json.empty() ? nlohmann::ordered_json::object()
                                        : nlohmann::ordered_json::parse(m.summary_json);
  return j.dump(2) + "\n";
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
  const std::string text = manifest_json(manifest);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(Errc::IoError, "failed writing " + path.string());
}

}  // namespace hydrolimit
