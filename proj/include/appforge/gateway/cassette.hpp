#pragma once

#include "appforge/gateway/types.hpp"

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace appforge::gateway {

enum class CassetteMode { record, replay, passthrough };

std::string_view to_string(CassetteMode m);
CassetteMode cassette_mode_from_string(std::string_view s);

struct CassetteEntry {
  std::string fingerprint;
  ModelReply reply;

  nlohmann::json to_json() const;
  static CassetteEntry from_json(const nlohmann::json& j);
};

// Recorded (fingerprint, reply) pairs. On disk: one JSON object per line,
// appended as replies arrive.
//
// A fingerprint may be recorded more than once (the same prompt asked at two
// points of a run). Lookups are occurrence-indexed: the k-th lookup of a
// fingerprint returns the k-th recording, and lookups past the last
// recording keep returning the last one.
class Cassette {
 public:
  Cassette() = default;

  // Adds the records of a cassette file. Throws UsageError naming the line
  // on malformed input.
  void load(const std::filesystem::path& path);

  // Records appended from now on are also written to `path`.
  void attach_file(std::filesystem::path path);

  std::optional<ModelReply> next(const std::string& fingerprint);
  void append(const std::string& fingerprint, const ModelReply& reply);

  std::size_t size() const;
  std::vector<CassetteEntry> entries() const;

 private:
  mutable std::mutex mu_;
  std::vector<CassetteEntry> entries_;
  std::map<std::string, std::vector<std::size_t>> index_;
  std::map<std::string, std::size_t> cursor_;
  std::optional<std::filesystem::path> file_;
};

}  // namespace appforge::gateway
