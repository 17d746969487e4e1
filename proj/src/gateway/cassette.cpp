#include "appforge/gateway/cassette.hpp"

#include "appforge/util/fs.hpp"

#include <fmt/format.h>

#include <fstream>

namespace appforge::gateway {

std::string_view to_string(CassetteMode m) {
  switch (m) {
    case CassetteMode::record: return "record";
    case CassetteMode::replay: return "replay";
    case CassetteMode::passthrough: return "passthrough";
  }
  return "passthrough";
}

CassetteMode cassette_mode_from_string(std::string_view s) {
  if (s == "record") return CassetteMode::record;
  if (s == "replay") return CassetteMode::replay;
  if (s == "passthrough") return CassetteMode::passthrough;
  throw UsageError(fmt::format("unknown cassette mode '{}'", s));
}

nlohmann::json CassetteEntry::to_json() const {
  return {{"fingerprint", fingerprint},
          {"reply",
           {{"raw", reply.raw},
            {"usage", {{"input", reply.usage.input}, {"output", reply.usage.output}}},
            {"latency_ms", reply.latency.count()}}}};
}

CassetteEntry CassetteEntry::from_json(const nlohmann::json& j) {
  CassetteEntry e;
  e.fingerprint = j.at("fingerprint").get<std::string>();
  const auto& r = j.at("reply");
  e.reply.raw = r.at("raw").get<std::string>();
  if (r.contains("usage")) {
    e.reply.usage.input = r["usage"].value("input", std::int64_t{0});
    e.reply.usage.output = r["usage"].value("output", std::int64_t{0});
  }
  e.reply.latency = std::chrono::milliseconds(r.value("latency_ms", std::int64_t{0}));
  return e;
}

void Cassette::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError(fmt::format("cannot open cassette {}", path.string()));
  std::lock_guard lock(mu_);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      auto e = CassetteEntry::from_json(nlohmann::json::parse(line));
      index_[e.fingerprint].push_back(entries_.size());
      entries_.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw UsageError(fmt::format("{}:{}: malformed cassette record: {}", path.string(), lineno, ex.what()));
    }
  }
}

void Cassette::attach_file(std::filesystem::path path) {
  std::lock_guard lock(mu_);
  file_ = std::move(path);
}

std::optional<ModelReply> Cassette::next(const std::string& fingerprint) {
  std::lock_guard lock(mu_);
  auto it = index_.find(fingerprint);
  if (it == index_.end()) return std::nullopt;
  std::size_t& k = cursor_[fingerprint];
  const std::size_t pick = std::min(k, it->second.size() - 1);
  ++k;
  return entries_[it->second[pick]].reply;
}

void Cassette::append(const std::string& fingerprint, const ModelReply& reply) {
  std::lock_guard lock(mu_);
  CassetteEntry e{fingerprint, reply};
  if (file_) util::append_file(*file_, e.to_json().dump() + "\n");
  index_[fingerprint].push_back(entries_.size());
  entries_.push_back(std::move(e));
}

std::size_t Cassette::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::vector<CassetteEntry> Cassette::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

}  // namespace appforge::gateway
