#include "appforge/gateway/provider.hpp"

#include "appforge/util/hash.hpp"

#include <httplib.h>
#include <fmt/format.h>

#include <chrono>

namespace appforge::gateway {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw UsageError("provider endpoint must be an absolute URL: " + url);
  const auto path_begin = url.find('/', scheme_end + 3);
  if (path_begin == std::string::npos) return {url, "/"};
  return {url.substr(0, path_begin), url.substr(path_begin)};
}

std::string media_type(const std::string& format) { return "image/" + format; }

}  // namespace

nlohmann::json HttpChatProvider::build_request(const PromptBundle& bundle, const ProviderConfig& config) {
  nlohmann::json content = nlohmann::json::array();
  const bool anthropic = config.profile == "anthropic-messages";
  for (const auto& turn : bundle.turns) {
    if (const auto* text = std::get_if<std::string>(&turn)) {
      content.push_back({{"type", "text"}, {"text", *text}});
      continue;
    }
    const auto& image = std::get<ImageAttachment>(turn);
    const std::string data = util::base64_encode(image.bytes);
    if (anthropic) {
      content.push_back(
          {{"type", "image"},
           {"source", {{"type", "base64"}, {"media_type", media_type(image.format)}, {"data", data}}}});
    } else {
      content.push_back({{"type", "image_url"},
                         {"image_url", {{"url", fmt::format("data:{};base64,{}", media_type(image.format), data)}}}});
    }
  }

  nlohmann::json body;
  body["model"] = config.model;
  body["temperature"] = config.temperature;
  body["max_tokens"] = config.max_output_tokens;
  if (anthropic) {
    if (!bundle.system.empty()) body["system"] = bundle.system;
    body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", content}}});
  } else {
    body["messages"] = nlohmann::json::array();
    if (!bundle.system.empty()) body["messages"].push_back({{"role", "system"}, {"content", bundle.system}});
    body["messages"].push_back({{"role", "user"}, {"content", content}});
  }
  return body;
}

ModelReply HttpChatProvider::parse_response(const nlohmann::json& body, const ProviderConfig& config) {
  ModelReply reply;
  try {
    if (config.profile == "anthropic-messages") {
      for (const auto& part : body.at("content")) {
        if (part.value("type", "") == "text") reply.raw += part.at("text").get<std::string>();
      }
      if (body.contains("usage")) {
        reply.usage.input = body["usage"].value("input_tokens", std::int64_t{0});
        reply.usage.output = body["usage"].value("output_tokens", std::int64_t{0});
      }
    } else {
      const auto& message = body.at("choices").at(0).at("message");
      if (message.at("content").is_string()) reply.raw = message["content"].get<std::string>();
      if (body.contains("usage")) {
        reply.usage.input = body["usage"].value("prompt_tokens", std::int64_t{0});
        reply.usage.output = body["usage"].value("completion_tokens", std::int64_t{0});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(fmt::format("unexpected provider response shape: {}", e.what()), false);
  }
  return reply;
}

ModelReply HttpChatProvider::send(const PromptBundle& bundle, const ProviderConfig& config) {
  const auto endpoint = split_endpoint(config.endpoint);
  httplib::Client client(endpoint.origin);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(config.timeout).count();
  client.set_connection_timeout(std::max<std::int64_t>(1, seconds), 0);
  client.set_read_timeout(std::max<std::int64_t>(1, seconds), 0);
  client.set_write_timeout(std::max<std::int64_t>(1, seconds), 0);

  httplib::Headers headers;
  if (config.profile == "anthropic-messages") {
    headers.emplace("x-api-key", config.api_key);
    headers.emplace("anthropic-version", "2023-06-01");
  } else if (!config.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config.api_key);
  }

  const auto started = std::chrono::steady_clock::now();
  auto res = client.Post(endpoint.path, headers, build_request(bundle, config).dump(), "application/json");
  if (!res) throw TransportError("provider request failed: " + httplib::to_string(res.error()), true);
  if (res->status == 429 || res->status >= 500)
    throw TransportError(fmt::format("provider returned HTTP {}", res->status), true);
  if (res->status != 200)
    throw TransportError(fmt::format("provider returned HTTP {}: {}", res->status, res->body.substr(0, 500)), false);

  nlohmann::json body = nlohmann::json::parse(res->body, nullptr, false);
  if (body.is_discarded()) throw TransportError("provider response is not JSON", false);
  ModelReply reply = parse_response(body, config);
  reply.latency = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
  return reply;
}

}  // namespace appforge::gateway
