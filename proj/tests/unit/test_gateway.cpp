#include "appforge/gateway/gateway.hpp"
#include "appforge/util/fs.hpp"
#include "appforge/util/text.hpp"

#include "../support/fixtures.hpp"
#include "../support/scripted_provider.hpp"

#include <doctest.h>
#include <httplib.h>

#include <thread>

using namespace appforge;
using namespace appforge::gateway;
using appforge::testing::TempDir;

namespace {

PromptBundle text_bundle(const std::string& text, Grammar g = Grammar::free_text) {
  PromptBundle b;
  b.system = "sys";
  b.grammar = g;
  b.add_text(text);
  return b;
}

// Minimal chat-completions endpoint on a loopback port.
class FakeEndpoint {
 public:
  explicit FakeEndpoint(std::function<void(const httplib::Request&, httplib::Response&)> fn) {
    server_.Post("/v1/chat", [fn](const httplib::Request& q, httplib::Response& r) { fn(q, r); });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_SUITE("gateway") {

TEST_CASE("bundle validation") {
  PromptBundle empty;
  CHECK_THROWS_AS(empty.validate(), UsageError);
  auto b = text_bundle("hi");
  b.add_image({"bmp", {1, 2}});
  CHECK_THROWS_AS(b.validate(), UsageError);
  auto ok = text_bundle("hi");
  ok.add_image({"png", {1, 2}});
  CHECK_NOTHROW(ok.validate());
}

TEST_CASE("fingerprint is stable and sensitive to every part") {
  const auto a = text_bundle("hello");
  CHECK(a.fingerprint() == text_bundle("hello").fingerprint());
  CHECK(a.fingerprint() != text_bundle("hello!").fingerprint());
  CHECK(a.fingerprint() != text_bundle("hello", Grammar::json_array).fingerprint());
  auto img = text_bundle("hello");
  img.add_image({"png", {0}});
  CHECK(img.fingerprint() != a.fingerprint());
  CHECK(a.fingerprint().size() == 64);
}

TEST_CASE("user_text joins text turns") {
  auto b = text_bundle("one");
  b.add_image({"png", {0}});
  b.add_text("two");
  CHECK(b.user_text() == "one\n\ntwo");
}

TEST_CASE("grammar checks") {
  ParsedDocument d;
  CHECK_FALSE(check_grammar("[1,2]", Grammar::json_array, d));
  CHECK(d.json.size() == 2);
  CHECK_FALSE(check_grammar("```json\n[1]\n```", Grammar::json_array, d));
  CHECK_FALSE(check_grammar("Here you go: {\"a\": 1} hope it helps", Grammar::json_object, d));
  CHECK(d.json["a"] == 1);
  CHECK(check_grammar("{\"a\":1}", Grammar::json_array, d));
  CHECK(check_grammar("nope", Grammar::json_object, d));
  CHECK_FALSE(check_grammar("<Action type=\"file\" filePath=\"a\">x</Action>", Grammar::xml_actions, d));
  CHECK(check_grammar("<Action type=\"file\">x</Action>", Grammar::xml_actions, d));
  CHECK_FALSE(check_grammar("<includeFile path=\"a\"/>", Grammar::xml_selection, d));
  CHECK(check_grammar("I need a.js", Grammar::xml_selection, d));
  CHECK_FALSE(check_grammar("", Grammar::free_text, d));
}

TEST_CASE("re-ask appends the corrective instruction and succeeds") {
  auto log = std::make_shared<appforge::testing::ProviderLog>();
  auto gw = appforge::testing::sequence_gateway({"not json", "[1]"}, log);
  const auto doc = gw->complete_structured(text_bundle("give", Grammar::json_array), appforge::testing::test_provider_config());
  CHECK(doc.json == nlohmann::json::array({1}));
  CHECK(doc.attempts.size() == 2);
  REQUIRE(log->size() == 2);
  const auto second = log->at(1);
  REQUIRE(second.turns.size() == 2);
  CHECK(std::get<std::string>(second.turns[1]) == corrective_instruction(Grammar::json_array, "reply is not valid JSON"));
}

TEST_CASE("bounded re-asks end in MalformedAfterRetries") {
  auto cfg = appforge::testing::test_provider_config();
  cfg.max_reasks = 2;
  auto log = std::make_shared<appforge::testing::ProviderLog>();
  auto gw = appforge::testing::sequence_gateway({"no"}, log);
  try {
    gw->complete_structured(text_bundle("give", Grammar::json_object), cfg);
    FAIL("expected an exception");
  } catch (const MalformedAfterRetries& e) {
    CHECK(e.attempts().size() == 3);
    CHECK(e.grammar() == Grammar::json_object);
  }
  CHECK(log->size() == 3);
}

TEST_CASE("validator failures also trigger re-asks") {
  auto gw = appforge::testing::sequence_gateway({"[]", "[5]"});
  int seen = 0;
  const auto doc = gw->complete_structured(text_bundle("x", Grammar::json_array), appforge::testing::test_provider_config(),
                                           [&](const ParsedDocument& d) -> std::optional<std::string> {
                                             ++seen;
                                             if (d.json.empty()) return "empty";
                                             return std::nullopt;
                                           });
  CHECK(seen == 2);
  CHECK(doc.json[0] == 5);
}

TEST_CASE("record then replay returns identical replies with no provider") {
  TempDir dir;
  const auto cassette = dir / "c.ndjson";
  {
    auto counter = std::make_shared<int>(0);
    Gateway gw(std::make_unique<appforge::testing::ScriptedProvider>(
                   [counter](const PromptBundle&) { return "reply " + std::to_string((*counter)++); }),
               CassetteMode::record, cassette);
    CHECK(gw.complete(text_bundle("a"), appforge::testing::test_provider_config()).raw == "reply 0");
    CHECK(gw.complete(text_bundle("a"), appforge::testing::test_provider_config()).raw == "reply 1");
    CHECK(gw.complete(text_bundle("b"), appforge::testing::test_provider_config()).raw == "reply 2");
    CHECK(gw.provider_calls() == 3);
  }
  auto replay = Gateway::replay_only(cassette);
  const auto cfg = appforge::testing::test_provider_config();
  CHECK(replay->complete(text_bundle("b"), cfg).raw == "reply 2");
  CHECK(replay->complete(text_bundle("a"), cfg).raw == "reply 0");
  CHECK(replay->complete(text_bundle("a"), cfg).raw == "reply 1");
  // Past the last recording the last one repeats.
  CHECK(replay->complete(text_bundle("a"), cfg).raw == "reply 1");
  CHECK(replay->provider_calls() == 0);
  CHECK_THROWS_AS(replay->complete(text_bundle("zzz"), cfg), CassetteMiss);
}

TEST_CASE("malformed cassette lines are reported") {
  TempDir dir;
  util::write_file(dir / "bad.ndjson", "{\"fingerprint\": \"x\"\n");
  CHECK_THROWS_AS(Gateway::replay_only(dir / "bad.ndjson"), UsageError);
  CHECK_THROWS_AS(Gateway(nullptr, CassetteMode::passthrough), UsageError);
}

TEST_CASE("provider config json and environment") {
  const auto cfg = ProviderConfig::from_json(nlohmann::json::parse(
      R"({"provider": {"model": "m", "max_reasks": 1, "profile": "anthropic-messages", "timeout_ms": 500}})"));
  CHECK(cfg.model == "m");
  CHECK(cfg.max_reasks == 1);
  CHECK(cfg.timeout.count() == 500);
  CHECK_NOTHROW(cfg.validate());
  CHECK_FALSE(cfg.to_json().contains("api_key"));
  auto bad = cfg;
  bad.temperature = 0.7;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = cfg;
  bad.profile = "other";
  CHECK_THROWS_AS(bad.validate(), UsageError);
}

TEST_CASE("request bodies for both wire profiles") {
  auto b = text_bundle("look");
  b.add_image({"png", {0x89, 0x50}});
  ProviderConfig cfg;
  auto body = HttpChatProvider::build_request(b, cfg);
  CHECK(body["messages"][0]["role"] == "system");
  CHECK(body["messages"][1]["content"][1]["image_url"]["url"] == "data:image/png;base64,iVA=");
  CHECK(body["temperature"] == 0.0);
  cfg.profile = "anthropic-messages";
  body = HttpChatProvider::build_request(b, cfg);
  CHECK(body["system"] == "sys");
  CHECK(body["messages"][0]["content"][1]["source"]["data"] == "iVA=");

  const auto r = HttpChatProvider::parse_response(
      nlohmann::json::parse(R"({"content": [{"type": "text", "text": "a"}, {"type": "text", "text": "b"}],
                               "usage": {"input_tokens": 3, "output_tokens": 4}})"),
      cfg);
  CHECK(r.raw == "ab");
  CHECK(r.usage.output == 4);
  CHECK_THROWS_AS(HttpChatProvider::parse_response(nlohmann::json::object(), ProviderConfig{}), TransportError);
}

TEST_CASE("http provider against a loopback endpoint") {
  std::atomic<int> hits{0};
  FakeEndpoint ep([&](const httplib::Request& q, httplib::Response& r) {
    ++hits;
    const auto body = nlohmann::json::parse(q.body);
    CHECK(q.get_header_value("Authorization") == "Bearer secret");
    const std::string text = body["messages"][1]["content"][0]["text"];
    r.set_content(nlohmann::json{{"choices", {{{"message", {{"content", "echo: " + text}}}}}},
                                 {"usage", {{"prompt_tokens", 1}, {"completion_tokens", 2}}}}
                      .dump(),
                  "application/json");
  });
  ProviderConfig cfg;
  cfg.endpoint = ep.url();
  cfg.api_key = "secret";
  Gateway gw(std::make_unique<HttpChatProvider>(), CassetteMode::passthrough);
  const auto reply = gw.complete(text_bundle("ping"), cfg);
  CHECK(reply.raw == "echo: ping");
  CHECK(reply.usage.input == 1);
  CHECK(hits == 1);
}

TEST_CASE("transient failures are retried, then reported unreachable") {
  std::atomic<int> hits{0};
  FakeEndpoint ep([&](const httplib::Request&, httplib::Response& r) {
    r.status = ++hits < 2 ? 503 : 200;
    r.set_content(R"({"choices": [{"message": {"content": "ok"}}]})", "application/json");
  });
  ProviderConfig cfg;
  cfg.endpoint = ep.url();
  cfg.transport_retries = 2;
  Gateway gw(std::make_unique<HttpChatProvider>(), CassetteMode::passthrough);
  CHECK(gw.complete(text_bundle("x"), cfg).raw == "ok");
  CHECK(hits == 2);

  FakeEndpoint denied([&](const httplib::Request&, httplib::Response& r) { r.status = 401; });
  cfg.endpoint = denied.url();
  Gateway gw2(std::make_unique<HttpChatProvider>(), CassetteMode::passthrough);
  CHECK_THROWS_AS(gw2.complete(text_bundle("x"), cfg), ProviderUnreachable);
  CHECK(gw2.provider_calls() == 1);
}

}
