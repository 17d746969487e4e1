#include "appforge/testrunner/cdp_browser.hpp"
#include "appforge/testrunner/feedback.hpp"
#include "appforge/testrunner/html.hpp"
#include "appforge/testrunner/http_browser.hpp"
#include "appforge/testrunner/runner.hpp"
#include "appforge/testrunner/websocket.hpp"
#include "appforge/util/text.hpp"

#include "../support/fixtures.hpp"
#include "../support/scripted_provider.hpp"

#include <doctest.h>
#include <httplib.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <csignal>
#include <thread>

using namespace appforge;
using namespace appforge::testrunner;
using nlohmann::json;

namespace {

DeploymentVerdict deployed() {
  DeploymentVerdict d;
  d.ok = true;
  return d;
}

class LocalSite {
 public:
  LocalSite() {
    server_.Get("/", [](const httplib::Request&, httplib::Response& r) {
      r.set_content(
          "<html><head><title>Shop</title></head><body><h1>Welcome</h1>"
          "<a href=\"/about\">About us</a> <a href=\"https://elsewhere.example/x\">Partner</a>"
          "<form action=\"/login\" method=\"post\"><input name=\"user\" placeholder=\"Name\" required>"
          "<input type=\"checkbox\" name=\"remember\" value=\"1\"><button type=\"submit\">Sign in</button></form>"
          "<p hidden>secret</p><script>var x = 1;</script></body></html>",
          "text/html");
    });
    server_.Get("/about", [](const httplib::Request&, httplib::Response& r) {
      r.set_content("<title>About</title><p>We sell things &amp; stuff.</p><a href=\"./\">Home</a>", "text/html");
    });
    server_.Post("/login", [](const httplib::Request& q, httplib::Response& r) {
      r.set_header("Set-Cookie", "session=" + q.get_param_value("user") + "; Path=/");
      r.set_redirect("/account", 303);
    });
    server_.Get("/account", [](const httplib::Request& q, httplib::Response& r) {
      r.set_content("<title>Account</title><p>Cookie: " + q.get_header_value("Cookie") + "</p>", "text/html");
    });
    server_.Get("/broken", [](const httplib::Request&, httplib::Response& r) {
      r.status = 500;
      r.set_content("<p>Internal error</p>", "text/html");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalSite() {
    server_.stop();
    thread_.join();
  }
  std::string base() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

// A minimal DevTools-style endpoint: one WebSocket connection, canned replies.
class FakeDevtools {
 public:
  FakeDevtools() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    REQUIRE(::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    ::listen(listen_fd_, 1);
    thread_ = std::thread([this] { serve(); });
  }
  ~FakeDevtools() {
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    thread_.join();
  }
  std::string url() const { return "ws://127.0.0.1:" + std::to_string(port_) + "/devtools/page/1"; }
  std::vector<std::string> methods() {
    std::lock_guard lock(mu_);
    return methods_;
  }

 private:
  void send(int fd, const std::string& text) {
    const auto frame = encode_ws_frame({true, WsOpcode::text, text}, std::nullopt);
    (void)!::write(fd, frame.data(), frame.size());
  }

  json answer(const json& msg) {
    const std::string method = msg["method"];
    if (method == "Bogus.method") return {{"id", msg["id"]}, {"error", {{"message", "method not found"}}}};
    json result = json::object();
    if (method == "Runtime.evaluate") {
      const std::string expr = msg["params"]["expression"];
      json value;
      if (expr == "document.readyState") value = "complete";
      else if (expr == snapshot_script())
        value = json{{"path", "/cart"},
                     {"title", "Cart"},
                     {"text", "Your cart\n\n  2   items "},
                     {"elements", json::array({{{"index", 1}, {"role", "button"}, {"label", "Checkout"}}})}}
                    .dump();
      else value = 42;
      result = {{"result", {{"type", "object"}, {"value", value}}}};
    } else if (method == "Page.navigate") {
      result = {{"frameId", "F1"}};
    } else if (method == "Page.captureScreenshot") {
      result = {{"data", "iVBORw=="}};
    }
    return {{"id", msg["id"]}, {"result", result}};
  }

  void serve() {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) return;
    std::string buf;
    char chunk[4096];
    while (buf.find("\r\n\r\n") == std::string::npos) {
      const auto n = ::read(fd, chunk, sizeof chunk);
      if (n <= 0) return (void)::close(fd);
      buf.append(chunk, static_cast<std::size_t>(n));
    }
    const auto head = buf.substr(0, buf.find("\r\n\r\n"));
    buf.erase(0, head.size() + 4);
    std::string key;
    for (const auto& line : util::split_lines(head)) {
      if (util::to_lower(line).starts_with("sec-websocket-key:")) key = util::trim(line.substr(18));
    }
    const auto reply = "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
                       "Sec-WebSocket-Accept: " + websocket_accept_key(key) + "\r\n\r\n";
    (void)!::write(fd, reply.data(), reply.size());
    for (;;) {
      WsFrame frame;
      std::size_t used;
      while ((used = decode_ws_frame(buf, frame)) == 0) {
        const auto n = ::read(fd, chunk, sizeof chunk);
        if (n <= 0) return (void)::close(fd);
        buf.append(chunk, static_cast<std::size_t>(n));
      }
      buf.erase(0, used);
      if (frame.opcode == WsOpcode::close) break;
      const auto msg = json::parse(frame.payload);
      {
        std::lock_guard lock(mu_);
        methods_.push_back(msg["method"]);
      }
      // An unrelated event and a stale reply precede the real answer.
      send(fd, json{{"method", "Page.loadEventFired"}, {"params", json::object()}}.dump());
      send(fd, json{{"id", -1}, {"result", json::object()}}.dump());
      send(fd, answer(msg).dump());
    }
    ::close(fd);
  }

  int listen_fd_ = -1;
  int port_ = 0;
  std::thread thread_;
  std::mutex mu_;
  std::vector<std::string> methods_;
};

// Scripted session: every page shows the same text; actions are recorded.
class RecordingSession : public BrowserSession {
 public:
  std::vector<std::string> log;
  int transient_failures = 0;
  void navigate(const std::string& t) override {
    if (transient_failures > 0) {
      --transient_failures;
      throw BrowserError(ErrorCategory::navigation_error, "connection reset", true);
    }
    log.push_back("navigate " + t);
  }
  void click(int i) override {
    if (i == 99) throw BrowserError(ErrorCategory::element_not_found, "no element @99");
    log.push_back("click " + std::to_string(i));
  }
  void type(int i, const std::string& text) override { log.push_back("type " + std::to_string(i) + " " + text); }
  void wait(std::chrono::milliseconds) override { log.push_back("wait"); }
  PageSnapshot snapshot() override { return {"/", 200, "Page", "hello", {}, ""}; }
  std::optional<std::vector<std::uint8_t>> screenshot() override { return std::nullopt; }
  std::string driver_name() const override { return "recording"; }
};

testgen::SoapOperaTestCase two_step_test() {
  testgen::SoapOperaTestCase t;
  t.id = "T-R1";
  t.requirement_id = "R1";
  t.persona = {"Dana", "buy a lamp"};
  t.steps = {{1, "Open the shop", "The catalogue is listed"}, {2, "Add a lamp", "The cart shows 1 item"}};
  return t;
}

std::unique_ptr<AppInstance> idle_instance(PortAllocator& ports, AppState state = AppState::ready) {
  auto proc = std::make_unique<Process>(shell_spec("sleep 30", std::filesystem::temp_directory_path()));
  return std::make_unique<AppInstance>(std::move(proc), ports.allocate(), state,
                                       state == AppState::ready ? "" : "launch failed");
}

TestReport report(const std::string& id, Verdict v) {
  TestReport r;
  r.test_id = id;
  r.verdict = v;
  return r;
}

}  // namespace

TEST_SUITE("testrunner") {

TEST_CASE("enum strings round-trip") {
  for (auto v : {Verdict::yes, Verdict::no, Verdict::partial}) CHECK(verdict_from_string(to_string(v)) == v);
  CHECK(verdict_from_string("partial") == Verdict::partial);
  CHECK_THROWS(verdict_from_string("maybe"));
  for (auto s : {FailureSignal::blank_screen, FailureSignal::crash_overlay, FailureSignal::probe_timeout,
                 FailureSignal::process_exit})
    CHECK(failure_signal_from_string(to_string(s)) == s);
  CHECK(error_category_from_string("element-not-found") == ErrorCategory::element_not_found);
  CHECK(error_category_from_string("Element_Not_Found") == ErrorCategory::element_not_found);
  CHECK(error_category_from_string("cosmic rays") == ErrorCategory::other);
}

TEST_CASE("feedback bundle survives JSON") {
  auto r = report("T-R2", Verdict::partial);
  r.failed_step = 2;
  r.expected = "cart shows 1 item";
  r.actual = "cart is empty";
  r.category = ErrorCategory::assertion_mismatch;
  r.recommendations = {"update the counter"};
  r.traces = {{1, {"navigate /"}, "ok", std::nullopt, StepVerdict::met},
              {2, {"click @3"}, "empty", std::string("T-R2-step2.png"), StepVerdict::unmet}};
  DeploymentVerdict d;
  d.ok = true;
  d.discrepancy_notes = "header colour differs";
  const auto b = build_feedback({report("T-R1", Verdict::yes), r}, d, 3);
  const auto j = to_json(b);
  CHECK(j["schema"] == kFeedbackSchema);
  const auto back = feedback_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(back.counts.yes == 1);
  CHECK(back.counts.partial == 1);
  CHECK(back.reports[1].traces[1].screenshot_ref == "T-R2-step2.png");

  auto bad = j;
  bad["schema"] = "appforge.feedback/99";
  CHECK_THROWS(feedback_from_json(bad));
}

TEST_CASE("feedback save and load") {
  appforge::testing::TempDir dir;
  const auto b = build_feedback({report("T-R1", Verdict::no)}, deployed(), 1);
  save_feedback(dir / "fb.json", b);
  CHECK(to_json(load_feedback(dir / "fb.json")) == to_json(b));
}

TEST_CASE("digest has one entry per non-passing test") {
  auto failing = report("T-R3", Verdict::no);
  failing.failed_step = 1;
  failing.traces = {{1, {"navigate /", "click @2"}, "nothing", std::nullopt, StepVerdict::unmet}};
  failing.expected = "a list";
  failing.actual = "nothing";
  failing.category = ErrorCategory::element_not_found;
  const auto b = build_feedback({report("T-R1", Verdict::yes), report("T-R2", Verdict::partial), failing},
                                deployed(), 2);
  const auto& d = b.digest;
  CHECK(d.find("- T-R1 (") == std::string::npos);
  CHECK(d.find("- T-R2 (PARTIAL)") != std::string::npos);
  CHECK(d.find("- T-R3 (NO): failed at step 1 after [navigate /; click @2]") != std::string::npos);
  CHECK(d.find("Category: element-not-found.") != std::string::npos);
  CHECK(d.find("1 passed, 1 partially passed, 1 failed, out of 3") != std::string::npos);
}

TEST_CASE("digest for a failed deployment says nothing ran") {
  const auto b = build_feedback({}, failed_deployment(FailureSignal::process_exit, "fatal: cannot bind"), 0);
  CHECK_FALSE(b.deployment.ok);
  CHECK(b.digest.find("FAILED (process-exit)") != std::string::npos);
  CHECK(b.digest.find("fatal: cannot bind") != std::string::npos);
  CHECK(b.counts.total() == 0);
}

TEST_CASE("all-pass digest") {
  const auto b = build_feedback({report("T-R1", Verdict::yes)}, deployed(), 0);
  CHECK(b.digest.find("All test cases passed.") != std::string::npos);
}

TEST_CASE("verdict from step traces") {
  using S = StepVerdict;
  auto traces = [](std::vector<S> vs) {
    std::vector<StepTrace> out;
    for (std::size_t i = 0; i < vs.size(); ++i) out.push_back({int(i) + 1, {}, "", std::nullopt, vs[i]});
    return out;
  };
  CHECK(verdict_from_traces(traces({S::met, S::met})) == Verdict::yes);
  CHECK(verdict_from_traces(traces({S::met, S::unmet, S::skipped})) == Verdict::partial);
  CHECK(verdict_from_traces(traces({S::unmet, S::skipped})) == Verdict::no);
  CHECK(verdict_from_traces(traces({S::met, S::skipped})) == Verdict::partial);
  CHECK(verdict_from_traces({}) == Verdict::no);
}

TEST_CASE("driver decisions are parsed strictly") {
  auto ok = [](const json& j, bool judge_only = false) {
    auto r = parse_driver_decision(j, judge_only);
    REQUIRE(std::holds_alternative<DriverDecision>(r));
    return std::get<DriverDecision>(r);
  };
  auto bad = [](const json& j, bool judge_only = false) {
    return std::holds_alternative<std::string>(parse_driver_decision(j, judge_only));
  };
  CHECK(ok({{"action", "navigate"}, {"path", "/cart"}}).path == "/cart");
  CHECK(ok({{"action", "click"}, {"element", "@4"}}).element == 4);
  CHECK(ok({{"action", "type"}, {"element", 2}, {"text", "bob"}}).text == "bob");
  CHECK(ok({{"action", "wait"}, {"ms", 99999}}).ms == 5000);
  const auto j = ok({{"action", "JUDGE"}, {"verdict", "Met"}, {"observed", "fine"}});
  CHECK(j.kind == DriverDecision::Kind::judge);
  CHECK(j.met);
  CHECK(bad(json::array()));
  CHECK(bad({{"action", "click"}, {"element", "first"}}));
  CHECK(bad({{"action", "type"}, {"element", 1}}));
  CHECK(bad({{"action", "judge"}, {"verdict", "probably"}}));
  CHECK(bad({{"action", "scroll"}}));
  CHECK(bad({{"action", "click"}, {"element", 1}}, true));
}

TEST_CASE("html parser tolerates sloppy markup") {
  auto doc = parse_html("<div class=a><p>One &amp; two<p>Three</div></span><ul><li>x<li>y");
  std::vector<std::string> tags;
  for_each_element(*doc, [&](HtmlNode& n) { tags.push_back(n.tag); });
  CHECK(doc->tag == "#document");
  CHECK(tags.front() == "div");
  CHECK(std::count(tags.begin(), tags.end(), "p") == 2);
  CHECK(std::count(tags.begin(), tags.end(), "li") == 2);
  CHECK(doc->inner_text().find("One & two") != std::string::npos);
  CHECK(decode_html_entities("&lt;b&gt; &#65;&#x42; &nbsp;&unknown;") == "<b> AB \xC2\xA0&unknown;");
}

TEST_CASE("link targets stay on the application's origin") {
  const std::string auth = "127.0.0.1:4000";
  CHECK(resolve_target("/a/b", "c", auth) == "/a/c");
  CHECK(resolve_target("/a/b", "../x?y=1", auth) == "/x?y=1");
  CHECK(resolve_target("/a/b?q", "?page=2", auth) == "/a/b?page=2");
  CHECK(resolve_target("/a", "http://localhost:4000/z", auth) == "/z");
  CHECK(resolve_target("/a", "http://example.com/z", auth) == std::nullopt);
  CHECK(resolve_target("/a", "javascript:void(0)", auth) == std::nullopt);
  CHECK(resolve_target("/a", "#top", auth) == std::nullopt);
  CHECK(form_urlencode({{"q", "a b&c"}, {"n", "1"}}) == "q=a+b%26c&n=1");
}

TEST_CASE("text-mode driver browses, submits forms and keeps cookies") {
  LocalSite site;
  HttpBrowser b(site.base());
  b.navigate("/");
  auto s = b.snapshot();
  CHECK(s.path == "/");
  CHECK(s.status == 200);
  CHECK(s.title == "Shop");
  CHECK(s.text.find("Welcome") != std::string::npos);
  CHECK(s.text.find("secret") == std::string::npos);
  CHECK(s.text.find("var x") == std::string::npos);
  auto find = [&](const std::string& label) {
    for (const auto& e : s.elements)
      if (e.label == label) return e.index;
    FAIL("no element " << label);
    return 0;
  };
  CHECK(s.render().find("link \"About us\" -> /about") != std::string::npos);

  b.click(find("Partner"));
  CHECK(b.snapshot().path == "/");
  CHECK(b.snapshot().notice.find("nothing happened") != std::string::npos);

  b.click(find("Sign in"));
  CHECK(b.snapshot().notice.find("required field") != std::string::npos);

  b.type(find("Name"), "ana");
  b.click(find("Sign in"));
  s = b.snapshot();
  CHECK(s.path == "/account");
  CHECK(s.text.find("session=ana") != std::string::npos);

  b.navigate("/about");
  s = b.snapshot();
  CHECK(s.text.find("things & stuff") != std::string::npos);
  b.click(s.elements.at(0).index);
  CHECK(b.snapshot().title == "Shop");

  b.navigate("/broken");
  CHECK(b.snapshot().status == 500);
  CHECK_THROWS_AS(b.click(77), BrowserError);
  CHECK_FALSE(b.screenshot().has_value());
}

TEST_CASE("websocket handshake key and frame codec") {
  CHECK(websocket_accept_key("dGhlIHNhbXBsZSBub25jZQ==") == "s3pPLMBiTxaQ9kYGzzhZRbK+xOo=");
  for (std::size_t size : {0u, 5u, 125u, 126u, 65535u, 65536u}) {
    const WsFrame f{true, WsOpcode::binary, std::string(size, 'z')};
    for (auto mask : {std::optional<std::array<std::uint8_t, 4>>{}, std::optional(std::array<std::uint8_t, 4>{1, 2, 3, 4})}) {
      const auto wire = encode_ws_frame(f, mask);
      WsFrame out;
      CHECK(decode_ws_frame(std::string_view(wire).substr(0, wire.size() - 1), out) == 0);
      REQUIRE(decode_ws_frame(wire, out) == wire.size());
      CHECK(out.payload == f.payload);
      CHECK(out.opcode == WsOpcode::binary);
    }
  }
  // A short unmasked text frame, byte for byte.
  CHECK(encode_ws_frame({true, WsOpcode::text, "Hello"}, std::nullopt) == std::string("\x81\x05Hello"));
}

TEST_CASE("devtools client ignores events and stale replies") {
  FakeDevtools devtools;
  CdpBrowser b("http://127.0.0.1:9/", devtools.url());
  CHECK(b.evaluate("1 + 1") == 42);
  CHECK_THROWS_AS(b.call("Bogus.method"), BrowserError);
  b.navigate("/cart");
  const auto s = b.snapshot();
  CHECK(s.path == "/cart");
  CHECK(s.text == "Your cart\n2 items");
  REQUIRE(s.elements.size() == 1);
  CHECK(s.elements[0].label == "Checkout");
  const auto shot = b.screenshot();
  REQUIRE(shot.has_value());
  CHECK(shot->size() == 4);
  const auto m = devtools.methods();
  REQUIRE(m.size() >= 4);
  CHECK(m[0] == "Page.enable");
  CHECK(m[1] == "Emulation.setDeviceMetricsOverride");
  CHECK(std::find(m.begin(), m.end(), "Page.navigate") != m.end());
}

TEST_CASE("port allocator hands out distinct ports and reuses released ones") {
  PortAllocator ports(43100, 50);
  auto a = ports.allocate();
  auto b = ports.allocate();
  CHECK(a.port() != b.port());
  CHECK(ports.live() == 2);
  const int first = a.port();
  a.release();
  CHECK_FALSE(ports.reserved(first));
  auto c = ports.allocate(first);
  CHECK(c.port() == first);

  // A port bound by someone else is skipped.
  httplib::Server squatter;
  const int taken = squatter.bind_to_any_port("127.0.0.1");
  CHECK_FALSE(port_is_free(taken));
  PortAllocator near(taken, 20);
  auto d = near.allocate();
  CHECK(d.port() != taken);

  PortAllocator tiny(43300, 1);
  auto only = tiny.allocate();
  CHECK_THROWS_AS(tiny.allocate(), PortsExhausted);
}

TEST_CASE("process captures output and exit status") {
  Process p(shell_spec("echo out; echo err >&2; exit 7", std::filesystem::temp_directory_path()));
  CHECK(p.wait_for(std::chrono::seconds(10)) == 7);
  p.stop();
  CHECK(util::trim(p.stdout_text()) == "out");
  CHECK(util::trim(p.stderr_text()) == "err");
  CHECK(p.logs().find("err") != std::string::npos);
}

TEST_CASE("stopping a process kills its whole group") {
  auto p = std::make_unique<Process>(shell_spec("sleep 60 & sleep 60 & wait", std::filesystem::temp_directory_path()));
  std::this_thread::sleep_for(std::chrono::milliseconds(200));
  CHECK(appforge::testing::live_descendants().size() >= 2);
  p->stop(std::chrono::milliseconds(500));
  CHECK(p->exit_status().has_value());
  p.reset();
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  CHECK(appforge::testing::live_descendants().empty());
}

TEST_CASE("run_test drives steps until a verdict") {
  auto log = std::make_shared<appforge::testing::ProviderLog>();
  auto gw = appforge::testing::sequence_gateway(
      {R"({"action":"click","element":1})", R"({"action":"judge","verdict":"met","observed":"listed"})",
       R"({"action":"type","element":2,"text":"lamp"})",
       R"({"action":"judge","verdict":"unmet","observed":"cart empty","category":"assertion_mismatch"})"},
      log);
  TestRunner runner(*gw, appforge::testing::test_provider_config());
  auto inst = idle_instance(runner.ports());
  RecordingSession session;
  const auto r = runner.run_test(*inst, session, two_step_test());
  CHECK(r.verdict == Verdict::partial);
  CHECK(r.failed_step == 2);
  CHECK(r.actual == "cart empty");
  CHECK(r.category == ErrorCategory::assertion_mismatch);
  CHECK(r.traces[0].actions == std::vector<std::string>{"click @1"});
  CHECK(r.traces[1].actions == std::vector<std::string>{"type @2 \"lamp\""});
  CHECK(session.log == std::vector<std::string>{"navigate /", "click 1", "type 2 lamp"});
  CHECK(runner.test_executions() == 1);
  CHECK(log->at(0).user_text().find("Dana") != std::string::npos);
}

TEST_CASE("the step budget forces a judgment") {
  auto log = std::make_shared<appforge::testing::ProviderLog>();
  auto gw = appforge::testing::scripted_gateway(
      [](const gateway::PromptBundle& b) -> std::string {
        if (b.system.find("carry out one test step") == std::string::npos)
          return R"({"action":"judge","verdict":"unmet","observed":"ran out"})";
        return R"({"action":"wait","ms":1})";
      },
      log);
  RunnerOptions opt;
  opt.step_budget = 3;
  TestRunner runner(*gw, appforge::testing::test_provider_config(), {}, opt);
  auto inst = idle_instance(runner.ports());
  RecordingSession session;
  const auto r = runner.run_test(*inst, session, two_step_test());
  CHECK(r.verdict == Verdict::no);
  CHECK(r.traces[0].actions.size() <= 2);
  CHECK(r.traces[1].verdict == StepVerdict::skipped);
}

TEST_CASE("transient browser failures are retried, permanent ones recorded") {
  auto gw = appforge::testing::sequence_gateway(
      {R"({"action":"click","element":99})", R"({"action":"judge","verdict":"unmet","observed":"gone"})"});
  TestRunner runner(*gw, appforge::testing::test_provider_config());
  auto inst = idle_instance(runner.ports());
  RecordingSession session;
  session.transient_failures = 2;
  const auto r = runner.run_test(*inst, session, two_step_test());
  CHECK(session.log.front() == "navigate /");
  CHECK(r.verdict == Verdict::no);
  CHECK(r.technical_info.find("no element @99") != std::string::npos);
}

TEST_CASE("tests against an instance that never started make no model calls") {
  auto log = std::make_shared<appforge::testing::ProviderLog>();
  auto gw = appforge::testing::sequence_gateway({"{}"}, log);
  TestRunner runner(*gw, appforge::testing::test_provider_config());
  auto inst = idle_instance(runner.ports(), AppState::failed);
  RecordingSession session;
  const auto r = runner.run_test(*inst, session, two_step_test());
  CHECK(r.verdict == Verdict::no);
  CHECK(r.category == ErrorCategory::launch_failure);
  CHECK(log->size() == 0);
}

TEST_CASE("runner options are validated") {
  auto gw = appforge::testing::sequence_gateway({"{}"});
  RunnerOptions opt;
  opt.parallelism = 0;
  CHECK_THROWS_AS(TestRunner(*gw, appforge::testing::test_provider_config(), {}, opt), UsageError);
  opt.parallelism = 1;
  opt.step_budget = 0;
  CHECK_THROWS_AS(TestRunner(*gw, appforge::testing::test_provider_config(), {}, opt), UsageError);
}

}  // TEST_SUITE
