#include "appforge/testrunner/cdp_browser.hpp"

#include "appforge/testrunner/ports.hpp"
#include "appforge/util/fs.hpp"
#include "appforge/util/hash.hpp"
#include "appforge/util/text.hpp"

#include <httplib.h>

#include <fmt/format.h>

#include <cstdlib>
#include <thread>

namespace appforge::testrunner {

std::optional<std::filesystem::path> find_browser_binary() {
  if (const char* env = std::getenv("APPFORGE_BROWSER"); env && *env) {
    std::filesystem::path p(env);
    if (std::filesystem::exists(p)) return p;
    return std::nullopt;
  }
  const char* path_env = std::getenv("PATH");
  if (!path_env) return std::nullopt;
  const auto dirs = util::split_lines(util::replace_all(path_env, ":", "\n"));
  for (const char* name : {"google-chrome", "google-chrome-stable", "chromium", "chromium-browser", "chrome",
                           "headless_shell"}) {
    for (const auto& dir : dirs) {
      if (dir.empty()) continue;
      std::filesystem::path candidate = std::filesystem::path(dir) / name;
      std::error_code ec;
      if (std::filesystem::is_regular_file(candidate, ec) && ::access(candidate.c_str(), X_OK) == 0) return candidate;
    }
  }
  return std::nullopt;
}

const std::string& snapshot_script() {
  static const std::string script = R"JS((() => {
  const visible = (el) => {
    const r = el.getBoundingClientRect();
    const s = getComputedStyle(el);
    return r.width > 0 && r.height > 0 && s.visibility !== 'hidden' && s.display !== 'none';
  };
  const clean = (s) => (s || '').replace(/\s+/g, ' ').trim().slice(0, 120);
  document.querySelectorAll('[data-appforge-index]').forEach((e) => e.removeAttribute('data-appforge-index'));
  const sel = 'a[href],button,input:not([type=hidden]),textarea,select,[role=button],[onclick]';
  const elements = [];
  let i = 0;
  for (const el of document.querySelectorAll(sel)) {
    if (!visible(el)) continue;
    i += 1;
    el.setAttribute('data-appforge-index', String(i));
    const tag = el.tagName.toLowerCase();
    const type = (el.getAttribute('type') || '').toLowerCase();
    let role = 'button';
    if (tag === 'a') role = 'link';
    else if (tag === 'select') role = 'select';
    else if (tag === 'textarea') role = 'textbox';
    else if (tag === 'input') {
      if (['submit', 'button', 'reset', 'image'].includes(type)) role = 'button';
      else if (type === 'checkbox' || type === 'radio') role = type;
      else role = 'textbox';
    }
    const field = tag === 'input' || tag === 'textarea' || tag === 'select';
    const labelText = el.labels && el.labels.length ? el.labels[0].innerText : '';
    let label = clean(el.getAttribute('aria-label'));
    if (!label) label = field ? clean(labelText || el.placeholder || el.name) : clean(el.innerText || el.value || el.title);
    let value = '';
    if (role === 'textbox') value = el.value;
    else if (role === 'checkbox' || role === 'radio') value = el.checked ? 'checked' : 'unchecked';
    else if (role === 'select') value = el.selectedIndex >= 0 ? el.options[el.selectedIndex].text : '';
    let target = '';
    if (tag === 'a') {
      const u = new URL(el.href, location.href);
      target = u.origin === location.origin ? u.pathname + u.search : u.href;
    }
    if (el.disabled) label += ' (disabled)';
    elements.push({ index: i, role, label, value, target });
  }
  const nav = performance.getEntriesByType('navigation')[0];
  return JSON.stringify({
    path: location.pathname + location.search,
    status: nav && nav.responseStatus ? nav.responseStatus : 200,
    title: document.title,
    text: document.body ? document.body.innerText : '',
    elements,
  });
})())JS";
  return script;
}

std::unique_ptr<CdpBrowser> CdpBrowser::launch(const std::string& base_url, CdpOptions options) {
  const auto binary = find_browser_binary();
  if (!binary) throw BrowserError(ErrorCategory::other, "no headless browser binary found");
  static PortAllocator debug_ports(9300, 600);
  auto lease = debug_ports.allocate();
  const int port = lease.port();
  const auto profile = util::make_temp_dir("appforge-browser-");
  ProcessSpec spec;
  spec.argv = {binary->string(),
               "--headless=new",
               fmt::format("--remote-debugging-port={}", port),
               "--remote-debugging-address=127.0.0.1",
               fmt::format("--user-data-dir={}", profile.string()),
               "--no-first-run",
               "--no-default-browser-check",
               "--no-sandbox",
               "--disable-gpu",
               "--disable-dev-shm-usage",
               "--hide-scrollbars",
               "--mute-audio",
               fmt::format("--window-size={},{}", options.viewport_width, options.viewport_height),
               "about:blank"};
  auto proc = std::make_unique<Process>(spec);

  httplib::Client http("127.0.0.1", port);
  http.set_connection_timeout(1, 0);
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(20);
  std::string ws_url;
  while (ws_url.empty()) {
    if (!proc->running())
      throw BrowserError(ErrorCategory::other, "headless browser exited during startup:\n" + proc->logs(2000));
    if (std::chrono::steady_clock::now() > deadline)
      throw BrowserError(ErrorCategory::timeout, "headless browser did not open its debugging port");
    if (auto res = http.Get("/json/list"); res && res->status == 200) {
      try {
        for (const auto& t : nlohmann::json::parse(res->body))
          if (t.value("type", "") == "page" && t.contains("webSocketDebuggerUrl")) {
            ws_url = t["webSocketDebuggerUrl"].get<std::string>();
            break;
          }
      } catch (const nlohmann::json::exception&) {
      }
    }
    if (ws_url.empty()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  return std::make_unique<CdpBrowser>(base_url, ws_url, options, std::move(proc), profile);
}

CdpBrowser::CdpBrowser(std::string base_url, const std::string& page_ws_url, CdpOptions options,
                       std::unique_ptr<Process> owned, std::filesystem::path profile_dir)
    : base_url_(std::move(base_url)), options_(options), browser_(std::move(owned)),
      profile_dir_(std::move(profile_dir)) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
  try {
    ws_.connect(page_ws_url);
  } catch (const WebSocketError& e) {
    throw BrowserError(ErrorCategory::other, e.what());
  }
  call("Page.enable");
  call("Emulation.setDeviceMetricsOverride", {{"width", options_.viewport_width},
                                               {"height", options_.viewport_height},
                                               {"deviceScaleFactor", 1},
                                               {"mobile", false}});
}

CdpBrowser::~CdpBrowser() {
  ws_.close();
  if (browser_) browser_->stop();
  if (!profile_dir_.empty()) {
    std::error_code ec;
    std::filesystem::remove_all(profile_dir_, ec);
  }
}

nlohmann::json CdpBrowser::call(const std::string& method, nlohmann::json params) {
  const int id = next_id_++;
  const nlohmann::json msg{{"id", id}, {"method", method}, {"params", std::move(params)}};
  try {
    ws_.send_text(msg.dump());
    const auto deadline = std::chrono::steady_clock::now() + options_.command_timeout;
    for (;;) {
      const auto left =
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) break;
      auto text = ws_.receive_text(left);
      if (!text) break;
      nlohmann::json reply;
      try {
        reply = nlohmann::json::parse(*text);
      } catch (const nlohmann::json::exception&) {
        continue;
      }
      // Events and replies to other commands are not interesting here.
      if (!reply.contains("id") || reply["id"] != id) continue;
      if (reply.contains("error"))
        throw BrowserError(ErrorCategory::other,
                           fmt::format("{} failed: {}", method, reply["error"].value("message", reply["error"].dump())));
      return reply.value("result", nlohmann::json::object());
    }
  } catch (const WebSocketError& e) {
    throw BrowserError(ErrorCategory::other, fmt::format("{}: {}", method, e.what()), true);
  }
  throw BrowserError(ErrorCategory::timeout, fmt::format("{} timed out", method), true);
}

nlohmann::json CdpBrowser::evaluate(const std::string& expression) {
  const auto result = call("Runtime.evaluate", {{"expression", expression}, {"returnByValue", true}, {"awaitPromise", true}});
  if (result.contains("exceptionDetails")) {
    const auto& d = result["exceptionDetails"];
    std::string what = d.value("text", "exception");
    if (d.contains("exception") && d["exception"].contains("description"))
      what = d["exception"]["description"].get<std::string>();
    throw BrowserError(ErrorCategory::other, "script error: " + what);
  }
  return result.contains("result") ? result["result"].value("value", nlohmann::json()) : nlohmann::json();
}

void CdpBrowser::wait_for_load() {
  const auto deadline = std::chrono::steady_clock::now() + options_.load_timeout;
  std::this_thread::sleep_for(std::chrono::milliseconds(150));
  for (;;) {
    try {
      if (evaluate("document.readyState") == "complete") break;
    } catch (const BrowserError&) {
      // The context is torn down while a navigation commits.
    }
    if (std::chrono::steady_clock::now() > deadline)
      throw BrowserError(ErrorCategory::timeout, "page did not finish loading", true);
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  // Let client-side rendering settle.
  std::this_thread::sleep_for(std::chrono::milliseconds(300));
}

void CdpBrowser::navigate(const std::string& target) {
  std::string url = target;
  if (url.empty()) url = "/";
  if (!url.starts_with("http://") && !url.starts_with("https://"))
    url = base_url_ + (url.front() == '/' ? "" : "/") + url;
  const auto result = call("Page.navigate", {{"url", url}});
  if (result.contains("errorText") && !result["errorText"].get<std::string>().empty())
    throw BrowserError(ErrorCategory::navigation_error,
                       fmt::format("navigation to {} failed: {}", target, result["errorText"].get<std::string>()), true);
  notice_.clear();
  wait_for_load();
}

void CdpBrowser::click(int element_index) {
  const auto outcome = evaluate(fmt::format(R"JS((() => {{
  const el = document.querySelector('[data-appforge-index="{}"]');
  if (!el) return 'missing';
  el.scrollIntoView({{block: 'center'}});
  el.click();
  return 'ok';
}})())JS",
                                            element_index));
  if (outcome != "ok")
    throw BrowserError(ErrorCategory::element_not_found, fmt::format("no element @{} on the page", element_index));
  notice_ = fmt::format("clicked @{}", element_index);
  wait_for_load();
}

void CdpBrowser::type(int element_index, const std::string& text) {
  const std::string literal = nlohmann::json(text).dump();
  const auto outcome = evaluate(fmt::format(R"JS((() => {{
  const el = document.querySelector('[data-appforge-index="{0}"]');
  if (!el) return 'missing';
  const text = {1};
  el.focus();
  if (el.tagName === 'SELECT') {{
    for (const o of el.options) {{
      if (o.value === text || o.text.trim() === text.trim()) {{
        el.value = o.value;
        el.dispatchEvent(new Event('change', {{bubbles: true}}));
        return 'ok';
      }}
    }}
    return 'nooption';
  }}
  if (el.tagName !== 'INPUT' && el.tagName !== 'TEXTAREA') return 'notfield';
  const proto = el.tagName === 'TEXTAREA' ? HTMLTextAreaElement.prototype : HTMLInputElement.prototype;
  Object.getOwnPropertyDescriptor(proto, 'value').set.call(el, text);
  el.dispatchEvent(new Event('input', {{bubbles: true}}));
  el.dispatchEvent(new Event('change', {{bubbles: true}}));
  return 'ok';
}})())JS",
                                            element_index, literal));
  if (outcome == "missing")
    throw BrowserError(ErrorCategory::element_not_found, fmt::format("no element @{} on the page", element_index));
  if (outcome == "nooption")
    throw BrowserError(ErrorCategory::element_not_found, fmt::format("@{} has no option \"{}\"", element_index, text));
  if (outcome != "ok")
    throw BrowserError(ErrorCategory::element_not_found, fmt::format("@{} is not a text field", element_index));
  notice_ = fmt::format("typed into @{}", element_index);
}

void CdpBrowser::wait(std::chrono::milliseconds duration) {
  std::this_thread::sleep_for(std::min(duration, std::chrono::milliseconds(5000)));
  notice_ = "waited";
}

PageSnapshot CdpBrowser::snapshot() {
  const auto value = evaluate(snapshot_script());
  if (!value.is_string()) throw BrowserError(ErrorCategory::other, "snapshot script returned no data");
  const auto j = nlohmann::json::parse(value.get<std::string>(), nullptr, false);
  if (j.is_discarded()) throw BrowserError(ErrorCategory::other, "snapshot script returned malformed data");
  PageSnapshot snap;
  snap.path = j.value("path", "/");
  snap.status = j.value("status", 200);
  snap.title = j.value("title", "");
  std::vector<std::string> lines;
  for (const auto& line : util::split_lines(j.value("text", ""))) {
    auto l = util::collapse_whitespace(line);
    if (!l.empty()) lines.push_back(std::move(l));
  }
  snap.text = util::join(lines, "\n");
  for (const auto& e : j.value("elements", nlohmann::json::array())) {
    snap.elements.push_back({e.value("index", 0), e.value("role", ""), e.value("label", ""), e.value("value", ""),
                             e.value("target", "")});
  }
  snap.notice = notice_;
  return snap;
}

std::optional<std::vector<std::uint8_t>> CdpBrowser::screenshot() {
  const auto result = call("Page.captureScreenshot", {{"format", "png"}});
  if (!result.contains("data")) return std::nullopt;
  return util::base64_decode(result["data"].get<std::string>());
}

}  // namespace appforge::testrunner
