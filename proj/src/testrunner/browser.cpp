#include "appforge/testrunner/browser.hpp"

#include "appforge/testrunner/cdp_browser.hpp"
#include "appforge/testrunner/http_browser.hpp"
#include "appforge/util/text.hpp"

#include <fmt/format.h>

namespace appforge::testrunner {

std::string PageSnapshot::render(std::size_t text_budget) const {
  std::string out = fmt::format("Path: {}\nHTTP status: {}\nTitle: {}\n", path, status, title.empty() ? "(none)" : title);
  if (!notice.empty()) out += fmt::format("Result of last action: {}\n", notice);
  out += "\nVisible text:\n";
  out += text.empty() ? "(no visible text)" : util::truncate(text, text_budget);
  out += "\n\nInteractive elements:\n";
  if (elements.empty()) out += "(none)\n";
  for (const auto& e : elements) {
    out += fmt::format("@{} {} \"{}\"", e.index, e.role, e.label);
    if (e.role == "link" && !e.target.empty()) out += fmt::format(" -> {}", e.target);
    if (e.role != "link" && e.role != "button") out += fmt::format(" value=\"{}\"", e.value);
    out += '\n';
  }
  return out;
}

BrowserFactory make_browser_factory(const std::string& kind) {
  auto http = [](const std::string& base) -> std::unique_ptr<BrowserSession> {
    return std::make_unique<HttpBrowser>(base);
  };
  auto cdp = [](const std::string& base) -> std::unique_ptr<BrowserSession> { return CdpBrowser::launch(base); };
  if (kind == "http") return http;
  if (kind == "cdp") {
    if (!find_browser_binary()) throw UsageError("no headless browser found (set APPFORGE_BROWSER to its path)");
    return cdp;
  }
  if (kind == "auto") return find_browser_binary() ? BrowserFactory(cdp) : BrowserFactory(http);
  throw UsageError(fmt::format("unknown browser driver '{}' (auto, http or cdp)", kind));
}

}  // namespace appforge::testrunner
