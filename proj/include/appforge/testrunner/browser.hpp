#pragma once

#include "appforge/testrunner/types.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace appforge::testrunner {

// Something on the page a user can act on, addressed as @index.
struct InteractiveElement {
  int index = 0;
  std::string role;   // link, button, textbox, checkbox, radio, select
  std::string label;  // visible text, aria-label, placeholder or name
  std::string value;  // current value for form controls
  std::string target; // link destination, relative to the application
};

struct PageSnapshot {
  // Path (plus query) relative to the application root; never includes
  // the host or port so that prompts are stable across instances.
  std::string path;
  int status = 0;
  std::string title;
  std::string text;
  std::vector<InteractiveElement> elements;
  // Notes about the last action (e.g. "form submitted", "no effect").
  std::string notice;

  // Plain-text rendering used in driver prompts.
  std::string render(std::size_t text_budget = 6000) const;
};

class BrowserError : public Error {
 public:
  BrowserError(ErrorCategory category, const std::string& what, bool transient = false)
      : Error(what), category_(category), transient_(transient) {}
  ErrorCategory category() const { return category_; }
  bool transient() const { return transient_; }

 private:
  ErrorCategory category_;
  bool transient_;
};

// One browser tab pointed at one application instance. Not thread-safe;
// each worker owns its own session.
class BrowserSession {
 public:
  virtual ~BrowserSession() = default;

  // `target` is a path relative to the application root or an absolute URL
  // on the same origin.
  virtual void navigate(const std::string& target) = 0;
  virtual void click(int element_index) = 0;
  virtual void type(int element_index, const std::string& text) = 0;
  virtual void wait(std::chrono::milliseconds duration) = 0;
  virtual PageSnapshot snapshot() = 0;
  // PNG bytes, or nullopt for drivers without a renderer.
  virtual std::optional<std::vector<std::uint8_t>> screenshot() = 0;
  virtual std::string driver_name() const = 0;
};

// Creates a session for the application at base_url (e.g.
// "http://127.0.0.1:41000").
using BrowserFactory = std::function<std::unique_ptr<BrowserSession>(const std::string& base_url)>;

// "http" (text-mode), "cdp" (headless browser) or "auto" (cdp when a
// browser binary is found, http otherwise).
BrowserFactory make_browser_factory(const std::string& kind);

}  // namespace appforge::testrunner
