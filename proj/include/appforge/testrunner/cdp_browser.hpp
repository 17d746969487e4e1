#pragma once

#include "appforge/testrunner/browser.hpp"
#include "appforge/testrunner/process.hpp"
#include "appforge/testrunner/websocket.hpp"

#include <filesystem>
#include <memory>

#include <nlohmann/json.hpp>

namespace appforge::testrunner {

// $APPFORGE_BROWSER, else the first Chrome/Chromium binary on PATH.
std::optional<std::filesystem::path> find_browser_binary();

struct CdpOptions {
  int viewport_width = 1280;
  int viewport_height = 800;
  std::chrono::milliseconds command_timeout{20000};
  std::chrono::milliseconds load_timeout{15000};
};

// Drives a headless browser over the remote-debugging protocol. Element
// indices are stamped into the page as data attributes by snapshot(), so
// click/type address what the last snapshot reported.
class CdpBrowser : public BrowserSession {
 public:
  // Starts a headless browser process with its own profile directory.
  static std::unique_ptr<CdpBrowser> launch(const std::string& base_url, CdpOptions options = {});

  // Attaches to an existing page target. `owned` (may be null) is the
  // browser process to stop on destruction.
  CdpBrowser(std::string base_url, const std::string& page_ws_url, CdpOptions options = {},
             std::unique_ptr<Process> owned = nullptr, std::filesystem::path profile_dir = {});
  ~CdpBrowser() override;

  void navigate(const std::string& target) override;
  void click(int element_index) override;
  void type(int element_index, const std::string& text) override;
  void wait(std::chrono::milliseconds duration) override;
  PageSnapshot snapshot() override;
  std::optional<std::vector<std::uint8_t>> screenshot() override;
  std::string driver_name() const override { return "cdp"; }

  // One protocol command; returns its "result". Throws BrowserError on a
  // protocol error or timeout.
  nlohmann::json call(const std::string& method, nlohmann::json params = nlohmann::json::object());
  // Runtime.evaluate returning the value.
  nlohmann::json evaluate(const std::string& expression);

 private:
  void wait_for_load();

  std::string base_url_;
  CdpOptions options_;
  WebSocketClient ws_;
  int next_id_ = 1;
  std::string notice_;
  std::unique_ptr<Process> browser_;
  std::filesystem::path profile_dir_;
};

// Script that indexes interactive elements and returns the page as JSON
// text; exposed so tests can check the protocol exchange.
const std::string& snapshot_script();

}  // namespace appforge::testrunner
