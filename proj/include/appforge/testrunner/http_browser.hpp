#pragma once

#include "appforge/testrunner/browser.hpp"
#include "appforge/testrunner/html.hpp"

#include <map>
#include <memory>

namespace httplib {
class Client;
}

namespace appforge::testrunner {

// Text-mode driver: fetches pages over HTTP, follows links and redirects,
// submits forms and keeps cookies. It runs no scripts and renders nothing,
// so screenshot() is always empty and script-driven pages look static.
class HttpBrowser : public BrowserSession {
 public:
  explicit HttpBrowser(const std::string& base_url);
  ~HttpBrowser() override;

  void navigate(const std::string& target) override;
  void click(int element_index) override;
  void type(int element_index, const std::string& text) override;
  void wait(std::chrono::milliseconds duration) override;
  PageSnapshot snapshot() override;
  std::optional<std::vector<std::uint8_t>> screenshot() override { return std::nullopt; }
  std::string driver_name() const override { return "http"; }

 private:
  void load(std::string method, std::string path, std::string body);
  HtmlNode* element(int index);
  void index_elements();
  void submit(HtmlNode& form, HtmlNode* submitter);

  std::string authority_;  // host:port
  std::unique_ptr<httplib::Client> client_;
  std::map<std::string, std::string> cookies_;
  std::string path_ = "/";
  int status_ = 0;
  std::string body_text_;  // non-HTML responses
  std::unique_ptr<HtmlNode> dom_;
  std::vector<HtmlNode*> elements_;
  std::string notice_;
};

// Resolves an href against the current path. Returns nullopt for targets
// off the application's origin or without a navigable URL.
std::optional<std::string> resolve_target(const std::string& current_path, const std::string& href,
                                          const std::string& authority);

std::string form_urlencode(const std::vector<std::pair<std::string, std::string>>& fields);

}  // namespace appforge::testrunner
