#include "appforge/testrunner/http_browser.hpp"

#include "appforge/util/text.hpp"

#include <httplib.h>

#include <fmt/format.h>

#include <thread>

namespace appforge::testrunner {

namespace {

std::string strip_query(const std::string& path) { return path.substr(0, path.find('?')); }

std::string normalize_dots(const std::string& path) {
  const auto q = path.find('?');
  const std::string base = path.substr(0, q);
  const std::string query = q == std::string::npos ? "" : path.substr(q);
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i <= base.size()) {
    const auto j = std::min(base.find('/', i), base.size());
    const auto seg = base.substr(i, j - i);
    if (seg == "..") {
      if (!out.empty()) out.pop_back();
    } else if (!seg.empty() && seg != ".") {
      out.push_back(seg);
    }
    i = j + 1;
  }
  std::string joined = "/" + util::join(out, "/");
  const bool trailing = !base.empty() && (base.back() == '/' || base.ends_with("/.") || base.ends_with("/.."));
  if (trailing && joined.size() > 1) joined += "/";
  return joined + query;
}

bool is_hidden(const HtmlNode& node) {
  for (const HtmlNode* n = &node; n; n = n->parent) {
    if (n->has_attr("hidden")) return true;
    if (const auto* style = n->attr("style")) {
      std::string s;
      for (char c : *style)
        if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(static_cast<char>(std::tolower(c)));
      if (s.find("display:none") != std::string::npos || s.find("visibility:hidden") != std::string::npos)
        return true;
    }
  }
  return false;
}

std::string input_type(const HtmlNode& n) {
  const auto* t = n.attr("type");
  return t ? util::to_lower(util::trim(*t)) : "text";
}

std::string role_of(const HtmlNode& n) {
  if (n.tag == "a") return "link";
  if (n.tag == "button") return "button";
  if (n.tag == "textarea") return "textbox";
  if (n.tag == "select") return "select";
  const auto type = input_type(n);
  if (type == "submit" || type == "button" || type == "reset" || type == "image") return "button";
  if (type == "checkbox") return "checkbox";
  if (type == "radio") return "radio";
  return "textbox";
}

const char* kBlockTags[] = {"address", "article", "aside", "blockquote", "br",   "dd",      "div",   "dl",
                            "dt",      "fieldset", "figcaption", "figure", "footer", "form", "h1",   "h2",
                            "h3",      "h4",      "h5",    "h6",          "header", "hr",   "li",    "main",
                            "nav",     "ol",      "p",     "pre",         "section", "table", "tr",  "ul",
                            "label",   "button",  "option"};

bool is_block(const std::string& tag) {
  for (const char* t : kBlockTags)
    if (tag == t) return true;
  return false;
}

void visible_text(const HtmlNode& node, std::string& out) {
  if (node.is_text()) {
    out += node.text;
    return;
  }
  if (node.tag == "script" || node.tag == "style" || node.tag == "template" || node.tag == "head" ||
      node.tag == "noscript" || node.tag == "select" || node.tag == "textarea")
    return;
  if (node.has_attr("hidden")) return;
  if (node.tag == "input" && input_type(node) == "hidden") return;
  if (is_hidden(node)) return;
  const bool block = is_block(node.tag);
  if (block) out += '\n';
  if (node.tag == "img") {
    if (const auto* alt = node.attr("alt"); alt && !alt->empty()) out += "[image: " + *alt + "]";
  }
  for (const auto& c : node.children) visible_text(*c, out);
  if (block) out += '\n';
  else if (node.tag == "td" || node.tag == "th") out += " | ";
}

std::string textarea_value(const HtmlNode& n) {
  std::string v;
  for (const auto& c : n.children)
    if (c->is_text()) v += c->text;
  return v;
}

void set_textarea_value(HtmlNode& n, const std::string& value) {
  n.children.clear();
  auto t = std::make_unique<HtmlNode>();
  t->text = value;
  t->parent = &n;
  n.children.push_back(std::move(t));
}

std::vector<HtmlNode*> options_of(HtmlNode& select) {
  std::vector<HtmlNode*> out;
  for_each_element(select, [&](HtmlNode& n) {
    if (n.tag == "option") out.push_back(&n);
  });
  return out;
}

HtmlNode* selected_option(HtmlNode& select) {
  auto opts = options_of(select);
  for (auto* o : opts)
    if (o->has_attr("selected")) return o;
  return opts.empty() ? nullptr : opts.front();
}

std::string option_value(const HtmlNode& o) {
  if (const auto* v = o.attr("value")) return *v;
  return o.inner_text();
}

// Text of <label for=id> or a wrapping <label>.
std::string label_for(HtmlNode& root, const HtmlNode& control) {
  if (auto* wrap = control.ancestor("label")) return wrap->inner_text();
  const auto* id = control.attr("id");
  if (!id || id->empty()) return {};
  std::string found;
  for_each_element(root, [&](HtmlNode& n) {
    if (found.empty() && n.tag == "label" && n.attr("for") && *n.attr("for") == *id) found = n.inner_text();
  });
  return found;
}

std::string first_nonempty(std::initializer_list<std::string> values) {
  for (const auto& v : values)
    if (!util::trim(v).empty()) return util::collapse_whitespace(v);
  return {};
}

std::string attr_or(const HtmlNode& n, const char* key) {
  const auto* v = n.attr(key);
  return v ? *v : std::string();
}

}  // namespace

std::optional<std::string> resolve_target(const std::string& current_path, const std::string& href_in,
                                          const std::string& authority) {
  std::string href = util::trim(href_in);
  href = href.substr(0, href.find('#'));
  if (href.empty()) return href_in.find('#') != std::string::npos ? std::nullopt : std::optional(current_path);
  const auto lower = util::to_lower(href);
  if (lower.starts_with("javascript:") || lower.starts_with("mailto:") || lower.starts_with("tel:") ||
      lower.starts_with("data:"))
    return std::nullopt;
  if (lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("//")) {
    const auto start = href.find("//") + 2;
    const auto slash = href.find_first_of("/?", start);
    const std::string auth = util::to_lower(href.substr(start, slash == std::string::npos ? std::string::npos : slash - start));
    const auto colon = authority.find(':');
    const std::string port = colon == std::string::npos ? "" : authority.substr(colon);
    if (auth != util::to_lower(authority) && auth != "localhost" + port && auth != "127.0.0.1" + port)
      return std::nullopt;
    if (slash == std::string::npos) return std::string("/");
    std::string rest = href.substr(slash);
    if (rest.front() == '?') rest = "/" + rest;
    return normalize_dots(rest);
  }
  if (href.front() == '/') return normalize_dots(href);
  if (href.front() == '?') return strip_query(current_path) + href;
  const auto dir = strip_query(current_path);
  return normalize_dots(dir.substr(0, dir.rfind('/') + 1) + href);
}

std::string form_urlencode(const std::vector<std::pair<std::string, std::string>>& fields) {
  auto enc = [](const std::string& s) {
    std::string out;
    for (unsigned char c : s) {
      if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') out.push_back(static_cast<char>(c));
      else if (c == ' ') out.push_back('+');
      else out += fmt::format("%{:02X}", c);
    }
    return out;
  };
  std::string out;
  for (const auto& [k, v] : fields) {
    if (!out.empty()) out.push_back('&');
    out += enc(k) + "=" + enc(v);
  }
  return out;
}

HttpBrowser::HttpBrowser(const std::string& base_url) {
  std::string rest = base_url;
  if (rest.starts_with("http://")) rest = rest.substr(7);
  else if (rest.starts_with("https://")) throw UsageError("text-mode driver supports http:// only");
  authority_ = rest.substr(0, rest.find('/'));
  const auto colon = authority_.rfind(':');
  const std::string host = authority_.substr(0, colon);
  const int port = colon == std::string::npos ? 80 : std::stoi(authority_.substr(colon + 1));
  client_ = std::make_unique<httplib::Client>(host, port);
  client_->set_connection_timeout(5, 0);
  client_->set_read_timeout(20, 0);
  client_->set_keep_alive(false);
}

HttpBrowser::~HttpBrowser() = default;

void HttpBrowser::load(std::string method, std::string path, std::string body) {
  for (int hop = 0; hop < 8; ++hop) {
    httplib::Headers headers{{"User-Agent", "appforge-http-driver"}, {"Accept", "text/html,*/*"}};
    if (!cookies_.empty()) {
      std::vector<std::string> parts;
      for (const auto& [k, v] : cookies_) parts.push_back(k + "=" + v);
      headers.emplace("Cookie", util::join(parts, "; "));
    }
    httplib::Result res = method == "POST"
                              ? client_->Post(path, headers, body, "application/x-www-form-urlencoded")
                              : client_->Get(path, headers);
    if (!res) {
      throw BrowserError(ErrorCategory::navigation_error,
                         fmt::format("request for {} failed: {}", path, httplib::to_string(res.error())), true);
    }
    for (auto [it, end] = res->headers.equal_range("Set-Cookie"); it != end; ++it) {
      const auto& line = it->second;
      const auto first = line.substr(0, line.find(';'));
      const auto eq = first.find('=');
      if (eq == std::string::npos) continue;
      const auto name = util::trim(first.substr(0, eq));
      const auto value = util::trim(first.substr(eq + 1));
      const auto lower = util::to_lower(line);
      if (lower.find("max-age=0") != std::string::npos || lower.find("expires=thu, 01 jan 1970") != std::string::npos)
        cookies_.erase(name);
      else
        cookies_[name] = value;
    }
    const int s = res->status;
    if ((s == 301 || s == 302 || s == 303 || s == 307 || s == 308) && res->has_header("Location")) {
      auto next = resolve_target(path, res->get_header_value("Location"), authority_);
      if (!next) throw BrowserError(ErrorCategory::navigation_error, "redirect leaves the application");
      if (s == 303 || ((s == 301 || s == 302) && method == "POST")) {
        method = "GET";
        body.clear();
      }
      path = *next;
      continue;
    }
    path_ = path;
    status_ = s;
    const auto ctype = util::to_lower(res->get_header_value("Content-Type"));
    const auto head = util::trim(res->body.substr(0, 64));
    if (ctype.find("html") != std::string::npos || (ctype.empty() && head.starts_with("<"))) {
      dom_ = parse_html(res->body);
      body_text_.clear();
    } else {
      dom_.reset();
      body_text_ = res->body;
    }
    index_elements();
    return;
  }
  throw BrowserError(ErrorCategory::navigation_error, "too many redirects");
}

void HttpBrowser::index_elements() {
  elements_.clear();
  if (!dom_) return;
  for_each_element(*dom_, [&](HtmlNode& n) {
    const bool candidate = (n.tag == "a" && n.has_attr("href")) || n.tag == "button" || n.tag == "textarea" ||
                           n.tag == "select" || (n.tag == "input" && input_type(n) != "hidden");
    if (candidate && !is_hidden(n)) elements_.push_back(&n);
  });
}

HtmlNode* HttpBrowser::element(int index) {
  if (index < 1 || static_cast<std::size_t>(index) > elements_.size())
    throw BrowserError(ErrorCategory::element_not_found, fmt::format("no element @{} on {}", index, path_));
  return elements_[static_cast<std::size_t>(index - 1)];
}

void HttpBrowser::navigate(const std::string& target) {
  const auto path = resolve_target(path_, target.empty() ? "/" : target, authority_);
  if (!path) throw BrowserError(ErrorCategory::navigation_error, fmt::format("cannot navigate to '{}'", target));
  notice_.clear();
  load("GET", *path, "");
}

void HttpBrowser::click(int element_index) {
  HtmlNode& el = *element(element_index);
  const auto role = role_of(el);
  if (el.has_attr("disabled")) {
    notice_ = fmt::format("@{} is disabled; nothing happened", element_index);
    return;
  }
  if (role == "link") {
    const auto target = resolve_target(path_, attr_or(el, "href"), authority_);
    if (!target) {
      notice_ = fmt::format("@{} does not lead to a page of this application; nothing happened", element_index);
      return;
    }
    notice_.clear();
    load("GET", *target, "");
    return;
  }
  if (role == "checkbox") {
    if (el.has_attr("checked")) el.attrs.erase("checked");
    else el.attrs["checked"] = "";
    notice_ = fmt::format("@{} is now {}", element_index, el.has_attr("checked") ? "checked" : "unchecked");
    return;
  }
  if (role == "radio") {
    const auto name = attr_or(el, "name");
    if (dom_) {
      for_each_element(*dom_, [&](HtmlNode& n) {
        if (n.tag == "input" && input_type(n) == "radio" && attr_or(n, "name") == name) n.attrs.erase("checked");
      });
    }
    el.attrs["checked"] = "";
    notice_ = fmt::format("@{} selected", element_index);
    return;
  }
  if (role == "button") {
    const auto type = el.tag == "button" ? util::to_lower(el.attr("type") ? *el.attr("type") : "submit") : input_type(el);
    HtmlNode* form = el.ancestor("form");
    if (const auto* fid = el.attr("form"); fid && dom_) {
      for_each_element(*dom_, [&](HtmlNode& n) {
        if (n.tag == "form" && attr_or(n, "id") == *fid) form = &n;
      });
    }
    if (form && (type == "submit" || type == "image")) {
      submit(*form, &el);
      return;
    }
    notice_ = fmt::format("clicked @{}; the page did not change (this driver runs no scripts)", element_index);
    return;
  }
  // Focusing a text field or select has no visible effect.
  notice_ = fmt::format("focused @{}", element_index);
}

void HttpBrowser::submit(HtmlNode& form, HtmlNode* submitter) {
  std::vector<std::pair<std::string, std::string>> fields;
  std::string missing;
  for_each_element(form, [&](HtmlNode& n) {
    const auto name = attr_or(n, "name");
    if (n.has_attr("disabled")) return;
    std::optional<std::string> value;
    if (n.tag == "input") {
      const auto type = input_type(n);
      if (type == "submit" || type == "button" || type == "reset" || type == "image" || type == "file") return;
      if (type == "checkbox" || type == "radio") {
        if (n.has_attr("checked")) value = n.attr("value") ? *n.attr("value") : "on";
        else if (n.has_attr("required") && missing.empty()) missing = name;
      } else {
        value = attr_or(n, "value");
        if (n.has_attr("required") && util::trim(*value).empty() && missing.empty())
          missing = first_nonempty({label_for(*dom_, n), attr_or(n, "placeholder"), name});
      }
    } else if (n.tag == "textarea") {
      value = textarea_value(n);
      if (n.has_attr("required") && util::trim(*value).empty() && missing.empty())
        missing = first_nonempty({label_for(*dom_, n), attr_or(n, "placeholder"), name});
    } else if (n.tag == "select") {
      if (auto* o = selected_option(n)) value = option_value(*o);
    }
    if (value && !name.empty()) fields.emplace_back(name, *value);
  });
  if (!missing.empty()) {
    notice_ = fmt::format("the form was not submitted: required field \"{}\" is empty", missing);
    return;
  }
  if (submitter && submitter->attr("name") && !submitter->attr("name")->empty())
    fields.emplace_back(*submitter->attr("name"), attr_or(*submitter, "value"));
  const auto method = util::to_lower(attr_or(form, "method"));
  std::string action = attr_or(form, "action");
  if (submitter && submitter->attr("formaction")) action = *submitter->attr("formaction");
  const auto target = resolve_target(path_, action.empty() ? strip_query(path_) : action, authority_);
  if (!target) throw BrowserError(ErrorCategory::navigation_error, "form posts outside the application");
  const auto body = form_urlencode(fields);
  notice_ = "form submitted";
  if (method == "post") load("POST", *target, body);
  else load("GET", strip_query(*target) + (body.empty() ? "" : "?" + body), "");
  notice_ = "form submitted";
}

void HttpBrowser::type(int element_index, const std::string& text) {
  HtmlNode& el = *element(element_index);
  const auto role = role_of(el);
  if (el.tag == "textarea") {
    set_textarea_value(el, text);
  } else if (el.tag == "select") {
    HtmlNode* match = nullptr;
    for (auto* o : options_of(el))
      if (!match && (option_value(*o) == text || util::iequals(o->inner_text(), util::trim(text)))) match = o;
    if (!match)
      throw BrowserError(ErrorCategory::element_not_found,
                         fmt::format("@{} has no option \"{}\"", element_index, text));
    for (auto* o : options_of(el)) o->attrs.erase("selected");
    match->attrs["selected"] = "";
  } else if (role == "textbox") {
    el.attrs["value"] = text;
  } else {
    throw BrowserError(ErrorCategory::element_not_found, fmt::format("@{} is not a text field", element_index));
  }
  notice_ = fmt::format("typed into @{}", element_index);
}

void HttpBrowser::wait(std::chrono::milliseconds duration) {
  std::this_thread::sleep_for(std::min(duration, std::chrono::milliseconds(5000)));
  notice_ = "waited";
}

PageSnapshot HttpBrowser::snapshot() {
  PageSnapshot snap;
  snap.path = path_;
  snap.status = status_;
  snap.notice = notice_;
  if (!dom_) {
    snap.text = body_text_;
    return snap;
  }
  for_each_element(*dom_, [&](HtmlNode& n) {
    if (snap.title.empty() && n.tag == "title") snap.title = n.inner_text();
  });
  std::string raw;
  visible_text(*dom_, raw);
  std::vector<std::string> lines;
  for (const auto& line : util::split_lines(raw)) {
    auto l = util::collapse_whitespace(line);
    if (!l.empty()) lines.push_back(std::move(l));
  }
  snap.text = util::join(lines, "\n");
  int index = 0;
  for (HtmlNode* n : elements_) {
    InteractiveElement e;
    e.index = ++index;
    e.role = role_of(*n);
    if (e.role == "link") {
      e.label = first_nonempty({n->inner_text(), attr_or(*n, "aria-label"), attr_or(*n, "title"), attr_or(*n, "href")});
      const auto t = resolve_target(path_, attr_or(*n, "href"), authority_);
      e.target = t ? *t : attr_or(*n, "href");
    } else if (e.role == "button") {
      e.label = first_nonempty({n->inner_text(), attr_or(*n, "value"), attr_or(*n, "aria-label"), attr_or(*n, "title")});
    } else {
      e.label = first_nonempty({attr_or(*n, "aria-label"), label_for(*dom_, *n), attr_or(*n, "placeholder"),
                                attr_or(*n, "name")});
      if (e.role == "textbox") e.value = n->tag == "textarea" ? textarea_value(*n) : attr_or(*n, "value");
      else if (e.role == "checkbox" || e.role == "radio") e.value = n->has_attr("checked") ? "checked" : "unchecked";
      else if (auto* o = selected_option(*n)) e.value = o->inner_text();
    }
    if (n->has_attr("disabled")) e.label += " (disabled)";
    snap.elements.push_back(std::move(e));
  }
  return snap;
}

}  // namespace appforge::testrunner
