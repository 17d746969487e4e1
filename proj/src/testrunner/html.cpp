#include "appforge/testrunner/html.hpp"

#include "appforge/util/text.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace appforge::testrunner {

namespace {

const std::set<std::string, std::less<>> kVoid = {"area", "base", "br",   "col",   "embed", "hr",  "img",
                                                  "input", "link", "meta", "source", "track", "wbr"};
const std::set<std::string, std::less<>> kRawText = {"script", "style", "textarea", "title"};
const std::set<std::string, std::less<>> kClosesParagraph = {
    "address", "article", "aside", "blockquote", "div", "dl",  "fieldset", "footer", "form", "h1",
    "h2",      "h3",      "h4",    "h5",         "h6",  "header", "hr",    "main",   "nav",  "ol",
    "p",       "pre",     "section", "table",    "ul"};

void append_utf8(std::string& out, unsigned long cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x110000) {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  std::unique_ptr<HtmlNode> run() {
    auto root = std::make_unique<HtmlNode>();
    root->tag = "#document";
    stack_.push_back(root.get());
    while (pos_ < src_.size()) {
      if (src_[pos_] == '<') {
        if (src_.substr(pos_, 4) == "<!--") {
          const auto end = src_.find("-->", pos_ + 4);
          pos_ = end == std::string_view::npos ? src_.size() : end + 3;
        } else if (pos_ + 1 < src_.size() && (src_[pos_ + 1] == '!' || src_[pos_ + 1] == '?')) {
          skip_past('>');
        } else if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
          end_tag();
        } else if (pos_ + 1 < src_.size() && std::isalpha(static_cast<unsigned char>(src_[pos_ + 1]))) {
          start_tag();
        } else {
          text(pos_, pos_ + 1);
          ++pos_;
        }
      } else {
        const auto next = src_.find('<', pos_);
        const auto end = next == std::string_view::npos ? src_.size() : next;
        text(pos_, end);
        pos_ = end;
      }
    }
    return root;
  }

 private:
  void skip_past(char c) {
    const auto end = src_.find(c, pos_);
    pos_ = end == std::string_view::npos ? src_.size() : end + 1;
  }

  HtmlNode* top() { return stack_.back(); }

  HtmlNode* append(std::unique_ptr<HtmlNode> node) {
    node->parent = top();
    top()->children.push_back(std::move(node));
    return top()->children.back().get();
  }

  void text(std::size_t begin, std::size_t end) {
    if (begin >= end) return;
    auto node = std::make_unique<HtmlNode>();
    node->text = decode_html_entities(src_.substr(begin, end - begin));
    append(std::move(node));
  }

  std::string read_name() {
    std::string name;
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c)) || c == '>' || c == '/' || c == '=') break;
      name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      ++pos_;
    }
    return name;
  }

  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  void close_implied(const std::string& tag) {
    auto top_is = [&](std::initializer_list<const char*> tags) {
      return std::any_of(tags.begin(), tags.end(), [&](const char* t) { return top()->tag == t; });
    };
    if (kClosesParagraph.contains(tag) && top_is({"p"})) stack_.pop_back();
    if (tag == "li" && top_is({"li"})) stack_.pop_back();
    if (tag == "option" && top_is({"option"})) stack_.pop_back();
    if ((tag == "td" || tag == "th") && top_is({"td", "th"})) stack_.pop_back();
    if (tag == "tr") {
      while (top_is({"td", "th"})) stack_.pop_back();
      if (top_is({"tr"})) stack_.pop_back();
    }
  }

  void start_tag() {
    ++pos_;
    auto node = std::make_unique<HtmlNode>();
    node->tag = read_name();
    bool self_closing = false;
    while (pos_ < src_.size()) {
      skip_space();
      if (pos_ >= src_.size()) break;
      if (src_[pos_] == '>') {
        ++pos_;
        break;
      }
      if (src_[pos_] == '/') {
        self_closing = true;
        ++pos_;
        continue;
      }
      auto name = read_name();
      if (name.empty()) {
        ++pos_;
        continue;
      }
      skip_space();
      std::string value;
      if (pos_ < src_.size() && src_[pos_] == '=') {
        ++pos_;
        skip_space();
        if (pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\'')) {
          const char q = src_[pos_++];
          const auto end = src_.find(q, pos_);
          const auto stop = end == std::string_view::npos ? src_.size() : end;
          value = decode_html_entities(src_.substr(pos_, stop - pos_));
          pos_ = std::min(src_.size(), stop + 1);
        } else {
          const auto begin = pos_;
          while (pos_ < src_.size() && !std::isspace(static_cast<unsigned char>(src_[pos_])) && src_[pos_] != '>')
            ++pos_;
          value = decode_html_entities(src_.substr(begin, pos_ - begin));
        }
      }
      node->attrs.emplace(std::move(name), std::move(value));
    }
    const std::string tag = node->tag;
    close_implied(tag);
    if (kRawText.contains(tag) && !self_closing) {
      const std::string closing = "</" + tag;
      std::size_t end = pos_;
      for (;;) {
        end = src_.find("</", end);
        if (end == std::string_view::npos) break;
        if (util::iequals(src_.substr(end, closing.size()), closing)) break;
        end += 2;
      }
      const auto stop = end == std::string_view::npos ? src_.size() : end;
      auto* el = append(std::move(node));
      if (stop > pos_) {
        auto t = std::make_unique<HtmlNode>();
        t->text = tag == "script" || tag == "style" ? std::string(src_.substr(pos_, stop - pos_))
                                                    : decode_html_entities(src_.substr(pos_, stop - pos_));
        t->parent = el;
        el->children.push_back(std::move(t));
      }
      pos_ = stop;
      if (pos_ < src_.size()) skip_past('>');
      return;
    }
    auto* el = append(std::move(node));
    if (!self_closing && !kVoid.contains(tag)) stack_.push_back(el);
  }

  void end_tag() {
    pos_ += 2;
    const auto name = read_name();
    skip_past('>');
    for (std::size_t i = stack_.size(); i-- > 1;) {
      if (stack_[i]->tag == name) {
        stack_.resize(i);
        return;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::vector<HtmlNode*> stack_;
};

void collect_text(const HtmlNode& node, std::string& out) {
  if (node.is_text()) {
    out += node.text;
    return;
  }
  if (node.tag == "script" || node.tag == "style" || node.tag == "template") return;
  if (node.tag == "br") out += ' ';
  for (const auto& c : node.children) collect_text(*c, out);
  out += ' ';
}

}  // namespace

const std::string* HtmlNode::attr(const std::string& key) const {
  const auto it = attrs.find(key);
  return it == attrs.end() ? nullptr : &it->second;
}

std::string HtmlNode::inner_text() const {
  std::string out;
  collect_text(*this, out);
  return util::collapse_whitespace(out);
}

HtmlNode* HtmlNode::ancestor(const std::string& name) const {
  for (HtmlNode* p = parent; p; p = p->parent)
    if (p->tag == name) return p;
  return nullptr;
}

std::unique_ptr<HtmlNode> parse_html(std::string_view html) { return Parser(html).run(); }

std::string decode_html_entities(std::string_view text) {
  static const std::map<std::string, unsigned long, std::less<>> kNamed = {
      {"amp", '&'},     {"lt", '<'},       {"gt", '>'},      {"quot", '"'},     {"apos", '\''},
      {"nbsp", 0xA0},   {"copy", 0xA9},    {"reg", 0xAE},    {"trade", 0x2122}, {"hellip", 0x2026},
      {"mdash", 0x2014}, {"ndash", 0x2013}, {"laquo", 0xAB},  {"raquo", 0xBB},   {"middot", 0xB7},
      {"euro", 0x20AC}, {"pound", 0xA3},   {"times", 0xD7},  {"rarr", 0x2192},  {"larr", 0x2190},
      {"bull", 0x2022}, {"deg", 0xB0},     {"lsquo", 0x2018}, {"rsquo", 0x2019}, {"ldquo", 0x201C},
      {"rdquo", 0x201D}, {"star", 0x2606}, {"check", 0x2713}};
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '&') {
      out.push_back(text[i++]);
      continue;
    }
    const auto semi = text.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 12) {
      out.push_back(text[i++]);
      continue;
    }
    const auto name = text.substr(i + 1, semi - i - 1);
    bool decoded = false;
    if (name.size() > 1 && name[0] == '#') {
      unsigned long cp = 0;
      const bool hex = name[1] == 'x' || name[1] == 'X';
      const auto digits = name.substr(hex ? 2 : 1);
      bool valid = !digits.empty();
      for (char c : digits) {
        const int v = std::isdigit(static_cast<unsigned char>(c)) ? c - '0'
                      : hex && std::isxdigit(static_cast<unsigned char>(c))
                          ? std::tolower(static_cast<unsigned char>(c)) - 'a' + 10
                          : -1;
        if (v < 0) valid = false;
        else cp = cp * (hex ? 16 : 10) + static_cast<unsigned long>(v);
        if (cp > 0x10FFFF) valid = false;
      }
      if (valid) {
        append_utf8(out, cp);
        decoded = true;
      }
    } else if (const auto it = kNamed.find(name); it != kNamed.end()) {
      append_utf8(out, it->second);
      decoded = true;
    }
    if (decoded) {
      i = semi + 1;
    } else {
      out.push_back(text[i++]);
    }
  }
  return out;
}

void for_each_element(HtmlNode& root, const std::function<void(HtmlNode&)>& fn) {
  for (auto& c : root.children) {
    if (c->is_text()) continue;
    fn(*c);
    for_each_element(*c, fn);
  }
}

}  // namespace appforge::testrunner
