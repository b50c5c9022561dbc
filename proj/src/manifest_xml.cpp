#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "permnet/error.hpp"
#include "permnet/ingest.hpp"

namespace permnet {
namespace {

// Minimal non-validating XML reader. It checks well-formedness (tag nesting,
// quoting, single root) and reports element start tags with their attributes.
class XmlScanner {
 public:
  explicit XmlScanner(std::string_view doc) : doc_(doc) {}

  PermissionSet run() {
    PermissionSet out;
    std::vector<std::string> open;
    bool seen_root = false;

    while (!eof()) {
      if (peek() != '<') {
        while (!eof() && peek() != '<') {
          if (open.empty() && !is_space(peek())) fail("text outside of root element");
          if (peek() == '&') {
            (void)read_entity();
          } else {
            advance();
          }
        }
        continue;
      }
      if (starts_with("<?")) {
        skip_past("?>", "unterminated processing instruction");
      } else if (starts_with("<!--")) {
        skip_past("-->", "unterminated comment");
      } else if (starts_with("<![CDATA[")) {
        if (open.empty()) fail("CDATA outside of root element");
        skip_past("]]>", "unterminated CDATA section");
      } else if (starts_with("<!DOCTYPE")) {
        if (seen_root) fail("DOCTYPE after root element");
        skip_doctype();
      } else if (starts_with("</")) {
        advance(2);
        const std::string name = read_name();
        skip_spaces();
        expect('>');
        if (open.empty() || open.back() != name) fail("mismatched end tag </" + name + ">");
        open.pop_back();
      } else {
        advance();
        const std::string name = read_name();
        if (open.empty()) {
          if (seen_root) fail("multiple root elements");
          seen_root = true;
        }
        std::vector<std::pair<std::string, std::string>> attrs;
        bool self_closing = false;
        for (;;) {
          const bool had_space = skip_spaces();
          if (eof()) fail("unterminated start tag <" + name + ">");
          if (peek() == '>') {
            advance();
            break;
          }
          if (starts_with("/>")) {
            advance(2);
            self_closing = true;
            break;
          }
          if (!had_space) fail("expected whitespace before attribute");
          std::string key = read_name();
          skip_spaces();
          expect('=');
          skip_spaces();
          std::string value = read_quoted();
          for (const auto& [k, v] : attrs) {
            if (k == key) fail("duplicate attribute " + key);
          }
          attrs.emplace_back(std::move(key), std::move(value));
        }
        if (name == "uses-permission") {
          for (const auto& [k, v] : attrs) {
            if (k != "android:name") continue;
            const auto value = trim(v);
            if (!value.empty()) out.emplace(value);
          }
        }
        if (!self_closing) open.push_back(name);
      }
    }
    if (!open.empty()) fail("unclosed element <" + open.back() + ">");
    if (!seen_root) fail("no root element");
    return out;
  }

 private:
  bool eof() const { return pos_ >= doc_.size(); }
  char peek() const { return doc_[pos_]; }
  bool starts_with(std::string_view s) const { return doc_.substr(pos_).starts_with(s); }
  static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

  static bool is_name_char(char c) {
    const auto u = static_cast<unsigned char>(c);
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == ':' || c == '-' || c == '.' || u >= 0x80;
  }

  void advance(std::size_t n = 1) {
    for (std::size_t i = 0; i < n && !eof(); ++i) {
      if (doc_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }
  }

  bool skip_spaces() {
    bool any = false;
    while (!eof() && is_space(peek())) {
      advance();
      any = true;
    }
    return any;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(Errc::MalformedXml,
                "malformed XML at " + std::to_string(line_) + ":" + std::to_string(col_) + ": " + msg,
                line_, col_);
  }

  void expect(char c) {
    if (eof() || peek() != c) fail(std::string("expected '") + c + "'");
    advance();
  }

  void skip_past(std::string_view terminator, const char* msg) {
    while (!eof() && !starts_with(terminator)) advance();
    if (eof()) fail(msg);
    advance(terminator.size());
  }

  void skip_doctype() {
    int bracket_depth = 0;
    while (!eof()) {
      const char c = peek();
      advance();
      if (c == '[') ++bracket_depth;
      if (c == ']') --bracket_depth;
      if (c == '>' && bracket_depth == 0) return;
    }
    fail("unterminated DOCTYPE");
  }

  std::string read_name() {
    const std::size_t start = pos_;
    if (eof() || !is_name_char(peek()) || peek() == '-' || peek() == '.' ||
        (peek() >= '0' && peek() <= '9')) {
      fail("expected a name");
    }
    while (!eof() && is_name_char(peek())) advance();
    return std::string(doc_.substr(start, pos_ - start));
  }

  std::string read_quoted() {
    if (eof() || (peek() != '"' && peek() != '\'')) fail("expected quoted attribute value");
    const char quote = peek();
    advance();
    std::string value;
    while (!eof() && peek() != quote) {
      if (peek() == '<') fail("'<' in attribute value");
      if (peek() == '&') {
        value += read_entity();
      } else {
        value += peek();
        advance();
      }
    }
    if (eof()) fail("unterminated attribute value");
    advance();
    return value;
  }

  std::string read_entity() {
    advance();  // '&'
    const std::size_t start = pos_;
    while (!eof() && peek() != ';' && pos_ - start < 12) advance();
    if (eof() || peek() != ';') fail("unterminated entity reference");
    const std::string_view ent = doc_.substr(start, pos_ - start);
    advance();
    if (ent == "amp") return "&";
    if (ent == "lt") return "<";
    if (ent == "gt") return ">";
    if (ent == "quot") return "\"";
    if (ent == "apos") return "'";
    if (ent.size() > 1 && ent[0] == '#') {
      std::uint32_t cp = 0;
      const bool hex = ent[1] == 'x';
      const auto digits = ent.substr(hex ? 2 : 1);
      if (digits.empty()) fail("empty character reference");
      for (char c : digits) {
        int d;
        if (c >= '0' && c <= '9') d = c - '0';
        else if (hex && c >= 'a' && c <= 'f') d = c - 'a' + 10;
        else if (hex && c >= 'A' && c <= 'F') d = c - 'A' + 10;
        else fail("bad character reference");
        cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(d);
        if (cp > 0x10FFFF) fail("character reference out of range");
      }
      return encode_utf8(cp);
    }
    fail("unknown entity &" + std::string(ent) + ";");
  }

  static std::string encode_utf8(std::uint32_t cp) {
    std::string s;
    if (cp < 0x80) {
      s += static_cast<char>(cp);
    } else if (cp < 0x800) {
      s += static_cast<char>(0xC0 | (cp >> 6));
      s += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      s += static_cast<char>(0xE0 | (cp >> 12));
      s += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      s += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      s += static_cast<char>(0xF0 | (cp >> 18));
      s += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      s += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      s += static_cast<char>(0x80 | (cp & 0x3F));
    }
    return s;
  }

  std::string_view doc_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

}  // namespace

PermissionSet parse_manifest_xml(std::string_view document) {
  return XmlScanner(document).run();
}

}  // namespace permnet
