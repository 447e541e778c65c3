#include "lexer.hpp"

#include <array>
#include <cctype>
#include <cstring>

namespace progshot::interp::detail {

namespace {

constexpr std::array<std::string_view, 5> kThreeCharOps = {"**=", "//=", ">>=", "<<=", "..."};
constexpr std::array<std::string_view, 19> kTwoCharOps = {
    "**", "//", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=",
    "%=", "&=", "|=", "^=", "@=", "<<", ">>", "->", ":="};
constexpr std::string_view kOneCharOps = "+-*/%()[]{},:.;=<>@&|^~";

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

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
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    while (true) {
      if (at_line_start_ && depth_ == 0) {
        if (!handle_indentation()) break;
        continue;
      }
      if (eof()) break;
      const char c = peek();
      if (c == ' ' || c == '\t' || c == '\f' || c == '\r') {
        advance();
      } else if (c == '#') {
        while (!eof() && peek() != '\n') advance();
      } else if (c == '\\') {
        const SourcePos p = here();
        advance();
        if (!eof() && peek() == '\r') advance();
        if (eof() || peek() != '\n') throw ParseError(p, "unexpected character after line continuation");
        advance();
      } else if (c == '\n') {
        const SourcePos p = here();
        advance();
        if (depth_ == 0) {
          emit(Tok::newline, "", p);
          at_line_start_ = true;
        }
      } else if (is_ident_start(static_cast<unsigned char>(c))) {
        lex_name_or_prefixed_string();
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
        lex_number();
      } else if (c == '\'' || c == '"') {
        lex_string(here(), false);
      } else {
        lex_operator();
      }
    }
    const SourcePos p = here();
    if (!tokens_.empty() && tokens_.back().kind != Tok::newline &&
        tokens_.back().kind != Tok::dedent) {
      emit(Tok::newline, "", p);
    }
    if (depth_ > 0) throw ParseError(p, "unexpected EOF: unclosed bracket");
    while (indents_.size() > 1) {
      indents_.pop_back();
      emit(Tok::dedent, "", p);
    }
    emit(Tok::end, "", p);
    return std::move(tokens_);
  }

 private:
  bool eof() const { return i_ >= src_.size(); }
  char peek(std::size_t k = 0) const { return i_ + k < src_.size() ? src_[i_ + k] : '\0'; }
  SourcePos here() const { return {line_, col_}; }

  void advance() {
    if (src_[i_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++i_;
  }

  void emit(Tok kind, std::string text, SourcePos p) {
    tokens_.push_back(Token{kind, std::move(text), p});
  }

  // Returns false at EOF.
  bool handle_indentation() {
    int width = 0;
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\f')) {
      width += peek() == '\t' ? 4 : (peek() == ' ' ? 1 : 0);
      advance();
    }
    if (eof()) return false;
    const char c = peek();
    if (c == '\n' || c == '\r' || c == '#') {
      while (!eof() && peek() != '\n') advance();
      if (!eof()) advance();
      return true;
    }
    if (c == '\\' && (peek(1) == '\n' || (peek(1) == '\r' && peek(2) == '\n'))) {
      at_line_start_ = false;
      return true;
    }
    at_line_start_ = false;
    const SourcePos p = here();
    if (width > indents_.back()) {
      indents_.push_back(width);
      emit(Tok::indent, "", p);
    } else {
      while (width < indents_.back()) {
        indents_.pop_back();
        emit(Tok::dedent, "", p);
      }
      if (width != indents_.back()) {
        throw ParseError(p, "unindent does not match any outer indentation level");
      }
    }
    return true;
  }

  void lex_name_or_prefixed_string() {
    const SourcePos p = here();
    const std::size_t start = i_;
    while (!eof() && is_ident_char(static_cast<unsigned char>(peek()))) advance();
    std::string word(src_.substr(start, i_ - start));
    if (!eof() && (peek() == '\'' || peek() == '"') && word.size() <= 2) {
      std::string lower;
      for (char ch : word) lower.push_back(static_cast<char>(std::tolower(ch)));
      if (lower == "r" || lower == "u") {
        lex_string(p, lower == "r");
        return;
      }
      if (lower.find('f') != std::string::npos &&
          (lower == "f" || lower == "rf" || lower == "fr")) {
        throw UnsupportedConstruct(p, "f-string");
      }
      if (lower == "b" || lower == "rb" || lower == "br") {
        throw UnsupportedConstruct(p, "bytes literal");
      }
    }
    emit(Tok::name, std::move(word), p);
  }

  void lex_number() {
    const SourcePos p = here();
    const std::size_t start = i_;
    auto digits = [&](auto pred) {
      while (!eof() && (pred(static_cast<unsigned char>(peek())) || peek() == '_')) advance();
    };
    if (peek() == '0' && std::strchr("xXoObB", peek(1)) != nullptr && peek(1) != '\0') {
      advance();
      advance();
      digits([](unsigned char ch) { return std::isxdigit(ch) != 0; });
    } else {
      digits([](unsigned char ch) { return std::isdigit(ch) != 0; });
      if (peek() == '.') {
        advance();
        digits([](unsigned char ch) { return std::isdigit(ch) != 0; });
      }
      if (peek() == 'e' || peek() == 'E') {
        const char next = peek(1);
        if (std::isdigit(static_cast<unsigned char>(next)) ||
            ((next == '+' || next == '-') && std::isdigit(static_cast<unsigned char>(peek(2))))) {
          advance();
          if (peek() == '+' || peek() == '-') advance();
          digits([](unsigned char ch) { return std::isdigit(ch) != 0; });
        }
      }
    }
    if (peek() == 'j' || peek() == 'J') throw UnsupportedConstruct(p, "complex literal");
    if (is_ident_start(static_cast<unsigned char>(peek()))) throw ParseError(p, "invalid decimal literal");
    std::string text(src_.substr(start, i_ - start));
    if (text.back() == '_' || text.find("__") != std::string::npos) {
      throw ParseError(p, "invalid decimal literal");
    }
    emit(Tok::number, std::move(text), p);
  }

  void lex_string(SourcePos p, bool raw) {
    const char quote = peek();
    const bool triple = peek(1) == quote && peek(2) == quote;
    const std::size_t qlen = triple ? 3 : 1;
    for (std::size_t k = 0; k < qlen; ++k) advance();
    std::string out;
    while (true) {
      if (eof()) throw ParseError(p, triple ? "unterminated triple-quoted string literal"
                                            : "unterminated string literal");
      const char c = peek();
      if (c == quote && (!triple || (peek(1) == quote && peek(2) == quote))) {
        for (std::size_t k = 0; k < qlen; ++k) advance();
        break;
      }
      if (c == '\n' && !triple) throw ParseError(p, "unterminated string literal");
      if (c == '\\') {
        advance();
        if (eof()) continue;
        const char e = peek();
        if (raw) {
          out.push_back('\\');
          out.push_back(e);
          advance();
          continue;
        }
        advance();
        switch (e) {
          case '\n': break;
          case '\\': out.push_back('\\'); break;
          case '\'': out.push_back('\''); break;
          case '"': out.push_back('"'); break;
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case 'r': out.push_back('\r'); break;
          case 'a': out.push_back('\a'); break;
          case 'b': out.push_back('\b'); break;
          case 'f': out.push_back('\f'); break;
          case 'v': out.push_back('\v'); break;
          case 'x':
          case 'u':
          case 'U': {
            const int n = e == 'x' ? 2 : (e == 'u' ? 4 : 8);
            unsigned long cp = 0;
            for (int k = 0; k < n; ++k) {
              if (!std::isxdigit(static_cast<unsigned char>(peek()))) {
                throw ParseError(p, "truncated \\" + std::string(1, e) + " escape");
              }
              cp = cp * 16 + static_cast<unsigned long>(std::stoi(std::string(1, peek()), nullptr, 16));
              advance();
            }
            if (cp > 0x10FFFF) throw ParseError(p, "illegal Unicode character");
            append_utf8(out, cp);
            break;
          }
          default:
            if (e >= '0' && e <= '7') {
              unsigned long cp = static_cast<unsigned long>(e - '0');
              for (int k = 0; k < 2 && peek() >= '0' && peek() <= '7'; ++k) {
                cp = cp * 8 + static_cast<unsigned long>(peek() - '0');
                advance();
              }
              append_utf8(out, cp);
            } else {
              out.push_back('\\');
              out.push_back(e);
            }
        }
        continue;
      }
      out.push_back(c);
      advance();
    }
    emit(Tok::string, std::move(out), p);
  }

  void lex_operator() {
    const SourcePos p = here();
    const std::string_view rest = src_.substr(i_);
    auto take = [&](std::string_view op) {
      for (std::size_t k = 0; k < op.size(); ++k) advance();
      if (op == "(" || op == "[" || op == "{") ++depth_;
      if (op == ")" || op == "]" || op == "}") {
        if (depth_ == 0) throw ParseError(p, "unmatched '" + std::string(op) + "'");
        --depth_;
      }
      emit(Tok::op, std::string(op), p);
    };
    for (auto op : kThreeCharOps) {
      if (rest.starts_with(op)) {
        take(op);
        return;
      }
    }
    for (auto op : kTwoCharOps) {
      if (rest.starts_with(op)) {
        take(op);
        return;
      }
    }
    if (kOneCharOps.find(rest.front()) != std::string_view::npos) {
      take(rest.substr(0, 1));
      return;
    }
    throw ParseError(p, std::string("invalid character '") + rest.front() + "'");
  }

  std::string_view src_;
  std::size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
  int depth_ = 0;
  bool at_line_start_ = true;
  std::vector<int> indents_{0};
  std::vector<Token> tokens_;
};

}  // namespace

std::vector<Token> tokenize(std::string_view source) { return Lexer(source).run(); }

}  // namespace progshot::interp::detail
