#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "progshot/interpreter.hpp"

namespace progshot::interp::detail {

enum class Tok {
  name,
  number,
  string,
  op,
  newline,
  indent,
  dedent,
  end,
};

struct Token {
  Tok kind = Tok::end;
  std::string text;  // identifier, operator spelling, number spelling, or decoded string
  SourcePos pos;
};

/// Splits program text into Python-style tokens with INDENT/DEDENT.
/// Leading tabs count as four spaces. Throws ParseError / UnsupportedConstruct.
std::vector<Token> tokenize(std::string_view source);

}  // namespace progshot::interp::detail
