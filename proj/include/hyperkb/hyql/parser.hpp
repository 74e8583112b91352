#pragma once

#include <string_view>

#include "hyperkb/hyql/ast.hpp"
#include "hyperkb/hyql/lexer.hpp"

namespace hyperkb::hyql {

/// Parses and validates one query. Throws ParseError.
Query parse(std::string_view text);

/// Scope rules that do not need a knowledge base. Throws ParseError with no
/// position. parse() already runs this.
void check_semantics(const Query& q);

}  // namespace hyperkb::hyql
