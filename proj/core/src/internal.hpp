#ifndef EBFORGE_SRC_INTERNAL_HPP
#define EBFORGE_SRC_INTERNAL_HPP

#include "ebforge/ast.hpp"

namespace ebforge::frontend {

// Rewrites identifier spaces in every formula of `d` according to the
// declarations in scope (carrier sets, constants, variables, event
// parameters).  Names with no declaration keep Space::Variable and are
// reported later by wellFormed.  Quantifier-bound identifiers are left
// untouched.  Both document parsers run this after structural parsing.
void resolveSpaces(ast::Development& d);

}  // namespace ebforge::frontend

#endif
