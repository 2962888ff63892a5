#ifndef EBFORGE_FRONTEND_HPP
#define EBFORGE_FRONTEND_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ebforge/ast.hpp"

namespace ebforge::frontend {

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

namespace diag {
inline constexpr const char* SyntaxError = "SYNTAX_ERROR";
inline constexpr const char* SchemaViolation = "SCHEMA_VIOLATION";
inline constexpr const char* UndeclaredIdent = "UNDECLARED_IDENT";
inline constexpr const char* TypeMismatch = "TYPE_MISMATCH";
inline constexpr const char* AmbiguousType = "AMBIGUOUS_TYPE";
inline constexpr const char* ScopeViolation = "SCOPE_VIOLATION";
inline constexpr const char* DuplicateLabel = "DUPLICATE_LABEL";
inline constexpr const char* DuplicateIdent = "DUPLICATE_IDENT";
inline constexpr const char* BadLink = "BAD_LINK";
inline constexpr const char* InitMissing = "INIT_MISSING";
inline constexpr const char* InitIncomplete = "INIT_INCOMPLETE";
inline constexpr const char* ConflictingAssignment = "CONFLICTING_ASSIGNMENT";
inline constexpr const char* BadVariant = "BAD_VARIANT";
}  // namespace diag

struct Diagnostic {
  std::string code;
  std::string path;     // element path, e.g. "m1/events/find_better/guards/grd5"
  std::string message;
  int line = 0;  // 1-based for text input, 0 when not applicable
  int col = 0;

  bool operator<(const Diagnostic& o) const {
    if (path != o.path) return path < o.path;
    if (code != o.code) return code < o.code;
    return message < o.message;
  }
};

struct ParseResult {
  std::optional<ast::Development> dev;
  std::vector<Diagnostic> diags;
  bool ok() const { return dev.has_value() && diags.empty(); }
};

// ---------------------------------------------------------------------------
// Formula surface syntax
// ---------------------------------------------------------------------------

// Thrown by the formula parser; `pos` is a 0-based offset into the input.
struct FormulaError : std::runtime_error {
  size_t pos;
  FormulaError(const std::string& msg, size_t p) : std::runtime_error(msg), pos(p) {}
};

// Parse a predicate / expression written in the ASCII surface syntax
// (&, or, =>, <=>, not, !x.P, #x.P, :, /:, <:, .., |->, -->, +->, \/, /\, \,
//  dom, ran, min, max, card, finite, NAT, INT, TRUE, FALSE, {..}).
// Primed identifiers (x') are accepted only when `allowPrimed` is set, which
// the document parsers enable for the right-hand side of :| actions.
ast::PredPtr parseFormulaPred(const std::string& text, bool allowPrimed = false);
ast::ExprPtr parseFormulaExpr(const std::string& text);

// Parse an action string: "v := E", "v :: E" or "v1, v2 :| P".
ast::Action parseActionString(const std::string& label, const std::string& text);

std::string renderExpr(const ast::ExprPtr& e);
std::string renderPred(const ast::PredPtr& p);
std::string renderAction(const ast::Action& a);

// ---------------------------------------------------------------------------
// Documents
// ---------------------------------------------------------------------------

inline constexpr int kSchemaVersion = 1;

// JSON interchange document <-> Development.
ParseResult parseJson(const std::string& jsonText);
std::string serializeJson(const ast::Development& d);

// Human-oriented text format <-> Development.
ParseResult parseText(const std::string& text);
std::string serializeText(const ast::Development& d);

// Reads either format, keyed on the first non-space character ('{' = JSON).
ParseResult parseAny(const std::string& text);

// ---------------------------------------------------------------------------
// Well-formedness and typing
// ---------------------------------------------------------------------------

struct TypeScope {
  std::map<ast::Ident, ast::SemTypePtr> types;
  ast::SemTypePtr find(const ast::Ident& id) const {
    auto it = types.find(id);
    return it == types.end() ? nullptr : it->second;
  }
};

struct TypeEnv {
  std::map<std::string, TypeScope> contexts;  // by context name
  std::map<std::string, TypeScope> machines;  // constants, sets and variables
  std::map<std::string, TypeScope> events;    // "machine/event" -> parameters

  // Resolves an identifier in the given machine (and optional event) scope.
  // Primed variables resolve to their base variable's type.
  ast::SemTypePtr lookup(const std::string& machine, const std::string& event,
                         const ast::Ident& id) const;
};

struct WfResult {
  std::vector<Diagnostic> diags;  // sorted by path, deterministic
  TypeEnv types;
  bool ok() const { return diags.empty(); }
};

// Scope, label, link, initialisation and typing checks.  Never throws on
// model defects; every defect becomes a Diagnostic.
WfResult wellFormed(const ast::Development& d);

}  // namespace ebforge::frontend

#endif
