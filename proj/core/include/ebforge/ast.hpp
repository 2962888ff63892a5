#ifndef EBFORGE_AST_HPP
#define EBFORGE_AST_HPP

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace ebforge::ast {

// ---------------------------------------------------------------------------
// Identifiers
// ---------------------------------------------------------------------------

enum class Space {
  CarrierSet,
  Constant,
  Variable,
  PrimedVariable,
  Parameter,
  Label,
};

const char* spaceName(Space s);

// An identifier is a name plus the namespace it lives in.  Names are ASCII:
// [A-Za-z_][A-Za-z0-9_]*.  Anything else is rejected at construction so that
// an ill-formed identifier can never reach a serializer.
struct Ident {
  std::string name;
  Space space = Space::Variable;

  Ident() = default;
  Ident(std::string n, Space s);

  bool operator==(const Ident& o) const { return name == o.name && space == o.space; }
  bool operator!=(const Ident& o) const { return !(*this == o); }
  bool operator<(const Ident& o) const {
    if (name != o.name) return name < o.name;
    return static_cast<int>(space) < static_cast<int>(o.space);
  }
};

bool isValidIdentName(const std::string& n);

// Primed copy of a state variable, used in before-after predicates only.
Ident primed(const Ident& v);
bool isPrimed(const Ident& v);

// ---------------------------------------------------------------------------
// Semantic types (monomorphic)
// ---------------------------------------------------------------------------

struct SemType;
using SemTypePtr = std::shared_ptr<const SemType>;

struct SemType {
  enum class Kind { Int, Bool, Carrier, Pow, Pair };

  Kind kind;
  std::string carrier;  // Kind::Carrier
  SemTypePtr left, right;

  static SemTypePtr intType();
  static SemTypePtr boolType();
  static SemTypePtr carrierType(const std::string& name);
  static SemTypePtr pow(SemTypePtr elem);
  static SemTypePtr pair(SemTypePtr a, SemTypePtr b);
};

bool sameType(const SemTypePtr& a, const SemTypePtr& b);
std::string typeToString(const SemTypePtr& t);

// ---------------------------------------------------------------------------
// Expressions and predicates
// ---------------------------------------------------------------------------

struct Expr;
struct Pred;
using ExprPtr = std::shared_ptr<const Expr>;
using PredPtr = std::shared_ptr<const Pred>;

enum class ExprTag {
  IntLit,
  BoolLit,
  IdentRef,
  Add,
  Sub,
  Mul,
  Div,
  Minus,     // unary negation
  SetLit,
  Range,     // a .. b
  Dom,
  Ran,
  Image,     // f[S]
  Apply,     // f(x)
  MinOf,
  MaxOf,
  Card,
  Union,
  Inter,
  SetMinus,
  Maplet,    // a |-> b
  TotalFun,  // A --> B
  PartialFun,// A +-> B
  EmptySet,
  Naturals,
  Integers,
};

struct Expr {
  ExprTag tag;
  long long intVal = 0;   // IntLit
  bool boolVal = false;   // BoolLit
  Ident ident;            // IdentRef
  std::vector<ExprPtr> kids;
};

enum class PredTag {
  Truth,
  Falsity,
  Not,
  And,
  Or,
  Implies,
  Iff,
  Equal,
  NotEqual,
  Lt,
  Leq,
  Gt,
  Geq,
  Member,
  NotMember,
  Subset,
  Finite,
  Forall,
  Exists,
};

struct Pred {
  PredTag tag;
  std::vector<PredPtr> preds;
  std::vector<ExprPtr> exprs;
  std::vector<Ident> binders;  // Forall / Exists
};

// Node factories.  All nodes are immutable and freely shared.
ExprPtr mkIntLit(long long v);
ExprPtr mkBoolLit(bool v);
ExprPtr mkIdent(const Ident& id);
ExprPtr mkUnary(ExprTag t, ExprPtr a);
ExprPtr mkBinary(ExprTag t, ExprPtr a, ExprPtr b);
ExprPtr mkSetLit(std::vector<ExprPtr> elems);
ExprPtr mkNullary(ExprTag t);

PredPtr mkTruth();
PredPtr mkFalsity();
PredPtr mkNot(PredPtr p);
PredPtr mkConn(PredTag t, PredPtr a, PredPtr b);
PredPtr mkCompare(PredTag t, ExprPtr a, ExprPtr b);
PredPtr mkFinite(ExprPtr s);
PredPtr mkQuant(PredTag t, std::vector<Ident> binders, PredPtr body);

// Right-folded conjunction of a predicate list; empty list gives Truth.
PredPtr conjoin(const std::vector<PredPtr>& ps);

bool structEqual(const ExprPtr& a, const ExprPtr& b);
bool structEqual(const PredPtr& a, const PredPtr& b);
// Total order for deterministic containers and canonical output.
int structCompare(const ExprPtr& a, const ExprPtr& b);
int structCompare(const PredPtr& a, const PredPtr& b);

// ---------------------------------------------------------------------------
// Model elements
// ---------------------------------------------------------------------------

// A labeled predicate: axiom, theorem, invariant or guard.  Requirement ids
// (free-form strings such as "FUN-3") tie elements back to a requirement
// document; `gluing` marks refinement-linking invariants.
struct Labeled {
  Ident label{"l", Space::Label};
  PredPtr pred;
  std::vector<std::string> requirements;
  bool gluing = false;
};

enum class ActionForm {
  Det,   // v := E
  In,    // v :: E      (choose a member)
  Such,  // v,... :| P  (before-after choice)
};

struct Action {
  Ident label{"act", Space::Label};
  ActionForm form = ActionForm::Det;
  std::vector<Ident> vars;  // one var for Det/In, one or more for Such
  ExprPtr expr;             // Det / In
  PredPtr pred;             // Such
};

struct Event {
  Ident name{"evt", Space::Label};
  std::optional<std::string> refinesEvent;
  std::vector<Ident> params;
  std::vector<Labeled> guards;
  std::vector<Action> actions;
  std::vector<std::string> requirements;
};

struct Context {
  std::string name;
  std::optional<std::string> extendsName;
  std::vector<Ident> sets;
  std::vector<Ident> constants;
  std::vector<Labeled> axioms;
  std::vector<Labeled> theorems;
};

struct Machine {
  std::string name;
  std::optional<std::string> refinesName;
  std::optional<std::string> seesName;
  std::vector<Ident> variables;
  std::vector<Labeled> invariants;
  std::vector<Labeled> theorems;
  std::vector<ExprPtr> variants;  // at most one in a well-formed machine
  std::vector<Event> events;
};

struct Development {
  std::vector<Context> contexts;
  std::vector<Machine> machines;

  const Context* findContext(const std::string& name) const;
  const Machine* findMachine(const std::string& name) const;
  Context* findContext(const std::string& name);
  Machine* findMachine(const std::string& name);

  // Contexts visible to a machine: sees target plus its extends closure.
  std::vector<const Context*> contextClosure(const Machine& m) const;
  // Refinement ancestry, nearest first; excludes m itself.
  std::vector<const Machine*> ancestry(const Machine& m) const;
};

// All requirement tags carried by a development, element label -> ids.
struct RequirementTag {
  std::string elementLabel;
  std::vector<std::string> requirementIds;
};
std::vector<RequirementTag> requirementTags(const Development& d);

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct AstError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BadIdent : AstError {
  using AstError::AstError;
};

// Two deterministic actions assign the same variable in one event.
struct ConflictingAssignment : AstError {
  using AstError::AstError;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

std::set<Ident> freeVars(const ExprPtr& e);
std::set<Ident> freeVars(const PredPtr& p);

// Capture-avoiding substitution.  Binders that would capture a free
// identifier of a replacement are renamed with the smallest numeric suffix
// (x -> x0, x1, ...) that collides with nothing in scope.
ExprPtr substitute(const ExprPtr& e, const std::map<Ident, ExprPtr>& sub);
PredPtr substitute(const PredPtr& p, const std::map<Ident, ExprPtr>& sub);

// Before-after predicate of an event over the given machine variables:
// one conjunct per action (v' = E, v' :: E as membership, or the action's
// own predicate) plus v' = v for every unassigned variable.  Throws
// ConflictingAssignment if two actions assign the same variable.
PredPtr beforeAfter(const Event& e, const std::vector<Ident>& machineVars);

// Variables assigned by an event's actions, in declaration order.
std::vector<Ident> assignedVars(const Event& e);

}  // namespace ebforge::ast

#endif
