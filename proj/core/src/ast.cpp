#include "ebforge/ast.hpp"

#include <algorithm>
#include <cctype>

namespace ebforge::ast {

const char* spaceName(Space s) {
  switch (s) {
    case Space::CarrierSet: return "carrier-set";
    case Space::Constant: return "constant";
    case Space::Variable: return "variable";
    case Space::PrimedVariable: return "primed-variable";
    case Space::Parameter: return "parameter";
    case Space::Label: return "label";
  }
  return "?";
}

bool isValidIdentName(const std::string& n) {
  if (n.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(n[0])) || n[0] == '_')) return false;
  for (char c : n) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  return true;
}

Ident::Ident(std::string n, Space s) : name(std::move(n)), space(s) {
  if (!isValidIdentName(name)) {
    throw BadIdent("invalid identifier name: '" + name + "'");
  }
}

Ident primed(const Ident& v) { return Ident(v.name, Space::PrimedVariable); }

bool isPrimed(const Ident& v) { return v.space == Space::PrimedVariable; }

// ---------------------------------------------------------------------------
// SemType
// ---------------------------------------------------------------------------

SemTypePtr SemType::intType() {
  static const SemTypePtr t = std::make_shared<SemType>(SemType{Kind::Int, "", nullptr, nullptr});
  return t;
}

SemTypePtr SemType::boolType() {
  static const SemTypePtr t = std::make_shared<SemType>(SemType{Kind::Bool, "", nullptr, nullptr});
  return t;
}

SemTypePtr SemType::carrierType(const std::string& name) {
  return std::make_shared<SemType>(SemType{Kind::Carrier, name, nullptr, nullptr});
}

SemTypePtr SemType::pow(SemTypePtr elem) {
  return std::make_shared<SemType>(SemType{Kind::Pow, "", std::move(elem), nullptr});
}

SemTypePtr SemType::pair(SemTypePtr a, SemTypePtr b) {
  return std::make_shared<SemType>(SemType{Kind::Pair, "", std::move(a), std::move(b)});
}

bool sameType(const SemTypePtr& a, const SemTypePtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case SemType::Kind::Int:
    case SemType::Kind::Bool: return true;
    case SemType::Kind::Carrier: return a->carrier == b->carrier;
    case SemType::Kind::Pow: return sameType(a->left, b->left);
    case SemType::Kind::Pair: return sameType(a->left, b->left) && sameType(a->right, b->right);
  }
  return false;
}

std::string typeToString(const SemTypePtr& t) {
  if (!t) return "?";
  switch (t->kind) {
    case SemType::Kind::Int: return "INT";
    case SemType::Kind::Bool: return "BOOL";
    case SemType::Kind::Carrier: return t->carrier;
    case SemType::Kind::Pow: return "POW(" + typeToString(t->left) + ")";
    case SemType::Kind::Pair:
      return "(" + typeToString(t->left) + " x " + typeToString(t->right) + ")";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Node factories
// ---------------------------------------------------------------------------

ExprPtr mkIntLit(long long v) {
  auto e = std::make_shared<Expr>();
  e->tag = ExprTag::IntLit;
  e->intVal = v;
  return e;
}

ExprPtr mkBoolLit(bool v) {
  auto e = std::make_shared<Expr>();
  e->tag = ExprTag::BoolLit;
  e->boolVal = v;
  return e;
}

ExprPtr mkIdent(const Ident& id) {
  auto e = std::make_shared<Expr>();
  e->tag = ExprTag::IdentRef;
  e->ident = id;
  return e;
}

ExprPtr mkUnary(ExprTag t, ExprPtr a) {
  auto e = std::make_shared<Expr>();
  e->tag = t;
  e->kids.push_back(std::move(a));
  return e;
}

ExprPtr mkBinary(ExprTag t, ExprPtr a, ExprPtr b) {
  auto e = std::make_shared<Expr>();
  e->tag = t;
  e->kids.push_back(std::move(a));
  e->kids.push_back(std::move(b));
  return e;
}

ExprPtr mkSetLit(std::vector<ExprPtr> elems) {
  auto e = std::make_shared<Expr>();
  e->tag = ExprTag::SetLit;
  e->kids = std::move(elems);
  return e;
}

ExprPtr mkNullary(ExprTag t) {
  auto e = std::make_shared<Expr>();
  e->tag = t;
  return e;
}

PredPtr mkTruth() {
  static const PredPtr p = std::make_shared<Pred>(Pred{PredTag::Truth, {}, {}, {}});
  return p;
}

PredPtr mkFalsity() {
  static const PredPtr p = std::make_shared<Pred>(Pred{PredTag::Falsity, {}, {}, {}});
  return p;
}

PredPtr mkNot(PredPtr p) {
  auto r = std::make_shared<Pred>();
  r->tag = PredTag::Not;
  r->preds.push_back(std::move(p));
  return r;
}

PredPtr mkConn(PredTag t, PredPtr a, PredPtr b) {
  auto r = std::make_shared<Pred>();
  r->tag = t;
  r->preds.push_back(std::move(a));
  r->preds.push_back(std::move(b));
  return r;
}

PredPtr mkCompare(PredTag t, ExprPtr a, ExprPtr b) {
  auto r = std::make_shared<Pred>();
  r->tag = t;
  r->exprs.push_back(std::move(a));
  r->exprs.push_back(std::move(b));
  return r;
}

PredPtr mkFinite(ExprPtr s) {
  auto r = std::make_shared<Pred>();
  r->tag = PredTag::Finite;
  r->exprs.push_back(std::move(s));
  return r;
}

PredPtr mkQuant(PredTag t, std::vector<Ident> binders, PredPtr body) {
  auto r = std::make_shared<Pred>();
  r->tag = t;
  r->binders = std::move(binders);
  r->preds.push_back(std::move(body));
  return r;
}

PredPtr conjoin(const std::vector<PredPtr>& ps) {
  if (ps.empty()) return mkTruth();
  PredPtr acc = ps.back();
  for (auto it = ps.rbegin() + 1; it != ps.rend(); ++it) {
    acc = mkConn(PredTag::And, *it, acc);
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Structural comparison
// ---------------------------------------------------------------------------

static int cmp3(long long a, long long b) { return a < b ? -1 : (a > b ? 1 : 0); }

static int cmpIdent(const Ident& a, const Ident& b) {
  if (int c = a.name.compare(b.name)) return c < 0 ? -1 : 1;
  return cmp3(static_cast<int>(a.space), static_cast<int>(b.space));
}

int structCompare(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return 0;
  if (!a) return -1;
  if (!b) return 1;
  if (int c = cmp3(static_cast<int>(a->tag), static_cast<int>(b->tag))) return c;
  switch (a->tag) {
    case ExprTag::IntLit:
      if (int c = cmp3(a->intVal, b->intVal)) return c;
      break;
    case ExprTag::BoolLit:
      if (int c = cmp3(a->boolVal ? 1 : 0, b->boolVal ? 1 : 0)) return c;
      break;
    case ExprTag::IdentRef:
      if (int c = cmpIdent(a->ident, b->ident)) return c;
      break;
    default:
      break;
  }
  if (int c = cmp3(static_cast<long long>(a->kids.size()),
                   static_cast<long long>(b->kids.size()))) {
    return c;
  }
  for (size_t i = 0; i < a->kids.size(); ++i) {
    if (int c = structCompare(a->kids[i], b->kids[i])) return c;
  }
  return 0;
}

int structCompare(const PredPtr& a, const PredPtr& b) {
  if (a == b) return 0;
  if (!a) return -1;
  if (!b) return 1;
  if (int c = cmp3(static_cast<int>(a->tag), static_cast<int>(b->tag))) return c;
  if (int c = cmp3(static_cast<long long>(a->binders.size()),
                   static_cast<long long>(b->binders.size()))) {
    return c;
  }
  for (size_t i = 0; i < a->binders.size(); ++i) {
    if (int c = cmpIdent(a->binders[i], b->binders[i])) return c;
  }
  if (int c = cmp3(static_cast<long long>(a->exprs.size()),
                   static_cast<long long>(b->exprs.size()))) {
    return c;
  }
  for (size_t i = 0; i < a->exprs.size(); ++i) {
    if (int c = structCompare(a->exprs[i], b->exprs[i])) return c;
  }
  if (int c = cmp3(static_cast<long long>(a->preds.size()),
                   static_cast<long long>(b->preds.size()))) {
    return c;
  }
  for (size_t i = 0; i < a->preds.size(); ++i) {
    if (int c = structCompare(a->preds[i], b->preds[i])) return c;
  }
  return 0;
}

bool structEqual(const ExprPtr& a, const ExprPtr& b) { return structCompare(a, b) == 0; }
bool structEqual(const PredPtr& a, const PredPtr& b) { return structCompare(a, b) == 0; }

// ---------------------------------------------------------------------------
// Development helpers
// ---------------------------------------------------------------------------

const Context* Development::findContext(const std::string& name) const {
  for (const auto& c : contexts)
    if (c.name == name) return &c;
  return nullptr;
}

const Machine* Development::findMachine(const std::string& name) const {
  for (const auto& m : machines)
    if (m.name == name) return &m;
  return nullptr;
}

Context* Development::findContext(const std::string& name) {
  for (auto& c : contexts)
    if (c.name == name) return &c;
  return nullptr;
}

Machine* Development::findMachine(const std::string& name) {
  for (auto& m : machines)
    if (m.name == name) return &m;
  return nullptr;
}

std::vector<const Context*> Development::contextClosure(const Machine& m) const {
  std::vector<const Context*> out;
  if (!m.seesName) return out;
  const Context* c = findContext(*m.seesName);
  size_t guard = 0;
  while (c && guard++ <= contexts.size()) {
    if (std::find(out.begin(), out.end(), c) != out.end()) break;  // cycle
    out.push_back(c);
    c = c->extendsName ? findContext(*c->extendsName) : nullptr;
  }
  return out;
}

std::vector<const Machine*> Development::ancestry(const Machine& m) const {
  std::vector<const Machine*> out;
  const Machine* cur = m.refinesName ? findMachine(*m.refinesName) : nullptr;
  size_t guard = 0;
  while (cur && guard++ <= machines.size()) {
    if (std::find(out.begin(), out.end(), cur) != out.end()) break;  // cycle
    out.push_back(cur);
    cur = cur->refinesName ? findMachine(*cur->refinesName) : nullptr;
  }
  return out;
}

std::vector<RequirementTag> requirementTags(const Development& d) {
  std::vector<RequirementTag> out;
  auto addLabeled = [&](const std::vector<Labeled>& ls) {
    for (const auto& l : ls) {
      if (!l.requirements.empty()) out.push_back({l.label.name, l.requirements});
    }
  };
  for (const auto& c : d.contexts) {
    addLabeled(c.axioms);
    addLabeled(c.theorems);
  }
  for (const auto& m : d.machines) {
    addLabeled(m.invariants);
    addLabeled(m.theorems);
    for (const auto& e : m.events) {
      if (!e.requirements.empty()) out.push_back({e.name.name, e.requirements});
      addLabeled(e.guards);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Free variables
// ---------------------------------------------------------------------------

static void freeVarsInto(const ExprPtr& e, std::set<Ident>& out) {
  if (!e) return;
  if (e->tag == ExprTag::IdentRef) {
    out.insert(e->ident);
    return;
  }
  for (const auto& k : e->kids) freeVarsInto(k, out);
}

static void freeVarsInto(const PredPtr& p, std::set<Ident>& out) {
  if (!p) return;
  if (p->tag == PredTag::Forall || p->tag == PredTag::Exists) {
    std::set<Ident> inner;
    freeVarsInto(p->preds[0], inner);
    for (const auto& b : p->binders) inner.erase(b);
    out.insert(inner.begin(), inner.end());
    return;
  }
  for (const auto& e : p->exprs) freeVarsInto(e, out);
  for (const auto& q : p->preds) freeVarsInto(q, out);
}

std::set<Ident> freeVars(const ExprPtr& e) {
  std::set<Ident> out;
  freeVarsInto(e, out);
  return out;
}

std::set<Ident> freeVars(const PredPtr& p) {
  std::set<Ident> out;
  freeVarsInto(p, out);
  return out;
}

// ---------------------------------------------------------------------------
// Substitution
// ---------------------------------------------------------------------------

ExprPtr substitute(const ExprPtr& e, const std::map<Ident, ExprPtr>& sub) {
  if (!e || sub.empty()) return e;
  if (e->tag == ExprTag::IdentRef) {
    auto it = sub.find(e->ident);
    return it != sub.end() ? it->second : e;
  }
  if (e->kids.empty()) return e;
  bool changed = false;
  std::vector<ExprPtr> kids;
  kids.reserve(e->kids.size());
  for (const auto& k : e->kids) {
    ExprPtr nk = substitute(k, sub);
    changed = changed || nk != k;
    kids.push_back(std::move(nk));
  }
  if (!changed) return e;
  auto r = std::make_shared<Expr>(*e);
  r->kids = std::move(kids);
  return r;
}

// Name collisions are checked across spaces: rendered text drops the space,
// so a fresh binder must differ from everything in scope by name alone.
static bool nameUsed(const std::string& n, const std::set<Ident>& s) {
  for (const auto& id : s)
    if (id.name == n) return true;
  return false;
}

PredPtr substitute(const PredPtr& p, const std::map<Ident, ExprPtr>& sub) {
  if (!p || sub.empty()) return p;
  if (p->tag == PredTag::Forall || p->tag == PredTag::Exists) {
    // Drop mappings shadowed by binders.
    std::map<Ident, ExprPtr> inner = sub;
    for (const auto& b : p->binders) inner.erase(b);

    // Collect names that a renamed binder must avoid.
    std::set<Ident> avoid = freeVars(p->preds[0]);
    for (const auto& [from, to] : inner) {
      (void)from;
      auto fv = freeVars(to);
      avoid.insert(fv.begin(), fv.end());
    }

    std::vector<Ident> binders = p->binders;
    bool renamed = false;
    for (auto& b : binders) {
      bool captured = false;
      for (const auto& [from, to] : inner) {
        auto fv = freeVars(to);
        if (freeVars(p->preds[0]).count(from) && nameUsed(b.name, fv)) {
          captured = true;
          break;
        }
      }
      if (!captured) continue;
      int suffix = 0;
      std::string fresh;
      do {
        fresh = b.name + std::to_string(suffix++);
      } while (nameUsed(fresh, avoid));
      Ident nb(fresh, b.space);
      inner[b] = mkIdent(nb);
      avoid.insert(nb);
      b = nb;
      renamed = true;
    }

    PredPtr body = substitute(p->preds[0], inner);
    if (!renamed && body == p->preds[0]) return p;
    return mkQuant(p->tag, std::move(binders), std::move(body));
  }

  bool changed = false;
  std::vector<ExprPtr> exprs;
  exprs.reserve(p->exprs.size());
  for (const auto& e : p->exprs) {
    ExprPtr ne = substitute(e, sub);
    changed = changed || ne != e;
    exprs.push_back(std::move(ne));
  }
  std::vector<PredPtr> preds;
  preds.reserve(p->preds.size());
  for (const auto& q : p->preds) {
    PredPtr nq = substitute(q, sub);
    changed = changed || nq != q;
    preds.push_back(std::move(nq));
  }
  if (!changed) return p;
  auto r = std::make_shared<Pred>(*p);
  r->exprs = std::move(exprs);
  r->preds = std::move(preds);
  return r;
}

// ---------------------------------------------------------------------------
// Before-after predicates
// ---------------------------------------------------------------------------

std::vector<Ident> assignedVars(const Event& e) {
  std::vector<Ident> out;
  for (const auto& a : e.actions) {
    for (const auto& v : a.vars) {
      if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
    }
  }
  return out;
}

PredPtr beforeAfter(const Event& e, const std::vector<Ident>& machineVars) {
  std::set<Ident> assigned;
  std::vector<PredPtr> conjuncts;
  for (const auto& a : e.actions) {
    for (const auto& v : a.vars) {
      if (!assigned.insert(v).second) {
        throw ConflictingAssignment("event '" + e.name.name + "': variable '" + v.name +
                                    "' assigned more than once");
      }
    }
    switch (a.form) {
      case ActionForm::Det:
        conjuncts.push_back(mkCompare(PredTag::Equal, mkIdent(primed(a.vars[0])), a.expr));
        break;
      case ActionForm::In:
        conjuncts.push_back(mkCompare(PredTag::Member, mkIdent(primed(a.vars[0])), a.expr));
        break;
      case ActionForm::Such:
        conjuncts.push_back(a.pred);
        break;
    }
  }
  for (const auto& v : machineVars) {
    if (!assigned.count(v)) {
      conjuncts.push_back(mkCompare(PredTag::Equal, mkIdent(primed(v)), mkIdent(v)));
    }
  }
  return conjoin(conjuncts);
}

}  // namespace ebforge::ast
