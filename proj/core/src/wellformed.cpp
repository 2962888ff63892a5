#include <algorithm>
#include <cassert>

#include "ebforge/frontend.hpp"
#include "internal.hpp"

namespace ebforge::frontend {

using namespace ebforge::ast;

// ---------------------------------------------------------------------------
// Identifier space resolution
// ---------------------------------------------------------------------------

namespace {

using SpaceTable = std::map<std::string, Space>;

ExprPtr resolveExpr(const ExprPtr& e, const SpaceTable& table,
                    std::set<std::string>& shadow) {
  if (!e) return e;
  if (e->tag == ExprTag::IdentRef) {
    const Ident& id = e->ident;
    if (isPrimed(id) || shadow.count(id.name)) return e;
    auto it = table.find(id.name);
    if (it == table.end() || it->second == id.space) return e;
    return mkIdent(Ident(id.name, it->second));
  }
  if (e->kids.empty()) return e;
  bool changed = false;
  std::vector<ExprPtr> kids;
  kids.reserve(e->kids.size());
  for (const auto& k : e->kids) {
    ExprPtr nk = resolveExpr(k, table, shadow);
    changed = changed || nk != k;
    kids.push_back(std::move(nk));
  }
  if (!changed) return e;
  auto r = std::make_shared<Expr>(*e);
  r->kids = std::move(kids);
  return r;
}

PredPtr resolvePred(const PredPtr& p, const SpaceTable& table,
                    std::set<std::string>& shadow) {
  if (!p) return p;
  if (p->tag == PredTag::Forall || p->tag == PredTag::Exists) {
    std::vector<std::string> added;
    for (const auto& b : p->binders) {
      if (shadow.insert(b.name).second) added.push_back(b.name);
    }
    PredPtr body = resolvePred(p->preds[0], table, shadow);
    for (const auto& n : added) shadow.erase(n);
    if (body == p->preds[0]) return p;
    return mkQuant(p->tag, p->binders, std::move(body));
  }
  bool changed = false;
  std::vector<ExprPtr> exprs;
  exprs.reserve(p->exprs.size());
  for (const auto& e : p->exprs) {
    ExprPtr ne = resolveExpr(e, table, shadow);
    changed = changed || ne != e;
    exprs.push_back(std::move(ne));
  }
  std::vector<PredPtr> preds;
  preds.reserve(p->preds.size());
  for (const auto& q : p->preds) {
    PredPtr nq = resolvePred(q, table, shadow);
    changed = changed || nq != q;
    preds.push_back(std::move(nq));
  }
  if (!changed) return p;
  auto r = std::make_shared<Pred>(*p);
  r->exprs = std::move(exprs);
  r->preds = std::move(preds);
  return r;
}

void resolveLabeled(std::vector<Labeled>& ls, const SpaceTable& table) {
  std::set<std::string> shadow;
  for (auto& l : ls) l.pred = resolvePred(l.pred, table, shadow);
}

SpaceTable contextTable(const Development& d, const Context& c) {
  SpaceTable t;
  const Context* cur = &c;
  size_t guard = 0;
  while (cur && guard++ <= d.contexts.size()) {
    for (const auto& s : cur->sets) t[s.name] = Space::CarrierSet;
    for (const auto& k : cur->constants) t[k.name] = Space::Constant;
    cur = cur->extendsName ? d.findContext(*cur->extendsName) : nullptr;
  }
  return t;
}

SpaceTable machineTable(const Development& d, const Machine& m) {
  SpaceTable t;
  for (const Context* c : d.contextClosure(m)) {
    for (const auto& s : c->sets) t[s.name] = Space::CarrierSet;
    for (const auto& k : c->constants) t[k.name] = Space::Constant;
  }
  for (const Machine* a : d.ancestry(m)) {
    for (const auto& v : a->variables) t[v.name] = Space::Variable;
  }
  for (const auto& v : m.variables) t[v.name] = Space::Variable;
  return t;
}

}  // namespace

void resolveSpaces(Development& d) {
  for (auto& c : d.contexts) {
    SpaceTable t = contextTable(d, c);
    resolveLabeled(c.axioms, t);
    resolveLabeled(c.theorems, t);
  }
  for (auto& m : d.machines) {
    SpaceTable t = machineTable(d, m);
    resolveLabeled(m.invariants, t);
    resolveLabeled(m.theorems, t);
    std::set<std::string> shadow;
    for (auto& v : m.variants) v = resolveExpr(v, t, shadow);
    for (auto& ev : m.events) {
      SpaceTable et = t;
      for (const auto& p : ev.params) et[p.name] = Space::Parameter;
      resolveLabeled(ev.guards, et);
      for (auto& a : ev.actions) {
        std::set<std::string> sh;
        if (a.expr) a.expr = resolveExpr(a.expr, et, sh);
        if (a.pred) a.pred = resolvePred(a.pred, et, sh);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Type solver: unification over Int | Bool | Carrier | Pow | Pair
// ---------------------------------------------------------------------------

namespace {

class TypeSolver {
 public:
  enum Kind { KVar, KInt, KBool, KCarrier, KPow, KPair };

  struct Node {
    Kind kind;
    int bound = -1;      // KVar: node this var is bound to, -1 if free
    std::string carrier;
    int a = -1, b = -1;  // children for KPow / KPair
  };

  int fresh() {
    nodes_.push_back({KVar});
    return static_cast<int>(nodes_.size()) - 1;
  }
  int mk(Kind k) {
    nodes_.push_back({k});
    return static_cast<int>(nodes_.size()) - 1;
  }
  int mkCarrier(const std::string& name) {
    nodes_.push_back({KCarrier, -1, name});
    return static_cast<int>(nodes_.size()) - 1;
  }
  int mkPow(int elem) {
    nodes_.push_back({KPow, -1, "", elem});
    return static_cast<int>(nodes_.size()) - 1;
  }
  int mkPair(int a, int b) {
    nodes_.push_back({KPair, -1, "", a, b});
    return static_cast<int>(nodes_.size()) - 1;
  }

  int find(int n) {
    while (nodes_[n].kind == KVar && nodes_[n].bound >= 0) n = nodes_[n].bound;
    return n;
  }

  bool occurs(int var, int n) {
    n = find(n);
    if (n == var) return true;
    const Node& nd = nodes_[n];
    if (nd.kind == KPow) return occurs(var, nd.a);
    if (nd.kind == KPair) return occurs(var, nd.a) || occurs(var, nd.b);
    return false;
  }

  bool unify(int x, int y) {
    x = find(x);
    y = find(y);
    if (x == y) return true;
    if (nodes_[x].kind == KVar) {
      if (occurs(x, y)) return false;
      nodes_[x].bound = y;
      return true;
    }
    if (nodes_[y].kind == KVar) return unify(y, x);
    if (nodes_[x].kind != nodes_[y].kind) return false;
    switch (nodes_[x].kind) {
      case KInt:
      case KBool: return true;
      case KCarrier: return nodes_[x].carrier == nodes_[y].carrier;
      case KPow: return unify(nodes_[x].a, nodes_[y].a);
      case KPair: return unify(nodes_[x].a, nodes_[y].a) && unify(nodes_[x].b, nodes_[y].b);
      default: return false;
    }
  }

  // Ground SemType of a node, or nullptr if the node is still open.
  SemTypePtr resolve(int n) {
    n = find(n);
    const Node& nd = nodes_[n];
    switch (nd.kind) {
      case KVar: return nullptr;
      case KInt: return SemType::intType();
      case KBool: return SemType::boolType();
      case KCarrier: return SemType::carrierType(nd.carrier);
      case KPow: {
        auto e = resolve(nd.a);
        return e ? SemType::pow(e) : nullptr;
      }
      case KPair: {
        auto a = resolve(nd.a);
        auto b = resolve(nd.b);
        return a && b ? SemType::pair(a, b) : nullptr;
      }
    }
    return nullptr;
  }

 private:
  std::vector<Node> nodes_;
};

// Generates typing constraints for one scope unit (a context closure or a
// machine with its visible hypotheses).
struct TypeUnit {
  TypeSolver solver;
  std::map<Ident, int> vars;  // identifier -> type node
  std::vector<Diagnostic>* diags;
  std::set<std::string> reportedPaths;

  int nodeFor(const Ident& id) {
    Ident key = id;
    if (isPrimed(key)) key = Ident(key.name, Space::Variable);
    auto it = vars.find(key);
    if (it != vars.end()) return it->second;
    int n;
    if (key.space == Space::CarrierSet) {
      n = solver.mkPow(solver.mkCarrier(key.name));
    } else {
      n = solver.fresh();
    }
    vars.emplace(key, n);
    return n;
  }

  void mismatch(const std::string& path) {
    if (reportedPaths.insert(path).second) {
      diags->push_back({diag::TypeMismatch, path, "type mismatch", 0, 0});
    }
  }

  void require(int a, int b, const std::string& path) {
    if (!solver.unify(a, b)) mismatch(path);
  }

  int typeExpr(const ExprPtr& e, const std::string& path,
               std::map<std::string, int>& bound) {
    switch (e->tag) {
      case ExprTag::IntLit: return solver.mk(TypeSolver::KInt);
      case ExprTag::BoolLit: return solver.mk(TypeSolver::KBool);
      case ExprTag::IdentRef: {
        if (!isPrimed(e->ident)) {
          auto it = bound.find(e->ident.name);
          if (it != bound.end() && e->ident.space == Space::Parameter) return it->second;
        }
        return nodeFor(e->ident);
      }
      case ExprTag::Add:
      case ExprTag::Sub:
      case ExprTag::Mul:
      case ExprTag::Div: {
        int i = solver.mk(TypeSolver::KInt);
        require(typeExpr(e->kids[0], path, bound), i, path);
        require(typeExpr(e->kids[1], path, bound), solver.mk(TypeSolver::KInt), path);
        return i;
      }
      case ExprTag::Minus: {
        int i = solver.mk(TypeSolver::KInt);
        require(typeExpr(e->kids[0], path, bound), i, path);
        return i;
      }
      case ExprTag::SetLit: {
        int elem = solver.fresh();
        for (const auto& k : e->kids) {
          require(typeExpr(k, path, bound), elem, path);
        }
        return solver.mkPow(elem);
      }
      case ExprTag::Range: {
        require(typeExpr(e->kids[0], path, bound), solver.mk(TypeSolver::KInt), path);
        require(typeExpr(e->kids[1], path, bound), solver.mk(TypeSolver::KInt), path);
        return solver.mkPow(solver.mk(TypeSolver::KInt));
      }
      case ExprTag::Dom: {
        int a = solver.fresh(), b = solver.fresh();
        require(typeExpr(e->kids[0], path, bound), solver.mkPow(solver.mkPair(a, b)), path);
        return solver.mkPow(a);
      }
      case ExprTag::Ran: {
        int a = solver.fresh(), b = solver.fresh();
        require(typeExpr(e->kids[0], path, bound), solver.mkPow(solver.mkPair(a, b)), path);
        return solver.mkPow(b);
      }
      case ExprTag::Image: {
        int a = solver.fresh(), b = solver.fresh();
        require(typeExpr(e->kids[0], path, bound), solver.mkPow(solver.mkPair(a, b)), path);
        require(typeExpr(e->kids[1], path, bound), solver.mkPow(a), path);
        return solver.mkPow(b);
      }
      case ExprTag::Apply: {
        int a = solver.fresh(), b = solver.fresh();
        require(typeExpr(e->kids[0], path, bound), solver.mkPow(solver.mkPair(a, b)), path);
        require(typeExpr(e->kids[1], path, bound), a, path);
        return b;
      }
      case ExprTag::MinOf:
      case ExprTag::MaxOf: {
        require(typeExpr(e->kids[0], path, bound),
                solver.mkPow(solver.mk(TypeSolver::KInt)), path);
        return solver.mk(TypeSolver::KInt);
      }
      case ExprTag::Card: {
        require(typeExpr(e->kids[0], path, bound), solver.mkPow(solver.fresh()), path);
        return solver.mk(TypeSolver::KInt);
      }
      case ExprTag::Union:
      case ExprTag::Inter:
      case ExprTag::SetMinus: {
        int s = solver.mkPow(solver.fresh());
        require(typeExpr(e->kids[0], path, bound), s, path);
        require(typeExpr(e->kids[1], path, bound), s, path);
        return s;
      }
      case ExprTag::Maplet:
        return solver.mkPair(typeExpr(e->kids[0], path, bound),
                             typeExpr(e->kids[1], path, bound));
      case ExprTag::TotalFun:
      case ExprTag::PartialFun: {
        int a = solver.fresh(), b = solver.fresh();
        require(typeExpr(e->kids[0], path, bound), solver.mkPow(a), path);
        require(typeExpr(e->kids[1], path, bound), solver.mkPow(b), path);
        return solver.mkPow(solver.mkPow(solver.mkPair(a, b)));
      }
      case ExprTag::EmptySet: return solver.mkPow(solver.fresh());
      case ExprTag::Naturals:
      case ExprTag::Integers: return solver.mkPow(solver.mk(TypeSolver::KInt));
    }
    return solver.fresh();
  }

  void typePred(const PredPtr& p, const std::string& path,
                std::map<std::string, int>& bound) {
    switch (p->tag) {
      case PredTag::Truth:
      case PredTag::Falsity: return;
      case PredTag::Not:
      case PredTag::And:
      case PredTag::Or:
      case PredTag::Implies:
      case PredTag::Iff:
        for (const auto& q : p->preds) typePred(q, path, bound);
        return;
      case PredTag::Equal:
      case PredTag::NotEqual:
        require(typeExpr(p->exprs[0], path, bound), typeExpr(p->exprs[1], path, bound),
                path);
        return;
      case PredTag::Lt:
      case PredTag::Leq:
      case PredTag::Gt:
      case PredTag::Geq:
        require(typeExpr(p->exprs[0], path, bound), solver.mk(TypeSolver::KInt), path);
        require(typeExpr(p->exprs[1], path, bound), solver.mk(TypeSolver::KInt), path);
        return;
      case PredTag::Member:
      case PredTag::NotMember:
        require(typeExpr(p->exprs[1], path, bound),
                solver.mkPow(typeExpr(p->exprs[0], path, bound)), path);
        return;
      case PredTag::Subset: {
        int s = solver.mkPow(solver.fresh());
        require(typeExpr(p->exprs[0], path, bound), s, path);
        require(typeExpr(p->exprs[1], path, bound), s, path);
        return;
      }
      case PredTag::Finite:
        require(typeExpr(p->exprs[0], path, bound), solver.mkPow(solver.fresh()), path);
        return;
      case PredTag::Forall:
      case PredTag::Exists: {
        std::map<std::string, int> inner = bound;
        for (const auto& b : p->binders) inner[b.name] = solver.fresh();
        typePred(p->preds[0], path, inner);
        return;
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Well-formedness checks
// ---------------------------------------------------------------------------

struct Checker {
  const Development& d;
  std::vector<Diagnostic> diags;
  TypeEnv env;

  void emit(const char* code, const std::string& path, const std::string& msg) {
    diags.push_back({code, path, msg, 0, 0});
  }

  // --- structural / link checks ----------------------------------------

  void checkNames() {
    std::set<std::string> names;
    for (const auto& c : d.contexts) {
      if (!isValidIdentName(c.name)) {
        emit(diag::SchemaViolation, c.name, "invalid context name");
      }
      if (!names.insert(c.name).second) {
        emit(diag::DuplicateIdent, c.name, "duplicate component name '" + c.name + "'");
      }
    }
    for (const auto& m : d.machines) {
      if (!isValidIdentName(m.name)) {
        emit(diag::SchemaViolation, m.name, "invalid machine name");
      }
      if (!names.insert(m.name).second) {
        emit(diag::DuplicateIdent, m.name, "duplicate component name '" + m.name + "'");
      }
    }
  }

  void checkLinks() {
    for (const auto& c : d.contexts) {
      if (c.extendsName && !d.findContext(*c.extendsName)) {
        emit(diag::BadLink, c.name, "extends unknown context '" + *c.extendsName + "'");
      }
    }
    // extends cycles
    for (const auto& c : d.contexts) {
      std::set<const Context*> seen;
      const Context* cur = &c;
      while (cur && cur->extendsName) {
        const Context* nxt = d.findContext(*cur->extendsName);
        if (!nxt) break;
        if (!seen.insert(nxt).second) {
          emit(diag::BadLink, c.name, "extends cycle through '" + nxt->name + "'");
          break;
        }
        cur = nxt;
      }
    }
    for (const auto& m : d.machines) {
      if (m.seesName && !d.findContext(*m.seesName)) {
        emit(diag::BadLink, m.name, "sees unknown context '" + *m.seesName + "'");
      }
      if (m.refinesName && !d.findMachine(*m.refinesName)) {
        emit(diag::BadLink, m.name, "refines unknown machine '" + *m.refinesName + "'");
      }
      std::set<const Machine*> seen;
      const Machine* cur = &m;
      while (cur && cur->refinesName) {
        const Machine* nxt = d.findMachine(*cur->refinesName);
        if (!nxt) break;
        if (nxt == &m || !seen.insert(nxt).second) {
          emit(diag::BadLink, m.name, "refinement cycle through '" + nxt->name + "'");
          break;
        }
        cur = nxt;
      }
      const Machine* abs = m.refinesName ? d.findMachine(*m.refinesName) : nullptr;
      for (const auto& ev : m.events) {
        std::string path = m.name + "/events/" + ev.name.name;
        if (ev.refinesEvent) {
          if (!abs) {
            emit(diag::BadLink, path, "refines an event but machine refines nothing");
          } else {
            bool found = false;
            for (const auto& ae : abs->events) {
              if (ae.name.name == *ev.refinesEvent) found = true;
            }
            if (!found) {
              emit(diag::BadLink, path,
                   "refines unknown event '" + *ev.refinesEvent + "'");
            }
          }
        }
      }
    }
  }

  void checkLabels() {
    for (const auto& c : d.contexts) {
      std::set<std::string> seen;
      for (const auto& l : c.axioms) {
        if (!seen.insert(l.label.name).second) {
          emit(diag::DuplicateLabel, c.name + "/axioms/" + l.label.name,
               "duplicate label");
        }
      }
      for (const auto& l : c.theorems) {
        if (!seen.insert(l.label.name).second) {
          emit(diag::DuplicateLabel, c.name + "/theorems/" + l.label.name,
               "duplicate label");
        }
      }
    }
    for (const auto& m : d.machines) {
      std::set<std::string> seen;
      for (const auto& l : m.invariants) {
        if (!seen.insert(l.label.name).second) {
          emit(diag::DuplicateLabel, m.name + "/invariants/" + l.label.name,
               "duplicate label");
        }
      }
      for (const auto& l : m.theorems) {
        if (!seen.insert(l.label.name).second) {
          emit(diag::DuplicateLabel, m.name + "/theorems/" + l.label.name,
               "duplicate label");
        }
      }
      std::set<std::string> evNames;
      for (const auto& ev : m.events) {
        std::string path = m.name + "/events/" + ev.name.name;
        if (!evNames.insert(ev.name.name).second) {
          emit(diag::DuplicateLabel, path, "duplicate event name");
        }
        std::set<std::string> elabels;
        for (const auto& g : ev.guards) {
          if (!elabels.insert(g.label.name).second) {
            emit(diag::DuplicateLabel, path + "/guards/" + g.label.name,
                 "duplicate label");
          }
        }
        for (const auto& a : ev.actions) {
          if (!elabels.insert(a.label.name).second) {
            emit(diag::DuplicateLabel, path + "/actions/" + a.label.name,
                 "duplicate label");
          }
        }
      }
      if (m.variants.size() > 1) {
        emit(diag::BadVariant, m.name + "/variant", "more than one variant");
      }
    }
  }

  void checkIdentClashes() {
    for (const auto& c : d.contexts) {
      std::set<std::string> seen;
      for (const auto& s : c.sets) {
        if (!seen.insert(s.name).second) {
          emit(diag::DuplicateIdent, c.name + "/" + s.name, "duplicate declaration");
        }
      }
      for (const auto& k : c.constants) {
        if (!seen.insert(k.name).second) {
          emit(diag::DuplicateIdent, c.name + "/" + k.name, "duplicate declaration");
        }
      }
    }
    for (const auto& m : d.machines) {
      std::set<std::string> fromContexts;
      for (const Context* c : d.contextClosure(m)) {
        for (const auto& s : c->sets) fromContexts.insert(s.name);
        for (const auto& k : c->constants) fromContexts.insert(k.name);
      }
      std::set<std::string> ownVars;
      for (const auto& v : m.variables) {
        if (fromContexts.count(v.name)) {
          emit(diag::DuplicateIdent, m.name + "/" + v.name,
               "variable shadows a seen constant or set");
        }
        if (!ownVars.insert(v.name).second) {
          emit(diag::DuplicateIdent, m.name + "/" + v.name, "duplicate variable");
        }
      }
      for (const auto& ev : m.events) {
        std::set<std::string> params;
        for (const auto& p : ev.params) {
          std::string path = m.name + "/events/" + ev.name.name + "/" + p.name;
          if (!params.insert(p.name).second) {
            emit(diag::DuplicateIdent, path, "duplicate parameter");
          }
          if (ownVars.count(p.name) || fromContexts.count(p.name)) {
            emit(diag::DuplicateIdent, path, "parameter shadows a declaration");
          }
        }
      }
    }
  }

  // --- identifier usage --------------------------------------------------

  // Declared names visible to machine formulas (variables include ancestry).
  std::map<std::string, Space> visibleIn(const Machine& m) const {
    std::map<std::string, Space> t;
    for (const Context* c : d.contextClosure(m)) {
      for (const auto& s : c->sets) t[s.name] = Space::CarrierSet;
      for (const auto& k : c->constants) t[k.name] = Space::Constant;
    }
    for (const Machine* a : d.ancestry(m)) {
      for (const auto& v : a->variables) t[v.name] = Space::Variable;
    }
    for (const auto& v : m.variables) t[v.name] = Space::Variable;
    return t;
  }

  void checkFormulaIdents(const PredPtr& p, const std::map<std::string, Space>& table,
                          const std::set<std::string>& extra,
                          const std::string& path) {
    for (const auto& id : freeVars(p)) {
      if (isPrimed(id)) continue;  // checked per action
      if (id.space == Space::Parameter) {
        if (!extra.count(id.name)) {
          emit(diag::UndeclaredIdent, path, "undeclared identifier '" + id.name + "'");
        }
        continue;
      }
      if (!table.count(id.name)) {
        emit(diag::UndeclaredIdent, path, "undeclared identifier '" + id.name + "'");
      }
    }
  }

  void checkContextFormulas(const Context& c) {
    std::map<std::string, Space> table;
    const Context* cur = &c;
    size_t guard = 0;
    while (cur && guard++ <= d.contexts.size()) {
      for (const auto& s : cur->sets) table[s.name] = Space::CarrierSet;
      for (const auto& k : cur->constants) table[k.name] = Space::Constant;
      cur = cur->extendsName ? d.findContext(*cur->extendsName) : nullptr;
    }
    for (const auto& l : c.axioms) {
      checkFormulaIdents(l.pred, table, {}, c.name + "/axioms/" + l.label.name);
    }
    for (const auto& l : c.theorems) {
      checkFormulaIdents(l.pred, table, {}, c.name + "/theorems/" + l.label.name);
    }
  }

  void checkMachineFormulas(const Machine& m) {
    auto table = visibleIn(m);
    std::set<std::string> ownVars;
    for (const auto& v : m.variables) ownVars.insert(v.name);

    for (const auto& l : m.invariants) {
      checkFormulaIdents(l.pred, table, {}, m.name + "/invariants/" + l.label.name);
    }
    for (const auto& l : m.theorems) {
      checkFormulaIdents(l.pred, table, {}, m.name + "/theorems/" + l.label.name);
    }
    for (const auto& v : m.variants) {
      std::string path = m.name + "/variant";
      for (const auto& id : freeVars(v)) {
        if (!table.count(id.name)) {
          emit(diag::UndeclaredIdent, path, "undeclared identifier '" + id.name + "'");
        } else if (id.space == Space::Variable && !ownVars.count(id.name)) {
          emit(diag::ScopeViolation, path,
               "variant uses abstract variable '" + id.name + "'");
        }
      }
    }

    for (const auto& ev : m.events) {
      std::string epath = m.name + "/events/" + ev.name.name;
      std::set<std::string> params;
      for (const auto& p : ev.params) params.insert(p.name);

      auto checkStateRefs = [&](const std::set<Ident>& ids, const std::string& path,
                                bool allowPlainVars) {
        for (const auto& id : ids) {
          if (isPrimed(id)) continue;
          if (id.space == Space::Parameter) {
            if (!params.count(id.name)) {
              emit(diag::UndeclaredIdent, path,
                   "undeclared identifier '" + id.name + "'");
            }
            continue;
          }
          if (!table.count(id.name)) {
            emit(diag::UndeclaredIdent, path, "undeclared identifier '" + id.name + "'");
            continue;
          }
          if (id.space == Space::Variable) {
            if (!ownVars.count(id.name)) {
              emit(diag::ScopeViolation, path,
                   "uses variable '" + id.name + "' not declared in this machine");
            } else if (!allowPlainVars) {
              emit(diag::ScopeViolation, path,
                   "INITIALISATION reads variable '" + id.name + "'");
            }
          }
        }
      };

      bool isInit = ev.name.name == "INITIALISATION";
      for (const auto& g : ev.guards) {
        checkStateRefs(freeVars(g.pred), epath + "/guards/" + g.label.name, !isInit);
      }

      std::set<std::string> assigned;
      for (const auto& a : ev.actions) {
        std::string apath = epath + "/actions/" + a.label.name;
        for (const auto& v : a.vars) {
          if (!ownVars.count(v.name)) {
            emit(diag::ScopeViolation, apath,
                 "assigns '" + v.name + "' which is not a variable of this machine");
          }
          if (!assigned.insert(v.name).second) {
            emit(diag::ConflictingAssignment, apath,
                 "variable '" + v.name + "' assigned more than once");
          }
        }
        std::set<Ident> ids;
        if (a.expr) ids = freeVars(a.expr);
        if (a.pred) ids = freeVars(a.pred);
        checkStateRefs(ids, apath, !isInit);
        // Primed identifiers may only name variables this action assigns.
        std::set<std::string> actionVars;
        for (const auto& v : a.vars) actionVars.insert(v.name);
        for (const auto& id : ids) {
          if (isPrimed(id) && !actionVars.count(id.name)) {
            emit(diag::ScopeViolation, apath,
                 "primed identifier '" + id.name + "'' is not assigned by this action");
          }
        }
      }

      if (isInit) {
        if (!ev.guards.empty()) {
          emit(diag::SchemaViolation, epath, "INITIALISATION must not have guards");
        }
        if (!ev.params.empty()) {
          emit(diag::SchemaViolation, epath, "INITIALISATION must not have parameters");
        }
        for (const auto& v : m.variables) {
          if (!assigned.count(v.name)) {
            emit(diag::InitIncomplete, epath,
                 "INITIALISATION does not assign variable '" + v.name + "'");
          }
        }
      }
    }

    int initCount = 0;
    for (const auto& ev : m.events) {
      if (ev.name.name == "INITIALISATION") ++initCount;
    }
    if (initCount != 1) {
      emit(diag::InitMissing, m.name, "machine needs exactly one INITIALISATION event");
    }
  }

  // --- typing ------------------------------------------------------------

  void typeContext(const Context& c) {
    TypeUnit unit;
    unit.diags = &diags;
    std::map<std::string, int> bound;
    const Context* cur = &c;
    size_t guard = 0;
    while (cur && guard++ <= d.contexts.size()) {
      for (const auto& l : cur->axioms) {
        unit.typePred(l.pred, c.name + "/axioms/" + l.label.name, bound);
      }
      for (const auto& l : cur->theorems) {
        unit.typePred(l.pred, c.name + "/theorems/" + l.label.name, bound);
      }
      cur = cur->extendsName ? d.findContext(*cur->extendsName) : nullptr;
    }
    TypeScope scope;
    for (const auto& [id, node] : unit.vars) {
      if (id.space != Space::Constant && id.space != Space::CarrierSet) continue;
      auto t = unit.solver.resolve(node);
      if (!t) {
        emit(diag::AmbiguousType, c.name + "/" + id.name,
             "no unique type for '" + id.name + "'");
      } else {
        scope.types[id] = t;
      }
    }
    env.contexts[c.name] = std::move(scope);
  }

  void typeMachine(const Machine& m) {
    TypeUnit unit;
    unit.diags = &diags;
    std::map<std::string, int> bound;

    for (const Context* c : d.contextClosure(m)) {
      for (const auto& l : c->axioms) {
        unit.typePred(l.pred, c->name + "/axioms/" + l.label.name, bound);
      }
      for (const auto& l : c->theorems) {
        unit.typePred(l.pred, c->name + "/theorems/" + l.label.name, bound);
      }
    }
    auto ancestry = d.ancestry(m);
    for (auto it = ancestry.rbegin(); it != ancestry.rend(); ++it) {
      for (const auto& l : (*it)->invariants) {
        unit.typePred(l.pred, (*it)->name + "/invariants/" + l.label.name, bound);
      }
    }
    for (const auto& l : m.invariants) {
      unit.typePred(l.pred, m.name + "/invariants/" + l.label.name, bound);
    }
    for (const auto& l : m.theorems) {
      unit.typePred(l.pred, m.name + "/theorems/" + l.label.name, bound);
    }
    for (const auto& v : m.variants) {
      unit.require(unit.typeExpr(v, m.name + "/variant", bound),
                   unit.solver.mk(TypeSolver::KInt), m.name + "/variant");
    }

    std::map<std::string, std::map<Ident, int>> eventParamNodes;
    for (const auto& ev : m.events) {
      std::string epath = m.name + "/events/" + ev.name.name;
      std::map<std::string, int> ebound;
      std::map<Ident, int> pnodes;
      for (const auto& p : ev.params) {
        int n = unit.solver.fresh();
        ebound[p.name] = n;
        pnodes[p] = n;
      }
      for (const auto& g : ev.guards) {
        unit.typePred(g.pred, epath + "/guards/" + g.label.name, ebound);
      }
      for (const auto& a : ev.actions) {
        std::string apath = epath + "/actions/" + a.label.name;
        switch (a.form) {
          case ActionForm::Det:
            unit.require(unit.nodeFor(a.vars[0]),
                         unit.typeExpr(a.expr, apath, ebound), apath);
            break;
          case ActionForm::In:
            unit.require(unit.solver.mkPow(unit.nodeFor(a.vars[0])),
                         unit.typeExpr(a.expr, apath, ebound), apath);
            break;
          case ActionForm::Such:
            unit.typePred(a.pred, apath, ebound);
            break;
        }
      }
      eventParamNodes[ev.name.name] = std::move(pnodes);
    }

    TypeScope scope;
    auto table = visibleIn(m);
    for (const auto& [id, node] : unit.vars) {
      if (id.space == Space::Parameter) continue;
      if (!table.count(id.name)) continue;  // undeclared, reported elsewhere
      auto t = unit.solver.resolve(node);
      if (!t) {
        emit(diag::AmbiguousType, m.name + "/" + id.name,
             "no unique type for '" + id.name + "'");
      } else {
        scope.types[id] = t;
      }
    }
    env.machines[m.name] = std::move(scope);

    for (const auto& ev : m.events) {
      TypeScope ps;
      for (const auto& [id, node] : eventParamNodes[ev.name.name]) {
        auto t = unit.solver.resolve(node);
        if (!t) {
          emit(diag::AmbiguousType, m.name + "/events/" + ev.name.name + "/" + id.name,
               "no unique type for parameter '" + id.name + "'");
        } else {
          ps.types[id] = t;
        }
      }
      env.events[m.name + "/" + ev.name.name] = std::move(ps);
    }
  }

  void run() {
    checkNames();
    checkLinks();
    checkLabels();
    checkIdentClashes();
    for (const auto& c : d.contexts) checkContextFormulas(c);
    for (const auto& m : d.machines) checkMachineFormulas(m);
    for (const auto& c : d.contexts) typeContext(c);
    for (const auto& m : d.machines) typeMachine(m);
    std::sort(diags.begin(), diags.end());
    diags.erase(std::unique(diags.begin(), diags.end(),
                            [](const Diagnostic& a, const Diagnostic& b) {
                              return a.code == b.code && a.path == b.path &&
                                     a.message == b.message;
                            }),
                diags.end());
  }
};

}  // namespace

ast::SemTypePtr TypeEnv::lookup(const std::string& machine, const std::string& event,
                                const ast::Ident& id) const {
  Ident key = id;
  if (isPrimed(key)) key = Ident(key.name, Space::Variable);
  if (key.space == Space::Parameter && !event.empty()) {
    auto it = events.find(machine + "/" + event);
    if (it != events.end()) {
      if (auto t = it->second.find(key)) return t;
    }
  }
  auto it = machines.find(machine);
  if (it != machines.end()) {
    if (auto t = it->second.find(key)) return t;
  }
  return nullptr;
}

WfResult wellFormed(const Development& d) {
  Checker c{d};
  c.run();
  return {std::move(c.diags), std::move(c.env)};
}

}  // namespace ebforge::frontend
