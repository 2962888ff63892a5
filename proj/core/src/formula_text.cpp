#include <cctype>
#include <sstream>

#include "ebforge/frontend.hpp"

namespace ebforge::frontend {

using namespace ebforge::ast;

namespace {

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

struct Tok {
  enum Kind { Ident, Int, Sym, End };
  Kind kind = End;
  std::string text;
  long long val = 0;
  bool primed = false;
  size_t pos = 0;
};

const char* kSymbols[] = {
    "<=>", "-->", "+->", "|->", "=>", "<=", ">=", "<:", "/=", "/:", "/\\",
    "\\/", "..", "::", ":|", ":=", "&", "=", "<", ">", ":", "+", "-", "*",
    "/", "\\", "(", ")", "[", "]", "{", "}", ",", ".", "!", "#",
};

std::vector<Tok> lex(const std::string& s) {
  std::vector<Tok> out;
  size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    Tok t;
    t.pos = i;
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      t.kind = Tok::Int;
      t.text = s.substr(i, j - i);
      try {
        t.val = std::stoll(t.text);
      } catch (const std::out_of_range&) {
        throw FormulaError("integer literal out of range", i);
      }
      i = j;
      out.push_back(std::move(t));
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < s.size() &&
             (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) {
        ++j;
      }
      t.kind = Tok::Ident;
      t.text = s.substr(i, j - i);
      if (j < s.size() && s[j] == '\'') {
        t.primed = true;
        ++j;
      }
      i = j;
      out.push_back(std::move(t));
      continue;
    }
    bool matched = false;
    for (const char* sym : kSymbols) {
      size_t n = std::char_traits<char>::length(sym);
      if (s.compare(i, n, sym) == 0) {
        t.kind = Tok::Sym;
        t.text = sym;
        i += n;
        out.push_back(std::move(t));
        matched = true;
        break;
      }
    }
    if (!matched) {
      throw FormulaError(std::string("unexpected character '") + c + "'", i);
    }
  }
  Tok end;
  end.kind = Tok::End;
  end.pos = s.size();
  out.push_back(end);
  return out;
}

bool isReserved(const std::string& w) {
  static const std::set<std::string> kReserved = {
      "or", "not", "true", "false", "TRUE", "FALSE", "NAT",
      "INT", "dom", "ran", "min", "max", "card", "finite",
  };
  return kReserved.count(w) > 0;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
  std::vector<Tok> toks;
  size_t i = 0;
  bool allowPrimed = false;
  std::vector<Ident> binders;  // innermost last

  explicit Parser(const std::string& s, bool primedOk)
      : toks(lex(s)), allowPrimed(primedOk) {}

  const Tok& cur() const { return toks[i]; }
  const Tok& next() { return toks[i++]; }
  bool atSym(const char* s) const { return cur().kind == Tok::Sym && cur().text == s; }
  bool atWord(const char* w) const {
    return cur().kind == Tok::Ident && !cur().primed && cur().text == w;
  }
  void expectSym(const char* s) {
    if (!atSym(s)) throw FormulaError(std::string("expected '") + s + "'", cur().pos);
    ++i;
  }

  [[noreturn]] void fail(const std::string& msg) { throw FormulaError(msg, cur().pos); }

  Ident mkRef(const Tok& t) {
    if (t.primed) {
      if (!allowPrimed) {
        throw FormulaError("primed identifier '" + t.text + "'' not allowed here", t.pos);
      }
      return Ident(t.text, Space::PrimedVariable);
    }
    for (auto it = binders.rbegin(); it != binders.rend(); ++it) {
      if (it->name == t.text) return *it;
    }
    return Ident(t.text, Space::Variable);
  }

  // --- predicates -------------------------------------------------------

  PredPtr pred() { return iffP(); }

  PredPtr iffP() {
    PredPtr l = implP();
    if (atSym("<=>")) {
      ++i;
      return mkConn(PredTag::Iff, std::move(l), iffP());
    }
    return l;
  }

  PredPtr implP() {
    PredPtr l = orP();
    if (atSym("=>")) {
      ++i;
      return mkConn(PredTag::Implies, std::move(l), implP());
    }
    return l;
  }

  PredPtr orP() {
    PredPtr l = andP();
    while (atWord("or")) {
      ++i;
      l = mkConn(PredTag::Or, std::move(l), andP());
    }
    return l;
  }

  PredPtr andP() {
    PredPtr l = unaryP();
    while (atSym("&")) {
      ++i;
      l = mkConn(PredTag::And, std::move(l), unaryP());
    }
    return l;
  }

  PredPtr quantP(PredTag tag) {
    ++i;  // ! or #
    std::vector<Ident> bs;
    for (;;) {
      if (cur().kind != Tok::Ident || cur().primed || isReserved(cur().text)) {
        fail("expected bound identifier");
      }
      bs.emplace_back(next().text, Space::Parameter);
      if (atSym(",")) {
        ++i;
        continue;
      }
      break;
    }
    expectSym(".");
    size_t n = bs.size();
    binders.insert(binders.end(), bs.begin(), bs.end());
    PredPtr body = pred();  // quantifier body extends maximally right
    binders.resize(binders.size() - n);
    return mkQuant(tag, std::move(bs), std::move(body));
  }

  PredPtr unaryP() {
    if (atWord("not")) {
      ++i;
      return mkNot(atomP());
    }
    if (atSym("!")) return quantP(PredTag::Forall);
    if (atSym("#")) return quantP(PredTag::Exists);
    return atomP();
  }

  PredPtr atomP() {
    if (atWord("true")) {
      ++i;
      return mkTruth();
    }
    if (atWord("false")) {
      ++i;
      return mkFalsity();
    }
    if (atWord("finite")) {
      ++i;
      expectSym("(");
      ExprPtr s = expr();
      expectSym(")");
      return mkFinite(std::move(s));
    }
    if (atSym("(")) {
      // Could be a parenthesized predicate or an expression; try the
      // predicate reading first and fall back on failure.
      size_t save = i;
      ++i;
      try {
        PredPtr p = pred();
        expectSym(")");
        return p;
      } catch (const FormulaError&) {
        i = save;
      }
    }
    return comparison();
  }

  PredPtr comparison() {
    ExprPtr l = expr();
    struct {
      const char* sym;
      PredTag tag;
    } static const ops[] = {
        {"=", PredTag::Equal},   {"/=", PredTag::NotEqual}, {"<=", PredTag::Leq},
        {"<", PredTag::Lt},      {">=", PredTag::Geq},      {">", PredTag::Gt},
        {":", PredTag::Member},  {"/:", PredTag::NotMember}, {"<:", PredTag::Subset},
    };
    for (const auto& op : ops) {
      if (atSym(op.sym)) {
        ++i;
        return mkCompare(op.tag, std::move(l), expr());
      }
    }
    fail("expected comparison operator");
  }

  // --- expressions ------------------------------------------------------

  ExprPtr expr() { return funE(); }

  ExprPtr funE() {
    ExprPtr l = mapletE();
    if (atSym("-->")) {
      ++i;
      return mkBinary(ExprTag::TotalFun, std::move(l), funE());
    }
    if (atSym("+->")) {
      ++i;
      return mkBinary(ExprTag::PartialFun, std::move(l), funE());
    }
    return l;
  }

  ExprPtr mapletE() {
    ExprPtr l = unionE();
    while (atSym("|->")) {
      ++i;
      l = mkBinary(ExprTag::Maplet, std::move(l), unionE());
    }
    return l;
  }

  ExprPtr unionE() {
    ExprPtr l = interE();
    for (;;) {
      if (atSym("\\/")) {
        ++i;
        l = mkBinary(ExprTag::Union, std::move(l), interE());
      } else if (atSym("\\")) {
        ++i;
        l = mkBinary(ExprTag::SetMinus, std::move(l), interE());
      } else {
        return l;
      }
    }
  }

  ExprPtr interE() {
    ExprPtr l = rangeE();
    while (atSym("/\\")) {
      ++i;
      l = mkBinary(ExprTag::Inter, std::move(l), rangeE());
    }
    return l;
  }

  ExprPtr rangeE() {
    ExprPtr l = addE();
    if (atSym("..")) {
      ++i;
      return mkBinary(ExprTag::Range, std::move(l), addE());
    }
    return l;
  }

  ExprPtr addE() {
    ExprPtr l = mulE();
    for (;;) {
      if (atSym("+")) {
        ++i;
        l = mkBinary(ExprTag::Add, std::move(l), mulE());
      } else if (atSym("-")) {
        ++i;
        l = mkBinary(ExprTag::Sub, std::move(l), mulE());
      } else {
        return l;
      }
    }
  }

  ExprPtr mulE() {
    ExprPtr l = unaryE();
    for (;;) {
      if (atSym("*")) {
        ++i;
        l = mkBinary(ExprTag::Mul, std::move(l), unaryE());
      } else if (atSym("/")) {
        ++i;
        l = mkBinary(ExprTag::Div, std::move(l), unaryE());
      } else {
        return l;
      }
    }
  }

  ExprPtr unaryE() {
    if (atSym("-")) {
      ++i;
      ExprPtr k = unaryE();
      if (k->tag == ExprTag::IntLit) return mkIntLit(-k->intVal);
      return mkUnary(ExprTag::Minus, std::move(k));
    }
    return postfixE();
  }

  ExprPtr postfixE() {
    ExprPtr l = atomE();
    for (;;) {
      if (atSym("(")) {
        ++i;
        ExprPtr arg = expr();
        expectSym(")");
        l = mkBinary(ExprTag::Apply, std::move(l), std::move(arg));
      } else if (atSym("[")) {
        ++i;
        ExprPtr arg = expr();
        expectSym("]");
        l = mkBinary(ExprTag::Image, std::move(l), std::move(arg));
      } else {
        return l;
      }
    }
  }

  ExprPtr unaryFn(ExprTag tag) {
    ++i;
    expectSym("(");
    ExprPtr a = expr();
    expectSym(")");
    return mkUnary(tag, std::move(a));
  }

  ExprPtr atomE() {
    const Tok& t = cur();
    if (t.kind == Tok::Int) {
      ++i;
      return mkIntLit(t.val);
    }
    if (t.kind == Tok::Ident) {
      if (!t.primed) {
        if (t.text == "TRUE") { ++i; return mkBoolLit(true); }
        if (t.text == "FALSE") { ++i; return mkBoolLit(false); }
        if (t.text == "NAT") { ++i; return mkNullary(ExprTag::Naturals); }
        if (t.text == "INT") { ++i; return mkNullary(ExprTag::Integers); }
        if (t.text == "dom") return unaryFn(ExprTag::Dom);
        if (t.text == "ran") return unaryFn(ExprTag::Ran);
        if (t.text == "min") return unaryFn(ExprTag::MinOf);
        if (t.text == "max") return unaryFn(ExprTag::MaxOf);
        if (t.text == "card") return unaryFn(ExprTag::Card);
        if (isReserved(t.text)) fail("reserved word '" + t.text + "' used as identifier");
      }
      ++i;
      return mkIdent(mkRef(t));
    }
    if (atSym("(")) {
      ++i;
      ExprPtr e = expr();
      expectSym(")");
      return e;
    }
    if (atSym("{")) {
      ++i;
      if (atSym("}")) {
        ++i;
        return mkNullary(ExprTag::EmptySet);
      }
      std::vector<ExprPtr> elems;
      elems.push_back(expr());
      while (atSym(",")) {
        ++i;
        elems.push_back(expr());
      }
      expectSym("}");
      return mkSetLit(std::move(elems));
    }
    fail("expected expression");
  }
};

// ---------------------------------------------------------------------------
// Renderer
// ---------------------------------------------------------------------------

// Binding strengths; children rendered in a context requiring at least the
// given strength get parentheses when weaker.
enum : int {
  PE_FUN = 1, PE_MAPLET, PE_UNION, PE_INTER, PE_RANGE, PE_ADD, PE_MUL,
  PE_UNARY, PE_POSTFIX, PE_ATOM,
};

int exprStrength(const ExprPtr& e) {
  switch (e->tag) {
    case ExprTag::TotalFun:
    case ExprTag::PartialFun: return PE_FUN;
    case ExprTag::Maplet: return PE_MAPLET;
    case ExprTag::Union:
    case ExprTag::SetMinus: return PE_UNION;
    case ExprTag::Inter: return PE_INTER;
    case ExprTag::Range: return PE_RANGE;
    case ExprTag::Add:
    case ExprTag::Sub: return PE_ADD;
    case ExprTag::Mul:
    case ExprTag::Div: return PE_MUL;
    case ExprTag::Minus: return PE_UNARY;
    case ExprTag::Apply:
    case ExprTag::Image: return PE_POSTFIX;
    default: return PE_ATOM;
  }
}

void renderInto(const ExprPtr& e, int need, std::string& out);

void renderChild(const ExprPtr& e, int need, std::string& out) {
  if (exprStrength(e) < need) {
    out += '(';
    renderInto(e, PE_FUN, out);
    out += ')';
  } else {
    renderInto(e, need, out);
  }
}

void renderBin(const ExprPtr& e, const char* op, int lvl, bool leftAssoc, std::string& out) {
  renderChild(e->kids[0], leftAssoc ? lvl : lvl + 1, out);
  out += ' ';
  out += op;
  out += ' ';
  renderChild(e->kids[1], leftAssoc ? lvl + 1 : lvl, out);
}

void renderInto(const ExprPtr& e, int /*need*/, std::string& out) {
  switch (e->tag) {
    case ExprTag::IntLit: out += std::to_string(e->intVal); return;
    case ExprTag::BoolLit: out += e->boolVal ? "TRUE" : "FALSE"; return;
    case ExprTag::IdentRef:
      out += e->ident.name;
      if (isPrimed(e->ident)) out += '\'';
      return;
    case ExprTag::Add: renderBin(e, "+", PE_ADD, true, out); return;
    case ExprTag::Sub: renderBin(e, "-", PE_ADD, true, out); return;
    case ExprTag::Mul: renderBin(e, "*", PE_MUL, true, out); return;
    case ExprTag::Div: renderBin(e, "/", PE_MUL, true, out); return;
    case ExprTag::Minus:
      out += '-';
      renderChild(e->kids[0], PE_UNARY, out);
      return;
    case ExprTag::SetLit: {
      out += '{';
      bool first = true;
      for (const auto& k : e->kids) {
        if (!first) out += ", ";
        first = false;
        renderInto(k, PE_FUN, out);
      }
      out += '}';
      return;
    }
    case ExprTag::Range:
      renderChild(e->kids[0], PE_RANGE + 1, out);
      out += " .. ";
      renderChild(e->kids[1], PE_RANGE + 1, out);
      return;
    case ExprTag::Dom: out += "dom("; renderInto(e->kids[0], PE_FUN, out); out += ')'; return;
    case ExprTag::Ran: out += "ran("; renderInto(e->kids[0], PE_FUN, out); out += ')'; return;
    case ExprTag::MinOf: out += "min("; renderInto(e->kids[0], PE_FUN, out); out += ')'; return;
    case ExprTag::MaxOf: out += "max("; renderInto(e->kids[0], PE_FUN, out); out += ')'; return;
    case ExprTag::Card: out += "card("; renderInto(e->kids[0], PE_FUN, out); out += ')'; return;
    case ExprTag::Image:
      renderChild(e->kids[0], PE_POSTFIX, out);
      out += '[';
      renderInto(e->kids[1], PE_FUN, out);
      out += ']';
      return;
    case ExprTag::Apply:
      renderChild(e->kids[0], PE_POSTFIX, out);
      out += '(';
      renderInto(e->kids[1], PE_FUN, out);
      out += ')';
      return;
    case ExprTag::Union: renderBin(e, "\\/", PE_UNION, true, out); return;
    case ExprTag::Inter: renderBin(e, "/\\", PE_INTER, true, out); return;
    case ExprTag::SetMinus: renderBin(e, "\\", PE_UNION, true, out); return;
    case ExprTag::Maplet: renderBin(e, "|->", PE_MAPLET, true, out); return;
    case ExprTag::TotalFun: renderBin(e, "-->", PE_FUN, false, out); return;
    case ExprTag::PartialFun: renderBin(e, "+->", PE_FUN, false, out); return;
    case ExprTag::EmptySet: out += "{}"; return;
    case ExprTag::Naturals: out += "NAT"; return;
    case ExprTag::Integers: out += "INT"; return;
  }
}

enum : int { PP_IFF = 1, PP_IMPL, PP_OR, PP_AND, PP_UNARY, PP_ATOM };

int predStrength(const PredPtr& p) {
  switch (p->tag) {
    case PredTag::Iff: return PP_IFF;
    case PredTag::Implies: return PP_IMPL;
    case PredTag::Or: return PP_OR;
    case PredTag::And: return PP_AND;
    case PredTag::Not:
    case PredTag::Forall:
    case PredTag::Exists: return PP_UNARY;
    default: return PP_ATOM;
  }
}

void renderPredInto(const PredPtr& p, int need, std::string& out);

void renderPredChild(const PredPtr& p, int need, std::string& out) {
  // Quantifier bodies extend maximally right, so a quantifier anywhere but
  // the tail position must be parenthesized; parenthesizing always is simpler
  // and reparses identically.
  bool paren = predStrength(p) < need ||
               p->tag == PredTag::Forall || p->tag == PredTag::Exists;
  if (paren) {
    out += '(';
    renderPredInto(p, PP_IFF, out);
    out += ')';
  } else {
    renderPredInto(p, need, out);
  }
}

void renderCmp(const PredPtr& p, const char* op, std::string& out) {
  renderInto(p->exprs[0], PE_FUN, out);
  out += ' ';
  out += op;
  out += ' ';
  renderInto(p->exprs[1], PE_FUN, out);
}

void renderPredInto(const PredPtr& p, int need, std::string& out) {
  switch (p->tag) {
    case PredTag::Truth: out += "true"; return;
    case PredTag::Falsity: out += "false"; return;
    case PredTag::Not:
      out += "not ";
      renderPredChild(p->preds[0], PP_ATOM, out);
      return;
    case PredTag::And:
      renderPredChild(p->preds[0], PP_AND, out);
      out += " & ";
      renderPredChild(p->preds[1], PP_AND + 1, out);
      return;
    case PredTag::Or:
      renderPredChild(p->preds[0], PP_OR, out);
      out += " or ";
      renderPredChild(p->preds[1], PP_OR + 1, out);
      return;
    case PredTag::Implies:
      renderPredChild(p->preds[0], PP_IMPL + 1, out);
      out += " => ";
      renderPredChild(p->preds[1], PP_IMPL, out);
      return;
    case PredTag::Iff:
      renderPredChild(p->preds[0], PP_IFF + 1, out);
      out += " <=> ";
      renderPredChild(p->preds[1], PP_IFF, out);
      return;
    case PredTag::Equal: renderCmp(p, "=", out); return;
    case PredTag::NotEqual: renderCmp(p, "/=", out); return;
    case PredTag::Lt: renderCmp(p, "<", out); return;
    case PredTag::Leq: renderCmp(p, "<=", out); return;
    case PredTag::Gt: renderCmp(p, ">", out); return;
    case PredTag::Geq: renderCmp(p, ">=", out); return;
    case PredTag::Member: renderCmp(p, ":", out); return;
    case PredTag::NotMember: renderCmp(p, "/:", out); return;
    case PredTag::Subset: renderCmp(p, "<:", out); return;
    case PredTag::Finite:
      out += "finite(";
      renderInto(p->exprs[0], PE_FUN, out);
      out += ')';
      return;
    case PredTag::Forall:
    case PredTag::Exists: {
      out += p->tag == PredTag::Forall ? '!' : '#';
      bool first = true;
      for (const auto& b : p->binders) {
        if (!first) out += ", ";
        first = false;
        out += b.name;
      }
      out += " . ";
      renderPredInto(p->preds[0], PP_IFF, out);
      return;
    }
  }
}

}  // namespace

PredPtr parseFormulaPred(const std::string& text, bool allowPrimed) {
  Parser p(text, allowPrimed);
  PredPtr r = p.pred();
  if (p.cur().kind != Tok::End) {
    throw FormulaError("unexpected trailing input", p.cur().pos);
  }
  return r;
}

ExprPtr parseFormulaExpr(const std::string& text) {
  Parser p(text, false);
  ExprPtr r = p.expr();
  if (p.cur().kind != Tok::End) {
    throw FormulaError("unexpected trailing input", p.cur().pos);
  }
  return r;
}

Action parseActionString(const std::string& label, const std::string& text) {
  Parser p(text, true);
  Action a;
  a.label = Ident(label, Space::Label);
  for (;;) {
    if (p.cur().kind != Tok::Ident || p.cur().primed || isReserved(p.cur().text)) {
      throw FormulaError("expected assigned variable", p.cur().pos);
    }
    a.vars.emplace_back(p.next().text, Space::Variable);
    if (p.atSym(",")) {
      ++p.i;
      continue;
    }
    break;
  }
  if (p.atSym(":=") || p.atSym("::")) {
    bool det = p.cur().text == ":=";
    if (a.vars.size() != 1) {
      throw FormulaError("':=' and '::' assign exactly one variable", p.cur().pos);
    }
    ++p.i;
    a.form = det ? ActionForm::Det : ActionForm::In;
    a.expr = p.expr();
  } else if (p.atSym(":|")) {
    ++p.i;
    a.form = ActionForm::Such;
    a.pred = p.pred();
  } else {
    throw FormulaError("expected ':=', '::' or ':|'", p.cur().pos);
  }
  if (p.cur().kind != Tok::End) {
    throw FormulaError("unexpected trailing input", p.cur().pos);
  }
  return a;
}

std::string renderExpr(const ExprPtr& e) {
  std::string out;
  renderInto(e, PE_FUN, out);
  return out;
}

std::string renderPred(const PredPtr& p) {
  std::string out;
  renderPredInto(p, PP_IFF, out);
  return out;
}

std::string renderAction(const Action& a) {
  std::string out;
  bool first = true;
  for (const auto& v : a.vars) {
    if (!first) out += ", ";
    first = false;
    out += v.name;
  }
  switch (a.form) {
    case ActionForm::Det:
      out += " := ";
      out += renderExpr(a.expr);
      break;
    case ActionForm::In:
      out += " :: ";
      out += renderExpr(a.expr);
      break;
    case ActionForm::Such:
      out += " :| ";
      out += renderPred(a.pred);
      break;
  }
  return out;
}

}  // namespace ebforge::frontend
