#include <algorithm>
#include <cctype>
#include <sstream>

#include "ebforge/frontend.hpp"
#include "internal.hpp"

namespace ebforge::frontend {

using namespace ebforge::ast;

namespace {

bool isSectionWord(const std::string& w) {
  static const std::set<std::string> kWords = {
      "context", "machine", "extends", "refines", "sees", "sets", "constants",
      "axioms", "theorems", "variables", "invariants", "variant", "events",
      "event", "any", "where", "then", "end",
  };
  return kWords.count(w) > 0;
}

struct Line {
  int number = 0;  // 1-based
  std::string text;
};

// Splits into lines, dropping // comments and trailing whitespace.
std::vector<Line> splitLines(const std::string& s) {
  std::vector<Line> out;
  std::istringstream in(s);
  std::string raw;
  int n = 0;
  while (std::getline(in, raw)) {
    ++n;
    if (auto pos = raw.find("//"); pos != std::string::npos) raw.erase(pos);
    while (!raw.empty() && std::isspace(static_cast<unsigned char>(raw.back()))) {
      raw.pop_back();
    }
    out.push_back({n, raw});
  }
  return out;
}

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

struct TextParser {
  std::vector<Line> lines;
  size_t li = 0;
  std::vector<Diagnostic> diags;

  void err(int line, int col, const std::string& msg,
           const char* code = diag::SyntaxError) {
    diags.push_back({code, "", msg, line, col});
  }

  bool done() {
    while (li < lines.size() && words(lines[li].text).empty()) ++li;
    return li >= lines.size();
  }

  const Line& cur() const { return lines[li]; }

  // First word of the current (non-blank) line.
  std::string peekWord() {
    if (done()) return "";
    return words(cur().text).front();
  }

  // --- labeled predicate / action blocks --------------------------------

  struct RawLabeled {
    std::string label;
    std::vector<std::string> requirements;
    bool gluing = false;
    std::string formula;
    int line = 0;
    int col = 0;  // formula start column, 1-based
  };

  bool startsLabeled() {
    if (done()) return false;
    const std::string& t = cur().text;
    size_t i = t.find_first_not_of(" \t");
    return i != std::string::npos && t[i] == '@';
  }

  bool continuesFormula() {
    if (li >= lines.size()) return false;
    auto ws = words(lines[li].text);
    if (ws.empty()) return false;
    if (lines[li].text[lines[li].text.find_first_not_of(" \t")] == '@') return false;
    return !isSectionWord(ws.front());
  }

  std::optional<RawLabeled> readLabeled() {
    RawLabeled r;
    const Line& ln = cur();
    r.line = ln.number;
    const std::string& t = ln.text;
    size_t i = t.find_first_not_of(" \t");
    if (i == std::string::npos || t[i] != '@') {
      err(ln.number, 1, "expected '@label'");
      return std::nullopt;
    }
    ++i;
    size_t j = i;
    while (j < t.size() && (std::isalnum(static_cast<unsigned char>(t[j])) || t[j] == '_')) {
      ++j;
    }
    r.label = t.substr(i, j - i);
    if (!isValidIdentName(r.label)) {
      err(ln.number, static_cast<int>(i) + 1, "invalid label '" + r.label + "'");
      return std::nullopt;
    }
    i = t.find_first_not_of(" \t", j);
    // Optional [REQ-1,REQ-2] requirement tag list.
    if (i != std::string::npos && t[i] == '[') {
      size_t close = t.find(']', i);
      if (close == std::string::npos) {
        err(ln.number, static_cast<int>(i) + 1, "unterminated '[' requirement list");
        return std::nullopt;
      }
      std::string inner = t.substr(i + 1, close - i - 1);
      std::string id;
      std::istringstream ss(inner);
      while (std::getline(ss, id, ',')) {
        size_t a = id.find_first_not_of(" \t");
        size_t b = id.find_last_not_of(" \t");
        if (a == std::string::npos) continue;
        r.requirements.push_back(id.substr(a, b - a + 1));
      }
      i = t.find_first_not_of(" \t", close + 1);
    }
    // Optional 'gluing' marker.
    if (i != std::string::npos && t.compare(i, 6, "gluing") == 0 &&
        (i + 6 == t.size() || std::isspace(static_cast<unsigned char>(t[i + 6])))) {
      r.gluing = true;
      i = t.find_first_not_of(" \t", i + 6);
    }
    r.col = i == std::string::npos ? static_cast<int>(t.size()) + 1
                                   : static_cast<int>(i) + 1;
    r.formula = i == std::string::npos ? "" : t.substr(i);
    ++li;
    // Continuation lines extend the formula.
    while (continuesFormula()) {
      r.formula += " ";
      r.formula += lines[li].text;
      ++li;
    }
    return r;
  }

  void formulaError(const RawLabeled& r, const FormulaError& e) {
    // Map the offset back to a column on the first formula line; offsets in
    // continuation lines are reported on the starting line.
    int col = r.col + static_cast<int>(std::min(e.pos, r.formula.size()));
    err(r.line, col, e.what());
  }

  std::vector<Labeled> labeledBlock() {
    std::vector<Labeled> out;
    while (startsLabeled()) {
      auto raw = readLabeled();
      if (!raw) return out;
      Labeled l;
      l.label = Ident(raw->label, Space::Label);
      l.requirements = raw->requirements;
      l.gluing = raw->gluing;
      try {
        l.pred = parseFormulaPred(raw->formula, false);
        out.push_back(std::move(l));
      } catch (const FormulaError& e) {
        formulaError(*raw, e);
      }
    }
    return out;
  }

  std::vector<Action> actionBlock() {
    std::vector<Action> out;
    while (startsLabeled()) {
      auto raw = readLabeled();
      if (!raw) return out;
      try {
        out.push_back(parseActionString(raw->label, raw->formula));
      } catch (const FormulaError& e) {
        formulaError(*raw, e);
      }
    }
    return out;
  }

  std::vector<Ident> identList(const std::vector<std::string>& ws, size_t from,
                               Space space, int line) {
    std::vector<Ident> out;
    for (size_t k = from; k < ws.size(); ++k) {
      if (!isValidIdentName(ws[k])) {
        err(line, 1, "invalid identifier '" + ws[k] + "'");
        continue;
      }
      out.emplace_back(ws[k], space);
    }
    return out;
  }

  // --- structures -------------------------------------------------------

  Context parseContext() {
    Context c;
    auto ws = words(cur().text);
    int hline = cur().number;
    ++li;
    size_t k = 1;
    if (k < ws.size() && !isSectionWord(ws[k])) c.name = ws[k++];
    if (c.name.empty()) err(hline, 1, "context needs a name");
    if (k + 1 < ws.size() && ws[k] == "extends") c.extendsName = ws[k + 1];
    for (;;) {
      if (done()) {
        err(hline, 1, "unterminated context '" + c.name + "'");
        return c;
      }
      auto sw = words(cur().text);
      const std::string& w = sw.front();
      if (w == "end") {
        ++li;
        return c;
      }
      if (w == "sets") {
        c.sets = identList(sw, 1, Space::CarrierSet, cur().number);
        ++li;
      } else if (w == "constants") {
        c.constants = identList(sw, 1, Space::Constant, cur().number);
        ++li;
      } else if (w == "axioms") {
        ++li;
        c.axioms = labeledBlock();
      } else if (w == "theorems") {
        ++li;
        c.theorems = labeledBlock();
      } else {
        err(cur().number, 1, "unexpected '" + w + "' in context");
        ++li;
      }
    }
  }

  Event parseEvent() {
    Event ev;
    auto ws = words(cur().text);
    int hline = cur().number;
    ++li;
    size_t k = 1;
    if (k < ws.size() && !isSectionWord(ws[k]) && ws[k][0] != '[') {
      if (isValidIdentName(ws[k])) {
        ev.name = Ident(ws[k], Space::Label);
      } else {
        err(hline, 1, "invalid event name '" + ws[k] + "'");
      }
      ++k;
    } else {
      err(hline, 1, "event needs a name");
    }
    if (k + 1 < ws.size() && ws[k] == "refines") {
      ev.refinesEvent = ws[k + 1];
      k += 2;
    }
    if (k < ws.size() && ws[k].front() == '[' && ws[k].back() == ']') {
      std::string inner = ws[k].substr(1, ws[k].size() - 2);
      std::istringstream ss(inner);
      std::string id;
      while (std::getline(ss, id, ',')) {
        if (!id.empty()) ev.requirements.push_back(id);
      }
    }
    for (;;) {
      if (done()) {
        err(hline, 1, "unterminated event '" + ev.name.name + "'");
        return ev;
      }
      auto sw = words(cur().text);
      const std::string& w = sw.front();
      if (w == "end") {
        ++li;
        return ev;
      }
      if (w == "any") {
        ev.params = identList(sw, 1, Space::Parameter, cur().number);
        ++li;
      } else if (w == "where") {
        ++li;
        ev.guards = labeledBlock();
      } else if (w == "then") {
        ++li;
        ev.actions = actionBlock();
      } else {
        err(cur().number, 1, "unexpected '" + w + "' in event");
        ++li;
      }
    }
  }

  Machine parseMachine() {
    Machine m;
    auto ws = words(cur().text);
    int hline = cur().number;
    ++li;
    size_t k = 1;
    if (k < ws.size() && !isSectionWord(ws[k])) m.name = ws[k++];
    if (m.name.empty()) err(hline, 1, "machine needs a name");
    while (k + 1 < ws.size()) {
      if (ws[k] == "refines") {
        m.refinesName = ws[k + 1];
        k += 2;
      } else if (ws[k] == "sees") {
        m.seesName = ws[k + 1];
        k += 2;
      } else {
        err(hline, 1, "unexpected '" + ws[k] + "' in machine header");
        break;
      }
    }
    for (;;) {
      if (done()) {
        err(hline, 1, "unterminated machine '" + m.name + "'");
        return m;
      }
      auto sw = words(cur().text);
      const std::string& w = sw.front();
      if (w == "end") {
        ++li;
        return m;
      }
      if (w == "variables") {
        m.variables = identList(sw, 1, Space::Variable, cur().number);
        ++li;
      } else if (w == "invariants") {
        ++li;
        m.invariants = labeledBlock();
      } else if (w == "theorems") {
        ++li;
        m.theorems = labeledBlock();
      } else if (w == "variant") {
        int line = cur().number;
        std::string rest = cur().text;
        size_t p = rest.find("variant");
        rest = rest.substr(p + 7);
        try {
          m.variants.push_back(parseFormulaExpr(rest));
        } catch (const FormulaError& e) {
          err(line, static_cast<int>(p + 8 + e.pos), e.what());
        }
        ++li;
      } else if (w == "events") {
        ++li;
        for (;;) {
          if (done()) {
            err(hline, 1, "unterminated events section");
            return m;
          }
          std::string ew = peekWord();
          if (ew == "end") {
            ++li;
            break;
          }
          if (ew != "event") {
            err(cur().number, 1, "expected 'event' or 'end', got '" + ew + "'");
            ++li;
            continue;
          }
          m.events.push_back(parseEvent());
        }
      } else {
        err(cur().number, 1, "unexpected '" + w + "' in machine");
        ++li;
      }
    }
  }

  Development parse() {
    Development d;
    while (!done()) {
      std::string w = peekWord();
      if (w == "context") {
        d.contexts.push_back(parseContext());
      } else if (w == "machine") {
        d.machines.push_back(parseMachine());
      } else {
        err(cur().number, 1, "expected 'context' or 'machine', got '" + w + "'");
        ++li;
      }
    }
    return d;
  }
};

// --- serializer ---------------------------------------------------------

void writeLabeled(std::string& out, const std::vector<Labeled>& ls,
                  const char* indent) {
  for (const auto& l : ls) {
    out += indent;
    out += '@';
    out += l.label.name;
    if (!l.requirements.empty()) {
      out += " [";
      bool first = true;
      for (const auto& r : l.requirements) {
        if (!first) out += ',';
        first = false;
        out += r;
      }
      out += ']';
    }
    if (l.gluing) out += " gluing";
    out += ' ';
    out += renderPred(l.pred);
    out += '\n';
  }
}

void writeIdents(std::string& out, const char* kw, const std::vector<Ident>& ids,
                 const char* indent) {
  if (ids.empty()) return;
  out += indent;
  out += kw;
  for (const auto& id : ids) {
    out += ' ';
    out += id.name;
  }
  out += '\n';
}

}  // namespace

ParseResult parseText(const std::string& text) {
  ParseResult res;
  TextParser p{splitLines(text)};
  Development d = p.parse();
  res.diags = std::move(p.diags);
  std::sort(res.diags.begin(), res.diags.end(), [](const Diagnostic& a, const Diagnostic& b) {
    if (a.line != b.line) return a.line < b.line;
    if (a.col != b.col) return a.col < b.col;
    return a.message < b.message;
  });
  if (res.diags.empty()) {
    resolveSpaces(d);
    res.dev = std::move(d);
  }
  return res;
}

std::string serializeText(const Development& d) {
  std::string out;
  for (const auto& c : d.contexts) {
    out += "context " + c.name;
    if (c.extendsName) out += " extends " + *c.extendsName;
    out += '\n';
    writeIdents(out, "sets", c.sets, "  ");
    writeIdents(out, "constants", c.constants, "  ");
    if (!c.axioms.empty()) {
      out += "  axioms\n";
      writeLabeled(out, c.axioms, "    ");
    }
    if (!c.theorems.empty()) {
      out += "  theorems\n";
      writeLabeled(out, c.theorems, "    ");
    }
    out += "end\n\n";
  }
  for (const auto& m : d.machines) {
    out += "machine " + m.name;
    if (m.refinesName) out += " refines " + *m.refinesName;
    if (m.seesName) out += " sees " + *m.seesName;
    out += '\n';
    writeIdents(out, "variables", m.variables, "  ");
    if (!m.invariants.empty()) {
      out += "  invariants\n";
      writeLabeled(out, m.invariants, "    ");
    }
    if (!m.theorems.empty()) {
      out += "  theorems\n";
      writeLabeled(out, m.theorems, "    ");
    }
    if (!m.variants.empty()) {
      out += "  variant " + renderExpr(m.variants.front()) + '\n';
    }
    out += "  events\n";
    for (const auto& ev : m.events) {
      out += "    event " + ev.name.name;
      if (ev.refinesEvent) out += " refines " + *ev.refinesEvent;
      if (!ev.requirements.empty()) {
        out += " [";
        bool first = true;
        for (const auto& r : ev.requirements) {
          if (!first) out += ',';
          first = false;
          out += r;
        }
        out += ']';
      }
      out += '\n';
      writeIdents(out, "any", ev.params, "      ");
      if (!ev.guards.empty()) {
        out += "      where\n";
        writeLabeled(out, ev.guards, "        ");
      }
      if (!ev.actions.empty()) {
        out += "      then\n";
        for (const auto& a : ev.actions) {
          out += "        @" + a.label.name + ' ' + renderAction(a) + '\n';
        }
      }
      out += "    end\n";
    }
    out += "  end\nend\n\n";
  }
  while (out.size() >= 2 && out[out.size() - 1] == '\n' && out[out.size() - 2] == '\n') {
    out.pop_back();
  }
  return out;
}

}  // namespace ebforge::frontend
