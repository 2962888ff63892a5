#include <algorithm>
#include <cctype>

#include <json.hpp>

#include "ebforge/frontend.hpp"
#include "internal.hpp"

namespace ebforge::frontend {

using namespace ebforge::ast;
using json = nlohmann::ordered_json;

namespace {

struct JsonLoader {
  std::vector<Diagnostic> diags;

  void err(const std::string& path, const std::string& msg,
           const char* code = diag::SchemaViolation) {
    diags.push_back({code, path, msg, 0, 0});
  }

  std::string getString(const json& j, const char* key, const std::string& path,
                        bool required) {
    if (!j.contains(key)) {
      if (required) err(path, std::string("missing required field '") + key + "'");
      return "";
    }
    if (!j[key].is_string()) {
      err(path, std::string("field '") + key + "' must be a string");
      return "";
    }
    return j[key].get<std::string>();
  }

  std::optional<std::string> getOptString(const json& j, const char* key,
                                          const std::string& path) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    if (!j[key].is_string()) {
      err(path, std::string("field '") + key + "' must be a string");
      return std::nullopt;
    }
    return j[key].get<std::string>();
  }

  std::vector<std::string> getStringArray(const json& j, const char* key,
                                          const std::string& path) {
    std::vector<std::string> out;
    if (!j.contains(key)) return out;
    if (!j[key].is_array()) {
      err(path, std::string("field '") + key + "' must be an array");
      return out;
    }
    for (const auto& e : j[key]) {
      if (!e.is_string()) {
        err(path, std::string("entries of '") + key + "' must be strings");
        return out;
      }
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  std::vector<Ident> getIdents(const json& j, const char* key, const std::string& path,
                               Space space) {
    std::vector<Ident> out;
    for (const auto& n : getStringArray(j, key, path)) {
      if (!isValidIdentName(n)) {
        err(path + "/" + key, "invalid identifier '" + n + "'");
        continue;
      }
      out.emplace_back(n, space);
    }
    return out;
  }

  PredPtr loadPred(const std::string& text, const std::string& path) {
    try {
      return parseFormulaPred(text, false);
    } catch (const FormulaError& e) {
      err(path, std::string(e.what()) + " at offset " + std::to_string(e.pos) +
                    " in \"" + text + "\"",
          diag::SyntaxError);
      return nullptr;
    }
  }

  std::vector<Labeled> loadLabeled(const json& j, const char* key,
                                   const std::string& path) {
    std::vector<Labeled> out;
    if (!j.contains(key)) return out;
    if (!j[key].is_array()) {
      err(path, std::string("field '") + key + "' must be an array");
      return out;
    }
    for (const auto& e : j[key]) {
      if (!e.is_object()) {
        err(path + "/" + key, "entries must be objects");
        continue;
      }
      Labeled l;
      std::string label = getString(e, "label", path + "/" + key, true);
      if (label.empty()) continue;
      if (!isValidIdentName(label)) {
        err(path + "/" + key, "invalid label '" + label + "'");
        continue;
      }
      std::string elemPath = path + "/" + key + "/" + label;
      l.label = Ident(label, Space::Label);
      std::string predText = getString(e, "predicate", elemPath, true);
      l.pred = loadPred(predText, elemPath);
      l.requirements = getStringArray(e, "requirements", elemPath);
      if (e.contains("gluing")) {
        if (!e["gluing"].is_boolean()) {
          err(elemPath, "field 'gluing' must be a boolean");
        } else {
          l.gluing = e["gluing"].get<bool>();
        }
      }
      if (l.pred) out.push_back(std::move(l));
    }
    return out;
  }

  Context loadContext(const json& j, const std::string& path) {
    Context c;
    c.name = getString(j, "name", path, true);
    c.extendsName = getOptString(j, "extends", path);
    std::string p = path + "/" + c.name;
    c.sets = getIdents(j, "sets", p, Space::CarrierSet);
    c.constants = getIdents(j, "constants", p, Space::Constant);
    c.axioms = loadLabeled(j, "axioms", p);
    c.theorems = loadLabeled(j, "theorems", p);
    return c;
  }

  Event loadEvent(const json& j, const std::string& path) {
    Event ev;
    std::string name = getString(j, "name", path, true);
    if (!name.empty() && isValidIdentName(name)) {
      ev.name = Ident(name, Space::Label);
    } else {
      err(path, "invalid event name '" + name + "'");
    }
    std::string p = path + "/" + name;
    ev.refinesEvent = getOptString(j, "refines", p);
    ev.requirements = getStringArray(j, "requirements", p);
    ev.params = getIdents(j, "params", p, Space::Parameter);
    ev.guards = loadLabeled(j, "guards", p);
    if (j.contains("actions")) {
      if (!j["actions"].is_array()) {
        err(p, "field 'actions' must be an array");
      } else {
        for (const auto& a : j["actions"]) {
          if (!a.is_object()) {
            err(p + "/actions", "entries must be objects");
            continue;
          }
          std::string label = getString(a, "label", p + "/actions", true);
          if (label.empty() || !isValidIdentName(label)) {
            err(p + "/actions", "invalid action label '" + label + "'");
            continue;
          }
          std::string ap = p + "/actions/" + label;
          std::string text = getString(a, "action", ap, true);
          try {
            ev.actions.push_back(parseActionString(label, text));
          } catch (const FormulaError& e) {
            err(ap, std::string(e.what()) + " at offset " + std::to_string(e.pos) +
                        " in \"" + text + "\"",
                diag::SyntaxError);
          }
        }
      }
    }
    return ev;
  }

  Machine loadMachine(const json& j, const std::string& path) {
    Machine m;
    m.name = getString(j, "name", path, true);
    std::string p = path + "/" + m.name;
    m.refinesName = getOptString(j, "refines", p);
    m.seesName = getOptString(j, "sees", p);
    m.variables = getIdents(j, "variables", p, Space::Variable);
    m.invariants = loadLabeled(j, "invariants", p);
    m.theorems = loadLabeled(j, "theorems", p);
    if (auto v = getOptString(j, "variant", p)) {
      try {
        m.variants.push_back(parseFormulaExpr(*v));
      } catch (const FormulaError& e) {
        err(p + "/variant", std::string(e.what()) + " at offset " +
                                std::to_string(e.pos) + " in \"" + *v + "\"",
            diag::SyntaxError);
      }
    }
    if (!j.contains("events") || !j["events"].is_array() || j["events"].empty()) {
      err(p, "machine must declare a non-empty 'events' array");
      return m;
    }
    for (const auto& e : j["events"]) {
      if (!e.is_object()) {
        err(p + "/events", "entries must be objects");
        continue;
      }
      m.events.push_back(loadEvent(e, p + "/events"));
    }
    return m;
  }
};

}  // namespace

ParseResult parseJson(const std::string& jsonText) {
  ParseResult res;
  json doc;
  try {
    doc = json::parse(jsonText);
  } catch (const json::parse_error& e) {
    res.diags.push_back({diag::SyntaxError, "", e.what(), 0, 0});
    return res;
  }
  JsonLoader loader;
  if (!doc.is_object()) {
    loader.err("", "top level must be an object");
  } else {
    if (!doc.contains("schemaVersion") || !doc["schemaVersion"].is_number_integer()) {
      loader.err("", "missing integer 'schemaVersion'");
    } else if (doc["schemaVersion"].get<int>() != kSchemaVersion) {
      loader.err("", "unsupported schemaVersion " +
                         std::to_string(doc["schemaVersion"].get<int>()));
    }
  }
  Development d;
  if (doc.is_object()) {
    if (doc.contains("contexts")) {
      if (!doc["contexts"].is_array()) {
        loader.err("contexts", "must be an array");
      } else {
        for (const auto& c : doc["contexts"]) {
          if (!c.is_object()) {
            loader.err("contexts", "entries must be objects");
            continue;
          }
          d.contexts.push_back(loader.loadContext(c, "contexts"));
        }
      }
    }
    if (doc.contains("machines")) {
      if (!doc["machines"].is_array()) {
        loader.err("machines", "must be an array");
      } else {
        for (const auto& m : doc["machines"]) {
          if (!m.is_object()) {
            loader.err("machines", "entries must be objects");
            continue;
          }
          d.machines.push_back(loader.loadMachine(m, "machines"));
        }
      }
    }
  }
  res.diags = std::move(loader.diags);
  std::sort(res.diags.begin(), res.diags.end());
  if (res.diags.empty()) {
    resolveSpaces(d);
    res.dev = std::move(d);
  }
  return res;
}

namespace {

json labeledToJson(const std::vector<Labeled>& ls) {
  json arr = json::array();
  for (const auto& l : ls) {
    json e;
    e["label"] = l.label.name;
    e["predicate"] = renderPred(l.pred);
    if (!l.requirements.empty()) e["requirements"] = l.requirements;
    if (l.gluing) e["gluing"] = true;
    arr.push_back(std::move(e));
  }
  return arr;
}

json identsToJson(const std::vector<Ident>& ids) {
  json arr = json::array();
  for (const auto& id : ids) arr.push_back(id.name);
  return arr;
}

}  // namespace

std::string serializeJson(const Development& d) {
  json doc;
  doc["schemaVersion"] = kSchemaVersion;
  doc["contexts"] = json::array();
  for (const auto& c : d.contexts) {
    json jc;
    jc["name"] = c.name;
    if (c.extendsName) jc["extends"] = *c.extendsName;
    jc["sets"] = identsToJson(c.sets);
    jc["constants"] = identsToJson(c.constants);
    jc["axioms"] = labeledToJson(c.axioms);
    jc["theorems"] = labeledToJson(c.theorems);
    doc["contexts"].push_back(std::move(jc));
  }
  doc["machines"] = json::array();
  for (const auto& m : d.machines) {
    json jm;
    jm["name"] = m.name;
    if (m.refinesName) jm["refines"] = *m.refinesName;
    if (m.seesName) jm["sees"] = *m.seesName;
    jm["variables"] = identsToJson(m.variables);
    jm["invariants"] = labeledToJson(m.invariants);
    jm["theorems"] = labeledToJson(m.theorems);
    if (!m.variants.empty()) jm["variant"] = renderExpr(m.variants.front());
    jm["events"] = json::array();
    for (const auto& ev : m.events) {
      json je;
      je["name"] = ev.name.name;
      if (ev.refinesEvent) je["refines"] = *ev.refinesEvent;
      if (!ev.requirements.empty()) je["requirements"] = ev.requirements;
      je["params"] = identsToJson(ev.params);
      je["guards"] = labeledToJson(ev.guards);
      je["actions"] = json::array();
      for (const auto& a : ev.actions) {
        json ja;
        ja["label"] = a.label.name;
        ja["action"] = renderAction(a);
        je["actions"].push_back(std::move(ja));
      }
      jm["events"].push_back(std::move(je));
    }
    doc["machines"].push_back(std::move(jm));
  }
  return doc.dump(2) + "\n";
}

ParseResult parseAny(const std::string& text) {
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    return c == '{' ? parseJson(text) : parseText(text);
  }
  ParseResult res;
  res.diags.push_back({diag::SyntaxError, "", "empty document", 0, 0});
  return res;
}

}  // namespace ebforge::frontend
