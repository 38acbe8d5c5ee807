#include "poip/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace poip {

using json = nlohmann::ordered_json;

namespace {

double bound_from_json(const json& j, const std::string& at) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    throw ValidationError(at + ": expected number or \"inf\"/\"-inf\", got \"" + s + "\"");
  }
  throw ValidationError(at + ": expected number or \"inf\"/\"-inf\"");
}

json bound_to_json(double b) {
  if (b == kInf) return json("inf");
  if (b == -kInf) return json("-inf");
  return json(b);
}

VarType vartype_from_string(const std::string& s, const std::string& at) {
  if (s == "continuous") return VarType::Continuous;
  if (s == "binary") return VarType::Binary;
  if (s == "integer") return VarType::Integer;
  throw ValidationError(at + ": unknown variable type \"" + s + "\"");
}

const char* vartype_to_string(VarType t) {
  switch (t) {
    case VarType::Continuous: return "continuous";
    case VarType::Binary: return "binary";
    case VarType::Integer: return "integer";
  }
  return "?";
}

Sense sense_from_string(const std::string& s, const std::string& at) {
  if (s == "<=") return Sense::LE;
  if (s == ">=") return Sense::GE;
  if (s == "=") return Sense::EQ;
  throw ValidationError(at + ": unknown constraint sense \"" + s + "\"");
}

const char* sense_to_string(Sense s) {
  switch (s) {
    case Sense::LE: return "<=";
    case Sense::GE: return ">=";
    case Sense::EQ: return "=";
  }
  return "?";
}

const json& field(const json& j, const char* key, const std::string& at) {
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(at + ": missing field \"" + key + "\"");
  return *it;
}

double number_field(const json& j, const char* key, const std::string& at) {
  const json& f = field(j, key, at);
  if (!f.is_number()) throw ValidationError(at + "." + key + ": expected number");
  return f.get<double>();
}

Polynomial poly_from_json(const json& j, const std::string& at, bool allow_constant) {
  Polynomial p;
  if (allow_constant) {
    p.constant = number_field(j, "constant", at);
  } else if (j.contains("constant")) {
    p.constant = number_field(j, "constant", at);
  }
  const json& terms = field(j, "terms", at);
  if (!terms.is_array()) throw ValidationError(at + ".terms: expected array");
  for (std::size_t ti = 0; ti < terms.size(); ++ti) {
    const std::string tat = at + ".terms[" + std::to_string(ti) + "]";
    const json& jt = terms[ti];
    PolyTerm t;
    t.coef = number_field(jt, "coef", tat);
    const json& powers = field(jt, "powers", tat);
    if (!powers.is_array() || powers.empty())
      throw ValidationError(tat + ".powers: expected non-empty array");
    for (std::size_t pi = 0; pi < powers.size(); ++pi) {
      const json& jp = powers[pi];
      const std::string pat = tat + ".powers[" + std::to_string(pi) + "]";
      if (!jp.is_array() || jp.size() != 2 || !jp[0].is_number_integer() || !jp[1].is_number_integer())
        throw ValidationError(pat + ": expected [var_id, exponent]");
      const int v = jp[0].get<int>();
      const int e = jp[1].get<int>();
      if (e < 1) throw ValidationError(pat + ": exponent must be >= 1");
      t.powers.emplace_back(v, e);
    }
    p.terms.push_back(std::move(t));
  }
  return p;
}

json poly_to_json(const Polynomial& p, bool with_constant) {
  json j = json::object();
  if (with_constant) j["constant"] = p.constant;
  json terms = json::array();
  for (const auto& t : p.terms) {
    json jt = json::object();
    jt["coef"] = t.coef;
    json powers = json::array();
    for (auto& [v, e] : t.powers) powers.push_back(json::array({v, e}));
    jt["powers"] = std::move(powers);
    terms.push_back(std::move(jt));
  }
  j["terms"] = std::move(terms);
  return j;
}

}  // namespace

Instance instance_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("instance document is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("instance document must be a JSON object");

  Instance inst;
  const json& jname = field(j, "name", "instance");
  if (!jname.is_string()) throw ValidationError("name: expected string");
  inst.name = jname.get<std::string>();

  const json& jsense = field(j, "sense", "instance");
  if (!jsense.is_string() || (jsense != "max" && jsense != "min"))
    throw ValidationError("sense: expected \"max\" or \"min\"");
  inst.minimize = jsense == "min";

  const json& jvars = field(j, "variables", "instance");
  if (!jvars.is_array()) throw ValidationError("variables: expected array");
  for (std::size_t vi = 0; vi < jvars.size(); ++vi) {
    const std::string at = "variables[" + std::to_string(vi) + "]";
    const json& jv = jvars[vi];
    VariableDef v;
    const json& jid = field(jv, "id", at);
    if (!jid.is_number_integer()) throw ValidationError(at + ".id: expected integer");
    v.id = jid.get<int>();
    if (jv.contains("name")) {
      if (!jv["name"].is_string()) throw ValidationError(at + ".name: expected string");
      v.name = jv["name"].get<std::string>();
    } else {
      v.name = "x" + std::to_string(v.id);
    }
    const json& jtype = field(jv, "type", at);
    if (!jtype.is_string()) throw ValidationError(at + ".type: expected string");
    v.type = vartype_from_string(jtype.get<std::string>(), at + ".type");
    v.lb = bound_from_json(field(jv, "lb", at), at + ".lb");
    v.ub = bound_from_json(field(jv, "ub", at), at + ".ub");
    inst.variables.push_back(std::move(v));
  }

  inst.objective = poly_from_json(field(j, "objective", "instance"), "objective", true);
  if (inst.minimize) {
    inst.objective.constant = -inst.objective.constant;
    for (auto& t : inst.objective.terms) t.coef = -t.coef;
  }

  const json& jcons = field(j, "constraints", "instance");
  if (!jcons.is_array()) throw ValidationError("constraints: expected array");
  for (std::size_t ci = 0; ci < jcons.size(); ++ci) {
    const std::string at = "constraints[" + std::to_string(ci) + "]";
    const json& jc = jcons[ci];
    Constraint c;
    const json& jid = field(jc, "id", at);
    if (!jid.is_number_integer()) throw ValidationError(at + ".id: expected integer");
    c.id = jid.get<int>();
    const json& jsen = field(jc, "sense", at);
    if (!jsen.is_string()) throw ValidationError(at + ".sense: expected string");
    c.sense = sense_from_string(jsen.get<std::string>(), at + ".sense");
    c.rhs = number_field(jc, "rhs", at);
    c.lhs = poly_from_json(jc, at, false);
    inst.constraints.push_back(std::move(c));
  }

  if (j.contains("bks")) {
    if (!j["bks"].is_number()) throw ValidationError("bks: expected number");
    inst.bks = j["bks"].get<double>();
  }

  inst.canonicalize();
  inst.validate();
  return inst;
}

Instance read_instance(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open instance file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return instance_from_json(ss.str());
  } catch (const Error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::string instance_to_json(const Instance& inst) {
  json j = json::object();
  j["name"] = inst.name;
  j["sense"] = inst.minimize ? "min" : "max";
  json vars = json::array();
  for (const auto& v : inst.variables) {
    json jv = json::object();
    jv["id"] = v.id;
    jv["name"] = v.name;
    jv["type"] = vartype_to_string(v.type);
    jv["lb"] = bound_to_json(v.lb);
    jv["ub"] = bound_to_json(v.ub);
    vars.push_back(std::move(jv));
  }
  j["variables"] = std::move(vars);

  Polynomial obj = inst.objective;
  if (inst.minimize) {
    obj.constant = -obj.constant;
    for (auto& t : obj.terms) t.coef = -t.coef;
  }
  j["objective"] = poly_to_json(obj, true);

  json cons = json::array();
  for (const auto& c : inst.constraints) {
    json jc = json::object();
    jc["id"] = c.id;
    jc["sense"] = sense_to_string(c.sense);
    jc["rhs"] = c.rhs;
    json body = poly_to_json(c.lhs, false);
    jc["terms"] = std::move(body["terms"]);
    cons.push_back(std::move(jc));
  }
  j["constraints"] = std::move(cons);
  if (inst.bks) j["bks"] = *inst.bks;
  return j.dump(2) + "\n";
}

void write_instance(const Instance& inst, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write instance file: " + path);
  f << instance_to_json(inst);
}

}  // namespace poip
