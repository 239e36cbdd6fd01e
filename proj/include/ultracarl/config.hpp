#pragma once

// Strict INI run configuration: [run], [domain], [carleman], [field], [grid].
// Unknown sections or keys, duplicates and malformed numbers are errors with
// line and column.

#include "ultracarl/fields.hpp"

#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace ultracarl {

struct IniValue {
  std::string text;
  int line = 0;
  int column = 0;  // column of the value's first character
};

/// section -> key -> value, with the position of every entry.
struct IniDocument {
  std::map<std::string, std::map<std::string, IniValue>> sections;
  std::map<std::string, int> section_lines;

  bool has(const std::string& s) const { return sections.count(s) > 0; }
  const IniValue* find(const std::string& s, const std::string& k) const {
    const auto it = sections.find(s);
    if (it == sections.end()) return nullptr;
    const auto jt = it->second.find(k);
    return jt == it->second.end() ? nullptr : &jt->second;
  }
};

inline Error config_error(int line, int column, const std::string& what) {
  return Error(ErrorCode::config, "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what);
}

inline const std::map<std::string, std::set<std::string>>& config_schema() {
  static const std::map<std::string, std::set<std::string>> schema = {
      {"run",
       {"command", "seed", "out", "workers", "suite_size", "safety", "C", "Cprime", "variant", "deltas", "k_max",
        "tmp_sign", "focus", "samples", "separation"}},
      {"domain", {"kind", "m", "n", "T", "center", "radius", "radius_profile", "center_profile", "lo", "hi"}},
      {"carleman",
       {"p_t", "p_x", "a", "b", "eps", "delta", "R", "mu", "sigma", "kappa1", "kappa2", "interior_factor"}},
      {"field",
       {"family", "seed", "potential", "collar_amplitude", "collar_direction"}},
      {"grid",
       {"time_cells", "space_cells", "surface_cells", "node_cap", "refine_time", "refine_angle", "refine_polar",
        "slices", "svg_size"}},
  };
  return schema;
}

namespace detail {
inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}
}  // namespace detail

inline IniDocument parse_ini(const std::string& text) {
  IniDocument doc;
  const auto& schema = config_schema();
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto first = raw.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const int col = static_cast<int>(first) + 1;
    if (raw[first] == '#') continue;
    if (raw[first] == '[') {
      const auto close = raw.find(']', first);
      if (close == std::string::npos) throw config_error(line_no, col, "unterminated section header");
      if (!detail::trim(std::string_view(raw).substr(close + 1)).empty()) {
        throw config_error(line_no, static_cast<int>(close) + 2, "unexpected text after section header");
      }
      section = detail::trim(std::string_view(raw).substr(first + 1, close - first - 1));
      if (!schema.count(section)) throw config_error(line_no, col + 1, "unknown section [" + section + "]");
      if (doc.sections.count(section)) throw config_error(line_no, col, "duplicate section [" + section + "]");
      doc.sections[section];
      doc.section_lines[section] = line_no;
      continue;
    }
    const auto eq = raw.find('=', first);
    if (eq == std::string::npos) throw config_error(line_no, col, "expected 'key = value'");
    if (section.empty()) throw config_error(line_no, col, "key outside of any section");
    const std::string key = detail::trim(std::string_view(raw).substr(first, eq - first));
    if (key.empty()) throw config_error(line_no, col, "empty key");
    if (!schema.at(section).count(key)) {
      throw config_error(line_no, col, "unknown key '" + key + "' in section [" + section + "]");
    }
    if (doc.sections[section].count(key)) {
      throw config_error(line_no, col, "duplicate key '" + key + "' in section [" + section + "]");
    }
    const auto vfirst = raw.find_first_not_of(" \t", eq + 1);
    const int vcol = vfirst == std::string::npos ? static_cast<int>(eq) + 2 : static_cast<int>(vfirst) + 1;
    std::string value = detail::trim(std::string_view(raw).substr(eq + 1));
    if (value.empty()) throw config_error(line_no, vcol, "empty value for '" + key + "'");
    doc.sections[section][key] = {value, line_no, vcol};
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Typed values.

inline double parse_double(const IniValue& v, const std::string& key) {
  double out = 0.0;
  const char* b = v.text.data();
  const char* e = b + v.text.size();
  const auto res = std::from_chars(b, e, out);
  if (res.ec != std::errc() || res.ptr != e || !std::isfinite(out)) {
    throw config_error(v.line, v.column, "'" + key + "' expects a finite decimal number, got '" + v.text + "'");
  }
  return out;
}

inline std::uint64_t parse_u64(const IniValue& v, const std::string& key) {
  std::uint64_t out = 0;
  const char* b = v.text.data();
  const char* e = b + v.text.size();
  const auto res = std::from_chars(b, e, out);
  if (res.ec != std::errc() || res.ptr != e) {
    throw config_error(v.line, v.column, "'" + key + "' expects a nonnegative integer, got '" + v.text + "'");
  }
  return out;
}

/// Comma separated decimals.
inline std::vector<double> parse_list(const IniValue& v, const std::string& key) {
  std::vector<double> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = v.text.find(',', start);
    const std::string piece = detail::trim(std::string_view(v.text).substr(start, comma - start));
    IniValue sub{piece, v.line, v.column + static_cast<int>(start)};
    if (piece.empty()) throw config_error(v.line, sub.column, "'" + key + "' has an empty list entry");
    out.push_back(parse_double(sub, key));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

/// ';' separated groups of comma separated decimals.
inline std::vector<std::vector<double>> parse_groups(const IniValue& v, const std::string& key) {
  std::vector<std::vector<double>> out;
  std::size_t start = 0;
  while (true) {
    const auto semi = v.text.find(';', start);
    const std::string piece(std::string_view(v.text).substr(start, semi - start));
    out.push_back(parse_list({detail::trim(piece), v.line, v.column + static_cast<int>(start)}, key));
    if (semi == std::string::npos) break;
    start = semi + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Run configuration.

struct RunConfig {
  std::string command;
  std::uint64_t seed = 1;
  std::optional<std::string> out;
  unsigned workers = 1;

  // [run]
  std::size_t suite_size = 20;
  double safety = 0.1;
  std::optional<double> C;
  double Cprime = 1.0;
  std::string variant = "both";
  std::vector<double> deltas;
  int k_max = 5;
  double tmp_sign = 1.0;
  std::string focus = "gamma";
  std::size_t samples = 10000;
  double separation = 10.0;

  // [domain]
  std::optional<DomainModel> domain;

  // [carleman]
  std::optional<Vector> p_t, p_x;
  std::optional<double> a, b, eps, delta, R, mu, sigma;
  bool a_auto = false;
  double kappa1 = 0.1, kappa2 = 0.1, interior_factor = 10.0;

  // [field]
  std::string family = "mixed";
  std::optional<std::uint64_t> field_seed;
  double potential = 1.0;
  double collar_amplitude = 1.0;
  std::optional<Vector> collar_direction;

  // [grid]
  int time_cells = 32;
  int space_cells = 32;
  int surface_cells = 128;
  std::size_t node_cap = 10'000'000;
  int refine_time = 256;
  int refine_angle = 512;
  int refine_polar = 64;
  int slices = 3;
  int svg_size = 480;

  IniDocument doc;
};

inline const std::set<std::string>& known_commands() {
  static const std::set<std::string> c = {"regions", "verify-boundary", "verify-interior", "weight-check",
                                          "absorption", "uniqueness-demo", "figures"};
  return c;
}

/// Sections each command reads; missing ones are errors.
inline std::vector<std::string> required_sections(const std::string& command) {
  if (command == "weight-check") return {"domain", "carleman"};
  if (command == "regions" || command == "figures") return {"domain", "carleman"};
  return {"domain", "carleman", "field"};
}

namespace detail {

inline Vector to_vector(const std::vector<double>& v) { return make_vector(v); }

inline DomainModel build_domain(const IniDocument& doc) {
  auto get = [&](const std::string& k) { return doc.find("domain", k); };
  auto need = [&](const std::string& k) -> const IniValue& {
    const IniValue* v = get(k);
    if (!v) throw config_error(doc.section_lines.at("domain"), 1, "[domain] is missing required key '" + k + "'");
    return *v;
  };
  const IniValue& kind = need("kind");
  const auto m = parse_u64(need("m"), "m");
  const auto n = parse_u64(need("n"), "n");
  if (m < 1 || n < 1 || m + n > static_cast<std::uint64_t>(kMaxAxes)) {
    throw config_error(need("m").line, need("m").column, "need m, n >= 1 and m + n <= 8");
  }
  const Signature sig(static_cast<int>(m), static_cast<int>(n));
  const double T = parse_double(need("T"), "T");
  auto wrap = [&](const IniValue& at, auto&& fn) {
    try {
      return fn();
    } catch (const Error& e) {
      if (e.code() == ErrorCode::config) throw;
      throw config_error(at.line, at.column, e.what());
    }
  };
  if (kind.text == "ball") {
    const IniValue* center = get("center");
    const IniValue* radius = get("radius");
    const IniValue* rprof = get("radius_profile");
    const IniValue* cprof = get("center_profile");
    if (center && cprof) throw config_error(cprof->line, cprof->column, "give either center or center_profile");
    if (radius && rprof) throw config_error(rprof->line, rprof->column, "give either radius or radius_profile");
    std::vector<Polynomial> cpoly;
    if (cprof) {
      for (auto& g : parse_groups(*cprof, "center_profile")) cpoly.emplace_back(g);
    } else if (center) {
      for (double c : parse_list(*center, "center")) cpoly.push_back(Polynomial::constant(c));
    } else {
      cpoly.assign(n, Polynomial::constant(0.0));
    }
    if (cpoly.size() != n) {
      const IniValue& at = cprof ? *cprof : *center;
      throw config_error(at.line, at.column, "ball center needs n=" + std::to_string(n) + " components");
    }
    Polynomial rpoly = rprof ? Polynomial(parse_list(*rprof, "radius_profile"))
                             : Polynomial::constant(radius ? parse_double(*radius, "radius") : 1.0);
    const IniValue& at = rprof ? *rprof : radius ? *radius : kind;
    return wrap(at, [&] { return make_moving_ball(sig, T, cpoly, rpoly); });
  }
  if (kind.text == "box") {
    for (const char* k : {"center", "radius", "radius_profile", "center_profile"}) {
      if (const IniValue* v = get(k)) throw config_error(v->line, v->column, std::string("'") + k + "' is not valid for a box");
    }
    const IniValue& lo = need("lo");
    const IniValue& hi = need("hi");
    const auto l = parse_list(lo, "lo");
    const auto h = parse_list(hi, "hi");
    if (l.size() != n) throw config_error(lo.line, lo.column, "lo needs n components");
    if (h.size() != n) throw config_error(hi.line, hi.column, "hi needs n components");
    return wrap(lo, [&] { return make_box(sig, T, to_vector(l), to_vector(h)); });
  }
  throw config_error(kind.line, kind.column, "domain kind must be 'ball' or 'box', got '" + kind.text + "'");
}

}  // namespace detail

/// Parses and validates a configuration. command_override and seed_override
/// come from the command line and win over [run].
inline RunConfig parse_config(const std::string& text, const std::optional<std::string>& command_override = {},
                              const std::optional<std::uint64_t>& seed_override = {}) {
  RunConfig cfg;
  cfg.doc = parse_ini(text);
  const IniDocument& doc = cfg.doc;
  auto get = [&](const char* s, const char* k) { return doc.find(s, k); };

  if (command_override) {
    cfg.command = *command_override;
  } else if (const IniValue* v = get("run", "command")) {
    cfg.command = v->text;
  } else {
    throw Error(ErrorCode::config, "no command given on the command line or in [run]");
  }
  if (!known_commands().count(cfg.command)) {
    const IniValue* v = get("run", "command");
    if (v && !command_override) throw config_error(v->line, v->column, "unknown command '" + cfg.command + "'");
    throw Error(ErrorCode::config, "unknown command '" + cfg.command + "'");
  }
  for (const auto& s : required_sections(cfg.command)) {
    if (!doc.has(s)) throw Error(ErrorCode::config, "command '" + cfg.command + "' requires a [" + s + "] section");
  }

  // [run]
  if (const IniValue* v = get("run", "seed")) cfg.seed = parse_u64(*v, "seed");
  if (seed_override) cfg.seed = *seed_override;
  if (const IniValue* v = get("run", "out")) cfg.out = v->text;
  if (const IniValue* v = get("run", "workers")) {
    const auto w = parse_u64(*v, "workers");
    if (w < 1 || w > 256) throw config_error(v->line, v->column, "workers must be in [1, 256]");
    cfg.workers = static_cast<unsigned>(w);
  }
  if (const IniValue* v = get("run", "suite_size")) {
    cfg.suite_size = parse_u64(*v, "suite_size");
    if (cfg.suite_size < 1) throw config_error(v->line, v->column, "suite_size must be positive");
  }
  if (const IniValue* v = get("run", "safety")) {
    cfg.safety = parse_double(*v, "safety");
    if (!(cfg.safety > 0.0 && cfg.safety <= 1.0)) throw config_error(v->line, v->column, "safety must be in (0, 1]");
  }
  if (const IniValue* v = get("run", "C")) {
    cfg.C = parse_double(*v, "C");
    if (!(*cfg.C > 0.0)) throw config_error(v->line, v->column, "C must be positive");
  }
  if (const IniValue* v = get("run", "Cprime")) {
    cfg.Cprime = parse_double(*v, "Cprime");
    if (!(cfg.Cprime > 0.0)) throw config_error(v->line, v->column, "Cprime must be positive");
  }
  if (const IniValue* v = get("run", "variant")) {
    cfg.variant = v->text;
    if (cfg.variant != "grad_t" && cfg.variant != "grad_x" && cfg.variant != "both") {
      throw config_error(v->line, v->column, "variant must be grad_t, grad_x or both");
    }
  }
  if (const IniValue* v = get("run", "deltas")) cfg.deltas = parse_list(*v, "deltas");
  if (const IniValue* v = get("run", "k_max")) cfg.k_max = static_cast<int>(parse_u64(*v, "k_max"));
  if (const IniValue* v = get("run", "tmp_sign")) {
    cfg.tmp_sign = parse_double(*v, "tmp_sign");
    if (cfg.tmp_sign != 1.0 && cfg.tmp_sign != -1.0) throw config_error(v->line, v->column, "tmp_sign must be 1 or -1");
  }
  if (const IniValue* v = get("run", "focus")) {
    cfg.focus = v->text;
    if (cfg.focus != "trace" && cfg.focus != "gamma" && cfg.focus != "gamma_eps") {
      throw config_error(v->line, v->column, "focus must be trace, gamma or gamma_eps");
    }
  }
  if (const IniValue* v = get("run", "samples")) cfg.samples = parse_u64(*v, "samples");
  if (const IniValue* v = get("run", "separation")) {
    cfg.separation = parse_double(*v, "separation");
    if (!(cfg.separation >= 1.0)) throw config_error(v->line, v->column, "separation must be at least 1");
  }

  // [domain]
  if (doc.has("domain")) cfg.domain = detail::build_domain(doc);
  const int m = cfg.domain ? cfg.domain->sig.m() : 0;
  const int n = cfg.domain ? cfg.domain->sig.n() : 0;

  // [carleman]
  auto vec = [&](const char* s, const char* k, int size) -> std::optional<Vector> {
    const IniValue* v = get(s, k);
    if (!v) return std::nullopt;
    auto l = parse_list(*v, k);
    if (size && static_cast<int>(l.size()) != size) {
      throw config_error(v->line, v->column, std::string("'") + k + "' needs " + std::to_string(size) + " components");
    }
    return make_vector(l);
  };
  auto num = [&](const char* s, const char* k) -> std::optional<double> {
    const IniValue* v = get(s, k);
    if (!v) return std::nullopt;
    return parse_double(*v, k);
  };
  cfg.p_t = vec("carleman", "p_t", m);
  cfg.p_x = vec("carleman", "p_x", n);
  if (const IniValue* v = get("carleman", "a"); v && v->text == "auto") {
    cfg.a_auto = true;
  } else {
    cfg.a = num("carleman", "a");
  }
  cfg.b = num("carleman", "b");
  cfg.eps = num("carleman", "eps");
  cfg.delta = num("carleman", "delta");
  cfg.R = num("carleman", "R");
  cfg.mu = num("carleman", "mu");
  cfg.sigma = num("carleman", "sigma");
  if (auto k = num("carleman", "kappa1")) cfg.kappa1 = *k;
  if (auto k = num("carleman", "kappa2")) cfg.kappa2 = *k;
  if (auto k = num("carleman", "interior_factor")) cfg.interior_factor = *k;
  if (cfg.delta && (cfg.b || cfg.eps)) {
    const IniValue* v = get("carleman", cfg.b ? "b" : "eps");
    throw config_error(v->line, v->column, "give either delta or (b, eps), not both");
  }
  if (doc.has("carleman") && !cfg.delta && !(cfg.b && cfg.eps)) {
    throw config_error(doc.section_lines.at("carleman"), 1, "[carleman] needs delta or both b and eps");
  }
  if (doc.has("carleman") && !cfg.a && !cfg.a_auto) {
    throw config_error(doc.section_lines.at("carleman"), 1, "[carleman] is missing required key 'a'");
  }

  // [field]
  if (const IniValue* v = get("field", "family")) {
    cfg.family = v->text;
    if (!is_suite_family(cfg.family)) {
      throw config_error(v->line, v->column, "unknown field family '" + cfg.family + "'");
    }
  }
  if (const IniValue* v = get("field", "seed")) cfg.field_seed = parse_u64(*v, "seed");
  if (auto x = num("field", "potential")) cfg.potential = *x;
  if (auto x = num("field", "collar_amplitude")) cfg.collar_amplitude = *x;
  cfg.collar_direction = vec("field", "collar_direction", m + n);

  // [grid]
  auto positive_int = [&](const char* k, int& into) {
    if (const IniValue* v = get("grid", k)) {
      const auto x = parse_u64(*v, k);
      if (x < 1 || x > 1'000'000) throw config_error(v->line, v->column, std::string("'") + k + "' must be in [1, 1e6]");
      into = static_cast<int>(x);
    }
  };
  positive_int("time_cells", cfg.time_cells);
  positive_int("space_cells", cfg.space_cells);
  positive_int("surface_cells", cfg.surface_cells);
  positive_int("refine_time", cfg.refine_time);
  positive_int("refine_angle", cfg.refine_angle);
  positive_int("refine_polar", cfg.refine_polar);
  positive_int("slices", cfg.slices);
  positive_int("svg_size", cfg.svg_size);
  if (const IniValue* v = get("grid", "node_cap")) cfg.node_cap = parse_u64(*v, "node_cap");
  return cfg;
}

/// Canonical text of the effective configuration: sorted sections and keys,
/// with the command and seed resolved and run.workers / run.out left out so
/// the hash does not depend on where or how fast a run happens.
inline std::string canonical_config(const RunConfig& cfg) {
  std::string out = "command=" + cfg.command + "\nseed=" + std::to_string(cfg.seed) + "\n";
  for (const auto& [section, keys] : cfg.doc.sections) {
    for (const auto& [key, value] : keys) {
      if (section == "run" && (key == "workers" || key == "out" || key == "seed" || key == "command")) continue;
      out += section + "." + key + "=" + value.text + "\n";
    }
  }
  return out;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string config_hash(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical_config(cfg))));
  return buf;
}

}  // namespace ultracarl
