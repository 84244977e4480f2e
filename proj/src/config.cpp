// Copyright 2026 The segflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "segflow/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace segflow {

ConfigError::ConfigError(std::string field, const std::string& message, int line)
    : std::runtime_error(message), field_(std::move(field)), line_(line) {}

const std::vector<std::string>& known_gates() {
  static const std::vector<std::string> gates{
      "convergence",       "level_estimate",     "energy_identity",    "estimate_bounds",
      "uniform_estimates", "overlap_decay",      "segregation",        "limit_estimates",
      "limit_functional",  "weak_inequalities",  "cauchy",             "oracle_calibration",
      "oracle_discrepancy", "elliptic_equivalence", "elliptic_ladder"};
  return gates;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Entry {
  std::string value;
  int line = 0;
};

class Reader {
 public:
  Reader(const std::string& text, const std::string& origin) : origin_(origin) {
    std::istringstream in(text);
    std::string raw, section;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      std::string s = raw;
      const auto hash = s.find('#');
      if (hash != std::string::npos) s.erase(hash);
      s = trim(s);
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']') fail(section, "malformed section header '" + s + "'", line);
        section = trim(s.substr(1, s.size() - 2));
        if (!known_sections().count(section)) fail(section, "unknown section [" + section + "]", line);
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos) fail(section, "expected 'key = value', got '" + s + "'", line);
      if (section.empty()) fail("", "key outside of any section", line);
      const std::string key = section + "." + trim(s.substr(0, eq));
      if (entries_.count(key)) fail(key, "duplicate key", line);
      entries_[key] = {trim(s.substr(eq + 1)), line};
    }
  }

  [[noreturn]] void fail(const std::string& field, const std::string& message, int line = 0) const {
    std::ostringstream msg;
    msg << origin_;
    if (line > 0) msg << ":" << line;
    msg << ": " << (field.empty() || message.rfind(field, 0) == 0 ? "" : field + ": ") << message;
    throw ConfigError(field, msg.str(), line);
  }

  int line_of(const std::string& key) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
  }

  const Entry* take(const std::string& key) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
  }

  void get(const std::string& key, std::string& out) {
    if (const Entry* e = take(key)) out = e->value;
  }

  void get(const std::string& key, double& out) {
    if (const Entry* e = take(key)) out = to_double(key, e->value, e->line);
  }

  void get(const std::string& key, int& out) {
    if (const Entry* e = take(key)) out = to_int(key, e->value, e->line);
  }

  void get(const std::string& key, std::uint64_t& out) {
    if (const Entry* e = take(key)) {
      const std::string& v = e->value;
      if (v.empty() || !std::all_of(v.begin(), v.end(), [](unsigned char c) { return std::isdigit(c); }))
        fail(key, "expected a non-negative integer, got '" + v + "'", e->line);
      try {
        out = std::stoull(v);
      } catch (const std::exception&) {
        fail(key, "integer out of range: '" + v + "'", e->line);
      }
    }
  }

  void get(const std::string& key, bool& out) {
    if (const Entry* e = take(key)) {
      std::string v = e->value;
      std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
      if (v == "true" || v == "yes" || v == "1" || v == "on") out = true;
      else if (v == "false" || v == "no" || v == "0" || v == "off") out = false;
      else fail(key, "expected true/false, got '" + e->value + "'", e->line);
    }
  }

  void get(const std::string& key, std::vector<double>& out) {
    if (const Entry* e = take(key)) {
      out.clear();
      for (const std::string& item : split(e->value, ',')) out.push_back(to_double(key, item, e->line));
    }
  }

  void get(const std::string& key, std::vector<std::string>& out) {
    if (const Entry* e = take(key)) {
      out.clear();
      for (const std::string& item : split(e->value, ','))
        if (!item.empty()) out.push_back(item);
    }
  }

  void reject_unused() const {
    for (const auto& [key, entry] : entries_)
      if (!used_.count(key)) fail(key, "unknown key", entry.line);
  }

  double to_double(const std::string& key, const std::string& v, int line) const {
    std::size_t pos = 0;
    double x = 0.0;
    try {
      x = std::stod(v, &pos);
    } catch (const std::exception&) {
      fail(key, "expected a number, got '" + v + "'", line);
    }
    if (pos != v.size()) fail(key, "expected a number, got '" + v + "'", line);
    return x;
  }

  int to_int(const std::string& key, const std::string& v, int line) const {
    std::size_t pos = 0;
    long x = 0;
    try {
      x = std::stol(v, &pos);
    } catch (const std::exception&) {
      fail(key, "expected an integer, got '" + v + "'", line);
    }
    if (pos != v.size()) fail(key, "expected an integer, got '" + v + "'", line);
    return static_cast<int>(x);
  }

  static const std::set<std::string>& known_sections() {
    static const std::set<std::string> s{"scenario", "system", "boundary", "grid", "ladder",
                                         "optimizer", "diagnostics", "oracle", "elliptic"};
    return s;
  }

 private:
  std::string origin_;
  std::map<std::string, Entry> entries_;
  std::set<std::string> used_;
};

// Runs a validator whose messages start with the field address.
template <class Fn>
void checked(const Reader& r, Fn&& fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    const std::string field = msg.substr(0, msg.find(' '));
    r.fail(field, msg, r.line_of(field));
  }
}

void parse_system(Reader& r, RunConfig& c) {
  int k = c.system.k;
  r.get("system.k", k);
  if (k < 1 || k > 64) r.fail("system.k", "species count must lie in [1, 64]", r.line_of("system.k"));

  SystemSpec spec = SystemSpec::uniform(k, 1.0);
  if (const Entry* e = r.take("system.A")) {
    const std::vector<std::string> rows = split(e->value, ';');
    if (static_cast<int>(rows.size()) != k)
      r.fail("system.A", "expected " + std::to_string(k) + " rows separated by ';'", e->line);
    for (int i = 0; i < k; ++i) {
      const std::vector<std::string> cols = split(rows[static_cast<std::size_t>(i)], ',');
      if (static_cast<int>(cols.size()) != k)
        r.fail("system.A[" + std::to_string(i) + "]", "expected " + std::to_string(k) + " entries", e->line);
      for (int j = 0; j < k; ++j)
        spec.A(i, j) = r.to_double("system.A[" + std::to_string(i) + "][" + std::to_string(j) + "]",
                                   cols[static_cast<std::size_t>(j)], e->line);
    }
  } else if (const Entry* a = r.take("system.a")) {
    spec = SystemSpec::uniform(k, r.to_double("system.a", a->value, a->line));
  }

  std::vector<std::string> kinds{"zero"};
  std::vector<double> lambdas{1.0};
  r.get("system.reaction", kinds);
  r.get("system.lambda", lambdas);
  if (kinds.size() != 1 && static_cast<int>(kinds.size()) != k)
    r.fail("system.reaction", "give one reaction or one per species", r.line_of("system.reaction"));
  if (lambdas.size() != 1 && static_cast<int>(lambdas.size()) != k)
    r.fail("system.lambda", "give one strength or one per species", r.line_of("system.lambda"));
  spec.reactions.assign(static_cast<std::size_t>(k), ReactionFamily{});
  for (int i = 0; i < k; ++i) {
    const std::size_t ik = kinds.size() == 1 ? 0 : static_cast<std::size_t>(i);
    const std::size_t il = lambdas.size() == 1 ? 0 : static_cast<std::size_t>(i);
    try {
      spec.reactions[static_cast<std::size_t>(i)].kind = parse_reaction_kind(kinds[ik]);
    } catch (const std::invalid_argument& ex) {
      r.fail("system.reaction", ex.what(), r.line_of("system.reaction"));
    }
    spec.reactions[static_cast<std::size_t>(i)].lambda = lambdas[il];
  }

  const ValidationReport rep = validate_system(spec);
  if (!rep.ok()) {
    const Violation& v = rep.violations.front();
    const std::string key = v.field.rfind("system.A", 0) == 0 ? "system.A" : v.field;
    r.fail(v.field, rep.summary(), r.line_of(key));
  }
  c.system = std::move(spec);
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin, const std::string& base_dir) {
  Reader r(text, origin);
  RunConfig c;

  r.get("scenario.name", c.name);
  r.get("scenario.seed", c.seed);
  if (c.name.empty()) r.fail("scenario.name", "must not be empty", r.line_of("scenario.name"));

  parse_system(r, c);

  r.get("boundary.preset", c.boundary.preset);
  r.get("boundary.csv", c.boundary.csv);
  std::string mode = to_string(c.boundary.mode);
  r.get("boundary.mode", mode);
  checked(r, [&] {
    try {
      c.boundary.mode = parse_bc_mode(mode);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(std::string("boundary.mode ") + e.what());
    }
    if (c.boundary.csv.empty()) {
      try {
        parse_profile_preset(c.boundary.preset);
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(std::string("boundary.preset ") + e.what());
      }
    } else if (std::filesystem::path(c.boundary.csv).is_relative()) {
      c.boundary.csv = (std::filesystem::path(base_dir) / c.boundary.csv).lexically_normal().string();
    }
  });

  GridConfig& g = c.grid;
  r.get("grid.dim", g.dim);
  r.get("grid.nx", g.nx);
  r.get("grid.ny", g.ny);
  r.get("grid.Lx", g.Lx);
  r.get("grid.Ly", g.Ly);
  r.get("grid.nt", g.nt);
  r.get("grid.T_r", g.T_r);
  r.get("grid.tail_tol", g.tail_tol);
  checked(r, [&] {
    if (g.dim != 1 && g.dim != 2) throw std::invalid_argument("grid.dim must be 1 or 2");
    if (g.nx < 3) throw std::invalid_argument("grid.nx must be >= 3");
    if (g.dim == 2 && g.ny < 3) throw std::invalid_argument("grid.ny must be >= 3 in 2-D");
    if (!(g.Lx > 0.0)) throw std::invalid_argument("grid.Lx must be > 0");
    if (g.dim == 2 && !(g.Ly > 0.0)) throw std::invalid_argument("grid.Ly must be > 0");
    if (g.nt < 3) throw std::invalid_argument("grid.nt must be >= 3");
    if (!(g.T_r > 0.0)) throw std::invalid_argument("grid.T_r must be > 0");
    if (!(g.tail_tol > 0.0)) throw std::invalid_argument("grid.tail_tol must be > 0");
  });

  r.get("ladder.betas", c.ladder.betas);
  r.get("ladder.epsilons", c.ladder.epsilons);
  r.get("ladder.cauchy_tol", c.ladder.cauchy_tol);
  checked(r, [&] { validate(c.ladder); });

  OptimizerConfig& o = c.optimizer;
  r.get("optimizer.max_iters", o.max_iters);
  r.get("optimizer.grad_tol", o.grad_tol);
  r.get("optimizer.backtrack_factor", o.backtrack_factor);
  r.get("optimizer.min_step", o.min_step);
  r.get("optimizer.armijo", o.armijo);
  std::string init = to_string(o.init);
  r.get("optimizer.init", init);
  checked(r, [&] {
    try {
      o.init = parse_init_mode(init);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(std::string("optimizer.init ") + e.what());
    }
    validate(o);
  });
  o.seed = c.seed;

  DiagnosticsConfig& d = c.diagnostics;
  r.get("diagnostics.space_centers", d.lattice.space_centers);
  r.get("diagnostics.time_centers", d.lattice.time_centers);
  r.get("diagnostics.scales", d.lattice.scales);
  r.get("diagnostics.fill", d.lattice.fill);
  r.get("diagnostics.c_w", d.c_w);
  r.get("diagnostics.energy_tol", d.energy_tol);
  r.get("diagnostics.window_tau", d.window_tau);
  r.get("diagnostics.window_T", d.window_T);
  r.get("diagnostics.uniformity_ratio", d.uniformity_ratio);
  r.get("diagnostics.overlap_decay", d.overlap_decay);
  r.get("diagnostics.cauchy_slack", d.cauchy_slack);
  r.get("diagnostics.gates", d.gates);
  checked(r, [&] {
    if (d.lattice.space_centers < 1) throw std::invalid_argument("diagnostics.space_centers must be >= 1");
    if (d.lattice.time_centers < 1) throw std::invalid_argument("diagnostics.time_centers must be >= 1");
    if (d.lattice.scales.empty()) throw std::invalid_argument("diagnostics.scales must not be empty");
    for (double s : d.lattice.scales)
      if (!(s > 0.0 && s <= 1.0)) throw std::invalid_argument("diagnostics.scales must lie in (0,1]");
    if (!(d.lattice.fill > 0.0 && d.lattice.fill < 1.0)) throw std::invalid_argument("diagnostics.fill must lie in (0,1)");
    if (!(d.c_w > 0.0)) throw std::invalid_argument("diagnostics.c_w must be > 0");
    if (!(d.energy_tol > 0.0)) throw std::invalid_argument("diagnostics.energy_tol must be > 0");
    for (double a : d.window_tau)
      if (!(a >= 0.0)) throw std::invalid_argument("diagnostics.window_tau must be >= 0");
    for (double b : d.window_T)
      if (!(b >= 1.0)) throw std::invalid_argument("diagnostics.window_T must be >= 1 (T >= eps)");
    if (!(d.uniformity_ratio >= 1.0)) throw std::invalid_argument("diagnostics.uniformity_ratio must be >= 1");
    if (!(d.overlap_decay > 0.0)) throw std::invalid_argument("diagnostics.overlap_decay must be > 0");
    if (!(d.cauchy_slack >= 1.0)) throw std::invalid_argument("diagnostics.cauchy_slack must be >= 1");
    for (const std::string& gate : d.gates)
      if (std::find(known_gates().begin(), known_gates().end(), gate) == known_gates().end())
        throw std::invalid_argument("diagnostics.gates unknown check '" + gate + "'");
  });

  r.get("oracle.enabled", c.oracle.enabled);
  r.get("oracle.beta", c.oracle.beta);
  r.get("oracle.dtau", c.oracle.dtau);
  r.get("oracle.theta", c.oracle.theta);
  r.get("oracle.discrepancy_slack", c.oracle.discrepancy_slack);
  checked(r, [&] {
    if (!(c.oracle.beta >= 0.0)) throw std::invalid_argument("oracle.beta must be >= 0");
    if (!(c.oracle.dtau > 0.0)) throw std::invalid_argument("oracle.dtau must be > 0");
    if (!(c.oracle.theta >= 0.5 && c.oracle.theta <= 1.0)) throw std::invalid_argument("oracle.theta must lie in [0.5, 1]");
    if (!(c.oracle.discrepancy_slack >= 1.0)) throw std::invalid_argument("oracle.discrepancy_slack must be >= 1");
  });

  r.get("elliptic.enabled", c.elliptic.enabled);
  r.get("elliptic.eps", c.elliptic.eps);
  r.get("elliptic.beta", c.elliptic.beta);
  r.get("elliptic.betas", c.elliptic.betas);
  r.get("elliptic.tol", c.elliptic.tol);
  checked(r, [&] {
    if (!(c.elliptic.eps > 0.0 && c.elliptic.eps < 1.0)) throw std::invalid_argument("elliptic.eps must lie in (0,1)");
    if (!(c.elliptic.beta >= 0.0)) throw std::invalid_argument("elliptic.beta must be >= 0");
    if (c.elliptic.betas.empty()) throw std::invalid_argument("elliptic.betas must not be empty");
    for (std::size_t i = 0; i < c.elliptic.betas.size(); ++i)
      if (!(c.elliptic.betas[i] > 0.0) || (i > 0 && !(c.elliptic.betas[i] > c.elliptic.betas[i - 1])))
        throw std::invalid_argument("elliptic.betas must be positive and strictly ascending");
    if (!(c.elliptic.tol > 0.0)) throw std::invalid_argument("elliptic.tol must be > 0");
  });

  r.reject_unused();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", path + ": cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string dir = std::filesystem::path(path).parent_path().string();
  return parse_config(buf.str(), path, dir.empty() ? "." : dir);
}

namespace {

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + v[i];
  return out;
}

}  // namespace

std::string render_config(const RunConfig& c) {
  std::ostringstream o;
  o << "[scenario]\nname = " << c.name << "\nseed = " << c.seed << "\n\n";

  const SystemSpec& s = c.system;
  o << "[system]\nk = " << s.k << "\nA = ";
  for (int i = 0; i < s.k; ++i) {
    for (int j = 0; j < s.k; ++j) o << (j ? ", " : "") << fmt(s.A(i, j));
    if (i + 1 < s.k) o << "; ";
  }
  std::vector<std::string> kinds;
  std::vector<double> lambdas;
  for (const ReactionFamily& rf : s.reactions) {
    kinds.push_back(to_string(rf.kind));
    lambdas.push_back(rf.lambda);
  }
  o << "\nreaction = " << join(kinds) << "\nlambda = " << join(lambdas) << "\n\n";

  o << "[boundary]\n";
  if (c.boundary.csv.empty()) o << "preset = " << c.boundary.preset << "\n";
  else o << "csv = " << c.boundary.csv << "\n";
  o << "mode = " << to_string(c.boundary.mode) << "\n\n";

  const GridConfig& g = c.grid;
  o << "[grid]\ndim = " << g.dim << "\nnx = " << g.nx << "\n";
  if (g.dim == 2) o << "ny = " << g.ny << "\n";
  o << "Lx = " << fmt(g.Lx) << "\n";
  if (g.dim == 2) o << "Ly = " << fmt(g.Ly) << "\n";
  o << "nt = " << g.nt << "\nT_r = " << fmt(g.T_r) << "\ntail_tol = " << fmt(g.tail_tol) << "\n\n";

  o << "[ladder]\nbetas = " << join(c.ladder.betas) << "\nepsilons = " << join(c.ladder.epsilons)
    << "\ncauchy_tol = " << fmt(c.ladder.cauchy_tol) << "\n\n";

  const OptimizerConfig& op = c.optimizer;
  o << "[optimizer]\nmax_iters = " << op.max_iters << "\ngrad_tol = " << fmt(op.grad_tol)
    << "\nbacktrack_factor = " << fmt(op.backtrack_factor) << "\nmin_step = " << fmt(op.min_step)
    << "\narmijo = " << fmt(op.armijo) << "\ninit = " << to_string(op.init) << "\n\n";

  const DiagnosticsConfig& d = c.diagnostics;
  o << "[diagnostics]\nspace_centers = " << d.lattice.space_centers << "\ntime_centers = " << d.lattice.time_centers
    << "\nscales = " << join(d.lattice.scales) << "\nfill = " << fmt(d.lattice.fill) << "\nc_w = " << fmt(d.c_w)
    << "\nenergy_tol = " << fmt(d.energy_tol) << "\nwindow_tau = " << join(d.window_tau)
    << "\nwindow_T = " << join(d.window_T) << "\nuniformity_ratio = " << fmt(d.uniformity_ratio)
    << "\noverlap_decay = " << fmt(d.overlap_decay) << "\ncauchy_slack = " << fmt(d.cauchy_slack) << "\n";
  if (!d.gates.empty()) o << "gates = " << join(d.gates) << "\n";
  o << "\n";

  o << "[oracle]\nenabled = " << (c.oracle.enabled ? "true" : "false") << "\nbeta = " << fmt(c.oracle.beta)
    << "\ndtau = " << fmt(c.oracle.dtau) << "\ntheta = " << fmt(c.oracle.theta)
    << "\ndiscrepancy_slack = " << fmt(c.oracle.discrepancy_slack) << "\n\n";

  o << "[elliptic]\nenabled = " << (c.elliptic.enabled ? "true" : "false") << "\neps = " << fmt(c.elliptic.eps)
    << "\nbeta = " << fmt(c.elliptic.beta) << "\nbetas = " << join(c.elliptic.betas)
    << "\ntol = " << fmt(c.elliptic.tol) << "\n";
  return o.str();
}

}  // namespace segflow
