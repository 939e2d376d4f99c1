#ifndef ANRSP_CONFIG_HPP
#define ANRSP_CONFIG_HPP

#include <array>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "anrsp/errors.hpp"
#include "anrsp/io.hpp"
#include "anrsp/maps.hpp"
#include "anrsp/response.hpp"
#include "anrsp/spectral.hpp"

namespace anrsp {

// Run configuration: one `key = value` per line, `#` starts a comment.
//
//   map        = cat | nonlinear_cat | custom
//   Delta      = <real>                    nonlinear_cat amplitude (default 0.01)
//   A          = [[a, b], [c, d]]          custom: integer linear part
//   trig       = {component, kind, amplitude, j1, j2, phase}   (custom, repeatable)
//   observable = cosine_sum | gaussian_pair | grid_file
//   p1, p2     = x1, x2                    gaussian centres
//   sigma      = <real>                    gaussian width
//   grid_path  = <file>                    grid_file samples, relative to the config
//   n, N, gamma
//   delta, deltas = d1, d2, ..., mean_perturbation, trials, seed, quiver
struct RunConfig {
  TorusMapSpec map = cat_map();
  ObjectiveSpec objective = ObjectiveSpec::cosine_sum();
  SpectralConfig spectral{};
  std::optional<double> delta;
  std::optional<double> mean_perturbation;  // target for delta * mean |V|
  std::vector<double> deltas{1e-3, 2e-3, 4e-3};
  int trials = 100;
  std::uint64_t seed = 0;
  int quiver = 24;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

class ConfigLine {
 public:
  ConfigLine(std::string origin, std::size_t line, std::string key, std::string value)
      : origin_(std::move(origin)), line_(line), key_(std::move(key)), value_(std::move(value)) {}

  const std::string& key() const { return key_; }
  const std::string& value() const { return value_; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError(origin_ + ":" + std::to_string(line_) + ": " + key_ + ": " + msg);
  }

  double real() const {
    try {
      return io::parse_double(value_);
    } catch (const Error&) {
      fail("expected a real number, got '" + value_ + "'");
    }
  }

  long integer() const {
    try {
      return io::parse_long(value_);
    } catch (const Error&) {
      fail("expected an integer, got '" + value_ + "'");
    }
  }

  std::vector<double> reals(std::size_t expected = 0) const {
    std::vector<double> out;
    for (auto part : io::split(value_, ',')) {
      try {
        out.push_back(io::parse_double(trim(part)));
      } catch (const Error&) {
        fail("expected a comma-separated list of reals, got '" + value_ + "'");
      }
    }
    if (expected != 0 && out.size() != expected) {
      fail("expected " + std::to_string(expected) + " values, got " + std::to_string(out.size()));
    }
    return out;
  }

 private:
  std::string origin_;
  std::size_t line_;
  std::string key_;
  std::string value_;
};

inline std::array<std::array<long, 2>, 2> parse_matrix(const ConfigLine& l) {
  std::string flat;
  for (char ch : l.value()) {
    if (ch != '[' && ch != ']') flat.push_back(ch);
  }
  std::vector<long> v;
  for (auto part : io::split(flat, ',')) {
    try {
      v.push_back(io::parse_long(trim(part)));
    } catch (const Error&) {
      l.fail("expected [[a, b], [c, d]] with integer entries");
    }
  }
  if (v.size() != 4) l.fail("expected four integer entries");
  return {{{v[0], v[1]}, {v[2], v[3]}}};
}

inline TrigTerm parse_trig(const ConfigLine& l) {
  // Accepts both `1 cos 0.02 1 0 0` and `{1, cos, 0.02, 1, 0, 0}`.
  std::string flat;
  for (char ch : l.value()) flat.push_back(ch == ',' || ch == '{' || ch == '}' ? ' ' : ch);
  std::istringstream is(flat);
  std::vector<std::string> tok;
  for (std::string t; is >> t;) tok.push_back(t);
  if (tok.size() != 6) l.fail("expected 'component kind amplitude j1 j2 phase'");
  TrigTerm t;
  try {
    t.component = int(io::parse_long(tok[0]));
    t.amplitude = io::parse_double(tok[2]);
    t.j1 = int(io::parse_long(tok[3]));
    t.j2 = int(io::parse_long(tok[4]));
    t.phase = io::parse_double(tok[5]);
  } catch (const Error&) {
    l.fail("malformed trig term '" + l.value() + "'");
  }
  if (t.component != 1 && t.component != 2) l.fail("component must be 1 or 2");
  if (tok[1] == "sin") {
    t.kind = TrigKind::Sin;
  } else if (tok[1] == "cos") {
    t.kind = TrigKind::Cos;
  } else {
    l.fail("kind must be sin or cos, got '" + tok[1] + "'");
  }
  return t;
}

}  // namespace detail

/// Parses config text. `origin` names the source in error messages and
/// `base_dir` resolves relative grid paths.
inline RunConfig parse_config(std::string_view text, const std::string& origin = "<config>",
                              const std::filesystem::path& base_dir = {}) {
  using detail::ConfigLine;
  std::vector<ConfigLine> lines;
  std::set<std::string> seen;
  std::size_t lineno = 0;
  std::istringstream in{std::string(text)};
  for (std::string raw; std::getline(in, raw);) {
    ++lineno;
    std::string_view s = raw;
    if (auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = detail::trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key(detail::trim(s.substr(0, eq)));
    std::string value(detail::trim(s.substr(eq + 1)));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    ConfigLine line(origin, lineno, key, value);
    if (key != "trig" && !seen.insert(key).second) line.fail("duplicate key");
    lines.push_back(std::move(line));
  }

  static const std::set<std::string> known{"map",   "Delta", "A",     "trig",   "observable",
                                           "p1",    "p2",    "sigma", "grid_path", "n",
                                           "N",     "gamma", "delta", "deltas", "mean_perturbation",
                                           "trials", "seed", "quiver"};
  const ConfigLine* map_line = nullptr;
  const ConfigLine* obs_line = nullptr;
  const ConfigLine* big_n_line = nullptr;
  std::map<std::string, const ConfigLine*> by_key;
  for (const auto& l : lines) {
    if (!known.count(l.key())) l.fail("unknown key");
    if (l.key() == "map") map_line = &l;
    if (l.key() == "observable") obs_line = &l;
    if (l.key() == "N") big_n_line = &l;
    if (l.key() != "trig") by_key[l.key()] = &l;
  }
  auto get = [&](const std::string& k) -> const ConfigLine* {
    auto it = by_key.find(k);
    return it == by_key.end() ? nullptr : it->second;
  };

  RunConfig cfg;

  const std::string map_kind = map_line ? map_line->value() : "cat";
  if (map_kind == "cat") {
    cfg.map = cat_map();
  } else if (map_kind == "nonlinear_cat") {
    cfg.map = nonlinear_cat_map(get("Delta") ? get("Delta")->real() : 0.01);
  } else if (map_kind == "custom") {
    const ConfigLine* a = get("A");
    if (!a) map_line->fail("custom map requires an 'A' line");
    cfg.map = TorusMapSpec{};
    cfg.map.name = "custom";
    cfg.map.linear = detail::parse_matrix(*a);
    for (const auto& l : lines) {
      if (l.key() == "trig") cfg.map.trig.push_back(detail::parse_trig(l));
    }
  } else {
    map_line->fail("unknown map '" + map_kind + "' (cat, nonlinear_cat, custom)");
  }
  for (const auto& l : lines) {
    if ((l.key() == "A" || l.key() == "trig") && map_kind != "custom") l.fail("only valid with map = custom");
    if (l.key() == "Delta" && map_kind != "nonlinear_cat") l.fail("only valid with map = nonlinear_cat");
  }
  try {
    validate_map(cfg.map);
  } catch (const Error& e) {
    if (map_line) map_line->fail(e.what());
    throw;
  }

  const std::string obs_kind = obs_line ? obs_line->value() : "cosine_sum";
  if (obs_kind == "cosine_sum") {
    cfg.objective = ObjectiveSpec::cosine_sum();
  } else if (obs_kind == "gaussian_pair") {
    ObjectiveSpec o;
    TorusPoint p1 = o.p1, p2 = o.p2;
    if (auto* l = get("p1")) {
      auto v = l->reals(2);
      p1 = {v[0], v[1]};
    }
    if (auto* l = get("p2")) {
      auto v = l->reals(2);
      p2 = {v[0], v[1]};
    }
    double sigma = o.sigma;
    if (auto* l = get("sigma")) {
      sigma = l->real();
      if (!(sigma > 0.0)) l->fail("must be positive");
    }
    cfg.objective = ObjectiveSpec::gaussian_pair(p1, p2, sigma);
  } else if (obs_kind == "grid_file") {
    const ConfigLine* l = get("grid_path");
    if (!l) obs_line->fail("grid_file requires a 'grid_path' line");
    cfg.objective = ObjectiveSpec{};
    cfg.objective.kind = ObjectiveKind::GridFile;
    std::filesystem::path p(l->value());
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    cfg.objective.path = p.string();
    cfg.objective.label = "grid_file";
  } else {
    obs_line->fail("unknown observable '" + obs_kind + "' (cosine_sum, gaussian_pair, grid_file)");
  }
  for (const char* k : {"p1", "p2", "sigma"}) {
    if (get(k) && obs_kind != "gaussian_pair") get(k)->fail("only valid with observable = gaussian_pair");
  }
  if (get("grid_path") && obs_kind != "grid_file") get("grid_path")->fail("only valid with observable = grid_file");

  if (auto* l = get("n")) cfg.spectral.n = int(l->integer());
  if (auto* l = get("N")) cfg.spectral.N = int(l->integer());
  if (auto* l = get("gamma")) cfg.spectral.gamma = l->real();
  try {
    cfg.spectral.validate();
  } catch (const GridTooCoarse& e) {
    if (big_n_line) big_n_line->fail(e.what());
    if (auto* l = get("n")) l->fail(e.what());
    throw;
  } catch (const BadOrder& e) {
    if (auto* l = get("n")) l->fail(e.what());
    throw;
  } catch (const Error& e) {
    if (auto* l = get("gamma")) l->fail(e.what());
    throw;
  }

  if (auto* l = get("delta")) cfg.delta = l->real();
  if (auto* l = get("mean_perturbation")) {
    cfg.mean_perturbation = l->real();
    if (!(*cfg.mean_perturbation >= 0.0)) l->fail("must be non-negative");
  }
  if (auto* l = get("deltas")) {
    cfg.deltas = l->reals();
    for (std::size_t i = 0; i < cfg.deltas.size(); ++i) {
      if (!(cfg.deltas[i] > 0.0) || (i > 0 && !(cfg.deltas[i] > cfg.deltas[i - 1]))) {
        l->fail("deltas must be positive and strictly increasing");
      }
    }
  }
  if (auto* l = get("trials")) {
    const long t = l->integer();
    if (t < 0) l->fail("must be non-negative");
    cfg.trials = int(t);
  }
  if (auto* l = get("seed")) {
    const long s = l->integer();
    if (s < 0) l->fail("must be non-negative");
    cfg.seed = std::uint64_t(s);
  }
  if (auto* l = get("quiver")) {
    const long q = l->integer();
    if (q < 1) l->fail("must be >= 1");
    cfg.quiver = int(q);
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str(), path, std::filesystem::path(path).parent_path());
}

}  // namespace anrsp

#endif  // ANRSP_CONFIG_HPP
