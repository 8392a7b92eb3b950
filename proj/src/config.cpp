#include "chdf/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "chdf/errors.hpp"

namespace chdf {

namespace {

using Setter = std::function<void(const std::string& value)>;

struct BadValue {
  std::string what;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_real(const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw BadValue{"expected a real number, got '" + v + "'"};
  return out;
}

template <class Int>
Int to_int(const std::string& v) {
  Int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw BadValue{"expected an integer, got '" + v + "'"};
  return out;
}

bool to_bool(const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw BadValue{"expected true or false, got '" + v + "'"};
}

std::map<std::string, Setter> setters(RunConfig& c) {
  auto real = [](double& x) { return [&x](const std::string& v) { x = to_real(v); }; };
  auto integer = [](int& x) { return [&x](const std::string& v) { x = to_int<int>(v); }; };
  auto long_int = [](long& x) { return [&x](const std::string& v) { x = to_int<long>(v); }; };
  auto text = [](std::string& x) { return [&x](const std::string& v) { x = v; }; };
  auto maybe = [](std::optional<double>& x) { return [&x](const std::string& v) { x = to_real(v); }; };

  ModelParams& m = c.model;
  SolverTolerances& t = c.tolerances;
  return {
      {"seed", [&c](const std::string& v) { c.seed = to_int<std::uint64_t>(v); }},
      {"grid.nx", integer(c.grid.nx)},
      {"grid.ny", integer(c.grid.ny)},
      {"grid.Lx", real(c.grid.Lx)},
      {"grid.Ly", real(c.grid.Ly)},
      {"time.h", real(c.time.h)},
      {"time.t_end", real(c.time.t_end)},
      {"time.output_every", long_int(c.time.output_every)},
      {"time.equilibrium_tol", real(c.time.equilibrium_tol)},
      {"model.alpha", real(m.alpha)},
      {"model.beta", real(m.beta)},
      {"model.sigma1", real(m.sigma1)},
      {"model.sigma2", real(m.sigma2)},
      {"model.c", real(m.c)},
      {"model.r", real(m.r)},
      {"model.theta_phi", real(m.theta_phi)},
      {"model.theta_psi", real(m.theta_psi)},
      {"model.theta_c", real(m.theta_c)},
      {"model.w", real(m.w)},
      {"model.nu_const", real(m.nu_const)},
      {"model.eta_const", real(m.eta_const)},
      {"model.m_phi_const", real(m.m_phi_const)},
      {"model.m_psi_const", real(m.m_psi_const)},
      {"tolerances.newton_tol", real(t.newton_tol)},
      {"tolerances.picard_tol", real(t.picard_tol)},
      {"tolerances.energy_tol", real(t.energy_tol)},
      {"tolerances.velocity_tol", real(t.velocity_tol)},
      {"tolerances.max_newton", integer(t.max_newton)},
      {"tolerances.max_picard", integer(t.max_picard)},
      {"tolerances.newton_damping_min", real(t.newton_damping_min)},
      {"tolerances.uzawa_omega", real(t.uzawa_omega)},
      {"tolerances.max_outer", integer(t.max_outer)},
      {"tolerances.max_halvings", integer(t.max_halvings)},
      {"tolerances.dealias", [&t](const std::string& v) { t.dealias = to_bool(v); }},
      {"initial.preset", text(c.initial.preset)},
      {"initial.phi_mean", real(c.initial.phi_mean)},
      {"initial.psi_mean", real(c.initial.psi_mean)},
      {"initial.stripe_amplitude", real(c.initial.stripe_amplitude)},
      {"initial.stripe_width", real(c.initial.stripe_width)},
      {"initial.noise", real(c.initial.noise)},
      {"initial.noise_modes", integer(c.initial.noise_modes)},
      {"initial.snapshot", text(c.initial.snapshot)},
      {"output.directory", text(c.output.directory)},
      {"output.series", text(c.output.series)},
      {"output.snapshot_prefix", text(c.output.snapshot_prefix)},
      {"steady.phi_mass", maybe(c.steady.phi_mass)},
      {"steady.psi_mass", maybe(c.steady.psi_mass)},
      {"steady.tol", real(c.steady.tol)},
      {"steady.max_newton", integer(c.steady.max_newton)},
      {"debug.perturb_step", long_int(c.debug.perturb_step)},
      {"debug.perturb_amplitude", real(c.debug.perturb_amplitude)},
  };
}

void require(bool ok, const std::string& key, const std::string& message) {
  if (!ok) throw ValidationError(key, key + " " + message);
}

bool power_of_two(int n) { return n >= 8 && (n & (n - 1)) == 0; }

}  // namespace

void RunConfig::validate() const {
  require(power_of_two(grid.nx), "nx", "must be a power of two >= 8");
  require(power_of_two(grid.ny), "ny", "must be a power of two >= 8");
  require(std::isfinite(grid.Lx) && grid.Lx > 0.0, "Lx", "must be > 0");
  require(std::isfinite(grid.Ly) && grid.Ly > 0.0, "Ly", "must be > 0");
  model.validate();
  tolerances.validate();
  require(std::isfinite(time.h) && time.h > 0.0, "h", "must be > 0");
  require(time.h * model.sigma1 < 1.0, "h", "times sigma1 must be < 1");
  require(std::isfinite(time.t_end) && time.t_end >= 0.0, "t_end", "must be >= 0");
  require(time.output_every >= 0, "output_every", "must be >= 0");
  require(std::isfinite(time.equilibrium_tol) && time.equilibrium_tol >= 0.0, "equilibrium_tol", "must be >= 0");

  static const std::set<std::string> presets{"homogeneous", "stripe", "random_spinodal", "snapshot"};
  if (!presets.count(initial.preset)) throw Error(ErrorKind::UnknownPreset, "unknown preset '" + initial.preset + "'");
  require(std::abs(initial.phi_mean) < 1.0, "phi_mean", "must lie in the open interval (-1,1)");
  require(initial.psi_mean > 0.0 && initial.psi_mean < 1.0, "psi_mean", "must lie in the open interval (0,1)");
  require(std::isfinite(initial.stripe_amplitude) && initial.stripe_amplitude >= 0.0, "stripe_amplitude",
          "must be >= 0");
  require(std::isfinite(initial.stripe_width) && initial.stripe_width > 0.0, "stripe_width", "must be > 0");
  require(initial.noise >= 0.0 && initial.noise <= 0.05, "noise", "must lie in [0, 0.05]");
  require(initial.noise_modes >= 1, "noise_modes", "must be >= 1");
  require(initial.preset != "snapshot" || !initial.snapshot.empty(), "snapshot", "must name a snapshot prefix");
  if (initial.preset == "random_spinodal") {
    require(std::abs(initial.phi_mean) + initial.noise < 1.0, "noise", "pushes phi outside (-1,1)");
    require(initial.psi_mean - initial.noise > 0.0 && initial.psi_mean + initial.noise < 1.0, "noise",
            "pushes psi outside (0,1)");
  }

  require(!output.directory.empty(), "directory", "must not be empty");
  require(!output.series.empty(), "series", "must not be empty");
  require(!output.snapshot_prefix.empty(), "snapshot_prefix", "must not be empty");

  if (steady.phi_mass) require(std::abs(*steady.phi_mass) < 1.0, "phi_mass", "must lie in the open interval (-1,1)");
  if (steady.psi_mass)
    require(*steady.psi_mass > 0.0 && *steady.psi_mass < 1.0, "psi_mass", "must lie in the open interval (0,1)");
  require(std::isfinite(steady.tol) && steady.tol > 0.0, "tol", "must be > 0");
  require(steady.max_newton > 0, "max_newton", "must be > 0");
  require(std::isfinite(debug.perturb_amplitude), "perturb_amplitude", "must be finite");
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  RunConfig cfg;
  const auto table = setters(cfg);
  std::set<std::string> seen;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  auto fail = [&](const std::string& what) {
    throw Error(ErrorKind::ParseError, source + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find_first_of("#;");
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) fail("empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail("missing key");
    if (value.empty()) fail("missing value for '" + key + "'");
    const std::string full = section.empty() ? key : section + "." + key;
    const auto it = table.find(full);
    if (it == table.end()) throw ValidationError(key, "unknown key '" + full + "' at " + source + ":" + std::to_string(line_no));
    if (!seen.insert(full).second) fail("duplicate key '" + full + "'");
    try {
      it->second(value);
    } catch (const BadValue& e) {
      fail(full + ": " + e.what);
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::IoError, "cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace chdf
