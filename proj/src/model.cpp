#include "cdt/model.hpp"

#include "cdt/error.hpp"

#include <charconv>
#include <cmath>
#include <string>

namespace cdt {

void validate(const SystemSpec& spec) {
  if (spec.n_sites < 2) throw ValidationError("n_sites must be >= 2");
  if (!std::isfinite(spec.omega)) throw ValidationError("omega must be finite");
  if (spec.omega <= 0.0) throw ValidationError("omega must be positive");
  if (!std::isfinite(spec.omega0)) throw ValidationError("omega0 must be finite");
  if (!std::isfinite(spec.nu0)) throw ValidationError("nu0 must be finite");
  if (!std::isfinite(spec.a1)) throw ValidationError("a1 must be finite");
  if (!std::isfinite(spec.a2)) throw ValidationError("a2 must be finite");
}

CMatrix static_hamiltonian(const SystemSpec& spec) {
  const int n = spec.n_sites;
  CMatrix h = CMatrix::Zero(n, n);
  for (int j = 0; j + 1 < n; ++j) {
    h(j, j + 1) = spec.omega0;
    h(j + 1, j) = spec.omega0;
  }
  for (int j = 0; j + 2 < n; ++j) {
    h(j, j + 2) = spec.nu0;
    h(j + 2, j) = spec.nu0;
  }
  return h;
}

void fill_hamiltonian(const SystemSpec& spec, double t, CMatrix& out) {
  const int n = spec.n_sites;
  if (out.rows() != n || out.cols() != n) out.resize(n, n);
  out.setZero();
  for (int j = 0; j + 1 < n; ++j) {
    out(j, j + 1) = spec.omega0;
    out(j + 1, j) = spec.omega0;
  }
  for (int j = 0; j + 2 < n; ++j) {
    out(j, j + 2) = spec.nu0;
    out(j + 2, j) = spec.nu0;
  }
  const double drive = std::cos(spec.omega * t);
  out(0, 0) += spec.a1 * drive;
  out(n - 1, n - 1) += spec.a2 * drive;
}

HamiltonianMatrix hamiltonian_at(const SystemSpec& spec, double t) {
  validate(spec);
  HamiltonianMatrix h;
  h.time = t;
  fill_hamiltonian(spec, t, h.entries);
  return h;
}

nlohmann::json to_json(const SystemSpec& spec) {
  return nlohmann::json{{"n_sites", spec.n_sites}, {"omega0", spec.omega0},
                        {"nu0", spec.nu0},         {"a1", spec.a1},
                        {"a2", spec.a2},           {"omega", spec.omega}};
}

namespace {

double number_field(const nlohmann::json& value, const std::string& key) {
  if (!value.is_number())
    throw ValidationError("spec field '" + key + "' must be a number");
  return value.get<double>();
}

}  // namespace

SystemSpec spec_from_json(const nlohmann::json& j, bool require_all,
                          SystemSpec base) {
  if (!j.is_object()) throw ValidationError("spec must be a JSON object");
  SystemSpec spec = base;
  int seen = 0;
  for (const auto& [key, value] : j.items()) {
    if (key == "n_sites") {
      if (!value.is_number_integer())
        throw ValidationError("spec field 'n_sites' must be an integer");
      spec.n_sites = value.get<int>();
    } else if (key == "omega0") {
      spec.omega0 = number_field(value, key);
    } else if (key == "nu0") {
      spec.nu0 = number_field(value, key);
    } else if (key == "a1") {
      spec.a1 = number_field(value, key);
    } else if (key == "a2") {
      spec.a2 = number_field(value, key);
    } else if (key == "omega") {
      spec.omega = number_field(value, key);
    } else {
      throw ValidationError("unknown spec key '" + key + "'");
    }
    ++seen;
  }
  if (require_all && seen != 6)
    throw ValidationError(
        "spec must define n_sites, omega0, nu0, a1, a2 and omega");
  validate(spec);
  return spec;
}

void apply_override(SystemSpec& spec, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ValidationError("override must look like KEY=VALUE, got '" +
                          assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  const char* first = text.data();
  const char* last = text.data() + text.size();

  if (key == "n_sites") {
    int v = 0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
      throw ValidationError("n_sites override needs an integer, got '" + text + "'");
    spec.n_sites = v;
    return;
  }
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || text.empty())
    throw ValidationError(key + " override needs a number, got '" + text + "'");
  if (key == "omega0") spec.omega0 = v;
  else if (key == "nu0") spec.nu0 = v;
  else if (key == "a1") spec.a1 = v;
  else if (key == "a2") spec.a2 = v;
  else if (key == "omega") spec.omega = v;
  else throw ValidationError("unknown override key '" + key + "'");
}

}  // namespace cdt
