#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <numbers>

namespace cdt {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Boundary-driven tight-binding chain. Site 1 is driven by a1*cos(omega t),
/// site N by a2*cos(omega t); omega0 couples nearest neighbours and nu0
/// next-nearest neighbours. Energies and frequencies share units (hbar = 1).
struct SystemSpec {
  int n_sites = 3;
  double omega0 = 1.0;
  double nu0 = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
  double omega = 1.0;

  double period() const { return 2.0 * std::numbers::pi / omega; }

  bool operator==(const SystemSpec&) const = default;
};

struct HamiltonianMatrix {
  CMatrix entries;
  double time = 0.0;

  Eigen::Index dimension() const { return entries.rows(); }
};

/// Throws ValidationError naming the first violated constraint.
void validate(const SystemSpec& spec);

/// H(t) with open boundaries; couplings that would reach past site 1 or N are
/// dropped.
HamiltonianMatrix hamiltonian_at(const SystemSpec& spec, double t);

/// Writes H(t) into `out` (resized as needed). Hot-path variant used by the
/// integrators.
void fill_hamiltonian(const SystemSpec& spec, double t, CMatrix& out);

/// Time-independent part: couplings only, zero diagonal.
CMatrix static_hamiltonian(const SystemSpec& spec);

nlohmann::json to_json(const SystemSpec& spec);
/// Rejects unknown keys and non-numeric values. Missing keys are an error when
/// `require_all` is set and otherwise keep the value from `base`. The result
/// is validated.
SystemSpec spec_from_json(const nlohmann::json& j, bool require_all = true,
                          SystemSpec base = {});

/// Applies "key=value" to one field; throws ValidationError on unknown keys
/// or unparsable values. Does not validate the resulting spec.
void apply_override(SystemSpec& spec, const std::string& assignment);

}  // namespace cdt
