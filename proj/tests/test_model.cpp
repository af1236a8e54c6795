#include "cdt/error.hpp"
#include "cdt/model.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

using namespace cdt;

namespace {

SystemSpec fig2_spec() { return SystemSpec{3, 1.0, 0.0, 22.0, 0.0, 10.0}; }

std::string validation_message(const SystemSpec& spec) {
  try {
    validate(spec);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

SystemSpec random_spec(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n_dist(2, 8);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::uniform_real_distribution<double> w(0.5, 20.0);
  return SystemSpec{n_dist(rng), u(rng), u(rng), 5.0 * u(rng), 5.0 * u(rng), w(rng)};
}

}  // namespace

TEST_CASE("hamiltonian at t = 0 for the three-site chain") {
  const HamiltonianMatrix h = hamiltonian_at(fig2_spec(), 0.0);
  CHECK(h.dimension() == 3);
  CHECK(h.time == 0.0);
  CMatrix expected = CMatrix::Zero(3, 3);
  expected(0, 0) = 22.0;
  expected(0, 1) = expected(1, 0) = 1.0;
  expected(1, 2) = expected(2, 1) = 1.0;
  CHECK((h.entries - expected).norm() == 0.0);
}

TEST_CASE("quarter period has zero diagonal") {
  SystemSpec spec{5, 0.7, 0.3, 9.0, -4.0, 3.0};
  const HamiltonianMatrix h = hamiltonian_at(spec, spec.period() / 4.0);
  const CMatrix s = static_hamiltonian(spec);
  for (int j = 0; j < 5; ++j) CHECK(std::abs(h.entries(j, j)) < 1e-14);
  CHECK((h.entries - s).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("second-order couplings on four sites") {
  SystemSpec spec{4, 1.0, 0.2, 22.0, 7.0, 10.0};
  for (double t : {0.0, 0.13, 1.7}) {
    const CMatrix h = hamiltonian_at(spec, t).entries;
    CHECK(h(0, 2).real() == 0.2);
    CHECK(h(1, 3).real() == 0.2);
    CHECK(h(0, 3) == std::complex<double>(0.0, 0.0));
  }
}

TEST_CASE("drive entries sit on the boundary sites") {
  SystemSpec spec{4, 1.0, 0.0, 3.0, 5.0, 2.0};
  const double t = 0.4;
  const CMatrix h = hamiltonian_at(spec, t).entries;
  CHECK(h(0, 0).real() == doctest::Approx(3.0 * std::cos(2.0 * t)));
  CHECK(h(3, 3).real() == doctest::Approx(5.0 * std::cos(2.0 * t)));
  CHECK(h(1, 1) == std::complex<double>(0.0, 0.0));
  CHECK(h(2, 2) == std::complex<double>(0.0, 0.0));
}

TEST_CASE("two-site chain has both drives and no second-order bond") {
  SystemSpec spec{2, 1.0, 0.5, 1.0, 2.0, 1.0};
  const CMatrix h = hamiltonian_at(spec, 0.0).entries;
  CHECK(h(0, 0).real() == 1.0);
  CHECK(h(1, 1).real() == 2.0);
  CHECK(h(0, 1).real() == 1.0);
}

TEST_CASE("validation") {
  CHECK(validation_message(fig2_spec()).empty());
  SystemSpec s = fig2_spec();
  s.n_sites = 1;
  CHECK(validation_message(s) == "n_sites must be >= 2");
  s = fig2_spec();
  s.omega = 0.0;
  CHECK(validation_message(s) == "omega must be positive");
  s.omega = -1.0;
  CHECK(validation_message(s) == "omega must be positive");
  s = fig2_spec();
  s.a2 = std::numeric_limits<double>::infinity();
  CHECK(validation_message(s).find("a2") != std::string::npos);
  s = fig2_spec();
  s.nu0 = std::nan("");
  CHECK(validation_message(s).find("nu0") != std::string::npos);
  s = fig2_spec();
  s.n_sites = 1;
  CHECK_THROWS_AS(hamiltonian_at(s, 0.0), ValidationError);
}

TEST_CASE("period times omega is two pi") {
  for (double w : {0.3, 1.0, 10.0, 40.0})
    CHECK(SystemSpec{3, 1, 0, 0, 0, w}.period() * w ==
          doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-15));
}

TEST_CASE("periodicity, half-period antisymmetry, Hermiticity and band structure") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> t_dist(-50.0, 50.0);
  for (int trial = 0; trial < 200; ++trial) {
    const SystemSpec spec = random_spec(rng);
    const double t = t_dist(rng);
    const int n = spec.n_sites;
    const CMatrix h = hamiltonian_at(spec, t).entries;
    const CMatrix h_period = hamiltonian_at(spec, t + spec.period()).entries;
    const CMatrix h_half = hamiltonian_at(spec, t + spec.period() / 2.0).entries;
    const double scale = 1.0 + std::abs(spec.a1) + std::abs(spec.a2);
    CHECK((h - h_period).cwiseAbs().maxCoeff() < 1e-12 * scale);
    CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() == 0.0);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) {
        const auto v = h(r, c);
        CHECK(v.imag() == 0.0);
        const int d = std::abs(r - c);
        if (d == 0) {
          if (r != 0 && r != n - 1) CHECK(v.real() == 0.0);
          CHECK(std::abs(h_half(r, c).real() + v.real()) < 1e-12 * scale);
        } else {
          CHECK(h_half(r, c) == v);
          if (d == 1) CHECK(v.real() == spec.omega0);
          if (d == 2) CHECK(v.real() == spec.nu0);
          if (d > 2) CHECK(v.real() == 0.0);
        }
      }
  }
}

TEST_CASE("json round trip") {
  const SystemSpec spec{4, 1.0, 0.2, 22.0, 7.5, 10.0};
  const nlohmann::json j = to_json(spec);
  CHECK(j.size() == 6);
  CHECK(spec_from_json(j) == spec);
}

TEST_CASE("json rejects unknown keys, missing keys and bad values") {
  nlohmann::json j = to_json(fig2_spec());
  j["gamma"] = 1.0;
  CHECK_THROWS_AS(spec_from_json(j), ValidationError);

  nlohmann::json partial = {{"a2", 24.0}};
  CHECK_THROWS_AS(spec_from_json(partial), ValidationError);
  const SystemSpec merged = spec_from_json(partial, false, fig2_spec());
  CHECK(merged.a2 == 24.0);
  CHECK(merged.a1 == 22.0);

  CHECK_THROWS_AS(spec_from_json(nlohmann::json{{"a1", "22"}}, false), ValidationError);
  CHECK_THROWS_AS(spec_from_json(nlohmann::json{{"n_sites", 3.5}}, false), ValidationError);
  CHECK_THROWS_AS(spec_from_json(nlohmann::json{{"omega", 0.0}}, false), ValidationError);
  CHECK_THROWS_AS(spec_from_json(nlohmann::json::array()), ValidationError);
}

TEST_CASE("overrides") {
  SystemSpec spec = fig2_spec();
  apply_override(spec, "a2=24");
  apply_override(spec, "n_sites=5");
  apply_override(spec, "nu0=0.2");
  CHECK(spec.a2 == 24.0);
  CHECK(spec.n_sites == 5);
  CHECK(spec.nu0 == 0.2);
  CHECK_THROWS_AS(apply_override(spec, "a3=1"), ValidationError);
  CHECK_THROWS_AS(apply_override(spec, "a2"), ValidationError);
  CHECK_THROWS_AS(apply_override(spec, "a2=abc"), ValidationError);
  CHECK_THROWS_AS(apply_override(spec, "n_sites=2.5"), ValidationError);
  apply_override(spec, "omega=0");
  CHECK(spec.omega == 0.0);
  CHECK_THROWS_AS(validate(spec), ValidationError);
}
