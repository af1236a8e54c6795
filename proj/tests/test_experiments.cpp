#include "cdt/error.hpp"
#include "cdt/experiments.hpp"
#include "cdt/specfun.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace cdt;

namespace {

ScanConfig config_for(int n_sites, double nu0, Grid grid, int horizon = 200) {
  ScanConfig c;
  c.base_spec = SystemSpec{n_sites, 1.0, nu0, 22.0, 0.0, 10.0};
  c.grid = grid;
  c.horizon_periods = horizon;
  c.workers = 1;
  return c;
}

std::string min_p1_csv(const ScanResult& r) {
  std::ostringstream os;
  write_min_p1_csv(os, r);
  return os.str();
}

std::string spectrum_csv(const ScanResult& r) {
  std::ostringstream os;
  write_spectrum_csv(os, r);
  return os.str();
}

std::string validation_message(const ScanConfig& c) {
  try {
    validate(c);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("grids") {
  const Grid g{0.0, 6.0, 241};
  const auto v = g.values();
  REQUIRE(v.size() == 241);
  CHECK(v.front() == 0.0);
  CHECK(v.back() == 6.0);
  CHECK(g.spacing() == doctest::Approx(0.025));
  CHECK(v[96] == doctest::Approx(2.4));
  const Grid p = parse_grid("1.5:2.5:11");
  CHECK(p.start == 1.5);
  CHECK(p.stop == 2.5);
  CHECK(p.points == 11);
  CHECK_THROWS_AS(parse_grid("0:6"), ValidationError);
  CHECK_THROWS_AS(parse_grid("0:6:1"), ValidationError);
  CHECK_THROWS_AS(parse_grid("6:0:5"), ValidationError);
  CHECK_THROWS_AS(parse_grid("a:6:5"), ValidationError);
  CHECK_THROWS_AS(parse_grid("0:6:5.5"), ValidationError);
}

TEST_CASE("scan config validation") {
  ScanConfig c = config_for(3, 0.0, {});
  CHECK(validation_message(c).empty());
  c.horizon_periods = 0;
  CHECK(validation_message(c).find("horizon") != std::string::npos);
  c = config_for(3, 0.0, {});
  c.initial_site = 4;
  CHECK(validation_message(c).find("initial_site") != std::string::npos);
  c = config_for(3, 0.0, {});
  c.grid.points = 1;
  CHECK_FALSE(validation_message(c).empty());
  c = config_for(3, 0.0, {});
  c.steps_per_period = 10;
  CHECK_FALSE(validation_message(c).empty());
  c = config_for(3, 0.0, {});
  c.base_spec.omega = -1.0;
  CHECK(validation_message(c).find("omega") != std::string::npos);
  CHECK_THROWS_AS(scan_min_p1(c), ValidationError);
}

TEST_CASE("J0 zeros inside a range") {
  const auto z = j0_zeros_in(0.0, 6.0);
  REQUIRE(z.size() == 2);
  CHECK(z[0].index == 1);
  CHECK(z[0].location == specfun::j0_zero(1));
  CHECK(z[1].location == doctest::Approx(5.520078));
  CHECK(j0_zeros_in(0.0, 2.0).empty());
  CHECK(j0_zeros_in(0.0, 100.0).size() == 5);
}

TEST_CASE("worker resolution") {
  CHECK(resolve_workers(3) == 3);
  CHECK(resolve_workers(0) >= 1);
}

TEST_CASE("three-site Min(P1) near the zeros and at the origin") {
  const double cell = 0.025;
  for (double z : {specfun::j0_zero(1), specfun::j0_zero(2)}) {
    const ScanResult r = scan_min_p1(config_for(3, 0.0, {z - cell, z + cell, 3}));
    for (const auto& p : r.points) CHECK(*p.min_p1 < 0.05);
  }
  const ScanResult origin = scan_min_p1(config_for(3, 0.0, {0.0, 0.05, 3}));
  CHECK(*origin.points.front().min_p1 > 0.9);
}

TEST_CASE("four-site Min(P1) with second-order coupling") {
  const ScanResult r = scan_min_p1(config_for(4, 0.2, {0.0, 3.0, 31}));
  std::vector<double> m;
  for (const auto& p : r.points) m.push_back(*p.min_p1);
  CHECK(m[0] > 0.35);
  CHECK(m[0] < 0.65);
  // Falls steadily to a low value ...
  for (int i = 5; i <= 20; ++i) CHECK(m[static_cast<std::size_t>(i)] <= m[static_cast<std::size_t>(i - 5)]);
  CHECK(m[20] < 0.2);
  // ... then peaks just below the first zero.
  const auto peak = std::max_element(m.begin() + 20, m.begin() + 26);
  CHECK(*peak > 0.5);
  CHECK(r.points[static_cast<std::size_t>(peak - m.begin())].a2_over_omega >= 2.1);
  CHECK(r.points[static_cast<std::size_t>(peak - m.begin())].a2_over_omega <= 2.5);
}

TEST_CASE("two identical grid points give identical records") {
  const ScanResult r = scan_min_p1(config_for(3, 0.0, {1.7, 1.7, 2}, 20));
  REQUIRE(r.points.size() == 2);
  CHECK(r.points[0].a2_over_omega == r.points[1].a2_over_omega);
  CHECK(*r.points[0].min_p1 == *r.points[1].min_p1);
  const ScanResult s = scan_spectrum(config_for(3, 0.0, {1.7, 1.7, 2}));
  CHECK(s.points[0].quasienergies == s.points[1].quasienergies);
  CHECK(s.points[0].avg_populations == s.points[1].avg_populations);
}

TEST_CASE("min_p1 records stay in range") {
  const ScanResult r = scan_min_p1(config_for(5, 0.2, {0.0, 6.0, 13}, 30));
  for (const auto& p : r.points) {
    CHECK(*p.min_p1 >= 0.0);
    CHECK(*p.min_p1 <= 1.0);
  }
  CHECK(r.landmarks.size() == 2);
}

TEST_CASE("determinism and worker-count invariance") {
  ScanConfig c = config_for(4, 0.2, {0.0, 6.0, 25}, 30);
  const std::string one = min_p1_csv(scan_min_p1(c));
  CHECK(one == min_p1_csv(scan_min_p1(c)));
  c.workers = 4;
  CHECK(one == min_p1_csv(scan_min_p1(c)));
  c.workers = 1;
  c.horizon_periods = 1;
  const std::string spec_one = spectrum_csv(scan_spectrum(c));
  c.workers = 3;
  CHECK(spec_one == spectrum_csv(scan_spectrum(c)));
}

TEST_CASE("a failing grid point yields a partial result") {
  ScanConfig c = config_for(3, 0.0, {0.0, 1e308, 2}, 5);
  try {
    scan_min_p1(c);
    FAIL("expected a scan error");
  } catch (const ScanError& e) {
    REQUIRE(e.completed().size() == 1);
    CHECK(e.completed()[0].a2_over_omega == 0.0);
    CHECK(e.completed()[0].min_p1.has_value());
    CHECK(std::string(e.what()).find("a2 must be finite") != std::string::npos);
  }
}

TEST_CASE("three-site spectrum: pinned zero branch, principal zone") {
  const ScanResult r = scan_spectrum(config_for(3, 0.0, {0.0, 6.0, 49}));
  REQUIRE(r.spectrum.has_value());
  const auto dark = zero_energy_branch(*r.spectrum);
  REQUIRE(dark.has_value());
  for (const auto& p : r.points) {
    REQUIRE(p.quasienergies.size() == 3);
    for (double e : p.quasienergies) {
      CHECK(e > -5.0);
      CHECK(e <= 5.0);
    }
    CHECK(std::abs(p.quasienergies[static_cast<std::size_t>(*dark - 1)]) < 1e-6);
  }
  // With nu0 = 0 there is no avoided crossing to report, only the dark mode
  // touching its partners near the zeros.
  CHECK(r.landmarks.size() == 2);
}

TEST_CASE("five-site spectrum: dark branch avoids even sites") {
  // Fine enough for overlap tracking to follow the dark vector at the zeros.
  const ScanResult r = scan_spectrum(config_for(5, 0.0, {0.0, 6.0, 121}));
  const auto dark = zero_energy_branch(*r.spectrum);
  REQUIRE(dark.has_value());
  for (const auto& p : r.points) {
    const auto& pops = p.avg_populations[static_cast<std::size_t>(*dark - 1)];
    CHECK(pops[1] + pops[3] < 0.05);
  }
}

TEST_CASE("six-site spectrum: pairwise degeneracy near the first zero") {
  const ScanConfig c = config_for(6, 0.0, {0.0, 6.0, 241});
  const Classification cl = classify_near(c, Landmark{1, specfun::j0_zero(1)});
  CHECK(cl.approach.kind == ApproachKind::crossing);
  CHECK(cl.approach.gap < 1e-4 * 10.0);
  CHECK(cl.approach.location == doctest::Approx(2.394216).epsilon(1e-3));
}

TEST_CASE("landmark consistency on the six-site spectrum") {
  const ScanResult r = scan_spectrum(config_for(6, 0.0, {0.0, 6.0, 241}));
  const double cells = 2.0 * r.config.grid.spacing();
  REQUIRE(r.classifications.size() == 2);
  for (const auto& c : r.classifications) {
    CAPTURE(c.approach.location);
    CHECK(c.approach.kind == ApproachKind::crossing);
    CHECK(std::abs(c.approach.location - c.near_zero.location) <= cells);
    CHECK(c.approach.branch_a != c.approach.branch_b);
  }
}

TEST_CASE("landmark consistency on the four-site spectrum") {
  const ScanResult r = scan_spectrum(config_for(4, 0.0, {0.0, 6.0, 241}));
  const double cells = 2.0 * r.config.grid.spacing();
  REQUIRE(r.classifications.size() == 2);
  for (const auto& c : r.classifications) {
    CAPTURE(c.approach.location);
    CHECK(c.approach.kind == ApproachKind::crossing);
    CHECK(std::abs(c.approach.location - c.near_zero.location) <= cells);
  }
}

TEST_CASE("four-site crossing location and its drift toward the zero with frequency") {
  const double zero = specfun::j0_zero(1);
  double previous = 1.0;
  for (double omega : {10.0, 20.0, 40.0}) {
    ScanConfig c = config_for(4, 0.0, {0.0, 6.0, 241});
    c.base_spec.omega = omega;
    c.base_spec.a1 = 2.2 * omega;
    const Classification cl = classify_near(c, Landmark{1, zero});
    CAPTURE(omega);
    CAPTURE(cl.approach.location);
    CHECK(cl.approach.kind == ApproachKind::crossing);
    const double offset = std::abs(cl.approach.location - zero);
    CHECK(offset < previous);
    previous = offset;
    // Value from an independent high-order integration.
    if (omega == 10.0) CHECK(cl.approach.location == doctest::Approx(2.26615).epsilon(0.005 / 2.26615));
  }
  CHECK(previous < 0.05);
}

TEST_CASE("four-site avoided crossing with second-order coupling") {
  const Classification cl = classify_near(config_for(4, 0.2, {0.0, 6.0, 241}), Landmark{1, specfun::j0_zero(1)});
  CHECK(cl.approach.kind == ApproachKind::avoided);
  CHECK(cl.approach.gap > cl.threshold);
  CHECK(cl.threshold == doctest::Approx(1e-3));
}

TEST_CASE("CSV writers") {
  const ScanResult r = scan_spectrum(config_for(3, 0.0, {0.0, 1.0, 3}));
  const std::string csv = spectrum_csv(r);
  CHECK(csv.rfind("a2_over_omega,branch_id,quasienergy,avg_p1,avg_p2,avg_p3\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 3);

  const ScanResult m = scan_min_p1(config_for(3, 0.0, {0.0, 1.0, 3}, 2));
  const std::string mcsv = min_p1_csv(m);
  CHECK(mcsv.rfind("a2_over_omega,min_p1\n0,", 0) == 0);
  CHECK(mcsv.find("\n0.5,") != std::string::npos);

  const SystemSpec spec{2, 1.0, 0.0, 0.0, 0.0, 10.0};
  const auto modes = floquet_analysis(spec);
  std::ostringstream os;
  write_modes_csv(os, 0.25, modes);
  CHECK(os.str().rfind("param,branch_id,quasienergy,avg_p1,avg_p2,residual\n0.25,1,-", 0) == 0);

  std::ostringstream us;
  write_monodromy_csv(us, monodromy(SystemSpec{2, 0.0, 0.0, 0.0, 0.0, 1.0}));
  CHECK(us.str() == "re_c1,im_c1,re_c2,im_c2\n1,0,0,0\n0,0,1,0\n");
}

TEST_CASE("json views") {
  const ScanConfig c = config_for(4, 0.2, {0.0, 6.0, 241});
  const nlohmann::json j = to_json(c);
  CHECK(j["spec"]["n_sites"] == 4);
  CHECK(j["grid"]["points"] == 241);
  CHECK(j["horizon_periods"] == 200);
  CHECK(j["scan_parameter"] == "a2");
  CHECK(j["gap_threshold"].get<double>() == doctest::Approx(1e-3));
  Classification cl;
  cl.approach.kind = ApproachKind::crossing;
  cl.near_zero = Landmark{1, 2.4};
  CHECK(to_json(cl)["kind"] == "crossing");
  CHECK(to_json(cl)["near_j0_zero"] == 1);
}

TEST_CASE("bundled figure configs") {
  const auto ids = figure_ids();
  CHECK(ids == std::vector<std::string>{"fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8"});
  for (const auto& id : ids) {
    const nlohmann::json cfg = figure_config(id);
    CHECK(cfg.contains("spec"));
    const SystemSpec s = spec_from_json(cfg["spec"]);
    CHECK(s.a1 == 22.0);
    CHECK(s.omega == 10.0);
  }
  try {
    figure_config("fig9");
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("fig9") != std::string::npos);
    CHECK(msg.find("fig2, fig3, fig4, fig5, fig6, fig7, fig8") != std::string::npos);
  }
}
