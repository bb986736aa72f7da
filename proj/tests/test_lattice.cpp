#include "derlab/calculus.hpp"
#include "derlab/lattice.hpp"
#include "derlab/metric_io.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cstdio>

using namespace derlab;
using Geo3 = LatticeGeometry<3>;
using Mat3 = Geo3::Mat;

namespace {

MetricSpec conformal_spec(double amp, std::array<int, 4> k = {1, 0, 0, 0}, double phase = 0.0) {
  MetricSpec spec;
  spec.kind = MetricSpec::Kind::conformal;
  FourierMode m;
  m.k = k;
  m.amplitude = amp;
  m.phase = phase;
  spec.modes.push_back(m);
  return spec;
}

MetricSpec perturbed_spec(Rng& rng, int n_modes, double amp) {
  MetricSpec spec;
  spec.kind = MetricSpec::Kind::perturbed;
  for (int m = 0; m < n_modes; ++m) {
    FourierMode mode;
    mode.i = static_cast<int>(rng.next_u64() % 3);
    mode.j = static_cast<int>(rng.next_u64() % 3);
    if (mode.j < mode.i) std::swap(mode.i, mode.j);
    for (int a = 0; a < 3; ++a) mode.k[static_cast<std::size_t>(a)] = static_cast<int>(rng.next_u64() % 3) - 1;
    mode.amplitude = amp * (0.5 + rng.uniform());
    mode.phase = rng.uniform(0.0, 2.0 * M_PI);
    spec.modes.push_back(mode);
  }
  return spec;
}

// analytic scalar curvature of g = exp(2u) delta on T^n
double conformal_scal(int n, double u, double lap_u, double grad_u_sq) {
  return std::exp(-2.0 * u) * (-2.0 * (n - 1) * lap_u - (n - 1) * (n - 2) * grad_u_sq);
}

} // namespace

TEST_CASE("flat metric: identity samples, zero connection and curvature") {
  auto geo = build_lattice_metric<3>(MetricSpec{}, {8, 8, 8});
  for (int s = 0; s < geo.sites(); ++s) {
    CHECK((geo.metric(s) - Mat3::Identity()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((geo.frame(s) - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-14);
    for (int k = 0; k < 3; ++k) CHECK(geo.conn(s)[static_cast<std::size_t>(k)].cwiseAbs().maxCoeff() < 1e-14);
    CHECK(std::abs(geo.scal(s)) < 1e-13);
  }
}

TEST_CASE("conformal and perturbed specs stay positive definite") {
  auto conf = build_lattice_metric<3>(conformal_spec(0.1), {8, 8, 8});
  CHECK(conf.worst_frame_defect() < 1e-12);

  Rng rng(2024);
  auto spec = perturbed_spec(rng, 3, 0.05);
  auto geo = build_lattice_metric<3>(spec, {8, 8, 8});
  // independent eigenvalue scan
  double worst = 1e300;
  for (int s = 0; s < geo.sites(); ++s) {
    Eigen::SelfAdjointEigenSolver<Mat3> es(geo.metric(s));
    worst = std::min(worst, es.eigenvalues().minCoeff());
  }
  CHECK(worst > 0.0);
  CHECK(geo.worst_frame_defect() < 1e-12);
}

TEST_CASE("indefinite samples are rejected with the worst grid point") {
  MetricSpec spec;
  spec.kind = MetricSpec::Kind::perturbed;
  FourierMode m;
  m.i = 0;
  m.j = 0;
  m.k = {1, 0, 0, 0};
  m.amplitude = -2.0; // g_00 dips below zero
  spec.modes.push_back(m);
  CHECK_THROWS_WITH(build_lattice_metric<3>(spec, {8, 8, 8}),
                    Catch::Matchers::ContainsSubstring("not positive definite"));
}

TEST_CASE("orthonormal frame is the symmetric inverse root") {
  MetricSpec diag;
  diag.kind = MetricSpec::Kind::perturbed;
  auto geo_flat = build_lattice_metric<3>(diag, {8, 8, 8});
  CHECK((geo_flat.frame(0) - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-13);

  // diag(4,1,1) -> b = diag(1/2,1,1)
  LatticeGrid<3> grid({8, 8, 8});
  Field<Mat3> samples(static_cast<std::size_t>(grid.size), Mat3(Eigen::Vector3d(4, 1, 1).asDiagonal()));
  Geo3 geo(grid, samples, 4);
  CHECK((geo.frame(17) - Mat3(Eigen::Vector3d(0.5, 1, 1).asDiagonal())).cwiseAbs().maxCoeff() < 1e-13);

  Rng rng(5);
  auto spec = perturbed_spec(rng, 4, 0.08);
  auto random_geo = build_lattice_metric<3>(spec, {8, 8, 8});
  CHECK(random_geo.worst_frame_defect() < 1e-12);
  // frame is symmetric (principal branch)
  for (int s = 0; s < random_geo.sites(); s += 37)
    CHECK((random_geo.frame(s) - random_geo.frame(s).transpose()).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("conformal scalar curvature converges at stencil order") {
  const double amp = 0.02;
  std::vector<double> hs, errs;
  for (int n : {8, 16, 32}) {
    auto spec = conformal_spec(amp);
    auto geo = build_lattice_metric<3>(spec, {n, n, n}, 4);
    LatticeGrid<3> grid({n, n, n});
    double worst = 0.0;
    for (int s = 0; s < geo.sites(); ++s) {
      auto x = grid.point(s);
      double u = amp * std::cos(2.0 * M_PI * x[0]);
      double lap = -amp * 4.0 * M_PI * M_PI * std::cos(2.0 * M_PI * x[0]);
      double gsq = std::pow(amp * 2.0 * M_PI * std::sin(2.0 * M_PI * x[0]), 2);
      worst = std::max(worst, std::abs(geo.scal(s) - conformal_scal(3, u, lap, gsq)));
    }
    hs.push_back(1.0 / n);
    errs.push_back(worst);
  }
  double order = fitted_order(hs, errs);
  CHECK(order >= 3.8);
}

TEST_CASE("single-axis diagonal metric produces only the planar curvature block") {
  // g = diag(a(x2), 1, 1) with sqrt(a) = 1 + 0.3 cos(2 pi x2):
  // the only curvature is the (1,2)-plane block, K = -(sqrt a)'' / sqrt a.
  std::vector<double> hs, errs;
  for (int ny : {16, 32, 64}) {
    LatticeGrid<3> g2({8, ny, 8});
    Field<Mat3> smp(static_cast<std::size_t>(g2.size));
    for (std::int64_t s = 0; s < g2.size; ++s) {
      double root = 1.0 + 0.3 * std::cos(2.0 * M_PI * g2.point(s)[1]);
      smp[static_cast<std::size_t>(s)] = Eigen::Vector3d(root * root, 1.0, 1.0).asDiagonal();
    }
    Geo3 geo(g2, smp, 4);
    double worst_zero = 0.0, worst_block = 0.0;
    for (int s = 0; s < geo.sites(); ++s) {
      double root = 1.0 + 0.3 * std::cos(2.0 * M_PI * g2.point(s)[1]);
      double k_exact = 0.3 * 4.0 * M_PI * M_PI * std::cos(2.0 * M_PI * g2.point(s)[1]) / root;
      worst_block = std::max(worst_block, std::abs(geo.rm(s, 0, 1, 0, 1) - k_exact));
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          for (int c = 0; c < 3; ++c) worst_zero = std::max(worst_zero, std::abs(geo.rm(s, a, b, c, 2)));
    }
    CHECK(worst_zero < 1e-10);  // analytically zero components stay at noise level
    hs.push_back(1.0 / ny);
    errs.push_back(worst_block);
  }
  CHECK(fitted_order(hs, errs) >= 3.5);  // the active block carries discretization error only
}

TEST_CASE("quadrature: exactness and curved-volume oracle") {
  auto flat = build_lattice_metric<3>(MetricSpec{}, {8, 8, 8});
  Field<double> one(static_cast<std::size_t>(flat.sites()), 1.0);
  CHECK(integrate(flat, one) == Catch::Approx(1.0).margin(1e-14));

  LatticeGrid<3> grid({8, 8, 8});
  Field<double> cosx(static_cast<std::size_t>(grid.size));
  for (std::int64_t s = 0; s < grid.size; ++s) cosx[static_cast<std::size_t>(s)] = std::cos(2.0 * M_PI * grid.point(s)[0]);
  CHECK(std::abs(integrate(flat, cosx)) < 1e-14);

  // grid mismatch is an error
  Field<double> bad(10, 1.0);
  CHECK_THROWS_AS(integrate(flat, bad), std::invalid_argument);

  // volume of exp(2u) delta equals the 1d integral of exp(3u)
  const double amp = 0.1;
  auto geo = build_lattice_metric<3>(conformal_spec(amp), {32, 32, 32});
  Field<double> onec(static_cast<std::size_t>(geo.sites()), 1.0);
  double vol = integrate(geo, onec);
  // independent high-resolution 1d quadrature
  const int q = 200000;
  double oracle = 0.0;
  for (int i = 0; i < q; ++i) oracle += std::exp(3.0 * amp * std::cos(2.0 * M_PI * (i + 0.5) / q)) / q;
  CHECK(vol == Catch::Approx(oracle).margin(1e-10));
}

TEST_CASE("curvature convergence also holds at stencil order two") {
  const double amp = 0.12;
  std::vector<double> hs, errs;
  for (int n : {8, 16, 32}) {
    auto geo = build_lattice_metric<3>(conformal_spec(amp), {n, n, n}, 2);
    LatticeGrid<3> grid({n, n, n});
    double worst = 0.0;
    for (int s = 0; s < geo.sites(); ++s) {
      auto x = grid.point(s);
      double u = amp * std::cos(2.0 * M_PI * x[0]);
      double lap = -amp * 4.0 * M_PI * M_PI * std::cos(2.0 * M_PI * x[0]);
      double gsq = std::pow(amp * 2.0 * M_PI * std::sin(2.0 * M_PI * x[0]), 2);
      worst = std::max(worst, std::abs(geo.scal(s) - conformal_scal(3, u, lap, gsq)));
    }
    hs.push_back(1.0 / n);
    errs.push_back(worst);
  }
  CHECK(fitted_order(hs, errs) >= 1.8);
}

TEST_CASE("four-dimensional torus backend") {
  auto geo = build_lattice_metric<4>(MetricSpec{}, {8, 8, 8, 8});
  CHECK(geo.sites() == 4096);
  Field<double> one(static_cast<std::size_t>(geo.sites()), 1.0);
  CHECK(integrate(geo, one) == Catch::Approx(1.0).margin(1e-13));

  MetricSpec spec = conformal_spec(0.05, {1, 0, 0, 0});
  std::vector<double> hs, errs;
  for (int nx : {12, 24}) {
    auto curved = build_lattice_metric<4>(spec, {nx, 8, 8, 8}, 4);
    LatticeGrid<4> grid({nx, 8, 8, 8});
    double worst = 0.0;
    for (int s = 0; s < curved.sites(); ++s) {
      auto x = grid.point(s);
      double u = 0.05 * std::cos(2.0 * M_PI * x[0]);
      double lap = -0.05 * 4.0 * M_PI * M_PI * std::cos(2.0 * M_PI * x[0]);
      double gsq = std::pow(0.05 * 2.0 * M_PI * std::sin(2.0 * M_PI * x[0]), 2);
      worst = std::max(worst, std::abs(curved.scal(s) - conformal_scal(4, u, lap, gsq)));
    }
    hs.push_back(1.0 / nx);
    errs.push_back(worst);
  }
  CHECK(fitted_order(hs, errs) >= 3.5);
}

TEST_CASE("metric samples round-trip through the raw exchange format") {
  Rng rng(9);
  auto spec = perturbed_spec(rng, 3, 0.05);
  auto geo = build_lattice_metric<3>(spec, {8, 8, 8});
  std::string stem = "derlab_io_test_metric";
  export_metric_samples(geo, stem);
  auto back = import_metric_samples<3>(stem);
  REQUIRE(back.sites() == geo.sites());
  double worst = 0.0;
  for (int s = 0; s < geo.sites(); ++s)
    worst = std::max(worst, (back.metric(s) - geo.metric(s)).cwiseAbs().maxCoeff());
  CHECK(worst == 0.0);
  std::remove((stem + ".json").c_str());
  std::remove((stem + ".bin").c_str());
}

TEST_CASE("resolution below 8 is rejected") {
  LatticeGrid<3> grid({4, 8, 8});
  Field<Mat3> samples(static_cast<std::size_t>(grid.size), Mat3::Identity());
  CHECK_THROWS_AS(Geo3(grid, samples, 4), std::invalid_argument);
}
