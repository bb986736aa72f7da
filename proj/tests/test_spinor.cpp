#include "derlab/lattice.hpp"
#include "derlab/liegroup.hpp"
#include "derlab/spinor.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace derlab;
using Mat3 = Eigen::Matrix3d;

namespace {

Spinor random_spinor(Rng& rng, int N) {
  Spinor s(N);
  for (int i = 0; i < N; ++i) s(i) = rng.cnormal();
  return s;
}

Mat3 random_spd(Rng& rng, double spread = 0.3) {
  Mat3 a;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = spread * rng.normal();
  return Mat3(Mat3::Identity() + a * a.transpose());
}

// smooth periodic spinor field from a few Fourier modes
template <class G>
SpinorField smooth_spinor_field(const G& geo, const LatticeGrid<3>& grid, Rng& rng, int n_modes = 3) {
  auto alg = build_clifford(3);
  SpinorField psi(static_cast<std::size_t>(geo.sites()), Spinor::Zero(alg.N));
  for (int m = 0; m < n_modes; ++m) {
    Spinor chi = random_spinor(rng, alg.N);
    std::array<int, 3> k{};
    for (auto& kk : k) kk = static_cast<int>(rng.next_u64() % 3) - 1;
    double phase = rng.uniform(0.0, 2 * M_PI);
    for (std::int64_t s = 0; s < grid.size; ++s) {
      auto x = grid.point(s);
      double arg = phase;
      for (int a = 0; a < 3; ++a) arg += 2 * M_PI * k[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)];
      psi[static_cast<std::size_t>(s)] += std::cos(arg) * chi;
    }
  }
  return psi;
}

MetricSpec conformal_spec(double amp) {
  MetricSpec spec;
  spec.kind = MetricSpec::Kind::conformal;
  FourierMode m;
  m.k = {1, 0, 0, 0};
  m.amplitude = amp;
  spec.modes.push_back(m);
  return spec;
}

} // namespace

TEST_CASE("flat lattice: zero spin connection, constant spinors are parallel") {
  auto geo = build_lattice_metric<3>(MetricSpec{}, {8, 8, 8});
  auto alg = build_clifford(3);
  auto conn = spin_connection(geo);
  double worst = 0.0;
  for (const auto& c : conn)
    for (const auto& m : c) worst = std::max(worst, m.cwiseAbs().maxCoeff());
  CHECK(worst < 1e-13);

  Rng rng(1);
  auto psi = constant_spinor_field(geo, random_spinor(rng, 2));
  for (int k = 0; k < 3; ++k) CHECK(sup_norm(cov_deriv_spinor(geo, alg, psi, k)) < 1e-13);
  CHECK(sup_norm(dirac(geo, alg, psi)) < 1e-13);
}

TEST_CASE("round su(2): constant spinors satisfy the Killing equation") {
  LieGroupGeometry geo(LieGroupGeometry::su2_structure(), Mat3::Identity());
  auto alg = build_clifford(3);
  Rng rng(2);
  auto psi = constant_spinor_field(geo, random_spinor(rng, 2));
  // nabla_k psi = -1/2 gamma_k psi (the rep fixes the sign of the constant)
  for (int k = 0; k < 3; ++k) {
    auto dk = cov_deriv_spinor(geo, alg, psi, k);
    CHECK((dk[0] + 0.5 * (alg.g(k) * psi[0])).norm() < 1e-13);
  }
  // hence D psi = (3/2) psi
  auto d = dirac(geo, alg, psi);
  CHECK((d[0] - 1.5 * psi[0]).norm() < 1e-13);
  GammaMatrix m = dirac_matrix(geo, alg);
  CHECK((m - 1.5 * GammaMatrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("Leibniz rule for Clifford multiplication by frame fields") {
  auto alg = build_clifford(3);
  Rng rng(3);

  // exact algebra on the group
  LieGroupGeometry geo(LieGroupGeometry::su2_structure(), random_spd(rng));
  auto psi = constant_spinor_field(geo, random_spinor(rng, 2));
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i) {
      SpinorField gi_psi(1, Spinor(alg.g(i) * psi[0]));
      auto lhs = cov_deriv_spinor(geo, alg, gi_psi, k);
      Spinor rhs = alg.g(i) * cov_deriv_spinor(geo, alg, psi, k)[0];
      for (int c = 0; c < 3; ++c) rhs += geo.conn_coeff(k, i, c) * (alg.g(c) * psi[0]);
      CHECK((lhs[0] - rhs).norm() < 1e-13);
    }

  // pointwise algebra, so it also holds exactly on a curved lattice
  auto lat = build_lattice_metric<3>(conformal_spec(0.08), {8, 8, 8});
  LatticeGrid<3> grid({8, 8, 8});
  auto field = smooth_spinor_field(lat, grid, rng);
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i) {
      SpinorField gi_psi(field.size());
      for (std::size_t s = 0; s < field.size(); ++s) gi_psi[s] = alg.g(i) * field[s];
      auto lhs = cov_deriv_spinor(lat, alg, gi_psi, k);
      auto dpsi = cov_deriv_spinor(lat, alg, field, k);
      double worst = 0.0;
      for (int s = 0; s < lat.sites(); ++s) {
        Spinor rhs = alg.g(i) * dpsi[static_cast<std::size_t>(s)];
        for (int c = 0; c < 3; ++c)
          rhs += lat.conn(s)[static_cast<std::size_t>(k)](i, c) * (alg.g(c) * field[static_cast<std::size_t>(s)]);
        worst = std::max(worst, (lhs[static_cast<std::size_t>(s)] - rhs).norm());
      }
      CHECK(worst < 1e-11);
    }
}

TEST_CASE("plane waves diagonalize the flat Dirac operator at the stencil symbol") {
  auto geo = build_lattice_metric<3>(MetricSpec{}, {32, 32, 32});
  auto alg = build_clifford(3);
  LatticeGrid<3> grid({32, 32, 32});
  std::array<int, 3> kvec{1, 2, 0};
  const double h = 1.0 / 32.0;

  // modified wavenumber of the order-4 centered stencil
  Eigen::Vector3d s_mod;
  for (int a = 0; a < 3; ++a) {
    double th = 2.0 * M_PI * kvec[static_cast<std::size_t>(a)];
    s_mod(a) = (8.0 * std::sin(th * h) - std::sin(2.0 * th * h)) / (6.0 * h);
  }
  // the symbol i gamma(s) has eigenvalues +/- |s|
  GammaMatrix sym = GammaMatrix::Zero(2, 2);
  for (int a = 0; a < 3; ++a) sym += cplx(0, 1) * s_mod(a) * alg.g(a);
  Eigen::ComplexEigenSolver<GammaMatrix> es(sym);
  int idx = std::abs(es.eigenvalues()(0).real() - s_mod.norm()) < std::abs(es.eigenvalues()(1).real() - s_mod.norm())
                ? 0 : 1;
  Spinor chi = es.eigenvectors().col(idx);

  SpinorField psi(static_cast<std::size_t>(geo.sites()));
  for (std::int64_t s = 0; s < grid.size; ++s) {
    auto x = grid.point(s);
    double arg = 2.0 * M_PI * (kvec[0] * x[0] + kvec[1] * x[1] + kvec[2] * x[2]);
    psi[static_cast<std::size_t>(s)] = std::exp(cplx(0, arg)) * chi;
  }
  auto d = dirac(geo, alg, psi);
  double worst = 0.0;
  for (int s = 0; s < geo.sites(); ++s)
    worst = std::max(worst, (d[static_cast<std::size_t>(s)] - s_mod.norm() * psi[static_cast<std::size_t>(s)]).norm());
  CHECK(worst < 1e-12);
  // the modified wavenumber converges to 2 pi |k| at fourth order
  CHECK(std::abs(s_mod.norm() - 2.0 * M_PI * std::sqrt(5.0)) < 0.05);
}

TEST_CASE("Schroedinger-Lichnerowicz identity is exact on left-invariant data") {
  auto alg = build_clifford(3);
  Rng rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    LieGroupGeometry geo(LieGroupGeometry::su2_structure(), random_spd(rng));
    auto psi = constant_spinor_field(geo, random_spinor(rng, 2));
    CHECK(sup_norm(sl_residual(geo, alg, psi)) < 1e-10 * std::max(1.0, sup_norm(psi)));
  }
}

TEST_CASE("Schroedinger-Lichnerowicz residual converges at stencil order on the lattice") {
  auto alg = build_clifford(3);
  for (int order : {2, 4}) {
    std::vector<double> hs, errs;
    for (int n : {16, 24, 32, 48}) {
      Rng rng(11); // same field on every grid
      auto geo = build_lattice_metric<3>(conformal_spec(0.05), {n, n, n}, order);
      LatticeGrid<3> grid({n, n, n});
      auto psi = smooth_spinor_field(geo, grid, rng);
      double scale = sup_norm(psi);
      hs.push_back(1.0 / n);
      errs.push_back(sup_norm(sl_residual(geo, alg, psi)) / scale);
    }
    double order_fit = fitted_order(hs, errs);
    CHECK(order_fit >= order - 0.2);
  }
}

TEST_CASE("Penrose operator: Killing spinors and trace identity") {
  auto alg = build_clifford(3);
  LieGroupGeometry round(LieGroupGeometry::su2_structure(), Mat3::Identity());
  Rng rng(6);
  auto psi = constant_spinor_field(round, random_spinor(rng, 2));
  auto p = penrose(round, alg, psi);
  for (int k = 0; k < 3; ++k) CHECK(sup_norm(p[static_cast<std::size_t>(k)]) < 1e-13);

  // flat constant spinor
  auto flat = build_lattice_metric<3>(MetricSpec{}, {8, 8, 8});
  auto cpsi = constant_spinor_field(flat, random_spinor(rng, 2));
  auto pf = penrose(flat, alg, cpsi);
  for (int k = 0; k < 3; ++k) CHECK(sup_norm(pf[static_cast<std::size_t>(k)]) < 1e-13);

  // sum_k gamma_k P_k psi = 0 identically, even for rough lattice data
  auto lat = build_lattice_metric<3>(conformal_spec(0.08), {8, 8, 8});
  LatticeGrid<3> grid({8, 8, 8});
  auto field = smooth_spinor_field(lat, grid, rng);
  auto pl = penrose(lat, alg, field);
  double worst = 0.0;
  for (int s = 0; s < lat.sites(); ++s) {
    Spinor acc = Spinor::Zero(alg.N);
    for (int k = 0; k < 3; ++k) acc += alg.g(k) * pl[static_cast<std::size_t>(k)][static_cast<std::size_t>(s)];
    worst = std::max(worst, acc.norm());
  }
  CHECK(worst < 1e-12 * std::max(1.0, sup_norm(field)));
}

TEST_CASE("spinor transport between metrics preserves components and norms") {
  Rng rng(7);
  auto g0 = build_lattice_metric<3>(conformal_spec(0.05), {8, 8, 8});
  auto g1 = build_lattice_metric<3>(conformal_spec(0.11), {8, 8, 8});
  LatticeGrid<3> grid({8, 8, 8});
  auto psi = smooth_spinor_field(g0, grid, rng);

  auto moved = bg_transport(g0, g1, psi);
  auto back = bg_transport(g1, g0, moved);
  double worst = 0.0;
  for (std::size_t s = 0; s < psi.size(); ++s) {
    worst = std::max(worst, (moved[s] - psi[s]).norm());
    worst = std::max(worst, (back[s] - psi[s]).norm());
  }
  CHECK(worst == 0.0);

  auto tiny = build_lattice_metric<3>(MetricSpec{}, {8, 8, 16});
  CHECK_THROWS_AS(bg_transport(g0, tiny, psi), std::invalid_argument);
}

TEST_CASE("conformal lattice spin connection matches the symbolic oracle") {
  const double amp = 0.06;
  auto geo = build_lattice_metric<3>(conformal_spec(amp), {32, 32, 32}, 4);
  LatticeGrid<3> grid({32, 32, 32});
  // for g = exp(2f) delta: conn[a](b,c) = exp(-f) (delta_ac d_b f - delta_ab d_c f)
  double worst = 0.0;
  for (int s = 0; s < geo.sites(); s += 11) {
    auto x = grid.point(s);
    double f = amp * std::cos(2 * M_PI * x[0]);
    Eigen::Vector3d df(-amp * 2 * M_PI * std::sin(2 * M_PI * x[0]), 0.0, 0.0);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c) {
          double oracle = std::exp(-f) * ((a == c ? df(b) : 0.0) - (a == b ? df(c) : 0.0));
          worst = std::max(worst, std::abs(geo.conn(s)[static_cast<std::size_t>(a)](b, c) - oracle));
        }
  }
  CHECK(worst < 1e-4); // finite-difference accuracy on a 32^3 grid
}

TEST_CASE("Dirac operator is L2 symmetric") {
  auto alg = build_clifford(3);
  Rng rng(8);

  // exact on the group: the restriction to constants is a hermitian matrix
  LieGroupGeometry geo(LieGroupGeometry::su2_structure(), random_spd(rng));
  GammaMatrix m = dirac_matrix(geo, alg);
  CHECK((m - m.adjoint()).cwiseAbs().maxCoeff() < 1e-12);

  // lattice discrepancy shrinks at stencil order
  std::vector<double> hs, errs;
  for (int n : {8, 16, 32}) {
    Rng r2(21);
    auto lat = build_lattice_metric<3>(conformal_spec(0.05), {n, n, n}, 2);
    LatticeGrid<3> grid({n, n, n});
    auto a = smooth_spinor_field(lat, grid, r2);
    auto b = smooth_spinor_field(lat, grid, r2);
    double defect = std::abs(l2_inner(lat, dirac(lat, alg, a), b) - l2_inner(lat, a, dirac(lat, alg, b)));
    hs.push_back(1.0 / n);
    errs.push_back(defect);
  }
  CHECK(fitted_order(hs, errs) >= 1.8);
}

TEST_CASE("global frame rotation with spin lift leaves the Dirac action invariant") {
  auto alg = build_clifford(3);
  Rng rng(9);

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
  a(0, 1) = 0.7; a(1, 0) = -0.7;
  a(1, 2) = -0.4; a(2, 1) = 0.4;
  a(0, 2) = 0.2; a(2, 0) = -0.2;
  Eigen::Matrix3d o = a.exp();
  GammaMatrix kappa = spin_lift(alg, a);

  // kappa gamma_i kappa^-1 = sum_j O_ij gamma_j
  for (int i = 0; i < 3; ++i) {
    GammaMatrix lhs = kappa * alg.g(i) * kappa.inverse();
    GammaMatrix rhs = GammaMatrix::Zero(2, 2);
    for (int j = 0; j < 3; ++j) rhs += o(i, j) * alg.g(j);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }

  Mat3 g = random_spd(rng);
  LieGroupGeometry geo(LieGroupGeometry::su2_structure(), g);
  LieGroupGeometry rot(LieGroupGeometry::su2_structure(), Mat3(o.transpose() * g * o));
  Spinor psi = random_spinor(rng, 2);
  GammaMatrix d0 = dirac_matrix(geo, alg);
  GammaMatrix d1 = dirac_matrix(rot, alg);
  CHECK(((d1 * (kappa * psi)) - kappa * (d0 * psi)).norm() < 1e-11);
  // scalar pairing is invariant
  CHECK(re_inner(d1 * (kappa * psi), kappa * psi) == Catch::Approx(re_inner(d0 * psi, psi)).margin(1e-11));
}
