#ifndef DERLAB_VARIATION_HPP
#define DERLAB_VARIATION_HPP

#include "derlab/functional.hpp"
#include "derlab/lattice.hpp"
#include "derlab/liegroup.hpp"

#include <memory>

namespace derlab {

// ---------------------------------------------------------------------------
// first-order operators in the deformation

// D^h psi = sum_{ab} h_ab gamma_a nabla_b psi, h in frame components
template <class G>
SpinorField dh_operator(const G& geo, const CliffordAlgebra& alg, const Field<typename G::Mat>& h_frame,
                        const SpinorField& psi) {
  check_spinor_compat(geo, alg, psi);
  for (const auto& m : h_frame)
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()))
      throw std::invalid_argument("dh_operator: deformation must be symmetric");
  SpinorField out(psi.size(), Spinor::Zero(alg.N));
  for (int b = 0; b < G::Dim; ++b) {
    auto db = cov_deriv_spinor(geo, alg, psi, b);
    for (int s = 0; s < geo.sites(); ++s)
      for (int a = 0; a < G::Dim; ++a) {
        double w = h_frame[static_cast<std::size_t>(s)](a, b);
        if (w != 0.0) out[static_cast<std::size_t>(s)] += w * (alg.g(a) * db[static_cast<std::size_t>(s)]);
      }
  }
  return out;
}

// F(X,Y) = 1/4 ( <X nabla_Y phi + Y nabla_X phi, psi> + <X nabla_Y psi + Y nabla_X psi, phi> )
template <class G>
Field<typename G::Mat> f_tensor(const G& geo, const CliffordAlgebra& alg, const SpinorField& psi,
                                const SpinorField& phi) {
  check_spinor_compat(geo, alg, psi);
  check_spinor_compat(geo, alg, phi);
  Field<typename G::Mat> out(psi.size(), G::Mat::Zero());
  for (int b = 0; b < G::Dim; ++b) {
    auto dphi = cov_deriv_spinor(geo, alg, phi, b);
    auto dpsi = cov_deriv_spinor(geo, alg, psi, b);
    for (int s = 0; s < geo.sites(); ++s)
      for (int a = 0; a < G::Dim; ++a) {
        double v = 0.25 * (re_inner(alg.g(a) * dphi[static_cast<std::size_t>(s)], psi[static_cast<std::size_t>(s)]) +
                           re_inner(alg.g(a) * dpsi[static_cast<std::size_t>(s)], phi[static_cast<std::size_t>(s)]));
        out[static_cast<std::size_t>(s)](a, b) += v;
        out[static_cast<std::size_t>(s)](b, a) += v;
      }
  }
  return out;
}

// ---------------------------------------------------------------------------
// exact Taylor expansion of the assembled geometry along g + t h
//
// Every derived field is expanded to second order in t, with the finite
// difference stencils differentiated exactly (they are linear, so they
// commute with d/dt). The resulting coefficients are the exact first and
// second derivatives of the discrete pipeline, which is what centered
// differences of the assembled energy converge to.

template <class G>
struct GeometryJets {
  using Mat = typename G::Mat;
  using Conn = std::array<Mat, G::Dim>;
  static constexpr int D = G::Dim;

  std::array<Field<Mat>, 3> b;
  std::array<Field<Mat>, 3> binv;
  std::array<Field<double>, 3> meas;
  std::array<Field<Conn>, 3> conn;
  std::array<Field<double>, 3> scal;
  Field<Mat> h_frame; // frame components of the deformation at t = 0
};

namespace detail {

// pointwise metric-algebra jets shared by both backends
template <class Mat>
struct PointJets {
  std::array<Mat, 3> b, binv;
  std::array<double, 3> meas;
};

template <class Mat>
PointJets<Mat> point_jets(const Mat& g, const Mat& h, const Mat& b0, const Mat& binv0, double meas0) {
  PointJets<Mat> out;
  Mat a0 = (b0 * b0).eval(); // g^{-1}
  Mat a1 = (-a0 * h * a0).eval();
  Mat a2 = (a0 * h * a0 * h * a0).eval();

  out.b[0] = b0;
  out.b[1] = sylvester_spd(b0, a1);
  out.b[2] = sylvester_spd(b0, Mat(a2 - out.b[1] * out.b[1]));

  out.binv[0] = binv0;
  out.binv[1] = (-binv0 * out.b[1] * binv0).eval();
  out.binv[2] = (binv0 * out.b[1] * binv0 * out.b[1] * binv0 - binv0 * out.b[2] * binv0).eval();

  double p1 = (a0 * h).trace();
  double q = (a0 * h * a0 * h).trace();
  out.meas[0] = meas0;
  out.meas[1] = meas0 * 0.5 * p1;
  out.meas[2] = meas0 * (0.125 * p1 * p1 - 0.25 * q);
  return out;
}

} // namespace detail

// scalar-curvature jets from connection and structure jets; the lattice
// backend supplies frame derivatives of the connection levels, the group
// backend passes nothing and the derivative terms vanish.
template <class G>
void finish_scal_jets(const G& geo, GeometryJets<G>& jets,
                      const std::array<Field<typename GeometryJets<G>::Conn>, 3>& cjets,
                      const std::array<std::array<Field<typename GeometryJets<G>::Conn>, 3>, G::Dim>* dconn_axis) {
  constexpr int D = G::Dim;
  const int m = geo.sites();
  for (int level = 0; level < 3; ++level) jets.scal[static_cast<std::size_t>(level)].assign(static_cast<std::size_t>(m), 0.0);

  for (int s = 0; s < m; ++s) {
    // frame derivative of connection entries: E_a(f) = sum_i b_{ia} d_i f
    auto frame_dconn = [&](int level, int dir, int k, int c, int d) {
      if (!dconn_axis) return 0.0;
      double acc = 0.0;
      for (int l1 = 0; l1 <= level; ++l1) {
        int l2 = level - l1;
        for (int i = 0; i < D; ++i)
          acc += jets.b[static_cast<std::size_t>(l1)][static_cast<std::size_t>(s)](i, dir) *
                 (*dconn_axis)[static_cast<std::size_t>(i)][static_cast<std::size_t>(l2)][static_cast<std::size_t>(s)]
                              [static_cast<std::size_t>(k)](c, d);
      }
      return acc;
    };
    auto gam = [&](int level, int k, int a, int b) {
      return jets.conn[static_cast<std::size_t>(level)][static_cast<std::size_t>(s)][static_cast<std::size_t>(k)](a, b);
    };
    auto cst = [&](int level, int a, int b, int c) {
      return cjets[static_cast<std::size_t>(level)][static_cast<std::size_t>(s)][static_cast<std::size_t>(a)](b, c);
    };
    for (int level = 0; level < 3; ++level) {
      double r = 0.0;
      for (int a = 0; a < D; ++a)
        for (int bb = 0; bb < D; ++bb) {
          if (a == bb) continue;
          double v = frame_dconn(level, a, bb, a, bb) - frame_dconn(level, bb, a, a, bb);
          for (int e = 0; e < D; ++e)
            for (int l1 = 0; l1 <= level; ++l1) {
              int l2 = level - l1;
              v += gam(l1, bb, a, e) * gam(l2, a, e, bb) - gam(l1, a, a, e) * gam(l2, bb, e, bb) -
                   cst(l1, a, bb, e) * gam(l2, e, a, bb);
            }
          r -= v;
        }
      jets.scal[static_cast<std::size_t>(level)][static_cast<std::size_t>(s)] = r;
    }
  }
}

inline GeometryJets<LieGroupGeometry> build_geometry_jets(const LieGroupGeometry& geo,
                                                          const Field<Eigen::Matrix3d>& h_coord) {
  using Mat = Eigen::Matrix3d;
  using Conn = std::array<Mat, 3>;
  if (h_coord.size() != 1) throw std::invalid_argument("build_geometry_jets: one deformation matrix expected");
  GeometryJets<LieGroupGeometry> jets;
  const Mat h = symmetrize(h_coord[0]);

  auto pj = detail::point_jets(geo.metric_matrix(), h, geo.frame(0), geo.frame_inv(0), geo.measure(0));
  for (int l = 0; l < 3; ++l) {
    jets.b[static_cast<std::size_t>(l)] = {pj.b[static_cast<std::size_t>(l)]};
    jets.binv[static_cast<std::size_t>(l)] = {pj.binv[static_cast<std::size_t>(l)]};
    jets.meas[static_cast<std::size_t>(l)] = {pj.meas[static_cast<std::size_t>(l)]};
  }
  jets.h_frame = {symmetrize(Mat(pj.b[0].transpose() * h * pj.b[0]))};

  // structure-constant jets: c_{abc}(t) = b_{ia} b_{jb} c^k_{ij} binv_{ck}
  std::array<Field<Conn>, 3> cjets;
  for (int level = 0; level < 3; ++level) {
    Conn cl;
    for (auto& mmat : cl) mmat = Mat::Zero();
    for (int a = 0; a < 3; ++a)
      for (int bb = 0; bb < 3; ++bb)
        for (int cc = 0; cc < 3; ++cc) {
          double acc = 0.0;
          for (int l1 = 0; l1 <= level; ++l1)
            for (int l2 = 0; l1 + l2 <= level; ++l2) {
              int l3 = level - l1 - l2;
              for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                  for (int k = 0; k < 3; ++k)
                    acc += pj.b[static_cast<std::size_t>(l1)](i, a) * pj.b[static_cast<std::size_t>(l2)](j, bb) *
                           geo.structure()[static_cast<std::size_t>(k)](i, j) *
                           pj.binv[static_cast<std::size_t>(l3)](cc, k);
            }
          cl[static_cast<std::size_t>(a)](bb, cc) = acc;
        }
    cjets[static_cast<std::size_t>(level)] = {cl};
  }

  for (int level = 0; level < 3; ++level) {
    Conn gl;
    for (int k = 0; k < 3; ++k) {
      Mat mmat;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          auto c = [&](int a, int b, int cc) {
            return cjets[static_cast<std::size_t>(level)][0][static_cast<std::size_t>(a)](b, cc);
          };
          mmat(i, j) = 0.5 * (c(k, i, j) - c(i, j, k) + c(j, k, i));
        }
      gl[static_cast<std::size_t>(k)] = mmat;
    }
    jets.conn[static_cast<std::size_t>(level)] = {gl};
  }

  finish_scal_jets(geo, jets, cjets, nullptr);
  return jets;
}

template <int D>
GeometryJets<LatticeGeometry<D>> build_geometry_jets(const LatticeGeometry<D>& geo,
                                                     const Field<typename LatticeGeometry<D>::Mat>& h_coord) {
  using G = LatticeGeometry<D>;
  using Mat = typename G::Mat;
  using Conn = std::array<Mat, D>;
  const int m = geo.sites();
  if (static_cast<int>(h_coord.size()) != m) throw std::invalid_argument("build_geometry_jets: field size mismatch");

  GeometryJets<G> jets;
  for (int l = 0; l < 3; ++l) {
    jets.b[static_cast<std::size_t>(l)].resize(static_cast<std::size_t>(m));
    jets.binv[static_cast<std::size_t>(l)].resize(static_cast<std::size_t>(m));
    jets.meas[static_cast<std::size_t>(l)].resize(static_cast<std::size_t>(m));
  }
  jets.h_frame.resize(static_cast<std::size_t>(m));
  parallel_for(m, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t s = lo; s < hi; ++s) {
      Mat h = symmetrize(h_coord[static_cast<std::size_t>(s)]);
      auto pj = detail::point_jets(geo.metric(static_cast<int>(s)), h, geo.frame(static_cast<int>(s)),
                                   geo.frame_inv(static_cast<int>(s)), geo.measure(static_cast<int>(s)));
      for (int l = 0; l < 3; ++l) {
        jets.b[static_cast<std::size_t>(l)][static_cast<std::size_t>(s)] = pj.b[static_cast<std::size_t>(l)];
        jets.binv[static_cast<std::size_t>(l)][static_cast<std::size_t>(s)] = pj.binv[static_cast<std::size_t>(l)];
        jets.meas[static_cast<std::size_t>(l)][static_cast<std::size_t>(s)] = pj.meas[static_cast<std::size_t>(l)];
      }
      jets.h_frame[static_cast<std::size_t>(s)] = symmetrize(Mat(pj.b[0].transpose() * h * pj.b[0]));
    }
  });

  // axis derivatives of the frame levels
  std::array<std::array<Field<Mat>, 3>, D> db;
  for (int i = 0; i < D; ++i)
    for (int l = 0; l < 3; ++l)
      db[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)] = geo.axis_d(jets.b[static_cast<std::size_t>(l)], i);

  // structure-function jets
  std::array<Field<Conn>, 3> cjets;
  for (int l = 0; l < 3; ++l) cjets[static_cast<std::size_t>(l)].resize(static_cast<std::size_t>(m));
  parallel_for(m, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t s = lo; s < hi; ++s) {
      for (int level = 0; level < 3; ++level) {
        Conn cl;
        // c_{abc} levels: w_{jab} = sum_i ( b_{ia} d_i b_{jb} - b_{ib} d_i b_{ja} ),
        // convolved against the frame-inverse levels
        for (int a = 0; a < D; ++a) {
          Mat mmat;
          for (int bb = 0; bb < D; ++bb)
            for (int cc = 0; cc < D; ++cc) {
              double acc = 0.0;
              for (int l1 = 0; l1 <= level; ++l1) {
                int l2 = level - l1;
                // recompute w at level l2 for the binv convolution
                for (int j = 0; j < D; ++j) {
                  double wl = 0.0;
                  for (int l3 = 0; l3 <= l2; ++l3) {
                    int l4 = l2 - l3;
                    for (int i = 0; i < D; ++i)
                      wl += jets.b[static_cast<std::size_t>(l3)][static_cast<std::size_t>(s)](i, a) *
                                db[static_cast<std::size_t>(i)][static_cast<std::size_t>(l4)][static_cast<std::size_t>(s)](j, bb) -
                            jets.b[static_cast<std::size_t>(l3)][static_cast<std::size_t>(s)](i, bb) *
                                db[static_cast<std::size_t>(i)][static_cast<std::size_t>(l4)][static_cast<std::size_t>(s)](j, a);
                  }
                  acc += jets.binv[static_cast<std::size_t>(l1)][static_cast<std::size_t>(s)](cc, j) * wl;
                }
              }
              mmat(bb, cc) = acc;
            }
          cl[static_cast<std::size_t>(a)] = mmat;
        }
        cjets[static_cast<std::size_t>(level)][static_cast<std::size_t>(s)] = cl;
      }
    }
  });

  // Koszul per level
  for (int l = 0; l < 3; ++l) jets.conn[static_cast<std::size_t>(l)].resize(static_cast<std::size_t>(m));
  parallel_for(m, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t s = lo; s < hi; ++s)
      for (int level = 0; level < 3; ++level) {
        Conn gl;
        auto c = [&](int a, int b, int cc) {
          return cjets[static_cast<std::size_t>(level)][static_cast<std::size_t>(s)][static_cast<std::size_t>(a)](b, cc);
        };
        for (int k = 0; k < D; ++k) {
          Mat mmat;
          for (int i = 0; i < D; ++i)
            for (int j = 0; j < D; ++j) mmat(i, j) = 0.5 * (c(k, i, j) - c(i, j, k) + c(j, k, i));
          gl[static_cast<std::size_t>(k)] = mmat;
        }
        jets.conn[static_cast<std::size_t>(level)][static_cast<std::size_t>(s)] = gl;
      }
  });

  // axis derivatives of the connection levels, then curvature jets
  std::array<std::array<Field<Conn>, 3>, D> dconn;
  for (int i = 0; i < D; ++i)
    for (int l = 0; l < 3; ++l)
      dconn[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)] =
          geo.axis_d(jets.conn[static_cast<std::size_t>(l)], i);
  finish_scal_jets(geo, jets, cjets, &dconn);
  return jets;
}

// ---------------------------------------------------------------------------
// Dirac-term jets

// level-l coefficient of the Dirac operator applied to a fixed-component field
template <class G>
SpinorField apply_dirac_level(const G& geo, const GeometryJets<G>& jets, const CliffordAlgebra& alg, int level,
                              const SpinorField& field, const std::array<SpinorField, G::Dim>* axis_derivs) {
  SpinorField out(field.size(), Spinor::Zero(alg.N));
  for (int s = 0; s < geo.sites(); ++s) {
    Spinor acc = Spinor::Zero(alg.N);
    for (int a = 0; a < G::Dim; ++a) {
      Spinor da = Spinor::Zero(alg.N);
      if (axis_derivs) {
        for (int i = 0; i < G::Dim; ++i)
          da += jets.b[static_cast<std::size_t>(level)][static_cast<std::size_t>(s)](i, a) *
                (*axis_derivs)[static_cast<std::size_t>(i)][static_cast<std::size_t>(s)];
      }
      const auto& gam = jets.conn[static_cast<std::size_t>(level)][static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
      for (int p = 0; p < G::Dim; ++p)
        for (int q = p + 1; q < G::Dim; ++q)
          if (gam(p, q) != 0.0) da += (0.5 * gam(p, q)) * (alg.g(p) * (alg.g(q) * field[static_cast<std::size_t>(s)]));
      acc += alg.g(a) * da;
    }
    out[static_cast<std::size_t>(s)] = acc;
  }
  return out;
}

struct EnergyJets {
  std::array<double, 3> e{};        // E(t) = e0 + t e1 + t^2 e2 + O(t^3)
  double first() const { return e[1]; }
  double second() const { return 2.0 * e[2]; }
  Field<double> scal_first;         // pointwise dR/dt
  Field<double> meas_first_density; // pointwise d(measure)/dt / measure
  double dirac_first_fixed_measure = 0.0; // d/dt of sum <D_t psi, psi> against the base measure
};

template <class G, class AxisDeriv>
EnergyJets energy_jets_impl(const G& geo, const GeometryJets<G>& jets, const CliffordAlgebra& alg,
                            const SpinorField& psi, const SpinorField& phi, double lambda, AxisDeriv axis_of) {
  check_spinor_compat(geo, alg, psi);
  check_spinor_compat(geo, alg, phi);
  const int m = geo.sites();

  auto dpsi = axis_of(psi);
  auto dphi = axis_of(phi);

  std::array<SpinorField, 3> d_psi, d_phi;
  for (int l = 0; l < 3; ++l) {
    d_psi[static_cast<std::size_t>(l)] = apply_dirac_level(geo, jets, alg, l, psi, dpsi.get());
    if (l < 2) d_phi[static_cast<std::size_t>(l)] = apply_dirac_level(geo, jets, alg, l, phi, dphi.get());
  }

  EnergyJets out;
  out.scal_first = jets.scal[1];
  out.meas_first_density.resize(static_cast<std::size_t>(m));
  std::array<std::vector<double>, 3> acc;
  for (auto& a : acc) a.resize(static_cast<std::size_t>(m));
  std::vector<double> dirac1(static_cast<std::size_t>(m));

  for (int s = 0; s < m; ++s) {
    const std::size_t u = static_cast<std::size_t>(s);
    // integrand levels: R + <D Psi, Psi> - lambda |Psi|^2 with Psi = psi + t phi
    double p0 = re_inner(d_psi[0][u], psi[u]);
    double p1 = re_inner(d_psi[1][u], psi[u]) + re_inner(d_phi[0][u], psi[u]) + re_inner(d_psi[0][u], phi[u]);
    double p2 = re_inner(d_psi[2][u], psi[u]) + re_inner(d_phi[1][u], psi[u]) + re_inner(d_psi[1][u], phi[u]) +
                re_inner(d_phi[0][u], phi[u]);
    double n0 = psi[u].squaredNorm();
    double n1 = 2.0 * re_inner(psi[u], phi[u]);
    double n2 = phi[u].squaredNorm();
    std::array<double, 3> integrand{jets.scal[0][u] + p0 - lambda * n0, jets.scal[1][u] + p1 - lambda * n1,
                                    jets.scal[2][u] + p2 - lambda * n2};
    acc[0][u] = integrand[0] * jets.meas[0][u];
    acc[1][u] = integrand[0] * jets.meas[1][u] + integrand[1] * jets.meas[0][u];
    acc[2][u] = integrand[0] * jets.meas[2][u] + integrand[1] * jets.meas[1][u] + integrand[2] * jets.meas[0][u];
    out.meas_first_density[u] = jets.meas[1][u] / jets.meas[0][u];
    dirac1[u] = p1 * jets.meas[0][u];
  }
  for (int l = 0; l < 3; ++l) out.e[static_cast<std::size_t>(l)] = pairwise_sum(acc[static_cast<std::size_t>(l)]);
  out.dirac_first_fixed_measure = pairwise_sum(dirac1);
  return out;
}

inline EnergyJets energy_jets(const LieGroupGeometry& geo, const GeometryJets<LieGroupGeometry>& jets,
                              const CliffordAlgebra& alg, const SpinorField& psi, const SpinorField& phi,
                              double lambda) {
  struct NoAxis {
    std::unique_ptr<std::array<SpinorField, 3>> operator()(const SpinorField&) const { return nullptr; }
  };
  return energy_jets_impl(geo, jets, alg, psi, phi, lambda, NoAxis{});
}

template <int D>
EnergyJets energy_jets(const LatticeGeometry<D>& geo, const GeometryJets<LatticeGeometry<D>>& jets,
                       const CliffordAlgebra& alg, const SpinorField& psi, const SpinorField& phi, double lambda) {
  auto axis_of = [&geo](const SpinorField& f) {
    auto out = std::make_unique<std::array<SpinorField, D>>();
    for (int i = 0; i < D; ++i) (*out)[static_cast<std::size_t>(i)] = geo.axis_d(f, i);
    return out;
  };
  return energy_jets_impl(geo, jets, alg, psi, phi, lambda, axis_of);
}

// ---------------------------------------------------------------------------
// first-variation checks: Richardson-extrapolated centered differences of the
// assembled quantities against their exact linearizations, plus the closed
// variational formulas as separate anchor values.

enum class FirstVariationKind { volume, scalar, dirac };

struct VariationReport {
  double analytic = 0.0;       // exact linearization of the discrete pipeline
  double fd = 0.0;             // Richardson-extrapolated centered difference
  std::vector<double> steps;
  double rel_error = 0.0;
  double order_estimate = 0.0;
  bool pass = false;

  double formula = 0.0;        // closed variational formula evaluated on the base data
  double formula_rel_error = 0.0;
  double sign_ratio = 0.0;     // dirac case: fd divided by -<T,h> (printed-sign probe)
};

template <class G>
VariationReport first_variation_check(const G& geo, const CliffordAlgebra& alg, const SpinorField& psi,
                                      const Field<typename G::Mat>& h_coord, FirstVariationKind kind,
                                      double tol = 1e-6, double fd_step = 1e-2) {
  check_spinor_compat(geo, alg, psi);
  auto jets = build_geometry_jets(geo, h_coord);
  VariationReport rep;

  if (kind == FirstVariationKind::volume) {
    // d/dt of the total volume; formula: 1/2 <g,h> integrated
    std::vector<double> a1(static_cast<std::size_t>(geo.sites()));
    std::vector<double> f1(static_cast<std::size_t>(geo.sites()));
    for (int s = 0; s < geo.sites(); ++s) {
      a1[static_cast<std::size_t>(s)] = jets.meas[1][static_cast<std::size_t>(s)];
      f1[static_cast<std::size_t>(s)] =
          0.5 * jets.h_frame[static_cast<std::size_t>(s)].trace() * jets.meas[0][static_cast<std::size_t>(s)];
    }
    rep.analytic = pairwise_sum(a1);
    rep.formula = pairwise_sum(f1);
    auto fd = richardson_first_derivative(
        [&](double t) { return total_volume(geo.deformed(h_coord, t)); }, fd_step);
    rep.fd = fd.value;
    rep.steps = fd.steps;
    rep.order_estimate = fd.order_estimate;
  } else if (kind == FirstVariationKind::scalar) {
    // pointwise at a deterministic sample of sites; worst relative error
    std::vector<int> sample;
    int stridev = std::max(1, geo.sites() / 5);
    for (int s = 0; s < geo.sites(); s += stridev) sample.push_back(s);

    // closed formula: -Delta tr h + delta^2 h - <Ric, h>
    Field<typename G::Mat> hf = jets.h_frame;
    Field<double> trh(hf.size());
    for (std::size_t s = 0; s < hf.size(); ++s) trh[s] = hf[s].trace();
    auto lap_tr = laplacian_scalar(geo, trh);
    auto d2h = delta2_sym2(geo, hf);

    double worst = -1.0;
    for (int s : sample) {
      double analytic = jets.scal[1][static_cast<std::size_t>(s)];
      auto fd = richardson_first_derivative(
          [&](double t) { return geo.deformed(h_coord, t).scal(s); }, fd_step);
      double denom = std::max(std::abs(analytic), 1e-10);
      double err = std::abs(fd.value - analytic) / denom;
      if (err > worst) {
        worst = err;
        rep.analytic = analytic;
        rep.fd = fd.value;
        rep.steps = fd.steps;
        rep.order_estimate = fd.order_estimate;
        rep.formula = -lap_tr[static_cast<std::size_t>(s)] + d2h[static_cast<std::size_t>(s)] -
                      tensor_inner(geo.ric(s), hf[static_cast<std::size_t>(s)]);
      }
    }
  } else {
    // d/dt of sum <D_t psi, psi> against the base measure; formula: <T,h>
    rep.analytic = energy_jets(geo, jets, alg, psi, SpinorField(psi.size(), Spinor::Zero(alg.N)), 0.0)
                       .dirac_first_fixed_measure;
    auto t_tensor = energy_momentum(geo, alg, psi);
    std::vector<double> f1(static_cast<std::size_t>(geo.sites()));
    for (int s = 0; s < geo.sites(); ++s)
      f1[static_cast<std::size_t>(s)] =
          tensor_inner(t_tensor[static_cast<std::size_t>(s)], jets.h_frame[static_cast<std::size_t>(s)]) *
          jets.meas[0][static_cast<std::size_t>(s)];
    rep.formula = pairwise_sum(f1);

    auto value_at = [&](double t) {
      auto def = geo.deformed(h_coord, t);
      auto d = dirac(def, alg, psi);
      std::vector<double> v(psi.size());
      for (int s = 0; s < geo.sites(); ++s)
        v[static_cast<std::size_t>(s)] =
            re_inner(d[static_cast<std::size_t>(s)], psi[static_cast<std::size_t>(s)]) *
            jets.meas[0][static_cast<std::size_t>(s)];
      return pairwise_sum(v);
    };
    auto fd = richardson_first_derivative(value_at, fd_step);
    rep.fd = fd.value;
    rep.steps = fd.steps;
    rep.order_estimate = fd.order_estimate;
    rep.sign_ratio = (std::abs(rep.formula) > 1e-14) ? rep.fd / (-rep.formula) : 0.0;
  }

  double denom = std::max({std::abs(rep.analytic), std::abs(rep.fd), 1e-10});
  rep.rel_error = std::abs(rep.fd - rep.analytic) / denom;
  rep.formula_rel_error = std::abs(rep.fd - rep.formula) / denom;
  rep.pass = rep.rel_error <= tol;
  return rep;
}

// ---------------------------------------------------------------------------
// second variation

enum class SecondVariationMode { general, transverse };

struct SecondVariationValue {
  double value = 0.0;       // d^2/dt^2 E along (g + t h, psi + t phi)
  double first = 0.0;       // d/dt E at the base point (criticality probe)
  double delta_h_sup = 0.0; // transversality diagnostic
};

template <class G>
SecondVariationValue second_variation_form(const G& geo, const CliffordAlgebra& alg, const SpinorField& psi,
                                           double lambda, const Field<typename G::Mat>& h_coord,
                                           const SpinorField& phi, SecondVariationMode mode,
                                           double crit_tol = 1e-8, double transverse_tol = 1e-8) {
  auto el = el_residuals(geo, alg, psi, lambda);
  double crit = std::max(el.metric_sup, el.spinor_sup);
  if (crit > crit_tol)
    throw std::runtime_error("second_variation_form: base pair is not critical (residual " + std::to_string(crit) +
                             ")");
  auto jets = build_geometry_jets(geo, h_coord);

  SecondVariationValue out;
  Field<typename G::Vec> dh = delta_sym2(geo, jets.h_frame);
  for (const auto& v : dh) out.delta_h_sup = std::max(out.delta_h_sup, v.template lpNorm<Eigen::Infinity>());
  if (mode == SecondVariationMode::transverse && out.delta_h_sup > transverse_tol)
    throw std::runtime_error("second_variation_form: deformation is not transverse (|delta h| = " +
                             std::to_string(out.delta_h_sup) + ")");

  auto ej = energy_jets(geo, jets, alg, psi, phi, lambda);
  out.value = ej.second();
  out.first = ej.first();
  return out;
}

// polarization of the quadratic form
template <class G>
double second_variation_polarized(const G& geo, const CliffordAlgebra& alg, const SpinorField& psi, double lambda,
                                  const Field<typename G::Mat>& h1, const SpinorField& phi1,
                                  const Field<typename G::Mat>& h2, const SpinorField& phi2,
                                  SecondVariationMode mode, double crit_tol = 1e-8) {
  Field<typename G::Mat> hp(h1.size()), hm(h1.size());
  SpinorField pp(phi1.size()), pm(phi1.size());
  for (std::size_t s = 0; s < h1.size(); ++s) {
    hp[s] = h1[s] + h2[s];
    hm[s] = h1[s] - h2[s];
  }
  for (std::size_t s = 0; s < phi1.size(); ++s) {
    pp[s] = phi1[s] + phi2[s];
    pm[s] = phi1[s] - phi2[s];
  }
  double qp = second_variation_form(geo, alg, psi, lambda, hp, pp, mode, crit_tol, 1e300).value;
  double qm = second_variation_form(geo, alg, psi, lambda, hm, pm, mode, crit_tol, 1e300).value;
  return 0.25 * (qp - qm);
}

// ---------------------------------------------------------------------------
// horizontal deformations (metric-only null directions)

template <class G>
struct HorizontalReport {
  double delta_h_sup = 0.0;        // |delta h|
  double einstein_pairing = 0.0;   // <Ric - (R/2) g, h>_L2
  double t_pairing = 0.0;          // <T, h>_L2
  double third_rough_sup = 0.0;    // |Delta h + R h + T x h| with the rough Laplacian
  double third_lichnerowicz_sup = 0.0; // same with the Lichnerowicz operator
  double trace_integral = 0.0;     // integral of tr h (Einstein-base diagnostic)
  double ric_pairing = 0.0;        // <Ric, h>_L2
};

template <class G>
HorizontalReport<G> horizontal_residual(const G& geo, const CliffordAlgebra& alg, const SpinorField& psi,
                                        double lambda, const Field<typename G::Mat>& h_frame,
                                        double crit_tol = 1e-8) {
  auto el = el_residuals(geo, alg, psi, lambda);
  double crit = std::max(el.metric_sup, el.spinor_sup);
  if (crit > crit_tol)
    throw std::runtime_error("horizontal_residual: base pair is not critical (residual " + std::to_string(crit) +
                             ")");
  HorizontalReport<G> rep;
  auto dh = delta_sym2(geo, h_frame);
  for (const auto& v : dh) rep.delta_h_sup = std::max(rep.delta_h_sup, v.template lpNorm<Eigen::Infinity>());

  auto t_tensor = energy_momentum(geo, alg, psi);
  Field<double> pe(h_frame.size()), pt(h_frame.size()), ptr(h_frame.size()), pric(h_frame.size());
  for (int s = 0; s < geo.sites(); ++s) {
    const std::size_t u = static_cast<std::size_t>(s);
    typename G::Mat einstein = geo.ric(s) - 0.5 * geo.scal(s) * G::Mat::Identity();
    pe[u] = tensor_inner(einstein, h_frame[u]);
    pt[u] = tensor_inner(t_tensor[u], h_frame[u]);
    ptr[u] = h_frame[u].trace();
    pric[u] = tensor_inner(geo.ric(s), h_frame[u]);
  }
  rep.einstein_pairing = integrate(geo, pe);
  rep.t_pairing = integrate(geo, pt);
  rep.trace_integral = integrate(geo, ptr);
  rep.ric_pairing = integrate(geo, pric);

  auto rough = rough_laplacian_sym2(geo, h_frame);
  auto lich = lichnerowicz_sym2(geo, h_frame);
  for (int s = 0; s < geo.sites(); ++s) {
    const std::size_t u = static_cast<std::size_t>(s);
    typename G::Mat tail = geo.scal(s) * h_frame[u] + t_tensor[u] * h_frame[u];
    rep.third_rough_sup = std::max(rep.third_rough_sup, (tail - rough[u]).cwiseAbs().maxCoeff());
    rep.third_lichnerowicz_sup = std::max(rep.third_lichnerowicz_sup, (tail - lich[u]).cwiseAbs().maxCoeff());
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Dirac eigenvalue derivative along a metric path (left-invariant reduction)

struct EigenDerivativeReport {
  double fd = 0.0;               // Richardson derivative of the tracked eigenvalue
  double printed_candidate = 0.0; // -1/2 integral <T,h> (unit L2 spinor)
  double measured_candidate = 0.0; // + integral <T,h>
  double ratio_printed = 0.0;    // fd / printed_candidate
  double lambda0 = 0.0;
  std::vector<double> steps;
  bool crossing = false;
};

inline EigenDerivativeReport eigenvalue_derivative_check(const LieGroupGeometry& geo, const CliffordAlgebra& alg,
                                                         const Eigen::Matrix3d& h_coord, const Spinor& branch,
                                                         double fd_step = 1e-2) {
  EigenDerivativeReport rep;

  Spinor ref = branch;
  double vol = total_volume(geo);
  ref /= (ref.norm() * std::sqrt(vol)); // unit L2 normalization

  auto tracked = [&](double t) {
    LieGroupGeometry def = geo.deformed(h_coord, t);
    GammaMatrix dm = dirac_matrix(def, alg);
    Eigen::SelfAdjointEigenSolver<GammaMatrix> es(dm);
    int best = 0;
    double best_overlap = -1.0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
      double ov = std::abs(es.eigenvectors().col(i).dot(ref));
      if (ov > best_overlap) {
        best_overlap = ov;
        best = i;
      }
    }
    if (best_overlap < 0.5) rep.crossing = true;
    return es.eigenvalues()(best);
  };
  rep.lambda0 = tracked(0.0);

  auto fd = richardson_first_derivative(tracked, fd_step);
  rep.fd = fd.value;
  rep.steps = fd.steps;
  if (rep.crossing) throw std::runtime_error("eigenvalue_derivative_check: branch ambiguity along the path");

  auto psi_field = constant_spinor_field(geo, ref);
  auto t_tensor = energy_momentum(geo, alg, psi_field);
  Eigen::Matrix3d h_frame = geo.to_frame(h_coord);
  double pairing = tensor_inner(t_tensor[0], h_frame) * geo.measure(0);
  rep.printed_candidate = -0.5 * pairing;
  rep.measured_candidate = pairing;
  rep.ratio_printed = (std::abs(rep.printed_candidate) > 1e-14) ? rep.fd / rep.printed_candidate : 0.0;
  return rep;
}

} // namespace derlab

#endif
