#ifndef DERLAB_FUNCTIONAL_HPP
#define DERLAB_FUNCTIONAL_HPP

#include "derlab/spinor.hpp"

namespace derlab {

struct CouplingConstant {
  double lambda = 0.0;

  explicit CouplingConstant(double l) : lambda(l) {
    if (!std::isfinite(l)) throw std::invalid_argument("CouplingConstant: lambda must be finite");
  }
  bool positive() const { return lambda > 0.0; }
};

struct EnergyBreakdown {
  double total = 0.0;
  double scalar_term = 0.0; // integral of R
  double dirac_term = 0.0;  // integral of <D psi, psi>
  double norm_term = 0.0;   // integral of lambda |psi|^2
};

// E(g, psi) = integral of R + <D psi, psi> - lambda |psi|^2
template <class G>
EnergyBreakdown energy(const G& geo, const CliffordAlgebra& alg, const SpinorField& psi, double lambda) {
  check_spinor_compat(geo, alg, psi);
  auto d = dirac(geo, alg, psi);
  Field<double> fr(psi.size()), fd(psi.size()), fn(psi.size());
  for (int s = 0; s < geo.sites(); ++s) {
    fr[static_cast<std::size_t>(s)] = geo.scal(s);
    fd[static_cast<std::size_t>(s)] = re_inner(d[static_cast<std::size_t>(s)], psi[static_cast<std::size_t>(s)]);
    fn[static_cast<std::size_t>(s)] = lambda * psi[static_cast<std::size_t>(s)].squaredNorm();
  }
  EnergyBreakdown out;
  out.scalar_term = integrate(geo, fr);
  out.dirac_term = integrate(geo, fd);
  out.norm_term = integrate(geo, fn);
  out.total = out.scalar_term + out.dirac_term - out.norm_term;
  return out;
}

// S_ab = Re<gamma_a nabla_b psi, psi>; the energy-momentum tensor is the
// symmetrization T = -1/4 (S + S^T).
template <class G>
Field<typename G::Mat> first_moment_tensor(const G& geo, const CliffordAlgebra& alg, const SpinorField& psi) {
  check_spinor_compat(geo, alg, psi);
  Field<typename G::Mat> s_field(psi.size(), G::Mat::Zero());
  for (int b = 0; b < G::Dim; ++b) {
    auto db = cov_deriv_spinor(geo, alg, psi, b);
    for (int s = 0; s < geo.sites(); ++s)
      for (int a = 0; a < G::Dim; ++a)
        s_field[static_cast<std::size_t>(s)](a, b) =
            re_inner(alg.g(a) * db[static_cast<std::size_t>(s)], psi[static_cast<std::size_t>(s)]);
  }
  return s_field;
}

template <class G>
Field<typename G::Mat> energy_momentum(const G& geo, const CliffordAlgebra& alg, const SpinorField& psi) {
  auto s_field = first_moment_tensor(geo, alg, psi);
  Field<typename G::Mat> out(s_field.size());
  for (std::size_t s = 0; s < s_field.size(); ++s)
    out[s] = -0.25 * (s_field[s] + s_field[s].transpose());
  return out;
}

template <class G>
struct ELResidual {
  Field<typename G::Mat> metric_residual; // Ric - (R/2) g - T, frame components
  SpinorField spinor_residual;            // D psi - lambda psi
  double metric_sup = 0.0;
  double metric_l2 = 0.0;
  double spinor_sup = 0.0;
  double spinor_l2 = 0.0;
};

template <class G>
ELResidual<G> el_residuals(const G& geo, const CliffordAlgebra& alg, const SpinorField& psi, double lambda) {
  ELResidual<G> out;
  auto t = energy_momentum(geo, alg, psi);
  out.metric_residual.resize(t.size());
  Field<double> m2(t.size());
  for (int s = 0; s < geo.sites(); ++s) {
    typename G::Mat e1 = geo.ric(s) - 0.5 * geo.scal(s) * G::Mat::Identity() - t[static_cast<std::size_t>(s)];
    out.metric_residual[static_cast<std::size_t>(s)] = e1;
    out.metric_sup = std::max(out.metric_sup, e1.cwiseAbs().maxCoeff());
    m2[static_cast<std::size_t>(s)] = tensor_inner(e1, e1);
  }
  out.metric_l2 = std::sqrt(std::max(0.0, integrate(geo, m2)));

  auto d = dirac(geo, alg, psi);
  out.spinor_residual.resize(psi.size());
  for (std::size_t s = 0; s < psi.size(); ++s) out.spinor_residual[s] = d[s] - lambda * psi[s];
  out.spinor_sup = sup_norm(out.spinor_residual);
  out.spinor_l2 = l2_norm(geo, out.spinor_residual);
  return out;
}

// residual of R = lambda |psi|^2 / (n - 2)
template <class G>
Field<double> trace_identity_residual(const G& geo, const CliffordAlgebra& alg, const SpinorField& psi,
                                      double lambda) {
  static_assert(G::Dim >= 2, "trace identity needs n >= 3");
  if (G::Dim < 3) throw std::invalid_argument("trace_identity_residual: needs n >= 3");
  check_spinor_compat(geo, alg, psi);
  Field<double> out(psi.size());
  for (int s = 0; s < geo.sites(); ++s)
    out[static_cast<std::size_t>(s)] =
        geo.scal(s) - lambda * psi[static_cast<std::size_t>(s)].squaredNorm() / (G::Dim - 2);
  return out;
}

// Q = -Delta R / (2(n-1)) - 2 |Ric|^2 / (n-2)^2
//     + (n^3 - 4n^2 + 16n - 16) R^2 / (8 (n-1)^2 (n-2)^2)
template <class G>
Field<double> q_curvature(const G& geo) {
  if (G::Dim < 3) throw std::invalid_argument("q_curvature: needs n >= 3");
  const double n = G::Dim;
  Field<double> r(static_cast<std::size_t>(geo.sites()));
  for (int s = 0; s < geo.sites(); ++s) r[static_cast<std::size_t>(s)] = geo.scal(s);
  auto lap_r = laplacian_scalar(geo, r);
  const double c2 = 2.0 / ((n - 2) * (n - 2));
  const double c3 = (n * n * n - 4.0 * n * n + 16.0 * n - 16.0) / (8.0 * (n - 1) * (n - 1) * (n - 2) * (n - 2));
  Field<double> out(r.size());
  for (int s = 0; s < geo.sites(); ++s) {
    double ric2 = tensor_inner(geo.ric(s), geo.ric(s));
    out[static_cast<std::size_t>(s)] = -lap_r[static_cast<std::size_t>(s)] / (2.0 * (n - 1)) - c2 * ric2 +
                                       c3 * r[static_cast<std::size_t>(s)] * r[static_cast<std::size_t>(s)];
  }
  return out;
}

struct BoundCheck {
  double value = 0.0;
  double bound = 0.0;
  double margin = 0.0;
  bool pass = false;
  bool evaluated = false;
};

struct AprioriReport {
  BoundCheck spinor_norm;   // sup |psi|^2 <= 4 (n-2) lambda
  BoundCheck scalar_bound;  // sup R <= 4 lambda^2
  double k_inequality_min = 0.0; // min over M of -Delta R + K R
  bool k_inequality_pass = false;
  double quartic_residual_sup = 0.0; // -Delta psi + lambda |psi|^2/(4(n-2)) psi - lambda^2 psi
  double quartic_residual_l2 = 0.0;
  double energy_constant = 0.0; // integral of R
  double lambda = 0.0;
  double kappa = 0.0;
};

template <class G>
AprioriReport apriori_bounds(const G& geo, const CliffordAlgebra& alg, const SpinorField& psi, double lambda,
                             double kappa) {
  check_spinor_compat(geo, alg, psi);
  AprioriReport rep;
  rep.lambda = lambda;
  rep.kappa = kappa;

  double sup_psi2 = 0.0, sup_r = -1e300;
  for (int s = 0; s < geo.sites(); ++s) {
    sup_psi2 = std::max(sup_psi2, psi[static_cast<std::size_t>(s)].squaredNorm());
    sup_r = std::max(sup_r, geo.scal(s));
  }
  if (lambda > 0.0) {
    rep.spinor_norm.evaluated = true;
    rep.spinor_norm.value = sup_psi2;
    rep.spinor_norm.bound = 4.0 * (G::Dim - 2) * lambda;
    rep.spinor_norm.margin = rep.spinor_norm.bound - sup_psi2;
    rep.spinor_norm.pass = rep.spinor_norm.margin >= -1e-10;

    rep.scalar_bound.evaluated = true;
    rep.scalar_bound.value = sup_r;
    rep.scalar_bound.bound = 4.0 * lambda * lambda;
    rep.scalar_bound.margin = rep.scalar_bound.bound - sup_r;
    rep.scalar_bound.pass = rep.scalar_bound.margin >= -1e-10;
  }

  Field<double> r(static_cast<std::size_t>(geo.sites()));
  for (int s = 0; s < geo.sites(); ++s) r[static_cast<std::size_t>(s)] = geo.scal(s);
  auto lap_r = laplacian_scalar(geo, r);
  double kmin = 1e300;
  for (int s = 0; s < geo.sites(); ++s)
    kmin = std::min(kmin, -lap_r[static_cast<std::size_t>(s)] + kappa * r[static_cast<std::size_t>(s)]);
  rep.k_inequality_min = kmin;
  rep.k_inequality_pass = kmin >= -1e-10;

  auto lap = connection_laplacian(geo, alg, psi); // nabla*nabla = -Delta on spinors
  SpinorField quartic(psi.size());
  for (int s = 0; s < geo.sites(); ++s) {
    double n2 = psi[static_cast<std::size_t>(s)].squaredNorm();
    quartic[static_cast<std::size_t>(s)] = lap[static_cast<std::size_t>(s)] +
                                           (lambda * n2 / (4.0 * (G::Dim - 2))) * psi[static_cast<std::size_t>(s)] -
                                           lambda * lambda * psi[static_cast<std::size_t>(s)];
  }
  rep.quartic_residual_sup = sup_norm(quartic);
  rep.quartic_residual_l2 = l2_norm(geo, quartic);
  rep.energy_constant = integrate(geo, r);
  return rep;
}

} // namespace derlab

#endif
