#ifndef DERLAB_CALCULUS_HPP
#define DERLAB_CALCULUS_HPP

#include "derlab/core.hpp"

// Frame tensor calculus shared by the Lie-group and lattice backends. A
// geometry G provides sites(), measure(s), conn(s) (frame connection
// coefficients conn[k](a,b) = <nabla_k e_a, e_b>), curvature accessors and
// frame_d (derivative of a field along a frame vector; identically zero in
// the left-invariant backend). Tensor fields hold frame components.

namespace derlab {

template <class G>
double integrate(const G& geo, const Field<double>& f) {
  if (static_cast<int>(f.size()) != geo.sites()) throw std::invalid_argument("integrate: grid mismatch");
  std::vector<double> w(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) w[i] = f[i] * geo.measure(static_cast<int>(i));
  return pairwise_sum(w);
}

template <class G>
double total_volume(const G& geo) {
  return integrate(geo, Field<double>(static_cast<std::size_t>(geo.sites()), 1.0));
}

// --- scalars -----------------------------------------------------------------

// gradient in frame components, (grad u)_a = e_a(u)
template <class G>
std::array<Field<double>, G::Dim> grad_scalar(const G& geo, const Field<double>& u) {
  std::array<Field<double>, G::Dim> out;
  for (int k = 0; k < G::Dim; ++k) out[static_cast<std::size_t>(k)] = geo.frame_d(u, k);
  return out;
}

// covariant Hessian, (hess u)_{ab} = e_a(e_b(u)) - conn[a](b,c) e_c(u)
template <class G>
Field<typename G::Mat> hessian_scalar(const G& geo, const Field<double>& u) {
  const int n = G::Dim;
  auto du = grad_scalar(geo, u);
  std::array<std::array<Field<double>, G::Dim>, G::Dim> ddu;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) ddu[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] =
        geo.frame_d(du[static_cast<std::size_t>(b)], a);
  Field<typename G::Mat> out(static_cast<std::size_t>(geo.sites()));
  for (int s = 0; s < geo.sites(); ++s) {
    typename G::Mat m;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        double v = ddu[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)][static_cast<std::size_t>(s)];
        for (int c = 0; c < n; ++c)
          v -= geo.conn(s)[static_cast<std::size_t>(a)](b, c) * du[static_cast<std::size_t>(c)][static_cast<std::size_t>(s)];
        m(a, b) = v;
      }
    out[static_cast<std::size_t>(s)] = m;
  }
  return out;
}

// Laplacian with negative spectrum (trace of the covariant Hessian); the
// connection Laplacian nabla*nabla equals minus this on scalars.
template <class G>
Field<double> laplacian_scalar(const G& geo, const Field<double>& u) {
  auto h = hessian_scalar(geo, u);
  Field<double> out(h.size());
  for (std::size_t s = 0; s < h.size(); ++s) out[s] = h[s].trace();
  return out;
}

// --- one-forms (frame components as Vec per site) ------------------------------

template <class G>
Field<typename G::Vec> cov_deriv_oneform(const G& geo, const Field<typename G::Vec>& w, int k) {
  const int n = G::Dim;
  Field<double> comp(w.size());
  Field<typename G::Vec> out(w.size());
  std::array<Field<double>, G::Dim> dcomp;
  for (int a = 0; a < n; ++a) {
    for (std::size_t s = 0; s < w.size(); ++s) comp[s] = w[s](a);
    dcomp[static_cast<std::size_t>(a)] = geo.frame_d(comp, k);
  }
  for (int s = 0; s < geo.sites(); ++s) {
    typename G::Vec v;
    for (int a = 0; a < n; ++a) {
      double x = dcomp[static_cast<std::size_t>(a)][static_cast<std::size_t>(s)];
      for (int c = 0; c < n; ++c) x -= geo.conn(s)[static_cast<std::size_t>(k)](a, c) * w[static_cast<std::size_t>(s)](c);
      v(a) = x;
    }
    out[static_cast<std::size_t>(s)] = v;
  }
  return out;
}

template <class G>
Field<double> divergence_oneform(const G& geo, const Field<typename G::Vec>& w) {
  Field<double> out(w.size(), 0.0);
  for (int k = 0; k < G::Dim; ++k) {
    auto dw = cov_deriv_oneform(geo, w, k);
    for (std::size_t s = 0; s < w.size(); ++s) out[s] += dw[s](k);
  }
  return out;
}

// --- symmetric 2-tensors --------------------------------------------------------

template <class G>
Field<typename G::Mat> cov_deriv_sym2(const G& geo, const Field<typename G::Mat>& h, int k) {
  const int n = G::Dim;
  Field<typename G::Mat> out(h.size());
  std::array<std::array<Field<double>, G::Dim>, G::Dim> dcomp;
  Field<double> comp(h.size());
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      for (std::size_t s = 0; s < h.size(); ++s) comp[s] = h[s](a, b);
      dcomp[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = geo.frame_d(comp, k);
    }
  for (int s = 0; s < geo.sites(); ++s) {
    typename G::Mat m;
    const auto& gam = geo.conn(s)[static_cast<std::size_t>(k)];
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) {
        double v = dcomp[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)][static_cast<std::size_t>(s)];
        for (int c = 0; c < n; ++c)
          v -= gam(a, c) * h[static_cast<std::size_t>(s)](c, b) + gam(b, c) * h[static_cast<std::size_t>(s)](a, c);
        m(a, b) = v;
        m(b, a) = v;
      }
    out[static_cast<std::size_t>(s)] = m;
  }
  return out;
}

// (delta h)_a = -(div h)_a = -sum_k (nabla_k h)_{ka}
template <class G>
Field<typename G::Vec> delta_sym2(const G& geo, const Field<typename G::Mat>& h) {
  Field<typename G::Vec> out(h.size(), G::Vec::Zero());
  for (int k = 0; k < G::Dim; ++k) {
    auto dh = cov_deriv_sym2(geo, h, k);
    for (std::size_t s = 0; s < h.size(); ++s)
      for (int a = 0; a < G::Dim; ++a) out[s](a) -= dh[s](k, a);
  }
  return out;
}

// delta^2 h = sum nabla^i nabla^j h_ij = div(div h)
template <class G>
Field<double> delta2_sym2(const G& geo, const Field<typename G::Mat>& h) {
  auto dh = delta_sym2(geo, h);
  for (auto& v : dh) v = -v; // div h
  return divergence_oneform(geo, dh);
}

// symmetrized covariant derivative of a one-form
template <class G>
Field<typename G::Mat> delta_star_oneform(const G& geo, const Field<typename G::Vec>& w) {
  Field<typename G::Mat> out(w.size(), G::Mat::Zero());
  for (int k = 0; k < G::Dim; ++k) {
    auto dw = cov_deriv_oneform(geo, w, k);
    for (std::size_t s = 0; s < w.size(); ++s)
      for (int a = 0; a < G::Dim; ++a) {
        out[s](k, a) += 0.5 * dw[s](a);
        out[s](a, k) += 0.5 * dw[s](a);
      }
  }
  return out;
}

// rough (Bochner) Laplacian nabla*nabla on symmetric 2-tensors, positive sign
template <class G>
Field<typename G::Mat> rough_laplacian_sym2(const G& geo, const Field<typename G::Mat>& h) {
  const int n = G::Dim;
  std::array<Field<typename G::Mat>, G::Dim> first;
  for (int k = 0; k < n; ++k) first[static_cast<std::size_t>(k)] = cov_deriv_sym2(geo, h, k);
  Field<typename G::Mat> out(h.size(), G::Mat::Zero());
  for (int k = 0; k < n; ++k) {
    auto second = cov_deriv_sym2(geo, first[static_cast<std::size_t>(k)], k);
    for (int s = 0; s < geo.sites(); ++s) {
      typename G::Mat corr = G::Mat::Zero();
      for (int c = 0; c < n; ++c) {
        double gkk = geo.conn(s)[static_cast<std::size_t>(k)](k, c);
        if (gkk != 0.0) corr += gkk * first[static_cast<std::size_t>(c)][static_cast<std::size_t>(s)];
      }
      out[static_cast<std::size_t>(s)] -= second[static_cast<std::size_t>(s)] - corr;
    }
  }
  return out;
}

// (ringR h)(X,Y) = sum_{ij} Rm(e_i, X, e_j, Y) h(e_i, e_j); ringR g = Ric.
template <class G>
Field<typename G::Mat> ring_curvature_sym2(const G& geo, const Field<typename G::Mat>& h) {
  const int n = G::Dim;
  Field<typename G::Mat> out(h.size(), G::Mat::Zero());
  for (int s = 0; s < geo.sites(); ++s) {
    typename G::Mat m = G::Mat::Zero();
    for (int x = 0; x < n; ++x)
      for (int y = x; y < n; ++y) {
        double v = 0.0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) v += geo.rm(s, i, x, j, y) * h[static_cast<std::size_t>(s)](i, j);
        m(x, y) = v;
        m(y, x) = v;
      }
    out[static_cast<std::size_t>(s)] = m;
  }
  return out;
}

// Lichnerowicz Laplacian, positive convention:
//   Delta_L h = nabla*nabla h + Ric o h + h o Ric - 2 ringR h,
// which annihilates the metric identically.
template <class G>
Field<typename G::Mat> lichnerowicz_sym2(const G& geo, const Field<typename G::Mat>& h) {
  auto out = rough_laplacian_sym2(geo, h);
  auto rr = ring_curvature_sym2(geo, h);
  for (int s = 0; s < geo.sites(); ++s) {
    const auto& ric = geo.ric(s);
    const auto& hs = h[static_cast<std::size_t>(s)];
    out[static_cast<std::size_t>(s)] += ric * hs + hs * ric - 2.0 * rr[static_cast<std::size_t>(s)];
  }
  return out;
}

// linearized Ricci in direction h (frame components of the tensor derivative):
//   Ric'(h) = 1/2 Delta_L h - delta*(delta h) - 1/2 hess(tr h)
template <class G>
Field<typename G::Mat> linearized_ricci(const G& geo, const Field<typename G::Mat>& h) {
  auto out = lichnerowicz_sym2(geo, h);
  for (auto& m : out) m *= 0.5;
  auto ds = delta_star_oneform(geo, delta_sym2(geo, h));
  Field<double> tr(h.size());
  for (std::size_t s = 0; s < h.size(); ++s) tr[s] = h[s].trace();
  auto hs = hessian_scalar(geo, tr);
  for (std::size_t s = 0; s < h.size(); ++s) out[s] += -ds[s] - 0.5 * hs[s];
  return out;
}

template <class Mat>
double tensor_inner(const Mat& a, const Mat& b) {
  return (a.array() * b.array()).sum();
}

// Pointwise outputs of the symmetric-2-tensor toolbox for a single site
// geometry (the left-invariant backend).
template <class G>
struct SymTensorReport {
  double trace = 0.0;
  typename G::Vec delta;
  typename G::Mat hess_trace;
  typename G::Mat lichnerowicz;
  typename G::Mat ring_curvature;
  typename G::Mat h_times_t;
  double inner_ht = 0.0;
  double norm2 = 0.0;
};

template <class G>
SymTensorReport<G> sym_tensor_calculus(const G& geo, const typename G::Mat& h, const typename G::Mat& t) {
  if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-12 || (t - t.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("sym_tensor_calculus: input tensor not symmetric");
  if (geo.sites() != 1) throw std::invalid_argument("sym_tensor_calculus: single-site geometry expected");
  Field<typename G::Mat> hf{h};
  SymTensorReport<G> rep;
  rep.trace = h.trace();
  rep.delta = delta_sym2(geo, hf)[0];
  Field<double> trf{rep.trace};
  rep.hess_trace = hessian_scalar(geo, trf)[0];
  rep.lichnerowicz = lichnerowicz_sym2(geo, hf)[0];
  rep.ring_curvature = ring_curvature_sym2(geo, hf)[0];
  rep.h_times_t = h * t;
  rep.inner_ht = tensor_inner(h, t);
  rep.norm2 = tensor_inner(h, h);
  return rep;
}

} // namespace derlab

#endif
