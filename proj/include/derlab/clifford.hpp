#ifndef DERLAB_CLIFFORD_HPP
#define DERLAB_CLIFFORD_HPP

#include "derlab/core.hpp"

namespace derlab {

using Spinor = Eigen::VectorXcd;
using GammaMatrix = Eigen::MatrixXcd;

// Complex Clifford module for R^n with the convention
//   gamma_i gamma_j + gamma_j gamma_i = -2 delta_ij,
// all generators anti-hermitian and unitary. The construction is a fixed
// recursive tensor-product scheme, so results are bit-reproducible:
//   gamma_{2k-1} = s3^(k-1) (x) (i s1) (x) 1...,
//   gamma_{2k}   = s3^(k-1) (x) (i s2) (x) 1...,
// and in odd dimension 2m+1 the last generator is a fixed multiple of the
// product of the others (the irreducible half). For n = 3 this gives
// gamma_k = i s_k, with volume element gamma_1 gamma_2 gamma_3 = +1.
struct CliffordAlgebra {
  int n = 0;                       // vector space dimension
  int N = 0;                       // spinor dimension 2^floor(n/2)
  std::vector<GammaMatrix> gamma;  // n generators, N x N
  cplx volume_scalar{0.0, 0.0};    // gamma_1...gamma_n = volume_scalar * I (odd n only)

  const GammaMatrix& g(int i) const { return gamma[static_cast<std::size_t>(i)]; }
};

namespace detail {

inline GammaMatrix pauli(int k) {
  GammaMatrix s(2, 2);
  switch (k) {
    case 1: s << 0, 1, 1, 0; break;
    case 2: s << 0, cplx(0, -1), cplx(0, 1), 0; break;
    default: s << 1, 0, 0, -1; break;
  }
  return s;
}

inline GammaMatrix kron(const GammaMatrix& a, const GammaMatrix& b) {
  GammaMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

} // namespace detail

// Construction for any n >= 2; the supported public range is checked in
// build_clifford below.
inline CliffordAlgebra build_clifford_any(int n) {
  if (n < 2 || n > 12) throw std::invalid_argument("build_clifford: dimension out of range");
  const int m = n / 2;
  const int N = 1 << m;
  const cplx iu(0.0, 1.0);

  CliffordAlgebra alg;
  alg.n = n;
  alg.N = N;
  alg.gamma.reserve(static_cast<std::size_t>(n));

  GammaMatrix id1 = GammaMatrix::Identity(1, 1);
  for (int k = 1; k <= m; ++k) {
    GammaMatrix pre = id1;
    for (int j = 0; j < k - 1; ++j) pre = detail::kron(pre, detail::pauli(3));
    GammaMatrix post = id1;
    for (int j = k; j < m; ++j) post = detail::kron(post, GammaMatrix::Identity(2, 2));
    alg.gamma.push_back(detail::kron(detail::kron(pre, iu * detail::pauli(1)), post));
    alg.gamma.push_back(detail::kron(detail::kron(pre, iu * detail::pauli(2)), post));
  }
  if (n % 2 == 1) {
    GammaMatrix prod = GammaMatrix::Identity(N, N);
    for (int k = 0; k < 2 * m; ++k) prod = prod * alg.gamma[static_cast<std::size_t>(k)];
    // scale chosen so the generator squares to -1 and stays anti-hermitian
    cplx c = (m % 2 == 1) ? cplx(-1.0, 0.0) : iu;
    alg.gamma.push_back(c * prod);
  }
  if (n % 2 == 1) {
    GammaMatrix vol = GammaMatrix::Identity(N, N);
    for (int k = 0; k < n; ++k) vol = vol * alg.gamma[static_cast<std::size_t>(k)];
    alg.volume_scalar = vol(0, 0);
  }
  return alg;
}

inline CliffordAlgebra build_clifford(int n) {
  if (n < 2 || n > 6) throw std::invalid_argument("build_clifford: supported dimensions are 2..6");
  return build_clifford_any(n);
}

// Hermitian inner product, conjugate linear in the second slot:
// hermitian_inner(psi, phi) = sum_i psi_i conj(phi_i).
inline cplx hermitian_inner(const Spinor& psi, const Spinor& phi) {
  if (psi.size() != phi.size()) throw std::invalid_argument("hermitian_inner: dimension mismatch");
  return phi.dot(psi);
}

// Real part; the Euclidean pairing used in all tensor contractions.
inline double re_inner(const Spinor& psi, const Spinor& phi) { return hermitian_inner(psi, phi).real(); }

// Clifford action of a vector: X . psi = sum_i X_i gamma_i psi.
inline Spinor clifford_mul(const CliffordAlgebra& alg, const Eigen::VectorXd& x, const Spinor& psi) {
  if (x.size() != alg.n) throw std::invalid_argument("clifford_mul: vector rank mismatch");
  Spinor out = Spinor::Zero(alg.N);
  for (int i = 0; i < alg.n; ++i)
    if (x(i) != 0.0) out += x(i) * (alg.g(i) * psi);
  return out;
}

// Clifford action of a 2-form: sum_{i<j} w_ij gamma_i gamma_j psi.
inline Spinor clifford_mul(const CliffordAlgebra& alg, const Eigen::MatrixXd& w, const Spinor& psi,
                           double antisym_tol = 1e-12) {
  if (w.rows() != alg.n || w.cols() != alg.n) throw std::invalid_argument("clifford_mul: 2-form rank mismatch");
  if ((w + w.transpose()).cwiseAbs().maxCoeff() > antisym_tol * std::max(1.0, w.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("clifford_mul: 2-form is not antisymmetric");
  Spinor out = Spinor::Zero(alg.N);
  for (int i = 0; i < alg.n; ++i)
    for (int j = i + 1; j < alg.n; ++j)
      if (w(i, j) != 0.0) out += w(i, j) * (alg.g(i) * (alg.g(j) * psi));
  return out;
}

// Totally antisymmetric 3-tensor, stored dense.
struct ThreeForm {
  int n = 0;
  std::vector<double> a; // n^3 entries, a[(i*n+j)*n+k]

  explicit ThreeForm(int dim) : n(dim), a(static_cast<std::size_t>(dim) * dim * dim, 0.0) {}
  double& operator()(int i, int j, int k) { return a[static_cast<std::size_t>((i * n + j) * n + k)]; }
  double operator()(int i, int j, int k) const { return a[static_cast<std::size_t>((i * n + j) * n + k)]; }

  // set the component and all permutations with alternating signs
  void set(int i, int j, int k, double v) {
    (*this)(i, j, k) = v;
    (*this)(j, k, i) = v;
    (*this)(k, i, j) = v;
    (*this)(j, i, k) = -v;
    (*this)(i, k, j) = -v;
    (*this)(k, j, i) = -v;
  }

  double antisymmetry_defect() const {
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          worst = std::max(worst, std::abs((*this)(i, j, k) + (*this)(j, i, k)));
          worst = std::max(worst, std::abs((*this)(i, j, k) + (*this)(i, k, j)));
        }
    return worst;
  }
};

// Clifford action of a 3-form: sum_{i<j<k} w_ijk gamma_i gamma_j gamma_k psi.
inline Spinor clifford_mul(const CliffordAlgebra& alg, const ThreeForm& w, const Spinor& psi,
                           double antisym_tol = 1e-12) {
  if (w.n != alg.n) throw std::invalid_argument("clifford_mul: 3-form rank mismatch");
  if (w.antisymmetry_defect() > antisym_tol) throw std::invalid_argument("clifford_mul: 3-form is not antisymmetric");
  Spinor out = Spinor::Zero(alg.N);
  for (int i = 0; i < alg.n; ++i)
    for (int j = i + 1; j < alg.n; ++j)
      for (int k = j + 1; k < alg.n; ++k)
        if (w(i, j, k) != 0.0) out += w(i, j, k) * (alg.g(i) * (alg.g(j) * (alg.g(k) * psi)));
  return out;
}

// Largest violation of gamma_i gamma_j + gamma_j gamma_i = -2 delta_ij I.
inline double anticommutator_defect(const CliffordAlgebra& alg) {
  double worst = 0.0;
  GammaMatrix id = GammaMatrix::Identity(alg.N, alg.N);
  for (int i = 0; i < alg.n; ++i)
    for (int j = 0; j < alg.n; ++j) {
      GammaMatrix ac = alg.g(i) * alg.g(j) + alg.g(j) * alg.g(i);
      if (i == j) ac += 2.0 * id;
      worst = std::max(worst, ac.cwiseAbs().maxCoeff());
    }
  return worst;
}

inline double antihermiticity_defect(const CliffordAlgebra& alg) {
  double worst = 0.0;
  for (int i = 0; i < alg.n; ++i)
    worst = std::max(worst, (alg.g(i).adjoint() + alg.g(i)).cwiseAbs().maxCoeff());
  return worst;
}

// Re<gamma_i gamma_p gamma_l psi, psi>, used by the variational machinery.
// Vanishes unless i, p, l are pairwise distinct.
inline double three_form_component(const CliffordAlgebra& alg, int i, int p, int l, const Spinor& psi) {
  return re_inner(alg.g(i) * (alg.g(p) * (alg.g(l) * psi)), psi);
}

} // namespace derlab

#endif
