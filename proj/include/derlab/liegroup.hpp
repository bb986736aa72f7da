#ifndef DERLAB_LIEGROUP_HPP
#define DERLAB_LIEGROUP_HPP

#include "derlab/core.hpp"

namespace derlab {

// Exact left-invariant geometry on a 3-dimensional unimodular Lie group.
// All derived tensors are expressed in the orthonormal frame obtained from
// the symmetric principal inverse square root of the metric on the algebra;
// this is the frame under which spinor components are transported when the
// metric varies, so every variational identity here is exact algebra.
//
// Index conventions:
//   structure constants  c^k_{ij}:   [E_i, E_j] = sum_k c^k_{ij} E_k
//   frame constants      cfr(a,b,c) = <[e_a,e_b], e_c>
//   connection           conn[k](a,b) = <nabla_{e_k} e_a, e_b>
//   curvature            rm(a,b,c,d) = -g(R(e_a,e_b)e_c, e_d)
class LieGroupGeometry {
 public:
  static constexpr int Dim = 3;
  using Mat = Eigen::Matrix3d;
  using Vec = Eigen::Vector3d;

  LieGroupGeometry(const std::array<Mat, 3>& structure, const Mat& metric, double covolume = 1.0)
      : c_(structure), metric_(symmetrize(metric)), covolume_(covolume) {
    validate();
    assemble();
  }

  static std::array<Mat, 3> su2_structure(double scale = 2.0) {
    std::array<Mat, 3> c{Mat::Zero(), Mat::Zero(), Mat::Zero()};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) c[k](i, j) = scale * levi_civita(i, j, k);
    return c;
  }

  static std::array<Mat, 3> abelian_structure() { return {Mat::Zero(), Mat::Zero(), Mat::Zero()}; }

  static double levi_civita(int i, int j, int k) {
    if (i == j || j == k || i == k) return 0.0;
    return ((j - i + 3) % 3 == 1) ? 1.0 : -1.0;
  }

  // geometry interface shared with the lattice backend -----------------------

  int sites() const { return 1; }
  double measure(int) const { return covolume_ * sqrt_det_; }
  const Mat& metric(int) const { return metric_; }
  const Mat& frame(int) const { return b_; }
  const Mat& frame_inv(int) const { return binv_; }
  const std::array<Mat, 3>& conn(int) const { return conn_; }
  double rm(int, int a, int b, int c, int d) const { return rm_[idx(a, b, c, d)]; }
  const Mat& ric(int) const { return ric_; }
  double scal(int) const { return scal_; }

  template <class T>
  Field<T> frame_d(const Field<T>& f, int) const {
    Field<T> out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      if constexpr (std::is_arithmetic_v<T>)
        out[i] = T(0);
      else
        out[i] = T(0.0 * f[i]);
    }
    return out;
  }

  // deformations --------------------------------------------------------------

  // coordinate (algebra-basis) symmetric tensor to frame components
  Mat to_frame(const Mat& h_coord) const { return symmetrize(Mat(b_.transpose() * h_coord * b_)); }
  Mat from_frame(const Mat& h_frame) const { return symmetrize(Mat(binv_.transpose() * h_frame * binv_)); }

  LieGroupGeometry deformed(const Mat& h_coord, double t) const {
    return LieGroupGeometry(c_, Mat(metric_ + t * h_coord), covolume_);
  }

  // accessors ------------------------------------------------------------------

  const std::array<Mat, 3>& structure() const { return c_; }
  const Mat& metric_matrix() const { return metric_; }
  double covolume() const { return covolume_; }
  double cfr(int a, int b, int c) const { return cfr_[static_cast<std::size_t>((a * 3 + b) * 3 + c)]; }
  double conn_coeff(int k, int a, int b) const { return conn_[static_cast<std::size_t>(k)](a, b); }

  double jacobi_defect() const {
    double worst = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l) {
            double s = 0.0;
            for (int m = 0; m < 3; ++m)
              s += c_[static_cast<std::size_t>(m)](i, j) * c_[static_cast<std::size_t>(l)](m, k) +
                   c_[static_cast<std::size_t>(m)](j, k) * c_[static_cast<std::size_t>(l)](m, i) +
                   c_[static_cast<std::size_t>(m)](k, i) * c_[static_cast<std::size_t>(l)](m, j);
            worst = std::max(worst, std::abs(s));
          }
    return worst;
  }

  static int idx(int a, int b, int c, int d) { return ((a * 3 + b) * 3 + c) * 3 + d; }

 private:
  void validate() const {
    for (int k = 0; k < 3; ++k) {
      if ((c_[static_cast<std::size_t>(k)] + c_[static_cast<std::size_t>(k)].transpose()).cwiseAbs().maxCoeff() >
          1e-12)
        throw std::invalid_argument("LieGroupGeometry: structure constants not antisymmetric");
    }
    if (jacobi_defect() > 1e-12) throw std::invalid_argument("LieGroupGeometry: Jacobi identity fails");
    for (int j = 0; j < 3; ++j) {
      double tr = 0.0;
      for (int i = 0; i < 3; ++i) tr += c_[static_cast<std::size_t>(i)](i, j);
      if (std::abs(tr) > 1e-12) throw std::invalid_argument("LieGroupGeometry: group is not unimodular");
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(metric_);
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw std::invalid_argument("LieGroupGeometry: metric is not positive definite");
    if (!(covolume_ > 0.0)) throw std::invalid_argument("LieGroupGeometry: covolume must be positive");
  }

  void assemble() {
    sqrt_det_ = std::sqrt(metric_.determinant());
    b_ = spd_inv_sqrt(metric_);
    binv_ = spd_sqrt(metric_);

    // frame structure constants: e_a = sum_i b_{ia} E_i
    cfr_.assign(27, 0.0);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int cc = 0; cc < 3; ++cc) {
          double s = 0.0;
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
              for (int k = 0; k < 3; ++k)
                s += b_(i, a) * b_(j, b) * c_[static_cast<std::size_t>(k)](i, j) * binv_(cc, k);
          cfr_[static_cast<std::size_t>((a * 3 + b) * 3 + cc)] = s;
        }

    // Koszul formula in the orthonormal frame
    for (int k = 0; k < 3; ++k) conn_[static_cast<std::size_t>(k)].setZero();
    for (int k = 0; k < 3; ++k)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          conn_[static_cast<std::size_t>(k)](i, j) = 0.5 * (cfr(k, i, j) - cfr(i, j, k) + cfr(j, k, i));

    rm_.assign(81, 0.0);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int cc = 0; cc < 3; ++cc)
          for (int d = 0; d < 3; ++d) {
            double s = 0.0;
            for (int e = 0; e < 3; ++e)
              s += conn_coeff(b, cc, e) * conn_coeff(a, e, d) - conn_coeff(a, cc, e) * conn_coeff(b, e, d) -
                   cfr(a, b, e) * conn_coeff(e, cc, d);
            rm_[static_cast<std::size_t>(idx(a, b, cc, d))] = -s;
          }

    ric_.setZero();
    for (int j = 0; j < 3; ++j)
      for (int l = 0; l < 3; ++l) {
        double s = 0.0;
        for (int i = 0; i < 3; ++i) s += rm_[static_cast<std::size_t>(idx(i, j, i, l))];
        ric_(j, l) = s;
      }
    scal_ = ric_.trace();
  }

  std::array<Mat, 3> c_;
  Mat metric_;
  double covolume_ = 1.0;

  Mat b_ = Mat::Identity();
  Mat binv_ = Mat::Identity();
  double sqrt_det_ = 1.0;
  std::vector<double> cfr_;
  std::array<Mat, 3> conn_{Mat::Zero(), Mat::Zero(), Mat::Zero()};
  std::vector<double> rm_;
  Mat ric_ = Mat::Zero();
  double scal_ = 0.0;
};

} // namespace derlab

#endif
