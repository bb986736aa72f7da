#ifndef DERLAB_LATTICE_HPP
#define DERLAB_LATTICE_HPP

#include "derlab/core.hpp"

#include <fstream>

namespace derlab {

// componentwise arithmetic for per-site arrays of matrices (connection fields)
template <class M, std::size_t N>
std::array<M, N> operator+(const std::array<M, N>& a, const std::array<M, N>& b) {
  std::array<M, N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = a[i] + b[i];
  return out;
}

template <class M, std::size_t N>
std::array<M, N> operator-(const std::array<M, N>& a, const std::array<M, N>& b) {
  std::array<M, N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = a[i] - b[i];
  return out;
}

template <class M, std::size_t N>
std::array<M, N> operator*(double c, const std::array<M, N>& a) {
  std::array<M, N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = c * a[i];
  return out;
}

// Periodic grid bookkeeping on the unit torus [0,1)^D.
template <int D>
struct LatticeGrid {
  std::array<int, D> n{};
  std::array<std::int64_t, D> stride{};
  std::int64_t size = 0;

  LatticeGrid() = default;
  explicit LatticeGrid(const std::array<int, D>& dims) : n(dims) {
    size = 1;
    for (int a = D - 1; a >= 0; --a) {
      stride[static_cast<std::size_t>(a)] = size;
      size *= n[static_cast<std::size_t>(a)];
    }
  }

  std::int64_t index(const std::array<int, D>& c) const {
    std::int64_t s = 0;
    for (int a = 0; a < D; ++a) s += c[static_cast<std::size_t>(a)] * stride[static_cast<std::size_t>(a)];
    return s;
  }

  std::array<int, D> coords(std::int64_t s) const {
    std::array<int, D> c{};
    for (int a = 0; a < D; ++a) {
      c[static_cast<std::size_t>(a)] = static_cast<int>(s / stride[static_cast<std::size_t>(a)]);
      s %= stride[static_cast<std::size_t>(a)];
    }
    return c;
  }

  std::int64_t shifted(std::int64_t s, int axis, int delta) const {
    auto c = coords(s);
    int na = n[static_cast<std::size_t>(axis)];
    c[static_cast<std::size_t>(axis)] = ((c[static_cast<std::size_t>(axis)] + delta) % na + na) % na;
    return index(c);
  }

  double spacing(int axis) const { return 1.0 / n[static_cast<std::size_t>(axis)]; }

  std::array<double, D> point(std::int64_t s) const {
    auto c = coords(s);
    std::array<double, D> x{};
    for (int a = 0; a < D; ++a) x[static_cast<std::size_t>(a)] = c[static_cast<std::size_t>(a)] * spacing(a);
    return x;
  }
};

// Finite-difference Riemannian geometry of a smooth periodic metric on the
// flat torus T^D. Derived tensors live in the orthonormal frame produced by
// the symmetric principal inverse square root of the metric at each point;
// that choice keeps the frame smooth and is the identification under which
// spinor components are held fixed when the metric is deformed.
template <int D>
class LatticeGeometry {
 public:
  static constexpr int Dim = D;
  using Mat = Eigen::Matrix<double, D, D>;
  using Vec = Eigen::Matrix<double, D, 1>;
  using Conn = std::array<Mat, D>;

  LatticeGeometry(const LatticeGrid<D>& grid, Field<Mat> samples, int stencil_order = 4)
      : grid_(grid), g_(std::move(samples)), order_(stencil_order) {
    if (order_ != 2 && order_ != 4) throw std::invalid_argument("LatticeGeometry: stencil order must be 2 or 4");
    for (int a = 0; a < D; ++a)
      if (grid_.n[static_cast<std::size_t>(a)] < 8) throw std::invalid_argument("LatticeGeometry: resolution below 8");
    if (static_cast<std::int64_t>(g_.size()) != grid_.size)
      throw std::invalid_argument("LatticeGeometry: sample count does not match grid");
    validate_spd();
    assemble();
  }

  // geometry interface ---------------------------------------------------------

  int sites() const { return static_cast<int>(grid_.size); }
  double measure(int s) const { return meas_[static_cast<std::size_t>(s)]; }
  const Mat& metric(int s) const { return g_[static_cast<std::size_t>(s)]; }
  const Mat& frame(int s) const { return b_[static_cast<std::size_t>(s)]; }
  const Mat& frame_inv(int s) const { return binv_[static_cast<std::size_t>(s)]; }
  const Conn& conn(int s) const { return conn_[static_cast<std::size_t>(s)]; }
  double rm(int s, int a, int b, int c, int d) const {
    return rm_[static_cast<std::size_t>(s) * (D * D * D * D) + static_cast<std::size_t>(((a * D + b) * D + c) * D + d)];
  }
  const Mat& ric(int s) const { return ric_[static_cast<std::size_t>(s)]; }
  double scal(int s) const { return scal_[static_cast<std::size_t>(s)]; }

  const LatticeGrid<D>& grid() const { return grid_; }
  int stencil_order() const { return order_; }
  double cell_volume() const { return cell_; }
  const Field<Mat>& samples() const { return g_; }
  const Field<double>& scal_field() const { return scal_; }

  // centered periodic finite difference along a coordinate axis
  template <class T>
  Field<T> axis_d(const Field<T>& f, int axis) const {
    Field<T> out(f.size());
    const double h = grid_.spacing(axis);
    const std::int64_t m = grid_.size;
    if (order_ == 2) {
      const double c1 = 1.0 / (2.0 * h);
      parallel_for(m, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t s = lo; s < hi; ++s)
          out[static_cast<std::size_t>(s)] =
              c1 * (f[static_cast<std::size_t>(grid_.shifted(s, axis, 1))] -
                    f[static_cast<std::size_t>(grid_.shifted(s, axis, -1))]);
      });
    } else {
      const double c1 = 8.0 / (12.0 * h), c2 = 1.0 / (12.0 * h);
      parallel_for(m, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t s = lo; s < hi; ++s)
          out[static_cast<std::size_t>(s)] =
              c1 * (f[static_cast<std::size_t>(grid_.shifted(s, axis, 1))] -
                    f[static_cast<std::size_t>(grid_.shifted(s, axis, -1))]) -
              c2 * (f[static_cast<std::size_t>(grid_.shifted(s, axis, 2))] -
                    f[static_cast<std::size_t>(grid_.shifted(s, axis, -2))]);
      });
    }
    return out;
  }

  // derivative along the frame vector e_k = sum_i b_{ik} d_i
  template <class T>
  Field<T> frame_d(const Field<T>& f, int k) const {
    std::array<Field<T>, D> df;
    for (int i = 0; i < D; ++i) df[static_cast<std::size_t>(i)] = axis_d(f, i);
    Field<T> out(f.size());
    for (std::size_t s = 0; s < f.size(); ++s) {
      T acc = T(b_[s](0, k) * df[0][s]);
      for (int i = 1; i < D; ++i) acc = T(acc + b_[s](i, k) * df[static_cast<std::size_t>(i)][s]);
      out[s] = acc;
    }
    return out;
  }

  LatticeGeometry deformed(const Field<Mat>& h_coord, double t) const {
    Field<Mat> s(g_.size());
    for (std::size_t i = 0; i < g_.size(); ++i) s[i] = g_[i] + t * h_coord[i];
    return LatticeGeometry(grid_, std::move(s), order_);
  }

  Field<Mat> to_frame(const Field<Mat>& h_coord) const {
    Field<Mat> out(h_coord.size());
    for (std::size_t s = 0; s < h_coord.size(); ++s)
      out[s] = symmetrize(Mat(b_[s].transpose() * h_coord[s] * b_[s]));
    return out;
  }

  const Field<Mat>& frame_field() const { return b_; }
  const Field<Mat>& frame_inv_field() const { return binv_; }
  const Field<Conn>& conn_field() const { return conn_; }

  double worst_frame_defect() const {
    double worst = 0.0;
    for (std::size_t s = 0; s < g_.size(); ++s) {
      Mat q = b_[s].transpose() * g_[s] * b_[s] - Mat::Identity();
      worst = std::max(worst, q.cwiseAbs().maxCoeff());
    }
    return worst;
  }

 private:
  void validate_spd() {
    double worst = 1e300;
    std::int64_t worst_site = -1;
    for (std::int64_t s = 0; s < grid_.size; ++s) {
      Eigen::SelfAdjointEigenSolver<Mat> es(g_[static_cast<std::size_t>(s)]);
      double mn = es.eigenvalues().minCoeff();
      if (mn < worst) {
        worst = mn;
        worst_site = s;
      }
    }
    if (worst <= 0.0) {
      auto c = grid_.coords(worst_site);
      std::string where;
      for (int a = 0; a < D; ++a) where += (a ? "," : "") + std::to_string(c[static_cast<std::size_t>(a)]);
      throw std::invalid_argument("LatticeGeometry: sample not positive definite at grid point (" + where +
                                  "), min eigenvalue " + std::to_string(worst));
    }
  }

  void assemble() {
    const std::int64_t m = grid_.size;
    cell_ = 1.0;
    for (int a = 0; a < D; ++a) cell_ *= grid_.spacing(a);

    b_.resize(static_cast<std::size_t>(m));
    binv_.resize(static_cast<std::size_t>(m));
    meas_.resize(static_cast<std::size_t>(m));
    parallel_for(m, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t s = lo; s < hi; ++s) {
        const Mat& gs = g_[static_cast<std::size_t>(s)];
        Mat r = spd_sqrt(gs);
        binv_[static_cast<std::size_t>(s)] = r;
        b_[static_cast<std::size_t>(s)] = symmetrize(Mat(r.inverse()));
        meas_[static_cast<std::size_t>(s)] = cell_ * std::sqrt(gs.determinant());
      }
    });

    // frame structure functions c_{abc} = <[e_a, e_b], e_c>
    std::array<Field<Mat>, D> db;
    for (int i = 0; i < D; ++i) db[static_cast<std::size_t>(i)] = axis_d(b_, i);
    cfr_.assign(static_cast<std::size_t>(m) * D * D * D, 0.0);
    parallel_for(m, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t s = lo; s < hi; ++s) {
        const Mat& bs = b_[static_cast<std::size_t>(s)];
        const Mat& bi = binv_[static_cast<std::size_t>(s)];
        for (int a = 0; a < D; ++a)
          for (int bb = a + 1; bb < D; ++bb) {
            Vec w = Vec::Zero();
            for (int j = 0; j < D; ++j) {
              double acc = 0.0;
              for (int i = 0; i < D; ++i)
                acc += bs(i, a) * db[static_cast<std::size_t>(i)][static_cast<std::size_t>(s)](j, bb) -
                       bs(i, bb) * db[static_cast<std::size_t>(i)][static_cast<std::size_t>(s)](j, a);
              w(j) = acc;
            }
            for (int cc = 0; cc < D; ++cc) {
              double val = 0.0;
              for (int j = 0; j < D; ++j) val += bi(cc, j) * w(j);
              cfr_at(s, a, bb, cc) = val;
              cfr_at(s, bb, a, cc) = -val;
            }
          }
      }
    });

    // Koszul in the orthonormal frame
    conn_.resize(static_cast<std::size_t>(m));
    parallel_for(m, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t s = lo; s < hi; ++s)
        for (int k = 0; k < D; ++k) {
          Mat gm;
          for (int i = 0; i < D; ++i)
            for (int j = 0; j < D; ++j)
              gm(i, j) = 0.5 * (cfr_at(s, k, i, j) - cfr_at(s, i, j, k) + cfr_at(s, j, k, i));
          conn_[static_cast<std::size_t>(s)][static_cast<std::size_t>(k)] = gm;
        }
    });

    // curvature: Rm_{abcd} = -( e_a(G_bcd) - e_b(G_acd) + G_bce G_aed - G_ace G_bed - c_abe G_ecd )
    std::array<Field<Conn>, D> dconn; // axis derivatives of the connection field
    for (int i = 0; i < D; ++i) dconn[static_cast<std::size_t>(i)] = axis_d(conn_, i);
    rm_.assign(static_cast<std::size_t>(m) * D * D * D * D, 0.0);
    ric_.resize(static_cast<std::size_t>(m));
    scal_.resize(static_cast<std::size_t>(m));
    parallel_for(m, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t s = lo; s < hi; ++s) {
        const Mat& bs = b_[static_cast<std::size_t>(s)];
        const Conn& cs = conn_[static_cast<std::size_t>(s)];
        auto framed = [&](int dir, int k, int cc, int dd) {
          double acc = 0.0;
          for (int i = 0; i < D; ++i)
            acc += bs(i, dir) * dconn[static_cast<std::size_t>(i)][static_cast<std::size_t>(s)][static_cast<std::size_t>(k)](cc, dd);
          return acc;
        };
        for (int a = 0; a < D; ++a)
          for (int bb = 0; bb < D; ++bb)
            for (int cc = 0; cc < D; ++cc)
              for (int dd = 0; dd < D; ++dd) {
                double v = framed(a, bb, cc, dd) - framed(bb, a, cc, dd);
                for (int e = 0; e < D; ++e)
                  v += cs[static_cast<std::size_t>(bb)](cc, e) * cs[static_cast<std::size_t>(a)](e, dd) -
                       cs[static_cast<std::size_t>(a)](cc, e) * cs[static_cast<std::size_t>(bb)](e, dd) -
                       cfr_at(s, a, bb, e) * cs[static_cast<std::size_t>(e)](cc, dd);
                rm_[static_cast<std::size_t>(s) * (D * D * D * D) +
                    static_cast<std::size_t>(((a * D + bb) * D + cc) * D + dd)] = -v;
              }
        Mat rc;
        for (int j = 0; j < D; ++j)
          for (int l = 0; l < D; ++l) {
            double acc = 0.0;
            for (int i = 0; i < D; ++i) acc += rm(static_cast<int>(s), i, j, i, l);
            rc(j, l) = acc;
          }
        ric_[static_cast<std::size_t>(s)] = rc;
        scal_[static_cast<std::size_t>(s)] = rc.trace();
      }
    });
  }

  double& cfr_at(std::int64_t s, int a, int b, int c) {
    return cfr_[static_cast<std::size_t>(s) * (D * D * D) + static_cast<std::size_t>((a * D + b) * D + c)];
  }
  double cfr_at(std::int64_t s, int a, int b, int c) const {
    return cfr_[static_cast<std::size_t>(s) * (D * D * D) + static_cast<std::size_t>((a * D + b) * D + c)];
  }

 public:
  double cfr(int s, int a, int b, int c) const { return cfr_at(s, a, b, c); }

 private:
  LatticeGrid<D> grid_;
  Field<Mat> g_;
  int order_ = 4;
  double cell_ = 1.0;

  Field<Mat> b_, binv_;
  Field<double> meas_;
  std::vector<double> cfr_;
  Field<Conn> conn_;
  std::vector<double> rm_;
  Field<Mat> ric_;
  Field<double> scal_;
};

// ---------------------------------------------------------------------------
// metric construction from Fourier data

struct FourierMode {
  int i = 0, j = 0;              // component (ignored for conformal modes)
  std::array<int, 4> k{};        // integer wave vector (first D entries used)
  double amplitude = 0.0;
  double phase = 0.0;
};

struct MetricSpec {
  enum class Kind { flat, conformal, perturbed };
  Kind kind = Kind::flat;
  std::vector<FourierMode> modes;
};

template <int D>
Field<typename LatticeGeometry<D>::Mat> sample_metric(const MetricSpec& spec, const LatticeGrid<D>& grid) {
  using Mat = typename LatticeGeometry<D>::Mat;
  Field<Mat> out(static_cast<std::size_t>(grid.size));
  for (std::int64_t s = 0; s < grid.size; ++s) {
    auto x = grid.point(s);
    Mat g = Mat::Identity();
    if (spec.kind == MetricSpec::Kind::conformal) {
      double u = 0.0;
      for (const auto& m : spec.modes) {
        double arg = m.phase;
        for (int a = 0; a < D; ++a) arg += 2.0 * M_PI * m.k[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)];
        u += m.amplitude * std::cos(arg);
      }
      g *= std::exp(2.0 * u);
    } else if (spec.kind == MetricSpec::Kind::perturbed) {
      for (const auto& m : spec.modes) {
        double arg = m.phase;
        for (int a = 0; a < D; ++a) arg += 2.0 * M_PI * m.k[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)];
        double v = m.amplitude * std::cos(arg);
        g(m.i, m.j) += v;
        if (m.i != m.j) g(m.j, m.i) += v;
      }
    }
    out[static_cast<std::size_t>(s)] = g;
  }
  return out;
}

template <int D>
LatticeGeometry<D> build_lattice_metric(const MetricSpec& spec, const std::array<int, D>& dims, int order = 4) {
  LatticeGrid<D> grid(dims);
  return LatticeGeometry<D>(grid, sample_metric<D>(spec, grid), order);
}

// conformal scalar field u at the grid points (for oracles)
template <int D>
Field<double> sample_conformal_factor(const MetricSpec& spec, const LatticeGrid<D>& grid) {
  Field<double> u(static_cast<std::size_t>(grid.size), 0.0);
  for (std::int64_t s = 0; s < grid.size; ++s) {
    auto x = grid.point(s);
    for (const auto& m : spec.modes) {
      double arg = m.phase;
      for (int a = 0; a < D; ++a) arg += 2.0 * M_PI * m.k[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)];
      u[static_cast<std::size_t>(s)] += m.amplitude * std::cos(arg);
    }
  }
  return u;
}

} // namespace derlab

#endif
