#ifndef DERLAB_METRIC_IO_HPP
#define DERLAB_METRIC_IO_HPP

#include "derlab/lattice.hpp"

#include <json.hpp>

namespace derlab {

// Raw metric sample exchange format: <stem>.json header plus <stem>.bin with
// the upper-triangle components per grid point as little-endian doubles,
// sites in row-major order.

template <int D>
void export_metric_samples(const LatticeGeometry<D>& geo, const std::string& stem) {
  nlohmann::ordered_json header;
  header["schema"] = "der-lab/metric/1";
  header["dims"] = std::vector<int>(geo.grid().n.begin(), geo.grid().n.end());
  header["order"] = "row-major";
  header["layout"] = "upper-triangle";
  header["stencil_order"] = geo.stencil_order();
  header["components_per_point"] = D * (D + 1) / 2;

  std::ofstream jh(stem + ".json");
  if (!jh) throw std::runtime_error("export_metric_samples: cannot write " + stem + ".json");
  jh << header.dump(2) << "\n";

  std::ofstream bin(stem + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("export_metric_samples: cannot write " + stem + ".bin");
  for (int s = 0; s < geo.sites(); ++s)
    for (int i = 0; i < D; ++i)
      for (int j = i; j < D; ++j) {
        double v = geo.metric(s)(i, j);
        bin.write(reinterpret_cast<const char*>(&v), sizeof(double));
      }
}

template <int D>
LatticeGeometry<D> import_metric_samples(const std::string& stem, int order_override = 0) {
  std::ifstream jh(stem + ".json");
  if (!jh) throw std::runtime_error("import_metric_samples: cannot read " + stem + ".json");
  nlohmann::json header = nlohmann::json::parse(jh);
  auto dims = header.at("dims").get<std::vector<int>>();
  if (static_cast<int>(dims.size()) != D) throw std::runtime_error("import_metric_samples: dimension mismatch");
  if (header.at("layout").get<std::string>() != "upper-triangle")
    throw std::runtime_error("import_metric_samples: unsupported layout");
  int order = header.value("stencil_order", 4);
  if (order_override > 0) order = order_override;

  std::array<int, D> n{};
  for (int a = 0; a < D; ++a) n[static_cast<std::size_t>(a)] = dims[static_cast<std::size_t>(a)];
  LatticeGrid<D> grid(n);

  std::ifstream bin(stem + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("import_metric_samples: cannot read " + stem + ".bin");
  Field<typename LatticeGeometry<D>::Mat> samples(static_cast<std::size_t>(grid.size));
  for (std::int64_t s = 0; s < grid.size; ++s) {
    typename LatticeGeometry<D>::Mat m;
    for (int i = 0; i < D; ++i)
      for (int j = i; j < D; ++j) {
        double v = 0.0;
        bin.read(reinterpret_cast<char*>(&v), sizeof(double));
        m(i, j) = v;
        m(j, i) = v;
      }
    if (!bin) throw std::runtime_error("import_metric_samples: binary payload truncated");
    samples[static_cast<std::size_t>(s)] = m;
  }
  return LatticeGeometry<D>(grid, std::move(samples), order);
}

} // namespace derlab

#endif
