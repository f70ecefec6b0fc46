#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>
#include <random>
#include <utility>
#include <vector>

#include "mrfppm/graph.hpp"
#include "mrfppm/panel.hpp"
#include "mrfppm/rng.hpp"

namespace mrfppm::test {

// Erdős–Rényi graph with edge probability p.
inline SpatialGraph random_graph(std::size_t n, double p, Rng& rng) {
  std::vector<std::pair<int, int>> edges;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (draw_uniform(rng) < p) edges.emplace_back(static_cast<int>(a), static_cast<int>(b));
    }
  }
  return SpatialGraph(n, edges);
}

inline SpatialGraph path_graph(std::size_t n) {
  std::vector<std::pair<int, int>> edges;
  for (std::size_t a = 0; a + 1 < n; ++a) edges.emplace_back(static_cast<int>(a), static_cast<int>(a + 1));
  return SpatialGraph(n, edges);
}

// Panel of n locations with n_times equally spaced times and an intercept plus
// one uniform covariate; responses i.i.d. normal around `level[i]`.
inline PanelData small_panel(std::size_t n, Eigen::Index n_times, Rng& rng, std::vector<double> level = {}) {
  std::vector<LocationSeries> locs;
  for (std::size_t i = 0; i < n; ++i) {
    LocationSeries s;
    s.t = Eigen::VectorXd::LinSpaced(n_times, -1.0, 1.0);
    s.x.resize(n_times, 2);
    s.y.resize(n_times);
    const double mu = i < level.size() ? level[i] : 0.0;
    for (Eigen::Index j = 0; j < n_times; ++j) {
      s.x(j, 0) = 1.0;
      s.x(j, 1) = -1.0 + 2.0 * draw_uniform(rng);
      s.y(j) = mu + 0.5 * s.x(j, 1) + draw_normal(rng);
    }
    locs.push_back(std::move(s));
  }
  return PanelData(std::move(locs));
}

// Fresh empty directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("mrfppm_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace mrfppm::test
