#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace mrfppm {

class SpatialGraph;

/// Observations for one location: response y (n), covariates x (n × p), times t (n).
struct LocationSeries {
  Eigen::VectorXd y;
  Eigen::MatrixXd x;
  Eigen::VectorXd t;

  Eigen::Index n() const { return y.size(); }
};

/// Spatial panel: one LocationSeries per location, all with the same covariate count.
///
/// Locations whose time vectors are identical share a `grid_id`, which lets the
/// likelihood factor one correlation matrix per grid instead of per location.
class PanelData {
 public:
  PanelData() = default;
  /// Validates (n_i ≥ 1, shared p, strictly increasing times, finite values).
  PanelData(std::vector<LocationSeries> locations, std::vector<std::string> labels = {});

  std::size_t size() const { return locations_.size(); }
  Eigen::Index num_covariates() const { return p_; }
  const LocationSeries& operator[](std::size_t i) const { return locations_[i]; }
  const std::vector<LocationSeries>& locations() const { return locations_; }
  const std::vector<std::string>& labels() const { return labels_; }
  int grid_id(std::size_t i) const { return grid_ids_[i]; }
  std::size_t num_grids() const { return num_grids_; }
  std::size_t total_observations() const;

  /// Copy with every location's times mapped affinely onto [-1, 1]
  /// (a single time point maps to 0).
  PanelData rescaled_time() const;

  /// Copy reordered so location i carries graph.labels()[i]. Throws
  /// ValidationError when the label sets differ.
  PanelData aligned_to(const SpatialGraph& graph) const;

 private:
  std::vector<LocationSeries> locations_;
  std::vector<std::string> labels_;
  std::vector<int> grid_ids_;
  std::size_t num_grids_ = 0;
  Eigen::Index p_ = 0;
};

/// Reads the panel CSV `location_id,time,y,x1,...,xp`. Rows may come in any
/// order; rows are grouped by location (first-appearance order) and sorted by
/// time. Duplicate times within a location are a ValidationError.
PanelData read_panel_csv(std::istream& in);
PanelData load_panel_csv(const std::filesystem::path& path);
void write_panel_csv(std::ostream& out, const PanelData& data);

}  // namespace mrfppm
