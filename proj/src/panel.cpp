#include "mrfppm/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "mrfppm/errors.hpp"
#include "mrfppm/graph.hpp"

namespace mrfppm {

namespace {

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m) { return m.allFinite(); }

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

PanelData::PanelData(std::vector<LocationSeries> locations, std::vector<std::string> labels)
    : locations_(std::move(locations)), labels_(std::move(labels)) {
  if (locations_.empty()) throw ValidationError("panel: no locations");
  if (labels_.empty()) {
    for (std::size_t i = 0; i < locations_.size(); ++i) labels_.push_back(std::to_string(i));
  } else if (labels_.size() != locations_.size()) {
    throw ValidationError("panel: label count does not match location count");
  }
  p_ = locations_.front().x.cols();
  if (p_ < 1) throw ValidationError("panel: need at least one covariate column");
  for (std::size_t i = 0; i < locations_.size(); ++i) {
    const auto& s = locations_[i];
    const std::string where = "panel: location " + labels_[i] + ": ";
    if (s.n() < 1) throw ValidationError(where + "no observations");
    if (s.x.rows() != s.n() || s.t.size() != s.n()) throw ValidationError(where + "row counts disagree");
    if (s.x.cols() != p_) throw ValidationError(where + "covariate count differs from other locations");
    if (!all_finite(s.y) || !all_finite(s.x) || !all_finite(s.t)) throw ValidationError(where + "non-finite value");
    for (Eigen::Index k = 1; k < s.n(); ++k) {
      if (!(s.t[k] > s.t[k - 1])) throw ValidationError(where + "times not strictly increasing");
    }
  }
  // Identical time vectors share a grid id (first-appearance numbering).
  grid_ids_.assign(locations_.size(), -1);
  std::vector<std::size_t> representatives;
  for (std::size_t i = 0; i < locations_.size(); ++i) {
    for (std::size_t g = 0; g < representatives.size(); ++g) {
      const auto& ref = locations_[representatives[g]].t;
      if (ref.size() == locations_[i].t.size() && ref == locations_[i].t) {
        grid_ids_[i] = static_cast<int>(g);
        break;
      }
    }
    if (grid_ids_[i] < 0) {
      grid_ids_[i] = static_cast<int>(representatives.size());
      representatives.push_back(i);
    }
  }
  num_grids_ = representatives.size();
}

std::size_t PanelData::total_observations() const {
  return std::accumulate(locations_.begin(), locations_.end(), std::size_t{0},
                         [](std::size_t acc, const LocationSeries& s) { return acc + static_cast<std::size_t>(s.n()); });
}

PanelData PanelData::rescaled_time() const {
  auto locs = locations_;
  for (auto& s : locs) {
    if (s.n() == 1) {
      s.t.setZero();
      continue;
    }
    const double lo = s.t[0];
    const double hi = s.t[s.n() - 1];
    for (Eigen::Index k = 0; k < s.n(); ++k) s.t[k] = -1.0 + 2.0 * (s.t[k] - lo) / (hi - lo);
  }
  return PanelData(std::move(locs), labels_);
}

PanelData PanelData::aligned_to(const SpatialGraph& graph) const {
  if (graph.size() != locations_.size()) {
    throw ValidationError("panel has " + std::to_string(locations_.size()) + " locations but graph has " +
                          std::to_string(graph.size()));
  }
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < labels_.size(); ++i) index.emplace(labels_[i], i);
  std::vector<LocationSeries> locs;
  locs.reserve(locations_.size());
  for (const auto& label : graph.labels()) {
    const auto it = index.find(label);
    if (it == index.end()) throw ValidationError("graph location '" + label + "' has no rows in the panel");
    locs.push_back(locations_[it->second]);
  }
  return PanelData(std::move(locs), graph.labels());
}

PanelData read_panel_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string field;
    while (std::getline(ss, field, ',')) {
      const auto a = field.find_first_not_of(" \t\r");
      const auto b = field.find_last_not_of(" \t\r");
      out.push_back(a == std::string::npos ? std::string() : field.substr(a, b - a + 1));
    }
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };

  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t\r")] == '#') continue;
    header = split(line);
    break;
  }
  if (header.size() < 4 || header[0] != "location_id" || header[1] != "time" || header[2] != "y") {
    throw ParseError("panel header must be 'location_id,time,y,x1,...,xp'", line_no);
  }
  const std::size_t p = header.size() - 3;

  struct Row {
    double t, y;
    std::vector<double> x;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Row>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto fields = split(line);
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()),
                       line_no);
    }
    if (fields[0].empty()) throw ParseError("empty location_id", line_no);
    std::vector<double> values(fields.size() - 1);
    for (std::size_t k = 1; k < fields.size(); ++k) {
      const auto& f = fields[k];
      char* end = nullptr;
      values[k - 1] = std::strtod(f.c_str(), &end);
      if (f.empty() || end != f.c_str() + f.size()) throw ParseError("not a number: '" + f + "'", line_no);
      if (!std::isfinite(values[k - 1])) throw ValidationError("line " + std::to_string(line_no) + ": non-finite value");
    }
    auto [it, inserted] = rows.try_emplace(fields[0]);
    if (inserted) order.push_back(fields[0]);
    it->second.push_back(Row{values[0], values[1], std::vector<double>(values.begin() + 2, values.end())});
  }
  if (order.empty()) throw ParseError("panel has no data rows", line_no);

  std::vector<LocationSeries> locs;
  locs.reserve(order.size());
  for (const auto& id : order) {
    auto& r = rows[id];
    std::stable_sort(r.begin(), r.end(), [](const Row& a, const Row& b) { return a.t < b.t; });
    for (std::size_t k = 1; k < r.size(); ++k) {
      if (r[k].t == r[k - 1].t) throw ValidationError("panel: duplicate time in location " + id);
    }
    LocationSeries s;
    const auto n = static_cast<Eigen::Index>(r.size());
    s.y.resize(n);
    s.t.resize(n);
    s.x.resize(n, static_cast<Eigen::Index>(p));
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto& row = r[static_cast<std::size_t>(k)];
      s.t[k] = row.t;
      s.y[k] = row.y;
      for (std::size_t j = 0; j < p; ++j) s.x(k, static_cast<Eigen::Index>(j)) = row.x[j];
    }
    locs.push_back(std::move(s));
  }
  return PanelData(std::move(locs), order);
}

PanelData load_panel_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open panel file: " + path.string());
  return read_panel_csv(in);
}

void write_panel_csv(std::ostream& out, const PanelData& data) {
  out << "location_id,time,y";
  for (Eigen::Index j = 0; j < data.num_covariates(); ++j) out << ",x" << (j + 1);
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data[i];
    for (Eigen::Index k = 0; k < s.n(); ++k) {
      out << data.labels()[i] << ',' << format_double(s.t[k]) << ',' << format_double(s.y[k]);
      for (Eigen::Index j = 0; j < s.x.cols(); ++j) out << ',' << format_double(s.x(k, j));
      out << '\n';
    }
  }
}

}  // namespace mrfppm
