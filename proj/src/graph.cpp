#include "mrfppm/graph.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "mrfppm/errors.hpp"

namespace mrfppm {

SpatialGraph::SpatialGraph(std::size_t n, std::span<const std::pair<int, int>> pairs, std::vector<std::string> labels)
    : n_(n), labels_(std::move(labels)) {
  if (labels_.empty()) {
    labels_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) labels_.push_back(std::to_string(i));
  } else if (labels_.size() != n) {
    throw ValidationError("graph: " + std::to_string(labels_.size()) + " labels for " + std::to_string(n) +
                          " locations");
  }
  const auto bound = static_cast<long long>(n);
  edges_.reserve(pairs.size());
  for (auto [a, b] : pairs) {
    if (a < 0 || b < 0 || a >= bound || b >= bound) {
      throw ValidationError("graph: edge {" + std::to_string(a) + "," + std::to_string(b) + "} out of range [0," +
                            std::to_string(n) + ")");
    }
    if (a == b) throw ValidationError("graph: self-loop at location " + labels_[static_cast<std::size_t>(a)]);
    edges_.push_back(a < b ? Edge{a, b} : Edge{b, a});
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

  std::vector<std::size_t> degree(n, 0);
  for (const auto& e : edges_) {
    ++degree[static_cast<std::size_t>(e.a)];
    ++degree[static_cast<std::size_t>(e.b)];
  }
  offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] = offsets_[i] + degree[i];
  adjacency_.resize(offsets_[n]);
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (const auto& e : edges_) {
    adjacency_[fill[static_cast<std::size_t>(e.a)]++] = e.b;
    adjacency_[fill[static_cast<std::size_t>(e.b)]++] = e.a;
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]),
              adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]));
  }
  bitmap_.assign(n * n, false);
  for (const auto& e : edges_) {
    bitmap_[static_cast<std::size_t>(e.a) * n + static_cast<std::size_t>(e.b)] = true;
    bitmap_[static_cast<std::size_t>(e.b) * n + static_cast<std::size_t>(e.a)] = true;
  }
}

std::span<const int> SpatialGraph::neighbors(int i) const {
  const auto u = static_cast<std::size_t>(i);
  return {adjacency_.data() + offsets_[u], offsets_[u + 1] - offsets_[u]};
}

bool SpatialGraph::adjacent(int a, int b) const {
  return bitmap_[static_cast<std::size_t>(a) * n_ + static_cast<std::size_t>(b)];
}

int SpatialGraph::index_of(std::string_view label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  return it == labels_.end() ? -1 : static_cast<int>(it - labels_.begin());
}

std::vector<int> SpatialGraph::isolated() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < n_; ++i) {
    if (offsets_[i + 1] == offsets_[i]) out.push_back(static_cast<int>(i));
  }
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

SpatialGraph parse_adjacency(std::istream& in) {
  std::vector<std::string> labels;
  std::unordered_map<std::string, int> index;
  std::vector<std::pair<int, int>> pairs;
  bool fixed_vertices = false;
  bool seen_content = false;

  auto lookup = [&](const std::string& id, std::size_t line_no) -> int {
    if (auto it = index.find(id); it != index.end()) return it->second;
    if (fixed_vertices) {
      throw ValidationError("line " + std::to_string(line_no) + ": unknown location '" + id +
                            "' (not in the vertices list)");
    }
    const int k = static_cast<int>(labels.size());
    labels.push_back(id);
    index.emplace(id, k);
    return k;
  };

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.starts_with("vertices:")) {
      if (seen_content) throw ParseError("vertices line must precede all edges", line_no);
      std::stringstream list{std::string(line.substr(9))};
      std::string id;
      while (std::getline(list, id, ',')) {
        const auto t = std::string(trim(id));
        if (t.empty()) throw ParseError("empty identifier in vertices list", line_no);
        if (index.count(t)) throw ParseError("duplicate identifier '" + t + "' in vertices list", line_no);
        index.emplace(t, static_cast<int>(labels.size()));
        labels.push_back(t);
      }
      fixed_vertices = true;
      seen_content = true;
      continue;
    }
    seen_content = true;

    std::istringstream tokens{std::string(line)};
    std::string a, b, extra;
    if (!(tokens >> a >> b) || (tokens >> extra)) {
      throw ParseError("expected two location identifiers, got '" + std::string(line) + "'", line_no);
    }
    if (a == b) throw ValidationError("line " + std::to_string(line_no) + ": self-loop at location '" + a + "'");
    const int ia = lookup(a, line_no);
    const int ib = lookup(b, line_no);
    pairs.emplace_back(ia, ib);
  }

  const std::size_t n = labels.size();
  SpatialGraph g(n, pairs, std::move(labels));
  if (const auto iso = g.isolated(); !iso.empty()) {
    std::string msg = "isolated locations (no edges):";
    for (int i : iso) msg += " " + g.labels()[static_cast<std::size_t>(i)];
    warn(msg);
  }
  return g;
}

SpatialGraph load_adjacency(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open adjacency file: " + path.string());
  return parse_adjacency(in);
}

void write_adjacency(std::ostream& out, const SpatialGraph& g) {
  out << "vertices: ";
  for (std::size_t i = 0; i < g.size(); ++i) out << (i ? "," : "") << g.labels()[i];
  out << '\n';
  for (const auto& e : g.edges()) {
    out << g.labels()[static_cast<std::size_t>(e.a)] << ' ' << g.labels()[static_cast<std::size_t>(e.b)] << '\n';
  }
}

namespace {

std::vector<char> membership(const SpatialGraph& g, std::span<const int> cluster) {
  std::vector<char> in(g.size(), 0);
  for (int j : cluster) {
    if (j < 0 || static_cast<std::size_t>(j) >= g.size()) {
      throw ValidationError("cluster index " + std::to_string(j) + " out of range [0," + std::to_string(g.size()) +
                            ")");
    }
    in[static_cast<std::size_t>(j)] = 1;
  }
  return in;
}

}  // namespace

std::size_t within_cluster_edges(const SpatialGraph& g, std::span<const int> cluster) {
  const auto in = membership(g, cluster);
  std::size_t count = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!in[i]) continue;
    for (int j : g.neighbors(static_cast<int>(i))) {
      if (static_cast<std::size_t>(j) > i && in[static_cast<std::size_t>(j)]) ++count;
    }
  }
  return count;
}

std::size_t neighbors_in(const SpatialGraph& g, int i, std::span<const int> cluster) {
  if (i < 0 || static_cast<std::size_t>(i) >= g.size()) {
    throw ValidationError("location index " + std::to_string(i) + " out of range");
  }
  const auto in = membership(g, cluster);
  std::size_t count = 0;
  for (int j : g.neighbors(i)) count += in[static_cast<std::size_t>(j)] ? 1 : 0;
  return count;
}

}  // namespace mrfppm
