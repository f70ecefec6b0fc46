#include "mrfppm/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "mrfppm/errors.hpp"

namespace mrfppm {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

LabeledAssignment read_assignment_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<std::string> labels;
  std::vector<int> raw;
  std::unordered_set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    if (!header_seen) {
      if (s != "location_id,cluster") {
        throw ParseError("expected header 'location_id,cluster', got '" + s + "'", line_no);
      }
      header_seen = true;
      continue;
    }
    const auto comma = s.find(',');
    if (comma == std::string::npos || s.find(',', comma + 1) != std::string::npos) {
      throw ParseError("expected 2 fields", line_no);
    }
    std::string label = trim(std::string_view(s).substr(0, comma));
    const std::string id_text = trim(std::string_view(s).substr(comma + 1));
    int id = 0;
    const auto res = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
    if (res.ec != std::errc() || res.ptr != id_text.data() + id_text.size()) {
      throw ParseError("cluster id '" + id_text + "' is not an integer", line_no);
    }
    if (!seen.insert(label).second) throw ParseError("duplicate location '" + label + "'", line_no);
    labels.push_back(std::move(label));
    raw.push_back(id);
  }
  if (!header_seen) throw ParseError("missing header", line_no);
  if (raw.empty()) throw ValidationError("assignment file has no rows");
  return {std::move(labels), Partition(raw)};
}

LabeledAssignment load_assignment_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open assignment file: " + path.string());
  return read_assignment_csv(in);
}

Partition assignment_for_graph(const LabeledAssignment& a, const SpatialGraph& graph) {
  if (a.labels.size() != graph.size()) {
    throw ValidationError("assignment covers " + std::to_string(a.labels.size()) + " locations, graph has " +
                          std::to_string(graph.size()));
  }
  std::vector<int> raw(graph.size(), -1);
  for (std::size_t k = 0; k < a.labels.size(); ++k) {
    const int idx = graph.index_of(a.labels[k]);
    if (idx < 0) throw ValidationError("assignment location '" + a.labels[k] + "' is not in the graph");
    raw[static_cast<std::size_t>(idx)] = a.partition.cluster_of(static_cast<int>(k));
  }
  return Partition(raw);
}

void write_assignment_csv(std::ostream& out, const Partition& p, const std::vector<std::string>& labels) {
  out << "location_id,cluster\n";
  for (std::size_t i = 0; i < p.size(); ++i) {
    out << (i < labels.size() ? labels[i] : std::to_string(i)) << ',' << p.cluster_of(static_cast<int>(i)) + 1
        << '\n';
  }
}

nlohmann::json sample_to_json(const ChainSample& sample) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& theta : sample.params) {
    params.push_back({{"beta", std::vector<double>(theta.beta.data(), theta.beta.data() + theta.beta.size())},
                      {"sigma2", theta.sigma2},
                      {"alpha", theta.alpha},
                      {"ell", theta.ell}});
  }
  return {{"iteration", sample.iteration},
          {"assignment", sample.partition.assignment()},
          {"log_post", sample.log_post},
          {"params", std::move(params)}};
}

ChainSample sample_from_json(const nlohmann::json& j) {
  try {
    ChainSample s;
    s.iteration = j.at("iteration").get<std::size_t>();
    s.partition = Partition(j.at("assignment").get<std::vector<int>>());
    s.log_post = j.at("log_post").is_null() ? 0.0 : j.at("log_post").get<double>();
    for (const auto& pj : j.at("params")) {
      ClusterParams theta;
      const auto beta = pj.at("beta").get<std::vector<double>>();
      theta.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
      theta.sigma2 = pj.at("sigma2").get<double>();
      theta.alpha = pj.at("alpha").get<double>();
      theta.ell = pj.at("ell").get<double>();
      s.params.push_back(std::move(theta));
    }
    if (s.params.size() != s.partition.num_clusters()) {
      throw ValidationError("chain sample: parameter count does not match cluster count");
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("chain sample: ") + e.what());
  }
}

void write_chain_jsonl(std::ostream& out, const ChainOutput& chain) {
  for (const auto& s : chain.samples) out << sample_to_json(s).dump() << '\n';
}

std::vector<ChainSample> read_chain_jsonl(std::istream& in) {
  std::vector<ChainSample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(e.what(), line_no);
    }
    out.push_back(sample_from_json(j));
  }
  return out;
}

nlohmann::json summary_to_json(const DahlEstimate& dahl, const ParamReport& report, double stability) {
  nlohmann::json clusters = nlohmann::json::array();
  for (const auto& row : report.rows) {
    const auto& th = row.params;
    clusters.push_back({{"id", row.id},
                        {"size", row.members.size()},
                        {"members", row.members},
                        {"beta", std::vector<double>(th.beta.data(), th.beta.data() + th.beta.size())},
                        {"sigma2", th.sigma2},
                        {"ell", th.ell},
                        {"alpha", th.alpha}});
  }
  return {{"assignment", dahl.partition.assignment()},
          {"num_clusters", dahl.partition.num_clusters()},
          {"clusters", std::move(clusters)},
          {"dahl_loss", dahl.loss},
          {"dahl_index", dahl.index},
          {"stability", stability}};
}

nlohmann::json selection_to_json(const SelectionResult& result) {
  return {{"lambda_grid", result.lambda_grid},
          {"log_marginal", result.log_marginal},
          {"selected", result.selected}};
}

}  // namespace mrfppm
