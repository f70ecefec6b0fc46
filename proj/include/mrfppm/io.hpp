#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrfppm/graph.hpp"
#include "mrfppm/model_selection.hpp"
#include "mrfppm/partition.hpp"
#include "mrfppm/sampler.hpp"
#include "mrfppm/summary.hpp"

namespace mrfppm {

/// Assignment file: `location_id,cluster` rows after a header; `#` comments allowed.
/// Rows are matched to graph labels when a graph is given, else taken in file order.
struct LabeledAssignment {
  std::vector<std::string> labels;
  Partition partition;
};

LabeledAssignment read_assignment_csv(std::istream& in);
LabeledAssignment load_assignment_csv(const std::filesystem::path& path);
/// Reorders a labeled assignment onto the graph's location order.
Partition assignment_for_graph(const LabeledAssignment& a, const SpatialGraph& graph);
void write_assignment_csv(std::ostream& out, const Partition& p, const std::vector<std::string>& labels);

nlohmann::json sample_to_json(const ChainSample& sample);
ChainSample sample_from_json(const nlohmann::json& j);
void write_chain_jsonl(std::ostream& out, const ChainOutput& chain);
std::vector<ChainSample> read_chain_jsonl(std::istream& in);

nlohmann::json summary_to_json(const DahlEstimate& dahl, const ParamReport& report, double stability);
nlohmann::json selection_to_json(const SelectionResult& result);

}  // namespace mrfppm
