#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

#include "mrfppm/model_selection.hpp"
#include "mrfppm/partition_prior.hpp"
#include "mrfppm/sampler.hpp"

namespace mrfppm::cli {

/// Fully resolved settings for one invocation. Every field has a key in the
/// INI form (`section.key`); the manifest is this struct written back out.
struct RunConfig {
  std::string command;

  // [data]
  std::string panel;
  std::string adjacency;
  bool rescale_time = false;

  // [prior]
  std::string eppf = "mfm";  // mfm | dp
  double gamma = 1.0;
  KPrior k_prior;
  double dp_concentration = 1.0;
  double lambda = 0.0;

  // [hyper]; empty mu0/lambda0 mean zeros / 1e-6 I
  std::vector<double> mu0;
  std::vector<double> lambda0;
  double a0 = 0.1, b0 = 1.0, a1 = 2.0, b1 = 1.0, a2 = 2.0, b2 = 1.0;

  McmcConfig mcmc;
  SelectionConfig selection;
  std::size_t workers = 1;
  bool fit_selected = true;

  // [simulate]
  int dgp = 8;
  std::string grid;  // "COLSxROWS"; overrides dgp when set
  std::size_t grid_blocks = 2;
  double epsilon = 0.01;
  std::size_t n_times = 20;

  // [eval]
  std::string truth;
  std::string estimate;
  std::string chain;

  // [run]
  std::uint64_t seed = 1;
};

/// Reads an INI tree into a config. Unknown keys and unparsable values throw
/// ValidationError naming the key.
RunConfig resolve_config(const boost::property_tree::ptree& tree);
boost::property_tree::ptree config_tree(const RunConfig& cfg);

/// Loads an INI file; relative paths inside it are taken relative to the file.
boost::property_tree::ptree load_config_tree(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const RunConfig& cfg);

/// Entry point shared by the executable and tests. Returns the process exit
/// status: 0 success, 1 invalid input or config, 2 numerical failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mrfppm::cli
