#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hypersis/generators.hpp"
#include "hypersis/hypergraph.hpp"
#include "hypersis/meanfield.hpp"
#include "hypersis/simulate.hpp"

namespace hypersis {

using json = nlohmann::json;

/// Parses "3,4,5" or run-length terms such as "15*200,25*200".
std::vector<std::size_t> parse_sequence(std::string_view text);

/// Hypergraph source described by a JSON object:
///   {"model": "bi-uniform", "N": 500, "H": 5, "W": 10, "seed": 1}
///   {"model": "ba-cliques", "N": 500, "m": 4, "seed": 1}
///   {"model": "config", "N": 500, "d": 8, "e": 10, "seed": 1}
///   {"model": "config", "sizes": "15*200,25*200", "degrees": "16*500", "seed": 1}
///   {"model": "example"}            the 4-node, 3-edge hypergraph
///   {"model": "file", "path": "h.txt"}
struct GeneratorSpec {
  enum class Model { bi_uniform, ba_cliques, configuration, example, file };
  Model model = Model::example;
  std::uint64_t seed = 1;
  BiUniformSpec bi_uniform;
  BACliquesSpec ba_cliques;
  ConfigSpec configuration;
  std::filesystem::path path;

  static GeneratorSpec from_json(const json& j);
  json to_json() const;
  /// Node count when known without generating (every model except file).
  std::optional<std::size_t> num_nodes() const;
  Hypergraph generate() const;
  /// The closed mean-field model matching this hypergraph family, if any.
  std::optional<MeanFieldModel> mean_field(const EpidemicParams& p) const;
};

enum class Engine { sim, graph_sim, meanfield, master };
const char* to_string(Engine e);
Engine engine_from_string(std::string_view name);

struct ExperimentVariant {
  std::string label;
  EpidemicParams params;
  json generator_overrides = json::object();
};

struct ExperimentSpec {
  std::string name;
  json generator = json::object();
  std::vector<ExperimentVariant> variants;
  std::vector<Engine> engines;
  SimConfig sim;
  GraphMode graph_mode = GraphMode::linear;
  std::size_t master_max_nodes = 20;
  double steady_window = 0.2;

  void validate() const;
  GeneratorSpec generator_for(const ExperimentVariant& v) const;

  static ExperimentSpec from_json(const json& j);
  json to_json() const;
};

std::vector<std::string> preset_names();
ExperimentSpec preset(std::string_view name);

struct ComparisonReport {
  std::vector<double> times;
  std::vector<double> diff;  // a - b
  std::vector<double> z;     // NaN where neither side has a standard error
  double max_abs_diff = 0.0;
  double steady_a = 0.0;
  double steady_b = 0.0;
  double steady_diff = 0.0;          // steady_a - steady_b
  double transient_mean_diff = 0.0;  // mean of a - b before the steady window
  double max_abs_z = 0.0;
};

/// Pointwise comparison; b is linearly interpolated onto a's times when the
/// grids differ. Only the overlap of the two time ranges is compared.
ComparisonReport compare(const TimeSeries& a, const TimeSeries& b, double window = 0.2);

struct ExperimentOutput {
  std::string variant;
  Engine engine;
  std::filesystem::path file;
  TimeSeries series;
};

struct ExperimentResult {
  std::vector<ExperimentOutput> outputs;
  std::filesystem::path manifest;
};

/// Runs every (variant, engine) pair, writes one CSV each under out_dir and a
/// manifest.json recording the resolved spec, seeds and summary statistics.
ExperimentResult run_experiment(const ExperimentSpec& spec, const std::filesystem::path& out_dir);

// CSV helpers shared by the engines.
std::string format_number(double v);
/// "t,value,stderr" rows; stderr is 0 for deterministic series.
std::string series_csv(const TimeSeries& ts);
/// "t,mean_I,stderr_I[,run_k...]".
std::string simulation_csv(const TimeSeries& ts);
/// Reads a CSV whose first two columns are time and value; a third column is
/// taken as the standard error when its header mentions "err".
TimeSeries read_series_csv(std::string_view text);

std::uint64_t fnv1a(std::string_view data);

}  // namespace hypersis
