#include "hypersis/hypersis.h"

#include <cstdlib>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hypersis/errors.hpp"
#include "hypersis/experiment.hpp"
#include "hypersis/generators.hpp"
#include "hypersis/hypergraph.hpp"
#include "hypersis/master.hpp"
#include "hypersis/meanfield.hpp"
#include "hypersis/simulate.hpp"

struct hs_hypergraph {
  hypersis::Hypergraph value;
};

struct hs_graph {
  hypersis::WeightedGraph value;
};

struct hs_table {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  std::string warning;
};

namespace {

thread_local std::string last_error;

hs_status fail(hs_status s, const char* what) {
  last_error = what;
  return s;
}

template <class F>
hs_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return HS_OK;
  } catch (const hypersis::CapacityError& e) {
    return fail(HS_ERR_CAPACITY, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(HS_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::out_of_range& e) {
    return fail(HS_ERR_INVALID_ARGUMENT, e.what());
  } catch (const hypersis::NumericalError& e) {
    return fail(HS_ERR_NUMERICAL, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(HS_ERR_IO, e.what());
  } catch (const std::runtime_error& e) {
    return fail(HS_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(HS_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(HS_ERR_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* name) {
  if (p == nullptr) throw hypersis::ValidationError(std::string(name) + " is null");
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

hypersis::EpidemicParams to_params(const hs_params& p) { return {p.tau, p.gamma, p.c}; }

hypersis::SimConfig to_config(const hs_sim_config& c) {
  hypersis::SimConfig cfg;
  cfg.params = to_params(c.params);
  cfg.dt = c.dt;
  cfg.t_max = c.t_max;
  cfg.sampling_interval = c.sampling_interval;
  cfg.runs = static_cast<std::size_t>(c.runs);
  cfg.seed = c.seed;
  cfg.keep_runs = c.keep_runs != 0;
  switch (c.initial_rule) {
    case HS_INITIAL_SHARED_FRACTION:
      cfg.initial.rule = hypersis::InitialRule::shared_fraction;
      break;
    case HS_INITIAL_PER_RUN_FRACTION:
      cfg.initial.rule = hypersis::InitialRule::per_run_fraction;
      break;
    case HS_INITIAL_EXPLICIT:
      cfg.initial.rule = hypersis::InitialRule::explicit_state;
      if (c.initial_state == nullptr) throw hypersis::ValidationError("explicit initial rule needs initial_state");
      cfg.initial.state = hypersis::EpidemicState::from_string(c.initial_state);
      break;
    default:
      throw hypersis::ValidationError("unknown initial rule");
  }
  cfg.initial.fraction = c.initial_fraction;
  cfg.validate();
  return cfg;
}

void check_initial(const hypersis::SimConfig& cfg, std::size_t n) {
  if (cfg.initial.rule == hypersis::InitialRule::explicit_state && cfg.initial.state.size() != n)
    throw hypersis::ValidationError("initial state has " + std::to_string(cfg.initial.state.size()) +
                                    " nodes, hypergraph has " + std::to_string(n));
}

hs_table* simulation_table(const hypersis::TimeSeries& ts) {
  auto t = std::make_unique<hs_table>();
  t->names = {"t", "mean_I", "stderr_I"};
  t->columns = {ts.times, ts.mean_prevalence, ts.std_err};
  for (std::size_t r = 0; r < ts.per_run.size(); ++r) {
    t->names.push_back("run_" + std::to_string(r));
    t->columns.push_back(ts.per_run[r]);
  }
  if (ts.coarse_step())
    t->warning = "coarse time step: max per-step event probability " +
                 hypersis::format_number(ts.max_event_probability) + " exceeds " +
                 hypersis::format_number(hypersis::kCoarseStepProbability) + "; reduce dt";
  return t.release();
}

hypersis::MeanFieldModel to_model(const hs_meanfield_model& m, const hs_params& p) {
  switch (m.kind) {
    case HS_MEANFIELD_BI_UNIFORM:
      return hypersis::MeanFieldModel::bi_uniform(m.num_nodes, m.a, m.b, to_params(p));
    case HS_MEANFIELD_REGULAR:
      return hypersis::MeanFieldModel::regular(m.num_nodes, m.a, m.b, to_params(p));
  }
  throw hypersis::ValidationError("unknown mean-field model");
}

std::string table_csv(const hs_table& t) {
  std::string out;
  for (std::size_t c = 0; c < t.names.size(); ++c) {
    if (c) out += ',';
    out += t.names[c];
  }
  out += '\n';
  const std::size_t rows = t.columns.empty() ? 0 : t.columns.front().size();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      if (c) out += ',';
      out += hypersis::format_number(t.columns[c][r]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace

extern "C" {

const char* hs_version(void) { return "1.0.0"; }

const char* hs_last_error(void) { return last_error.c_str(); }

const char* hs_status_name(hs_status status) {
  switch (status) {
    case HS_OK:
      return "ok";
    case HS_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case HS_ERR_CAPACITY:
      return "capacity exceeded";
    case HS_ERR_IO:
      return "i/o error";
    case HS_ERR_NUMERICAL:
      return "numerical failure";
    case HS_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

void hs_string_free(char* s) { std::free(s); }

hs_status hs_hypergraph_parse(const char* text, hs_hypergraph** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = new hs_hypergraph{hypersis::parse_hypergraph(text)};
  });
}

hs_status hs_hypergraph_load(const char* path, hs_hypergraph** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new hs_hypergraph{hypersis::load_hypergraph(path)};
  });
}

hs_status hs_hypergraph_save(const hs_hypergraph* h, const char* path) {
  return guarded([&] {
    require(h, "hypergraph");
    require(path, "path");
    hypersis::save_hypergraph(h->value, path);
  });
}

hs_status hs_hypergraph_to_text(const hs_hypergraph* h, char** out) {
  return guarded([&] {
    require(h, "hypergraph");
    require(out, "out");
    *out = duplicate(hypersis::format_hypergraph(h->value));
  });
}

hs_status hs_hypergraph_example(hs_hypergraph** out) {
  return guarded([&] {
    require(out, "out");
    *out = new hs_hypergraph{hypersis::example_hypergraph()};
  });
}

hs_status hs_hypergraph_generate(const char* generator_json, hs_hypergraph** out) {
  return guarded([&] {
    require(generator_json, "generator_json");
    require(out, "out");
    hypersis::json j;
    try {
      j = hypersis::json::parse(generator_json);
    } catch (const hypersis::json::exception& e) {
      throw hypersis::ValidationError(std::string("generator json: ") + e.what());
    }
    *out = new hs_hypergraph{hypersis::GeneratorSpec::from_json(j).generate()};
  });
}

size_t hs_hypergraph_num_nodes(const hs_hypergraph* h) { return h ? h->value.num_nodes() : 0; }
size_t hs_hypergraph_num_edges(const hs_hypergraph* h) { return h ? h->value.num_edges() : 0; }
size_t hs_hypergraph_max_edge_size(const hs_hypergraph* h) { return h ? h->value.max_edge_size() : 0; }
void hs_hypergraph_free(hs_hypergraph* h) { delete h; }

hs_status hs_graph_clique_expand(const hs_hypergraph* h, hs_graph** out) {
  return guarded([&] {
    require(h, "hypergraph");
    require(out, "out");
    *out = new hs_graph{hypersis::clique_expand(h->value)};
  });
}

size_t hs_graph_num_nodes(const hs_graph* g) { return g ? g->value.num_nodes() : 0; }
size_t hs_graph_num_edges(const hs_graph* g) { return g ? g->value.num_edges() : 0; }
void hs_graph_free(hs_graph* g) { delete g; }

size_t hs_table_rows(const hs_table* t) { return t && !t->columns.empty() ? t->columns.front().size() : 0; }
size_t hs_table_cols(const hs_table* t) { return t ? t->columns.size() : 0; }

const char* hs_table_column_name(const hs_table* t, size_t col) {
  return t && col < t->names.size() ? t->names[col].c_str() : nullptr;
}

double hs_table_value(const hs_table* t, size_t row, size_t col) {
  if (t == nullptr || col >= t->columns.size() || row >= t->columns[col].size()) return 0.0;
  return t->columns[col][row];
}

const char* hs_table_warning(const hs_table* t) { return t && !t->warning.empty() ? t->warning.c_str() : nullptr; }

hs_status hs_table_to_csv(const hs_table* t, char** out) {
  return guarded([&] {
    require(t, "table");
    require(out, "out");
    *out = duplicate(table_csv(*t));
  });
}

hs_status hs_table_save_csv(const hs_table* t, const char* path) {
  return guarded([&] {
    require(t, "table");
    require(path, "path");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error(std::string("cannot write ") + path);
    f << table_csv(*t);
    if (!f) throw std::runtime_error(std::string("write failed for ") + path);
  });
}

void hs_table_free(hs_table* t) { delete t; }

void hs_sim_config_init(hs_sim_config* cfg) {
  if (cfg == nullptr) return;
  const hypersis::SimConfig d;
  *cfg = hs_sim_config{};
  cfg->params = {0.0, 1.0, 1.0};
  cfg->dt = d.dt;
  cfg->t_max = d.t_max;
  cfg->sampling_interval = d.sampling_interval;
  cfg->runs = d.runs;
  cfg->seed = d.seed;
  cfg->keep_runs = 0;
  cfg->initial_rule = HS_INITIAL_SHARED_FRACTION;
  cfg->initial_fraction = d.initial.fraction;
  cfg->initial_state = nullptr;
}

hs_status hs_simulate(const hs_hypergraph* h, const hs_sim_config* cfg, hs_table** out) {
  return guarded([&] {
    require(h, "hypergraph");
    require(cfg, "config");
    require(out, "out");
    const auto c = to_config(*cfg);
    check_initial(c, h->value.num_nodes());
    *out = simulation_table(hypersis::run(h->value, c));
  });
}

hs_status hs_graph_simulate(const hs_graph* g, const hs_sim_config* cfg, hs_graph_mode mode, hs_table** out) {
  return guarded([&] {
    require(g, "graph");
    require(cfg, "config");
    require(out, "out");
    if (mode != HS_GRAPH_LINEAR && mode != HS_GRAPH_DISCOUNTED) throw hypersis::ValidationError("unknown graph mode");
    const auto c = to_config(*cfg);
    check_initial(c, g->value.num_nodes());
    const auto m = mode == HS_GRAPH_LINEAR ? hypersis::GraphMode::linear : hypersis::GraphMode::discounted;
    *out = simulation_table(hypersis::graph_run(g->value, c, m));
  });
}

hs_status hs_master(const hs_hypergraph* h, const hs_sim_config* cfg, size_t max_nodes, hs_table** out) {
  return guarded([&] {
    require(h, "hypergraph");
    require(cfg, "config");
    require(out, "out");
    const auto c = to_config(*cfg);
    if (c.initial.rule == hypersis::InitialRule::per_run_fraction)
      throw hypersis::ValidationError("master equations need a deterministic initial state");
    check_initial(c, h->value.num_nodes());
    hypersis::MasterOptions opts;
    if (max_nodes != 0) opts.max_nodes = max_nodes;
    const auto ms = hypersis::build_master(h->value, c.params, opts);
    const auto grid = hypersis::sample_times(c);
    const auto x0 = hypersis::point_mass(ms.index(), hypersis::initial_state(c, h->value.num_nodes(), 0));
    const auto ex = hypersis::master_expected(ms, x0, grid);
    auto t = std::make_unique<hs_table>();
    t->names = {"t", "I_expected", "S_expected", "SI_expected"};
    t->columns = {ex.times, ex.infected, ex.susceptible, ex.si};
    *out = t.release();
  });
}

hs_status hs_master_blocks(const hs_hypergraph* h, hs_params params, size_t max_nodes, char** out) {
  return guarded([&] {
    require(h, "hypergraph");
    require(out, "out");
    hypersis::MasterOptions opts;
    if (max_nodes != 0) opts.max_nodes = max_nodes;
    const auto ms = hypersis::build_master(h->value, to_params(params), opts);
    *out = duplicate(hypersis::format_master_blocks(ms));
  });
}

hs_status hs_meanfield(const hs_meanfield_model* model, hs_params params, double initial_infected, double t_max,
                       double sampling_interval, hs_table** out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    if (!(t_max >= 0.0)) throw hypersis::ValidationError("t_max must be non-negative");
    if (!(sampling_interval > 0.0)) throw hypersis::ValidationError("sampling interval must be positive");
    const auto m = to_model(*model, params);
    std::vector<double> grid;
    const auto n = static_cast<std::size_t>(std::floor(t_max / sampling_interval + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) grid.push_back(static_cast<double>(i) * sampling_interval);
    const auto ts = hypersis::integrate(m, initial_infected, grid);
    auto t = std::make_unique<hs_table>();
    t->names = {"t", "I_mf"};
    t->columns = {ts.times, ts.mean_prevalence};
    *out = t.release();
  });
}

hs_status hs_meanfield_fixed_points(const hs_meanfield_model* model, hs_params params, hs_table** out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    const auto points = hypersis::fixed_points(to_model(*model, params));
    auto t = std::make_unique<hs_table>();
    t->names = {"I", "stability"};
    t->columns.resize(2);
    for (const auto& p : points) {
      t->columns[0].push_back(p.infected);
      t->columns[1].push_back(static_cast<double>(static_cast<int>(p.stability)));
    }
    *out = t.release();
  });
}

const char* hs_stability_name(int stability) {
  if (stability < 0 || stability > 2) return "unknown";
  return hypersis::to_string(static_cast<hypersis::Stability>(stability));
}

hs_status hs_preset_names(char** out) {
  return guarded([&] {
    require(out, "out");
    std::string s;
    for (const auto& n : hypersis::preset_names()) s += n + "\n";
    *out = duplicate(s);
  });
}

hs_status hs_preset_config(const char* name, char** json_out) {
  return guarded([&] {
    require(name, "name");
    require(json_out, "out");
    *json_out = duplicate(hypersis::preset(name).to_json().dump(2));
  });
}

hs_status hs_experiment_run(const char* spec_json, const char* out_dir, char** manifest_path) {
  return guarded([&] {
    require(spec_json, "spec_json");
    require(out_dir, "out_dir");
    hypersis::json j;
    try {
      j = hypersis::json::parse(spec_json);
    } catch (const hypersis::json::exception& e) {
      throw hypersis::ValidationError(std::string("experiment json: ") + e.what());
    }
    const auto result = hypersis::run_experiment(hypersis::ExperimentSpec::from_json(j), out_dir);
    if (manifest_path != nullptr) *manifest_path = duplicate(result.manifest.string());
  });
}

hs_status hs_compare_csv(const char* path_a, const char* path_b, double window, char** report_json) {
  return guarded([&] {
    require(path_a, "path_a");
    require(path_b, "path_b");
    require(report_json, "out");
    auto slurp = [](const char* path) {
      std::ifstream f(path, std::ios::binary);
      if (!f) throw std::runtime_error(std::string("cannot read ") + path);
      return std::string(std::istreambuf_iterator<char>(f), {});
    };
    const auto a = hypersis::read_series_csv(slurp(path_a));
    const auto b = hypersis::read_series_csv(slurp(path_b));
    const auto r = hypersis::compare(a, b, window);
    hypersis::json j;
    j["points"] = r.times.size();
    j["max_abs_diff"] = r.max_abs_diff;
    j["steady_a"] = r.steady_a;
    j["steady_b"] = r.steady_b;
    j["steady_diff"] = r.steady_diff;
    j["transient_mean_diff"] = r.transient_mean_diff;
    j["max_abs_z"] = r.max_abs_z;
    *report_json = duplicate(j.dump(2));
  });
}

}  // extern "C"
