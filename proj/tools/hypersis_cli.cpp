// hypersis command-line front end. Talks to the library only through the C API.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "hypersis/hypersis.h"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct Failure {
  int code;
  std::string message;
};

int exit_code(hs_status s) {
  return s == HS_ERR_INVALID_ARGUMENT || s == HS_ERR_CAPACITY ? kExitValidation : kExitRuntime;
}

void check(hs_status s) {
  if (s != HS_OK) throw Failure{exit_code(s), hs_last_error()};
}

[[noreturn]] void invalid(const std::string& message) { throw Failure{kExitValidation, message}; }

template <class T, void (*Free)(T*)>
struct Owned {
  T* p = nullptr;
  Owned() = default;
  Owned(const Owned&) = delete;
  Owned& operator=(const Owned&) = delete;
  ~Owned() { Free(p); }
  T** out() { return &p; }
  T* get() const { return p; }
};

using Hypergraph = Owned<hs_hypergraph, hs_hypergraph_free>;
using Graph = Owned<hs_graph, hs_graph_free>;
using Table = Owned<hs_table, hs_table_free>;
using String = Owned<char, hs_string_free>;

void write_output(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Failure{kExitRuntime, "cannot write " + path};
  f << text;
  if (!f) throw Failure{kExitRuntime, "write failed for " + path};
}

void emit_table(const hs_table* t, const std::string& path) {
  if (const char* w = hs_table_warning(t)) std::cerr << "warning: " << w << "\n";
  String csv;
  check(hs_table_to_csv(t, csv.out()));
  write_output(csv.get(), path);
}

std::string join_path(const std::string& dir, const std::string& file) {
  if (file.empty() || dir.empty() || std::filesystem::path(file).is_absolute()) return file;
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / file).string();
}

// Options shared by the three trajectory engines.
struct EpidemicOptions {
  double tau = 0.0;
  double gamma = 1.0;
  double c = 1.0;
  double dt = 0.01;
  double t_max = 10.0;
  double interval = 0.1;
  std::uint64_t runs = 100;
  std::uint64_t seed = 1;
  double fraction = 0.1;
  bool per_run = false;
  std::string state;
  bool keep_runs = false;
};

void add_params(CLI::App* app, EpidemicOptions& o) {
  app->add_option("--tau", o.tau, "Per-edge infection rate")->required();
  app->add_option("--gamma", o.gamma, "Recovery rate")->capture_default_str();
  app->add_option("--c", o.c, "Threshold of f(x) = min(x, c)")->required();
  app->add_option("--t-max", o.t_max, "End time")->capture_default_str();
  app->add_option("--sampling-interval", o.interval, "Output spacing, a multiple of dt")->capture_default_str();
}

void add_initial(CLI::App* app, EpidemicOptions& o) {
  app->add_option("--initial-fraction", o.fraction, "Fraction infected at t = 0")->capture_default_str();
  app->add_option("--initial-state", o.state, "Explicit start, e.g. SISI (node 0 first)");
  app->add_option("--seed", o.seed, "Master seed")->capture_default_str();
}

void add_sim(CLI::App* app, EpidemicOptions& o) {
  add_params(app, o);
  add_initial(app, o);
  app->add_option("--dt", o.dt, "Time step")->capture_default_str();
  app->add_option("--runs", o.runs, "Ensemble size")->capture_default_str();
  app->add_flag("--per-run-initial", o.per_run, "Draw a fresh initial set for every run");
  app->add_flag("--keep-runs", o.keep_runs, "Append one column per run");
}

hs_sim_config to_config(const EpidemicOptions& o) {
  hs_sim_config cfg;
  hs_sim_config_init(&cfg);
  cfg.params = {o.tau, o.gamma, o.c};
  cfg.dt = o.dt;
  cfg.t_max = o.t_max;
  cfg.sampling_interval = o.interval;
  cfg.runs = o.runs;
  cfg.seed = o.seed;
  cfg.keep_runs = o.keep_runs ? 1 : 0;
  cfg.initial_fraction = o.fraction;
  if (!o.state.empty()) {
    cfg.initial_rule = HS_INITIAL_EXPLICIT;
    cfg.initial_state = o.state.c_str();
  } else {
    cfg.initial_rule = o.per_run ? HS_INITIAL_PER_RUN_FRACTION : HS_INITIAL_SHARED_FRACTION;
  }
  return cfg;
}

void load(const std::string& path, Hypergraph& h) {
  if (path == "example")
    check(hs_hypergraph_example(h.out()));
  else
    check(hs_hypergraph_load(path.c_str(), h.out()));
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Failure{kExitRuntime, "cannot read " + path};
  return std::string(std::istreambuf_iterator<char>(f), {});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SIS epidemics on hypergraphs: simulation, exact master equations, mean field"};
  app.set_version_flag("--version", hs_version());
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a TOML/INI file");
  std::string out_dir;
  app.add_option("--out-dir", out_dir, "Directory for output files");

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a hypergraph in the text format");
  std::string model = "bi-uniform", gen_out, sizes, degrees;
  std::size_t n = 0, hh = 0, ww = 0, m = 0, d = 0, e = 0;
  std::uint64_t gen_seed = 1;
  gen->add_option("--model", model, "bi-uniform | ba-cliques | config | example")
      ->check(CLI::IsMember({"bi-uniform", "ba-cliques", "config", "example"}))
      ->capture_default_str();
  gen->add_option("--N", n, "Number of nodes");
  gen->add_option("--H", hh, "Household size");
  gen->add_option("--W", ww, "Workplace size");
  gen->add_option("--m", m, "Edges added per node (BA)");
  gen->add_option("--d", d, "Node degree (regular config)");
  gen->add_option("--e", e, "Edge size (regular config)");
  gen->add_option("--sizes", sizes, "Edge sizes, e.g. 15*200,25*200");
  gen->add_option("--degrees", degrees, "Node degrees, e.g. 16*500");
  gen->add_option("--seed", gen_seed, "Generator seed")->capture_default_str();
  gen->add_option("-o,--out", gen_out, "Output file (stdout when omitted)");

  // simulate / graphsim
  EpidemicOptions sim_o, graph_o, master_o;
  std::string sim_h, sim_out, graph_h, graph_out, graph_mode = "linear";
  auto* sim = app.add_subcommand("simulate", "Ensemble simulation on a hypergraph");
  sim->add_option("--hypergraph", sim_h, "Hypergraph file, or 'example'")->required();
  sim->add_option("-o,--out", sim_out, "CSV output (stdout when omitted)");
  add_sim(sim, sim_o);

  auto* gsim = app.add_subcommand("graphsim", "Ensemble simulation on the clique expansion");
  gsim->add_option("--hypergraph", graph_h, "Hypergraph file, or 'example'")->required();
  gsim->add_option("-o,--out", graph_out, "CSV output (stdout when omitted)");
  gsim->add_option("--mode", graph_mode, "linear: rate tau*W_i; discounted: tau*f(W_i)")
      ->check(CLI::IsMember({"linear", "discounted"}))
      ->capture_default_str();
  add_sim(gsim, graph_o);

  // master
  std::string master_h, master_out, blocks_out;
  std::size_t max_nodes = 0;
  auto* master = app.add_subcommand("master", "Exact expected values from the master equations");
  master->add_option("--hypergraph", master_h, "Hypergraph file, or 'example'")->required();
  master->add_option("-o,--out", master_out, "CSV output (stdout when omitted)");
  master->add_option("--blocks", blocks_out, "Also write the sparse block dump here");
  master->add_option("--max-nodes", max_nodes, "Node cap (default 20)");
  add_params(master, master_o);
  add_initial(master, master_o);

  // meanfield
  std::string mf_variant = "regular", mf_out;
  double mf_n = 0, mf_h = 0, mf_w = 0, mf_d = 0, mf_e = 0, mf_i0 = -1;
  bool fixed = false;
  EpidemicOptions mf_o;
  auto* mf = app.add_subcommand("meanfield", "Closed mean-field ODE");
  mf->add_option("--variant", mf_variant, "bi-uniform | regular")
      ->check(CLI::IsMember({"bi-uniform", "regular"}))
      ->capture_default_str();
  mf->add_option("--N", mf_n, "Number of nodes")->required();
  mf->add_option("--H", mf_h, "Household size");
  mf->add_option("--W", mf_w, "Workplace size");
  mf->add_option("--d", mf_d, "Node degree");
  mf->add_option("--e", mf_e, "Edge size");
  mf->add_option("--I0", mf_i0, "Initial infected count (default 10% of N)");
  mf->add_flag("--fixed-points", fixed, "Print fixed points and their stability instead");
  mf->add_option("-o,--out", mf_out, "CSV output (stdout when omitted)");
  add_params(mf, mf_o);

  // experiment
  std::string preset, spec_file;
  std::optional<std::uint64_t> exp_seed;
  std::optional<std::uint64_t> exp_runs;
  bool list = false, print = false;
  auto* exp = app.add_subcommand("experiment", "Run a preset or JSON experiment spec");
  exp->add_option("--preset", preset, "Preset name (see --list)");
  exp->add_option("--spec", spec_file, "Experiment spec in JSON");
  exp->add_option("--seed", exp_seed, "Override the simulation seed");
  exp->add_option("--runs", exp_runs, "Override the ensemble size");
  exp->add_flag("--list", list, "List presets");
  exp->add_flag("--print-spec", print, "Print the resolved spec and exit");

  // compare
  std::string cmp_a, cmp_b;
  double window = 0.2;
  auto* cmp = app.add_subcommand("compare", "Compare two series CSV files");
  cmp->add_option("a", cmp_a, "First CSV")->required();
  cmp->add_option("b", cmp_b, "Second CSV")->required();
  cmp->add_option("--window", window, "Trailing fraction used for the steady state")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : kExitValidation;
  }

  try {
    if (*gen) {
      nlohmann::json j{{"model", model}, {"seed", gen_seed}};
      auto need = [&](const char* key, std::size_t v) {
        if (v == 0) invalid(std::string("generate --model ") + model + " needs --" + key);
        j[key] = v;
      };
      if (model == "bi-uniform") {
        need("N", n), need("H", hh), need("W", ww);
      } else if (model == "ba-cliques") {
        need("N", n), need("m", m);
      } else if (model == "config") {
        if (!sizes.empty() || !degrees.empty()) {
          if (sizes.empty() || degrees.empty()) invalid("generate --model config needs both --sizes and --degrees");
          j["sizes"] = sizes;
          j["degrees"] = degrees;
        } else {
          need("N", n), need("d", d), need("e", e);
        }
      }
      Hypergraph h;
      check(hs_hypergraph_generate(j.dump().c_str(), h.out()));
      String text;
      check(hs_hypergraph_to_text(h.get(), text.out()));
      write_output(text.get(), join_path(out_dir, gen_out));
    } else if (*sim) {
      Hypergraph h;
      load(sim_h, h);
      const auto cfg = to_config(sim_o);
      Table t;
      check(hs_simulate(h.get(), &cfg, t.out()));
      emit_table(t.get(), join_path(out_dir, sim_out));
    } else if (*gsim) {
      Hypergraph h;
      load(graph_h, h);
      Graph g;
      check(hs_graph_clique_expand(h.get(), g.out()));
      const auto cfg = to_config(graph_o);
      Table t;
      check(hs_graph_simulate(g.get(), &cfg, graph_mode == "linear" ? HS_GRAPH_LINEAR : HS_GRAPH_DISCOUNTED,
                              t.out()));
      emit_table(t.get(), join_path(out_dir, graph_out));
    } else if (*master) {
      Hypergraph h;
      load(master_h, h);
      auto cfg = to_config(master_o);
      cfg.dt = master_o.interval;
      Table t;
      check(hs_master(h.get(), &cfg, max_nodes, t.out()));
      emit_table(t.get(), join_path(out_dir, master_out));
      if (!blocks_out.empty()) {
        String blocks;
        check(hs_master_blocks(h.get(), cfg.params, max_nodes, blocks.out()));
        write_output(blocks.get(), join_path(out_dir, blocks_out));
      }
    } else if (*mf) {
      hs_meanfield_model mm{};
      mm.num_nodes = mf_n;
      if (mf_variant == "bi-uniform") {
        mm.kind = HS_MEANFIELD_BI_UNIFORM;
        mm.a = mf_h;
        mm.b = mf_w;
      } else {
        mm.kind = HS_MEANFIELD_REGULAR;
        mm.a = mf_d;
        mm.b = mf_e;
      }
      const hs_params p{mf_o.tau, mf_o.gamma, mf_o.c};
      Table t;
      if (fixed) {
        check(hs_meanfield_fixed_points(&mm, p, t.out()));
        std::ostringstream out;
        out << "I,stability\n";
        for (std::size_t r = 0; r < hs_table_rows(t.get()); ++r) {
          char buf[64];
          std::snprintf(buf, sizeof buf, "%.10g", hs_table_value(t.get(), r, 0));
          out << buf << ',' << hs_stability_name(static_cast<int>(hs_table_value(t.get(), r, 1))) << '\n';
        }
        write_output(out.str(), join_path(out_dir, mf_out));
      } else {
        const double i0 = mf_i0 < 0 ? 0.1 * mf_n : mf_i0;
        check(hs_meanfield(&mm, p, i0, mf_o.t_max, mf_o.interval, t.out()));
        emit_table(t.get(), join_path(out_dir, mf_out));
      }
    } else if (*exp) {
      if (list) {
        String names;
        check(hs_preset_names(names.out()));
        std::cout << names.get();
        return 0;
      }
      if (preset.empty() == spec_file.empty()) invalid("experiment needs exactly one of --preset or --spec");
      nlohmann::json spec;
      if (!preset.empty()) {
        String text;
        check(hs_preset_config(preset.c_str(), text.out()));
        spec = nlohmann::json::parse(text.get());
      } else {
        try {
          spec = nlohmann::json::parse(slurp(spec_file));
        } catch (const nlohmann::json::exception& e) {
          invalid(spec_file + ": " + e.what());
        }
      }
      if (exp_seed) spec["sim"]["seed"] = *exp_seed;
      if (exp_runs) spec["sim"]["runs"] = *exp_runs;
      if (print) {
        std::cout << spec.dump(2) << "\n";
        return 0;
      }
      const std::string dir = out_dir.empty() ? spec.value("name", std::string("experiment")) : out_dir;
      String manifest;
      check(hs_experiment_run(spec.dump().c_str(), dir.c_str(), manifest.out()));
      const auto written = nlohmann::json::parse(slurp(manifest.get()));
      for (const auto& o : written["outputs"])
        if (o.value("coarse_step_warning", false))
          std::cerr << "warning: coarse time step in " << o["file"].get<std::string>() << "; reduce dt\n";
      std::cout << manifest.get() << "\n";
    } else if (*cmp) {
      String report;
      check(hs_compare_csv(cmp_a.c_str(), cmp_b.c_str(), window, report.out()));
      std::cout << report.get() << "\n";
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
