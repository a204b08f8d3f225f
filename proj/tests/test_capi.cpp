#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <string>

#include "hypersis/hypersis.h"

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  hs_string_free(s);
  return out;
}

hs_sim_config sim_config() {
  hs_sim_config cfg;
  hs_sim_config_init(&cfg);
  cfg.params = {1.0, 1.0, 2.0};
  cfg.dt = 0.01;
  cfg.t_max = 1.0;
  cfg.sampling_interval = 0.25;
  cfg.runs = 50;
  cfg.seed = 3;
  cfg.initial_rule = HS_INITIAL_EXPLICIT;
  cfg.initial_state = "SISI";
  return cfg;
}

}  // namespace

TEST_CASE("hypergraph handles") {
  hs_hypergraph* h = nullptr;
  REQUIRE(hs_hypergraph_parse("4 3\n0 1 3\n1 2\n2 3\n", &h) == HS_OK);
  CHECK(hs_hypergraph_num_nodes(h) == 4);
  CHECK(hs_hypergraph_num_edges(h) == 3);
  CHECK(hs_hypergraph_max_edge_size(h) == 3);
  char* text = nullptr;
  REQUIRE(hs_hypergraph_to_text(h, &text) == HS_OK);
  CHECK(take(text) == "4 3\n0 1 3\n1 2\n2 3\n");

  hs_graph* g = nullptr;
  REQUIRE(hs_graph_clique_expand(h, &g) == HS_OK);
  CHECK(hs_graph_num_nodes(g) == 4);
  CHECK(hs_graph_num_edges(g) == 5);
  hs_graph_free(g);
  hs_hypergraph_free(h);

  hs_hypergraph* bad = nullptr;
  CHECK(hs_hypergraph_parse("2 1\n0 5\n", &bad) == HS_ERR_INVALID_ARGUMENT);
  CHECK(bad == nullptr);
  CHECK(std::strlen(hs_last_error()) > 0);
  CHECK(hs_hypergraph_parse(nullptr, &bad) == HS_ERR_INVALID_ARGUMENT);
  CHECK(hs_hypergraph_load("/nonexistent/file", &bad) == HS_ERR_IO);
  CHECK(hs_hypergraph_generate("{not json", &bad) == HS_ERR_INVALID_ARGUMENT);
  REQUIRE(hs_hypergraph_generate(R"({"model": "bi-uniform", "N": 20, "H": 4, "W": 5, "seed": 1})", &bad) == HS_OK);
  CHECK(hs_hypergraph_num_edges(bad) == 9);
  hs_hypergraph_free(bad);
  CHECK(std::string(hs_status_name(HS_ERR_CAPACITY)) == "capacity exceeded");
}

TEST_CASE("simulation tables") {
  hs_hypergraph* h = nullptr;
  REQUIRE(hs_hypergraph_example(&h) == HS_OK);
  auto cfg = sim_config();
  hs_table* a = nullptr;
  hs_table* b = nullptr;
  REQUIRE(hs_simulate(h, &cfg, &a) == HS_OK);
  REQUIRE(hs_simulate(h, &cfg, &b) == HS_OK);
  CHECK(hs_table_rows(a) == 5);
  CHECK(hs_table_cols(a) == 3);
  CHECK(std::string(hs_table_column_name(a, 1)) == "mean_I");
  CHECK(hs_table_value(a, 0, 1) == 2.0);
  char* ca = nullptr;
  char* cb = nullptr;
  hs_table_to_csv(a, &ca);
  hs_table_to_csv(b, &cb);
  const auto sa = take(ca);
  CHECK(sa == take(cb));
  CHECK(sa.rfind("t,mean_I,stderr_I\n0,2,0\n", 0) == 0);
  CHECK(hs_table_warning(a) == nullptr);
  hs_table_free(a);
  hs_table_free(b);

  cfg.keep_runs = 1;
  cfg.runs = 3;
  REQUIRE(hs_simulate(h, &cfg, &a) == HS_OK);
  CHECK(hs_table_cols(a) == 6);
  CHECK(std::string(hs_table_column_name(a, 5)) == "run_2");
  hs_table_free(a);

  cfg.keep_runs = 0;
  cfg.dt = 0.25;
  REQUIRE(hs_simulate(h, &cfg, &a) == HS_OK);
  CHECK(hs_table_warning(a) != nullptr);
  hs_table_free(a);

  cfg.initial_state = "SIS";
  CHECK(hs_simulate(h, &cfg, &a) == HS_ERR_INVALID_ARGUMENT);
  cfg = sim_config();
  cfg.sampling_interval = 0.013;
  CHECK(hs_simulate(h, &cfg, &a) == HS_ERR_INVALID_ARGUMENT);
  hs_hypergraph_free(h);
}

TEST_CASE("master and mean field through the C interface") {
  hs_hypergraph* h = nullptr;
  REQUIRE(hs_hypergraph_example(&h) == HS_OK);
  auto cfg = sim_config();
  hs_table* t = nullptr;
  REQUIRE(hs_master(h, &cfg, 0, &t) == HS_OK);
  CHECK(std::string(hs_table_column_name(t, 3)) == "SI_expected");
  CHECK(hs_table_value(t, 0, 1) == 2.0);
  CHECK(hs_table_value(t, 0, 3) == 4.0);
  for (std::size_t r = 0; r < hs_table_rows(t); ++r)
    CHECK(hs_table_value(t, r, 1) + hs_table_value(t, r, 2) == doctest::Approx(4.0));
  hs_table_free(t);
  CHECK(hs_master(h, &cfg, 3, &t) == HS_ERR_CAPACITY);
  char* blocks = nullptr;
  REQUIRE(hs_master_blocks(h, cfg.params, 0, &blocks) == HS_OK);
  CHECK(take(blocks).rfind("# hypersis master blocks v1\n", 0) == 0);
  hs_hypergraph_free(h);

  const hs_meanfield_model m{HS_MEANFIELD_REGULAR, 500, 16, 20};
  const hs_params p{0.03, 1.0, 10.0};
  REQUIRE(hs_meanfield(&m, p, 50, 5, 0.5, &t) == HS_OK);
  CHECK(hs_table_rows(t) == 11);
  CHECK(std::string(hs_table_column_name(t, 1)) == "I_mf");
  CHECK(hs_table_warning(t) == nullptr);
  hs_table_free(t);
  REQUIRE(hs_meanfield_fixed_points(&m, p, &t) == HS_OK);
  REQUIRE(hs_table_rows(t) == 2);
  CHECK(hs_table_value(t, 1, 0) == doctest::Approx(2400.0 / 5.8));
  CHECK(std::string(hs_stability_name(static_cast<int>(hs_table_value(t, 1, 1)))) == "stable");
  hs_table_free(t);
  const hs_meanfield_model bad{HS_MEANFIELD_REGULAR, 500, 0, 20};
  CHECK(hs_meanfield(&bad, p, 50, 5, 0.5, &t) == HS_ERR_INVALID_ARGUMENT);
}

TEST_CASE("experiments through the C interface") {
  char* names = nullptr;
  REQUIRE(hs_preset_names(&names) == HS_OK);
  CHECK(take(names).find("fig_regular_meanfield\n") != std::string::npos);
  char* cfg = nullptr;
  REQUIRE(hs_preset_config("example_master", &cfg) == HS_OK);
  CHECK(take(cfg).find("\"master\"") != std::string::npos);
  CHECK(hs_preset_config("missing", &cfg) == HS_ERR_INVALID_ARGUMENT);

  const auto dir = std::filesystem::temp_directory_path() / "hypersis_capi_experiment";
  std::filesystem::remove_all(dir);
  const char* spec = R"({"name": "tiny", "generator": {"model": "example"},
    "variants": [{"label": "c1", "tau": 1, "c": 1}], "engines": ["sim", "master"],
    "sim": {"runs": 20, "t_max": 1, "initial": {"rule": "explicit", "state": "IIII"}}})";
  char* manifest = nullptr;
  REQUIRE(hs_experiment_run(spec, dir.c_str(), &manifest) == HS_OK);
  CHECK(std::filesystem::exists(take(manifest)));
  CHECK(std::filesystem::exists(dir / "c1__master.csv"));
  char* report = nullptr;
  REQUIRE(hs_compare_csv((dir / "c1__sim.csv").c_str(), (dir / "c1__master.csv").c_str(), 0.2, &report) == HS_OK);
  CHECK(take(report).find("max_abs_z") != std::string::npos);
  CHECK(hs_experiment_run(R"({"name": "x"})", dir.c_str(), &manifest) == HS_ERR_INVALID_ARGUMENT);
  std::filesystem::remove_all(dir);
}
