/* C interface to the hypersis library.
 *
 * Objects are opaque handles created by the library and released with the
 * matching *_free function. Every fallible call returns an hs_status; on
 * failure hs_last_error() describes the problem for the calling thread.
 * Strings returned through char** are owned by the caller (hs_string_free).
 */
#ifndef HYPERSIS_H
#define HYPERSIS_H

#include <stddef.h>
#include <stdint.h>

#if defined(HYPERSIS_BUILDING_LIBRARY)
#define HS_API __attribute__((visibility("default")))
#else
#define HS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hs_status {
  HS_OK = 0,
  HS_ERR_INVALID_ARGUMENT = 1, /* bad parameters, malformed input */
  HS_ERR_CAPACITY = 2,         /* problem too large, e.g. master with N above the cap */
  HS_ERR_IO = 3,               /* file could not be read or written */
  HS_ERR_NUMERICAL = 4,        /* integrator failure */
  HS_ERR_INTERNAL = 5
} hs_status;

typedef struct hs_hypergraph hs_hypergraph;
typedef struct hs_graph hs_graph;
typedef struct hs_table hs_table;

typedef struct hs_params {
  double tau;
  double gamma;
  double c; /* threshold of f(x) = min(x, c) */
} hs_params;

typedef enum hs_initial_rule {
  HS_INITIAL_SHARED_FRACTION = 0, /* one random set shared by all runs */
  HS_INITIAL_PER_RUN_FRACTION = 1,
  HS_INITIAL_EXPLICIT = 2 /* initial_state, e.g. "SISI" with node 0 first */
} hs_initial_rule;

typedef struct hs_sim_config {
  hs_params params;
  double dt;
  double t_max;
  double sampling_interval; /* a multiple of dt */
  uint64_t runs;
  uint64_t seed;
  int keep_runs; /* nonzero adds one column per run */
  hs_initial_rule initial_rule;
  double initial_fraction;
  const char* initial_state;
} hs_sim_config;

typedef enum hs_graph_mode { HS_GRAPH_LINEAR = 0, HS_GRAPH_DISCOUNTED = 1 } hs_graph_mode;

typedef enum hs_meanfield_kind { HS_MEANFIELD_BI_UNIFORM = 0, HS_MEANFIELD_REGULAR = 1 } hs_meanfield_kind;

/* bi-uniform: a = H, b = W.  regular: a = d, b = e. */
typedef struct hs_meanfield_model {
  hs_meanfield_kind kind;
  double num_nodes;
  double a;
  double b;
} hs_meanfield_model;

HS_API const char* hs_version(void);
HS_API const char* hs_last_error(void);
HS_API const char* hs_status_name(hs_status status);
HS_API void hs_string_free(char* s);

/* Hypergraphs. Text format: "N M" header, then one line of node ids per edge. */
HS_API hs_status hs_hypergraph_parse(const char* text, hs_hypergraph** out);
HS_API hs_status hs_hypergraph_load(const char* path, hs_hypergraph** out);
HS_API hs_status hs_hypergraph_save(const hs_hypergraph* h, const char* path);
HS_API hs_status hs_hypergraph_to_text(const hs_hypergraph* h, char** out);
HS_API hs_status hs_hypergraph_example(hs_hypergraph** out);
/* generator_json: {"model": "bi-uniform" | "ba-cliques" | "config" | "example" | "file", ...} */
HS_API hs_status hs_hypergraph_generate(const char* generator_json, hs_hypergraph** out);
HS_API size_t hs_hypergraph_num_nodes(const hs_hypergraph* h);
HS_API size_t hs_hypergraph_num_edges(const hs_hypergraph* h);
HS_API size_t hs_hypergraph_max_edge_size(const hs_hypergraph* h);
HS_API void hs_hypergraph_free(hs_hypergraph* h);

/* Clique expansion: pair weights count shared hyperedges. */
HS_API hs_status hs_graph_clique_expand(const hs_hypergraph* h, hs_graph** out);
HS_API size_t hs_graph_num_nodes(const hs_graph* g);
HS_API size_t hs_graph_num_edges(const hs_graph* g);
HS_API void hs_graph_free(hs_graph* g);

/* Tables of named double columns. */
HS_API size_t hs_table_rows(const hs_table* t);
HS_API size_t hs_table_cols(const hs_table* t);
HS_API const char* hs_table_column_name(const hs_table* t, size_t col);
HS_API double hs_table_value(const hs_table* t, size_t row, size_t col);
/* NULL when the run produced no warning. */
HS_API const char* hs_table_warning(const hs_table* t);
HS_API hs_status hs_table_to_csv(const hs_table* t, char** out);
HS_API hs_status hs_table_save_csv(const hs_table* t, const char* path);
HS_API void hs_table_free(hs_table* t);

/* Simulation ensembles: columns t, mean_I, stderr_I[, run_k...]. */
HS_API void hs_sim_config_init(hs_sim_config* cfg);
HS_API hs_status hs_simulate(const hs_hypergraph* h, const hs_sim_config* cfg, hs_table** out);
HS_API hs_status hs_graph_simulate(const hs_graph* g, const hs_sim_config* cfg, hs_graph_mode mode,
                                   hs_table** out);

/* Exact expected values on the grid of cfg: t, I_expected, S_expected, SI_expected.
   The initial rule must be explicit or shared-fraction. max_nodes = 0 uses the default cap. */
HS_API hs_status hs_master(const hs_hypergraph* h, const hs_sim_config* cfg, size_t max_nodes,
                           hs_table** out);
/* Sparse-triplet dump of the A, B and C blocks. */
HS_API hs_status hs_master_blocks(const hs_hypergraph* h, hs_params params, size_t max_nodes, char** out);

/* Mean-field ODE: columns t, I_mf. */
HS_API hs_status hs_meanfield(const hs_meanfield_model* model, hs_params params, double initial_infected,
                              double t_max, double sampling_interval, hs_table** out);
/* Columns I, stability (0 stable, 1 unstable, 2 semi-stable). */
HS_API hs_status hs_meanfield_fixed_points(const hs_meanfield_model* model, hs_params params,
                                           hs_table** out);
HS_API const char* hs_stability_name(int stability);

/* Experiments. */
HS_API hs_status hs_preset_names(char** out); /* newline separated */
HS_API hs_status hs_preset_config(const char* name, char** json_out);
/* Runs a spec given as JSON; writes CSVs and manifest.json under out_dir. */
HS_API hs_status hs_experiment_run(const char* spec_json, const char* out_dir, char** manifest_path);
/* Compares two series CSV files; the report is JSON. */
HS_API hs_status hs_compare_csv(const char* path_a, const char* path_b, double window, char** report_json);

#ifdef __cplusplus
}
#endif

#endif
