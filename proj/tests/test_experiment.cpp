#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "hypersis/errors.hpp"
#include "hypersis/experiment.hpp"

using namespace hypersis;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

json small_spec() {
  return json::parse(R"({
    "name": "small",
    "generator": {"model": "bi-uniform", "N": 40, "H": 4, "W": 8, "seed": 3},
    "params": {"tau": 0.3, "gamma": 1.0},
    "variants": [{"label": "c2", "c": 2}, {"label": "c4", "c": 4, "generator": {"W": 10}}],
    "engines": ["sim", "graph_sim", "meanfield"],
    "sim": {"dt": 0.01, "t_max": 2, "runs": 8, "seed": 9, "sampling_interval": 0.5}
  })");
}

}  // namespace

TEST_CASE("sequence syntax") {
  CHECK(parse_sequence("3,4,5") == std::vector<std::size_t>{3, 4, 5});
  CHECK(parse_sequence("2*3, 7") == std::vector<std::size_t>{2, 2, 2, 7});
  CHECK_THROWS_AS(parse_sequence("2,,3"), ValidationError);
  CHECK_THROWS_AS(parse_sequence("x"), ValidationError);
  CHECK_THROWS_AS(parse_sequence("2*"), ValidationError);
}

TEST_CASE("generator specs") {
  const auto g = GeneratorSpec::from_json(json::parse(R"({"model": "config", "sizes": "4*5", "degrees": "2*10", "seed": 4})"));
  CHECK(g.model == GeneratorSpec::Model::configuration);
  CHECK(g.num_nodes() == 10u);
  const auto h = g.generate();
  CHECK(h.num_edges() == 5);
  CHECK(GeneratorSpec::from_json(g.to_json()).generate() == h);
  const auto mf = g.mean_field(EpidemicParams(0.1, 1, 2));
  REQUIRE(mf.has_value());
  CHECK(mf->variant() == MeanFieldModel::Variant::regular);

  const auto mixed = GeneratorSpec::from_json(json::parse(R"({"model": "config", "sizes": "2*5,4*5", "degrees": "3*10"})"));
  CHECK(!mixed.mean_field(EpidemicParams(0.1, 1, 2)).has_value());
  const auto ba = GeneratorSpec::from_json(json::parse(R"({"model": "ba-cliques", "N": 30, "m": 2})"));
  CHECK(!ba.mean_field(EpidemicParams(0.1, 1, 2)).has_value());

  CHECK_THROWS_AS(GeneratorSpec::from_json(json::parse(R"({"model": "nope"})")), ValidationError);
  CHECK_THROWS_AS(GeneratorSpec::from_json(json::parse(R"({"model": "bi-uniform", "N": 10})")), ValidationError);
  CHECK_THROWS_AS(GeneratorSpec::from_json(json::parse(R"({"model": "bi-uniform", "N": 10, "H": 3, "W": 5})")),
                  ValidationError);
}

TEST_CASE("experiment spec validation") {
  CHECK_NOTHROW(ExperimentSpec::from_json(small_spec()));
  auto j = small_spec();
  j["variants"] = json::array();
  CHECK_THROWS_AS(ExperimentSpec::from_json(j), ValidationError);
  j = small_spec();
  j["engines"] = json::array();
  CHECK_THROWS_AS(ExperimentSpec::from_json(j), ValidationError);
  j = small_spec();
  j["engines"] = {"master"};
  CHECK_THROWS_AS(ExperimentSpec::from_json(j), ValidationError);
  j = small_spec();
  j["engines"] = {"warp"};
  CHECK_THROWS_AS(ExperimentSpec::from_json(j), ValidationError);
  j = small_spec();
  j["variants"][1]["label"] = "c2";
  CHECK_THROWS_AS(ExperimentSpec::from_json(j), ValidationError);
  j = small_spec();
  j["generator"] = {{"model", "ba-cliques"}, {"N", 30}, {"m", 2}};
  CHECK_THROWS_AS(ExperimentSpec::from_json(j), ValidationError);

  const auto spec = ExperimentSpec::from_json(small_spec());
  const auto again = ExperimentSpec::from_json(spec.to_json());
  CHECK(again.to_json() == spec.to_json());
  CHECK(spec.generator_for(spec.variants[1]).bi_uniform.workplace_size == 10);
}

TEST_CASE("every preset validates") {
  for (const auto& name : preset_names()) {
    CAPTURE(name);
    const auto spec = preset(name);
    CHECK(spec.name == name);
    CHECK(!spec.variants.empty());
    CHECK(ExperimentSpec::from_json(spec.to_json()).to_json() == spec.to_json());
  }
  CHECK_THROWS_AS(preset("fig_unknown"), ValidationError);
  const auto fig9 = preset("fig_regular_meanfield");
  CHECK(fig9.variants.size() == 2);
  const auto g = fig9.generator_for(fig9.variants[0]);
  CHECK(g.configuration.edge_sizes.size() == 400);
}

TEST_CASE("compare") {
  TimeSeries a;
  a.times = {0, 1, 2, 3, 4};
  a.mean_prevalence = {1, 2, 3, 4, 5};
  a.std_err = {0, 1, 1, 1, 1};
  const auto same = compare(a, a);
  CHECK(same.max_abs_diff == 0.0);
  CHECK(same.steady_diff == 0.0);
  CHECK(same.max_abs_z == 0.0);
  CHECK(std::isnan(same.z[0]));

  TimeSeries b;
  b.times = {0, 2, 4};
  b.mean_prevalence = {0, 2, 4};
  const auto r = compare(a, b, 0.2);
  CHECK(r.times.size() == 5);
  for (double d : r.diff) CHECK(d == doctest::Approx(1.0));
  CHECK(r.steady_a == 5.0);
  CHECK(r.steady_b == 4.0);
  CHECK(r.max_abs_z == doctest::Approx(1.0));
  CHECK(r.transient_mean_diff == doctest::Approx(1.0));

  TimeSeries later;
  later.times = {10, 11};
  later.mean_prevalence = {0, 0};
  CHECK_THROWS_AS(compare(a, later), ValidationError);
}

TEST_CASE("csv helpers") {
  TimeSeries a;
  a.times = {0, 0.5};
  a.mean_prevalence = {1, 2.25};
  a.std_err = {0, 0.125};
  CHECK(series_csv(a) == "t,value,stderr\n0,1,0\n0.5,2.25,0.125\n");
  const auto back = read_series_csv(series_csv(a));
  CHECK(back.times == a.times);
  CHECK(back.mean_prevalence == a.mean_prevalence);
  CHECK(back.std_err == a.std_err);
  a.per_run = {{1, 2}, {1, 2.5}};
  CHECK(simulation_csv(a) == "t,mean_I,stderr_I,run_0,run_1\n0,1,0,1,1\n0.5,2.25,0.125,2,2.5\n");
  const auto mf = read_series_csv("t,I_mf\n0,3\n1,4\n");
  CHECK(mf.std_err.empty());
  CHECK_THROWS_AS(read_series_csv("t,v\n0,x\n"), ValidationError);
  CHECK(format_number(0.1) == "0.1");
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("running an experiment writes reproducible outputs") {
  const auto spec = ExperimentSpec::from_json(small_spec());
  const auto base = std::filesystem::temp_directory_path() / "hypersis_experiment_test";
  std::filesystem::remove_all(base);
  const auto first = run_experiment(spec, base / "a");
  const auto second = run_experiment(spec, base / "b");
  REQUIRE(first.outputs.size() == 6);
  for (std::size_t i = 0; i < first.outputs.size(); ++i) {
    CHECK(slurp(first.outputs[i].file) == slurp(second.outputs[i].file));
    CHECK(slurp(first.outputs[i].file).rfind("t,value,stderr\n", 0) == 0);
  }
  CHECK(first.outputs[0].file.filename() == "c2__sim.csv");
  const auto manifest = json::parse(slurp(first.manifest));
  CHECK(manifest["name"] == "small");
  CHECK(manifest["outputs"].size() == 6);
  CHECK(manifest["comparisons"].size() == 4);
  CHECK(manifest["config_hash"] == json::parse(slurp(second.manifest))["config_hash"]);
  // The manifest alone reproduces the run.
  const auto replay = run_experiment(ExperimentSpec::from_json(manifest["config"]), base / "c");
  for (std::size_t i = 0; i < first.outputs.size(); ++i)
    CHECK(slurp(first.outputs[i].file) == slurp(replay.outputs[i].file));
  std::filesystem::remove_all(base);
}
