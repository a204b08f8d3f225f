#include "hypersis/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <tuple>

#include "hypersis/errors.hpp"
#include "hypersis/master.hpp"

namespace hypersis {

namespace {

std::size_t to_size(std::string_view s, std::string_view what) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ValidationError("invalid " + std::string(what) + ": '" + std::string(s) + "'");
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

std::vector<std::size_t> sequence_from_json(const json& j, const char* key) {
  const json& v = j.at(key);
  if (v.is_string()) return parse_sequence(v.get<std::string>());
  return v.get<std::vector<std::size_t>>();
}

std::string sequence_to_string(const std::vector<std::size_t>& seq) {
  std::ostringstream out;
  for (std::size_t i = 0; i < seq.size();) {
    std::size_t j = i;
    while (j < seq.size() && seq[j] == seq[i]) ++j;
    if (i > 0) out << ',';
    out << seq[i];
    if (j - i > 1) out << '*' << (j - i);
    i = j;
  }
  return out.str();
}

template <class F>
auto guard_json(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
}

}  // namespace

std::vector<std::size_t> parse_sequence(std::string_view text) {
  std::vector<std::size_t> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto term = trim(text.substr(0, comma));
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    if (term.empty()) throw ValidationError("empty term in sequence");
    if (const auto star = term.find('*'); star != std::string_view::npos) {
      const auto value = to_size(trim(term.substr(0, star)), "sequence value");
      const auto count = to_size(trim(term.substr(star + 1)), "sequence count");
      out.insert(out.end(), count, value);
    } else {
      out.push_back(to_size(term, "sequence value"));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// GeneratorSpec

GeneratorSpec GeneratorSpec::from_json(const json& j) {
  return guard_json([&] {
    if (!j.is_object()) throw ValidationError("generator must be a JSON object");
    GeneratorSpec g;
    const auto model = j.at("model").get<std::string>();
    g.seed = get_or<std::uint64_t>(j, "seed", 1);
    if (model == "bi-uniform") {
      g.model = Model::bi_uniform;
      g.bi_uniform = {j.at("N").get<std::size_t>(), j.at("H").get<std::size_t>(),
                      j.at("W").get<std::size_t>()};
      g.bi_uniform.validate();
    } else if (model == "ba-cliques") {
      g.model = Model::ba_cliques;
      g.ba_cliques = {j.at("N").get<std::size_t>(), j.at("m").get<std::size_t>()};
      g.ba_cliques.validate();
    } else if (model == "config") {
      g.model = Model::configuration;
      if (j.contains("sizes") || j.contains("degrees")) {
        g.configuration.edge_sizes = sequence_from_json(j, "sizes");
        g.configuration.node_degrees = sequence_from_json(j, "degrees");
      } else {
        g.configuration = ConfigSpec::regular(j.at("N").get<std::size_t>(), j.at("d").get<std::size_t>(),
                                              j.at("e").get<std::size_t>());
      }
      g.configuration.validate();
    } else if (model == "example") {
      g.model = Model::example;
    } else if (model == "file") {
      g.model = Model::file;
      g.path = j.at("path").get<std::string>();
    } else {
      throw ValidationError("unknown generator model '" + model + "'");
    }
    return g;
  });
}

json GeneratorSpec::to_json() const {
  json j;
  j["seed"] = seed;
  switch (model) {
    case Model::bi_uniform:
      j["model"] = "bi-uniform";
      j["N"] = bi_uniform.num_nodes;
      j["H"] = bi_uniform.household_size;
      j["W"] = bi_uniform.workplace_size;
      break;
    case Model::ba_cliques:
      j["model"] = "ba-cliques";
      j["N"] = ba_cliques.num_nodes;
      j["m"] = ba_cliques.edges_per_node;
      break;
    case Model::configuration:
      j["model"] = "config";
      j["sizes"] = sequence_to_string(configuration.edge_sizes);
      j["degrees"] = sequence_to_string(configuration.node_degrees);
      break;
    case Model::example:
      j["model"] = "example";
      break;
    case Model::file:
      j["model"] = "file";
      j["path"] = path.string();
      break;
  }
  return j;
}

std::optional<std::size_t> GeneratorSpec::num_nodes() const {
  switch (model) {
    case Model::bi_uniform:
      return bi_uniform.num_nodes;
    case Model::ba_cliques:
      return ba_cliques.num_nodes;
    case Model::configuration:
      return configuration.node_degrees.size();
    case Model::example:
      return 4;
    case Model::file:
      return std::nullopt;
  }
  return std::nullopt;
}

Hypergraph GeneratorSpec::generate() const {
  Rng rng = make_rng(seed);
  switch (model) {
    case Model::bi_uniform:
      return gen_bi_uniform(bi_uniform, rng);
    case Model::ba_cliques:
      return gen_ba_cliques(ba_cliques, rng);
    case Model::configuration:
      return gen_configuration(configuration, rng);
    case Model::example:
      return example_hypergraph();
    case Model::file:
      return load_hypergraph(path);
  }
  throw ValidationError("unknown generator model");
}

std::optional<MeanFieldModel> GeneratorSpec::mean_field(const EpidemicParams& p) const {
  if (model == Model::bi_uniform)
    return MeanFieldModel::bi_uniform(static_cast<double>(bi_uniform.num_nodes),
                                      static_cast<double>(bi_uniform.household_size),
                                      static_cast<double>(bi_uniform.workplace_size), p);
  if (model == Model::configuration) {
    const auto& sizes = configuration.edge_sizes;
    const auto& degrees = configuration.node_degrees;
    const bool uniform = std::adjacent_find(sizes.begin(), sizes.end(), std::not_equal_to<>()) == sizes.end() &&
                         std::adjacent_find(degrees.begin(), degrees.end(), std::not_equal_to<>()) == degrees.end();
    if (uniform)
      return MeanFieldModel::regular(static_cast<double>(degrees.size()), static_cast<double>(degrees.front()),
                                     static_cast<double>(sizes.front()), p);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// ExperimentSpec

const char* to_string(Engine e) {
  switch (e) {
    case Engine::sim:
      return "sim";
    case Engine::graph_sim:
      return "graph_sim";
    case Engine::meanfield:
      return "meanfield";
    case Engine::master:
      return "master";
  }
  return "?";
}

Engine engine_from_string(std::string_view name) {
  if (name == "sim") return Engine::sim;
  if (name == "graph_sim" || name == "graphsim") return Engine::graph_sim;
  if (name == "meanfield") return Engine::meanfield;
  if (name == "master") return Engine::master;
  throw ValidationError("unknown engine '" + std::string(name) + "'");
}

GeneratorSpec ExperimentSpec::generator_for(const ExperimentVariant& v) const {
  json merged = generator;
  merged.merge_patch(v.generator_overrides);
  return GeneratorSpec::from_json(merged);
}

void ExperimentSpec::validate() const {
  if (name.empty()) throw ValidationError("experiment needs a name");
  if (variants.empty()) throw ValidationError("experiment needs at least one variant");
  if (engines.empty()) throw ValidationError("experiment needs at least one engine");
  sim.validate();
  std::vector<std::string> labels;
  for (const auto& v : variants) {
    if (v.label.empty()) throw ValidationError("every variant needs a label");
    if (v.label.find_first_of("/\\") != std::string::npos)
      throw ValidationError("variant labels may not contain path separators");
    labels.push_back(v.label);
    v.params.validate();
    const auto g = generator_for(v);
    const bool uses = [&](Engine e) { return std::find(engines.begin(), engines.end(), e) != engines.end(); }(Engine::master);
    if (uses) {
      if (const auto n = g.num_nodes(); n && *n > master_max_nodes)
        throw ValidationError("variant '" + v.label + "': master engine needs N <= " +
                              std::to_string(master_max_nodes));
      if (sim.initial.rule == InitialRule::per_run_fraction)
        throw ValidationError("master engine needs a deterministic initial state");
    }
    if (std::find(engines.begin(), engines.end(), Engine::meanfield) != engines.end() &&
        !g.mean_field(v.params))
      throw ValidationError("variant '" + v.label + "': no mean-field closure for this hypergraph model");
  }
  std::sort(labels.begin(), labels.end());
  if (std::adjacent_find(labels.begin(), labels.end()) != labels.end())
    throw ValidationError("variant labels must be unique");
  if (!(steady_window > 0.0 && steady_window <= 1.0))
    throw ValidationError("steady_window must lie in (0, 1]");
}

namespace {

SimConfig sim_from_json(const json& j) {
  SimConfig cfg;
  cfg.dt = get_or(j, "dt", cfg.dt);
  cfg.t_max = get_or(j, "t_max", cfg.t_max);
  cfg.runs = get_or(j, "runs", cfg.runs);
  cfg.seed = get_or(j, "seed", cfg.seed);
  cfg.sampling_interval = get_or(j, "sampling_interval", cfg.sampling_interval);
  cfg.keep_runs = get_or(j, "keep_runs", cfg.keep_runs);
  if (j.contains("initial")) {
    const json& init = j.at("initial");
    const auto rule = get_or<std::string>(init, "rule", "shared_fraction");
    if (rule == "shared_fraction") {
      cfg.initial.rule = InitialRule::shared_fraction;
    } else if (rule == "per_run_fraction") {
      cfg.initial.rule = InitialRule::per_run_fraction;
    } else if (rule == "explicit") {
      cfg.initial.rule = InitialRule::explicit_state;
      cfg.initial.state = EpidemicState::from_string(init.at("state").get<std::string>());
    } else {
      throw ValidationError("unknown initial rule '" + rule + "'");
    }
    cfg.initial.fraction = get_or(init, "fraction", cfg.initial.fraction);
  }
  return cfg;
}

json sim_to_json(const SimConfig& cfg) {
  json j;
  j["dt"] = cfg.dt;
  j["t_max"] = cfg.t_max;
  j["runs"] = cfg.runs;
  j["seed"] = cfg.seed;
  j["sampling_interval"] = cfg.sampling_interval;
  j["keep_runs"] = cfg.keep_runs;
  json init;
  switch (cfg.initial.rule) {
    case InitialRule::shared_fraction:
      init["rule"] = "shared_fraction";
      init["fraction"] = cfg.initial.fraction;
      break;
    case InitialRule::per_run_fraction:
      init["rule"] = "per_run_fraction";
      init["fraction"] = cfg.initial.fraction;
      break;
    case InitialRule::explicit_state:
      init["rule"] = "explicit";
      init["state"] = cfg.initial.state.to_string();
      break;
  }
  j["initial"] = init;
  return j;
}

}  // namespace

ExperimentSpec ExperimentSpec::from_json(const json& j) {
  return guard_json([&] {
    ExperimentSpec spec;
    spec.name = j.at("name").get<std::string>();
    spec.generator = j.at("generator");
    GeneratorSpec::from_json(spec.generator);
    const json defaults = j.value("params", json::object());
    const double tau = get_or(defaults, "tau", 0.0);
    const double gamma = get_or(defaults, "gamma", 1.0);
    const double c = get_or(defaults, "c", 1.0);
    for (const auto& v : j.at("variants")) {
      ExperimentVariant var;
      var.params = EpidemicParams(get_or(v, "tau", tau), get_or(v, "gamma", gamma), get_or(v, "c", c));
      var.label = get_or<std::string>(v, "label", "");
      var.generator_overrides = v.value("generator", json::object());
      spec.variants.push_back(std::move(var));
    }
    for (const auto& e : j.at("engines")) spec.engines.push_back(engine_from_string(e.get<std::string>()));
    spec.sim = sim_from_json(j.value("sim", json::object()));
    const auto mode = get_or<std::string>(j, "graph_mode", "linear");
    if (mode == "linear")
      spec.graph_mode = GraphMode::linear;
    else if (mode == "discounted")
      spec.graph_mode = GraphMode::discounted;
    else
      throw ValidationError("graph_mode must be linear or discounted");
    spec.master_max_nodes = get_or(j, "master_max_nodes", spec.master_max_nodes);
    spec.steady_window = get_or(j, "steady_window", spec.steady_window);
    spec.validate();
    return spec;
  });
}

json ExperimentSpec::to_json() const {
  json j;
  j["name"] = name;
  j["generator"] = generator;
  json vars = json::array();
  for (const auto& v : variants) {
    json x;
    x["label"] = v.label;
    x["tau"] = v.params.tau;
    x["gamma"] = v.params.gamma;
    x["c"] = v.params.f.threshold();
    if (!v.generator_overrides.empty()) x["generator"] = v.generator_overrides;
    vars.push_back(x);
  }
  j["variants"] = vars;
  json engs = json::array();
  for (auto e : engines) engs.push_back(to_string(e));
  j["engines"] = engs;
  j["sim"] = sim_to_json(sim);
  j["graph_mode"] = graph_mode == GraphMode::linear ? "linear" : "discounted";
  j["master_max_nodes"] = master_max_nodes;
  j["steady_window"] = steady_window;
  return j;
}

// ---------------------------------------------------------------------------
// Presets. Parameters come from the figure captions; quantities the captions
// leave open (initial fraction, runs, dt, t_max, the unnamed c values) use
// the module defaults and are recorded in the manifest.

namespace {

ExperimentVariant variant(std::string label, double tau, double c, json overrides = json::object()) {
  ExperimentVariant v;
  v.label = std::move(label);
  v.params = EpidemicParams(tau, 1.0, c);
  v.generator_overrides = std::move(overrides);
  return v;
}

ExperimentSpec base(std::string name, json generator, std::vector<Engine> engines, double t_max) {
  ExperimentSpec s;
  s.name = std::move(name);
  s.generator = std::move(generator);
  s.engines = std::move(engines);
  s.sim.t_max = t_max;
  s.sim.seed = 2024;
  return s;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"fig_households_c",     "fig_ba_cliques_c",      "fig_regular_c",
          "fig_households_HW",    "fig_bimodal",           "fig_multi_size",
          "fig_households_meanfield", "fig_regular_meanfield", "example_master"};
}

ExperimentSpec preset(std::string_view name) {
  using E = Engine;
  ExperimentSpec s;
  if (name == "fig_households_c") {
    s = base("fig_households_c", {{"model", "bi-uniform"}, {"N", 500}, {"H", 5}, {"W", 10}, {"seed", 1}},
             {E::sim, E::graph_sim}, 15.0);
    for (double c : {2.0, 5.0, 10.0}) s.variants.push_back(variant("c" + format_number(c), 0.18, c));
  } else if (name == "fig_ba_cliques_c") {
    s = base("fig_ba_cliques_c", {{"model", "ba-cliques"}, {"N", 500}, {"m", 4}, {"seed", 1}},
             {E::sim, E::graph_sim}, 20.0);
    for (double c : {3.0, 5.0, 8.0}) s.variants.push_back(variant("c" + format_number(c), 0.02, c));
  } else if (name == "fig_regular_c") {
    s = base("fig_regular_c", {{"model", "config"}, {"N", 500}, {"d", 8}, {"e", 10}, {"seed", 1}},
             {E::sim, E::graph_sim}, 15.0);
    for (double c : {5.0, 10.0}) s.variants.push_back(variant("c" + format_number(c), 0.05, c));
  } else if (name == "fig_households_HW") {
    s = base("fig_households_HW", {{"model", "bi-uniform"}, {"N", 500}, {"H", 5}, {"W", 10}, {"seed", 1}},
             {E::sim}, 15.0);
    for (auto [h, w] : {std::pair{5, 10}, std::pair{10, 10}, std::pair{5, 20}})
      s.variants.push_back(variant("H" + std::to_string(h) + "_W" + std::to_string(w), 0.18, 5.0,
                                   {{"H", h}, {"W", w}}));
  } else if (name == "fig_bimodal") {
    // 200 edges of each size, 250 nodes of each degree, so d1 + d2 = 32.
    s = base("fig_bimodal", {{"model", "config"}, {"sizes", "15*200,25*200"}, {"degrees", "16*500"}, {"seed", 1}},
             {E::sim}, 15.0);
    // Degree-28 nodes see rates up to 14 per unit time; dt = 0.01 would be coarse.
    s.sim.dt = 0.005;
    const std::vector<std::tuple<int, int, int, int>> shapes = {{15, 25, 16, 16}, {10, 30, 8, 24}, {5, 35, 4, 28}};
    for (auto [e1, e2, d1, d2] : shapes) {
      const std::string sizes = std::to_string(e1) + "*200," + std::to_string(e2) + "*200";
      const std::string degrees = std::to_string(d1) + "*250," + std::to_string(d2) + "*250";
      s.variants.push_back(variant("e" + std::to_string(e1) + "_" + std::to_string(e2) + "_d" +
                                       std::to_string(d1) + "_" + std::to_string(d2),
                                   0.05, 10.0, {{"sizes", sizes}, {"degrees", degrees}}));
    }
  } else if (name == "fig_multi_size") {
    s = base("fig_multi_size", {{"model", "config"}, {"sizes", "20*400"}, {"degrees", "16*500"}, {"seed", 1}},
             {E::sim}, 15.0);
    s.variants.push_back(variant("regular", 0.05, 10.0));
    s.variants.push_back(variant("bimodal", 0.05, 10.0, {{"sizes", "10*200,30*200"}}));
    s.variants.push_back(variant("five_sizes", 0.05, 10.0, {{"sizes", "10*80,15*80,20*80,25*80,30*80"}}));
  } else if (name == "fig_households_meanfield") {
    s = base("fig_households_meanfield", {{"model", "bi-uniform"}, {"N", 500}, {"H", 5}, {"W", 20}, {"seed", 1}},
             {E::sim, E::meanfield}, 15.0);
    for (auto [h, w] : {std::pair{5, 20}, std::pair{10, 10}})
      s.variants.push_back(variant("H" + std::to_string(h) + "_W" + std::to_string(w), 0.18, 7.0,
                                   {{"H", h}, {"W", w}}));
  } else if (name == "fig_regular_meanfield") {
    s = base("fig_regular_meanfield", {{"model", "config"}, {"N", 500}, {"d", 16}, {"e", 20}, {"seed", 1}},
             {E::sim, E::meanfield}, 15.0);
    for (double c : {10.0, 15.0}) s.variants.push_back(variant("c" + format_number(c), 0.03, c));
  } else if (name == "example_master") {
    s = base("example_master", {{"model", "example"}}, {E::sim, E::master, E::graph_sim}, 10.0);
    s.sim.dt = 0.005;
    s.sim.runs = 10000;
    s.sim.initial.rule = InitialRule::explicit_state;
    s.sim.initial.state = EpidemicState::from_string("SISI");
    for (double c : {1.0, 2.0}) s.variants.push_back(variant("c" + format_number(c), 1.0, c));
  } else {
    throw ValidationError("unknown preset '" + std::string(name) + "'");
  }
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// compare

namespace {

double interpolate(const std::vector<double>& t, const std::vector<double>& v, double at) {
  auto it = std::lower_bound(t.begin(), t.end(), at);
  if (it == t.end()) return v.back();
  const auto i = static_cast<std::size_t>(it - t.begin());
  if (*it == at || i == 0) return v[i];
  const double w = (at - t[i - 1]) / (t[i] - t[i - 1]);
  return v[i - 1] + w * (v[i] - v[i - 1]);
}

bool same_grid(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > 1e-9 * std::max(1.0, std::abs(a[i]))) return false;
  return true;
}

}  // namespace

ComparisonReport compare(const TimeSeries& a, const TimeSeries& b, double window) {
  if (a.size() == 0 || b.size() == 0) throw ValidationError("compare: empty series");
  if (!(window > 0.0 && window <= 1.0)) throw ValidationError("compare: window must lie in (0, 1]");
  const double lo = std::max(a.times.front(), b.times.front());
  const double hi = std::min(a.times.back(), b.times.back());
  if (lo > hi) throw ValidationError("compare: time ranges do not overlap");

  ComparisonReport r;
  std::vector<double> va, vb;
  std::vector<double> sa, sb;
  const bool aligned = same_grid(a.times, b.times);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a.times[i];
    if (t < lo - 1e-12 || t > hi + 1e-12) continue;
    r.times.push_back(t);
    va.push_back(a.mean_prevalence[i]);
    sa.push_back(a.std_err.empty() ? 0.0 : a.std_err[i]);
    if (aligned) {
      vb.push_back(b.mean_prevalence[i]);
      sb.push_back(b.std_err.empty() ? 0.0 : b.std_err[i]);
    } else {
      vb.push_back(interpolate(b.times, b.mean_prevalence, t));
      sb.push_back(b.std_err.empty() ? 0.0 : interpolate(b.times, b.std_err, t));
    }
  }
  const std::size_t n = r.times.size();
  if (n == 0) throw ValidationError("compare: no common sample times");

  r.diff.resize(n);
  r.z.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    r.diff[i] = va[i] - vb[i];
    r.max_abs_diff = std::max(r.max_abs_diff, std::abs(r.diff[i]));
    const double se = std::sqrt(sa[i] * sa[i] + sb[i] * sb[i]);
    r.z[i] = se > 0.0 ? r.diff[i] / se : std::numeric_limits<double>::quiet_NaN();
    if (se > 0.0) r.max_abs_z = std::max(r.max_abs_z, std::abs(r.z[i]));
  }
  const auto tail = std::min<std::size_t>(
      n, std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(window * static_cast<double>(n)))));
  const std::size_t first = n - tail;
  for (std::size_t i = first; i < n; ++i) {
    r.steady_a += va[i];
    r.steady_b += vb[i];
  }
  r.steady_a /= static_cast<double>(tail);
  r.steady_b /= static_cast<double>(tail);
  r.steady_diff = r.steady_a - r.steady_b;
  if (first > 0) {
    double sum = 0.0;
    for (std::size_t i = 0; i < first; ++i) sum += r.diff[i];
    r.transient_mean_diff = sum / static_cast<double>(first);
  }
  return r;
}

// ---------------------------------------------------------------------------
// CSV

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

std::string series_csv(const TimeSeries& ts) {
  std::string out = "t,value,stderr\n";
  for (std::size_t i = 0; i < ts.size(); ++i) {
    out += format_number(ts.times[i]);
    out += ',';
    out += format_number(ts.mean_prevalence[i]);
    out += ',';
    out += format_number(ts.std_err.empty() ? 0.0 : ts.std_err[i]);
    out += '\n';
  }
  return out;
}

std::string simulation_csv(const TimeSeries& ts) {
  std::string out = "t,mean_I,stderr_I";
  for (std::size_t r = 0; r < ts.per_run.size(); ++r) out += ",run_" + std::to_string(r);
  out += '\n';
  for (std::size_t i = 0; i < ts.size(); ++i) {
    out += format_number(ts.times[i]);
    out += ',';
    out += format_number(ts.mean_prevalence[i]);
    out += ',';
    out += format_number(ts.std_err.empty() ? 0.0 : ts.std_err[i]);
    for (const auto& row : ts.per_run) {
      out += ',';
      out += format_number(row[i]);
    }
    out += '\n';
  }
  return out;
}

TimeSeries read_series_csv(std::string_view text) {
  TimeSeries ts;
  bool header = true;
  bool has_err = false;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    auto line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string_view> cells;
    while (true) {
      const auto comma = line.find(',');
      cells.push_back(trim(line.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (header) {
      if (cells.size() < 2) throw ValidationError("csv: need at least two columns");
      has_err = cells.size() >= 3 && cells[2].find("err") != std::string_view::npos;
      header = false;
      continue;
    }
    auto number = [&](std::string_view s) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ValidationError("csv line " + std::to_string(line_no) + ": bad number '" + std::string(s) + "'");
      return v;
    };
    if (cells.size() < 2) throw ValidationError("csv line " + std::to_string(line_no) + ": too few columns");
    ts.times.push_back(number(cells[0]));
    ts.mean_prevalence.push_back(number(cells[1]));
    if (has_err) ts.std_err.push_back(number(cells[2]));
  }
  if (header) throw ValidationError("csv: missing header");
  return ts;
}

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// run_experiment

namespace {

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

double initial_prevalence(const SimConfig& cfg, std::size_t n) {
  if (cfg.initial.rule == InitialRule::explicit_state)
    return static_cast<double>(cfg.initial.state.infected_count());
  return static_cast<double>(std::llround(cfg.initial.fraction * static_cast<double>(n)));
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  const auto started = std::chrono::steady_clock::now();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + out_dir.string());

  ExperimentResult result;
  json outputs = json::array();
  json comparisons = json::array();
  const auto has = [&](Engine e) { return std::find(spec.engines.begin(), spec.engines.end(), e) != spec.engines.end(); };

  for (const auto& v : spec.variants) {
    const GeneratorSpec gen = spec.generator_for(v);
    const Hypergraph h = gen.generate();
    SimConfig cfg = spec.sim;
    cfg.params = v.params;

    std::vector<ExperimentOutput> produced;
    for (Engine e : spec.engines) {
      TimeSeries ts;
      switch (e) {
        case Engine::sim:
          ts = run(h, cfg);
          break;
        case Engine::graph_sim:
          ts = graph_run(clique_expand(h), cfg, spec.graph_mode);
          break;
        case Engine::meanfield: {
          const auto model = gen.mean_field(v.params);
          const auto grid = sample_times(cfg);
          ts = integrate(*model, initial_prevalence(cfg, h.num_nodes()), grid);
          break;
        }
        case Engine::master: {
          const MasterSystem ms = build_master(h, v.params, {spec.master_max_nodes});
          const auto grid = sample_times(cfg);
          const auto x0 = point_mass(ms.index(), initial_state(cfg, h.num_nodes(), 0));
          const auto ex = master_expected(ms, x0, grid);
          ts.times = ex.times;
          ts.mean_prevalence = ex.infected;
          break;
        }
      }
      const auto file = out_dir / (v.label + "__" + to_string(e) + ".csv");
      write_file(file, series_csv(ts));
      const auto steady = steady_state_estimate(ts, spec.steady_window);
      json o;
      o["variant"] = v.label;
      o["engine"] = to_string(e);
      o["file"] = file.filename().string();
      o["num_nodes"] = h.num_nodes();
      o["num_edges"] = h.num_edges();
      o["steady_state"] = steady.mean;
      o["steady_state_stderr"] = steady.std_err;
      if (e == Engine::sim || e == Engine::graph_sim) {
        o["max_event_probability"] = ts.max_event_probability;
        o["coarse_step_warning"] = ts.coarse_step();
      }
      outputs.push_back(o);
      produced.push_back({v.label, e, file, std::move(ts)});
    }

    if (has(Engine::sim)) {
      const auto& sim = *std::find_if(produced.begin(), produced.end(),
                                      [](const auto& o) { return o.engine == Engine::sim; });
      for (const auto& other : produced) {
        if (other.engine == Engine::sim) continue;
        const auto rep = compare(sim.series, other.series, spec.steady_window);
        json c;
        c["variant"] = v.label;
        c["a"] = "sim";
        c["b"] = to_string(other.engine);
        c["max_abs_diff"] = rep.max_abs_diff;
        c["steady_diff"] = rep.steady_diff;
        c["transient_mean_diff"] = rep.transient_mean_diff;
        c["max_abs_z"] = rep.max_abs_z;
        comparisons.push_back(c);
      }
    }
    for (auto& p : produced) result.outputs.push_back(std::move(p));
  }

  const json config = spec.to_json();
  const std::string config_text = config.dump();
  json manifest;
  manifest["name"] = spec.name;
  manifest["config"] = config;
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(config_text)));
  manifest["config_hash"] = hash;
  manifest["seeds"] = {{"simulation", spec.sim.seed}};
  json gen_seeds = json::array();
  for (const auto& v : spec.variants) gen_seeds.push_back({{"variant", v.label}, {"generator_seed", spec.generator_for(v).seed}});
  manifest["seeds"]["generators"] = gen_seeds;
  manifest["outputs"] = outputs;
  manifest["comparisons"] = comparisons;
  manifest["wall_clock_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  result.manifest = out_dir / "manifest.json";
  write_file(result.manifest, manifest.dump(2) + "\n");
  return result;
}

}  // namespace hypersis
