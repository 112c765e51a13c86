// Experiment runner: dataset simulation, exact oracles, and the three
// estimation pipelines (exchange posterior sampling, population-exchange
// evidence / Bayes factors, ABC model choice). Outputs are JSON summaries,
// JSON-lines traces and CSV report tables under --out.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "grf/abc.hpp"
#include "grf/bridge.hpp"
#include "grf/config.hpp"
#include "grf/core.hpp"
#include "grf/ergm.hpp"
#include "grf/exchange.hpp"
#include "grf/ising.hpp"
#include "grf/ising_exact.hpp"
#include "grf/pilot.hpp"
#include "grf/population.hpp"
#include "grf/rng.hpp"
#include "grf/util.hpp"

using grf::parallel_for;

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct RunContext {
  grf::Config cfg;
  fs::path out_dir;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string config_hash;
};

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  long ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

RunContext make_context(const std::string& config_path, std::optional<std::uint64_t> seed,
                        std::optional<int> threads, std::optional<std::string> out) {
  RunContext ctx;
  ctx.cfg = grf::Config::from_file(config_path);
  if (seed) ctx.cfg.set("seed", std::to_string(*seed));
  if (threads) ctx.cfg.set("threads", std::to_string(*threads));
  if (out) ctx.cfg.set("output.dir", *out);
  if (!ctx.cfg.has("seed"))
    throw std::runtime_error("a seed is mandatory: set `seed` in the config or pass --seed");
  ctx.seed = ctx.cfg.get_u64("seed");
  ctx.threads = static_cast<int>(ctx.cfg.get_int("threads", 1));
  ctx.out_dir = ctx.cfg.get_string("output.dir", "out");
  ctx.config_hash = ctx.cfg.hash_hex();
  fs::create_directories(ctx.out_dir);
  return ctx;
}

// --- datasets -------------------------------------------------------------

struct DatasetInfo {
  std::string id;
  fs::path file;
  int true_model = 1;  // 1 or 2
  std::vector<double> theta;
  int rows = 0, cols = 0;
};

void write_manifest(const RunContext& ctx, const fs::path& path,
                    const std::vector<DatasetInfo>& datasets) {
  json j;
  j["seed"] = ctx.seed;
  j["config_hash"] = ctx.config_hash;
  j["datasets"] = json::array();
  for (const auto& d : datasets) {
    json e;
    e["id"] = d.id;
    e["file"] = d.file.filename().string();
    e["true_model"] = d.true_model;
    e["theta"] = d.theta;
    e["rows"] = d.rows;
    e["cols"] = d.cols;
    j["datasets"].push_back(e);
  }
  std::ofstream out(path);
  out << j.dump(2) << '\n';
}

std::vector<DatasetInfo> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  json j;
  in >> j;
  std::vector<DatasetInfo> out;
  for (const auto& e : j.at("datasets")) {
    DatasetInfo d;
    d.id = e.at("id").get<std::string>();
    d.file = path.parent_path() / e.at("file").get<std::string>();
    d.true_model = e.at("true_model").get<int>();
    d.theta = e.at("theta").get<std::vector<double>>();
    d.rows = e.at("rows").get<int>();
    d.cols = e.at("cols").get<int>();
    out.push_back(d);
  }
  return out;
}

// Either a dataset batch (data.manifest) or a single file (data.file).
std::vector<DatasetInfo> input_datasets(const RunContext& ctx) {
  const std::string single = ctx.cfg.get_string("data.file", "");
  if (!single.empty()) {
    DatasetInfo d;
    d.id = fs::path(single).stem().string();
    d.file = single;
    return {d};
  }
  const std::string manifest = ctx.cfg.get_string("data.manifest", "");
  if (manifest.empty())
    throw std::runtime_error("no input data: set data.manifest or data.file in the config");
  return read_manifest(manifest);
}

// --- model plumbing --------------------------------------------------------

bool family_is_ising(const std::string& family) { return family.rfind("ising", 0) == 0; }

int family_order(const std::string& family) {
  if (family == "ising1" || family == "ergm1") return 1;
  if (family == "ising2" || family == "ergm2") return 2;
  throw std::runtime_error("unknown model family: " + family +
                           " (expected ising1, ising2, ergm1 or ergm2)");
}

grf::GaussianPrior prior_for(const RunContext& ctx, std::size_t dim) {
  return grf::GaussianPrior::isotropic(dim, ctx.cfg.get_double("prior.sd", 5.0),
                                       ctx.cfg.get_double("prior.mean", 0.0));
}

grf::PopxConfig popx_config(const RunContext& ctx, const std::string& section) {
  grf::PopxConfig c;
  // `chains` counts temperatures including both endpoints; the ladder index n
  // is one less.
  const auto chains = ctx.cfg.get_int(section + ".chains", 5);
  if (chains < 2) throw std::runtime_error(section + ".chains must be >= 2");
  c.n = static_cast<int>(chains) - 1;
  c.ladder_p = ctx.cfg.get_double(section + ".ladder_p", 5.0);
  c.iters = ctx.cfg.get_int(section + ".iters", 20000);
  c.burn_in_fraction = ctx.cfg.get_double(section + ".burn_in", 0.1);
  c.s = static_cast<int>(ctx.cfg.get_int(section + ".s", 200));
  c.aux_sweeps = static_cast<int>(ctx.cfg.get_int(section + ".aux_sweeps", 200));
  c.sigma = ctx.cfg.get_double(section + ".sigma", 0.2);
  c.r = static_cast<int>(ctx.cfg.get_int(section + ".r", 100));
  c.exclude_first_aux = ctx.cfg.get_bool(section + ".exclude_first_aux", false);
  return c;
}

grf::PosteriorGrid auto_posterior_grid(const RunContext& ctx, const grf::Lattice& y,
                                       grf::Neighborhood order, const grf::GaussianPrior& prior,
                                       grf::RngStream rng) {
  grf::PilotGridOptions opts;
  opts.pilot_iters = ctx.cfg.get_int("grid.pilot_iters", 3000);
  opts.pilot_aux_sweeps = static_cast<int>(ctx.cfg.get_int("grid.pilot_aux", 50));
  opts.pilot_sigma = ctx.cfg.get_double("grid.pilot_sigma", 0.2);
  opts.nodes_per_dim = ctx.cfg.get_int("grid.nodes", 501);
  opts.span_sd = ctx.cfg.get_double("grid.span_sd", 7.0);
  return grf::pilot_posterior_grid(y, order, prior, opts, rng);
}

// --- report helpers --------------------------------------------------------

struct ExactRow {
  double log_ev_m1 = 0.0, log_ev_m2 = 0.0, post_m1 = 0.0;
};

std::map<std::string, ExactRow> read_exact_report(const fs::path& path) {
  std::map<std::string, ExactRow> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string id, cell;
    std::getline(row, id, ',');
    ExactRow r;
    std::getline(row, cell, ',');  // true_model
    std::getline(row, cell, ',');
    r.log_ev_m1 = std::stod(cell);
    std::getline(row, cell, ',');
    r.log_ev_m2 = std::stod(cell);
    std::getline(row, cell, ',');
    r.post_m1 = std::stod(cell);
    out[id] = r;
  }
  return out;
}

void write_figures_readme(const RunContext& ctx) {
  std::ofstream out(ctx.out_dir / "FIGURES.md");
  out << R"(# Plot-ready data files

All files are plain CSV with a header row; every row carries the dataset id,
the master seed, the wall time in milliseconds and the config hash.

## exact_evidence.csv
Ground truth per dataset: `id, true_model, log_ev_m1, log_ev_m2, post_m1`.
`post_m1` is the exact posterior probability of the first-order model under a
uniform model prior.

## popx_report.csv  (scatter panels, population-exchange method)
`id, true_model, log_ev_m1, log_ev_m2, post_m1, exact_post_m1, log_bf,
exact_log_bf, bf_ratio_true_over_est, seed, wall_ms, config_hash`.
Plot `exact_post_m1` against `post_m1` for the model-probability scatter;
`bf_ratio_true_over_est` feeds the Bayes-factor ratio boxplot.

## abc_report.csv  (scatter panels, ABC baseline; one column set per quantile)
`id, true_model, exact_post_m1, post_m1_q<q>, kept_q<q>, log_bf_q<q>,
bf_ratio_q<q>, seed, wall_ms, config_hash` for each configured quantile `q`.

## bf_report.csv  (direct bridged Bayes-factor runs)
`id, log_bf, bf, exact_log_bf, bf_ratio_true_over_est, theta2_q25,
theta2_median, theta2_q75, seed, wall_ms, config_hash`.

## bf_draws_m1.csv / bf_draws_m2.csv  (single-dataset bridged runs)
Posterior draws: `theta1` under model 1; `theta1, theta2` under model 2.
These are the inputs for the three posterior-density panels.
)";
}

// --- subcommands ------------------------------------------------------------

int cmd_simulate(const RunContext& ctx) {
  const int rows = static_cast<int>(ctx.cfg.get_int("model.rows", 6));
  const int cols = static_cast<int>(ctx.cfg.get_int("model.cols", 6));
  const auto n_first = ctx.cfg.get_int("simulate.n_first", 10);
  const auto n_second = ctx.cfg.get_int("simulate.n_second", 10);
  const int sweeps = static_cast<int>(ctx.cfg.get_int("simulate.sweeps", 2000));
  const double t1_lo = ctx.cfg.get_double("simulate.theta1_min", 0.15);
  const double t1_hi = ctx.cfg.get_double("simulate.theta1_max", 0.45);
  const double m2t1_lo = ctx.cfg.get_double("simulate.m2_theta1_min", 0.10);
  const double m2t1_hi = ctx.cfg.get_double("simulate.m2_theta1_max", 0.35);
  const double t2_lo = ctx.cfg.get_double("simulate.theta2_min", -0.25);
  const double t2_hi = ctx.cfg.get_double("simulate.theta2_max", 0.25);

  const fs::path dir = ctx.out_dir / "datasets";
  fs::create_directories(dir);
  grf::RngStream root(ctx.seed);
  grf::RngStream rng = root.fork("simulate");

  std::vector<DatasetInfo> datasets;
  char name[32];
  for (long i = 0; i < n_first + n_second; ++i) {
    grf::RngStream sub = rng.fork(static_cast<std::uint64_t>(i));
    DatasetInfo d;
    std::snprintf(name, sizeof(name), "ds_%03ld", i);
    d.id = name;
    d.file = dir / (d.id + ".lat");
    d.rows = rows;
    d.cols = cols;
    grf::Lattice lat(1, 1);
    if (i < n_first) {
      d.true_model = 1;
      d.theta = {t1_lo + (t1_hi - t1_lo) * sub.uniform()};
      lat = grf::sample_lattice(d.theta, rows, cols, grf::Neighborhood::first, sweeps, sub);
    } else {
      d.true_model = 2;
      d.theta = {m2t1_lo + (m2t1_hi - m2t1_lo) * sub.uniform(),
                 t2_lo + (t2_hi - t2_lo) * sub.uniform()};
      lat = grf::sample_lattice(d.theta, rows, cols, grf::Neighborhood::second, sweeps, sub);
    }
    grf::save_lattice(lat, d.file);
    datasets.push_back(d);
  }
  write_manifest(ctx, dir / "manifest.json", datasets);
  std::cout << "wrote " << datasets.size() << " datasets under " << dir.string() << '\n';
  return 0;
}

int cmd_exact_evidence(const RunContext& ctx) {
  const auto datasets = input_datasets(ctx);
  grf::RngStream root(ctx.seed);

  struct Row {
    std::string id;
    int true_model;
    double log_ev_m1, log_ev_m2, post_m1;
    long wall_ms;
  };
  std::vector<Row> rows(datasets.size());

  parallel_for(datasets.size(), ctx.threads, [&](std::size_t i) {
    Timer timer;
    const DatasetInfo& d = datasets[i];
    const grf::Lattice y = grf::load_lattice(d.file);
    grf::RngStream rng = root.fork("exact").fork(i);
    const auto grid1 = auto_posterior_grid(ctx, y, grf::Neighborhood::first,
                                           prior_for(ctx, 1), rng.fork("m1"));
    const auto grid2 = auto_posterior_grid(ctx, y, grf::Neighborhood::second,
                                           prior_for(ctx, 2), rng.fork("m2"));
    const double post_m1 = 1.0 / (1.0 + std::exp(grid2.log_evidence - grid1.log_evidence));
    rows[i] = {d.id, d.true_model, grid1.log_evidence, grid2.log_evidence, post_m1, timer.ms()};
  });

  std::ofstream out(ctx.out_dir / "exact_evidence.csv");
  out.precision(12);
  out << "id,true_model,log_ev_m1,log_ev_m2,post_m1,seed,wall_ms,config_hash\n";
  for (const auto& r : rows)
    out << r.id << ',' << r.true_model << ',' << r.log_ev_m1 << ',' << r.log_ev_m2 << ','
        << r.post_m1 << ',' << ctx.seed << ',' << r.wall_ms << ',' << ctx.config_hash << '\n';
  write_figures_readme(ctx);
  std::cout << "wrote " << (ctx.out_dir / "exact_evidence.csv").string() << '\n';
  return 0;
}

int cmd_exchange(const RunContext& ctx) {
  const std::string family = ctx.cfg.get_string("model.family", "ising1");
  const auto datasets = input_datasets(ctx);
  const DatasetInfo& d = datasets.front();
  const auto iters = ctx.cfg.get_int("exchange.iters", 100000);
  const auto burn = static_cast<long>(static_cast<double>(iters) *
                                      ctx.cfg.get_double("exchange.burn_in", 0.1));
  const int aux = static_cast<int>(ctx.cfg.get_int("exchange.aux_sweeps", 200));
  const double sigma = ctx.cfg.get_double("exchange.sigma", 0.2);

  Timer timer;
  std::ofstream trace(ctx.out_dir / "exchange_trace.jsonl");
  grf::RngStream root(ctx.seed);
  grf::RngStream rng = root.fork("exchange");

  const auto on_step = [&trace](long i, const grf::ExchangeState& state, bool accepted) {
    json j;
    j["iteration"] = i;
    j["theta"] = state.theta;
    j["aux_stats"] = state.aux_stats;
    j["accepted"] = accepted;
    trace << j.dump() << '\n';
  };

  grf::ChainSummary run;
  if (family_is_ising(family)) {
    const auto order = family_order(family) == 1 ? grf::Neighborhood::first
                                                 : grf::Neighborhood::second;
    const grf::Lattice y = grf::load_lattice(d.file);
    const grf::IsingModel model{y.rows(), y.cols(), order};
    run = grf::run_exchange(grf::suff_stats(y, order), model, prior_for(ctx, model.dim()),
                            grf::ProposalSpec::random_walk(model.dim(), sigma), iters, burn, aux,
                            rng, on_step);
  } else {
    const grf::Graph g = grf::load_edge_list(d.file);
    const grf::ErgmModel model{g.nodes(), family_order(family) == 2};
    run = grf::run_exchange(model.stats(g), model, prior_for(ctx, model.dim()),
                            grf::ProposalSpec::random_walk(model.dim(), sigma), iters, burn, aux,
                            rng, on_step);
  }

  json summary;
  summary["data"] = d.file.string();
  summary["family"] = family;
  summary["posterior_mean"] = run.mean;
  summary["posterior_sd"] = run.sd;
  summary["acceptance_rate"] = run.acceptance_rate;
  summary["iters"] = iters;
  summary["seed"] = ctx.seed;
  summary["config_hash"] = ctx.config_hash;
  summary["wall_ms"] = timer.ms();
  std::ofstream(ctx.out_dir / "exchange_summary.json") << summary.dump(2) << '\n';
  std::cout << summary.dump(2) << '\n';
  return 0;
}

json evidence_to_json(const grf::EvidenceEstimate& est) {
  json j;
  j["log_evidence"] = est.log_evidence;
  j["posterior_mean"] = est.posterior_mean;
  j["acceptance_rates"] = est.acceptance_rates;
  j["log_z_hat"] = {{"mean", est.log_z_mean}, {"sd", est.log_z_sd}};
  j["per_theta"] = json::array();
  for (const auto& pt : est.per_theta)
    j["per_theta"].push_back({{"theta", pt.theta}, {"log_evidence", pt.log_evidence}});
  return j;
}

int cmd_popx_evidence(const RunContext& ctx) {
  const std::string family = ctx.cfg.get_string("model.family", "ising2");
  if (!family_is_ising(family))
    throw std::runtime_error("popx-evidence expects an Ising dataset batch");
  const auto datasets = input_datasets(ctx);
  const auto exact = read_exact_report(ctx.out_dir / "exact_evidence.csv");
  const grf::PopxConfig base = popx_config(ctx, "popx");
  const std::string families = ctx.cfg.get_string("popx.families", "both");
  const bool run_m1 = families == "both" || families == "m1";
  const bool run_m2 = families == "both" || families == "m2";
  const bool want_trace = ctx.cfg.get_bool("popx.trace", false);
  grf::RngStream root(ctx.seed);

  struct Row {
    std::string id;
    int true_model = 0;
    double log_ev_m1 = std::nan(""), log_ev_m2 = std::nan("");
    long wall_ms = 0;
    json summary_m1, summary_m2;
  };
  std::vector<Row> rows(datasets.size());

  if (want_trace) fs::create_directories(ctx.out_dir / "traces");

  parallel_for(datasets.size(), ctx.threads, [&](std::size_t i) {
    Timer timer;
    const DatasetInfo& d = datasets[i];
    const grf::Lattice y = grf::load_lattice(d.file);
    Row& row = rows[i];
    row.id = d.id;
    row.true_model = d.true_model;

    const auto run_family = [&](grf::Neighborhood order, const char* tag) {
      const grf::IsingModel model{y.rows(), y.cols(), order};
      const grf::StatVec stats = grf::suff_stats(y, order);
      grf::RngStream rng = root.fork("popx").fork(i).fork(tag);
      grf::PopxTraceFn trace_fn;
      std::shared_ptr<std::ofstream> trace_file;
      if (want_trace) {
        trace_file = std::make_shared<std::ofstream>(
            ctx.out_dir / "traces" / ("popx_" + d.id + "_" + tag + ".jsonl"));
        trace_fn = [trace_file](long iter, const grf::PopulationState& pop,
                                const std::vector<bool>& acc, double lzh) {
          json j;
          j["iteration"] = iter;
          auto thetas = json::array();
          for (const auto& chain : pop.chains) thetas.push_back(chain.theta);
          j["theta"] = thetas;
          auto accepted = json::array();
          for (bool a : acc) accepted.push_back(a);
          j["accepted"] = accepted;
          j["log_z_hat"] = lzh;
          (*trace_file) << j.dump() << '\n';
        };
      }
      return grf::run_popx_evidence(model, stats, prior_for(ctx, model.dim()), base, rng, trace_fn);
    };

    if (run_m1) {
      const auto est = run_family(grf::Neighborhood::first, "m1");
      row.log_ev_m1 = est.log_evidence;
      row.summary_m1 = evidence_to_json(est);
    }
    if (run_m2) {
      const auto est = run_family(grf::Neighborhood::second, "m2");
      row.log_ev_m2 = est.log_evidence;
      row.summary_m2 = evidence_to_json(est);
    }
    row.wall_ms = timer.ms();
  });

  std::ofstream out(ctx.out_dir / "popx_report.csv");
  out.precision(12);
  out << "id,true_model,log_ev_m1,log_ev_m2,post_m1,exact_post_m1,log_bf,exact_log_bf,"
         "bf_ratio_true_over_est,seed,wall_ms,config_hash\n";
  json summary = json::array();
  for (const auto& r : rows) {
    const bool both = std::isfinite(r.log_ev_m1) && std::isfinite(r.log_ev_m2);
    const double post_m1 = both ? 1.0 / (1.0 + std::exp(r.log_ev_m2 - r.log_ev_m1)) : std::nan("");
    const double log_bf = both ? r.log_ev_m1 - r.log_ev_m2 : std::nan("");
    const auto it = exact.find(r.id);
    const double exact_post = it != exact.end() ? it->second.post_m1 : std::nan("");
    const double exact_bf =
        it != exact.end() ? it->second.log_ev_m1 - it->second.log_ev_m2 : std::nan("");
    const double ratio = (it != exact.end() && both) ? std::exp(exact_bf - log_bf) : std::nan("");
    out << r.id << ',' << r.true_model << ',' << r.log_ev_m1 << ',' << r.log_ev_m2 << ','
        << post_m1 << ',' << exact_post << ',' << log_bf << ',' << exact_bf << ',' << ratio << ','
        << ctx.seed << ',' << r.wall_ms << ',' << ctx.config_hash << '\n';
    json e;
    e["id"] = r.id;
    if (!r.summary_m1.is_null()) e["m1"] = r.summary_m1;
    if (!r.summary_m2.is_null()) e["m2"] = r.summary_m2;
    e["wall_ms"] = r.wall_ms;
    summary.push_back(e);
  }
  json top;
  top["seed"] = ctx.seed;
  top["config_hash"] = ctx.config_hash;
  top["runs"] = summary;
  std::ofstream(ctx.out_dir / "popx_summary.json") << top.dump(2) << '\n';
  write_figures_readme(ctx);
  std::cout << "wrote " << (ctx.out_dir / "popx_report.csv").string() << '\n';
  return 0;
}

int cmd_popx_bf(const RunContext& ctx) {
  const std::string family = ctx.cfg.get_string("model.family", "ising2");
  if (family_order(family) != 2)
    throw std::runtime_error("popx-bf needs the two-statistic family (ising2 or ergm2)");
  const auto datasets = input_datasets(ctx);
  const auto exact = read_exact_report(ctx.out_dir / "exact_evidence.csv");
  const grf::PopxConfig base = popx_config(ctx, "bf");
  const grf::BridgePriors priors(prior_for(ctx, 1), prior_for(ctx, 2));
  grf::RngStream root(ctx.seed);

  struct Row {
    std::string id;
    double log_bf = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0;
    long wall_ms = 0;
    json summary;
  };
  std::vector<Row> rows(datasets.size());

  parallel_for(datasets.size(), ctx.threads, [&](std::size_t i) {
    Timer timer;
    const DatasetInfo& d = datasets[i];
    grf::RngStream rng = root.fork("bf").fork(i);
    grf::BayesFactorEstimate est;
    if (family_is_ising(family)) {
      const grf::Lattice y = grf::load_lattice(d.file);
      const grf::IsingModel model2{y.rows(), y.cols(), grf::Neighborhood::second};
      est = grf::run_popx_bf(model2, grf::suff_stats(y, grf::Neighborhood::second), priors, base,
                             rng);
    } else {
      const grf::Graph g = grf::load_edge_list(d.file);
      const grf::ErgmModel model2{g.nodes(), true};
      est = grf::run_popx_bf(model2, model2.stats(g), priors, base, rng);
    }

    std::vector<double> theta2;
    theta2.reserve(est.draws_m2.size());
    for (const auto& th : est.draws_m2) theta2.push_back(th[1]);

    Row& row = rows[i];
    row.id = d.id;
    row.log_bf = est.log_bf_12;
    row.q25 = grf::quantile(theta2, 0.25);
    row.q50 = grf::quantile(theta2, 0.50);
    row.q75 = grf::quantile(theta2, 0.75);
    row.wall_ms = timer.ms();
    row.summary["log_bf_12"] = est.log_bf_12;
    row.summary["bf_12"] = std::exp(est.log_bf_12);
    row.summary["acceptance_rates"] = est.acceptance_rates;
    row.summary["mean_m1"] = est.mean_m1;
    row.summary["mean_m2"] = est.mean_m2;
    row.summary["theta2_quartiles"] = {row.q25, row.q50, row.q75};

    if (datasets.size() == 1) {
      std::ofstream m1(ctx.out_dir / "bf_draws_m1.csv");
      m1.precision(12);
      m1 << "theta1\n";
      for (double x : est.draws_m1) m1 << x << '\n';
      std::ofstream m2(ctx.out_dir / "bf_draws_m2.csv");
      m2.precision(12);
      m2 << "theta1,theta2\n";
      for (const auto& th : est.draws_m2) m2 << th[0] << ',' << th[1] << '\n';
    }
  });

  std::ofstream out(ctx.out_dir / "bf_report.csv");
  out.precision(12);
  out << "id,log_bf,bf,exact_log_bf,bf_ratio_true_over_est,theta2_q25,theta2_median,theta2_q75,"
         "seed,wall_ms,config_hash\n";
  json summary = json::array();
  for (const auto& r : rows) {
    const auto it = exact.find(r.id);
    const double exact_bf =
        it != exact.end() ? it->second.log_ev_m1 - it->second.log_ev_m2 : std::nan("");
    const double ratio = it != exact.end() ? std::exp(exact_bf - r.log_bf) : std::nan("");
    out << r.id << ',' << r.log_bf << ',' << std::exp(r.log_bf) << ',' << exact_bf << ',' << ratio
        << ',' << r.q25 << ',' << r.q50 << ',' << r.q75 << ',' << ctx.seed << ',' << r.wall_ms
        << ',' << ctx.config_hash << '\n';
    json e = r.summary;
    e["id"] = r.id;
    summary.push_back(e);
  }
  json top;
  top["seed"] = ctx.seed;
  top["config_hash"] = ctx.config_hash;
  top["runs"] = summary;
  std::ofstream(ctx.out_dir / "bf_summary.json") << top.dump(2) << '\n';
  write_figures_readme(ctx);
  std::cout << "wrote " << (ctx.out_dir / "bf_report.csv").string() << '\n';
  return 0;
}

int cmd_abc(const RunContext& ctx) {
  const std::string family = ctx.cfg.get_string("model.family", "ising2");
  if (!family_is_ising(family)) throw std::runtime_error("abc expects an Ising dataset batch");
  const auto datasets = input_datasets(ctx);
  const auto exact = read_exact_report(ctx.out_dir / "exact_evidence.csv");
  const auto n_draws = ctx.cfg.get_int("abc.n_draws", 500000);
  const int aux = static_cast<int>(ctx.cfg.get_int("abc.aux_sweeps", 200));
  const std::vector<double> quantiles =
      ctx.cfg.has("abc.quantiles") ? ctx.cfg.get_doubles("abc.quantiles")
                                   : std::vector<double>{0.005, 0.001};
  const bool save_table = ctx.cfg.get_bool("abc.save_table", false);
  grf::RngStream root(ctx.seed);

  struct Row {
    std::string id;
    int true_model = 0;
    std::vector<double> post_m1;
    std::vector<long> kept;
    long wall_ms = 0;
  };
  std::vector<Row> rows(datasets.size());

  parallel_for(datasets.size(), ctx.threads, [&](std::size_t i) {
    Timer timer;
    const DatasetInfo& d = datasets[i];
    const grf::Lattice y = grf::load_lattice(d.file);
    const grf::IsingModel full{y.rows(), y.cols(), grf::Neighborhood::second};
    const std::vector<grf::GaussianPrior> priors{prior_for(ctx, 1), prior_for(ctx, 2)};
    grf::RngStream rng = root.fork("abc").fork(i);
    const grf::AbcTable table = grf::abc_reference_table(
        grf::suff_stats(y, grf::Neighborhood::second), full, priors, n_draws, aux, rng);

    std::vector<double> distances;
    distances.reserve(table.draws.size());
    for (const auto& dr : table.draws) distances.push_back(dr.distance);

    Row& row = rows[i];
    row.id = d.id;
    row.true_model = d.true_model;
    for (double q : quantiles) {
      const double eps = grf::select_tolerance(distances, q);
      const auto probs = grf::posterior_model_prob(table, eps, 2);
      long kept = 0;
      for (double x : distances) kept += x <= eps ? 1 : 0;
      row.post_m1.push_back(probs[0]);
      row.kept.push_back(kept);
    }
    if (save_table) grf::save_abc_table(table, 2, ctx.out_dir / ("abc_table_" + d.id + ".csv"));
    row.wall_ms = timer.ms();
  });

  std::ofstream out(ctx.out_dir / "abc_report.csv");
  out.precision(12);
  out << "id,true_model,exact_post_m1";
  for (double q : quantiles)
    out << ",post_m1_q" << q << ",kept_q" << q << ",log_bf_q" << q << ",bf_ratio_q" << q;
  out << ",seed,wall_ms,config_hash\n";
  for (const auto& r : rows) {
    const auto it = exact.find(r.id);
    const double exact_post = it != exact.end() ? it->second.post_m1 : std::nan("");
    const double exact_bf =
        it != exact.end() ? it->second.log_ev_m1 - it->second.log_ev_m2 : std::nan("");
    out << r.id << ',' << r.true_model << ',' << exact_post;
    for (std::size_t k = 0; k < quantiles.size(); ++k) {
      const double p = r.post_m1[k];
      // BF estimate from accepted-model counts; guard the empty cells
      const double log_bf = (p > 0.0 && p < 1.0) ? std::log(p / (1.0 - p)) : std::nan("");
      const double ratio = (it != exact.end() && std::isfinite(log_bf))
                               ? std::exp(exact_bf - log_bf)
                               : std::nan("");
      out << ',' << p << ',' << r.kept[k] << ',' << log_bf << ',' << ratio;
    }
    out << ',' << ctx.seed << ',' << r.wall_ms << ',' << ctx.config_hash << '\n';
  }
  write_figures_readme(ctx);
  std::cout << "wrote " << (ctx.out_dir / "abc_report.csv").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evidence and Bayes-factor estimation for Gibbs random fields"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out_dir;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "configuration file (TOML-style)")->required();
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--threads", threads, "worker threads for dataset-level parallelism");
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "generate Ising datasets + manifest");
  CLI::App* exact = app.add_subcommand("exact-evidence", "exact grid-oracle evidence per dataset");
  CLI::App* exchange = app.add_subcommand("exchange", "single-chain exchange posterior sampling");
  CLI::App* popx = app.add_subcommand("popx-evidence", "population-exchange evidence estimates");
  CLI::App* bf = app.add_subcommand("popx-bf", "direct bridged Bayes-factor estimation");
  CLI::App* abc = app.add_subcommand("abc", "ABC model-choice baseline");
  for (CLI::App* sub : {simulate, exact, exchange, popx, bf, abc}) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  try {
    const RunContext ctx = make_context(config_path, seed, threads, out_dir);
    if (simulate->parsed()) return cmd_simulate(ctx);
    if (exact->parsed()) return cmd_exact_evidence(ctx);
    if (exchange->parsed()) return cmd_exchange(ctx);
    if (popx->parsed()) return cmd_popx_evidence(ctx);
    if (bf->parsed()) return cmd_popx_bf(ctx);
    if (abc->parsed()) return cmd_abc(ctx);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
