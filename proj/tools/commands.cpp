#include "commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "manifest.hpp"
#include "ssaam/causal.hpp"
#include "ssaam/cpd.hpp"
#include "ssaam/data.hpp"
#include "ssaam/error.hpp"
#include "ssaam/report.hpp"
#include "ssaam/synth.hpp"

namespace ssaam::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
};

fs::path stage_dir(const Globals& g, std::string_view stage) {
  const fs::path dir = output_root(g.out) / stage;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::MissingFile, fmt::format("cannot create {}: {}", dir.string(), ec.message()));
  return dir;
}

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::MissingFile, fmt::format("cannot write {}", path.string()));
  out << text;
}

template <class Writer>
std::string to_string(Writer&& w) {
  std::ostringstream s;
  w(s);
  return s.str();
}

std::string_view agg_name(sentiment::Aggregation a) { return a == sentiment::Aggregation::Sum ? "sum" : "mean"; }

sentiment::Aggregation parse_agg(std::string_view name) {
  if (name == "sum") return sentiment::Aggregation::Sum;
  if (name == "mean") return sentiment::Aggregation::Mean;
  throw Error(ErrorCode::InvalidConfig, fmt::format("aggregation '{}' is not sum or mean", name));
}

// ---- polarity ---------------------------------------------------------------

struct PolarityArgs {
  std::string scores;
  std::string agg = "sum";
};

int cmd_polarity(const Globals& g, const PolarityArgs& a, std::ostream& out) {
  const auto agg = parse_agg(a.agg);
  const auto scores = data::load_score_table(a.scores);
  const auto index = sentiment::build_polarity_index(scores, agg);

  std::vector<double> pll;
  pll.reserve(scores.rows.size());
  for (const auto& r : scores.rows) pll.push_back(r.pll);
  const auto q = sentiment::compute_quartiles(pll);

  const fs::path dir = stage_dir(g, "polarity");
  write_text(dir / "index.csv", to_string([&](std::ostream& s) { data::write_series(s, index, "index"); }));

  auto m = make_manifest("polarity", json{{"agg", a.agg}}.dump(), g.seed.value_or(0));
  add_input(m, a.scores);
  record_outputs(m, dir);
  write_manifest(m, dir);
  out << fmt::format("polarity: {} sentences, {} days, q1={}, q3={}, agg={} -> {}\n", scores.rows.size(),
                     index.size(), q.q1, q.q3, a.agg, (dir / "index.csv").string());
  return 0;
}

// ---- causal -----------------------------------------------------------------

struct CausalArgs {
  std::string prices;
  std::string index;
  int lag = 1;
  double threshold = 0.05;
};

int cmd_causal(const Globals& g, const CausalArgs& a, std::ostream& out) {
  const auto prices = data::load_price_table(a.prices);
  const auto index = data::load_series(a.index);
  const auto panel = data::align_by_date(index, data::build_equal_weight_portfolio(prices));

  causal::IcaOptions ica;
  ica.seed = g.seed.value_or(0);
  const auto graph = causal::var_lingam(panel, a.lag, a.threshold, ica);
  const auto lead = causal::leading_effect(graph, "index", "portfolio");
  const std::string report = causal::format_lead_report(graph, lead, "index", "portfolio");

  const fs::path dir = stage_dir(g, "causal");
  write_text(dir / "graph.json", causal::graph_to_json(graph));
  write_text(dir / "lead_report.txt", report);

  auto m = make_manifest("causal", json{{"lag", a.lag}, {"threshold", a.threshold}}.dump(), ica.seed);
  add_input(m, a.prices);
  add_input(m, a.index);
  record_outputs(m, dir);
  write_manifest(m, dir);
  out << fmt::format("causal: {} aligned days, lag {}\n", panel.size(), a.lag) << report;
  for (const auto& w : graph.warnings) out << "warning: " << w << "\n";
  return 0;
}

// ---- cpd --------------------------------------------------------------------

struct CpdArgs {
  std::string index;
  std::size_t regimes = 5;
  std::size_t min_size = 2;
};

int cmd_cpd(const Globals& g, const CpdArgs& a, std::ostream& out) {
  if (a.regimes == 0) throw Error(ErrorCode::InvalidConfig, "--regimes must be >= 1");
  const auto index = data::load_series(a.index);
  const auto regimes = cpd::segment_regimes(index.values, a.regimes, a.min_size);

  std::string csv = "start_date,end_date,trend\n";
  for (const auto& r : regimes)
    csv += fmt::format("{},{},{}\n", index.dates[r.start].iso(), index.dates[r.end - 1].iso(),
                       cpd::trend_name(r.trend));
  const fs::path dir = stage_dir(g, "cpd");
  write_text(dir / "regimes.csv", csv);

  auto m = make_manifest("cpd", json{{"regimes", a.regimes}, {"min_size", a.min_size}}.dump(), g.seed.value_or(0));
  add_input(m, a.index);
  record_outputs(m, dir);
  write_manifest(m, dir);
  out << fmt::format("cpd: {} regimes, {} breakpoints -> {}\n", regimes.size(), regimes.size() - 1,
                     (dir / "regimes.csv").string());
  return 0;
}

// ---- backtest ---------------------------------------------------------------

struct BacktestArgs {
  std::string config;
  bool dry_run = false;
  bool walk_forward = false;
};

json resolved(const BacktestConfig& c) {
  json j;
  j["prices"] = c.prices.generic_string();
  if (c.index) j["index"] = c.index->generic_string();
  if (c.scores) j["scores"] = c.scores->generic_string();
  j["aggregation"] = agg_name(c.aggregation);
  std::vector<std::string> names;
  for (auto k : c.strategies) names.emplace_back(backtest::strategy_name(k));
  j["strategies"] = names;
  j["periods"] = c.periods;
  j["regimes"] = c.regimes;
  j["alpha"] = c.alpha;
  j["mu_target"] = c.mu_target ? json(*c.mu_target) : json(nullptr);
  j["evar_cap_margin"] = c.evar_cap_margin;
  j["lookback_days"] = c.lookback_days;
  j["initial_capital"] = c.initial_capital;
  j["seed"] = c.seed;
  j["walk_forward"] = c.walk_forward;
  return j;
}

}  // namespace

backtest::GridInputs load_inputs(const BacktestConfig& c) {
  backtest::GridInputs in;
  const auto prices = data::load_price_table(c.prices);
  data::DatedSeries index;
  if (c.index)
    index = data::load_series(*c.index);
  else
    index = sentiment::build_polarity_index(data::load_score_table(*c.scores), c.aggregation);
  const auto panel = data::align_by_date(index, data::build_equal_weight_portfolio(prices));
  in.prices = data::restrict_dates(prices, panel.dates);
  in.index = panel.index;
  in.lookback_days = c.lookback_days;
  in.initial_capital = c.initial_capital;
  in.walk_forward = c.walk_forward;
  return in;
}

namespace {

std::string file_label(const backtest::StrategyConfig& s) {
  std::string label = config_label(s);
  for (char& ch : label)
    if (ch == '/') ch = '_';
  return label;
}

std::string curves_csv(const std::vector<backtest::PerfReport>& results) {
  std::string csv = "date";
  for (const auto& r : results) csv += "," + config_label(r.strategy);
  csv += "\n";
  const auto& dates = results.front().curve.dates;
  for (const auto& r : results)
    if (r.curve.dates != dates) throw Error(ErrorCode::InvalidArgument, "equity curves do not share a calendar");
  for (std::size_t t = 0; t < dates.size(); ++t) {
    csv += dates[t].iso();
    for (const auto& r : results) csv += fmt::format(",{}", r.curve.values[t]);
    csv += "\n";
  }
  return csv;
}

std::string trades_csv(const std::vector<backtest::PerfReport>& results) {
  std::string csv = "strategy,date,mode,value,turnover\n";
  for (const auto& r : results)
    for (const auto& t : r.curve.trades) {
      const double turnover = (t.new_weights - t.old_weights).cwiseAbs().sum();
      csv += fmt::format("{},{},{},{},{}\n", config_label(r.strategy), t.date.iso(),
                         t.mode ? backtest::mode_name(*t.mode) : "seed", t.value_after, turnover);
    }
  return csv;
}

// Target weights after every trade, `date,ticker,weight`.
std::string weights_csv(const backtest::PerfReport& r, const std::vector<std::string>& tickers) {
  std::string csv = "date,ticker,weight\n";
  for (const auto& t : r.curve.trades)
    for (std::size_t i = 0; i < tickers.size(); ++i)
      csv += fmt::format("{},{},{}\n", t.date.iso(), tickers[i], t.new_weights(static_cast<Eigen::Index>(i)));
  return csv;
}

int cmd_backtest(const Globals& g, const BacktestArgs& a, std::ostream& out) {
  BacktestConfig config = load_backtest_config(a.config);
  if (a.walk_forward) config.walk_forward = true;
  if (g.seed) config.seed = *g.seed;
  const auto configs = expand_grid(config);
  const auto inputs = load_inputs(config);

  if (a.dry_run) {
    for (const auto& s : configs) {
      const auto schedule = backtest::schedule_for(inputs, s);
      out << fmt::format("{}: {} entries\n", config_label(s), schedule.entries.size());
      for (const auto& e : schedule.entries) {
        const bool cp = e.source == backtest::EntrySource::ChangePoint;
        out << fmt::format("  {} {}{}\n", e.date.iso(), cp ? "change-point" : "periodic",
                           e.trend ? fmt::format(" {}", cpd::trend_name(*e.trend)) : "");
      }
    }
    return 0;
  }

  const auto results = backtest::run_grid(inputs, configs, Exec::Parallel, g.jobs);
  const auto tables = report::report_grid(results);
  const std::string cpd_text = report::format_text(tables.cpd, "Regime-switching EVaR strategies");
  const std::string cmp_text = report::format_text(tables.comparison, "Comparison strategies");

  const fs::path dir = stage_dir(g, "backtest");
  write_text(dir / "cpd_table.txt", cpd_text);
  write_text(dir / "cpd_table.csv", report::format_csv(tables.cpd));
  write_text(dir / "comparison_table.txt", cmp_text);
  write_text(dir / "comparison_table.csv", report::format_csv(tables.comparison));
  write_text(dir / "curves.csv", curves_csv(results));
  write_text(dir / "trades.csv", trades_csv(results));
  std::string warnings;
  for (const auto& r : results)
    for (const auto& w : r.curve.warnings) warnings += fmt::format("{}: {}\n", config_label(r.strategy), w);
  write_text(dir / "warnings.log", warnings);
  for (const auto& r : results) {
    write_text(dir / "curves" / (file_label(r.strategy) + ".csv"), report::format_curve(r.curve));
    write_text(dir / "weights" / (file_label(r.strategy) + ".csv"), weights_csv(r, inputs.prices.tickers));
  }

  auto m = make_manifest("backtest", resolved(config).dump(), config.seed);
  add_input(m, a.config);
  add_input(m, config.prices);
  if (config.index) add_input(m, *config.index);
  if (config.scores) add_input(m, *config.scores);
  record_outputs(m, dir);
  write_manifest(m, dir);

  if (!tables.cpd.rows.empty()) out << cpd_text << "\n";
  if (!tables.comparison.rows.empty()) out << cmp_text << "\n";
  out << fmt::format("backtest: {} runs, {} rebalance warnings -> {}\n", results.size(),
                     std::count(warnings.begin(), warnings.end(), '\n'), dir.string());
  return 0;
}

// ---- synth ------------------------------------------------------------------

struct SynthArgs {
  int days = 1250;
  int assets = 10;
};

int cmd_synth(const Globals& g, const SynthArgs& a, std::ostream& out) {
  synth::DatasetOptions o;
  o.n_days = a.days;
  o.n_assets = a.assets;
  o.seed = g.seed.value_or(o.seed);
  const auto d = synth::make_dataset(o);

  const fs::path dir = stage_dir(g, "synth");
  write_text(dir / "prices.csv", to_string([&](std::ostream& s) { data::write_price_table(s, d.prices); }));
  write_text(dir / "scores.csv", to_string([&](std::ostream& s) { data::write_score_table(s, d.scores); }));
  data::DatedSeries latent{d.prices.dates, d.sentiment};
  write_text(dir / "sentiment.csv", to_string([&](std::ostream& s) { data::write_series(s, latent, "sentiment"); }));
  const json config{{"prices", "prices.csv"}, {"scores", "scores.csv"}, {"seed", o.seed}};
  write_text(dir / "config.json", config.dump(2) + "\n");

  auto m = make_manifest("synth", json{{"days", a.days}, {"assets", a.assets}}.dump(), o.seed);
  record_outputs(m, dir);
  write_manifest(m, dir);
  out << fmt::format("synth: {} assets, {} days, {} sentences -> {}\n", a.assets, a.days, d.scores.rows.size(),
                     dir.string());
  return 0;
}

template <class T>
T get(const json& j, std::string_view key) {
  try {
    return j.at(std::string(key)).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, fmt::format("field '{}': {}", key, e.what()));
  }
}

}  // namespace

BacktestConfig load_backtest_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, fmt::format("{}: {}", path.string(), e.what()));
  }
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");

  static const std::vector<std::string> known{"prices",  "index",  "scores",         "aggregation",     "strategies",
                                              "periods", "regimes", "alpha",         "mu_target",       "evar_cap_margin",
                                              "lookback_days",     "initial_capital", "seed", "walk_forward"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw Error(ErrorCode::InvalidConfig, fmt::format("unknown field '{}'", key));

  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

  BacktestConfig c;
  if (!j.contains("prices")) throw Error(ErrorCode::InvalidConfig, "missing field 'prices'");
  c.prices = resolve(get<std::string>(j, "prices"));
  if (j.contains("index")) c.index = resolve(get<std::string>(j, "index"));
  if (j.contains("scores")) c.scores = resolve(get<std::string>(j, "scores"));
  if (!c.index && !c.scores) throw Error(ErrorCode::InvalidConfig, "need 'index' or 'scores'");
  if (j.contains("aggregation")) c.aggregation = parse_agg(get<std::string>(j, "aggregation"));

  if (j.contains("strategies")) {
    for (const auto& name : get<std::vector<std::string>>(j, "strategies"))
      c.strategies.push_back(backtest::parse_strategy(name));
  } else {
    c.strategies = {backtest::StrategyKind::CpdEvarPlusPlus, backtest::StrategyKind::CpdEvarPlus,
                    backtest::StrategyKind::Evar, backtest::StrategyKind::Cvar, backtest::StrategyKind::Mv};
  }
  if (c.strategies.empty()) throw Error(ErrorCode::InvalidConfig, "'strategies' is empty");
  if (j.contains("periods")) c.periods = get<std::vector<std::size_t>>(j, "periods");
  if (j.contains("regimes")) c.regimes = get<std::vector<std::size_t>>(j, "regimes");
  if (j.contains("alpha")) c.alpha = get<double>(j, "alpha");
  if (j.contains("mu_target") && !j.at("mu_target").is_null()) c.mu_target = get<double>(j, "mu_target");
  if (j.contains("evar_cap_margin")) c.evar_cap_margin = get<double>(j, "evar_cap_margin");
  if (j.contains("lookback_days")) c.lookback_days = get<std::size_t>(j, "lookback_days");
  if (j.contains("initial_capital")) c.initial_capital = get<double>(j, "initial_capital");
  if (j.contains("seed")) c.seed = get<std::uint64_t>(j, "seed");
  if (j.contains("walk_forward")) c.walk_forward = get<bool>(j, "walk_forward");

  if (c.periods.empty()) throw Error(ErrorCode::InvalidConfig, "'periods' is empty");
  const bool any_cpd = std::any_of(c.strategies.begin(), c.strategies.end(), backtest::is_cpd);
  if (any_cpd && c.regimes.empty()) throw Error(ErrorCode::InvalidConfig, "'regimes' is empty");
  return c;
}

std::vector<backtest::StrategyConfig> expand_grid(const BacktestConfig& c) {
  std::vector<backtest::StrategyConfig> grid;
  auto make = [&](backtest::StrategyKind k, std::size_t period, std::optional<std::size_t> regimes) {
    backtest::StrategyConfig s{k, period, regimes, c.alpha, c.mu_target, c.evar_cap_margin};
    backtest::validate(s);
    grid.push_back(s);
  };
  for (std::size_t period : c.periods)
    for (std::size_t regimes : c.regimes)
      for (auto k : c.strategies)
        if (backtest::is_cpd(k)) make(k, period, regimes);
  for (std::size_t period : c.periods)
    for (auto k : c.strategies)
      if (!backtest::is_cpd(k)) make(k, period, std::nullopt);
  return grid;
}

std::string config_label(const backtest::StrategyConfig& s) {
  if (s.n_regimes) return fmt::format("{}/{}/{}", backtest::strategy_name(s.kind), s.period_days, *s.n_regimes);
  return fmt::format("{}/{}", backtest::strategy_name(s.kind), s.period_days);
}

fs::path output_root(const std::optional<std::string>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("SSAAM_OUT"); env && *env) return env;
  return "out";
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sentiment-driven regime-switching EVaR portfolio pipeline", "ssaam"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--out", g.out, "Output root (default $SSAAM_OUT or ./out)");
  app.add_option("--seed", g.seed, "Seed for every random component");
  app.add_option("--jobs", g.jobs, "Threads for the backtest grid (0 = OpenMP default)")->check(CLI::NonNegativeNumber);

  PolarityArgs pa;
  auto* polarity = app.add_subcommand("polarity", "Daily polarity index from sentence scores");
  polarity->add_option("scores", pa.scores, "Score CSV (date,sentence_id,pll)")->required();
  polarity->add_option("--agg", pa.agg, "Daily aggregation")->check(CLI::IsMember({"sum", "mean"}));

  CausalArgs ca;
  auto* causal = app.add_subcommand("causal", "VAR-LiNGAM lead test of the index on the portfolio");
  causal->add_option("prices", ca.prices, "Price CSV")->required();
  causal->add_option("index", ca.index, "Polarity index CSV")->required();
  causal->add_option("--lag", ca.lag, "VAR lag order")->check(CLI::PositiveNumber);
  causal->add_option("--threshold", ca.threshold, "Edge pruning threshold")->check(CLI::NonNegativeNumber);

  CpdArgs da;
  auto* cpd_cmd = app.add_subcommand("cpd", "Binary segmentation of the index into trend regimes");
  cpd_cmd->add_option("index", da.index, "Polarity index CSV")->required();
  cpd_cmd->add_option("--regimes", da.regimes, "Number of regimes");
  cpd_cmd->add_option("--min-size", da.min_size, "Minimum regime length")->check(CLI::PositiveNumber);

  BacktestArgs ba;
  auto* bt = app.add_subcommand("backtest", "Strategy grid backtest and report tables");
  bt->add_option("config", ba.config, "Run config JSON")->required();
  bt->add_flag("--dry-run", ba.dry_run, "Print the resolved schedules and exit");
  bt->add_flag("--walk-forward", ba.walk_forward, "Detect change points from past data only");

  SynthArgs sa;
  auto* syn = app.add_subcommand("synth", "Write a seeded synthetic price and score dataset");
  syn->add_option("--days", sa.days, "Trading days")->check(CLI::PositiveNumber);
  syn->add_option("--assets", sa.assets, "Number of assets")->check(CLI::PositiveNumber);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (polarity->parsed()) return cmd_polarity(g, pa, out);
    if (causal->parsed()) return cmd_causal(g, ca, out);
    if (cpd_cmd->parsed()) return cmd_cpd(g, da, out);
    if (bt->parsed()) return cmd_backtest(g, ba, out);
    if (syn->parsed()) return cmd_synth(g, sa, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace ssaam::cli
