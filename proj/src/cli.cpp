#include "rmstcea/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "rmstcea/asymptotics.hpp"
#include "rmstcea/cea.hpp"
#include "rmstcea/cox.hpp"
#include "rmstcea/csv.hpp"
#include "rmstcea/error.hpp"
#include "rmstcea/report.hpp"
#include "rmstcea/rmst.hpp"
#include "rmstcea/simlab.hpp"
#include "rmstcea/version.hpp"

namespace rmstcea {

namespace {

using nlohmann::json;

class UsageError : public Error {
 public:
  using Error::Error;
};

std::string shortest(double v) {
  char buf[40];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double to_number(const std::string& key, const std::string& text) {
  double v = 0.0;
  if (!parse_double(text, v)) throw UsageError("--" + key + ": '" + text + "' is not a number");
  return v;
}

std::vector<double> to_numbers(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& part : split(text, ',')) out.push_back(to_number(key, part));
  return out;
}

// Command-line flags layered over an optional JSON config file; flags win.
class Settings {
 public:
  std::map<std::string, std::string> flags;
  std::map<std::string, std::string> config;

  void load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw UsageError("config file must hold a JSON object");
    for (const auto& [k, v] : j.items()) {
      std::string key = k;
      std::replace(key.begin(), key.end(), '_', '-');
      config[key] = render(v);
    }
  }

  std::optional<std::string> get(const std::string& key) const {
    if (auto it = flags.find(key); it != flags.end()) return it->second;
    if (auto it = config.find(key); it != config.end()) return it->second;
    return std::nullopt;
  }
  bool has(const std::string& key) const { return get(key).has_value(); }
  std::string str(const std::string& key, const std::string& fallback) const { return get(key).value_or(fallback); }
  std::string need(const std::string& key) const {
    auto v = get(key);
    if (!v) throw UsageError("--" + key + " is required");
    return *v;
  }
  double num(const std::string& key) const { return to_number(key, need(key)); }
  double num(const std::string& key, double fallback) const {
    auto v = get(key);
    return v ? to_number(key, *v) : fallback;
  }
  std::vector<double> nums(const std::string& key) const { return to_numbers(key, need(key)); }

  std::map<std::string, std::string> merged() const {
    std::map<std::string, std::string> m = config;
    for (const auto& [k, v] : flags) m[k] = v;
    return m;
  }

 private:
  static std::string render(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return shortest(v.get<double>());
    if (v.is_array()) {
      std::string s;
      for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + render(v[k]);
      return s;
    }
    throw UsageError("config values must be strings, numbers, booleans or arrays");
  }
};

const std::set<std::string> kNotEchoed = {"config", "out", "format", "precision", "threads"};

void echo_config(Report& rep, const Settings& s) {
  for (const auto& [k, v] : s.merged()) {
    if (kNotEchoed.count(k)) continue;
    rep.config.emplace_back(k, k == "input" ? std::filesystem::path(v).filename().string() : v);
  }
}

// ---------------------------------------------------------------- parsing helpers

DelaySpec uniform_grid(const std::vector<double>& weights) {
  if (weights.size() != 10) throw UsageError("grid delay weights need 10 values");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw UsageError("grid delay weights must be >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw UsageError("grid delay weights sum to zero");
  std::vector<DelayAtom> atoms;
  for (int k = 0; k < 10; ++k) atoms.push_back({weights[static_cast<std::size_t>(k)] / total, 0.05 + 0.1 * k});
  return DelaySpec::discrete(std::move(atoms));
}

DelaySpec parse_delays(const std::string& text, const Dataset* data, int stratum) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (kind == "none") return DelaySpec::none();
  if (kind == "empirical") {
    if (!data) throw UsageError("--delays empirical needs an input dataset");
    std::vector<double> d = data->delays(stratum);
    if (d.empty()) throw UsageError("--delays empirical: group " + std::to_string(stratum) + " has no records");
    return DelaySpec::empirical(std::move(d));
  }
  if (kind == "fixed") return DelaySpec::fixed(to_number("delays", arg));
  if (kind == "uniform10") return uniform_grid(std::vector<double>(10, 1.0));
  if (kind == "grid") return uniform_grid(to_numbers("delays", arg));
  if (kind == "mixture") {
    const auto v = to_numbers("delays", arg);
    if (v.size() != 2) throw UsageError("--delays mixture:<zero-mass>,<rate>");
    return DelaySpec::mixture_exp(v[0], v[1]);
  }
  if (kind == "discrete") {
    std::vector<DelayAtom> atoms;
    for (const auto& part : split(arg, ',')) {
      const auto at = part.find('@');
      if (at == std::string::npos) throw UsageError("--delays discrete:<delay>@<prob>,...");
      atoms.push_back({to_number("delays", part.substr(at + 1)), to_number("delays", part.substr(0, at))});
    }
    return DelaySpec::discrete(std::move(atoms));
  }
  throw UsageError("unknown delay spec '" + text + "' (none, empirical, fixed:a, uniform10, grid:w1..w10, "
                   "discrete:d@p,..., mixture:z,rate)");
}

CovariateProfile parse_profile(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (kind == "observed") return CovariateProfile::observed();
  if (kind == "fixed") return CovariateProfile::fixed(arg.empty() ? std::vector<double>{} : to_numbers("profile", arg));
  if (kind == "weighted") {
    std::vector<ProfileAtom> atoms;
    for (const auto& part : split(arg, ',')) {
      const auto at = part.find('@');
      if (at == std::string::npos) throw UsageError("--profile weighted:<w>@<x1>/<x2>...,...");
      ProfileAtom a;
      a.weight = to_number("profile", part.substr(0, at));
      for (const auto& x : split(part.substr(at + 1), '/')) a.x.push_back(to_number("profile", x));
      atoms.push_back(std::move(a));
    }
    return CovariateProfile::weighted(std::move(atoms));
  }
  throw UsageError("unknown profile '" + text + "' (observed, fixed:x1,x2, weighted:w@x1/x2,...)");
}

Wedge parse_wedge(const std::string& s) {
  if (s == "min") return Wedge::Min;
  if (s == "max") return Wedge::Max;
  throw UsageError("--wedge must be min or max");
}

// ---------------------------------------------------------------- analysis pieces

struct Loaded {
  IngestResult input;
  CoxFit fit;
};

IngestResult load_input(const Settings& s) {
  ColumnMapping m;
  m.id = s.str("id-col", m.id);
  m.entry = s.str("entry-col", m.entry);
  m.exit = s.str("exit-col", m.exit);
  m.event = s.str("event-col", m.event);
  m.group = s.str("group-col", m.group);
  m.delay = s.str("delay-col", m.delay);
  m.time = s.str("time-col", m.time);
  if (auto cov = s.get("covariates")) {
    m.covariates_given = true;
    if (!cov->empty()) m.covariates = split(*cov, ',');
  }
  IngestOptions o;
  const std::string shape = s.str("shape", "auto");
  if (shape == "auto") o.shape = InputShape::Auto;
  else if (shape == "counting") o.shape = InputShape::CountingProcess;
  else if (shape == "raw") o.shape = InputShape::RawHistory;
  else throw UsageError("--shape must be auto, counting or raw");
  o.strict = s.str("lenient", "false") != "true";
  o.eta = s.num("eta", 0.0);
  try {
    return ingest_csv(s.need("input"), m, o);
  } catch (const RowError& e) {
    throw UsageError(std::string("input: ") + e.what());
  } catch (const PreconditionError& e) {
    throw UsageError(e.what());
  }
}

void add_fit_tables(Report& rep, const CoxFit& f, const std::vector<std::string>& names, double eta) {
  Table summary{"fit", {{"subjects", "", CellKind::Number}, {"events", "", CellKind::Number},
                        {"loglik", "", CellKind::Number}, {"loglik_null", "", CellKind::Number},
                        {"iterations", "", CellKind::Number}, {"max_score", "", CellKind::Number},
                        {"converged", "-", CellKind::Text}}, {}};
  summary.add_row({static_cast<double>(f.n_total), static_cast<double>(f.n_events), f.loglik, f.loglik_null,
                   static_cast<double>(f.iterations), f.max_score, f.converged ? "yes" : "no"});
  rep.tables.push_back(std::move(summary));

  Table coef{"coefficients", {{"term", "-", CellKind::Text}, {"estimate", "log-HR", CellKind::Number},
                              {"se", "log-HR", CellKind::Number}, {"hazard_ratio", "", CellKind::Number}}, {}};
  const Vector se = f.standard_errors();
  for (std::size_t d = 0; d < f.p; ++d) {
    const auto i = static_cast<Eigen::Index>(d);
    coef.add_row({names.at(d), f.beta[i], se[i], std::exp(f.beta[i])});
  }
  rep.tables.push_back(std::move(coef));

  Table base{"baseline", {{"group", "", CellKind::Number}, {"records", "", CellKind::Number},
                          {"events", "", CellKind::Number}, {"first_entry", "years", CellKind::Number},
                          {"cumhaz_at_eta", "", CellKind::Number}}, {}};
  for (const auto& [j, bh] : f.strata) {
    double events = 0.0;
    for (double d : bh.events) events += d;
    base.add_row({static_cast<double>(j), static_cast<double>(bh.n_records), events, bh.min_entry,
                  eta > 0.0 ? bh.cumhaz(eta) : std::nan("")});
  }
  rep.tables.push_back(std::move(base));
}

Loaded load_and_fit(const Settings& s, Report& rep) {
  Loaded l{load_input(s), {}};
  CoxConfig cfg;
  cfg.ridge = s.num("ridge", 0.0);
  cfg.max_iter = static_cast<int>(s.num("max-iter", cfg.max_iter));
  if (cfg.ridge > 0.0) rep.warnings.push_back("ridge penalty " + shortest(cfg.ridge) + " added to the information");
  l.fit = fit(l.input.dataset, cfg);
  add_fit_tables(rep, l.fit, l.input.covariate_names, s.num("eta", 0.0));
  return l;
}

struct ScenarioChoice {
  Scenario scenario;
  double time = 0.0;
  std::string delays;
};

ScenarioChoice scenario_choice(const Settings& s) {
  ScenarioChoice c;
  try {
    c.scenario = parse_scenario(s.need("scenario"));
  } catch (const PreconditionError& e) {
    throw UsageError(e.what());
  }
  const bool r = s.has("r"), a = s.has("a"), d = s.has("delays");
  switch (c.scenario) {
    case Scenario::Strt:
      if (a || d || !r) throw UsageError("scenario strt takes --r and neither --a nor --delays");
      c.time = s.num("r");
      break;
    case Scenario::Dly:
      if (r || d || !a) throw UsageError("scenario dly takes --a and neither --r nor --delays");
      c.time = s.num("a");
      break;
    case Scenario::Dst:
      if (r || a || !d) throw UsageError("scenario dst takes --delays and neither --r nor --a");
      c.delays = s.need("delays");
      break;
  }
  return c;
}

RmstEstimate estimate(const CoxFit& f, int j, const AtomTable& atoms, const ScenarioChoice& c, const DelaySpec& delays,
                      double eta) {
  switch (c.scenario) {
    case Scenario::Strt: return rmst_strt(f, j, atoms, c.time, eta);
    case Scenario::Dly: return rmst_dly(f, j, atoms, c.time, eta);
    case Scenario::Dst: return rmst_dst(f, j, atoms, delays, eta);
  }
  throw InvariantError("unhandled scenario");
}

Table rmst_table() {
  return {"rmst",
          {{"scenario", "-", CellKind::Text}, {"group", "", CellKind::Number}, {"lower", "years", CellKind::Number},
           {"eta", "years", CellKind::Number}, {"estimate", "years", CellKind::Number}, {"se", "years", CellKind::Number},
           {"ci_lower", "years", CellKind::Number}, {"ci_upper", "years", CellKind::Number},
           {"tail", "years", CellKind::Number}, {"tail_se", "years", CellKind::Number}},
          {}};
}

void add_rmst_row(Table& t, const RmstEstimate& e, const CoxFit& f, const VarianceOptions& vo, Report& rep) {
  double se = std::nan(""), tse = std::nan("");
  try {
    se = std::sqrt(rmst_variance(e, f, Component::Full, vo).variance);
    tse = std::sqrt(rmst_variance(e, f, Component::Tail, vo).variance);
  } catch (const UnsupportedError& ex) {
    rep.warnings.push_back(std::string("group ") + std::to_string(e.stratum) + ": " + ex.what());
  }
  const Interval ci = normal_interval(e.value, se);
  t.add_row({to_string(e.scenario), static_cast<double>(e.stratum), e.lower, e.eta, e.value, se, ci.lower, ci.upper,
             e.value_tail, tse});
  for (const auto& w : e.warnings) {
    const std::string msg = "group " + std::to_string(e.stratum) + ": " + w;
    if (std::find(rep.warnings.begin(), rep.warnings.end(), msg) == rep.warnings.end()) rep.warnings.push_back(msg);
  }
}

// ---------------------------------------------------------------- commands

void cmd_fit(const Settings& s, Report& rep) { load_and_fit(s, rep); }

struct RmstContext {
  Loaded loaded;
  AtomTable atoms;
  ScenarioChoice choice;
  DelaySpec delays;
  double eta = 0.0;
  int compare = 2;
  VarianceOptions vo;
};

RmstContext prepare_rmst(const Settings& s, Report& rep) {
  RmstContext ctx;
  ctx.choice = scenario_choice(s);
  ctx.eta = s.num("eta");
  ctx.compare = static_cast<int>(s.num("compare", 2.0));
  ctx.vo.wedge = parse_wedge(s.str("wedge", "min"));
  if (ctx.vo.wedge == Wedge::Max) rep.warnings.push_back("variance uses the max reading of the wedge convention");
  const CovariateProfile profile = parse_profile(s.str("profile", "observed"));
  ctx.loaded = load_and_fit(s, rep);
  const Dataset& data = ctx.loaded.input.dataset;
  if (ctx.choice.scenario == Scenario::Dst) {
    ctx.delays = parse_delays(ctx.choice.delays, &data, ctx.compare);
  }
  ctx.atoms = compress_atoms(resolve_profile(profile, data), data.p);
  return ctx;
}

void cmd_rmst(const Settings& s, Report& rep) {
  RmstContext ctx = prepare_rmst(s, rep);
  Table t = rmst_table();
  for (const auto& [j, bh] : ctx.loaded.fit.strata) {
    (void)bh;
    add_rmst_row(t, estimate(ctx.loaded.fit, j, ctx.atoms, ctx.choice, ctx.delays, ctx.eta), ctx.loaded.fit, ctx.vo, rep);
  }
  rep.tables.push_back(std::move(t));
}

std::vector<double> parse_grid(const std::string& key, const std::string& text) {
  // lo:hi:step or a comma list
  if (text.find(':') != std::string::npos) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw UsageError("--" + key + " takes lo:hi:step or a comma list");
    const double lo = to_number(key, parts[0]), hi = to_number(key, parts[1]), step = to_number(key, parts[2]);
    if (!(step > 0.0) || hi < lo) throw UsageError("--" + key + ": invalid range");
    std::vector<double> g;
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long k = 0; k <= n; ++k) g.push_back(lo + static_cast<double>(k) * step);
    return g;
  }
  return to_numbers(key, text);
}

void cmd_cea(const Settings& s, Report& rep) {
  CostSpec costs;
  costs.rates = s.nums("costs");
  costs.theta = s.num("theta");
  costs.currency = s.str("currency", "USD");
  RmstContext ctx = prepare_rmst(s, rep);
  const CoxFit& f = ctx.loaded.fit;
  if (ctx.compare < 2) throw UsageError("--compare must name a group other than 1");
  if (costs.rates.size() < static_cast<std::size_t>(ctx.compare)) {
    throw UsageError("--costs must list a rate for every group up to " + std::to_string(ctx.compare));
  }

  const RmstEstimate e1 = estimate(f, 1, ctx.atoms, ctx.choice, ctx.delays, ctx.eta);
  const RmstEstimate ej = estimate(f, ctx.compare, ctx.atoms, ctx.choice, ctx.delays, ctx.eta);
  Table t = rmst_table();
  add_rmst_row(t, e1, f, ctx.vo, rep);
  add_rmst_row(t, ej, f, ctx.vo, rep);
  rep.tables.push_back(std::move(t));

  const CeReport ce = cost_effectiveness(e1, ej, f, costs, {}, ctx.vo);
  const std::string per_year = costs.currency + "/life-year";
  const std::string cmp = std::to_string(ctx.compare) + " vs 1";

  Table tails{"tails", {{"comparison", "-", CellKind::Text}, {"mu1", "years", CellKind::Number},
                        {"muj", "years", CellKind::Number}, {"var1", "years^2", CellKind::Number},
                        {"varj", "years^2", CellKind::Number}, {"cov", "years^2", CellKind::Number}}, {}};
  tails.add_row({cmp, ce.tails.mu1, ce.tails.muj, ce.tails.var1, ce.tails.varj, ce.tails.cov});
  rep.tables.push_back(std::move(tails));

  const double nan = std::nan("");
  Table icer_t{"icer", {{"comparison", "-", CellKind::Text}, {"estimate", per_year, CellKind::Number},
                        {"se", per_year, CellKind::Number}, {"ci_lower", per_year, CellKind::Number},
                        {"ci_upper", per_year, CellKind::Number}}, {}};
  if (ce.icer_defined) icer_t.add_row({cmp, ce.icer.estimate, ce.icer.se, ce.icer.lower, ce.icer.upper});
  else icer_t.add_row({cmp, nan, nan, nan, nan});
  rep.tables.push_back(std::move(icer_t));

  Table inb_t{"inb", {{"comparison", "-", CellKind::Text}, {"theta", per_year, CellKind::Number},
                      {"estimate", costs.currency, CellKind::Number}, {"se", costs.currency, CellKind::Number},
                      {"ci_lower", costs.currency, CellKind::Number}, {"ci_upper", costs.currency, CellKind::Number}},
              {}};
  inb_t.add_row({cmp, costs.theta, ce.inb.estimate, ce.inb.se, ce.inb.lower, ce.inb.upper});
  rep.tables.push_back(std::move(inb_t));
  for (const auto& w : ce.warnings) {
    if (w.rfind("DegenerateDenominator", 0) == 0) rep.warnings.push_back(w);
  }

  if (auto grid = s.get("theta-grid")) {
    const auto thetas = parse_grid("theta-grid", *grid);
    Table curve{"inb_curve", {{"theta", per_year, CellKind::Number}, {"estimate", costs.currency, CellKind::Number},
                              {"se", costs.currency, CellKind::Number}, {"ci_lower", costs.currency, CellKind::Number},
                              {"ci_upper", costs.currency, CellKind::Number}}, {}};
    try {
      for (const auto& pt : inb_curve(ce.tails, costs.rate(1), costs.rate(ctx.compare), thetas)) {
        curve.add_row({pt.theta, pt.inb.estimate, pt.inb.se, pt.inb.lower, pt.inb.upper});
      }
    } catch (const PreconditionError& e) {
      throw UsageError(std::string("--theta-grid: ") + e.what());
    }
    rep.tables.push_back(std::move(curve));
  }
  if (auto grid = s.get("eta-grid")) {
    Table curve{"icer_curve", {{"eta", "years", CellKind::Number}, {"estimate", per_year, CellKind::Number},
                               {"se", per_year, CellKind::Number}, {"ci_lower", per_year, CellKind::Number},
                               {"ci_upper", per_year, CellKind::Number}}, {}};
    for (double eta : parse_grid("eta-grid", *grid)) {
      const RmstEstimate a = estimate(f, 1, ctx.atoms, ctx.choice, ctx.delays, eta);
      const RmstEstimate b = estimate(f, ctx.compare, ctx.atoms, ctx.choice, ctx.delays, eta);
      const CeReport r = cost_effectiveness(a, b, f, costs, {}, ctx.vo);
      if (r.icer_defined) curve.add_row({eta, r.icer.estimate, r.icer.se, r.icer.lower, r.icer.upper});
      else curve.add_row({eta, nan, nan, nan, nan});
    }
    rep.tables.push_back(std::move(curve));
  }
}

std::vector<StudyScenario> parse_study_scenarios(const std::string& text) {
  std::vector<StudyScenario> out;
  for (const auto& item : split(text, ',')) {
    const auto colon = item.find(':');
    const std::string kind = item.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : item.substr(colon + 1);
    if (kind == "nodelay" || kind == "no-delay") out.push_back(StudyScenario::no_delay());
    else if (kind == "strt") out.push_back(StudyScenario::strt(to_number("scenarios", arg)));
    else if (kind == "dly") out.push_back(StudyScenario::dly(to_number("scenarios", arg)));
    else if (kind == "dst") out.push_back(StudyScenario::dst(parse_delays(arg.empty() ? "uniform10" : arg, nullptr, 2),
                                                             "dst(" + (arg.empty() ? std::string("uniform10") : arg) + ")"));
    else throw UsageError("unknown study scenario '" + item + "' (nodelay, strt:r, dly:a, dst[:delays])");
  }
  if (out.empty()) throw UsageError("--scenarios is empty");
  return out;
}

void cmd_simulate(const Settings& s, Report& rep) {
  SimDesign d;
  d.n = static_cast<std::size_t>(s.num("n", static_cast<double>(d.n)));
  d.lambda01 = s.num("lambda01", d.lambda01);
  if (s.has("hr") && s.has("lambda02")) throw UsageError("give either --hr or --lambda02, not both");
  d.lambda02 = s.has("hr") ? s.num("hr") * d.lambda01 : s.num("lambda02", d.lambda02);
  d.beta = s.num("beta", d.beta);
  d.covariate_p = s.num("covariate-p", d.covariate_p);
  d.censor_rate = s.num("censor-rate", d.censor_rate);
  d.delay_fraction = s.num("delay-fraction", d.delay_fraction);
  d.delay_lo = s.num("delay-lo", d.delay_lo);
  d.delay_hi = s.num("delay-hi", d.delay_hi);
  if (auto dd = s.get("delay-dist")) d.delay_dist = parse_delays(*dd, nullptr, 2);
  d.weibull_shape = s.num("weibull-shape", d.weibull_shape);
  d.eta = s.num("eta", d.eta);
  if (s.has("costs")) d.costs.rates = s.nums("costs");
  d.costs.theta = s.num("theta", d.costs.theta);
  d.replicates = static_cast<std::size_t>(s.num("replicates", static_cast<double>(d.replicates)));
  if (auto seed = s.get("seed")) {
    try {
      std::size_t used = 0;
      d.seed = std::stoull(*seed, &used);
      if (used != seed->size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw UsageError("--seed must be a non-negative integer");
    }
  }
  const auto scenarios = parse_study_scenarios(s.str("scenarios", "nodelay"));
  try {
    d.validate();
  } catch (const PreconditionError& e) {
    throw UsageError(std::string("design: ") + e.what());
  }
  StudyOptions opts;
  opts.threads = static_cast<std::size_t>(s.num("threads", 0.0));
  const StudyResult res = run_study(d, scenarios, opts);

  Table study{"study", {{"scenario", "-", CellKind::Text}, {"estimand", "-", CellKind::Text},
                        {"units", "-", CellKind::Text}, {"truth", "", CellKind::Number},
                        {"mean", "", CellKind::Number}, {"rel_bias", "%", CellKind::Number},
                        {"mean_se", "", CellKind::Number}, {"sd", "", CellKind::Number},
                        {"se_rel_bias", "%", CellKind::Number}, {"coverage", "", CellKind::Number},
                        {"used", "", CellKind::Number}, {"failed", "", CellKind::Number}}, {}};
  for (const auto& r : res.rows) {
    const std::string units = r.estimand == "icer" ? d.costs.currency + "/life-year"
                              : r.estimand == "inb" ? d.costs.currency
                                                    : "years";
    study.add_row({r.scenario, r.estimand, units, r.truth, r.mean, r.rel_bias_pct, r.mean_se, r.sd, r.se_rel_bias_pct,
                   r.coverage, static_cast<double>(r.used), static_cast<double>(r.failed)});
  }
  rep.tables.push_back(std::move(study));

  Table diag{"diagnostics", {{"censoring_group1", "", CellKind::Number}, {"censoring_group2", "", CellKind::Number},
                             {"missing_treatment", "", CellKind::Number}, {"failure_rate", "", CellKind::Number}}, {}};
  diag.add_row({res.diagnostics.censoring1, res.diagnostics.censoring2, res.diagnostics.missing_treatment,
                res.diagnostics.failure_rate});
  rep.tables.push_back(std::move(diag));

  Table theory{"theory", {{"scenario", "-", CellKind::Text}, {"mu1", "years", CellKind::Number},
                          {"mu2", "years", CellKind::Number}, {"mu1_tail", "years", CellKind::Number},
                          {"mu2_tail", "years", CellKind::Number}, {"icer", d.costs.currency + "/life-year", CellKind::Number},
                          {"inb", d.costs.currency, CellKind::Number},
                          {"icer_limit", d.costs.currency + "/life-year", CellKind::Number}}, {}};
  for (const auto& sc : scenarios) {
    try {
      const TheoreticalValues tv = theoretical_values(d, sc);
      theory.add_row({sc.label, tv.mu1, tv.mu2, tv.mu1_tail, tv.mu2_tail, tv.icer, tv.inb, tv.icer_limit});
    } catch (const NoClosedFormError&) {
    }
  }
  rep.tables.push_back(std::move(theory));
  for (const auto& w : res.warnings) rep.warnings.push_back(w);
}

// ---------------------------------------------------------------- front end

void add_mapping_options(CLI::App* sub, std::map<std::string, std::string>& store) {
  sub->add_option("--input", store["input"], "CSV file (counting-process or raw-history shape)");
  sub->add_option("--shape", store["shape"], "auto | counting | raw");
  sub->add_option("--id-col", store["id-col"], "subject id column [id]");
  sub->add_option("--entry-col", store["entry-col"], "entry time column [entry]");
  sub->add_option("--exit-col", store["exit-col"], "exit time column [exit]");
  sub->add_option("--event-col", store["event-col"], "event indicator column (0/1) [event]");
  sub->add_option("--group-col", store["group-col"], "treatment group column [group]");
  sub->add_option("--delay-col", store["delay-col"], "delay / switch-time column [delay]");
  sub->add_option("--time-col", store["time-col"], "raw-history follow-up column [time]");
  sub->add_option("--covariates", store["covariates"], "comma list of covariate columns [all unmapped]");
  sub->add_option("--lenient", store["lenient"], "true: accept yes/no/true/false events");
  sub->add_option("--ridge", store["ridge"], "ridge added to the information [0]");
  sub->add_option("--max-iter", store["max-iter"], "Newton iterations [50]");
  sub->add_option("--eta", store["eta"], "time horizon (years)");
}

void add_rmst_options(CLI::App* sub, std::map<std::string, std::string>& store) {
  sub->add_option("--scenario", store["scenario"], "strt | dly | dst");
  sub->add_option("--r", store["r"], "truncation time (strt)");
  sub->add_option("--a", store["a"], "treatment delay (dly)");
  sub->add_option("--delays", store["delays"],
                  "delay distribution (dst): empirical | fixed:a | uniform10 | grid:w1,..,w10 | discrete:d@p,.. | "
                  "mixture:z,rate");
  sub->add_option("--profile", store["profile"], "observed | fixed:x1,x2 | weighted:w@x1/x2,...");
  sub->add_option("--compare", store["compare"], "comparator group [2]");
  sub->add_option("--wedge", store["wedge"], "min | max reading of the variance double sum [min]");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cost-effectiveness analysis with restricted mean survival time"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::map<std::string, std::string> store;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", store["config"], "JSON file with default values for any flag");
    sub->add_option("--out", store["out"], "report path [stdout]");
    sub->add_option("--format", store["format"], "human | jsonl [human]");
    sub->add_option("--precision", store["precision"], "significant digits in the human format [6]");
  };

  CLI::App* fit_cmd = app.add_subcommand("fit", "fit the stratified Cox model");
  common(fit_cmd);
  add_mapping_options(fit_cmd, store);

  CLI::App* rmst_cmd = app.add_subcommand("rmst", "RMST per group under a scenario");
  common(rmst_cmd);
  add_mapping_options(rmst_cmd, store);
  add_rmst_options(rmst_cmd, store);

  CLI::App* cea_cmd = app.add_subcommand("cea", "ICER and INB for a comparator against group 1");
  common(cea_cmd);
  add_mapping_options(cea_cmd, store);
  add_rmst_options(cea_cmd, store);
  cea_cmd->add_option("--costs", store["costs"], "cost per person-year by group, comma list");
  cea_cmd->add_option("--theta", store["theta"], "willingness to pay per life-year");
  cea_cmd->add_option("--currency", store["currency"], "currency label [USD]");
  cea_cmd->add_option("--theta-grid", store["theta-grid"], "INB curve grid, lo:hi:step or list");
  cea_cmd->add_option("--eta-grid", store["eta-grid"], "ICER-vs-horizon grid, lo:hi:step or list");

  CLI::App* sim_cmd = app.add_subcommand("simulate", "Monte Carlo bias and coverage study");
  common(sim_cmd);
  for (const char* name : {"n", "lambda01", "lambda02", "hr", "beta", "covariate-p", "censor-rate", "delay-fraction",
                           "delay-lo", "delay-hi", "delay-dist", "weibull-shape", "eta", "costs", "theta",
                           "replicates", "seed", "scenarios", "threads"}) {
    sim_cmd->add_option(std::string("--") + name, store[name]);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  CLI::App* cmd = app.get_subcommands().front();
  Settings settings;
  for (const auto* opt : cmd->get_options()) {
    if (opt->count() == 0) continue;
    const std::string name = opt->get_name(false, true);
    const std::string key = name.rfind("--", 0) == 0 ? name.substr(2) : name;
    settings.flags[key] = store[key];
  }

  Report rep;
  rep.command = cmd->get_name();
  ReportFormat format = ReportFormat::Human;
  EmitOptions emit;
  std::string out_path;
  int status = kExitOk;
  try {
    if (auto cfg = settings.get("config")) settings.load_config(*cfg);
    try {
      format = parse_format(settings.str("format", "human"));
    } catch (const PreconditionError& e) {
      throw UsageError(e.what());
    }
    emit.precision = static_cast<int>(settings.num("precision", 6.0));
    if (emit.precision < 1 || emit.precision > 17) throw UsageError("--precision must lie in 1..17");
    out_path = settings.str("out", "");
    echo_config(rep, settings);
    try {
      if (rep.command == "fit") cmd_fit(settings, rep);
      else if (rep.command == "rmst") cmd_rmst(settings, rep);
      else if (rep.command == "cea") cmd_cea(settings, rep);
      else cmd_simulate(settings, rep);
    } catch (const UsageError&) {
      throw;
    } catch (const Error& e) {
      rep.status = "failed";
      rep.error = e.what();
      status = kExitEstimation;
      err << "rmstcea: estimation failed: " << e.what() << "\n";
    }
  } catch (const UsageError& e) {
    err << "rmstcea " << rep.command << ": " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (out_path.empty()) out << emit_report(rep, format, emit);
    else write_report(rep, out_path, format, emit);
  } catch (const Error& e) {
    err << "rmstcea: " << e.what() << "\n";
    return kExitUsage;
  }
  return status;
}

}  // namespace rmstcea
