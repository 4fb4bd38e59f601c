#include "bellcert/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bellcert/core.hpp"
#include "bellcert/general.hpp"
#include "bellcert/io.hpp"
#include "bellcert/polytope.hpp"
#include "bellcert/simulate.hpp"
#include "bellcert/tails.hpp"
#include "bellcert/winlose.hpp"

namespace bellcert::cli {

using nlohmann::json;

namespace {

constexpr const char* kSchema = "bellcert/1";
constexpr std::size_t kGridCap = 1'000'000;

// Rounds to the printed precision so JSON and text agree digit for digit.
json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return std::strtod(format_number(v).c_str(), nullptr);
}

std::string kind_name(GameKind k) { return k == GameKind::win_lose ? "win_lose" : "general"; }

std::string strategy_text(const DeterministicStrategy& s) {
  std::string out;
  for (std::size_t k = 0; k < s.outputs.size(); ++k) {
    out += k ? " | " : "";
    for (std::size_t x = 0; x < s.outputs[k].size(); ++x) out += (x ? " " : "") + std::to_string(s.outputs[k][x]);
  }
  return out;
}

json params_json(const PValueReport& r) {
  if (const auto* w = std::get_if<WinLoseBound>(&r.params)) {
    return {{"beta_win", num(w->beta_win)},
            {"provenance", to_string(w->provenance)},
            {"tau_a", num(w->bias.tau_a)},
            {"tau_b", num(w->bias.tau_b)}};
  }
  const auto& g = std::get<GeneralGameParams>(r.params);
  return {{"s_min", num(g.s_min)},
          {"s_max", num(g.s_max)},
          {"beta_max", num(g.beta_max)},
          {"beta_min", num(g.beta_min)},
          {"gamma_hat", num(g.gamma_hat())}};
}

json report_json(const PValueReport& r) {
  json j = {{"method", to_string(r.method)},
            {"n", r.n},
            {"statistic", num(r.statistic)},
            {"p_value", num(r.p_value)},
            {"raw_p_value", num(r.raw_p_value)},
            {"log_p_value", num(r.log_p_value)},
            {"certifying", r.certifying},
            {"precondition_failed", r.precondition_failed},
            {"params", params_json(r)}};
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s + " " : s + std::string(w - s.size(), ' '); }

BiasBound read_bias(const std::optional<double>& tau, double tau_a, double tau_b) {
  if (tau) return make_bias(*tau, *tau);
  return make_bias(tau_a, tau_b);
}

void add_bias_options(CLI::App* app, std::optional<double>& tau, double& tau_a, double& tau_b) {
  app->add_option("--tau-a", tau_a, "Bias bound for site 0")->capture_default_str();
  app->add_option("--tau-b", tau_b, "Bias bound for every other site")->capture_default_str();
  app->add_option("--tau", tau, "Bias bound for all sites (overrides --tau-a/--tau-b)");
}

void check_format(const std::string& f) {
  if (f != "text" && f != "json" && f != "csv") throw InputError("unknown format '" + f + "'");
}

// The win/lose bound actually used: user value, analytic CHSH, or enumeration.
WinLoseBound resolve_beta(const GameSpec& spec, const BiasBound& bias, const std::optional<double>& user,
                          bool force_enumeration, std::uint64_t cap) {
  if (user) {
    if (!(*user >= 0.0 && *user <= 1.0)) throw InputError("--beta must lie in [0, 1]");
    return WinLoseBound{*user, BetaProvenance::user_supplied, bias};
  }
  check_bias(bias, spec);
  if (!force_enumeration && is_chsh_shape(spec)) return chsh_beta_win(bias);
  return beta_win_optimize(spec, bias, cap).bound;
}

GeneralGameParams winlose_params(const WinLoseBound& b) {
  GeneralGameParams p;
  p.s_min = 0.0;
  p.s_max = 1.0;
  p.beta_max = b.beta_win;
  p.beta_min = 0.0;
  return p;
}

GeneralGameParams resolve_general_params(const GameSpec& spec, const BiasBound& bias,
                                         const std::optional<double>& beta_max,
                                         const std::optional<double>& beta_min, std::uint64_t cap) {
  double bmax = 0.0;
  double bmin = 0.0;
  if (beta_max && beta_min) {
    bmax = *beta_max;
    bmin = *beta_min;
  } else {
    if (!bias.is_zero())
      throw InputError("under a nonzero bias bound, pass --beta-max and --beta-min for general games");
    const ClassicalBound cb = classical_bound(spec, cap);
    bmax = beta_max.value_or(cb.beta_max);
    bmin = beta_min.value_or(cb.beta_min);
  }
  return game_params(spec, bias, bmax, bmin);
}

std::vector<Method> parse_methods(const std::string& method, GameKind kind) {
  const bool wl = kind == GameKind::win_lose;
  if (method == "auto") return {wl ? Method::binomial : Method::bentkus};
  if (method == "all") {
    if (wl) return {Method::binomial, Method::bentkus, Method::mcdiarmid, Method::azuma};
    return {Method::bentkus, Method::mcdiarmid, Method::azuma};
  }
  if (method == "binomial") {
    if (!wl) throw InputError("the binomial bound needs a win/lose game; use bentkus");
    return {Method::binomial};
  }
  if (method == "bentkus") return {Method::bentkus};
  if (method == "mcdiarmid") return {Method::mcdiarmid};
  if (method == "azuma") return {Method::azuma};
  if (method == "gaussian") {
    if (!wl) throw InputError("the normal approximation needs a win/lose game");
    return {Method::gaussian_nonrigorous};
  }
  throw InputError("unknown method '" + method + "'");
}

AzumaOptions azuma_options(const std::string& mode, const std::optional<double>& d) {
  AzumaOptions o;
  if (mode == "printed") o.mode = AzumaMode::printed;
  else if (mode != "symmetric") throw InputError("unknown Azuma mode '" + mode + "'");
  o.d = d;
  return o;
}

PValueReport precondition_report(Method m, std::int64_t n, double statistic, const WinLoseBound& b,
                                 const std::string& why) {
  PValueReport r;
  r.method = m;
  r.n = n;
  r.statistic = statistic;
  r.params = b;
  r.precondition_failed = true;
  r.certifying = m != Method::gaussian_nonrigorous;
  r.note = why;
  return r;
}

void emit_reports(std::ostream& out, const std::string& format, const json& header,
                  const std::vector<PValueReport>& reports, const std::vector<std::string>& text_lines) {
  if (format == "json") {
    json j = header;
    j["reports"] = json::array();
    for (const auto& r : reports) j["reports"].push_back(report_json(r));
    out << j.dump(2) << '\n';
    return;
  }
  if (format == "csv") {
    out << "method,n,statistic,p_value,raw_p_value,log_p_value,certifying,precondition_failed\n";
    for (const auto& r : reports)
      out << to_string(r.method) << ',' << r.n << ',' << format_number(r.statistic) << ','
          << format_number(r.p_value) << ',' << format_number(r.raw_p_value) << ',' << format_number(r.log_p_value)
          << ',' << (r.certifying ? "true" : "false") << ',' << (r.precondition_failed ? "true" : "false") << '\n';
    return;
  }
  for (const auto& l : text_lines) out << l << '\n';
  out << pad("method", 22) << pad("statistic", 16) << "p_value\n";
  for (const auto& r : reports) {
    std::string p = format_number(r.p_value);
    if (!r.certifying) p += "  (non-rigorous)";
    if (r.precondition_failed) p += "  (precondition failed: " + r.note + ")";
    out << pad(to_string(r.method), 22) << pad(format_number(r.statistic), 16) << p << '\n';
  }
}

// ---------------------------------------------------------------- analyze

struct AnalyzeOptions {
  std::string game;
  std::string trials;
  std::optional<double> tau;
  double tau_a = 0.0;
  double tau_b = 0.0;
  std::string method = "auto";
  std::string format = "text";
  std::optional<double> beta;
  std::optional<double> beta_max;
  std::optional<double> beta_min;
  std::string azuma_mode = "symmetric";
  std::optional<double> azuma_d;
  std::vector<std::string> merges;
  bool enumerate = false;
};

std::map<Tag, std::vector<Tag>> parse_merges(const std::vector<std::string>& specs) {
  std::map<Tag, std::vector<Tag>> out;
  for (const auto& s : specs) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw InputError("--merge expects TAG:SRC[,SRC...], got '" + s + "'");
    try {
      const Tag merged = std::stoi(s.substr(0, colon));
      std::vector<Tag> sources;
      std::stringstream ss(s.substr(colon + 1));
      std::string part;
      while (std::getline(ss, part, ',')) sources.push_back(std::stoi(part));
      out[merged] = sources;
    } catch (const std::logic_error&) {
      throw InputError("--merge expects integer tags, got '" + s + "'");
    }
  }
  return out;
}

int cmd_analyze(const AnalyzeOptions& o, std::ostream& out, std::ostream& err) {
  check_format(o.format);
  const std::uint64_t cap = resolve_cap();
  GameSpec spec = load_game(o.game);
  ExperimentData data = load_trials(o.trials, spec);
  const BiasBound bias = read_bias(o.tau, o.tau_a, o.tau_b);
  check_bias(bias, spec);
  if (!o.merges.empty()) {
    auto merged = relabel_event_ready(spec, data, bias, parse_merges(o.merges), cap);
    spec = std::move(merged.spec);
    data = std::move(merged.data);
  }
  const ScoreSummary summary = score_experiment(spec, data);
  const auto n = static_cast<std::int64_t>(summary.per_trial.size());
  const auto methods = parse_methods(o.method, spec.kind);
  const AzumaOptions az = azuma_options(o.azuma_mode, o.azuma_d);

  std::vector<PValueReport> reports;
  json header = {{"schema", kSchema},
                 {"command", "analyze"},
                 {"game", spec.name},
                 {"kind", kind_name(spec.kind)},
                 {"attempts", data.attempts()},
                 {"n", n},
                 {"total_score", num(summary.total)},
                 {"bias", {{"tau_a", num(bias.tau_a)}, {"tau_b", num(bias.tau_b)}}}};
  std::vector<std::string> lines{"game: " + spec.name + " (" + kind_name(spec.kind) + ")",
                                 "attempts: " + std::to_string(data.attempts()),
                                 "trials (n): " + std::to_string(n)};

  if (spec.kind == GameKind::win_lose) {
    const auto c = static_cast<std::int64_t>(*summary.wins);
    const WinLoseBound bound = resolve_beta(spec, bias, o.beta, o.enumerate, cap);
    header["wins"] = c;
    header["beta_win"] = num(bound.beta_win);
    header["beta_provenance"] = to_string(bound.provenance);
    lines.push_back("wins (c): " + std::to_string(c));
    lines.push_back("beta_win: " + format_number(bound.beta_win) + " (" + to_string(bound.provenance) +
                    ", tau_a=" + format_number(bias.tau_a) + ", tau_b=" + format_number(bias.tau_b) + ")");
    const GeneralGameParams gp = winlose_params(bound);
    std::vector<double> indicators;
    const double top = spec.max_score();
    for (double s : summary.per_trial) indicators.push_back(s == top ? 1.0 : 0.0);
    for (Method m : methods) {
      switch (m) {
        case Method::binomial: reports.push_back(winlose_pvalue(n, c, bound)); break;
        case Method::bentkus: reports.push_back(bentkus_pvalue(gp, indicators)); break;
        case Method::mcdiarmid: reports.push_back(mcdiarmid_pvalue(gp, static_cast<double>(c), n)); break;
        case Method::azuma: reports.push_back(azuma_pvalue(gp, static_cast<double>(c), n, az)); break;
        case Method::gaussian_nonrigorous:
          try {
            reports.push_back(gaussian_approx_pvalue(n, c, bound));
          } catch (const PreconditionError& e) {
            reports.push_back(precondition_report(m, n, static_cast<double>(c), bound, e.what()));
          }
          break;
      }
    }
  } else {
    const GeneralGameParams gp = resolve_general_params(spec, bias, o.beta_max, o.beta_min, cap);
    header["s_min"] = num(gp.s_min);
    header["s_max"] = num(gp.s_max);
    header["beta_max"] = num(gp.beta_max);
    header["beta_min"] = num(gp.beta_min);
    header["gamma_hat"] = num(gp.gamma_hat());
    lines.push_back("total score: " + format_number(summary.total));
    lines.push_back("score range: [" + format_number(gp.s_min) + ", " + format_number(gp.s_max) +
                    "], beta_max: " + format_number(gp.beta_max) + ", gamma_hat: " + format_number(gp.gamma_hat()));
    for (Method m : methods) {
      switch (m) {
        case Method::bentkus: reports.push_back(bentkus_pvalue(gp, summary.per_trial)); break;
        case Method::mcdiarmid: reports.push_back(mcdiarmid_pvalue(gp, summary.total, n)); break;
        case Method::azuma: reports.push_back(azuma_pvalue(gp, summary.total, n, az)); break;
        default: throw InputError("method not available for general games");
      }
    }
  }
  emit_reports(out, o.format, header, reports, lines);
  bool failed = false;
  for (const auto& r : reports)
    if (r.precondition_failed) {
      failed = true;
      err << "warning: " << to_string(r.method) << ": " << r.note << "; reported as p = 1\n";
    }
  return failed ? kPreconditionFailed : kOk;
}

// ----------------------------------------------------------------- design

struct DesignOptions {
  std::string game;
  std::string behavior;
  std::optional<double> tau;
  double tau_a = 0.0;
  double tau_b = 0.0;
  std::string format = "text";
  bool enumerate = false;
  bool winlose = false;
};

int cmd_design_beta(const DesignOptions& o, std::ostream& out) {
  check_format(o.format);
  const std::uint64_t cap = resolve_cap();
  const GameSpec spec = load_game(o.game);
  if (spec.kind != GameKind::win_lose) throw InputError("design beta needs a win/lose game; use classical-bound");
  const BiasBound bias = read_bias(o.tau, o.tau_a, o.tau_b);
  check_bias(bias, spec);
  json j = {{"schema", kSchema}, {"command", "design beta"}, {"game", spec.name}};
  std::optional<WinOptimum> opt;
  WinLoseBound bound;
  if (!o.enumerate && is_chsh_shape(spec)) {
    bound = chsh_beta_win(bias);
  } else {
    opt = beta_win_optimize(spec, bias, cap);
    bound = opt->bound;
  }
  j["beta_win"] = num(bound.beta_win);
  j["provenance"] = to_string(bound.provenance);
  j["bias"] = {{"tau_a", num(bias.tau_a)}, {"tau_b", num(bias.tau_b)}};
  if (opt) {
    j["strategy"] = opt->strategy.outputs;
    j["tag"] = opt->tag;
    json m = json::array();
    for (const auto& site : opt->marginals) {
      json row = json::array();
      for (double v : site) row.push_back(num(v));
      m.push_back(row);
    }
    j["marginals"] = m;
  }
  if (o.format == "json") {
    out << j.dump(2) << '\n';
  } else if (o.format == "csv") {
    out << "game,beta_win,provenance,tau_a,tau_b\n"
        << spec.name << ',' << format_number(bound.beta_win) << ',' << to_string(bound.provenance) << ','
        << format_number(bias.tau_a) << ',' << format_number(bias.tau_b) << '\n';
  } else {
    out << "game: " << spec.name << '\n'
        << "beta_win: " << format_number(bound.beta_win) << '\n'
        << "provenance: " << to_string(bound.provenance) << '\n'
        << "tau_a: " << format_number(bias.tau_a) << ", tau_b: " << format_number(bias.tau_b) << '\n';
    if (opt) out << "optimal strategy (outputs per input, per site): " << strategy_text(opt->strategy) << '\n';
  }
  return kOk;
}

int cmd_design_classical(const DesignOptions& o, std::ostream& out) {
  check_format(o.format);
  const std::uint64_t cap = resolve_cap();
  const GameSpec spec = load_game(o.game);
  const ClassicalBound cb = classical_bound(spec, cap);
  if (o.format == "json") {
    const json j = {{"schema", kSchema},
                    {"command", "design classical-bound"},
                    {"game", spec.name},
                    {"beta_max", num(cb.beta_max)},
                    {"beta_min", num(cb.beta_min)},
                    {"argmax", cb.argmax.outputs},
                    {"argmax_tag", cb.argmax_tag},
                    {"argmin", cb.argmin.outputs}};
    out << j.dump(2) << '\n';
  } else if (o.format == "csv") {
    out << "game,beta_max,beta_min\n"
        << spec.name << ',' << format_number(cb.beta_max) << ',' << format_number(cb.beta_min) << '\n';
  } else {
    out << "game: " << spec.name << '\n'
        << "beta_max: " << format_number(cb.beta_max) << '\n'
        << "beta_min: " << format_number(cb.beta_min) << '\n'
        << "maximizing strategy: " << strategy_text(cb.argmax) << '\n';
  }
  return kOk;
}

int cmd_design_select(const DesignOptions& o, std::ostream& out) {
  check_format(o.format);
  const std::uint64_t cap = resolve_cap();
  const Behavior b = load_behavior(o.behavior);
  const LocalityResult loc = is_local(b, cap);
  const BellInequality ineq = o.winlose ? select_winlose_inequality(b, cap) : select_inequality(b, cap);
  const std::size_t nout = b.dims.output_tuples();
  if (o.format == "json") {
    json coeffs = json::object();
    for (std::size_t i = 0; i < b.dims.input_tuples(); ++i) {
      json row = json::array();
      for (std::size_t a = 0; a < nout; ++a) row.push_back(num(ineq.coefficients[i * nout + a]));
      std::string key;
      for (int x : b.dims.decode_inputs(i)) key += (key.empty() ? "" : ",") + std::to_string(x);
      coeffs[key] = row;
    }
    const json j = {{"schema", kSchema},
                    {"command", "design select"},
                    {"local", loc.local},
                    {"bound", num(ineq.bound)},
                    {"violation", num(ineq.violation)},
                    {"coefficients", coeffs}};
    out << j.dump(2) << '\n';
  } else if (o.format == "csv") {
    out << "x,a,coefficient\n";
    for (std::size_t c = 0; c < ineq.coefficients.size(); ++c)
      out << c / nout << ',' << c % nout << ',' << format_number(ineq.coefficients[c]) << '\n';
  } else {
    out << "local: " << (loc.local ? "yes" : "no") << '\n'
        << "classical bound S: " << format_number(ineq.bound) << '\n'
        << "violation: " << format_number(ineq.violation) << '\n'
        << "coefficients (rows = input tuples, columns = output tuples):\n";
    for (std::size_t i = 0; i < b.dims.input_tuples(); ++i) {
      out << " ";
      for (std::size_t a = 0; a < nout; ++a) out << ' ' << format_number(ineq.coefficients[i * nout + a]);
      out << '\n';
    }
  }
  return kOk;
}

// ---------------------------------------------------------------- combine

int cmd_combine(const std::vector<std::string>& values, const std::string& file, const std::string& format,
                std::ostream& out, std::ostream& err) {
  check_format(format);
  std::vector<std::string> tokens = values;
  if (!file.empty()) {
    std::istringstream in(read_file(file));
    std::string tok;
    while (in >> tok) {
      std::stringstream parts(tok);
      std::string p;
      while (std::getline(parts, p, ','))
        if (!p.empty()) tokens.push_back(p);
    }
  }
  std::vector<double> ps;
  for (const auto& t : tokens) {
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end == t.c_str() || *end != '\0') throw InputError("not a number: '" + t + "'");
    if (!(v >= 0.0 && v <= 1.0)) throw InputError("P-values must lie in [0, 1], got " + t);
    ps.push_back(v);
  }
  const FisherResult f = fisher_combine(ps);
  if (f.zero_input) err << "warning: an input P-value is exactly 0; the combined P-value is 0\n";
  if (format == "json") {
    const json j = {{"schema", kSchema},     {"command", "combine"},     {"count", ps.size()},
                    {"p_value", num(f.p_value)}, {"statistic", num(f.statistic)}, {"dof", f.dof},
                    {"zero_input", f.zero_input}};
    out << j.dump(2) << '\n';
  } else if (format == "csv") {
    out << "count,p_value,statistic,dof\n"
        << ps.size() << ',' << format_number(f.p_value) << ',' << format_number(f.statistic) << ',' << f.dof << '\n';
  } else {
    out << "combined p_value: " << format_number(f.p_value) << '\n'
        << "chi-squared statistic: " << format_number(f.statistic) << '\n'
        << "degrees of freedom: " << f.dof << '\n';
  }
  return kOk;
}

// --------------------------------------------------------------- simulate

struct SimulateOptions {
  std::string game;
  std::string strategy = "optimal";
  std::int64_t trials = 0;
  std::uint64_t seed = 0;
  std::optional<double> tau;
  double tau_a = 0.0;
  double tau_b = 0.0;
  std::string policy = "worst_case";
  std::string out_path;
  std::int64_t replicas = 0;
  std::vector<std::int64_t> wins;
  std::string format = "text";
  unsigned threads = 0;
};

int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err) {
  check_format(o.format);
  const std::uint64_t cap = resolve_cap();
  const GameSpec spec = load_game(o.game);
  const BiasBound bias = read_bias(o.tau, o.tau_a, o.tau_b);
  if (o.trials < 0) throw InputError("--trials must be nonnegative");
  SimConfig config;
  config.seed = o.seed;
  config.trials = o.trials;
  config.bias = bias;
  config.threads = o.threads;
  if (o.policy == "target") config.policy = BiasPolicy::target;
  else if (o.policy != "worst_case") throw InputError("unknown bias policy '" + o.policy + "'");
  const auto strategy = make_strategy(o.strategy, spec, bias, cap);

  if (o.replicas == 0) {
    const ExperimentData data = run_lhvm(*strategy, spec, config);
    const ScoreSummary s = score_experiment(spec, data);
    std::ostream* sink = &out;
    std::ofstream file;
    if (!o.out_path.empty()) {
      file.open(o.out_path);
      if (!file) throw InputError("cannot write '" + o.out_path + "'");
      sink = &file;
    }
    write_trials(*sink, spec, data);
    std::ostream& summary = o.out_path.empty() ? err : out;
    summary << "strategy: " << strategy->name() << ", seed: " << o.seed << ", attempts: " << data.attempts()
            << ", trials: " << data.trials() << ", wins: " << s.wins.value_or(0) << '\n';
    return kOk;
  }

  if (o.replicas < 1000) throw InputError("--replicas must be at least 1000");
  config.replicas = o.replicas;
  const auto hist = mc_win_histogram(*strategy, spec, config);
  const WinLoseBound bound = resolve_beta(spec, bias, std::nullopt, false, cap);
  std::vector<std::int64_t> cs = o.wins;
  if (cs.empty()) cs.push_back((o.trials * 4 + 4) / 5);
  struct Row {
    std::int64_t c;
    TailEstimate est;
    double bound;
  };
  std::vector<Row> rows;
  for (std::int64_t c : cs) {
    if (c < 0 || c > o.trials) throw InputError("--wins must lie in [0, trials]");
    rows.push_back({c, tail_from_histogram(hist, c), winlose_pvalue(o.trials, c, bound).p_value});
  }
  if (o.format == "json") {
    json j = {{"schema", kSchema},    {"command", "simulate"}, {"game", spec.name},
              {"strategy", strategy->name()}, {"seed", o.seed}, {"replicas", o.replicas},
              {"trials", o.trials},   {"beta_win", num(bound.beta_win)}};
    j["rows"] = json::array();
    for (const auto& r : rows)
      j["rows"].push_back({{"wins", r.c},
                           {"estimate", num(r.est.estimate)},
                           {"standard_error", num(r.est.standard_error)},
                           {"bound", num(r.bound)}});
    out << j.dump(2) << '\n';
  } else if (o.format == "csv") {
    out << "strategy,trials,wins,estimate,standard_error,bound\n";
    for (const auto& r : rows)
      out << strategy->name() << ',' << o.trials << ',' << r.c << ',' << format_number(r.est.estimate) << ','
          << format_number(r.est.standard_error) << ',' << format_number(r.bound) << '\n';
  } else {
    out << "strategy: " << strategy->name() << ", replicas: " << o.replicas << ", trials: " << o.trials
        << ", beta_win: " << format_number(bound.beta_win) << '\n'
        << pad("wins", 8) << pad("estimate", 16) << pad("stderr", 16) << "bound\n";
    for (const auto& r : rows)
      out << pad(std::to_string(r.c), 8) << pad(format_number(r.est.estimate), 16)
          << pad(format_number(r.est.standard_error), 16) << format_number(r.bound) << '\n';
  }
  return kOk;
}

// ------------------------------------------------------------------ sweep

struct Axis {
  double start = 0.0;
  double stop = 0.0;
  double step = 1.0;
  std::vector<double> values() const {
    std::vector<double> out;
    if (step <= 0.0) throw InputError("grid step must be positive");
    const double span = stop - start;
    if (span < 0.0) throw InputError("grid stop must not be below start");
    const double count = std::floor(span / step + 1e-9) + 1.0;
    if (count > static_cast<double>(kGridCap)) throw CapExceededError("grid exceeds 10^6 points");
    for (std::size_t i = 0; i < static_cast<std::size_t>(count); ++i) out.push_back(start + static_cast<double>(i) * step);
    return out;
  }
};

std::map<std::string, Axis> parse_grid(const std::string& grid) {
  std::map<std::string, Axis> out;
  std::stringstream ss(grid);
  std::string part;
  while (std::getline(ss, part, ';')) {
    if (part.empty()) continue;
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw InputError("grid entry '" + part + "' lacks '='");
    const std::string key = part.substr(0, eq);
    std::vector<double> nums;
    std::stringstream vs(part.substr(eq + 1));
    std::string v;
    while (std::getline(vs, v, ':')) {
      char* end = nullptr;
      const double d = std::strtod(v.c_str(), &end);
      if (v.empty() || *end != '\0') throw InputError("bad grid number '" + v + "'");
      nums.push_back(d);
    }
    if (nums.empty() || nums.size() > 3) throw InputError("grid axis must be START[:STOP[:STEP]]");
    Axis a;
    a.start = nums[0];
    a.stop = nums.size() > 1 ? nums[1] : nums[0];
    a.step = nums.size() > 2 ? nums[2] : 1.0;
    if (key != "n" && key != "S") throw InputError("grid axes are 'n' and 'S', got '" + key + "'");
    out[key] = a;
  }
  if (!out.count("S")) throw InputError("grid needs an S axis");
  return out;
}

struct SweepOptions {
  std::string game;
  std::string grid;
  std::optional<double> tau;
  double tau_a = 0.0;
  double tau_b = 0.0;
  std::string method = "all";
  std::optional<double> target;
  std::optional<double> beta_max;
  std::optional<double> beta_min;
  std::string azuma_mode = "symmetric";
  std::optional<double> azuma_d;
  std::string format = "csv";
};

// Evaluates one method at (n, S) with fractional statistics.
struct SweepModel {
  GameKind kind = GameKind::win_lose;
  WinLoseBound bound;
  GeneralGameParams params;
  AzumaOptions azuma;

  PValueReport eval(Method m, std::int64_t n, double s) const {
    if (kind == GameKind::win_lose) {
      const double c = s_to_wins(n, s);
      if (c < -1e-9 || c > static_cast<double>(n) * (1.0 + 1e-12))
        throw InputError("S = " + format_number(s) + " implies a win count outside [0, n]");
      const double cc = std::clamp(c, 0.0, static_cast<double>(n));
      switch (m) {
        case Method::binomial: {
          PValueReport r;
          r.method = m;
          r.n = n;
          r.statistic = cc;
          r.params = bound;
          const TailResult t = interp_binom_tail(n, cc, bound.beta_win);
          r.raw_p_value = t.value;
          r.p_value = std::min(1.0, t.value);
          r.log_p_value = t.log_value;
          return r;
        }
        case Method::bentkus: return bentkus_pvalue_total(params, n, cc);
        case Method::mcdiarmid: return mcdiarmid_pvalue(params, cc, n);
        case Method::azuma: return azuma_pvalue(params, cc, n, azuma);
        case Method::gaussian_nonrigorous: {
          const double dn = static_cast<double>(n);
          const double beta = bound.beta_win;
          const double excess = cc - dn * beta;
          if (!(excess > 0.0)) return precondition_report(m, n, cc, bound, "c <= n beta_win");
          PValueReport r;
          r.method = m;
          r.n = n;
          r.statistic = cc;
          r.params = bound;
          r.raw_p_value = r.p_value = gaussian_tail_q(excess / std::sqrt(dn * beta * (1.0 - beta)));
          r.log_p_value = std::log(r.p_value);
          r.certifying = false;
          return r;
        }
      }
    }
    const double total = s * static_cast<double>(n);
    switch (m) {
      case Method::bentkus: return bentkus_pvalue_total(params, n, total);
      case Method::mcdiarmid: return mcdiarmid_pvalue(params, total, n);
      case Method::azuma: return azuma_pvalue(params, total, n, azuma);
      default: throw InputError("method not available for general games");
    }
  }
};

// Smallest n in [lo, hi] with p(n) <= target, or nullopt.
std::optional<std::int64_t> threshold_n(const SweepModel& model, Method m, double s, double target, std::int64_t lo,
                                        std::int64_t hi) {
  auto meets = [&](std::int64_t n) { return model.eval(m, n, s).p_value <= target; };
  if (!meets(hi)) return std::nullopt;
  std::int64_t a = lo;
  std::int64_t b = hi;
  if (meets(a)) return a;
  while (b - a > 1) {
    const std::int64_t mid = a + (b - a) / 2;
    if (meets(mid)) b = mid;
    else a = mid;
  }
  // The interpolated tail is not exactly monotone in n; walk down while the
  // predecessor still qualifies.
  while (b > lo && meets(b - 1)) --b;
  return b;
}

int cmd_sweep(const SweepOptions& o, std::ostream& out) {
  check_format(o.format);
  const std::uint64_t cap = resolve_cap();
  const GameSpec spec = load_game(o.game);
  const BiasBound bias = read_bias(o.tau, o.tau_a, o.tau_b);
  check_bias(bias, spec);
  auto grid = parse_grid(o.grid);
  const auto svals = grid["S"].values();

  SweepModel model;
  model.kind = spec.kind;
  model.azuma = azuma_options(o.azuma_mode, o.azuma_d);
  if (spec.kind == GameKind::win_lose) {
    model.bound = resolve_beta(spec, bias, std::nullopt, false, cap);
    model.params = winlose_params(model.bound);
  } else {
    model.params = resolve_general_params(spec, bias, o.beta_max, o.beta_min, cap);
  }
  std::vector<Method> methods;
  if (o.target && o.method == "all") methods = parse_methods("auto", spec.kind);
  else methods = parse_methods(o.method, spec.kind);

  if (o.target) {
    if (!(*o.target > 0.0 && *o.target < 1.0)) throw InputError("--target must lie in (0, 1)");
    std::int64_t lo = 1;
    std::int64_t hi = 10'000'000;
    if (grid.count("n")) {
      lo = static_cast<std::int64_t>(std::ceil(grid["n"].start));
      hi = static_cast<std::int64_t>(std::floor(grid["n"].stop));
      if (lo < 1 || hi < lo) throw InputError("threshold search needs 1 <= n start <= n stop");
    }
    if (svals.size() * methods.size() > kGridCap) throw CapExceededError("grid exceeds 10^6 points");
    json rows = json::array();
    if (o.format == "csv") out << "S,method,target,n,p_value\n";
    for (double s : svals)
      for (Method m : methods) {
        const auto n = threshold_n(model, m, s, *o.target, lo, hi);
        const double p = n ? model.eval(m, *n, s).p_value : std::nan("");
        if (o.format == "csv") {
          out << format_number(s) << ',' << to_string(m) << ',' << format_number(*o.target) << ','
              << (n ? std::to_string(*n) : "") << ',' << (n ? format_number(p) : "") << '\n';
        } else if (o.format == "json") {
          rows.push_back({{"S", num(s)},
                          {"method", to_string(m)},
                          {"n", n ? json(*n) : json(nullptr)},
                          {"p_value", n ? num(p) : json(nullptr)}});
        } else {
          out << "S=" << format_number(s) << " " << to_string(m) << ": n = " << (n ? std::to_string(*n) : "none")
              << '\n';
        }
      }
    if (o.format == "json")
      out << json{{"schema", kSchema}, {"command", "sweep"}, {"target", num(*o.target)}, {"rows", rows}}.dump(2)
          << '\n';
    return kOk;
  }

  if (!grid.count("n")) throw InputError("grid needs an n axis unless --target is given");
  const auto nvals = grid["n"].values();
  if (nvals.size() * svals.size() * methods.size() > kGridCap) throw CapExceededError("grid exceeds 10^6 points");
  json rows = json::array();
  if (o.format != "json") out << "n,S,method,statistic,p_value,precondition_failed\n";
  for (double nv : nvals) {
    const auto n = static_cast<std::int64_t>(std::llround(nv));
    if (n < 1) throw InputError("grid n values must be at least 1");
    for (double s : svals)
      for (Method m : methods) {
        const PValueReport r = model.eval(m, n, s);
        if (o.format == "json") {
          rows.push_back({{"n", n},
                          {"S", num(s)},
                          {"method", to_string(m)},
                          {"statistic", num(r.statistic)},
                          {"p_value", num(r.p_value)},
                          {"precondition_failed", r.precondition_failed}});
        } else {
          out << n << ',' << format_number(s) << ',' << to_string(m) << ',' << format_number(r.statistic) << ','
              << format_number(r.p_value) << ',' << (r.precondition_failed ? "true" : "false") << '\n';
        }
      }
  }
  if (o.format == "json") out << json{{"schema", kSchema}, {"command", "sweep"}, {"rows", rows}}.dump(2) << '\n';
  return kOk;
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

std::uint64_t resolve_cap() {
  const char* env = std::getenv("BELLCERT_CAP");
  if (env == nullptr || *env == '\0') return kDefaultStrategyCap;
  char* end = nullptr;
  const double v = std::strtod(env, &end);
  if (*end != '\0' || !(v >= 1.0) || v > 1.8e19) throw InputError(std::string("invalid BELLCERT_CAP '") + env + "'");
  return static_cast<std::uint64_t>(v);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"P-value bounds for Bell-test data", "bellcert"};
  app.require_subcommand(1);

  AnalyzeOptions an;
  auto* analyze = app.add_subcommand("analyze", "P-value bounds for an experiment file");
  analyze->add_option("--game", an.game, "Game JSON file")->required();
  analyze->add_option("--trials", an.trials, "Trials CSV file")->required();
  add_bias_options(analyze, an.tau, an.tau_a, an.tau_b);
  analyze->add_option("--method", an.method, "auto, binomial, bentkus, mcdiarmid, azuma, gaussian or all")
      ->capture_default_str();
  analyze->add_option("--format", an.format, "text, json or csv")->capture_default_str();
  analyze->add_option("--beta", an.beta, "Use this winning probability bound instead of computing one");
  analyze->add_option("--beta-max", an.beta_max, "Classical maximum for general games");
  analyze->add_option("--beta-min", an.beta_min, "Classical minimum for general games");
  analyze->add_option("--azuma-mode", an.azuma_mode, "symmetric or printed")->capture_default_str();
  analyze->add_option("--azuma-d", an.azuma_d, "Explicit Azuma increment range");
  analyze->add_option("--merge", an.merges, "Merge event-ready tags, TAG:SRC[,SRC...]");
  analyze->add_flag("--enumerate", an.enumerate, "Compute beta by enumeration even for CHSH");

  DesignOptions de;
  auto* design = app.add_subcommand("design", "Design-time bounds and inequality selection");
  design->require_subcommand(1);
  auto* beta = design->add_subcommand("beta", "Winning probability bound of a win/lose game");
  beta->add_option("--game", de.game, "Game JSON file")->required();
  add_bias_options(beta, de.tau, de.tau_a, de.tau_b);
  beta->add_option("--format", de.format, "text, json or csv")->capture_default_str();
  beta->add_flag("--enumerate", de.enumerate, "Enumerate strategies even for CHSH");
  auto* classical = design->add_subcommand("classical-bound", "Classical extremes of the expected score");
  classical->add_option("--game", de.game, "Game JSON file")->required();
  classical->add_option("--format", de.format, "text, json or csv")->capture_default_str();
  auto* select = design->add_subcommand("select", "Select a Bell inequality for a behavior");
  select->add_option("--behavior", de.behavior, "Behavior JSON file")->required();
  select->add_option("--format", de.format, "text, json or csv")->capture_default_str();
  select->add_flag("--winlose", de.winlose, "Restrict to 0/1 coefficients (exhaustive search)");

  std::vector<std::string> pvalues;
  std::string pfile;
  std::string cformat = "text";
  auto* combine = app.add_subcommand("combine", "Fisher combination of independent P-values");
  combine->add_option("pvalues", pvalues, "P-values");
  combine->add_option("--file", pfile, "File of P-values separated by whitespace or commas");
  combine->add_option("--format", cformat, "text, json or csv")->capture_default_str();

  SimulateOptions si;
  auto* simulate = app.add_subcommand("simulate", "Simulate a local-hidden-variable adversary");
  simulate->add_option("--game", si.game, "Game JSON file")->required();
  simulate->add_option("--strategy", si.strategy, "optimal, random, switcher, herald or hedged")
      ->capture_default_str();
  simulate->add_option("--trials", si.trials, "Trials per experiment")->required();
  simulate->add_option("--seed", si.seed, "Master seed")->capture_default_str();
  add_bias_options(simulate, si.tau, si.tau_a, si.tau_b);
  simulate->add_option("--bias-policy", si.policy, "worst_case or target")->capture_default_str();
  simulate->add_option("--out", si.out_path, "Write the trials CSV here instead of standard output");
  simulate->add_option("--replicas", si.replicas, "Monte-Carlo replicas (enables tail estimation)");
  simulate->add_option("--wins", si.wins, "Win thresholds for the tail estimate");
  simulate->add_option("--threads", si.threads, "Worker threads (0 = all cores)");
  simulate->add_option("--format", si.format, "text, json or csv")->capture_default_str();

  SweepOptions sw;
  auto* sweep = app.add_subcommand("sweep", "Evaluate bounds over an (n, S) grid");
  sweep->add_option("--game", sw.game, "Game JSON file")->required();
  sweep->add_option("--grid", sw.grid, "n=START[:STOP[:STEP]];S=START[:STOP[:STEP]]")->required();
  add_bias_options(sweep, sw.tau, sw.tau_a, sw.tau_b);
  sweep->add_option("--method", sw.method, "auto, binomial, bentkus, mcdiarmid, azuma, gaussian or all")
      ->capture_default_str();
  sweep->add_option("--target", sw.target, "Report the smallest n reaching this P-value");
  sweep->add_option("--beta-max", sw.beta_max, "Classical maximum for general games");
  sweep->add_option("--beta-min", sw.beta_min, "Classical minimum for general games");
  sweep->add_option("--azuma-mode", sw.azuma_mode, "symmetric or printed")->capture_default_str();
  sweep->add_option("--azuma-d", sw.azuma_d, "Explicit Azuma increment range");
  sweep->add_option("--format", sw.format, "csv, json or text")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  try {
    if (*analyze) return cmd_analyze(an, out, err);
    if (*beta) return cmd_design_beta(de, out);
    if (*classical) return cmd_design_classical(de, out);
    if (*select) return cmd_design_select(de, out);
    if (*combine) return cmd_combine(pvalues, pfile, cformat, out, err);
    if (*simulate) return cmd_simulate(si, out, err);
    if (*sweep) return cmd_sweep(sw, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const PreconditionError& e) {
    err << "precondition failed: " << e.what() << '\n';
    return kPreconditionFailed;
  } catch (const CapExceededError& e) {
    err << "cap exceeded: " << e.what() << '\n';
    return kCapExceeded;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
  return kInputError;
}

}  // namespace bellcert::cli
