#include "expnet/harness.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <filesystem>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <regex>
#include <sstream>
#include <thread>

#include "expnet/discretize.hpp"
#include "expnet/io.hpp"
#include "expnet/metrics.hpp"
#include "expnet/model.hpp"

namespace expnet {

using nlohmann::json;

std::string_view to_string(Study s) {
  switch (s) {
    case Study::normality: return "normality";
    case Study::consistency: return "consistency";
    case Study::overfit: return "overfit";
    case Study::custom: return "custom";
  }
  return "custom";
}

Study parse_study(std::string_view name) {
  for (Study s : {Study::normality, Study::consistency, Study::overfit, Study::custom}) {
    if (name == to_string(s)) return s;
  }
  throw ConfigError("unknown study '" + std::string(name) +
                    "' (expected normality, consistency, overfit or custom)");
}

ExperimentConfig ExperimentConfig::defaults(Study study) {
  ExperimentConfig c;
  c.study = study;
  switch (study) {
    case Study::normality:
      c.groups = {ParamKind::group1, ParamKind::group2, ParamKind::group3};
      c.n_list = {100, 200, 400};
      c.replications = 200;
      c.fit = FitConfig::newton_defaults();
      c.init = InitMode::truth;
      break;
    case Study::consistency:
      c.groups = {ParamKind::sparse_uniform};
      c.n_list = {400, 1400, 5000};
      c.replications = 30;
      c.fit = FitConfig::gradient_defaults(0.05);
      c.init = InitMode::truth;
      break;
    case Study::overfit:
      c.groups = {ParamKind::sparse_uniform};
      c.n_list = {1000, 2000};
      c.replications = 30;
      c.fit = FitConfig::gradient_defaults(0.08);
      c.e_list = {0.08, 0.02};
      c.init = InitMode::perturbed;
      c.perturbation = 0.5;
      break;
    case Study::custom:
      break;
  }
  return c;
}

std::vector<double> ExperimentConfig::tolerances() const {
  return e_list.empty() ? std::vector<double>{fit.outer_tol} : e_list;
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

// 1-based line of the first occurrence of "key" in the source, 0 if absent.
std::size_t line_of_key(std::string_view text, std::string_view key) {
  const std::string needle = "\"" + std::string(key) + "\"";
  const auto pos = text.find(needle);
  if (pos == std::string_view::npos) return 0;
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + pos, '\n'));
}

[[noreturn]] void config_fail(std::string_view text, std::string_view key, const std::string& msg) {
  const std::size_t line = line_of_key(text, key);
  throw ConfigError(line ? "line " + std::to_string(line) + ": " + msg : msg);
}

template <typename T>
T get_as(std::string_view text, const json& j, std::string_view key, std::string_view what) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    config_fail(text, key, "'" + std::string(key) + "' must be " + std::string(what));
  }
}

double get_positive(std::string_view text, const json& j, std::string_view key) {
  if (!j.is_number()) config_fail(text, key, "'" + std::string(key) + "' must be a number");
  const double v = j.get<double>();
  if (!(v > 0.0)) config_fail(text, key, "'" + std::string(key) + "' must be > 0");
  return v;
}

void parse_fit(std::string_view text, const json& j, FitConfig& fit, bool& plugin_mu) {
  if (!j.is_object()) config_fail(text, "fit", "'fit' must be an object");
  for (const auto& [key, val] : j.items()) {
    if (key == "subsolver") {
      const auto s = get_as<std::string>(text, val, key, "a string");
      if (s == "newton") fit.subsolver = SubSolver::newton;
      else if (s == "gradient") fit.subsolver = SubSolver::gradient;
      else config_fail(text, key, "subsolver must be 'newton' or 'gradient'");
    } else if (key == "outer_tol") {
      fit.outer_tol = get_positive(text, val, key);
    } else if (key == "sub_tol") {
      fit.sub_tol = get_positive(text, val, key);
    } else if (key == "outer_criterion") {
      const auto s = get_as<std::string>(text, val, key, "a string");
      if (s == "param_change") fit.outer_criterion = OuterCriterion::param_change;
      else if (s == "gradient_norm") fit.outer_criterion = OuterCriterion::gradient_norm;
      else config_fail(text, key, "outer_criterion must be 'param_change' or 'gradient_norm'");
    } else if (key == "step_size") {
      if (val.is_null()) fit.step_size.reset();
      else fit.step_size = get_positive(text, val, key);
    } else if (key == "max_outer_iters") {
      fit.max_outer_iters = get_as<int>(text, val, key, "an integer");
      if (fit.max_outer_iters < 1) config_fail(text, key, "max_outer_iters must be >= 1");
    } else if (key == "max_sub_iters") {
      fit.max_sub_iters = get_as<int>(text, val, key, "an integer");
      if (fit.max_sub_iters < 1) config_fail(text, key, "max_sub_iters must be >= 1");
    } else if (key == "mu_mode") {
      const auto s = get_as<std::string>(text, val, key, "a string");
      if (s == "known") plugin_mu = false;
      else if (s == "plugin") plugin_mu = true;
      else config_fail(text, key, "mu_mode must be 'known' or 'plugin'");
    } else if (key == "fix_alpha1") {
      fit.fix_alpha1 = get_as<bool>(text, val, key, "a boolean");
    } else {
      config_fail(text, key, "unknown fit key '" + key + "'");
    }
  }
}

ParamKind parse_kind_at(std::string_view text, const json& val, std::string_view key) {
  const auto s = get_as<std::string>(text, val, key, "a string");
  try {
    const ParamKind k = parse_param_kind(s);
    if (k == ParamKind::explicit_values) {
      config_fail(text, key, "explicit parameters are not supported in experiments");
    }
    return k;
  } catch (const std::invalid_argument& e) {
    config_fail(text, key, e.what());
  }
}

void parse_mu_value(std::string_view text, const json& val, std::string_view key,
                    std::optional<double>& mu) {
  if (val.is_string() && val.get<std::string>() == "dense") {
    mu = 1.0;
    return;
  }
  if (val.is_null()) {
    mu.reset();
    return;
  }
  const double v = get_positive(text, val, key);
  if (v > 1.0) config_fail(text, key, "mu must lie in (0, 1]");
  mu = v;
}

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view text, std::optional<Study> study_override) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + upto, '\n');
    throw ConfigError("line " + std::to_string(line) + ": malformed JSON (" + e.what() + ")");
  }
  if (!j.is_object()) throw ConfigError("line 1: config must be a JSON object");

  Study study = Study::custom;
  if (j.contains("study")) {
    try {
      study = parse_study(get_as<std::string>(text, j["study"], "study", "a string"));
    } catch (const ConfigError& e) {
      config_fail(text, "study", e.what());
    }
  }
  if (study_override) study = *study_override;
  ExperimentConfig c = ExperimentConfig::defaults(study);

  for (const auto& [key, val] : j.items()) {
    if (key == "study") {
      continue;
    } else if (key == "groups") {
      if (!val.is_array() || val.empty()) config_fail(text, key, "'groups' must be a non-empty array");
      c.groups.clear();
      for (const auto& g : val) c.groups.push_back(parse_kind_at(text, g, key));
    } else if (key == "param_spec") {
      if (!val.is_object()) config_fail(text, key, "'param_spec' must be an object");
      for (const auto& [pk, pv] : val.items()) {
        if (pk == "kind") c.groups = {parse_kind_at(text, pv, pk)};
        else if (pk == "B") c.bound = get_positive(text, pv, pk);
        else if (pk == "rho") c.rho = get_as<double>(text, pv, pk, "a number");
        else if (pk == "mu") parse_mu_value(text, pv, pk, c.mu);
        else if (pk == "n") c.n_list = {get_as<std::size_t>(text, pv, pk, "an integer")};
        else config_fail(text, pk, "unknown param_spec key '" + pk + "'");
      }
    } else if (key == "B") {
      c.bound = get_positive(text, val, key);
    } else if (key == "rho") {
      if (val.is_null()) c.rho.reset();
      else c.rho = get_as<double>(text, val, key, "a number");
    } else if (key == "mu") {
      parse_mu_value(text, val, key, c.mu);
    } else if (key == "n_list") {
      if (!val.is_array() || val.empty()) config_fail(text, key, "'n_list' must be a non-empty array");
      c.n_list.clear();
      for (const auto& v : val) {
        const auto n = get_as<long long>(text, v, key, "an array of integers");
        if (n < 2) config_fail(text, key, "every n must be >= 2");
        c.n_list.push_back(static_cast<std::size_t>(n));
      }
    } else if (key == "replications") {
      c.replications = get_as<int>(text, val, key, "an integer");
      if (c.replications < 1) config_fail(text, key, "replications must be >= 1");
    } else if (key == "fit") {
      parse_fit(text, val, c.fit, c.plugin_mu);
    } else if (key == "e_list") {
      if (!val.is_array()) config_fail(text, key, "'e_list' must be an array");
      c.e_list.clear();
      for (const auto& v : val) c.e_list.push_back(get_positive(text, v, key));
    } else if (key == "init") {
      const auto s = get_as<std::string>(text, val, key, "a string");
      if (s == "truth") c.init = InitMode::truth;
      else if (s == "perturbed") c.init = InitMode::perturbed;
      else if (s == "zero") c.init = InitMode::zero;
      else config_fail(text, key, "init must be 'truth', 'perturbed' or 'zero'");
    } else if (key == "perturbation") {
      c.perturbation = get_positive(text, val, key);
    } else if (key == "master_seed") {
      c.master_seed = Seed{get_as<std::uint64_t>(text, val, key, "a non-negative integer")};
    } else if (key == "output_dir") {
      c.output_dir = get_as<std::string>(text, val, key, "a string");
    } else if (key == "grid") {
      if (val.is_null()) {
        c.grid.reset();
        continue;
      }
      if (!val.is_object()) config_fail(text, key, "'grid' must be an object");
      GridSpec g;
      for (const auto& [gk, gv] : val.items()) {
        if (gk == "B") {
          g.bound = get_positive(text, gv, gk);
        } else if (gk == "h") {
          if (gv.is_string() && gv.get<std::string>() == "optimal") g.spacing.reset();
          else g.spacing = get_positive(text, gv, gk);
        } else if (gk == "c") {
          g.c = get_positive(text, gv, gk);
        } else {
          config_fail(text, gk, "unknown grid key '" + gk + "'");
        }
      }
      if (g.spacing && *g.spacing > 2.0 * g.bound) config_fail(text, "h", "grid h must be <= 2B");
      c.grid = g;
    } else {
      config_fail(text, key, "unknown config key '" + key + "'");
    }
  }
  try {
    c.fit.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return c;
}

json to_json(const ExperimentConfig& c) {
  json groups = json::array();
  for (ParamKind k : c.groups) groups.push_back(std::string(to_string(k)));
  json fit{{"subsolver", std::string(to_string(c.fit.subsolver))},
           {"outer_tol", c.fit.outer_tol},
           {"sub_tol", c.fit.sub_tol},
           {"outer_criterion", std::string(to_string(c.fit.outer_criterion))},
           {"step_size", c.fit.step_size ? json(*c.fit.step_size) : json(nullptr)},
           {"max_outer_iters", c.fit.max_outer_iters},
           {"max_sub_iters", c.fit.max_sub_iters},
           {"mu_mode", c.plugin_mu ? "plugin" : "known"},
           {"fix_alpha1", c.fit.fix_alpha1}};
  json out{{"study", std::string(to_string(c.study))},
           {"groups", groups},
           {"B", c.bound},
           {"rho", c.rho ? json(*c.rho) : json(nullptr)},
           {"mu", c.mu ? json(*c.mu) : json(nullptr)},
           {"n_list", c.n_list},
           {"replications", c.replications},
           {"fit", fit},
           {"e_list", c.tolerances()},
           {"init", c.init == InitMode::truth     ? "truth"
                    : c.init == InitMode::perturbed ? "perturbed"
                                                    : "zero"},
           {"perturbation", c.perturbation},
           {"master_seed", c.master_seed.value},
           {"output_dir", c.output_dir}};
  if (c.grid) {
    out["grid"] = json{{"B", c.grid->bound},
                       {"h", c.grid->spacing ? json(*c.grid->spacing) : json("optimal")},
                       {"c", c.grid->c}};
  } else {
    out["grid"] = nullptr;
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string field(double v) { return std::isfinite(v) ? format_double(v) : std::string(); }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_field(const std::string& s, std::size_t lineno) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("bad numeric field '" + s + "'", lineno);
  }
}

const std::array<const char*, 7> kStatNames = {"stat_a2", "stat_amid", "stat_an", "stat_b1",
                                               "stat_bmid", "stat_bn", "stat_rho"};

std::array<double, 7> stat_values(const FitStatistics& s) {
  return {s.a2, s.amid, s.an, s.b1, s.bmid, s.bn, s.rho};
}

}  // namespace

void write_rows_csv(std::ostream& os, std::span<const ResultRow> rows) {
  os << kCsvHeader << '\n';
  for (const ResultRow& r : rows) {
    os << r.study << ',' << r.group << ',' << r.n << ',' << field(r.e) << ',' << r.rep << ','
       << r.seed << ',' << (r.converged ? 1 : 0) << ',' << r.outer_iters << ',' << field(r.rho_hat)
       << ',' << field(r.rho_err_sq) << ',' << field(r.delta_alpha) << ',' << field(r.delta_beta)
       << ',' << field(r.mse_bound) << ',' << field(r.uniform_bound) << ',' << field(r.adj_mse)
       << ',' << field(r.adj_uniform);
    if (r.stats) {
      for (double v : stat_values(*r.stats)) os << ',' << field(v);
    } else {
      os << ",,,,,,,";
    }
    os << '\n';
  }
}

std::vector<ResultRow> read_rows_csv(std::istream& is) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(is, line) || line != kCsvHeader) throw FormatError("unexpected CSV header", 1);
  std::vector<ResultRow> rows;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 23) throw FormatError("expected 23 fields, got " + std::to_string(f.size()), lineno);
    ResultRow r;
    r.study = f[0];
    r.group = f[1];
    try {
      r.n = static_cast<std::size_t>(std::stoull(f[2]));
      r.rep = std::stoi(f[4]);
      r.seed = std::stoull(f[5]);
      r.converged = f[6] == "1";
      r.outer_iters = std::stoi(f[7]);
    } catch (const std::exception&) {
      throw FormatError("bad integer field", lineno);
    }
    r.e = parse_field(f[3], lineno);
    double* dst[] = {&r.rho_hat, &r.rho_err_sq, &r.delta_alpha, &r.delta_beta,
                     &r.mse_bound, &r.uniform_bound, &r.adj_mse, &r.adj_uniform};
    for (std::size_t k = 0; k < 8; ++k) *dst[k] = parse_field(f[8 + k], lineno);
    const bool any_stat = std::any_of(f.begin() + 16, f.end(), [](const std::string& s) { return !s.empty(); });
    if (any_stat) {
      FitStatistics s;
      double* sd[] = {&s.a2, &s.amid, &s.an, &s.b1, &s.bmid, &s.bn, &s.rho};
      for (std::size_t k = 0; k < 7; ++k) *sd[k] = parse_field(f[16 + k], lineno);
      r.stats = s;
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Summaries

double quantile(std::vector<double> values, double p) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

namespace {

std::vector<double> normal_scores(std::size_t m) {
  const boost::math::normal_distribution<double> std_normal;
  std::vector<double> z(m);
  for (std::size_t k = 0; k < m; ++k) {
    z[k] = boost::math::quantile(std_normal, (static_cast<double>(k) + 0.5) / static_cast<double>(m));
  }
  return z;
}

std::vector<double> finite_only(std::vector<double> v) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return !std::isfinite(x); }), v.end());
  return v;
}

}  // namespace

double qq_correlation(std::vector<double> sample) {
  sample = finite_only(std::move(sample));
  const std::size_t m = sample.size();
  if (m < 3) return std::numeric_limits<double>::quiet_NaN();
  std::sort(sample.begin(), sample.end());
  const std::vector<double> z = normal_scores(m);
  double mx = 0.0, mz = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    mx += sample[k];
    mz += z[k];
  }
  mx /= static_cast<double>(m);
  mz /= static_cast<double>(m);
  double sxz = 0.0, sxx = 0.0, szz = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    sxz += (sample[k] - mx) * (z[k] - mz);
    sxx += (sample[k] - mx) * (sample[k] - mx);
    szz += (z[k] - mz) * (z[k] - mz);
  }
  if (sxx == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxz / std::sqrt(sxx * szz);
}

namespace {

struct CellKey {
  std::string group;
  std::size_t n;
  double e;
  friend bool operator==(const CellKey&, const CellKey&) = default;
};

// Cells in order of first appearance.
std::vector<std::pair<CellKey, std::vector<const ResultRow*>>> group_cells(
    std::span<const ResultRow> rows) {
  std::vector<std::pair<CellKey, std::vector<const ResultRow*>>> cells;
  for (const ResultRow& r : rows) {
    CellKey key{r.group, r.n, r.e};
    auto it = std::find_if(cells.begin(), cells.end(), [&](const auto& c) { return c.first == key; });
    if (it == cells.end()) {
      cells.push_back({key, {}});
      it = cells.end() - 1;
    }
    it->second.push_back(&r);
  }
  return cells;
}

using Column = std::pair<const char*, double ResultRow::*>;
const std::array<Column, 8> kErrorColumns = {{{"rho_hat", &ResultRow::rho_hat},
                                              {"rho_err_sq", &ResultRow::rho_err_sq},
                                              {"delta_alpha", &ResultRow::delta_alpha},
                                              {"delta_beta", &ResultRow::delta_beta},
                                              {"mse_bound", &ResultRow::mse_bound},
                                              {"uniform_bound", &ResultRow::uniform_bound},
                                              {"adj_mse", &ResultRow::adj_mse},
                                              {"adj_uniform", &ResultRow::adj_uniform}}};

json describe(const std::vector<double>& raw) {
  const std::vector<double> v = finite_only(raw);
  if (v.empty()) return json{{"median", nullptr}, {"mean", nullptr}, {"iqr", nullptr}, {"count", 0}};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  return json{{"median", quantile(v, 0.5)},
              {"mean", mean},
              {"iqr", quantile(v, 0.75) - quantile(v, 0.25)},
              {"count", v.size()}};
}

double group_mu(const std::string& group, std::size_t n, std::optional<double> mu_override) {
  if (mu_override) return *mu_override;
  try {
    ParamSpec spec;
    spec.kind = parse_param_kind(group);
    spec.n = n;
    return spec.default_mu();
  } catch (const std::invalid_argument&) {
    return 1.0;
  }
}

json paired_block(const std::vector<double>& ref, const std::vector<double>& other) {
  std::vector<double> diff, absdiff;
  int pos = 0, neg = 0;
  for (std::size_t k = 0; k < ref.size(); ++k) {
    const double d = other[k] - ref[k];
    if (!std::isfinite(d)) continue;
    diff.push_back(d);
    absdiff.push_back(std::abs(d));
    if (d > 0) ++pos;
    if (d < 0) ++neg;
  }
  const double ref_median = quantile(finite_only(ref), 0.5);
  const double med_abs = quantile(absdiff, 0.5);
  return json{{"pairs", diff.size()},
              {"median_diff", quantile(diff, 0.5)},
              {"median_abs_diff", med_abs},
              {"ref_median", ref_median},
              {"median_abs_diff_over_ref_median", med_abs / ref_median},
              {"n_other_larger", pos},
              {"n_other_smaller", neg}};
}

}  // namespace

json summarize(std::span<const ResultRow> rows, std::optional<double> mu_override) {
  if (rows.empty()) throw std::invalid_argument("summarize needs at least one row");
  json cells = json::array();
  const auto grouped = group_cells(rows);
  for (const auto& [key, members] : grouped) {
    json cell{{"group", key.group}, {"n", key.n}, {"e", key.e}, {"replications", members.size()}};
    int conv = 0;
    for (const ResultRow* r : members) conv += r->converged ? 1 : 0;
    cell["converged"] = conv;

    json cols = json::object();
    for (const auto& [name, ptr] : kErrorColumns) {
      std::vector<double> v;
      for (const ResultRow* r : members) v.push_back(r->*ptr);
      cols[name] = describe(v);
    }
    std::vector<double> iters;
    for (const ResultRow* r : members) iters.push_back(r->outer_iters);
    cols["outer_iters"] = describe(iters);

    const bool has_stats = std::any_of(members.begin(), members.end(),
                                       [](const ResultRow* r) { return r->stats.has_value(); });
    if (has_stats) {
      json qq = json::object();
      for (std::size_t s = 0; s < kStatNames.size(); ++s) {
        std::vector<double> v;
        for (const ResultRow* r : members) {
          if (r->stats) v.push_back(stat_values(*r->stats)[s]);
        }
        cols[kStatNames[s]] = describe(v);
        const double c = qq_correlation(v);
        qq[kStatNames[s]] = std::isfinite(c) ? json(c) : json(nullptr);
      }
      cell["qq_correlation"] = qq;
    }
    cell["columns"] = cols;

    const double mu = group_mu(key.group, key.n, mu_override);
    const double dn = static_cast<double>(std::max<std::size_t>(key.n, 2));
    json overlay{{"label", "shape_only"}, {"mu", mu}};
    for (RateKind k : {RateKind::weak_l2, RateKind::uniform_cont, RateKind::uniform_disc,
                       RateKind::expnet_uniform}) {
      overlay[std::string(to_string(k))] = rate_predictor(k, dn, mu);
    }
    cell["rate_overlay"] = overlay;
    cells.push_back(std::move(cell));
  }

  // Paired comparison across tolerances within each (group, n): the first
  // tolerance seen is the reference.
  json paired = json::array();
  for (std::size_t a = 0; a < grouped.size(); ++a) {
    const CellKey& ref = grouped[a].first;
    bool first_for_gn = true;
    for (std::size_t b = 0; b < a; ++b) {
      if (grouped[b].first.group == ref.group && grouped[b].first.n == ref.n) first_for_gn = false;
    }
    if (!first_for_gn) continue;
    for (std::size_t b = a + 1; b < grouped.size(); ++b) {
      const CellKey& other = grouped[b].first;
      if (other.group != ref.group || other.n != ref.n) continue;
      std::map<int, const ResultRow*> by_rep;
      for (const ResultRow* r : grouped[a].second) by_rep[r->rep] = r;
      std::vector<double> rm, om, ru, ou;
      for (const ResultRow* r : grouped[b].second) {
        auto it = by_rep.find(r->rep);
        if (it == by_rep.end()) continue;
        rm.push_back(it->second->mse_bound);
        om.push_back(r->mse_bound);
        ru.push_back(it->second->uniform_bound);
        ou.push_back(r->uniform_bound);
      }
      paired.push_back(json{{"group", ref.group},
                            {"n", ref.n},
                            {"e_ref", ref.e},
                            {"e_other", other.e},
                            {"mse_bound", paired_block(rm, om)},
                            {"uniform_bound", paired_block(ru, ou)}});
    }
  }
  return json{{"cells", cells}, {"paired_differences", paired}};
}

std::vector<QqPoint> qq_points(std::span<const ResultRow> rows) {
  std::vector<QqPoint> out;
  for (const auto& [key, members] : group_cells(rows)) {
    for (std::size_t s = 0; s < kStatNames.size(); ++s) {
      std::vector<double> v;
      for (const ResultRow* r : members) {
        if (r->stats) v.push_back(stat_values(*r->stats)[s]);
      }
      v = finite_only(std::move(v));
      if (v.empty()) continue;
      std::sort(v.begin(), v.end());
      const std::vector<double> z = normal_scores(v.size());
      for (std::size_t k = 0; k < v.size(); ++k) {
        out.push_back({key.group, key.n, key.e, kStatNames[s], k + 1, z[k], v[k]});
      }
    }
  }
  return out;
}

void write_qq_csv(std::ostream& os, std::span<const QqPoint> points) {
  os << "group,n,e,statistic,k,normal_quantile,empirical_quantile\n";
  for (const QqPoint& p : points) {
    os << p.group << ',' << p.n << ',' << field(p.e) << ',' << p.statistic << ',' << p.k << ','
       << field(p.normal_quantile) << ',' << field(p.empirical_quantile) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Runner

namespace {

struct Cell {
  ParamKind kind;
  std::size_t n;
  NodeParams truth;
  GlobalParams globals;
  NodeParams init;
  double init_rho;
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<ResultRow> run_task(const ExperimentConfig& config, const Cell& cell, int rep) {
  const Seed net_seed = rng::derive(config.master_seed, {rng::kNetworkSeed, cell.n,
                                                         static_cast<std::uint64_t>(rep)});
  std::vector<ResultRow> rows;
  const std::vector<double> tols = config.tolerances();

  auto base_row = [&](double e) {
    ResultRow r;
    r.study = std::string(to_string(config.study));
    r.group = std::string(to_string(cell.kind));
    r.n = cell.n;
    r.e = e;
    r.rep = rep;
    r.seed = net_seed.value;
    return r;
  };

  std::optional<Network> net;
  try {
    net = sample_network(cell.truth, cell.globals, net_seed);
  } catch (const std::exception&) {
    for (double e : tols) {
      ResultRow r = base_row(e);
      r.rho_hat = r.rho_err_sq = r.delta_alpha = r.delta_beta = kNaN;
      r.mse_bound = r.uniform_bound = r.adj_mse = r.adj_uniform = kNaN;
      rows.push_back(r);
    }
    return rows;
  }

  for (double e : tols) {
    ResultRow r = base_row(e);
    try {
      FitConfig fc = config.fit;
      fc.outer_tol = e;
      fc.mu_mode = config.plugin_mu ? MuMode::plugin() : MuMode::known(cell.globals.mu);
      FitResult fit;
      if (config.grid) {
        const double h = config.grid->spacing
                             ? *config.grid->spacing
                             : optimal_spacing(cell.n, cell.globals.mu, config.grid->c,
                                               config.grid->bound);
        const Grid grid = Grid::uniform(config.grid->bound, h);
        fit = discretized_fit(*net, project_to_grid(cell.init, grid), cell.init_rho, grid, fc);
      } else {
        fit = coordinate_descent_fit(*net, cell.init, cell.init_rho, fc);
      }
      const ErrorReport er = error_report(fit.params, fit.rho, cell.truth, cell.globals.rho);
      r.converged = fit.converged;
      r.outer_iters = fit.outer_iters;
      r.rho_hat = fit.rho;
      r.rho_err_sq = er.rho_error_sq;
      r.delta_alpha = er.delta_alpha;
      r.delta_beta = er.delta_beta;
      r.mse_bound = er.mse_bound;
      r.uniform_bound = er.uniform_bound;
      r.adj_mse = er.shift_adjusted_mse;
      r.adj_uniform = er.shift_adjusted_uniform;
      if (config.study == Study::normality) {
        // Statistics use the alpha_1 = 0 member of the fitted class.
        r.stats = fit_statistics(normalize_alpha1(fit.params), fit.rho, cell.truth,
                                 cell.globals.rho);
      }
    } catch (const std::exception&) {
      r.converged = false;
      r.rho_hat = r.rho_err_sq = r.delta_alpha = r.delta_beta = kNaN;
      r.mse_bound = r.uniform_bound = r.adj_mse = r.adj_uniform = kNaN;
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentConfig& config, int jobs) {
  if (config.replications < 1) throw ConfigError("replications must be >= 1");
  std::vector<Cell> cells;
  for (ParamKind kind : config.groups) {
    for (std::size_t n : config.n_list) {
      ParamSpec spec;
      spec.kind = kind;
      spec.n = n;
      spec.bound = config.bound;
      spec.rho = config.rho;
      spec.mu = config.mu;
      auto [truth, globals] = gen_params(spec, rng::derive(config.master_seed, {rng::kParamSeed, n}));
      Cell cell{kind, n, truth, globals, truth, globals.rho};
      switch (config.init) {
        case InitMode::truth:
          break;
        case InitMode::perturbed:
          // One perturbation per cell, shared by every replication and tolerance.
          cell.init = perturb_params(truth, config.perturbation,
                                     rng::derive(config.master_seed, {rng::kInitSeed, n}));
          break;
        case InitMode::zero:
          cell.init = NodeParams::zeros(n);
          cell.init_rho = 0.0;
          break;
      }
      cells.push_back(std::move(cell));
    }
  }

  const std::size_t reps = static_cast<std::size_t>(config.replications);
  const std::size_t total = cells.size() * reps;
  std::vector<std::vector<ResultRow>> results(total);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < total; t = next++) {
      results[t] = run_task(config, cells[t / reps], static_cast<int>(t % reps));
    }
  };
  const int threads = std::max(1, jobs);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  ExperimentOutput out;
  for (auto& rs : results) {
    for (auto& r : rs) out.rows.push_back(std::move(r));
  }
  // Task order is (group, n, rep) with tolerances innermost; present rows
  // cell by cell: (group, n, e, rep).
  std::stable_sort(out.rows.begin(), out.rows.end(), [&](const ResultRow& a, const ResultRow& b) {
    auto gi = [&](const std::string& g) {
      for (std::size_t k = 0; k < config.groups.size(); ++k) {
        if (to_string(config.groups[k]) == g) return k;
      }
      return config.groups.size();
    };
    auto ni = [&](std::size_t n) {
      return std::find(config.n_list.begin(), config.n_list.end(), n) - config.n_list.begin();
    };
    const auto tols = config.tolerances();
    auto ei = [&](double e) { return std::find(tols.begin(), tols.end(), e) - tols.begin(); };
    return std::tuple(gi(a.group), ni(a.n), ei(a.e), a.rep) <
           std::tuple(gi(b.group), ni(b.n), ei(b.e), b.rep);
  });
  out.summary = summarize(out.rows, config.mu);
  return out;
}

void write_experiment_outputs(const ExperimentConfig& config, const ExperimentOutput& out) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + config.output_dir + "'");
  const std::string stem = (fs::path(config.output_dir) / to_string(config.study)).string();

  std::ostringstream csv;
  write_rows_csv(csv, out.rows);
  write_text_file(stem + "_rows.csv", csv.str());
  write_text_file(stem + "_summary.json", out.summary.dump(2) + "\n");
  write_text_file(stem + "_config.json", to_json(config).dump(2) + "\n");

  const auto points = qq_points(out.rows);
  if (!points.empty()) {
    std::ostringstream qq;
    write_qq_csv(qq, points);
    write_text_file(stem + "_qq.csv", qq.str());
  }
}

}  // namespace expnet
