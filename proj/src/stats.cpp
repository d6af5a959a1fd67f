#include "stripefit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "stripefit/csv.hpp"
#include "stripefit/error.hpp"

namespace stripefit {

namespace {

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_cf(double x, double a, double b) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-16;
  constexpr int kMaxIter = 100000;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw Error(ErrorCode::kDomain, "incomplete beta continued fraction did not converge");
}

double mean_of(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double sum_sq_dev(std::span<const double> v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s;
}

std::string fmt(double v, const char* spec) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

double reg_inc_beta(double x, double a, double b) {
  if (!(x >= 0.0 && x <= 1.0) || !(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw Error(ErrorCode::kDomain, "incomplete beta needs x in [0,1] and a, b > 0");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  // The log-gamma terms reach ~1e3 for large a, b; cancel them in long double.
  const long double la = a, lb = b, lx = x;
  const double log_front = static_cast<double>(std::lgamma(la + lb) - std::lgamma(la) - std::lgamma(lb) +
                                               la * std::log(lx) + lb * std::log1p(-lx));
  if (x < (a + 1.0) / (a + b + 2.0)) return std::exp(log_front) * beta_cf(x, a, b) / a;
  return 1.0 - std::exp(log_front) * beta_cf(1.0 - x, b, a) / b;
}

double f_upper_tail(double f, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0) || std::isnan(f)) throw Error(ErrorCode::kDomain, "bad F distribution arguments");
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return reg_inc_beta(d2 / (d2 + d1 * f), 0.5 * d2, 0.5 * d1);
}

double t_two_sided(double t, double df) {
  if (!(df > 0.0) || std::isnan(t)) throw Error(ErrorCode::kDomain, "bad Student-t arguments");
  if (std::isinf(t)) return 0.0;
  return reg_inc_beta(df / (df + t * t), 0.5 * df, 0.5);
}

AnovaReport one_way_anova(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw Error(ErrorCode::kSampleSize, "ANOVA needs at least two groups");
  std::size_t total = 0;
  double grand = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw Error(ErrorCode::kSampleSize, "every ANOVA group needs at least two values");
    total += g.size();
    grand += std::accumulate(g.begin(), g.end(), 0.0);
  }
  grand /= static_cast<double>(total);

  AnovaReport r;
  for (const auto& g : groups) {
    const double m = mean_of(g);
    r.ss_between += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    r.ss_within += sum_sq_dev(g, m);
  }
  if (r.ss_within <= 0.0) {
    throw Error(ErrorCode::kZeroVariance, "within-group variance is zero; F is undefined");
  }
  r.df_between = static_cast<int>(groups.size()) - 1;
  r.df_within = static_cast<int>(total - groups.size());
  r.f_stat = (r.ss_between / r.df_between) / (r.ss_within / r.df_within);
  r.p_value = f_upper_tail(r.f_stat, r.df_between, r.df_within);
  r.eta_sq = r.ss_between / (r.ss_between + r.ss_within);
  return r;
}

TTestReport one_sample_ttest(std::span<const double> sample, double mu0) {
  if (sample.size() < 2) throw Error(ErrorCode::kSampleSize, "t-test needs at least two values");
  // Work on differences from mu0 so that shifting sample and mu0 together
  // leaves the statistic unchanged.
  std::vector<double> diff(sample.begin(), sample.end());
  for (auto& d : diff) d -= mu0;
  TTestReport r;
  const double mean_diff = mean_of(diff);
  r.mean = mu0 + mean_diff;
  r.sd = std::sqrt(sum_sq_dev(diff, mean_diff) / static_cast<double>(sample.size() - 1));
  if (!(r.sd > 0.0)) throw Error(ErrorCode::kZeroVariance, "sample standard deviation is zero");
  r.df = static_cast<int>(sample.size()) - 1;
  r.t_stat = mean_diff / (r.sd / std::sqrt(static_cast<double>(sample.size())));
  r.p_value = t_two_sided(r.t_stat, r.df);
  return r;
}

double pooled_t_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw Error(ErrorCode::kSampleSize, "two-sample t needs two values per group");
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double pooled = (sum_sq_dev(a, ma) + sum_sq_dev(b, mb)) / (na + nb - 2.0);
  if (!(pooled > 0.0)) throw Error(ErrorCode::kZeroVariance, "pooled variance is zero");
  return (ma - mb) / std::sqrt(pooled * (1.0 / na + 1.0 / nb));
}

std::string to_string(const StrategyPair& pair) { return to_string(pair.first) + " vs " + to_string(pair.second); }

std::vector<StrategyPair> default_pairs() {
  return {{{WaveKind::kSine, OptimizerKind::kNelderMead}, {WaveKind::kSine, OptimizerKind::kAnnealing}},
          {{WaveKind::kSquare, OptimizerKind::kNelderMead}, {WaveKind::kSquare, OptimizerKind::kAnnealing}}};
}

std::vector<PairComparison> strategy_comparison(const StrategyTable& table, const std::vector<StrategyPair>& pairs,
                                                double alpha) {
  std::map<double, std::map<std::string, std::vector<double>>> values;
  for (const auto& row : table.rows) {
    auto& cell = values[row.crossing_angle_deg][to_string(row.strategy)];
    if (row.fit) cell.push_back(row.fit->c_norm * kObjectiveMax);
  }
  std::vector<PairComparison> out;
  for (const auto& [angle, cells] : values) {
    for (const auto& pair : pairs) {
      auto lookup = [&](Strategy s) -> const std::vector<double>& {
        const auto it = cells.find(to_string(s));
        if (it == cells.end() || it->second.empty()) {
          throw Error(ErrorCode::kIncompleteTable,
                      "no " + to_string(s) + " results at angle " + csv::format_double(angle, 6));
        }
        return it->second;
      };
      const auto& a = lookup(pair.first);
      const auto& b = lookup(pair.second);
      PairComparison c;
      c.crossing_angle_deg = angle;
      c.pair = pair;
      c.n_first = a.size();
      c.n_second = b.size();
      c.mean_first = mean_of(a);
      c.mean_second = mean_of(b);
      try {
        c.anova = one_way_anova({a, b});
        c.significant = c.anova->p_value < alpha;
      } catch (const Error& e) {
        c.error = e.what();
      }
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<NormalTestCell> bisector_normal_test(const StrategyTable& table, double alpha, double mu0_deg) {
  std::map<std::pair<double, std::string>, std::pair<Strategy, std::vector<double>>> cells;
  for (const auto& row : table.rows) {
    auto& cell = cells[{row.crossing_angle_deg, to_string(row.strategy)}];
    cell.first = row.strategy;
    if (row.fit) cell.second.push_back(row.fit->params.gamma_deg);
  }
  std::vector<NormalTestCell> out;
  for (const auto& [key, cell] : cells) {
    NormalTestCell c;
    c.crossing_angle_deg = key.first;
    c.strategy = cell.first;
    c.n = cell.second.size();
    if (c.n > 0) c.mean_gamma_deg = mean_of(cell.second);
    try {
      c.report = one_sample_ttest(cell.second, mu0_deg);
      c.significant = c.report->p_value < alpha;
    } catch (const Error& e) {
      c.error = e.what();
    }
    out.push_back(std::move(c));
  }
  return out;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::kSampleSize, "quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorCode::kDomain, "quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

QuantileRow summarize(double angle, Strategy strategy, std::string metric, const std::vector<double>& v) {
  QuantileRow r;
  r.crossing_angle_deg = angle;
  r.strategy = strategy;
  r.metric = std::move(metric);
  r.n = v.size();
  r.min = quantile(v, 0.0);
  r.q1 = quantile(v, 0.25);
  r.median = quantile(v, 0.5);
  r.q3 = quantile(v, 0.75);
  r.max = quantile(v, 1.0);
  return r;
}

struct Collected {
  Strategy strategy;
  std::vector<double> gamma, lambda, c, time;
};

}  // namespace

std::vector<QuantileRow> boxplot_quantiles(const StrategyTable& table) {
  std::map<std::pair<double, std::string>, Collected> cells;
  for (const auto& row : table.rows) {
    if (!row.fit) continue;
    auto& cell = cells[{row.crossing_angle_deg, to_string(row.strategy)}];
    cell.strategy = row.strategy;
    cell.gamma.push_back(row.fit->params.gamma_deg);
    cell.lambda.push_back(row.fit->params.lambda_m);
    cell.c.push_back(row.fit->c_norm * kObjectiveMax);
  }
  std::vector<QuantileRow> out;
  for (const auto& [key, cell] : cells) {
    out.push_back(summarize(key.first, cell.strategy, "gamma_deg", cell.gamma));
    out.push_back(summarize(key.first, cell.strategy, "lambda_m", cell.lambda));
    out.push_back(summarize(key.first, cell.strategy, "C", cell.c));
  }
  return out;
}

std::vector<QuantileRow> timing_quantiles(const StrategyTable& table) {
  std::map<std::string, Collected> cells;
  for (const auto& row : table.rows) {
    if (!row.fit) continue;
    auto& cell = cells[to_string(row.strategy)];
    cell.strategy = row.strategy;
    cell.time.push_back(row.fit->wall_time_s);
  }
  std::vector<QuantileRow> out;
  for (const auto& [key, cell] : cells) {
    out.push_back(summarize(std::numeric_limits<double>::quiet_NaN(), cell.strategy, "wall_time_s", cell.time));
  }
  return out;
}

void write_anova_csv(const std::vector<PairComparison>& rows, std::ostream& out) {
  out << "angle,pair,n_first,n_second,mean_first,mean_second,f_stat,df_between,df_within,p_value,eta_sq,"
         "ss_between,ss_within,significant,error\n";
  for (const auto& r : rows) {
    out << csv::format_double(r.crossing_angle_deg) << ',' << to_string(r.pair) << ',' << r.n_first << ','
        << r.n_second << ',' << csv::format_double(r.mean_first) << ',' << csv::format_double(r.mean_second) << ',';
    if (r.anova) {
      const auto& a = *r.anova;
      out << csv::format_double(a.f_stat) << ',' << a.df_between << ',' << a.df_within << ','
          << csv::format_double(a.p_value) << ',' << csv::format_double(a.eta_sq) << ','
          << csv::format_double(a.ss_between) << ',' << csv::format_double(a.ss_within) << ','
          << (r.significant ? 1 : 0) << ",\n";
    } else {
      std::string msg = r.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      out << ",,,,,,,0," << msg << '\n';
    }
  }
}

void write_ttest_csv(const std::vector<NormalTestCell>& rows, std::ostream& out) {
  out << "angle,strategy,n,mean_gamma_deg,t_stat,df,p_value,significant,error\n";
  for (const auto& r : rows) {
    out << csv::format_double(r.crossing_angle_deg) << ',' << to_string(r.strategy) << ',' << r.n << ','
        << csv::format_double(r.mean_gamma_deg) << ',';
    if (r.report) {
      out << csv::format_double(r.report->t_stat) << ',' << r.report->df << ',' << csv::format_double(r.report->p_value)
          << ',' << (r.significant ? 1 : 0) << ",\n";
    } else {
      std::string msg = r.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      out << ",,,0," << msg << '\n';
    }
  }
}

void write_quantiles_csv(const std::vector<QuantileRow>& rows, std::ostream& out) {
  out << "angle,strategy,metric,n,min,q1,median,q3,max\n";
  for (const auto& r : rows) {
    out << (std::isnan(r.crossing_angle_deg) ? std::string("all") : csv::format_double(r.crossing_angle_deg)) << ','
        << to_string(r.strategy) << ',' << r.metric << ',' << r.n << ',' << csv::format_double(r.min) << ','
        << csv::format_double(r.q1) << ',' << csv::format_double(r.median) << ',' << csv::format_double(r.q3) << ','
        << csv::format_double(r.max) << '\n';
  }
}

std::string render_tables(const std::vector<PairComparison>& anova, const std::vector<NormalTestCell>& ttests) {
  std::ostringstream os;
  auto column_table = [&os](const std::string& title, const std::vector<std::string>& columns,
                            const std::map<double, std::map<std::string, std::string>>& cells) {
    os << title << '\n';
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-8s", "angle");
    os << buf;
    for (const auto& c : columns) {
      std::snprintf(buf, sizeof buf, " | %-30s", c.c_str());
      os << buf;
    }
    os << '\n';
    for (const auto& [angle, row] : cells) {
      std::snprintf(buf, sizeof buf, "%-8g", angle);
      os << buf;
      for (const auto& c : columns) {
        const auto it = row.find(c);
        std::snprintf(buf, sizeof buf, " | %-30s", it == row.end() ? "-" : it->second.c_str());
        os << buf;
      }
      os << '\n';
    }
    os << '\n';
  };

  std::vector<std::string> pair_cols;
  std::map<double, std::map<std::string, std::string>> anova_cells;
  for (const auto& r : anova) {
    const std::string col = to_string(r.pair);
    if (std::find(pair_cols.begin(), pair_cols.end(), col) == pair_cols.end()) pair_cols.push_back(col);
    anova_cells[r.crossing_angle_deg][col] =
        r.anova ? "F=" + fmt(r.anova->f_stat, "%.3f") + " p=" + fmt(r.anova->p_value, "%.3f") +
                      (r.significant ? "*" : "") + " eta2=" + fmt(r.anova->eta_sq, "%.3f")
                : "error";
  }
  column_table("One-way ANOVA of C per strategy pair (* p < alpha)", pair_cols, anova_cells);

  std::vector<std::string> strat_cols;
  std::map<double, std::map<std::string, std::string>> t_cells;
  for (const auto& r : ttests) {
    const std::string col = to_string(r.strategy);
    if (std::find(strat_cols.begin(), strat_cols.end(), col) == strat_cols.end()) strat_cols.push_back(col);
    t_cells[r.crossing_angle_deg][col] =
        r.report ? "t=" + fmt(r.report->t_stat, "%.3f") + " p=" + fmt(r.report->p_value, "%.3f") +
                       (r.significant ? "*" : "")
                 : "error";
  }
  column_table("One-sample t-test of gamma against 90 deg (* p < alpha)", strat_cols, t_cells);
  return os.str();
}

}  // namespace stripefit
