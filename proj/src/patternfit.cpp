#include "stripefit/patternfit.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "stripefit/config.hpp"
#include "stripefit/csv.hpp"
#include "stripefit/error.hpp"
#include "stripefit/rng.hpp"

namespace stripefit {

namespace {

constexpr double kFullGamma = 180.0;

bool full_gamma(const Bounds& b) { return b.gamma_hi_deg - b.gamma_lo_deg >= kFullGamma - 1e-12; }
bool full_psi(const Bounds& b) { return b.psi_hi_rad - b.psi_lo_rad >= kTwoPi - 1e-12; }

WaveParams params_in_box(std::span<const double> x, const Box& box) {
  return WaveParams{fold_into(x[0], box[0]), fold_into(x[1], box[1]), fold_into(x[2], box[2])};
}

Objective make_objective(const Frame& frame, WaveKind wave, const Box& box) {
  return [&frame, wave, box](std::span<const double> x) { return objective(wave, frame, params_in_box(x, box)); };
}

void check_frame(const Frame& frame) {
  if (frame.g1.empty() || frame.g2.empty()) {
    throw Error(ErrorCode::kGroupEmpty, "frame at t=" + std::to_string(frame.t) + " has an empty group");
  }
  if (frame_diameter(frame) < kDegenerateDiameterM) {
    throw Error(ErrorCode::kDegenerateFrame, "all positions of the frame at t=" + std::to_string(frame.t) +
                                                 " coincide; the objective is constant");
  }
}

FitResult finish(const Frame& frame, Strategy strategy, const FitConfig& config, const OptimResult& r,
                 const Box& box) {
  FitResult out;
  out.strategy = strategy;
  out.params = canonicalize(params_in_box(r.x, box));
  out.raw_value = objective(strategy.wave, frame, out.params);
  out.c_norm = out.raw_value / kObjectiveMax;
  out.frame_t = frame.t;
  out.evaluations = r.evaluations;
  out.iterations = r.iterations;
  out.wall_time_s = r.wall_time_s;
  out.config_fingerprint = config_fingerprint(config);
  out.seed = config.sa.seed;
  out.trace = r.trace;
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::string to_string(Strategy s) {
  return std::string(to_string(s.wave)) + (s.optimizer == OptimizerKind::kNelderMead ? "+nm" : "+sa");
}

std::optional<Strategy> parse_strategy(std::string_view name) {
  const auto plus = name.find('+');
  if (plus == std::string_view::npos) return std::nullopt;
  const auto wave = parse_wave_kind(name.substr(0, plus));
  const auto opt = name.substr(plus + 1);
  if (!wave) return std::nullopt;
  if (opt == "nm") return Strategy{*wave, OptimizerKind::kNelderMead};
  if (opt == "sa") return Strategy{*wave, OptimizerKind::kAnnealing};
  return std::nullopt;
}

std::vector<Strategy> all_strategies() {
  return {{WaveKind::kSine, OptimizerKind::kNelderMead},
          {WaveKind::kSine, OptimizerKind::kAnnealing},
          {WaveKind::kSquare, OptimizerKind::kNelderMead},
          {WaveKind::kSquare, OptimizerKind::kAnnealing}};
}

void validate_bounds(const Bounds& b) {
  if (!(b.lambda_min_m > 0.0) || !(b.lambda_max_m > b.lambda_min_m) || !std::isfinite(b.lambda_max_m)) {
    throw Error(ErrorCode::kConfiguration, "wavelength bounds need 0 < lambda_min < lambda_max");
  }
  if (!(b.gamma_lo_deg >= 0.0) || !(b.gamma_hi_deg <= kFullGamma) || !(b.gamma_hi_deg > b.gamma_lo_deg)) {
    throw Error(ErrorCode::kConfiguration, "gamma bounds must be a non-empty sub-interval of [0, 180]");
  }
  if (!(b.psi_lo_rad >= 0.0) || !(b.psi_hi_rad <= kTwoPi + 1e-12) || !(b.psi_hi_rad > b.psi_lo_rad)) {
    throw Error(ErrorCode::kConfiguration, "psi bounds must be a non-empty sub-interval of [0, 2 pi]");
  }
}

Box canonical_box(const Bounds& b) {
  validate_bounds(b);
  return {Interval{b.gamma_lo_deg, b.gamma_hi_deg, full_gamma(b)}, Interval{b.lambda_min_m, b.lambda_max_m, false},
          Interval{b.psi_lo_rad, b.psi_hi_rad, full_psi(b)}};
}

Box search_box(const Bounds& b) {
  Box box = canonical_box(b);
  if (box[0].periodic) box[0].hi = box[0].lo + 2.0 * kFullGamma;
  return box;
}

std::vector<WaveParams> default_nm_starts() {
  std::vector<WaveParams> starts;
  for (double gamma : {30.0, 90.0, 150.0}) {
    for (double lambda : {1.0, 2.0, 4.0}) {
      for (double psi : {0.0, kPi}) starts.push_back({gamma, lambda, psi});
    }
  }
  return starts;
}

FitResult fit_frame(const Frame& frame, Strategy strategy, const FitConfig& config) {
  check_frame(frame);
  const Box box = search_box(config.bounds);
  const Objective obj = make_objective(frame, strategy.wave, box);
  OptimResult r;
  if (strategy.optimizer == OptimizerKind::kAnnealing) {
    r = simulated_annealing(obj, box, config.sa);
  } else {
    std::vector<std::vector<double>> starts;
    starts.reserve(config.nm_starts.size());
    for (const auto& s : config.nm_starts) starts.push_back({s.gamma_deg, s.lambda_m, s.psi_rad});
    r = nm_multistart(obj, starts, config.nm);
  }
  return finish(frame, strategy, config, r, box);
}

GridResult objective_surface(const Frame& frame, WaveKind wave, const FitConfig& config) {
  check_frame(frame);
  const Box box = canonical_box(config.bounds);
  return grid_search(make_objective(frame, wave, box), box, config.grid_resolution, true);
}

FitResult grid_fit_frame(const Frame& frame, WaveKind wave, const FitConfig& config) {
  check_frame(frame);
  const Box box = canonical_box(config.bounds);
  const GridResult grid = grid_search(make_objective(frame, wave, box), box, config.grid_resolution, false);
  // The optimizer field is meaningless for the oracle; keep the annealing tag.
  return finish(frame, Strategy{wave, OptimizerKind::kAnnealing}, config, grid.best, box);
}

std::string to_string(FramePolicyKind kind) {
  switch (kind) {
    case FramePolicyKind::kSingle: return "single";
    case FramePolicyKind::kBestOverWindow: return "best";
    case FramePolicyKind::kPerFrameSeries: return "series";
  }
  return "best";
}

std::optional<FramePolicyKind> parse_frame_policy(std::string_view name) {
  if (name == "single") return FramePolicyKind::kSingle;
  if (name == "best") return FramePolicyKind::kBestOverWindow;
  if (name == "series") return FramePolicyKind::kPerFrameSeries;
  return std::nullopt;
}

TrialFit fit_trial(const Trial& trial, Strategy strategy, const FramePolicy& policy, const FitConfig& config) {
  const Vec2 bisector = config.bisector_override ? *config.bisector_override
                                                 : resolve_bisector(trial, config.bisector_window_s);
  auto fit_at = [&](double t) { return fit_frame(rotate_to_bisector(frame_at(trial, t), bisector), strategy, config); };

  TrialFit out;
  if (policy.kind == FramePolicyKind::kSingle) {
    out.frames.push_back(fit_at(policy.t));
  } else {
    if (!(config.frame_stride_s > 0.0)) throw Error(ErrorCode::kConfiguration, "frame stride must be positive");
    const TimeWindow window = config.window_override ? *config.window_override : crossing_window(trial);
    const double centre = 0.5 * (window.t_start + window.t_end);
    for (std::size_t k = 0;; ++k) {
      const double t = window.t_start + static_cast<double>(k) * config.frame_stride_s;
      if (t > window.t_end + 1e-9) break;
      out.frames.push_back(fit_at(t));
    }
    for (std::size_t i = 1; i < out.frames.size(); ++i) {
      const auto& cand = out.frames[i];
      const auto& best = out.frames[out.best_index];
      if (cand.c_norm > best.c_norm ||
          (cand.c_norm == best.c_norm && std::abs(cand.frame_t - centre) < std::abs(best.frame_t - centre))) {
        out.best_index = i;
      }
    }
  }

  std::vector<double> gammas;
  std::vector<double> lambdas;
  out.summary.max_c_norm = out.frames.front().c_norm;
  for (const auto& f : out.frames) {
    gammas.push_back(f.params.gamma_deg);
    lambdas.push_back(f.params.lambda_m);
    out.summary.max_c_norm = std::max(out.summary.max_c_norm, f.c_norm);
  }
  out.summary.median_gamma_deg = median(gammas);
  out.summary.median_lambda_m = median(lambdas);
  return out;
}

const TableRow* StrategyTable::find(std::string_view trial_id, Strategy strategy) const {
  for (const auto& row : rows) {
    if (row.trial_id == trial_id && row.strategy == strategy) return &row;
  }
  return nullptr;
}

std::size_t StrategyTable::failed_rows() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const TableRow& r) { return !r.fit.has_value(); }));
}

std::uint64_t row_seed(const BatchOptions& options, std::string_view trial_id) {
  const std::uint64_t id_hash = fnv1a64(trial_id);
  return options.seed_mode == SeedMode::kFromTrialId ? id_hash : mix_seed(options.seed, id_hash);
}

StrategyTable run_batch(const TrialSet& trials, const std::vector<Strategy>& strategies, const FitConfig& config,
                        const BatchOptions& options) {
  if (trials.empty()) throw Error(ErrorCode::kNoTrials, "batch needs at least one trial");
  if (strategies.empty()) throw Error(ErrorCode::kConfiguration, "batch needs at least one strategy");
  validate_bounds(config.bounds);

  const std::size_t n = trials.size() * strategies.size();
  const std::string fingerprint = config_fingerprint(config);
  StrategyTable table;
  table.rows.resize(n);
  std::atomic<std::size_t> next{0};

  auto work = [&]() {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      const Trial& trial = trials[i / strategies.size()];
      TableRow& row = table.rows[i];
      row.trial_id = trial.id();
      row.crossing_angle_deg = trial.crossing_angle_deg();
      row.strategy = strategies[i % strategies.size()];
      try {
        FitConfig row_config = config;
        row_config.sa.seed = row_seed(options, trial.id());
        FitResult fit = fit_trial(trial, row.strategy, options.policy, row_config).best();
        fit.config_fingerprint = fingerprint;
        row.fit = std::move(fit);
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };

  const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, n);
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  return table;
}

void write_results_csv(const StrategyTable& table, std::ostream& out) {
  out << kResultsCsvHeader << '\n';
  for (const auto& row : table.rows) {
    if (!row.fit) continue;
    const auto& f = *row.fit;
    out << row.trial_id << ',' << csv::format_double(row.crossing_angle_deg) << ',' << to_string(row.strategy) << ','
        << csv::format_double(f.params.gamma_deg) << ',' << csv::format_double(f.params.lambda_m) << ','
        << csv::format_double(f.params.psi_rad) << ',' << csv::format_double(f.c_norm) << ',' << f.evaluations << ','
        << csv::format_double(f.wall_time_s) << ',' << csv::format_double(f.frame_t) << ',' << f.config_fingerprint
        << '\n';
  }
}

void write_errors_csv(const StrategyTable& table, std::ostream& out) {
  out << "trial_id,angle,strategy,error\n";
  for (const auto& row : table.rows) {
    if (row.fit) continue;
    std::string message = row.error;
    std::replace(message.begin(), message.end(), ',', ';');
    std::replace(message.begin(), message.end(), '\n', ' ');
    out << row.trial_id << ',' << csv::format_double(row.crossing_angle_deg) << ',' << to_string(row.strategy) << ','
        << message << '\n';
  }
}

StrategyTable read_results_csv(std::istream& in) {
  StrategyTable table;
  std::string raw;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = csv::trim(raw);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kResultsCsvHeader) {
        throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": expected results header");
      }
      header_seen = true;
      continue;
    }
    const auto fields = csv::split(line);
    if (fields.size() != 11) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": expected 11 fields");
    }
    const auto strategy = parse_strategy(fields[2]);
    if (!strategy) {
      throw Error(ErrorCode::kSchema, "line " + std::to_string(line_no) + ": unknown strategy '" +
                                          std::string(fields[2]) + "'");
    }
    TableRow row;
    row.trial_id = std::string(fields[0]);
    row.crossing_angle_deg = csv::parse_double(fields[1], line_no, "angle");
    row.strategy = *strategy;
    FitResult f;
    f.strategy = *strategy;
    f.params.gamma_deg = csv::parse_double(fields[3], line_no, "gamma_deg");
    f.params.lambda_m = csv::parse_double(fields[4], line_no, "lambda_m");
    f.params.psi_rad = csv::parse_double(fields[5], line_no, "psi_rad");
    f.c_norm = csv::parse_double(fields[6], line_no, "c_norm");
    f.raw_value = f.c_norm * kObjectiveMax;
    f.evaluations = static_cast<std::size_t>(csv::parse_int(fields[7], line_no, "evaluations"));
    f.wall_time_s = csv::parse_double(fields[8], line_no, "wall_time_s");
    f.frame_t = csv::parse_double(fields[9], line_no, "frame_t");
    f.config_fingerprint = std::string(fields[10]);
    row.fit = std::move(f);
    table.rows.push_back(std::move(row));
  }
  if (!header_seen) throw Error(ErrorCode::kParse, "results CSV is empty");
  return table;
}

std::string results_to_json(const StrategyTable& table, bool with_trace) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json item{{"trial_id", row.trial_id}, {"angle", row.crossing_angle_deg}, {"strategy", to_string(row.strategy)}};
    if (!row.fit) {
      item["error"] = row.error;
    } else {
      const auto& f = *row.fit;
      item["gamma_deg"] = f.params.gamma_deg;
      item["lambda_m"] = f.params.lambda_m;
      item["psi_rad"] = f.params.psi_rad;
      item["c_norm"] = f.c_norm;
      item["raw_value"] = f.raw_value;
      item["evaluations"] = f.evaluations;
      item["iterations"] = f.iterations;
      item["wall_time_s"] = f.wall_time_s;
      item["frame_t"] = f.frame_t;
      item["config_fingerprint"] = f.config_fingerprint;
      item["seed"] = f.seed;
      if (with_trace) {
        nlohmann::json trace = nlohmann::json::array();
        for (const auto& p : f.trace) trace.push_back({p.iteration, p.best_value});
        item["trace"] = trace;
      }
    }
    doc.push_back(item);
  }
  return doc.dump(2);
}

}  // namespace stripefit
