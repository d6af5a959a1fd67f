#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "stripefit/config.hpp"
#include "stripefit/csv.hpp"
#include "stripefit/error.hpp"
#include "stripefit/filter.hpp"
#include "stripefit/patternfit.hpp"
#include "stripefit/stats.hpp"
#include "stripefit/synth.hpp"
#include "stripefit/trial_io.hpp"

namespace stripefit {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

enum class LogLevel { kQuiet = 0, kError = 1, kWarn = 2, kInfo = 3, kDebug = 4 };

LogLevel log_level() {
  const char* env = std::getenv("STRIPEFIT_LOG");
  if (env == nullptr) return LogLevel::kInfo;
  const std::string v(env);
  if (v == "quiet" || v == "0") return LogLevel::kQuiet;
  if (v == "error" || v == "1") return LogLevel::kError;
  if (v == "warn" || v == "2") return LogLevel::kWarn;
  if (v == "debug" || v == "4") return LogLevel::kDebug;
  return LogLevel::kInfo;
}

void log(LogLevel level, const std::string& message) {
  static const LogLevel threshold = log_level();
  if (level > threshold) return;
  static const char* names[] = {"", "error", "warn", "info", "debug"};
  std::cerr << "stripefit: " << names[static_cast<int>(level)] << ": " << message << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "failed writing '" + path.string() + "'");
  log(LogLevel::kDebug, "wrote " + path.string());
}

template <typename Fn>
void write_stream(const fs::path& path, Fn&& fn) {
  std::ostringstream os;
  fn(os);
  write_text(path, os.str());
}

fs::path prepare_out_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create output directory '" + dir + "': " + ec.message());
  return p;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// ---- option groups shared by several subcommands ----

struct FilterFlags {
  bool enabled = false;
  int order = 4;
  double cutoff_hz = 0.5;

  void add(CLI::App& app, bool default_on) {
    enabled = default_on;
    if (default_on) {
      app.add_flag("!--no-filter", enabled, "Skip the low-pass filter");
    } else {
      app.add_flag("--filter", enabled, "Low-pass filter trajectories before fitting");
    }
    app.add_option("--filter-order", order, "Butterworth order")->capture_default_str()->check(CLI::Range(1, 8));
    app.add_option("--filter-cutoff", cutoff_hz, "Cutoff frequency in Hz")->capture_default_str();
  }

  FilterSettings settings() const { return FilterSettings{enabled, order, cutoff_hz}; }

  json to_json() const { return {{"enabled", enabled}, {"order", order}, {"cutoff_hz", cutoff_hz}}; }
};

struct FitFlags {
  std::string config_path;
  double lambda_min = 0, lambda_max = 0, sa_t0 = 0, sa_alpha = 0, sa_tmin = 0, stride = 0, frame_t = 0;
  std::size_t sa_steps = 0;
  std::string policy = "best";
  CLI::Option *o_lambda_min = nullptr, *o_lambda_max = nullptr, *o_t0 = nullptr, *o_alpha = nullptr,
              *o_tmin = nullptr, *o_steps = nullptr, *o_stride = nullptr, *o_frame_t = nullptr;

  void add(CLI::App& app) {
    app.add_option("--config", config_path,
                   "JSON fit configuration (or a resolved_config.json from an earlier run)")
        ->check(CLI::ExistingFile);
    o_lambda_min = app.add_option("--lambda-min", lambda_min, "Lower wavelength bound (m)");
    o_lambda_max = app.add_option("--lambda-max", lambda_max, "Upper wavelength bound (m)");
    o_t0 = app.add_option("--sa-t0", sa_t0, "Annealing start temperature");
    o_alpha = app.add_option("--sa-alpha", sa_alpha, "Annealing cooling factor");
    o_steps = app.add_option("--sa-steps", sa_steps, "Annealing steps per temperature");
    o_tmin = app.add_option("--sa-tmin", sa_tmin, "Annealing stop temperature");
    o_stride = app.add_option("--stride", stride, "Frame stride inside the crossing window (s)");
    app.add_option("--policy", policy, "Frame policy: single, best or series")
        ->capture_default_str()
        ->check(CLI::IsMember({"single", "best", "series"}));
    o_frame_t = app.add_option("--frame-t", frame_t,
                               "Frame time for --policy single (default: centre of the crossing window)");
  }

  FitConfig config() const {
    FitConfig cfg;
    if (!config_path.empty()) {
      json doc;
      try {
        doc = json::parse(read_file(config_path));
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kConfiguration, "'" + config_path + "': " + e.what());
      }
      if (doc.is_object() && doc.contains("fit_config")) doc = doc["fit_config"];
      cfg = fit_config_from_json(doc, cfg);
    }
    if (*o_lambda_min) cfg.bounds.lambda_min_m = lambda_min;
    if (*o_lambda_max) cfg.bounds.lambda_max_m = lambda_max;
    if (*o_t0) cfg.sa.t0 = sa_t0;
    if (*o_alpha) cfg.sa.alpha = sa_alpha;
    if (*o_steps) cfg.sa.steps_per_temp = sa_steps;
    if (*o_tmin) cfg.sa.t_min = sa_tmin;
    if (*o_stride) cfg.frame_stride_s = stride;
    validate_bounds(cfg.bounds);
    validate_schedule(cfg.sa, 3);
    return cfg;
  }

  FramePolicy frame_policy(const Trial& trial) const {
    FramePolicy p;
    p.kind = *parse_frame_policy(policy);
    if (p.kind == FramePolicyKind::kSingle) {
      if (*o_frame_t) {
        p.t = frame_t;
      } else {
        const TimeWindow w = crossing_window(trial);
        p.t = 0.5 * (w.t_start + w.t_end);
      }
    }
    return p;
  }
};

std::vector<std::string> strategy_names() {
  std::vector<std::string> names;
  for (const auto& s : all_strategies()) names.push_back(to_string(s));
  return names;
}

std::vector<Strategy> parse_strategies(const std::vector<std::string>& names) {
  std::vector<Strategy> out;
  for (const auto& n : names) out.push_back(*parse_strategy(n));
  return out;
}

json strategies_json(const std::vector<Strategy>& strategies) {
  json arr = json::array();
  for (const auto& s : strategies) arr.push_back(to_string(s));
  return arr;
}

TrialSet load_input(const std::string& path, const std::string& metadata_path, const FilterFlags& filter) {
  const MetadataMap metadata = metadata_path.empty() ? MetadataMap{} : load_metadata(metadata_path);
  TrialSet trials = load_trials(path, metadata);
  log(LogLevel::kInfo, "loaded " + std::to_string(trials.size()) + " trial(s) from " + path);
  if (!filter.enabled) return trials;
  TrialSet filtered;
  filtered.reserve(trials.size());
  for (const auto& t : trials) {
    FilterReport report;
    filtered.push_back(filter_trial(t, filter.settings(), &report));
    for (const auto& id : report.unfiltered_tracks) {
      log(LogLevel::kWarn, "trial " + t.id() + ": track " + id + " too short to filter, kept raw");
    }
  }
  return filtered;
}

const Trial& select_trial(const TrialSet& trials, const std::string& id) {
  if (id.empty()) {
    if (trials.size() != 1) {
      throw Error(ErrorCode::kConfiguration,
                  "input holds " + std::to_string(trials.size()) + " trials; choose one with --trial");
    }
    return trials.front();
  }
  for (const auto& t : trials) {
    if (t.id() == id) return t;
  }
  throw Error(ErrorCode::kConfiguration, "no trial with id '" + id + "'");
}

// ---- subcommands ----

struct IngestCmd {
  std::string input, out, metadata;
  FilterFlags filter;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("ingest", "Validate and filter a trajectory CSV into canonical form");
    cmd->add_option("input", input, "Trajectory CSV")->required();
    cmd->add_option("--out", out, "Output directory")->required();
    cmd->add_option("--metadata", metadata, "Per-trial metadata JSON (bisector, sample rate)");
    filter.add(*cmd, true);
    cmd->callback([this] { run(); });
  }

  void run() {
    const TrialSet trials = load_input(input, metadata, filter);
    const fs::path dir = prepare_out_dir(out);
    save_trials(trials, (dir / "trials.csv").string());
    write_text(dir / "metadata.json", metadata_to_json(trials));
    json resolved{{"command", "ingest"}, {"input", input}, {"metadata", metadata}, {"filter", filter.to_json()},
                  {"outputs", {"trials.csv", "metadata.json"}}};
    write_text(dir / "resolved_config.json", resolved.dump(2) + "\n");
    log(LogLevel::kInfo, "wrote " + std::to_string(trials.size()) + " trial(s) to " + (dir / "trials.csv").string());
  }
};

struct FitCmd {
  std::string input, out, metadata, trial_id;
  std::vector<std::string> strategies{"square+sa"};
  std::uint64_t seed = 0;
  bool trace = false;
  FilterFlags filter;
  FitFlags fit;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("fit", "Fit stripe patterns to one trial");
    cmd->add_option("input", input, "Trajectory CSV")->required();
    cmd->add_option("--out", out, "Output directory")->required();
    cmd->add_option("--strategy", strategies, "Strategies, comma separated")
        ->delimiter(',')
        ->capture_default_str()
        ->check(CLI::IsMember(strategy_names()));
    cmd->add_option("--trial", trial_id, "Trial id (needed when the CSV holds several)");
    cmd->add_option("--metadata", metadata, "Per-trial metadata JSON (bisector, sample rate)");
    cmd->add_option("--seed", seed, "Annealing seed")->capture_default_str();
    cmd->add_flag("--trace", trace, "Include optimizer traces in results.json");
    filter.add(*cmd, false);
    fit.add(*cmd);
    cmd->callback([this] { run(); });
  }

  void run() {
    FitConfig cfg = fit.config();
    cfg.sa.seed = seed;
    const TrialSet trials = load_input(input, metadata, filter);
    const Trial& trial = select_trial(trials, trial_id);
    const FramePolicy policy = fit.frame_policy(trial);
    const auto strats = parse_strategies(strategies);

    StrategyTable best;
    StrategyTable frames;
    for (const auto& s : strats) {
      log(LogLevel::kInfo, "fitting " + trial.id() + " with " + to_string(s));
      const TrialFit tf = fit_trial(trial, s, policy, cfg);
      best.rows.push_back({trial.id(), trial.crossing_angle_deg(), s, tf.best(), {}});
      for (const auto& f : tf.frames) frames.rows.push_back({trial.id(), trial.crossing_angle_deg(), s, f, {}});
    }

    const fs::path dir = prepare_out_dir(out);
    write_stream(dir / "results.csv", [&](std::ostream& os) { write_results_csv(best, os); });
    write_text(dir / "results.json", results_to_json(best, trace) + "\n");
    if (policy.kind != FramePolicyKind::kSingle) {
      write_stream(dir / "frames.csv", [&](std::ostream& os) { write_results_csv(frames, os); });
    }
    json resolved{{"command", "fit"},
                  {"input", input},
                  {"metadata", metadata},
                  {"trial", trial.id()},
                  {"strategies", strategies_json(strats)},
                  {"seed", seed},
                  {"policy", {{"kind", to_string(policy.kind)}, {"t", policy.t}}},
                  {"filter", filter.to_json()},
                  {"fit_config", to_json(cfg)},
                  {"config_fingerprint", config_fingerprint(cfg)}};
    write_text(dir / "resolved_config.json", resolved.dump(2) + "\n");
  }
};

struct BatchCmd {
  std::string input, out, metadata;
  std::vector<std::string> strategies = strategy_names();
  std::uint64_t seed = 0;
  bool seed_from_id = false;
  std::size_t jobs = 1;
  bool trace = false;
  FilterFlags filter;
  FitFlags fit;
  CLI::Option* o_seed = nullptr;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("batch", "Fit every trial with every strategy");
    cmd->add_option("input", input, "Trajectory CSV")->required();
    cmd->add_option("--out", out, "Output directory")->required();
    cmd->add_option("--strategies", strategies, "Strategies, comma separated")
        ->delimiter(',')
        ->capture_default_str()
        ->check(CLI::IsMember(strategy_names()));
    cmd->add_option("--metadata", metadata, "Per-trial metadata JSON (bisector, sample rate)");
    o_seed = cmd->add_option("--seed", seed, "Base annealing seed, mixed with each trial id");
    auto* from_id = cmd->add_flag("--seed-from-trial-id", seed_from_id, "Derive each trial's seed from its id alone");
    o_seed->excludes(from_id);
    cmd->add_option("--jobs", jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_flag("--trace", trace, "Include optimizer traces in results.json");
    filter.add(*cmd, false);
    fit.add(*cmd);
    cmd->callback([this] { run(); });
  }

  void run() {
    const auto strats = parse_strategies(strategies);
    const bool uses_sa = std::any_of(strats.begin(), strats.end(),
                                     [](Strategy s) { return s.optimizer == OptimizerKind::kAnnealing; });
    if (uses_sa && !*o_seed && !seed_from_id) {
      throw CLI::RequiredError("--seed (or --seed-from-trial-id) is required for annealing strategies");
    }
    const FitConfig cfg = fit.config();
    const TrialSet trials = load_input(input, metadata, filter);

    BatchOptions options;
    options.jobs = jobs;
    options.seed = seed;
    options.seed_mode = seed_from_id ? SeedMode::kFromTrialId : SeedMode::kFixed;
    options.policy.kind = *parse_frame_policy(fit.policy);
    options.policy.t = fit.frame_t;

    StrategyTable table;
    if (options.policy.kind == FramePolicyKind::kSingle && !*fit.o_frame_t) {
      // Per-trial frame times: run one batch per trial and splice the rows.
      for (const auto& t : trials) {
        BatchOptions per = options;
        per.policy = fit.frame_policy(t);
        StrategyTable part = run_batch({t}, strats, cfg, per);
        for (auto& r : part.rows) table.rows.push_back(std::move(r));
      }
    } else {
      table = run_batch(trials, strats, cfg, options);
    }

    const fs::path dir = prepare_out_dir(out);
    write_stream(dir / "results.csv", [&](std::ostream& os) { write_results_csv(table, os); });
    write_stream(dir / "errors.csv", [&](std::ostream& os) { write_errors_csv(table, os); });
    write_text(dir / "results.json", results_to_json(table, trace) + "\n");
    json resolved{{"command", "batch"},
                  {"input", input},
                  {"metadata", metadata},
                  {"strategies", strategies_json(strats)},
                  {"seed_mode", seed_from_id ? "trial_id" : "fixed"},
                  {"seed", seed},
                  {"jobs", jobs},
                  {"policy", {{"kind", fit.policy}, {"t", *fit.o_frame_t ? json(fit.frame_t) : json(nullptr)}}},
                  {"filter", filter.to_json()},
                  {"fit_config", to_json(cfg)},
                  {"config_fingerprint", config_fingerprint(cfg)}};
    write_text(dir / "resolved_config.json", resolved.dump(2) + "\n");

    const std::size_t failed = table.failed_rows();
    for (const auto& r : table.rows) {
      if (!r.fit) log(LogLevel::kWarn, r.trial_id + " / " + to_string(r.strategy) + ": " + r.error);
    }
    log(LogLevel::kInfo, std::to_string(table.rows.size() - failed) + " of " + std::to_string(table.rows.size()) +
                             " rows fitted");
    if (failed == table.rows.size()) {
      throw Error(ErrorCode::kConfiguration, "every batch row failed; see " + (dir / "errors.csv").string());
    }
  }
};

struct StatsCmd {
  std::string input, out;
  double alpha = kDefaultAlpha;
  std::vector<std::string> pairs;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("stats", "ANOVA and t-test tables from a results CSV");
    cmd->add_option("input", input, "results.csv from fit or batch")->required();
    cmd->add_option("--out", out, "Output directory")->required();
    cmd->add_option("--alpha", alpha, "Significance level")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--pairs", pairs,
                    "Strategy pairs to compare, e.g. square+nm:square+sa (default: nm vs sa per wave)")
        ->delimiter(',');
    cmd->callback([this] { run(); });
  }

  std::vector<StrategyPair> resolved_pairs() const {
    if (pairs.empty()) return default_pairs();
    std::vector<StrategyPair> out_pairs;
    for (const auto& p : pairs) {
      const auto colon = p.find(':');
      const auto a = colon == std::string::npos ? std::nullopt : parse_strategy(p.substr(0, colon));
      const auto b = colon == std::string::npos ? std::nullopt : parse_strategy(p.substr(colon + 1));
      if (!a || !b) throw CLI::ValidationError("--pairs", "expected STRATEGY:STRATEGY, got '" + p + "'");
      out_pairs.push_back({*a, *b});
    }
    return out_pairs;
  }

  void run() {
    const auto pair_list = resolved_pairs();
    std::ifstream in(input);
    if (!in) throw Error(ErrorCode::kIo, "cannot open '" + input + "'");
    const StrategyTable table = read_results_csv(in);
    const auto anova = strategy_comparison(table, pair_list, alpha);
    const auto ttests = bisector_normal_test(table, alpha);

    const fs::path dir = prepare_out_dir(out);
    write_stream(dir / "anova.csv", [&](std::ostream& os) { write_anova_csv(anova, os); });
    write_stream(dir / "ttest.csv", [&](std::ostream& os) { write_ttest_csv(ttests, os); });
    write_stream(dir / "boxplot_quantiles.csv",
                 [&](std::ostream& os) { write_quantiles_csv(boxplot_quantiles(table), os); });
    write_stream(dir / "timing_quantiles.csv",
                 [&](std::ostream& os) { write_quantiles_csv(timing_quantiles(table), os); });
    const std::string text = render_tables(anova, ttests);
    write_text(dir / "tables.txt", text);
    json pair_json = json::array();
    for (const auto& p : pair_list) pair_json.push_back(to_string(p));
    json resolved{{"command", "stats"}, {"input", input}, {"alpha", alpha}, {"pairs", pair_json}};
    write_text(dir / "resolved_config.json", resolved.dump(2) + "\n");
    if (log_level() >= LogLevel::kInfo) std::cout << text;
  }
};

struct SynthCmd {
  std::string out, mode = "trial", trial_id = "synth";
  CrossingSpec crossing;
  StripeSpec stripe;
  double angle = 90.0;
  std::size_t n1 = 16, n2 = 16;
  double jitter = 0.0;
  std::uint64_t seed = 0;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("synth", "Generate synthetic trials or striped frames with ground truth");
    cmd->add_option("--out", out, "Output directory")->required();
    cmd->add_option("--mode", mode, "trial (crossing flows) or frame (one striped frame)")
        ->capture_default_str()
        ->check(CLI::IsMember({"trial", "frame"}));
    cmd->add_option("--trial-id", trial_id, "Trial id")->capture_default_str();
    cmd->add_option("--angle", angle, "Crossing angle (deg)")->capture_default_str();
    cmd->add_option("--n1", n1, "Group 1 size")->capture_default_str();
    cmd->add_option("--n2", n2, "Group 2 size")->capture_default_str();
    cmd->add_option("--jitter", jitter, "Position noise sd (m)")->capture_default_str();
    cmd->add_option("--seed", seed, "Generator seed")->capture_default_str();
    cmd->add_option("--speed", crossing.speed_mps, "Walking speed (m/s), trial mode")->capture_default_str();
    cmd->add_option("--duration", crossing.duration_s, "Trial length (s), trial mode")->capture_default_str();
    cmd->add_option("--fs", crossing.fs_hz, "Sample rate (Hz), trial mode")->capture_default_str();
    cmd->add_option("--spacing", crossing.lateral_spacing_m, "Lattice row spacing (m), trial mode")
        ->capture_default_str();
    cmd->add_option("--gamma", stripe.gamma_deg, "Stripe orientation (deg), frame mode")->capture_default_str();
    cmd->add_option("--lambda", stripe.lambda_m, "Stripe wavelength (m), frame mode")->capture_default_str();
    cmd->add_option("--psi", stripe.psi_rad, "Stripe phase (rad), frame mode")->capture_default_str();
    cmd->add_option("--extent", stripe.extent_m, "Frame half-width (m), frame mode")->capture_default_str();
    cmd->callback([this] { run(); });
  }

  void run() {
    WaveParams truth;
    Trial trial = [&] {
      if (mode == "trial") {
        crossing.trial_id = trial_id;
        crossing.angle_deg = angle;
        crossing.n1 = n1;
        crossing.n2 = n2;
        crossing.jitter_sd_m = jitter;
        crossing.seed = seed;
        SyntheticTrial st = generate_crossing_trial(crossing);
        truth = st.truth;
        return std::move(st.trial);
      }
      stripe.n1 = n1;
      stripe.n2 = n2;
      stripe.jitter_sd_m = jitter;
      stripe.seed = seed;
      const StripedFrame sf = generate_striped_frame(stripe);
      truth = sf.truth;
      if (!(angle > 0.0 && angle <= 180.0)) throw Error(ErrorCode::kConfiguration, "angle must lie in (0, 180]");
      std::vector<TrackSample> samples;
      std::size_t id = 1;
      for (const auto& p : sf.frame.g1) samples.push_back({"p" + std::to_string(id++), Group::kG1, 0.0, p});
      for (const auto& p : sf.frame.g2) samples.push_back({"p" + std::to_string(id++), Group::kG2, 0.0, p});
      return Trial(trial_id, angle, std::move(samples), std::nullopt, Vec2{1.0, 0.0});
    }();

    const fs::path dir = prepare_out_dir(out);
    save_trials({trial}, (dir / "trial.csv").string());
    write_text(dir / "metadata.json", metadata_to_json({trial}));
    json gt{{"gamma_deg", truth.gamma_deg},
            {"lambda_m", truth.lambda_m},
            {"psi_rad", truth.psi_rad},
            {"seed", seed},
            {"jitter_sd_m", jitter}};
    write_text(dir / "ground_truth.json", gt.dump(2) + "\n");
    json resolved{{"command", "synth"}, {"mode", mode}, {"trial_id", trial_id}, {"angle", angle}, {"n1", n1},
                  {"n2", n2},           {"jitter", jitter}, {"seed", seed}};
    if (mode == "trial") {
      resolved["speed"] = crossing.speed_mps;
      resolved["duration"] = crossing.duration_s;
      resolved["fs"] = crossing.fs_hz;
      resolved["spacing"] = crossing.lateral_spacing_m;
    } else {
      resolved["gamma"] = stripe.gamma_deg;
      resolved["lambda"] = stripe.lambda_m;
      resolved["psi"] = stripe.psi_rad;
      resolved["extent"] = stripe.extent_m;
    }
    write_text(dir / "resolved_config.json", resolved.dump(2) + "\n");
    log(LogLevel::kInfo, "wrote " + (dir / "trial.csv").string());
  }
};

struct OracleCmd {
  std::string input, out, metadata, trial_id, wave = "square";
  std::vector<std::size_t> resolution{181, 96, 64};
  FilterFlags filter;
  FitFlags fit;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("oracle", "Grid-search objective surface over (gamma, lambda) for one frame");
    cmd->add_option("input", input, "Trajectory CSV")->required();
    cmd->add_option("--out", out, "Output directory")->required();
    cmd->add_option("--trial", trial_id, "Trial id (needed when the CSV holds several)");
    cmd->add_option("--metadata", metadata, "Per-trial metadata JSON (bisector, sample rate)");
    cmd->add_option("--wave", wave, "sine or square")->capture_default_str()->check(CLI::IsMember({"sine", "square"}));
    cmd->add_option("--resolution", resolution, "Grid points for gamma,lambda,psi")
        ->delimiter(',')
        ->expected(3)
        ->capture_default_str();
    filter.add(*cmd, false);
    fit.add(*cmd);
    cmd->callback([this] { run(); });
  }

  void run() {
    FitConfig cfg = fit.config();
    cfg.grid_resolution = {resolution[0], resolution[1], resolution[2]};
    const TrialSet trials = load_input(input, metadata, filter);
    const Trial& trial = select_trial(trials, trial_id);
    FitFlags single = fit;
    single.policy = "single";
    const double t = single.frame_policy(trial).t;
    const Vec2 bisector = resolve_bisector(trial, cfg.bisector_window_s);
    const Frame frame = rotate_to_bisector(frame_at(trial, t), bisector);
    const WaveKind kind = *parse_wave_kind(wave);
    log(LogLevel::kInfo, "grid search at t=" + std::to_string(t));
    const GridResult grid = objective_surface(frame, kind, cfg);

    const fs::path dir = prepare_out_dir(out);
    const auto& ga = grid.axes[0];
    const auto& la = grid.axes[1];
    const std::size_t np = grid.axes[2].size();
    write_stream(dir / "surface.csv", [&](std::ostream& os) {
      os << "gamma_deg,lambda_m,C\n";
      for (std::size_t i = 0; i < ga.size(); ++i) {
        for (std::size_t j = 0; j < la.size(); ++j) {
          const auto* row = &grid.surface[(i * la.size() + j) * np];
          os << csv::format_double(ga[i]) << ',' << csv::format_double(la[j]) << ','
             << csv::format_double(*std::max_element(row, row + np)) << '\n';
        }
      }
    });
    const WaveParams best = canonicalize({grid.best.x[0], grid.best.x[1], grid.best.x[2]});
    json best_json{{"gamma_deg", best.gamma_deg}, {"lambda_m", best.lambda_m}, {"psi_rad", best.psi_rad},
                   {"C", grid.best.value},        {"c_norm", grid.best.value / kObjectiveMax},
                   {"frame_t", t},                {"evaluations", grid.best.evaluations}};
    write_text(dir / "best.json", best_json.dump(2) + "\n");
    json resolved{{"command", "oracle"}, {"input", input},   {"metadata", metadata},         {"trial", trial.id()},
                  {"wave", wave},        {"frame_t", t},     {"filter", filter.to_json()},
                  {"fit_config", to_json(cfg)}};
    write_text(dir / "resolved_config.json", resolved.dump(2) + "\n");
  }
};

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Fit stripe patterns to crossing pedestrian flows"};
  app.name("stripefit");
  app.require_subcommand(1);
  IngestCmd ingest;
  FitCmd fit;
  BatchCmd batch;
  StatsCmd stats;
  SynthCmd synth;
  OracleCmd oracle;
  ingest.add(app);
  fit.add(app);
  batch.add(app);
  stats.add(app);
  synth.add(app);
  oracle.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "stripefit: " << e.what() << "\n\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    std::cerr << sub->help();
    return 2;
  } catch (const std::exception& e) {
    log(LogLevel::kError, e.what());
    return 1;
  }
  return 0;
}

}  // namespace stripefit
