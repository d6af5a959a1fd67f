// End-to-end acceptance checks. Prints one PASS/FAIL/SKIP line per criterion
// and exits non-zero when any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "stripefit/filter.hpp"
#include "stripefit/patternfit.hpp"
#include "stripefit/rng.hpp"
#include "stripefit/stats.hpp"
#include "stripefit/synth.hpp"
#include "stripefit/trial_io.hpp"

using namespace stripefit;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

enum class Verdict { kPass, kFail, kSkip };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

Outcome check(bool ok, std::string detail) { return {ok ? Verdict::kPass : Verdict::kFail, std::move(detail)}; }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double gamma_distance(double a, double b) {
  const double d = std::fmod(std::abs(a - b), 180.0);
  return std::min(d, 180.0 - d);
}

const Strategy kSquareSa{WaveKind::kSquare, OptimizerKind::kAnnealing};
const Strategy kSquareNm{WaveKind::kSquare, OptimizerKind::kNelderMead};
const Strategy kSineSa{WaveKind::kSine, OptimizerKind::kAnnealing};

// Slow cooling from a temperature near the typical gap between competing
// stripe counts, with gamma moves wide enough to cross between them.
SASchedule careful_schedule(std::size_t steps, std::uint64_t seed) { return {0.3, 0.97, steps, 1e-3, {30.0, 1.0, 1.0}, seed}; }

// Plateau-aware count of local maxima of a profile, ignoring peaks below floor.
int count_peaks(const std::vector<double>& p, double floor) {
  int peaks = 0;
  std::size_t i = 0;
  while (i < p.size()) {
    std::size_t j = i;
    while (j + 1 < p.size() && p[j + 1] == p[i]) ++j;
    const bool left = i == 0 || p[i - 1] < p[i];
    const bool right = j + 1 == p.size() || p[j + 1] < p[i];
    if (left && right && p[i] >= floor) ++peaks;
    i = j + 1;
  }
  return peaks;
}

// Max of the objective over gamma and psi for each grid wavelength.
std::vector<double> lambda_profile(const GridResult& g) {
  const std::size_t nl = g.axes[1].size();
  const std::size_t np = g.axes[2].size();
  std::vector<double> prof(nl, -2.0);
  for (std::size_t a = 0; a < g.axes[0].size(); ++a)
    for (std::size_t b = 0; b < nl; ++b)
      for (std::size_t c = 0; c < np; ++c) prof[b] = std::max(prof[b], g.surface[(a * nl + b) * np + c]);
  return prof;
}

StripedFrame random_jittered_frame(std::uint64_t seed, double jitter_fraction) {
  Pcg32 r(seed);
  StripeSpec s;
  s.gamma_deg = r.uniform(0.0, 180.0);
  s.lambda_m = r.uniform(1.5, 4.0);
  s.psi_rad = r.uniform(0.0, kTwoPi);
  s.jitter_sd_m = jitter_fraction * s.lambda_m;
  s.seed = seed;
  return generate_striped_frame(s);
}

int run_command(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string drop_wall_time(const std::string& csv) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    std::size_t start = 0;
    for (int i = 0; i < 8; ++i) start = line.find(',', start) + 1;
    out << line.substr(0, start) << line.substr(line.find(',', start)) << '\n';
  }
  return out.str();
}

// 1. Noiseless recovery with square+SA.
Outcome synthetic_recovery() {
  FitConfig config;
  // A dense frame (100 per group over 50 m) pins gamma and lambda down;
  // lambda_min 0.75 m keeps the lambda/2 harmonic of the 2 m truth outside
  // the box.
  config.bounds.lambda_min_m = 0.75;
  int ok = 0;
  const auto t0 = Clock::now();
  for (int i = 0; i < 100; ++i) {
    Pcg32 r(1000 + i);
    StripeSpec s;
    s.gamma_deg = 30.0 + 120.0 * i / 99.0;
    s.lambda_m = 2.0;
    s.psi_rad = r.uniform(0.0, kTwoPi);
    s.n1 = s.n2 = 100;
    s.extent_m = 25.0;
    s.seed = 1000 + i;
    const StripedFrame f = generate_striped_frame(s);
    config.sa = careful_schedule(4000, 7000 + i);
    const FitResult fit = fit_frame(f.frame, kSquareSa, config);
    ok += gamma_distance(fit.params.gamma_deg, f.truth.gamma_deg) <= 1.0 &&
          std::abs(fit.params.lambda_m / 2.0 - 1.0) <= 0.02 && fit.c_norm >= 0.999;
  }
  const double secs = seconds_since(t0);
  return check(ok >= 98 && secs < 300.0, fmt("%d/100 frames recovered (need >= 98), %.1f s (need < 300)", ok, secs));
}

// 2. Square beats sine on jittered frames.
Outcome square_vs_sine() {
  FitConfig config;
  StrategyTable table;
  std::vector<double> square, sine;
  for (int i = 0; i < 50; ++i) {
    Pcg32 r(2000 + i);
    StripeSpec s;
    s.gamma_deg = r.uniform(0.0, 180.0);
    s.lambda_m = 2.0;
    s.psi_rad = r.uniform(0.0, kTwoPi);
    s.jitter_sd_m = 0.15 * s.lambda_m;
    s.seed = 2000 + i;
    const StripedFrame f = generate_striped_frame(s);
    config.sa = careful_schedule(1000, 8000 + i);
    for (Strategy st : {kSineSa, kSquareSa}) {
      TableRow row;
      row.trial_id = "frame" + std::to_string(i);
      row.crossing_angle_deg = 90.0;
      row.strategy = st;
      row.fit = fit_frame(f.frame, st, config);
      (st.wave == WaveKind::kSquare ? square : sine).push_back(row.fit->c_norm);
      table.rows.push_back(std::move(row));
    }
  }
  const double med_sq = quantile(square, 0.5);
  const double med_sine = quantile(sine, 0.5);
  const auto cmp = strategy_comparison(table, {{kSineSa, kSquareSa}});
  const bool direction = cmp.size() == 1 && cmp[0].anova && cmp[0].mean_second > cmp[0].mean_first;
  return check(med_sq > med_sine && direction,
               fmt("median c_norm square %.4f vs sine %.4f; comparison means C %.4f (square) vs %.4f (sine), p = %.3g",
                   med_sq, med_sine, cmp.empty() ? NAN : cmp[0].mean_second, cmp.empty() ? NAN : cmp[0].mean_first,
                   cmp.empty() || !cmp[0].anova ? NAN : cmp[0].anova->p_value));
}

// 3. Annealing against Nelder-Mead on multi-modal square objectives.
Outcome sa_vs_nm() {
  const int frames = 40;
  FitConfig config;
  int rugged = 0, nm_lower = 0, sa_matches = 0;
  for (int i = 0; i < frames; ++i) {
    const StripedFrame f = random_jittered_frame(3000 + i, 0.05);
    config.sa = careful_schedule(2000, 9000 + i);
    const FitResult sa = fit_frame(f.frame, kSquareSa, config);
    const FitResult nm = fit_frame(f.frame, kSquareNm, config);
    const GridResult grid = objective_surface(f.frame, WaveKind::kSquare, config);
    rugged += count_peaks(lambda_profile(grid), 0.5 * grid.best.value) >= 2;
    nm_lower += nm.raw_value < sa.raw_value;
    sa_matches += std::abs(sa.raw_value - grid.best.value) <= 1e-3;
  }
  const bool ok = rugged == frames && nm_lower * 5 >= frames && sa_matches * 100 >= 95 * frames;
  return check(ok, fmt("%d/%d frames multi-modal in lambda; NM below SA on %d/%d (need >= 20%%); SA within 1e-3 of "
                       "grid on %d/%d (need >= 95%%)",
                       rugged, frames, nm_lower, frames, sa_matches, frames));
}

// 4. Annealing agrees with the dense grid.
Outcome oracle_equivalence() {
  FitConfig config;
  double worst = 0.0;
  int ok = 0;
  for (int i = 0; i < 20; ++i) {
    const StripedFrame f = random_jittered_frame(4000 + i, 0.05);
    config.sa = careful_schedule(2000, 9500 + i);
    const FitResult sa = fit_frame(f.frame, kSquareSa, config);
    const FitResult grid = grid_fit_frame(f.frame, WaveKind::kSquare, config);
    const double diff = std::abs(sa.raw_value - grid.raw_value);
    worst = std::max(worst, diff);
    ok += diff <= 1e-3;
  }
  return check(ok == 20, fmt("%d/20 frames with |SA - grid| <= 1e-3 at 181x96x64, worst %.4g", ok, worst));
}

// 5. Hand-computed and oracle statistics.
Outcome statistics_exactness() {
  // Frozen from tests/oracles/incbeta_oracle.py.
  constexpr double kPF = 0.2878641347266906620019903;
  constexpr double kPT = 0.07417990022744853843343322;
  const AnovaReport a = one_way_anova({{1, 2, 3}, {2, 3, 4}});
  const double sample[] = {91, 92, 93};
  const TTestReport t = one_sample_ttest(sample, 90.0);
  const double g1[] = {1, 2, 3};
  const double g2[] = {2, 3, 4};
  const double pooled = pooled_t_statistic(g1, g2);
  const double ef = std::abs(a.f_stat - 1.5);
  const double eeta = std::abs(a.eta_sq - 0.2727272727);
  const double et = std::abs(t.t_stat - 3.4641016151);
  const double epf = std::abs(a.p_value - kPF);
  const double ept = std::abs(t.p_value - kPT);
  const double eft = std::abs(a.f_stat - pooled * pooled);
  const bool ok = ef <= 1e-10 && eeta <= 1e-10 && et <= 1e-9 && epf <= 1e-6 && ept <= 1e-6 && eft <= 1e-10;
  return check(ok, fmt("|F-1.5| %.1e, |eta2-0.2727272727| %.1e, |t-3.4641016151| %.1e, p errors %.1e/%.1e, |F-t^2| %.1e",
                       ef, eeta, et, epf, ept, eft));
}

// 6. Zero-phase low-pass filter.
Outcome filter_correctness() {
  const double fs = 120.0;
  const IIRCoeffs c = butter_lowpass(4, 0.5, fs);
  // Frozen from tests/oracles/butterworth_oracle.py (50-digit arithmetic).
  const double b_ref[] = {2.837905225123164368258522e-8, 1.135162090049265747303409e-7,
                          1.702743135073898620955113e-7, 1.135162090049265747303409e-7,
                          2.837905225123164368258522e-8};
  const double a_ref[] = {1.0, -3.931589470955135687522074, 5.797098703846547823924141, -3.799382767232738109824105,
                          0.9338739884061619931283366};
  double coeff_err = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    coeff_err = std::max({coeff_err, std::abs(c.b[i] - b_ref[i]), std::abs(c.a[i] - a_ref[i])});
  }

  auto sine = [&](double f) {
    std::vector<double> v(static_cast<std::size_t>(60 * fs));
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(kTwoPi * f * static_cast<double>(i) / fs);
    return v;
  };
  const std::size_t lo = static_cast<std::size_t>(15 * fs);
  const std::size_t hi = static_cast<std::size_t>(45 * fs);

  double dc_err = 0.0;
  for (double v : filtfilt(c, std::vector<double>(6000, 1.7))) dc_err = std::max(dc_err, std::abs(v - 1.7));

  double fast_amp = 0.0;
  const auto fast = filtfilt(c, sine(5.0));
  for (std::size_t i = lo; i < hi; ++i) fast_amp = std::max(fast_amp, std::abs(fast[i]));

  const auto x = sine(0.1);
  const auto y = filtfilt(c, x);
  long best_lag = 0;
  double best = -1e300;
  for (long lag = -240; lag <= 240; ++lag) {
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += x[i] * y[static_cast<std::size_t>(static_cast<long>(i) + lag)];
    if (acc > best) {
      best = acc;
      best_lag = lag;
    }
  }
  const bool ok = dc_err <= 1e-9 && fast_amp <= 1e-6 && best_lag == 0 && coeff_err <= 1e-10;
  return check(ok, fmt("DC error %.1e, 5 Hz amplitude %.1e (15-45 s), 0.1 Hz xcorr peak lag %ld, coefficient error %.1e",
                       dc_err, fast_amp, best_lag, coeff_err));
}

// Synthetic crossing trials, 18 per angle at jitter 0.1 lambda.
TrialSet crossing_batch_input() {
  TrialSet set;
  for (double angle : {30.0, 60.0, 90.0, 120.0, 150.0, 180.0}) {
    for (int i = 0; i < 18; ++i) {
      CrossingSpec s;
      s.trial_id = fmt("a%03d_%02d", static_cast<int>(angle), i);
      s.angle_deg = angle;
      s.jitter_sd_m = 0.1 * 2.0 * s.lateral_spacing_m;
      s.seed = 10000 + static_cast<std::uint64_t>(100 * angle) + i;
      set.push_back(generate_crossing_trial(s).trial);
    }
  }
  return set;
}

std::string cells_summary(const std::vector<NormalTestCell>& cells, bool* all_above) {
  std::string detail;
  *all_above = !cells.empty();
  for (const auto& c : cells) {
    const double p = c.report ? c.report->p_value : NAN;
    *all_above = *all_above && c.report && p > 0.05;
    detail += fmt("%s%.0f: p=%.3f", detail.empty() ? "" : ", ", c.crossing_angle_deg, p);
  }
  return detail;
}

StrategyTable crossing_batch(FramePolicy policy) {
  BatchOptions opt;
  opt.seed = 2024;
  opt.jobs = std::max(1u, std::thread::hardware_concurrency());
  opt.policy = policy;
  return run_batch(crossing_batch_input(), {kSquareSa}, FitConfig{}, opt);
}

// 7. Fitted stripes are normal to the bisector, with the default
// best-over-window frame policy. Under a true null each of the six cells
// still falls below 0.05 one time in twenty.
Outcome bisector_normal() {
  const StrategyTable table = crossing_batch({});
  bool ok = false;
  const std::string detail = cells_summary(bisector_normal_test(table), &ok);
  return check(ok && table.failed_rows() == 0, "square+sa, best frame in window, " + detail);
}

// Same batch fitted at the meeting instant only, reported for information.
std::string bisector_normal_meeting_frame() {
  bool ok = false;
  const std::string detail =
      cells_summary(bisector_normal_test(crossing_batch({FramePolicyKind::kSingle, 10.0})), &ok);
  return fmt("meeting-frame policy (%s): ", ok ? "all p > 0.05" : "some p <= 0.05") + detail;
}

// 8. Batch output independent of the worker count.
Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "stripefit_acceptance_jobs";
  fs::remove_all(dir);
  fs::create_directories(dir);
  TrialSet set;
  for (int i = 0; i < 6; ++i) {
    CrossingSpec s;
    s.trial_id = fmt("d%d", i);
    s.angle_deg = 30.0 * (i + 1);
    s.jitter_sd_m = 0.2;
    s.seed = 500 + i;
    set.push_back(generate_crossing_trial(s).trial);
  }
  save_trials(set, (dir / "trials.csv").string());
  std::ofstream((dir / "metadata.json").string()) << metadata_to_json(set);
  const std::string base = std::string(STRIPEFIT_BIN) + " batch " + (dir / "trials.csv").string() + " --metadata " +
                           (dir / "metadata.json").string() + " --seed 11 --stride 0.5 ";
  const int rc1 = run_command(base + "--jobs 1 --out " + (dir / "j1").string() + " 2>/dev/null");
  const int rc8 = run_command(base + "--jobs 8 --out " + (dir / "j8").string() + " 2>/dev/null");
  const std::string a = drop_wall_time(slurp(dir / "j1" / "results.csv"));
  const std::string b = drop_wall_time(slurp(dir / "j8" / "results.csv"));
  const auto rows = std::count(a.begin(), a.end(), '\n') - 1;
  fs::remove_all(dir);
  return check(rc1 == 0 && rc8 == 0 && rows == 24 && a == b,
               fmt("exit codes %d/%d, %ld rows, results %s", rc1, rc8, static_cast<long>(rows),
                   a == b ? "identical" : "differ"));
}

// 9. Public dataset, when provided.
Outcome dataset_orderings() {
  const char* path = std::getenv("STRIPEFIT_DATASET");
  if (!path) return {Verdict::kSkip, "set STRIPEFIT_DATASET to a canonical trajectory CSV to run"};
  const char* meta = std::getenv("STRIPEFIT_DATASET_METADATA");
  const TrialSet raw = load_trials(path, meta ? load_metadata(meta) : MetadataMap{});
  TrialSet trials;
  for (const auto& t : raw) trials.push_back(filter_trial(t, FilterSettings{}));
  BatchOptions opt;
  opt.seed = 1;
  opt.jobs = std::max(1u, std::thread::hardware_concurrency());
  const StrategyTable table = run_batch(trials, all_strategies(), FitConfig{}, opt);

  std::map<std::pair<double, std::string>, std::vector<double>> c;
  std::vector<double> sa_time, nm_time;
  for (const auto& r : table.rows) {
    if (!r.fit) continue;
    c[{r.crossing_angle_deg, to_string(r.strategy)}].push_back(r.fit->c_norm);
    (r.strategy.optimizer == OptimizerKind::kAnnealing ? sa_time : nm_time).push_back(r.fit->wall_time_s);
  }
  bool ordered = true;
  for (const auto& [key, values] : c) {
    if (key.second.rfind("square", 0) != 0) continue;
    const std::string sine_name = "sine" + key.second.substr(6);
    const auto it = c.find({key.first, sine_name});
    if (it != c.end() && quantile(values, 0.5) < quantile(it->second, 0.5)) ordered = false;
  }
  const double ratio =
      sa_time.empty() || nm_time.empty() ? 0.0 : quantile(sa_time, 0.5) / quantile(nm_time, 0.5);
  return check(trials.size() == 106 && ordered && ratio >= 10.0,
               fmt("%zu trials (need 106), %zu failed rows, square >= sine medians per angle: %s, SA/NM median time %.1fx",
                   trials.size(), table.failed_rows(), ordered ? "yes" : "no", ratio));
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 synthetic recovery", synthetic_recovery},   {"2 square vs sine", square_vs_sine},
      {"3 SA vs NM", sa_vs_nm},                       {"4 oracle equivalence", oracle_equivalence},
      {"5 statistics exactness", statistics_exactness}, {"6 filter correctness", filter_correctness},
      {"7 bisector normal", bisector_normal},         {"8 determinism", determinism},
      {"9 dataset orderings", dataset_orderings},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {Verdict::kFail, std::string("threw: ") + e.what()};
    }
    const char* tag = o.verdict == Verdict::kPass ? "PASS" : o.verdict == Verdict::kFail ? "FAIL" : "SKIP";
    failures += o.verdict == Verdict::kFail;
    std::printf("%s acceptance %s: %s [%.1f s]\n", tag, name.c_str(), o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    if (name[0] == '7') {
      try {
        std::printf("INFO acceptance 7: %s\n", bisector_normal_meeting_frame().c_str());
      } catch (const std::exception& e) {
        std::printf("INFO acceptance 7: meeting-frame run threw: %s\n", e.what());
      }
    }
  }
  return failures == 0 ? 0 : 1;
}
