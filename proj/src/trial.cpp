#include "stripefit/trial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "stripefit/error.hpp"

namespace stripefit {

namespace {

constexpr double kSpacingTolerance = 1e-3;  // relative, absorbs decimal time stamps

double infer_sample_rate(const std::vector<TrackSample>& samples, const std::vector<Track>& tracks) {
  std::vector<double> dts;
  for (const auto& track : tracks) {
    for (std::size_t i = 1; i < track.count; ++i) {
      dts.push_back(samples[track.begin + i].t - samples[track.begin + i - 1].t);
    }
  }
  if (dts.empty()) return kDefaultSampleRateHz;
  auto mid = dts.begin() + static_cast<std::ptrdiff_t>(dts.size() / 2);
  std::nth_element(dts.begin(), mid, dts.end());
  return 1.0 / *mid;
}

// Positions present at `t` without group checks.
Frame collect_frame(const Trial& trial, double t) {
  Frame frame;
  frame.t = t;
  const double period = 1.0 / trial.sample_rate_hz();
  const double reach = period * (1.0 + 1e-9);
  const double tie_eps = 1e-12 * std::max(1.0, std::abs(t));
  for (const auto& track : trial.tracks()) {
    auto samples = trial.track_samples(track);
    auto hi = std::lower_bound(samples.begin(), samples.end(), t,
                               [](const TrackSample& s, double value) { return s.t < value; });
    const TrackSample* chosen = nullptr;
    if (hi == samples.end()) {
      chosen = &samples.back();
    } else if (hi == samples.begin()) {
      chosen = &*hi;
    } else {
      const TrackSample& lo = *(hi - 1);
      const double d_lo = t - lo.t;
      const double d_hi = hi->t - t;
      chosen = (d_hi < d_lo - tie_eps) ? &*hi : &lo;
    }
    if (std::abs(chosen->t - t) > reach) continue;
    (track.group == Group::kG1 ? frame.g1 : frame.g2).push_back(chosen->pos);
  }
  return frame;
}

struct Box {
  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -std::numeric_limits<double>::infinity();
  double y_min = std::numeric_limits<double>::infinity();
  double y_max = -std::numeric_limits<double>::infinity();

  void extend(Vec2 p) {
    x_min = std::min(x_min, p.x);
    x_max = std::max(x_max, p.x);
    y_min = std::min(y_min, p.y);
    y_max = std::max(y_max, p.y);
  }
};

bool boxes_overlap(const Frame& frame) {
  if (frame.g1.empty() || frame.g2.empty()) return false;
  Box a;
  Box b;
  for (auto p : frame.g1) a.extend(p);
  for (auto p : frame.g2) b.extend(p);
  return a.x_min <= b.x_max && b.x_min <= a.x_max && a.y_min <= b.y_max && b.y_min <= a.y_max;
}

}  // namespace

Trial::Trial(std::string trial_id, double crossing_angle_deg, std::vector<TrackSample> samples,
             std::optional<double> sample_rate_hz, std::optional<Vec2> bisector)
    : id_(std::move(trial_id)), crossing_angle_deg_(crossing_angle_deg), samples_(std::move(samples)) {
  if (!std::isfinite(crossing_angle_deg_) || crossing_angle_deg_ <= 0.0 || crossing_angle_deg_ > 180.0) {
    throw Error(ErrorCode::kSchema, "trial " + id_ + ": crossing angle must lie in (0, 180] degrees");
  }
  for (const auto& s : samples_) {
    if (!std::isfinite(s.t) || !std::isfinite(s.pos.x) || !std::isfinite(s.pos.y)) {
      throw Error(ErrorCode::kSchema, "trial " + id_ + ": non-finite sample for pedestrian " + s.pedestrian_id);
    }
    if (s.group != Group::kG1 && s.group != Group::kG2) {
      throw Error(ErrorCode::kSchema, "trial " + id_ + ": group must be 1 or 2");
    }
  }
  std::stable_sort(samples_.begin(), samples_.end(), [](const TrackSample& a, const TrackSample& b) {
    if (a.pedestrian_id != b.pedestrian_id) return a.pedestrian_id < b.pedestrian_id;
    return a.t < b.t;
  });

  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    if (tracks_.empty() || tracks_.back().pedestrian_id != s.pedestrian_id) {
      tracks_.push_back(Track{s.pedestrian_id, s.group, i, 1});
      continue;
    }
    Track& track = tracks_.back();
    const auto& prev = samples_[i - 1];
    if (prev.t == s.t) {
      throw Error(ErrorCode::kDuplicateSample,
                  "trial " + id_ + ": pedestrian " + s.pedestrian_id + " has two samples at t=" + std::to_string(s.t));
    }
    if (track.group != s.group) {
      throw Error(ErrorCode::kSchema, "trial " + id_ + ": pedestrian " + s.pedestrian_id + " appears in both groups");
    }
    ++track.count;
  }

  const bool has_g1 = std::any_of(tracks_.begin(), tracks_.end(), [](const Track& t) { return t.group == Group::kG1; });
  const bool has_g2 = std::any_of(tracks_.begin(), tracks_.end(), [](const Track& t) { return t.group == Group::kG2; });
  if (!has_g1 || !has_g2) {
    throw Error(ErrorCode::kSchema, "trial " + id_ + ": each group needs at least one pedestrian");
  }

  if (sample_rate_hz) {
    if (!std::isfinite(*sample_rate_hz) || *sample_rate_hz <= 0.0) {
      throw Error(ErrorCode::kSchema, "trial " + id_ + ": sample rate must be positive");
    }
    sample_rate_hz_ = *sample_rate_hz;
  } else {
    sample_rate_hz_ = infer_sample_rate(samples_, tracks_);
  }
  for (const auto& track : tracks_) {
    for (std::size_t i = 1; i < track.count; ++i) {
      const double dt = samples_[track.begin + i].t - samples_[track.begin + i - 1].t;
      if (std::abs(dt * sample_rate_hz_ - 1.0) > kSpacingTolerance) {
        throw Error(ErrorCode::kSchema, "trial " + id_ + ": pedestrian " + track.pedestrian_id +
                                            " is not sampled uniformly at " + std::to_string(sample_rate_hz_) + " Hz");
      }
    }
  }

  if (bisector) {
    const double n = norm(*bisector);
    if (!std::isfinite(n) || n < 1e-12) {
      throw Error(ErrorCode::kInvalidDirection, "trial " + id_ + ": bisector must be a non-zero vector");
    }
    bisector_ = Vec2{bisector->x / n, bisector->y / n};
  }

  t_begin_ = std::numeric_limits<double>::infinity();
  t_end_ = -std::numeric_limits<double>::infinity();
  for (const auto& s : samples_) {
    t_begin_ = std::min(t_begin_, s.t);
    t_end_ = std::max(t_end_, s.t);
  }
}

std::span<const TrackSample> Trial::track_samples(const Track& track) const {
  return std::span<const TrackSample>(samples_).subspan(track.begin, track.count);
}

bool operator==(const Trial& a, const Trial& b) {
  return a.id_ == b.id_ && a.crossing_angle_deg_ == b.crossing_angle_deg_ && a.sample_rate_hz_ == b.sample_rate_hz_ &&
         a.bisector_ == b.bisector_ && a.samples_ == b.samples_;
}

Frame frame_at(const Trial& trial, double t) {
  Frame frame = collect_frame(trial, t);
  if (frame.g1.empty() && frame.g2.empty()) {
    throw Error(ErrorCode::kEmptyFrame, "trial " + trial.id() + ": no pedestrian recorded near t=" + std::to_string(t));
  }
  if (frame.g1.empty() || frame.g2.empty()) {
    throw Error(ErrorCode::kGroupEmpty, "trial " + trial.id() + ": group " + (frame.g1.empty() ? "1" : "2") +
                                            " is empty at t=" + std::to_string(t));
  }
  return frame;
}

Frame rotate_to_bisector(const Frame& frame, Vec2 bisector_dir) {
  const double n = norm(bisector_dir);
  if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidDirection, "bisector direction must be a unit vector");
  }
  const double c = bisector_dir.x;
  const double s = bisector_dir.y;
  auto rotate = [c, s](Vec2 p) { return Vec2{c * p.x + s * p.y, -s * p.x + c * p.y}; };
  Frame out;
  out.t = frame.t;
  out.g1.reserve(frame.g1.size());
  out.g2.reserve(frame.g2.size());
  for (auto p : frame.g1) out.g1.push_back(rotate(p));
  for (auto p : frame.g2) out.g2.push_back(rotate(p));
  return out;
}

Vec2 estimate_bisector(const Trial& trial, double window_s) {
  const double t_stop = trial.t_begin() + window_s + 1e-9;
  Vec2 velocity_sum[2];
  Vec2 displacement_sum[2];
  int count[2] = {0, 0};
  for (const auto& track : trial.tracks()) {
    auto samples = trial.track_samples(track);
    std::size_t last = 0;
    while (last + 1 < samples.size() && samples[last + 1].t <= t_stop) ++last;
    if (last == 0 || samples.front().t > t_stop) continue;
    const Vec2 disp = samples[last].pos - samples.front().pos;
    const double dt = samples[last].t - samples.front().t;
    const int g = track.group == Group::kG1 ? 0 : 1;
    displacement_sum[g] = displacement_sum[g] + disp;
    velocity_sum[g] = velocity_sum[g] + (1.0 / dt) * disp;
    ++count[g];
  }
  Vec2 heading[2];
  for (int g = 0; g < 2; ++g) {
    if (count[g] == 0 || norm((1.0 / count[g]) * displacement_sum[g]) < 1e-6) {
      throw Error(ErrorCode::kDegenerateMotion, "trial " + trial.id() + ": group " + std::to_string(g + 1) +
                                                    " shows no net motion in the first " + std::to_string(window_s) + " s");
    }
    const Vec2 v = (1.0 / count[g]) * velocity_sum[g];
    heading[g] = (1.0 / norm(v)) * v;
  }
  Vec2 sum = heading[0] + heading[1];
  if (norm(sum) < 1e-9) {
    // Antiparallel flows: group 1 is taken to head +90 degrees off the bisector.
    sum = Vec2{heading[0].y, -heading[0].x};
  }
  return (1.0 / norm(sum)) * sum;
}

Vec2 resolve_bisector(const Trial& trial, double window_s) {
  if (trial.bisector()) return *trial.bisector();
  return estimate_bisector(trial, window_s);
}

std::vector<double> sample_times(const Trial& trial) {
  const double fs = trial.sample_rate_hz();
  const auto n = static_cast<long long>(std::llround((trial.t_end() - trial.t_begin()) * fs));
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(n + 1));
  for (long long k = 0; k <= n; ++k) times.push_back(trial.t_begin() + static_cast<double>(k) / fs);
  return times;
}

TimeWindow crossing_window(const Trial& trial) {
  const auto times = sample_times(trial);
  std::optional<TimeWindow> best;
  std::optional<double> run_start;
  double run_last = 0.0;
  auto close_run = [&]() {
    if (!run_start) return;
    const TimeWindow w{*run_start, run_last};
    if (!best || (w.t_end - w.t_start) > (best->t_end - best->t_start)) best = w;
    run_start.reset();
  };
  for (double t : times) {
    if (boxes_overlap(collect_frame(trial, t))) {
      if (!run_start) run_start = t;
      run_last = t;
    } else {
      close_run();
    }
  }
  close_run();
  if (!best) {
    throw Error(ErrorCode::kNoCrossing, "trial " + trial.id() + ": group bounding boxes never overlap");
  }
  return *best;
}

double frame_diameter(const Frame& frame) {
  std::vector<Vec2> all(frame.g1);
  all.insert(all.end(), frame.g2.begin(), frame.g2.end());
  double diameter = 0.0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (std::size_t j = i + 1; j < all.size(); ++j) diameter = std::max(diameter, norm(all[i] - all[j]));
  }
  return diameter;
}

}  // namespace stripefit
