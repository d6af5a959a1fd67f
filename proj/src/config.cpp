#include "stripefit/config.hpp"

#include <cstdio>
#include <set>
#include <string>

#include "stripefit/error.hpp"
#include "stripefit/rng.hpp"

namespace stripefit {

namespace {

using nlohmann::json;

void reject_unknown(const json& doc, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : doc.items()) {
    if (!allowed.count(key)) throw Error(ErrorCode::kConfiguration, "unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& doc, const char* key, T& out) {
  if (doc.contains(key)) out = doc.at(key).get<T>();
}

}  // namespace

json to_json(const FitConfig& c) {
  json doc;
  doc["bounds"] = {
      {"gamma_deg", {c.bounds.gamma_lo_deg, c.bounds.gamma_hi_deg}},
      {"lambda_m", {c.bounds.lambda_min_m, c.bounds.lambda_max_m}},
      {"psi_rad", {c.bounds.psi_lo_rad, c.bounds.psi_hi_rad}},
  };
  doc["sa"] = {
      {"t0", c.sa.t0},
      {"alpha", c.sa.alpha},
      {"steps_per_temp", c.sa.steps_per_temp},
      {"t_min", c.sa.t_min},
      {"step_scale", c.sa.step_scale},
      {"seed", c.sa.seed},
  };
  doc["nm"] = {
      {"initial_step", c.nm.initial_step},
      {"tol", c.nm.tol},
      {"max_iter", c.nm.max_iter},
  };
  json starts = json::array();
  for (const auto& s : c.nm_starts) starts.push_back({s.gamma_deg, s.lambda_m, s.psi_rad});
  doc["nm_starts"] = starts;
  doc["frame_stride_s"] = c.frame_stride_s;
  doc["bisector_window_s"] = c.bisector_window_s;
  doc["window"] = c.window_override ? json{c.window_override->t_start, c.window_override->t_end} : json(nullptr);
  doc["bisector"] = c.bisector_override ? json{c.bisector_override->x, c.bisector_override->y} : json(nullptr);
  doc["grid_resolution"] = c.grid_resolution;
  return doc;
}

FitConfig fit_config_from_json(const json& doc, FitConfig c) {
  try {
    reject_unknown(doc,
                   {"bounds", "sa", "nm", "nm_starts", "frame_stride_s", "bisector_window_s", "window", "bisector",
                    "grid_resolution"},
                   "config");
    if (doc.contains("bounds")) {
      const auto& b = doc["bounds"];
      reject_unknown(b, {"gamma_deg", "lambda_m", "psi_rad"}, "bounds");
      if (b.contains("gamma_deg")) {
        c.bounds.gamma_lo_deg = b["gamma_deg"].at(0).get<double>();
        c.bounds.gamma_hi_deg = b["gamma_deg"].at(1).get<double>();
      }
      if (b.contains("lambda_m")) {
        c.bounds.lambda_min_m = b["lambda_m"].at(0).get<double>();
        c.bounds.lambda_max_m = b["lambda_m"].at(1).get<double>();
      }
      if (b.contains("psi_rad")) {
        c.bounds.psi_lo_rad = b["psi_rad"].at(0).get<double>();
        c.bounds.psi_hi_rad = b["psi_rad"].at(1).get<double>();
      }
    }
    if (doc.contains("sa")) {
      const auto& s = doc["sa"];
      reject_unknown(s, {"t0", "alpha", "steps_per_temp", "t_min", "step_scale", "seed"}, "sa");
      read(s, "t0", c.sa.t0);
      read(s, "alpha", c.sa.alpha);
      read(s, "steps_per_temp", c.sa.steps_per_temp);
      read(s, "t_min", c.sa.t_min);
      read(s, "step_scale", c.sa.step_scale);
      read(s, "seed", c.sa.seed);
    }
    if (doc.contains("nm")) {
      const auto& n = doc["nm"];
      reject_unknown(n, {"initial_step", "tol", "max_iter"}, "nm");
      read(n, "initial_step", c.nm.initial_step);
      read(n, "tol", c.nm.tol);
      read(n, "max_iter", c.nm.max_iter);
    }
    if (doc.contains("nm_starts")) {
      c.nm_starts.clear();
      for (const auto& s : doc["nm_starts"]) {
        c.nm_starts.push_back({s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<double>()});
      }
    }
    read(doc, "frame_stride_s", c.frame_stride_s);
    read(doc, "bisector_window_s", c.bisector_window_s);
    if (doc.contains("window")) {
      const auto& w = doc["window"];
      c.window_override = w.is_null() ? std::nullopt
                                      : std::optional<TimeWindow>(TimeWindow{w.at(0).get<double>(), w.at(1).get<double>()});
    }
    if (doc.contains("bisector")) {
      const auto& b = doc["bisector"];
      c.bisector_override =
          b.is_null() ? std::nullopt : std::optional<Vec2>(Vec2{b.at(0).get<double>(), b.at(1).get<double>()});
    }
    read(doc, "grid_resolution", c.grid_resolution);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfiguration, std::string("config JSON: ") + e.what());
  }
  return c;
}

std::string config_fingerprint(const FitConfig& config) {
  const std::uint64_t h = fnv1a64(to_json(config).dump());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace stripefit
