#include "stripefit/trial_io.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>
#include <utility>

#include "stripefit/csv.hpp"
#include "stripefit/error.hpp"

namespace stripefit {

namespace {

struct PendingTrial {
  double angle = 0.0;
  std::size_t first_line = 0;
  std::vector<TrackSample> samples;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TrialSet parse_trials(std::istream& source, const MetadataMap& metadata) {
  std::map<std::string, PendingTrial> pending;
  std::string raw;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(source, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (line_no == 1 && line.substr(0, 3) == "\xEF\xBB\xBF") line.remove_prefix(3);
    line = csv::trim(line);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kTrialCsvHeader) {
        throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": expected header '" +
                                           std::string(kTrialCsvHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    const auto fields = csv::split(line);
    if (fields.size() != 7) {
      throw Error(ErrorCode::kParse,
                  "line " + std::to_string(line_no) + ": expected 7 fields, found " + std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[2].empty()) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": empty trial or pedestrian id");
    }
    const double angle = csv::parse_double(fields[1], line_no, "crossing_angle_deg");
    const long long group = csv::parse_int(fields[3], line_no, "group");
    if (group != 1 && group != 2) {
      throw Error(ErrorCode::kSchema, "line " + std::to_string(line_no) + ": group must be 1 or 2, found " +
                                          std::string(fields[3]));
    }
    TrackSample sample;
    sample.pedestrian_id = std::string(fields[2]);
    sample.group = group == 1 ? Group::kG1 : Group::kG2;
    sample.t = csv::parse_double(fields[4], line_no, "t");
    sample.pos.x = csv::parse_double(fields[5], line_no, "x");
    sample.pos.y = csv::parse_double(fields[6], line_no, "y");

    auto [it, inserted] = pending.try_emplace(std::string(fields[0]));
    if (inserted) {
      it->second.angle = angle;
      it->second.first_line = line_no;
    } else if (it->second.angle != angle) {
      throw Error(ErrorCode::kSchema, "line " + std::to_string(line_no) + ": trial " + it->first +
                                          " changes crossing angle");
    }
    it->second.samples.push_back(std::move(sample));
  }
  if (pending.empty()) throw Error(ErrorCode::kNoTrials, "no trials");

  TrialSet trials;
  trials.reserve(pending.size());
  for (auto& [id, p] : pending) {
    std::optional<double> fs;
    std::optional<Vec2> bisector;
    if (auto m = metadata.find(id); m != metadata.end()) {
      fs = m->second.sample_rate_hz;
      bisector = m->second.bisector;
    }
    trials.emplace_back(id, p.angle, std::move(p.samples), fs, bisector);
  }
  return trials;
}

TrialSet parse_trials_text(std::string_view text, const MetadataMap& metadata) {
  std::istringstream in{std::string(text)};
  return parse_trials(in, metadata);
}

TrialSet load_trials(const std::string& path, const MetadataMap& metadata) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  return parse_trials(in, metadata);
}

void serialize_trials(const TrialSet& trials, std::ostream& out, int significant_digits) {
  out << kTrialCsvHeader << '\n';
  for (const auto& trial : trials) {
    const std::string angle = csv::format_double(trial.crossing_angle_deg(), significant_digits);
    for (const auto& s : trial.samples()) {
      out << trial.id() << ',' << angle << ',' << s.pedestrian_id << ',' << static_cast<int>(s.group) << ','
          << csv::format_double(s.t, significant_digits) << ',' << csv::format_double(s.pos.x, significant_digits)
          << ',' << csv::format_double(s.pos.y, significant_digits) << '\n';
    }
  }
}

void save_trials(const TrialSet& trials, const std::string& path, int significant_digits) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  serialize_trials(trials, out, significant_digits);
}

MetadataMap parse_metadata_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("metadata JSON: ") + e.what());
  }
  if (!doc.is_array()) doc = nlohmann::json::array({doc});
  MetadataMap out;
  for (const auto& item : doc) {
    try {
      TrialMetadata m;
      m.trial_id = item.at("trial_id").get<std::string>();
      if (item.contains("bisector") && !item["bisector"].is_null()) {
        const auto& b = item["bisector"];
        if (!b.is_array() || b.size() != 2) throw Error(ErrorCode::kSchema, "bisector must be [bx, by]");
        m.bisector = Vec2{b[0].get<double>(), b[1].get<double>()};
      }
      if (item.contains("sample_rate_hz") && !item["sample_rate_hz"].is_null()) {
        m.sample_rate_hz = item["sample_rate_hz"].get<double>();
      }
      out[m.trial_id] = m;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kSchema, std::string("metadata JSON: ") + e.what());
    }
  }
  return out;
}

MetadataMap load_metadata(const std::string& path) { return parse_metadata_json(read_file(path)); }

std::string metadata_to_json(const TrialSet& trials) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& trial : trials) {
    nlohmann::json item;
    item["trial_id"] = trial.id();
    item["sample_rate_hz"] = trial.sample_rate_hz();
    if (trial.bisector()) {
      item["bisector"] = {trial.bisector()->x, trial.bisector()->y};
    } else {
      item["bisector"] = nullptr;
    }
    doc.push_back(item);
  }
  return doc.dump(2);
}

}  // namespace stripefit
