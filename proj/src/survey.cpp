#include "appeval/survey.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "appeval/csv.hpp"
#include "appeval/error.hpp"

namespace appeval {

void SurveyConfig::validate() const {
  if (!(truncation_radius_m > 0.0)) throw DataError("config: truncation_radius_m must be > 0");
  if (!(view_angle_rad > 0.0 && view_angle_rad <= 2.0 * std::numbers::pi))
    throw DataError("config: view angle must lie in (0, 360] degrees");
  if (!(snapshot_interval_s > 0.0)) throw DataError("config: snapshot_interval_s must be > 0");
  if (!(study_area_km2 > 0.0)) throw DataError("config: study_area_km2 must be > 0");
  if (distance_bin_edges_m) {
    const auto& e = *distance_bin_edges_m;
    if (e.size() < 2) throw DataError("config: distance_bin_edges_m needs at least two edges");
    if (e.front() != 0.0) throw DataError("config: first distance bin edge must be 0");
    for (std::size_t i = 1; i < e.size(); ++i)
      if (!(e[i] > e[i - 1])) throw DataError("config: distance_bin_edges_m must be strictly increasing");
    if (e.back() != truncation_radius_m)
      throw DataError("config: last distance bin edge must equal truncation_radius_m");
  }
}

SurveyConfig SurveyConfig::from_json_text(std::string_view text, std::string_view source) {
  const std::string where(source);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(where + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object()) throw DataError(where + ": config must be a JSON object");
  auto number = [&](const char* key) {
    if (!doc.contains(key)) throw DataError(where + ": missing key '" + key + "'");
    if (!doc[key].is_number()) throw DataError(where + ": key '" + key + "' must be a number");
    return doc[key].get<double>();
  };
  SurveyConfig c;
  c.truncation_radius_m = number("truncation_radius_m");
  c.view_angle_rad = number("view_angle_deg") * std::numbers::pi / 180.0;
  c.snapshot_interval_s = number("snapshot_interval_s");
  c.study_area_km2 = number("study_area_km2");
  if (doc.contains("distance_bin_edges_m") && !doc["distance_bin_edges_m"].is_null()) {
    const auto& edges = doc["distance_bin_edges_m"];
    if (!edges.is_array()) throw DataError(where + ": distance_bin_edges_m must be an array");
    std::vector<double> v;
    for (const auto& x : edges) {
      if (!x.is_number()) throw DataError(where + ": distance_bin_edges_m must contain numbers");
      v.push_back(x.get<double>());
    }
    c.distance_bin_edges_m = std::move(v);
  }
  try {
    c.validate();
  } catch (const DataError& e) {
    throw DataError(where + ": " + e.what());
  }
  return c;
}

SurveyConfig SurveyConfig::from_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str(), path);
}

std::string SurveyConfig::to_json_text() const {
  nlohmann::ordered_json doc;
  doc["truncation_radius_m"] = truncation_radius_m;
  doc["view_angle_deg"] = view_angle_rad * 180.0 / std::numbers::pi;
  doc["snapshot_interval_s"] = snapshot_interval_s;
  doc["study_area_km2"] = study_area_km2;
  if (distance_bin_edges_m) doc["distance_bin_edges_m"] = *distance_bin_edges_m;
  return doc.dump(2) + "\n";
}

std::string_view to_string(FilterScenario scenario) {
  switch (scenario) {
    case FilterScenario::None: return "None";
    case FilterScenario::Manual: return "Manual";
    case FilterScenario::Auto: return "Auto";
  }
  return "None";
}

FilterScenario parse_scenario(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "none") return FilterScenario::None;
  if (s == "manual") return FilterScenario::Manual;
  if (s == "auto") return FilterScenario::Auto;
  throw UsageError("unknown scenario '" + std::string(text) + "' (expected none, manual or auto)");
}

Survey::Survey(SurveyConfig config, std::vector<CameraLocation> locations, std::vector<Clip> clips,
               std::vector<DistanceObservation> observations)
    : config_(std::move(config)),
      locations_(std::move(locations)),
      clips_(std::move(clips)),
      observations_(std::move(observations)) {
  config_.validate();
  for (std::size_t i = 0; i < locations_.size(); ++i) {
    const auto& loc = locations_[i];
    if (!(loc.operating_time_s > 0.0))
      throw DataError("location '" + loc.location_id + "': operating time must be > 0");
    if (!location_index_.emplace(loc.location_id, i).second)
      throw DataError("duplicate location_id '" + loc.location_id + "'");
  }
  for (std::size_t i = 0; i < clips_.size(); ++i) {
    const auto& clip = clips_[i];
    if (!location_index_.count(clip.location_id))
      throw DataError("clip '" + clip.clip_id + "' references unknown location '" + clip.location_id + "'");
    if (!clip_index_.emplace(clip.clip_id, i).second)
      throw DataError("duplicate clip_id '" + clip.clip_id + "'");
  }
  obs_location_.reserve(observations_.size());
  for (const auto& obs : observations_) {
    auto it = clip_index_.find(obs.clip_id);
    if (it == clip_index_.end()) throw DataError("observation references unknown clip '" + obs.clip_id + "'");
    if (!(obs.distance_m >= 0.0) || !std::isfinite(obs.distance_m))
      throw DataError("observation in clip '" + obs.clip_id + "': distance must be finite and >= 0");
    if (obs.count < 1) throw DataError("observation in clip '" + obs.clip_id + "': count must be >= 1");
    if (obs.snapshot_index < 0)
      throw DataError("observation in clip '" + obs.clip_id + "': snapshot_index must be >= 0");
    obs_location_.push_back(location_index_.at(clips_[it->second].location_id));
  }
}

const Clip& Survey::clip_of(const DistanceObservation& obs) const {
  return clips_[clip_index_.at(obs.clip_id)];
}

double Survey::effort(std::size_t location) const {
  return locations_[location].operating_time_s / config_.snapshot_interval_s;
}

double Survey::total_effort() const {
  double sum = 0.0;
  for (std::size_t k = 0; k < locations_.size(); ++k) sum += effort(k);
  return sum;
}

std::int64_t Survey::total_count() const {
  std::int64_t n = 0;
  for (const auto& o : observations_) n += o.count;
  return n;
}

Survey Survey::with_observations(std::vector<DistanceObservation> observations) const {
  return Survey(config_, locations_, clips_, std::move(observations));
}

bool Survey::operator==(const Survey& other) const {
  return config_ == other.config_ && locations_ == other.locations_ && clips_ == other.clips_ &&
         observations_ == other.observations_;
}

namespace {

Survey load_tables(const csv::Table& obs_t, const csv::Table& clip_t, const csv::Table& loc_t,
                   SurveyConfig config) {
  config.validate();

  std::vector<CameraLocation> locations;
  std::unordered_map<std::string, std::size_t> loc_rows;
  {
    const auto id = loc_t.column("location_id");
    const auto time = loc_t.column("operating_time_s");
    for (std::size_t r = 0; r < loc_t.size(); ++r) {
      CameraLocation loc{loc_t.cell(r, id), loc_t.number(r, time)};
      if (!(loc.operating_time_s > 0.0))
        throw DataError(loc_t.where(r) + ": operating_time_s must be > 0");
      if (!loc_rows.emplace(loc.location_id, r).second)
        throw DataError(loc_t.where(r) + ": duplicate location_id '" + loc.location_id + "'");
      locations.push_back(std::move(loc));
    }
  }

  std::vector<Clip> clips;
  std::unordered_map<std::string, std::size_t> clip_rows;
  {
    const auto id = clip_t.column("clip_id");
    const auto loc = clip_t.column("location_id");
    const auto manual = clip_t.column("reactivity_manual");
    const auto aut = clip_t.column("reactivity_auto");
    for (std::size_t r = 0; r < clip_t.size(); ++r) {
      Clip c{clip_t.cell(r, id), clip_t.cell(r, loc), clip_t.boolean(r, manual), clip_t.boolean(r, aut)};
      if (!loc_rows.count(c.location_id))
        throw DataError(clip_t.where(r) + ": dangling reference to unknown location '" + c.location_id + "'");
      if (!clip_rows.emplace(c.clip_id, r).second)
        throw DataError(clip_t.where(r) + ": duplicate clip_id '" + c.clip_id + "'");
      clips.push_back(std::move(c));
    }
  }

  std::vector<DistanceObservation> observations;
  {
    const auto clip = obs_t.column("clip_id");
    const auto snap = obs_t.column("snapshot_index");
    const auto dist = obs_t.column("distance_m");
    const auto count = obs_t.column("count");
    observations.reserve(obs_t.size());
    for (std::size_t r = 0; r < obs_t.size(); ++r) {
      DistanceObservation o{obs_t.cell(r, clip), obs_t.integer(r, snap), obs_t.number(r, dist),
                            obs_t.integer(r, count)};
      if (!clip_rows.count(o.clip_id))
        throw DataError(obs_t.where(r) + ": dangling reference to unknown clip '" + o.clip_id + "'");
      if (o.snapshot_index < 0) throw DataError(obs_t.where(r) + ": snapshot_index must be >= 0");
      if (o.distance_m < 0.0) throw DataError(obs_t.where(r) + ": distance_m must be >= 0");
      if (o.count < 1) throw DataError(obs_t.where(r) + ": count must be >= 1");
      observations.push_back(std::move(o));
    }
  }
  return Survey(std::move(config), std::move(locations), std::move(clips), std::move(observations));
}

}  // namespace

Survey load_survey(std::istream& observations, std::istream& clips, std::istream& locations,
                   SurveyConfig config) {
  return load_tables(csv::read(observations, "observations.csv"), csv::read(clips, "clips.csv"),
                     csv::read(locations, "locations.csv"), std::move(config));
}

Survey load_survey_files(const SurveyPaths& paths, SurveyConfig config) {
  return load_tables(csv::read_file(paths.observations), csv::read_file(paths.clips),
                     csv::read_file(paths.locations), std::move(config));
}

Survey apply_filter(const Survey& survey, FilterScenario scenario) {
  if (scenario == FilterScenario::None) return survey;
  std::vector<DistanceObservation> kept;
  for (const auto& obs : survey.observations()) {
    const Clip& clip = survey.clip_of(obs);
    const bool reactive = scenario == FilterScenario::Manual ? clip.reactivity_manual : clip.reactivity_auto;
    if (!reactive) kept.push_back(obs);
  }
  return survey.with_observations(std::move(kept));
}

Survey truncate(const Survey& survey) {
  const double w = survey.config().truncation_radius_m;
  std::vector<DistanceObservation> kept;
  for (const auto& obs : survey.observations())
    if (obs.distance_m <= w) kept.push_back(obs);
  return survey.with_observations(std::move(kept));
}

void write_observations(std::ostream& out, const Survey& survey) {
  out << "clip_id,snapshot_index,distance_m,count\n";
  for (const auto& o : survey.observations())
    out << csv::escape(o.clip_id) << ',' << o.snapshot_index << ',' << csv::format_double(o.distance_m) << ','
        << o.count << '\n';
}

void write_clips(std::ostream& out, const Survey& survey) {
  out << "clip_id,location_id,reactivity_manual,reactivity_auto\n";
  for (const auto& c : survey.clips())
    out << csv::escape(c.clip_id) << ',' << csv::escape(c.location_id) << ','
        << (c.reactivity_manual ? "true" : "false") << ',' << (c.reactivity_auto ? "true" : "false") << '\n';
}

void write_locations(std::ostream& out, const Survey& survey) {
  out << "location_id,operating_time_s\n";
  for (const auto& l : survey.locations())
    out << csv::escape(l.location_id) << ',' << csv::format_double(l.operating_time_s) << '\n';
}

}  // namespace appeval
