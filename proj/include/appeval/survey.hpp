#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace appeval {

/// Design constants of a camera-trap distance-sampling survey.
struct SurveyConfig {
  double truncation_radius_m = 0.0;   // w
  double view_angle_rad = 0.0;        // theta
  double snapshot_interval_s = 0.0;   // t
  double study_area_km2 = 0.0;        // A
  std::optional<std::vector<double>> distance_bin_edges_m;

  /// Throws DataError when an invariant is violated.
  void validate() const;

  /// Parses the JSON config document (`view_angle_deg` is converted to radians).
  static SurveyConfig from_json_text(std::string_view text, std::string_view source = "config");
  static SurveyConfig from_json_file(const std::string& path);
  std::string to_json_text() const;

  bool operator==(const SurveyConfig&) const = default;
};

struct CameraLocation {
  std::string location_id;
  double operating_time_s = 0.0;  // T_k

  bool operator==(const CameraLocation&) const = default;
};

struct Clip {
  std::string clip_id;
  std::string location_id;
  bool reactivity_manual = false;
  bool reactivity_auto = false;

  bool operator==(const Clip&) const = default;
};

struct DistanceObservation {
  std::string clip_id;
  std::int64_t snapshot_index = 0;
  double distance_m = 0.0;
  std::int64_t count = 1;

  bool operator==(const DistanceObservation&) const = default;
};

enum class FilterScenario { None, Manual, Auto };

std::string_view to_string(FilterScenario scenario);
/// Accepts "none", "manual", "auto" (case-insensitive).
FilterScenario parse_scenario(std::string_view text);

/// A cross-referenced, immutable survey. Construction validates ids and references.
class Survey {
 public:
  Survey(SurveyConfig config, std::vector<CameraLocation> locations, std::vector<Clip> clips,
         std::vector<DistanceObservation> observations);

  const SurveyConfig& config() const { return config_; }
  const std::vector<CameraLocation>& locations() const { return locations_; }
  const std::vector<Clip>& clips() const { return clips_; }
  const std::vector<DistanceObservation>& observations() const { return observations_; }

  const Clip& clip_of(const DistanceObservation& obs) const;
  /// Index into locations() of the camera that recorded an observation.
  std::size_t location_index_of(std::size_t observation) const { return obs_location_[observation]; }

  /// Snapshot moments per camera, e_k = T_k / t.
  double effort(std::size_t location) const;
  double total_effort() const;
  std::int64_t total_count() const;

  /// Same clips, locations and config with a different observation set.
  Survey with_observations(std::vector<DistanceObservation> observations) const;

  bool operator==(const Survey& other) const;

 private:
  SurveyConfig config_;
  std::vector<CameraLocation> locations_;
  std::vector<Clip> clips_;
  std::vector<DistanceObservation> observations_;
  std::unordered_map<std::string, std::size_t> clip_index_;
  std::unordered_map<std::string, std::size_t> location_index_;
  std::vector<std::size_t> obs_location_;
};

Survey load_survey(std::istream& observations, std::istream& clips, std::istream& locations,
                   SurveyConfig config);

struct SurveyPaths {
  std::string observations;
  std::string clips;
  std::string locations;
};

Survey load_survey_files(const SurveyPaths& paths, SurveyConfig config);

/// Removes observations from clips flagged by the scenario. Effort is unchanged.
Survey apply_filter(const Survey& survey, FilterScenario scenario);

/// Removes observations beyond the truncation radius (r <= w is kept).
Survey truncate(const Survey& survey);

void write_observations(std::ostream& out, const Survey& survey);
void write_clips(std::ostream& out, const Survey& survey);
void write_locations(std::ostream& out, const Survey& survey);

}  // namespace appeval
