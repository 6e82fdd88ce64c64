#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "drivetraits/evaluation.hpp"
#include "drivetraits/signals.hpp"

namespace drivetraits {

// One planted trait-telemetry link. The generator scales a channel-specific
// behavior by exp(effect * z), where z is the driver's standardized target
// score (or the latent normal behind an ordinal item).
struct Coupling {
  std::string target = "tmt_b";
  ChannelId channel = ChannelId::accelerator_position;
  RoadScope road_scope = RoadScope::Arterial;
  double band_lo_s = 3;   // arterial burst durations drawn from this band
  double band_hi_s = 15;
  double effect = 0.8;
};

struct TraitMoments {
  double mean = 0;
  double sd = 1;
};

struct CohortConfig {
  int n_drivers = 23;
  int two_session_drivers = 15;  // remaining drivers contribute one session
  double sample_rate_hz = 10;
  double arterial_mean_s = 355;
  double arterial_sd_s = 35;
  double arterial_min_s = 200;
  int intersection_count = 4;
  // Cognitive score moments; sampling is truncated at zero with
  // moment-corrected parent parameters.
  TraitMoments tmt_a{34.1, 10.2};
  TraitMoments tmt_b{94.9, 36.3};
  TraitMoments maze{26.3, 16.9};
  TraitMoments ufov{151.4, 100.1};
  std::vector<Coupling> couplings;  // empty -> default planted couplings
  bool use_default_couplings = true;
  std::uint64_t seed = 1;

  void validate() const;
};

const std::vector<Coupling>& default_couplings();

struct GeneratedCohort {
  Cohort cohort;
  nlohmann::ordered_json ground_truth;  // couplings and driver latents
};

// Deterministic synthetic cohort: traits, telemetry, route. Sessions carry
// the derived channels and pass the loader/segmentation validations.
GeneratedCohort gen_cohort(const CohortConfig& config);

// Writes telemetry CSVs, traits.csv, route_map.json and couplings.json.
void write_cohort(const GeneratedCohort& generated,
                  const std::filesystem::path& dir);

// Uniformly random permutation of the driver->score assignment, independently
// per target. Seed 0 is reserved for the identity permutation.
TraitTable permute_labels(const TraitTable& table, std::uint64_t seed);

// Parent parameters (m, s) such that a normal(m, s) truncated at zero has the
// requested mean and standard deviation.
TraitMoments truncated_normal_parent(const TraitMoments& target);

// Draws from normal(parent) conditioned on positivity.
double sample_truncated_positive(const TraitMoments& parent, std::mt19937_64& rng);

}  // namespace drivetraits
