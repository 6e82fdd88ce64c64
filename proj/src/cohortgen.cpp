#include "drivetraits/cohortgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "drivetraits/rng.hpp"

namespace drivetraits {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Route layout in local meters around the base coordinate.
constexpr double kBaseLat = 35.15;
constexpr double kBaseLon = 136.96;
constexpr double kArterialFoldM = 800;    // car shuttles along [0, fold]
constexpr double kArterialRadiusM = 30;
constexpr double kZoneRowY = 250;
constexpr double kZoneRadiusM = 20;
constexpr double kZoneSpacingM = 150;
constexpr double kZone1X = 1000;
constexpr double kZoneMarginM = 0.5;  // keeps pass frames strictly inside

GeoPoint local_to_geo(double x, double y) {
  const double lat = kBaseLat + y / 111320.0;
  const double lon = kBaseLon + x / (111320.0 * std::cos(kBaseLat * kPi / 180.0));
  return {lat, lon};
}

double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }
double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Mean and variance of normal(m, s) truncated to (0, inf).
void truncated_moments(double m, double s, double* mean, double* var) {
  const double a = -m / s;
  const double keep = 1.0 - norm_cdf(a);
  const double lambda = norm_pdf(a) / keep;
  *mean = m + s * lambda;
  *var = s * s * (1.0 + a * lambda - lambda * lambda);
}

}  // namespace

TraitMoments truncated_normal_parent(const TraitMoments& target) {
  if (target.mean <= 0 || target.sd <= 0) {
    throw ConfigError("trait moments must be positive");
  }
  double m = target.mean;
  double s = target.sd;
  for (int iter = 0; iter < 100; ++iter) {
    double mean, var;
    truncated_moments(m, s, &mean, &var);
    const double f0 = mean - target.mean;
    const double f1 = std::sqrt(var) - target.sd;
    if (std::abs(f0) < 1e-10 * target.sd && std::abs(f1) < 1e-10 * target.sd) {
      break;
    }
    const double hm = 1e-6 * std::max(1.0, std::abs(m));
    const double hs = 1e-6 * s;
    double mean_m, var_m, mean_s, var_s;
    truncated_moments(m + hm, s, &mean_m, &var_m);
    truncated_moments(m, s + hs, &mean_s, &var_s);
    const double j00 = (mean_m - mean) / hm;
    const double j01 = (mean_s - mean) / hs;
    const double j10 = (std::sqrt(var_m) - std::sqrt(var)) / hm;
    const double j11 = (std::sqrt(var_s) - std::sqrt(var)) / hs;
    const double det = j00 * j11 - j01 * j10;
    if (std::abs(det) < 1e-14) break;
    m -= (j11 * f0 - j01 * f1) / det;
    s -= (-j10 * f0 + j00 * f1) / det;
    s = std::max(s, 1e-6 * target.sd);
  }
  return {m, s};
}

double sample_truncated_positive(const TraitMoments& parent, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(parent.mean, parent.sd);
  for (int i = 0; i < 10000; ++i) {
    const double v = normal(rng);
    if (v > 0) return v;
  }
  throw ConfigError("truncated sampler rejected too often; check trait moments");
}

const std::vector<Coupling>& default_couplings() {
  static const std::vector<Coupling> defaults = {
      {"tmt_b", ChannelId::accelerator_position, RoadScope::Arterial, 3, 15, 0.9},
      {"tmt_b", ChannelId::steering_angle, RoadScope::Arterial, 3, 15, 0.55},
      {"ufov", ChannelId::brake_pressure, RoadScope::Intersection, 3, 15, 0.7},
  };
  return defaults;
}

void CohortConfig::validate() const {
  if (n_drivers < 2) throw ConfigError("need at least 2 drivers");
  if (two_session_drivers < 0 || two_session_drivers > n_drivers) {
    throw ConfigError("two_session_drivers out of range");
  }
  if (sample_rate_hz <= 0) throw ConfigError("sample rate must be positive");
  if (arterial_mean_s <= 0 || arterial_sd_s < 0 || arterial_min_s <= 0) {
    throw ConfigError("arterial duration parameters must be positive");
  }
  if (intersection_count < 1) throw ConfigError("need at least one intersection");
  for (const auto& c : couplings) {
    if (!std::isfinite(c.effect)) throw ConfigError("coupling effect must be finite");
    bool known = false;
    for (const auto& t : all_targets()) known = known || t == c.target;
    if (!known) throw ConfigError("coupling references unknown target '" + c.target + "'");
    const bool ok =
        (c.road_scope == RoadScope::Arterial &&
         (c.channel == ChannelId::accelerator_position ||
          c.channel == ChannelId::steering_angle)) ||
        (c.road_scope == RoadScope::Intersection &&
         (c.channel == ChannelId::brake_pressure ||
          c.channel == ChannelId::accelerator_position ||
          c.channel == ChannelId::steering_angle));
    if (!ok) {
      throw ConfigError("no coupling mechanism for channel '" +
                        std::string(channel_name(c.channel)) + "' on scope '" +
                        std::string(road_scope_name(c.road_scope)) + "'");
    }
    if (c.band_lo_s <= 0 || c.band_hi_s < c.band_lo_s) {
      throw ConfigError("bad coupling duration band");
    }
  }
}

namespace {

// Low-pass (Ornstein-Uhlenbeck style) noise generator.
struct OuNoise {
  double state = 0;
  double rho = 0;
  double sigma = 1;
  OuNoise(double tau_s, double sigma_, double dt, std::mt19937_64& rng)
      : rho(std::exp(-dt / tau_s)), sigma(sigma_), rng_(&rng) {}
  double next() {
    std::normal_distribution<double> n(0.0, 1.0);
    state = rho * state + sigma * std::sqrt(1.0 - rho * rho) * n(*rng_);
    return state;
  }
  std::mt19937_64* rng_;
};

struct DriverLatents {
  double tmt_a = 0, tmt_b = 0, maze = 0, ufov = 0;  // z-scores
  std::array<double, kDsqItems> dsq_u{};
  std::array<double, kWsqItems> wsq_u{};
  double eta = 0;         // nuisance, uncorrelated with every target
  double speed_u = 0;     // baseline speed preference
};

double latent_for_target(const DriverLatents& l, const std::string& target) {
  if (target == "tmt_a") return l.tmt_a;
  if (target == "tmt_b") return l.tmt_b;
  if (target == "maze") return l.maze;
  if (target == "ufov") return l.ufov;
  if (target.rfind("dsq_", 0) == 0) return l.dsq_u[static_cast<std::size_t>(std::atoi(target.c_str() + 4) - 1)];
  if (target.rfind("wsq_", 0) == 0) return l.wsq_u[static_cast<std::size_t>(std::atoi(target.c_str() + 4) - 1)];
  throw ConfigError("unknown target '" + target + "'");
}

int ordinal_from_latent(double u, int categories) {
  static const std::vector<double> q4 = {-0.6744897501960817, 0.0,
                                         0.6744897501960817};
  static const std::vector<double> q5 = {-0.8416212335729143, -0.2533471031357997,
                                         0.2533471031357997, 0.8416212335729143};
  const std::vector<double>& cuts = categories == 4 ? q4 : q5;
  int v = 1;
  for (double c : cuts) v += u > c ? 1 : 0;
  return v;
}

struct SessionPlan {
  // per frame
  std::vector<double> x, y, v_ms, brake_plan, accel_burst, steer_extra;
  std::vector<int> zone;  // -1 outside passes
};

// Appends a constant-speed straight leg.
void add_leg(SessionPlan* plan, double x0, double y0, double x1, double y1,
             double speed, double dt, int zone = -1) {
  const double len = std::hypot(x1 - x0, y1 - y0);
  const int n = std::max(1, static_cast<int>(std::lround(len / speed / dt)));
  for (int i = 0; i < n; ++i) {
    const double f = static_cast<double>(i) / n;
    plan->x.push_back(x0 + (x1 - x0) * f);
    plan->y.push_back(y0 + (y1 - y0) * f);
    plan->v_ms.push_back(len / (n * dt));
    plan->brake_plan.push_back(0);
    plan->accel_burst.push_back(0);
    plan->steer_extra.push_back(0);
    plan->zone.push_back(zone);
  }
}

// Pass through one intersection zone along +x with a brake-then-accelerate
// profile; the brake drops to zero at `release_frac` of the pass.
void add_zone_pass(SessionPlan* plan, int zone, double center_x, double dt,
                   double release_frac, double brake_amp, double exit_burst_amp,
                   double steer_amp) {
  const double v_in = 6.0, v_min = 2.5, v_out = 7.0;
  const double len = 2.0 * (kZoneRadiusM - kZoneMarginM) - 1.0;  // 39 m
  const double x_start = center_x - kZoneRadiusM + kZoneMarginM;
  const double avg = release_frac * (v_in + v_min) / 2.0 +
                     (1.0 - release_frac) * (v_min + v_out) / 2.0;
  const double duration = len / avg;
  const int n = std::max(4, static_cast<int>(std::lround(duration / dt)));

  // Speed profile, then rescale the integral to the exact length.
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = (static_cast<double>(i) + 0.5) / n;
    v[static_cast<std::size_t>(i)] =
        t < release_frac
            ? v_in + (v_min - v_in) * (t / release_frac)
            : v_min + (v_out - v_min) * ((t - release_frac) / (1.0 - release_frac));
  }
  double sum = 0;
  for (double s : v) sum += s * dt;
  const double scale = len / sum;

  const double t_release = release_frac * n * dt;
  double pos = 0;
  for (int i = 0; i < n; ++i) {
    const double t = i * dt;
    plan->x.push_back(x_start + pos);
    plan->y.push_back(kZoneRowY);
    plan->v_ms.push_back(v[static_cast<std::size_t>(i)] * scale);
    plan->zone.push_back(zone);

    double p = 0;
    const double brake_end = t_release - 0.5 * dt;
    if (t < brake_end) {
      const double ramp_in = std::min(1.0, t / 0.6);
      const double ramp_out = std::min(1.0, (brake_end - t) / 0.4);
      p = brake_amp * std::min(ramp_in, ramp_out);
      p = std::max(p, 0.05);  // stays above the release threshold while braking
    }
    plan->brake_plan.push_back(p);

    double burst = 0;
    if (t >= t_release) {
      const double span = std::min(3.0, (n * dt) - t_release);
      const double u = (t - t_release) / span;
      if (u < 1.0) burst = exit_burst_amp * std::sin(kPi * u);
    }
    plan->accel_burst.push_back(burst);
    plan->steer_extra.push_back(steer_amp);
    pos += v[static_cast<std::size_t>(i)] * scale * dt;
  }
}

}  // namespace

GeneratedCohort gen_cohort(const CohortConfig& config_in) {
  CohortConfig config = config_in;
  if (config.use_default_couplings && config.couplings.empty()) {
    config.couplings = default_couplings();
  }
  config.validate();

  GeneratedCohort out;
  const double dt = 1.0 / config.sample_rate_hz;

  // Route map.
  RouteMap route;
  route.arterial_polyline = {local_to_geo(-50, 0),
                             local_to_geo(kArterialFoldM + 50, 0)};
  route.arterial_radius_m = kArterialRadiusM;
  for (int k = 0; k < config.intersection_count; ++k) {
    IntersectionZone zone;
    zone.id = "int" + std::to_string(k + 1);
    zone.center = local_to_geo(kZone1X + k * kZoneSpacingM, kZoneRowY);
    zone.radius_m = kZoneRadiusM;
    route.intersections.push_back(zone);
  }
  route.validate();
  out.cohort.route = route;

  const TraitMoments parent_tmt_a = truncated_normal_parent(config.tmt_a);
  const TraitMoments parent_tmt_b = truncated_normal_parent(config.tmt_b);
  const TraitMoments parent_maze = truncated_normal_parent(config.maze);
  const TraitMoments parent_ufov = truncated_normal_parent(config.ufov);

  const int id_width = config.n_drivers > 99 ? 3 : 2;
  nlohmann::ordered_json truth_drivers = nlohmann::json::array();

  for (int d = 0; d < config.n_drivers; ++d) {
    std::mt19937_64 rng(derive_seed(config.seed, 1000 + static_cast<std::uint64_t>(d)));
    std::normal_distribution<double> unit(0.0, 1.0);

    DriverLatents latents;
    TraitRow row;
    row.tmt_a = sample_truncated_positive(parent_tmt_a, rng);
    row.tmt_b = sample_truncated_positive(parent_tmt_b, rng);
    row.maze = sample_truncated_positive(parent_maze, rng);
    row.ufov = sample_truncated_positive(parent_ufov, rng);
    latents.tmt_a = (row.tmt_a - config.tmt_a.mean) / config.tmt_a.sd;
    latents.tmt_b = (row.tmt_b - config.tmt_b.mean) / config.tmt_b.sd;
    latents.maze = (row.maze - config.maze.mean) / config.maze.sd;
    latents.ufov = (row.ufov - config.ufov.mean) / config.ufov.sd;
    for (int i = 0; i < kDsqItems; ++i) {
      latents.dsq_u[static_cast<std::size_t>(i)] = unit(rng);
      row.dsq[static_cast<std::size_t>(i)] =
          ordinal_from_latent(latents.dsq_u[static_cast<std::size_t>(i)], 4);
    }
    for (int i = 0; i < kWsqItems; ++i) {
      latents.wsq_u[static_cast<std::size_t>(i)] = unit(rng);
      row.wsq[static_cast<std::size_t>(i)] =
          ordinal_from_latent(latents.wsq_u[static_cast<std::size_t>(i)], 5);
    }
    latents.eta = unit(rng);
    latents.speed_u = unit(rng);

    char id_buf[16];
    std::snprintf(id_buf, sizeof(id_buf), "d%0*d", id_width, d + 1);
    const std::string driver_id = id_buf;
    out.cohort.traits.driver_ids.push_back(driver_id);
    out.cohort.traits.rows.emplace(driver_id, row);

    // Coupling multipliers for this driver.
    double acc_art_mult = 1.0, steer_art_mult = 1.0;
    double brake_int_z = 0.0, acc_int_z = 0.0, steer_int_z = 0.0;
    double band_lo = 3, band_hi = 15;
    for (const auto& c : config.couplings) {
      const double z = latent_for_target(latents, c.target);
      if (c.road_scope == RoadScope::Arterial) {
        if (c.channel == ChannelId::accelerator_position) {
          acc_art_mult *= std::exp(c.effect * z);
          band_lo = c.band_lo_s;
          band_hi = c.band_hi_s;
        } else {
          steer_art_mult *= std::exp(c.effect * z);
        }
      } else {
        if (c.channel == ChannelId::brake_pressure) brake_int_z += c.effect * z;
        else if (c.channel == ChannelId::accelerator_position) acc_int_z += c.effect * z;
        else steer_int_z += c.effect * z;
      }
    }

    nlohmann::ordered_json dj;
    dj["driver_id"] = driver_id;
    dj["eta"] = latents.eta;
    dj["z"] = {{"tmt_a", latents.tmt_a}, {"tmt_b", latents.tmt_b},
               {"maze", latents.maze},   {"ufov", latents.ufov}};
    truth_drivers.push_back(dj);

    const int sessions = d < config.two_session_drivers ? 2 : 1;
    for (int s = 1; s <= sessions; ++s) {
      std::mt19937_64 srng(derive_seed(config.seed,
                                       static_cast<std::uint64_t>(d) * 16 +
                                           static_cast<std::uint64_t>(s) + 500000));
      std::normal_distribution<double> snorm(0.0, 1.0);
      std::uniform_real_distribution<double> sunif(0.0, 1.0);

      // --- timeline plan -----------------------------------------------
      SessionPlan plan;
      const double t_art = std::max(
          config.arterial_min_s,
          config.arterial_mean_s + config.arterial_sd_s * snorm(srng));
      const int n_art = static_cast<int>(std::lround(t_art / dt));
      const double v_base = 11.5 + 0.6 * latents.speed_u + 0.25 * snorm(srng);

      // Arterial: shuttle along the corridor with a slowly varying speed.
      {
        OuNoise v_noise(3.0, 0.35, dt, srng);
        const double phase = sunif(srng) * 2 * kPi;
        const double phase2 = sunif(srng) * 2 * kPi;
        double along = 0;
        for (int i = 0; i < n_art; ++i) {
          const double t = i * dt;
          const double v =
              std::max(6.0, v_base + 0.8 * std::sin(2 * kPi * t / 45.0 + phase) +
                                v_noise.next());
          along += v * dt;
          const double fold = std::fmod(along, 2 * kArterialFoldM);
          plan.x.push_back(fold <= kArterialFoldM ? fold : 2 * kArterialFoldM - fold);
          plan.y.push_back(1.5 * std::sin(2 * kPi * t / 23.0 + phase2));
          plan.v_ms.push_back(v);
          plan.brake_plan.push_back(0);
          plan.accel_burst.push_back(0);
          plan.steer_extra.push_back(0);
          plan.zone.push_back(-1);
        }
      }

      // Arterial brake taps (outside intersections, harmless to the split).
      {
        std::uniform_int_distribution<int> where(n_art / 5, n_art - 40);
        for (int e = 0; e < 2; ++e) {
          const int start = where(srng);
          const double amp = 0.12 + 0.05 * sunif(srng);
          for (int i = 0; i < 25 && start + i < n_art; ++i) {
            plan.brake_plan[static_cast<std::size_t>(start + i)] =
                amp * std::sin(kPi * i / 25.0);
          }
        }
      }

      // Arterial accelerator bursts; amplitude carries the planted coupling.
      {
        double t_next = 3.0 + 6.0 * sunif(srng);
        while (t_next < t_art) {
          const double dur = band_lo + (band_hi - band_lo) * sunif(srng);
          const double amp =
              5.5 * acc_art_mult * (0.6 + 0.8 * sunif(srng));
          const int start = static_cast<int>(t_next / dt);
          const int span = std::max(2, static_cast<int>(dur / dt));
          for (int i = 0; i < span && start + i < n_art; ++i) {
            plan.accel_burst[static_cast<std::size_t>(start + i)] +=
                amp * std::sin(kPi * i / span);
          }
          t_next += dur + 4.0 + 8.0 * sunif(srng);
        }
      }

      // Connector to the residential row.
      const double x_end = plan.x.back();
      add_leg(&plan, x_end, plan.y.back(), kArterialFoldM + 50, 120, 12.0, dt);
      add_leg(&plan, kArterialFoldM + 50, 120, kArterialFoldM + 50, kZoneRowY, 10.0, dt);
      add_leg(&plan, kArterialFoldM + 50, kZoneRowY,
              kZone1X - kZoneRadiusM - kZoneMarginM, kZoneRowY, 8.0, dt);

      // Intersection passes and gaps.
      const double release_frac =
          std::clamp(0.55 - 0.12 * std::tanh(brake_int_z), 0.25, 0.85);
      const double brake_amp = std::clamp(
          0.45 * std::exp(0.35 * brake_int_z) * (1.0 + 0.15 * std::abs(latents.eta)),
          0.08, 1.5);
      const double exit_burst =
          9.0 * std::exp(0.6 * latents.eta + acc_int_z) * (0.8 + 0.4 * sunif(srng));
      const double steer_int_amp = 2.2 * std::exp(0.25 * steer_int_z);
      for (int k = 0; k < config.intersection_count; ++k) {
        const double cx = kZone1X + k * kZoneSpacingM;
        add_zone_pass(&plan, k, cx, dt,
                      std::clamp(release_frac + 0.03 * snorm(srng), 0.2, 0.9),
                      brake_amp * (0.9 + 0.2 * sunif(srng)), exit_burst,
                      steer_int_amp);
        if (k + 1 < config.intersection_count) {
          add_leg(&plan, cx + kZoneRadiusM + kZoneMarginM, kZoneRowY,
                  cx + kZoneSpacingM - kZoneRadiusM - kZoneMarginM, kZoneRowY, 6.5,
                  dt);
        }
      }
      const double last_cx =
          kZone1X + (config.intersection_count - 1) * kZoneSpacingM;
      add_leg(&plan, last_cx + kZoneRadiusM + kZoneMarginM, kZoneRowY,
              last_cx + kZoneRadiusM + 60, kZoneRowY, 7.0, dt);

      // --- channel synthesis -------------------------------------------
      const int n = static_cast<int>(plan.x.size());
      DriveSession session;
      session.driver_id = driver_id;
      session.session_index = s;
      session.sample_rate_hz = config.sample_rate_hz;

      Eigen::VectorXd steering(n), eps(n), fwd(n), lat_acc(n), yaw(n), speed(n),
          accel(n), brake(n), fuel(n), lat(n), lon(n);

      OuNoise steer_ou(1.2, 1.0, dt, srng);
      OuNoise jitter_ou(0.8, 1.0, dt, srng);
      OuNoise speed_ou(1.5, 0.35, dt, srng);
      OuNoise pedal_ou(1.1, 1.0, dt, srng);
      OuNoise yaw_ou(0.9, 0.25, dt, srng);
      OuNoise fwd_ou(1.0, 0.04, dt, srng);
      OuNoise lat_ou(1.0, 0.05, dt, srng);
      OuNoise eps_ou(0.7, 0.05, dt, srng);
      OuNoise fuel_ou(2.0, 0.008, dt, srng);
      OuNoise brake_ou(1.5, 0.0015, dt, srng);
      const double resid_steer_amp = 3.5 * std::exp(0.5 * latents.eta);
      const double resid_pedal_amp = 2.2 * std::exp(0.6 * latents.eta);
      const double lane_phase = sunif(srng) * 2 * kPi;

      double prev_v = plan.v_ms[0];
      double prev_steer = 0;
      for (int i = 0; i < n; ++i) {
        const double t = i * dt;
        const double v = plan.v_ms[static_cast<std::size_t>(i)];
        const bool arterial_phase = i < n_art;
        const bool in_zone = plan.zone[static_cast<std::size_t>(i)] >= 0;

        double st;
        if (arterial_phase) {
          // the whole lane-keeping motion scales with the planted multiplier
          st = steer_art_mult * (1.1 * steer_ou.next() +
                                 1.4 * std::sin(2 * kPi * t / 7.3 + lane_phase));
        } else if (in_zone) {
          steer_ou.next();
          st = plan.steer_extra[static_cast<std::size_t>(i)] * jitter_ou.next() + 3.0;
        } else {
          steer_ou.next();
          st = resid_steer_amp * jitter_ou.next();
        }
        steering[i] = st;

        const double dsteer = (st - prev_steer) / dt;
        prev_steer = st;
        eps[i] = 0.11 * st + 0.02 * dsteer + eps_ou.next();

        const double yw = 0.065 * st * v + yaw_ou.next();
        yaw[i] = yw;
        lat_acc[i] = v * yw * kPi / 180.0 + lat_ou.next();

        fwd[i] = (v - prev_v) / dt + fwd_ou.next();
        prev_v = v;

        speed[i] = std::max(0.0, v * 3.6 + 0.4 * speed_ou.next());

        // Pedal micro-corrections carry the planted multiplier on arterial
        // stretches; residential pedal work scales with the nuisance instead.
        const double pedal_amp =
            arterial_phase ? 1.1 * acc_art_mult : resid_pedal_amp;
        double ap = 6.0 + 1.1 * v + plan.accel_burst[static_cast<std::size_t>(i)] +
                    pedal_amp * pedal_ou.next();
        accel[i] = std::clamp(ap, 0.0, 100.0);

        brake[i] = std::max(
            0.0, plan.brake_plan[static_cast<std::size_t>(i)] +
                     std::min(0.004, std::abs(brake_ou.next())));

        fuel[i] = std::max(0.0, 0.08 + 0.018 * v + 0.06 * std::max(0.0, fwd[i]) +
                                    std::abs(fuel_ou.next()));

        const GeoPoint g = local_to_geo(plan.x[static_cast<std::size_t>(i)],
                                        plan.y[static_cast<std::size_t>(i)]);
        lat[i] = g.lat;
        lon[i] = g.lon;
      }

      session.channels[ChannelId::steering_angle] = std::move(steering);
      session.channels[ChannelId::eps_torque] = std::move(eps);
      session.channels[ChannelId::forward_accel] = std::move(fwd);
      session.channels[ChannelId::lateral_accel] = std::move(lat_acc);
      session.channels[ChannelId::yaw_rate] = std::move(yaw);
      session.channels[ChannelId::speed] = std::move(speed);
      session.channels[ChannelId::accelerator_position] = std::move(accel);
      session.channels[ChannelId::brake_pressure] = std::move(brake);
      session.channels[ChannelId::fuel_consumption] = std::move(fuel);
      session.lat = std::move(lat);
      session.lon = std::move(lon);

      out.cohort.sessions.push_back(derive_channels(session));
    }
  }

  nlohmann::ordered_json truth;
  truth["seed"] = config.seed;
  truth["couplings"] = nlohmann::json::array();
  for (const auto& c : config.couplings) {
    truth["couplings"].push_back({{"target", c.target},
                                  {"channel", std::string(channel_name(c.channel))},
                                  {"road_scope", std::string(road_scope_name(c.road_scope))},
                                  {"band_s", {c.band_lo_s, c.band_hi_s}},
                                  {"effect", c.effect}});
  }
  truth["drivers"] = truth_drivers;
  out.ground_truth = truth;
  return out;
}

void write_cohort(const GeneratedCohort& generated,
                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_route_map(generated.cohort.route, dir / "route_map.json");
  write_traits(generated.cohort.traits, dir / "traits.csv");
  for (const auto& session : generated.cohort.sessions) {
    // Persist only the measured channels; loaders re-derive the differences.
    DriveSession measured = session;
    for (ChannelId id : kDerivedChannels) measured.channels.erase(id);
    write_session(measured, dir / (session.session_id() + ".csv"));
  }
  std::ofstream truth(dir / "couplings.json");
  if (!truth) throw IoError("cannot write couplings.json in " + dir.string());
  truth << generated.ground_truth.dump(2) << "\n";
}

TraitTable permute_labels(const TraitTable& table, std::uint64_t seed) {
  if (table.driver_ids.empty()) throw ValidationError("empty trait table");
  if (seed == 0) return table;  // reserved identity permutation

  TraitTable out = table;
  const std::size_t n = table.driver_ids.size();
  const auto& targets = all_targets();
  for (std::size_t ti = 0; ti < targets.size(); ++ti) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::mt19937_64 rng(derive_seed(seed, 7000 + ti));
    std::shuffle(perm.begin(), perm.end(), rng);

    const std::string& target = targets[ti];
    for (std::size_t i = 0; i < n; ++i) {
      const TraitRow& src = table.rows.at(table.driver_ids[perm[i]]);
      TraitRow& dst = out.rows.at(out.driver_ids[i]);
      if (target == "tmt_a") dst.tmt_a = src.tmt_a;
      else if (target == "tmt_b") dst.tmt_b = src.tmt_b;
      else if (target == "maze") dst.maze = src.maze;
      else if (target == "ufov") dst.ufov = src.ufov;
      else if (target.rfind("dsq_", 0) == 0) {
        const int k = std::atoi(target.c_str() + 4) - 1;
        dst.dsq[static_cast<std::size_t>(k)] = src.dsq[static_cast<std::size_t>(k)];
      } else {
        const int k = std::atoi(target.c_str() + 4) - 1;
        dst.wsq[static_cast<std::size_t>(k)] = src.wsq[static_cast<std::size_t>(k)];
      }
    }
  }
  return out;
}

}  // namespace drivetraits
