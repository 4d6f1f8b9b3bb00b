#pragma once

// Ego car A overtaking truck T on a straight two-lane road while car B comes
// head-on in A's lane. A aborts (brake, steer back behind T) once it has
// received enough in-order V2V packets from B.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mrsim/channel.hpp"
#include "mrsim/kinematics.hpp"
#include "mrsim/transport.hpp"

namespace mrsim::overtake {

struct Config {
  double lane_width = 3.5;
  double v_ego = 28.0;
  double v_oncoming = 28.0;
  double v_truck = 22.0;
  double a_max = 10.0;
  double delta_abort_deg = 10.0;
  double dt = 0.05;
  int horizon = 160;
  int interval_len = 16;
  int rtt = 8;
  int beta = 1;
  int msg_req = 25;
  double success_first = 0.1;
  double success_last = 0.9;
  ErasureProfile::Spacing spacing = ErasureProfile::Spacing::kLinearSuccess;

  double car_length = 4.5;
  double car_width = 1.9;
  double truck_length = 12.0;
  double truck_width = 2.6;
  double wheelbase_ratio = 0.6;

  double gap_to_truck = 35.0;     // A's front bumper to T's rear bumper at slot 0
  double oncoming_margin = 30.0;  // B starts (v_A + v_B) * T * dt - margin ahead of A
  bool oncoming_present = true;

  double steer_ramp_s = 0.5;
  double switch_offset = 0.2;      // mirror when y falls to the lane divider minus this
  double speed_floor_drop = 2.0;   // brake to v_truck - this
  double settle_tol_y = 0.3;
  double settle_tol_theta_deg = 2.0;
  double rollout_cap_s = 4.0;

  std::optional<int> deadline_override = 110;
  transport::Protocol protocol = transport::Protocol::kAcRlnc;
  double eps_hat_init = 0.5;
  std::size_t body_len = 32;
  int runs = 1000;
  std::uint64_t seed = 1;

  void validate() const;
  ErasureProfile profile() const;
};

enum class Outcome { kAbortedSafe, kCollision, kPassedUnsafe };
std::string_view outcome_name(Outcome o) noexcept;

struct Vehicles {
  VehicleState ego, truck, oncoming;
};

/// Positions at slot `t` with no abort.
Vehicles nominal(const Config& cfg, int t);

struct Rollout {
  bool safe = false;
  bool completed = false;
  int end_slot = 0;           // last slot simulated
  std::optional<int> collision_slot;
  std::vector<VehicleState> ego;  // from the abort slot onward
};

/// Abort beginning at `start` (A brakes and steers from slot start onward);
/// checks boxes every slot until completion or the cap. With `through` set the
/// simulation continues past completion to that slot.
Rollout rollout(const Config& cfg, int start, std::optional<int> through = std::nullopt);

struct DeadlineScan {
  int deadline = -1;               // latest safe start, -1 if none
  std::vector<bool> safe;          // per candidate slot 0..horizon-1
  bool monotone = true;            // safe(s) implies safe(s-1) over the scan
};

DeadlineScan compute_deadline(const Config& cfg);

struct RunOutcome {
  int run_id = 0;
  std::optional<int> t25;
  std::optional<int> abort_slot;
  Outcome outcome = Outcome::kCollision;
};

/// Outcome of the whole episode if A starts aborting at `abort_slot` (or never).
Outcome classify(const Config& cfg, std::optional<int> abort_slot);

/// One Monte-Carlo run. Channel erasures depend on (seed, run_id) only, so the
/// two protocols see the same realization for the same run.
RunOutcome run_once(const Config& cfg, int run_id);

struct Reliability {
  std::vector<RunOutcome> runs;
  std::vector<double> cdf;  // Pr[T25 <= t], t in [0, horizon)
  int deadline = 0;
  double at_deadline = 0.0;
};

Reliability reliability_latency(const Config& cfg, int jobs);

}  // namespace mrsim::overtake
