#pragma once

#include <optional>
#include <stdexcept>

#include "mergegame/core.hpp"

namespace mergegame {

// Hard deceleration limit applied to every commanded acceleration [m/s^2].
inline constexpr double kEmergencyDecel = 9.0;

struct CollisionError : std::runtime_error {
    explicit CollisionError(const std::string& what) : std::runtime_error(what) {}
};

// Car-following parameter set.
struct IdmParams {
    double v0 = 30.0;    // desired speed [m/s]
    double T = 1.5;      // safe time headway [s]
    double s0 = 2.0;     // standstill distance [m]
    double a_max = 1.5;  // maximum acceleration [m/s^2]
    double b = 2.0;      // comfortable deceleration [m/s^2]
    double delta = 4.0;  // acceleration exponent

    IdmParams() = default;
    IdmParams(double v0, double T, double s0, double a_max, double b, double delta = 4.0);
    void validate() const;
};

// Behavior-execution state of one lag vehicle. base holds the driver's
// nominal parameters; active is what the current decision executes with and
// survives across do-nothing phases.
struct ExecutionState {
    IdmParams base;
    IdmParams active;
    LagAction decision = LagAction::do_nothing;
    // Desired spatial gap to the main-lane leader [m], replacing the
    // s0 + v*T static spacing while a yield-ahead or block maneuver runs.
    std::optional<double> target_gap_override;

    ExecutionState() = default;
    explicit ExecutionState(const IdmParams& params) : base(params), active(params) {}
};

// Standard IDM acceleration toward a leader at distance gap closing at
// approach_speed = v - v_lead (gap = +inf for a free road). The result is
// clamped to [-kEmergencyDecel, a_max]. Throws CollisionError for gap <= 0.
double idm_accel(double v, double gap, double approach_speed, const IdmParams& p);

// IDM with the static desired spacing s0 + v*T replaced by static_gap; the
// dynamic approach-damping term is kept.
double idm_accel_toward_gap(double v, double gap, double approach_speed, const IdmParams& p,
                            double static_gap);

// Translates a discrete decision into execution parameters:
//   YieldBehind  restores base parameters; the merger is handled as a
//                virtual leader inside mr_idm_accel.
//   YieldAhead   targets a leader gap shortened by half the merger-to-leader
//                distance (anchored when the maneuver starts), raises the
//                desired speed by at most 5 m/s and halves T and s0.
//   Block        same mechanism, but the target gap tracks the current
//                merger-to-leader distance, holding the lag beside the merger.
//   DoNothing    keeps whatever the previous behavior left in place.
ExecutionState behavior_overrides(LagAction decision, const WorldState& world,
                                  const ExecutionState& exec);

// Acceleration executing the current decision: follows the (possibly
// gap-overridden) main-lane leader, and under YieldBehind additionally treats
// the merger as a longitudinally projected virtual leader, taking the minimum.
double mr_idm_accel(const WorldState& world, const ExecutionState& exec);

// Semi-implicit Euler step; speed clamps at zero (no reverse motion).
VehicleState step_vehicle(const VehicleState& state, double a, double dt);

}  // namespace mergegame
