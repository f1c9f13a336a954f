#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace mergegame {

enum class Lane { ramp, main };

// Discrete longitudinal strategies of the lag vehicle. Index order matches
// payoff-matrix columns and probability vectors throughout.
enum class LagAction { yield_behind = 0, yield_ahead = 1, block = 2, do_nothing = 3 };

// Strategies of the merging actor. Index order matches payoff-matrix rows.
enum class MaAction { change_lanes = 0, keep_straight = 1 };

inline constexpr int kNumLagActions = 4;
inline constexpr int kNumMaActions = 2;

std::string to_string(Lane lane);
std::string to_string(LagAction a);
std::string to_string(MaAction a);
Lane lane_from_string(const std::string& s);
LagAction lag_action_from_string(const std::string& s);
MaAction ma_action_from_string(const std::string& s);

// Role of a vehicle inside one game instance.
enum class Actor { lag, ma, lead };

struct MissingActorError : std::runtime_error {
    explicit MissingActorError(const std::string& what) : std::runtime_error(what) {}
};

// Longitudinal/lateral kinematic state of one vehicle. Positions share a
// single along-road axis; lanes differ only by lateral offset.
struct VehicleState {
    std::string id;
    double x = 0.0;   // longitudinal position [m]
    double y = 0.0;   // lateral position [m], positive toward main-lane center
    double v = 0.0;   // speed [m/s]
    double a = 0.0;   // acceleration [m/s^2]
    Lane lane = Lane::main;

    VehicleState() = default;
    VehicleState(std::string id, double x, double y, double v, double a, Lane lane);
};

struct RampGeometry {
    double ramp_end_x = 0.0;          // where the ramp physically ends [m]
    double merge_zone_start_x = 0.0;  // first position where merging is possible [m]
    double lane_offset = 0.0;         // lateral distance ramp center -> main center [m]

    RampGeometry() = default;
    RampGeometry(double ramp_end_x, double merge_zone_start_x, double lane_offset);
};

// One instant of the merge interaction: the lag vehicle on the main lane,
// the merging actor, and optionally the lag's main-lane leader.
struct WorldState {
    double t = 0.0;
    VehicleState lag;
    VehicleState ma;
    std::optional<VehicleState> lead;
    RampGeometry ramp;

    WorldState() = default;
    WorldState(double t, VehicleState lag, VehicleState ma, std::optional<VehicleState> lead,
               RampGeometry ramp);
};

// The nine calibrated parameters {phi_1..phi_8, tau} plus runtime knobs.
// phi indices are 1-based in the accessors to match their conventional names.
struct ModelParams {
    std::array<double, 8> phi{3.0, 3.0, 3.0, 3.0, 3.0, 0.3, 3.0, 3.0};
    double tau = 2.0;       // prediction horizon [s]
    double beta = 0.1;      // bounded-rationality coefficient (payoff units)
    double t_window = 2.0;  // decision window mean [s]
    double sigma = 0.0;     // decision window noise std dev [s]
    double s0 = 2.0;        // standstill distance in the merge-incentive term [m]
    double T = 1.5;         // time headway in the merge-incentive term [s]

    ModelParams() = default;
    ModelParams(const std::array<double, 8>& phi, double tau, double beta, double t_window,
                double sigma, double s0, double T);

    double phi_at(int index_1_based) const { return phi.at(index_1_based - 1); }

    // Throws std::invalid_argument when any value is outside its admissible
    // range (curvature phis must exceed 1, phi_6 lies in (-1, 1], ...).
    void validate() const;
};

struct RelativeState {
    double dx;  // x_to - x_from [m]
    double dv;  // v_to - v_from [m/s]
    double dy;  // |y_to - y_from| [m]
};

const VehicleState& actor_state(const WorldState& world, Actor role);

// Signed longitudinal gap/closing speed and absolute lateral distance between
// two actors. Throws MissingActorError when a role refers to an absent lead.
RelativeState relative_state(const WorldState& world, Actor from, Actor to);

}  // namespace mergegame
