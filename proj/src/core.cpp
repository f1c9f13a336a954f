#include "mergegame/core.hpp"

#include <cmath>
#include <utility>

namespace mergegame {

namespace {

void require_finite(double value, const char* name) {
    if (!std::isfinite(value)) {
        throw std::invalid_argument(std::string(name) + " must be finite");
    }
}

}  // namespace

std::string to_string(Lane lane) {
    return lane == Lane::ramp ? "ramp" : "main";
}

std::string to_string(LagAction a) {
    switch (a) {
        case LagAction::yield_behind: return "yield_behind";
        case LagAction::yield_ahead: return "yield_ahead";
        case LagAction::block: return "block";
        case LagAction::do_nothing: return "do_nothing";
    }
    throw std::logic_error("unreachable lag action");
}

std::string to_string(MaAction a) {
    return a == MaAction::change_lanes ? "change_lanes" : "keep_straight";
}

Lane lane_from_string(const std::string& s) {
    if (s == "ramp") return Lane::ramp;
    if (s == "main") return Lane::main;
    throw std::invalid_argument("unknown lane: " + s);
}

LagAction lag_action_from_string(const std::string& s) {
    if (s == "yield_behind") return LagAction::yield_behind;
    if (s == "yield_ahead") return LagAction::yield_ahead;
    if (s == "block") return LagAction::block;
    if (s == "do_nothing") return LagAction::do_nothing;
    throw std::invalid_argument("unknown lag action: " + s);
}

MaAction ma_action_from_string(const std::string& s) {
    if (s == "change_lanes") return MaAction::change_lanes;
    if (s == "keep_straight") return MaAction::keep_straight;
    throw std::invalid_argument("unknown ma action: " + s);
}

VehicleState::VehicleState(std::string id_, double x_, double y_, double v_, double a_, Lane lane_)
    : id(std::move(id_)), x(x_), y(y_), v(v_), a(a_), lane(lane_) {
    require_finite(x, "x");
    require_finite(y, "y");
    require_finite(v, "v");
    require_finite(a, "a");
    if (v < 0.0) {
        throw std::invalid_argument("vehicle speed must be nonnegative");
    }
}

RampGeometry::RampGeometry(double ramp_end_x_, double merge_zone_start_x_, double lane_offset_)
    : ramp_end_x(ramp_end_x_), merge_zone_start_x(merge_zone_start_x_), lane_offset(lane_offset_) {
    require_finite(ramp_end_x, "ramp_end_x");
    require_finite(merge_zone_start_x, "merge_zone_start_x");
    require_finite(lane_offset, "lane_offset");
    if (!(merge_zone_start_x < ramp_end_x)) {
        throw std::invalid_argument("merge_zone_start_x must precede ramp_end_x");
    }
    if (!(lane_offset > 0.0)) {
        throw std::invalid_argument("lane_offset must be positive");
    }
}

WorldState::WorldState(double t_, VehicleState lag_, VehicleState ma_,
                       std::optional<VehicleState> lead_, RampGeometry ramp_)
    : t(t_), lag(std::move(lag_)), ma(std::move(ma_)), lead(std::move(lead_)),
      ramp(std::move(ramp_)) {
    require_finite(t, "t");
    if (lag.lane != Lane::main) {
        throw std::invalid_argument("lag vehicle must be on the main lane");
    }
    if (lead && !(lead->x > lag.x)) {
        throw std::invalid_argument("lead vehicle must be ahead of the lag");
    }
}

ModelParams::ModelParams(const std::array<double, 8>& phi_, double tau_, double beta_,
                         double t_window_, double sigma_, double s0_, double T_)
    : phi(phi_), tau(tau_), beta(beta_), t_window(t_window_), sigma(sigma_), s0(s0_), T(T_) {
    validate();
}

void ModelParams::validate() const {
    for (int i = 1; i <= 8; ++i) {
        require_finite(phi_at(i), "phi");
        if (i == 6) continue;
        if (!(phi_at(i) > 1.0)) {
            throw std::invalid_argument("phi_" + std::to_string(i) +
                                        " must exceed 1 (curvature with a finite peak)");
        }
    }
    if (!(phi_at(6) > -1.0 && phi_at(6) <= 1.0)) {
        throw std::invalid_argument("phi_6 must lie in (-1, 1]");
    }
    require_finite(tau, "tau");
    require_finite(beta, "beta");
    require_finite(t_window, "t_window");
    require_finite(sigma, "sigma");
    require_finite(s0, "s0");
    require_finite(T, "T");
    if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    if (t_window < 0.0) throw std::invalid_argument("t_window must be nonnegative");
    if (sigma < 0.0) throw std::invalid_argument("sigma must be nonnegative");
    if (s0 < 0.0) throw std::invalid_argument("s0 must be nonnegative");
    if (T < 0.0) throw std::invalid_argument("T must be nonnegative");
}

const VehicleState& actor_state(const WorldState& world, Actor role) {
    switch (role) {
        case Actor::lag: return world.lag;
        case Actor::ma: return world.ma;
        case Actor::lead:
            if (!world.lead) {
                throw MissingActorError("world has no lead vehicle");
            }
            return *world.lead;
    }
    throw std::logic_error("unreachable actor role");
}

RelativeState relative_state(const WorldState& world, Actor from, Actor to) {
    const VehicleState& a = actor_state(world, from);
    const VehicleState& b = actor_state(world, to);
    return RelativeState{b.x - a.x, b.v - a.v, std::abs(b.y - a.y)};
}

}  // namespace mergegame
