#include "mergegame/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mergegame {

namespace {

// Extra speed over the merger a lag aims for when advancing relative to it.
constexpr double kAdvanceMargin = 2.0;  // [m/s]
// Cap on the desired-speed increase during yield-ahead/block maneuvers.
constexpr double kMaxSpeedBump = 5.0;  // [m/s]

double speed_bump(const WorldState& world) {
    const double needed = world.ma.v + kAdvanceMargin - world.lag.v;
    return std::min(kMaxSpeedBump, std::max(0.0, needed));
}

IdmParams advance_params(const IdmParams& base, const WorldState& world) {
    IdmParams p = base;
    p.v0 = base.v0 + speed_bump(world);
    p.T = 0.5 * base.T;
    p.s0 = 0.5 * base.s0;
    return p;
}

// Merger-to-leader distance, zero when there is no leader ahead of the merger.
double merger_lead_distance(const WorldState& world) {
    if (!world.lead) return 0.0;
    return std::max(world.lead->x - world.ma.x, 0.0);
}

}  // namespace

IdmParams::IdmParams(double v0_, double T_, double s0_, double a_max_, double b_, double delta_)
    : v0(v0_), T(T_), s0(s0_), a_max(a_max_), b(b_), delta(delta_) {
    validate();
}

void IdmParams::validate() const {
    const double values[] = {v0, T, s0, a_max, b, delta};
    const char* names[] = {"v0", "T", "s0", "a_max", "b", "delta"};
    for (int i = 0; i < 6; ++i) {
        if (!std::isfinite(values[i]) || !(values[i] > 0.0)) {
            throw std::invalid_argument(std::string("IdmParams.") + names[i] +
                                        " must be positive and finite");
        }
    }
}

double idm_accel_toward_gap(double v, double gap, double approach_speed, const IdmParams& p,
                            double static_gap) {
    if (!(gap > 0.0)) {
        throw CollisionError("nonpositive gap to leader");
    }
    const double s_star = static_gap + v * approach_speed / (2.0 * std::sqrt(p.a_max * p.b));
    const double interaction = std::isinf(gap) ? 0.0 : (s_star / gap) * (s_star / gap);
    const double a = p.a_max * (1.0 - std::pow(v / p.v0, p.delta) - interaction);
    return std::clamp(a, -kEmergencyDecel, p.a_max);
}

double idm_accel(double v, double gap, double approach_speed, const IdmParams& p) {
    return idm_accel_toward_gap(v, gap, approach_speed, p, p.s0 + v * p.T);
}

ExecutionState behavior_overrides(LagAction decision, const WorldState& world,
                                  const ExecutionState& exec) {
    ExecutionState next = exec;
    next.decision = decision;
    switch (decision) {
        case LagAction::do_nothing:
            // Adjusted parameters from a prior maneuver stay in force.
            return next;
        case LagAction::yield_behind:
            next.active = exec.base;
            next.target_gap_override.reset();
            return next;
        case LagAction::yield_ahead: {
            // Anchor the shortened gap when the maneuver starts; re-deriving
            // it from the shrinking gap every tick would chase zero.
            if (exec.decision == LagAction::yield_ahead) return next;
            next.active = advance_params(exec.base, world);
            if (world.lead) {
                const double gap_lead = world.lead->x - world.lag.x;
                const double reduction = 0.5 * merger_lead_distance(world);
                next.target_gap_override = std::max(next.active.s0, gap_lead - reduction);
            } else {
                next.target_gap_override.reset();
            }
            return next;
        }
        case LagAction::block: {
            next.active = advance_params(exec.base, world);
            if (world.lead) {
                // Tracks the live merger-to-leader distance so the lag sits
                // beside the merger as both advance.
                next.target_gap_override =
                    std::max(next.active.s0, merger_lead_distance(world));
            } else {
                next.target_gap_override.reset();
            }
            return next;
        }
    }
    throw std::logic_error("unreachable lag action");
}

double mr_idm_accel(const WorldState& world, const ExecutionState& exec) {
    const VehicleState& lag = world.lag;
    const double inf = std::numeric_limits<double>::infinity();

    double a_lead;
    if (world.lead) {
        const double gap = world.lead->x - lag.x;
        const double static_gap = exec.target_gap_override
                                      ? *exec.target_gap_override
                                      : exec.active.s0 + lag.v * exec.active.T;
        a_lead = idm_accel_toward_gap(lag.v, gap, lag.v - world.lead->v, exec.active, static_gap);
    } else {
        a_lead = idm_accel(lag.v, inf, 0.0, exec.active);
    }

    if (exec.decision == LagAction::yield_behind) {
        const double gap_ma = world.ma.x - lag.x;
        // The merger only binds as a virtual leader while it projects ahead.
        if (gap_ma > 0.0) {
            const double a_virtual = idm_accel(lag.v, gap_ma, lag.v - world.ma.v, exec.active);
            return std::min(a_lead, a_virtual);
        }
    }
    return a_lead;
}

VehicleState step_vehicle(const VehicleState& state, double a, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    VehicleState next = state;
    next.v = std::max(0.0, state.v + a * dt);
    next.x = state.x + next.v * dt;
    next.a = a;
    return next;
}

}  // namespace mergegame
