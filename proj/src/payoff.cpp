#include "mergegame/payoff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <utility>

namespace mergegame {

namespace {

// Base function before the peak shift is applied.
double smht_base(double u, double c, double d) {
    // Normalize by the dominant denominator exponent so that for c, d >= 1
    // every exponential stays in (0, 1] and the ratio never overflows.
    const double m = std::max(c * u, -d * u);
    const double num = std::exp(u - m) - std::exp(-u - m);
    const double den = std::exp(c * u - m) + std::exp(-d * u - m);
    return num / den;
}

// Sign-stable evaluation of the stationarity condition d/du smht_base = 0,
// expressed as a four-term exponential sum. Positive left of the maximum,
// negative right of it.
double stationarity(double u, double c, double d) {
    const double e1 = (1.0 + c) * u;
    const double e2 = (c - 1.0) * u;
    const double e3 = (1.0 - d) * u;
    const double e4 = -(1.0 + d) * u;
    const double m = std::max(std::max(e1, e2), std::max(e3, e4));
    return (1.0 - c) * std::exp(e1 - m) + (1.0 + c) * std::exp(e2 - m) +
           (1.0 + d) * std::exp(e3 - m) + (1.0 - d) * std::exp(e4 - m);
}

double compute_shift(double c, double d) {
    if (!(std::isfinite(c) && std::isfinite(d)) || !(c > 0.0) || !(d > 0.0)) {
        throw std::invalid_argument("usmht curvatures must be positive and finite");
    }
    if (c <= 1.0) {
        throw NoInteriorMaximumError(
            "base function has no interior maximum for c <= 1 (monotone, e.g. tanh at c=d=1)");
    }
    // The maximum lies at positive u; bracket it by expanding until the
    // stationarity expression changes sign, then bisect.
    double lo = 0.0;
    double hi = 1.0;
    while (stationarity(hi, c, d) > 0.0) {
        hi *= 2.0;
        if (hi > 1e4) {
            throw NoInteriorMaximumError("failed to bracket an interior maximum");
        }
    }
    for (int i = 0; i < 200 && (hi - lo) > 1e-14; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (stationarity(mid, c, d) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Shift values are cached; calibration sweeps evaluate millions of payoffs
// with few distinct curvature pairs. Keys are quantized at 1e-9.
using ShiftKey = std::pair<long long, long long>;

ShiftKey shift_key(double c, double d) {
    return {std::llround(c * 1e9), std::llround(d * 1e9)};
}

std::shared_mutex g_shift_mutex;
std::map<ShiftKey, double> g_shift_cache;

}  // namespace

void UsmhtParams::validate() const {
    if (!(std::isfinite(c) && c > 0.0) || !(std::isfinite(d) && d > 0.0)) {
        throw std::invalid_argument("usmht curvatures must be positive and finite");
    }
    if (r != 1 && r != -1) {
        throw std::invalid_argument("usmht direction must be +1 or -1");
    }
}

double smht_shift(double c, double d) {
    const ShiftKey key = shift_key(c, d);
    {
        std::shared_lock lock(g_shift_mutex);
        auto it = g_shift_cache.find(key);
        if (it != g_shift_cache.end()) return it->second;
    }
    const double value = compute_shift(c, d);
    std::unique_lock lock(g_shift_mutex);
    return g_shift_cache.emplace(key, value).first->second;
}

double usmht(double x, double c, double d, int r) {
    return smht_base(static_cast<double>(r) * x + smht_shift(c, d), c, d);
}

double usmht(double x, const UsmhtParams& p) {
    p.validate();
    return usmht(x, p.c, p.d, p.r);
}

double usmht_max(double c, double d) {
    return smht_base(smht_shift(c, d), c, d);
}

double pth(double dx, double dv, double v_ref, double tau) {
    return (dx + tau * dv) / std::max(v_ref, kMinSpeed);
}

double lat_scale(double dy, double phi4) {
    return usmht(dy, phi4, 1000.0, +1) + 1.0;
}

double ramp_scale(double dx_ramp, double v_ma, double phi5) {
    const double time_to_ramp_end = std::max(dx_ramp, 0.0) / std::max(v_ma, kMinSpeed);
    return usmht(time_to_ramp_end, phi5, 1000.0, +1) + 1.0;
}

double scaled_pth(double raw_pth, double s_lat, double s_ramp) {
    return raw_pth / (s_lat * s_ramp);
}

namespace {

// Shift-resolved evaluator so one payoff assembly does each cache lookup once.
struct Shaper {
    double shift;
    double c;
    double d;

    Shaper(double c_, double d_) : shift(smht_shift(c_, d_)), c(c_), d(d_) {}
    double operator()(double x, int r) const {
        return smht_base(static_cast<double>(r) * x + shift, c, d);
    }
};

struct GameGeometry {
    double s_lat;
    double s_ramp;
    double psi_lag_ma;
    double psi_lag_lead;  // +inf when there is no lead
    double psi_ma_lead;   // +inf when there is no lead
    double psi_ma_lag;
    bool has_lead;
};

// All scaled headways share the scaling pair (s_lat, s_ramp) derived from the
// merger's lateral distance to the lag and its distance to the ramp end.
// dy_override substitutes the lateral distance (conditioned payoff rows).
GameGeometry game_geometry(const WorldState& world, const ModelParams& params,
                           double dy_override = -1.0) {
    GameGeometry g{};
    const RelativeState lag_ma = relative_state(world, Actor::lag, Actor::ma);
    const double dy = dy_override >= 0.0 ? dy_override : lag_ma.dy;
    const double dx_ramp = std::max(world.ramp.ramp_end_x - world.ma.x, 0.0);
    g.s_lat = lat_scale(dy, params.phi_at(4));
    g.s_ramp = ramp_scale(dx_ramp, world.ma.v, params.phi_at(5));
    const double denom = g.s_lat * g.s_ramp;

    g.psi_lag_ma = pth(lag_ma.dx, lag_ma.dv, world.lag.v, params.tau) / denom;
    g.has_lead = world.lead.has_value();
    if (g.has_lead) {
        const RelativeState lag_lead = relative_state(world, Actor::lag, Actor::lead);
        const RelativeState ma_lead = relative_state(world, Actor::ma, Actor::lead);
        g.psi_lag_lead = pth(lag_lead.dx, lag_lead.dv, world.lag.v, params.tau) / denom;
        g.psi_ma_lead = pth(ma_lead.dx, ma_lead.dv, world.ma.v, params.tau) / denom;
    } else {
        g.psi_lag_lead = std::numeric_limits<double>::infinity();
        g.psi_ma_lead = std::numeric_limits<double>::infinity();
    }
    const RelativeState ma_lag = relative_state(world, Actor::ma, Actor::lag);
    g.psi_ma_lag = pth(ma_lag.dx, ma_lag.dv, world.ma.v, params.tau) / denom;
    return g;
}

LagPayoffs lag_payoffs_from(const GameGeometry& g, const ModelParams& params) {
    LagPayoffs out;
    const Shaper yb(params.phi_at(1), 1.0);
    const Shaper ya(params.phi_at(2), 1.0);
    const Shaper lead_dissuasion(params.phi_at(3), 1.0);
    out.q_yb = yb(g.psi_lag_ma, +1);
    // A missing lead behaves like an infinitely distant one: the dissuasion
    // term sits on its decayed-to-zero side.
    const double lead_term = g.has_lead ? lead_dissuasion(g.psi_lag_lead, +1) : 0.0;
    out.q_ya = ya(g.psi_lag_ma, -1) - lead_term;
    out.q_dn = params.phi_at(6);
    out.q_bk = Shaper(params.phi_at(7), 1.0)(g.psi_lag_ma, +1);
    return out;
}

MaPayoffs ma_payoffs_from(const GameGeometry& g, const WorldState& world,
                          const ModelParams& params) {
    MaPayoffs out;
    const double lead_term =
        g.has_lead ? Shaper(params.phi_at(1), 1.0)(g.psi_ma_lead, +1) : 0.0;
    const double lag_term = Shaper(params.phi_at(8), 1.0)(g.psi_ma_lag, -1);
    out.p_keep = 0.5 * (lead_term + lag_term);
    const double dx_ramp = std::max(world.ramp.ramp_end_x - world.ma.x, kMinRampDistance);
    out.p_change = -out.p_keep + (params.s0 + world.ma.v * params.T) / dx_ramp;
    return out;
}

}  // namespace

LagPayoffs lag_payoffs(const WorldState& world, const ModelParams& params) {
    return lag_payoffs_from(game_geometry(world, params), params);
}

MaPayoffs ma_payoffs(const WorldState& world, const ModelParams& params) {
    return ma_payoffs_from(game_geometry(world, params), world, params);
}

PayoffMatrix payoff_matrix(const WorldState& world, const ModelParams& params,
                           ConditioningMode mode) {
    PayoffMatrix m;
    const GameGeometry g = game_geometry(world, params);
    const LagPayoffs current = lag_payoffs_from(g, params);
    const MaPayoffs ma = ma_payoffs_from(g, world, params);

    const int change = static_cast<int>(MaAction::change_lanes);
    const int keep = static_cast<int>(MaAction::keep_straight);
    m.q[change] = current.as_array();
    if (mode == ConditioningMode::literal) {
        m.q[keep] = current.as_array();
    } else {
        // Merger assumed to hold its lane: interactive payoffs see the full
        // lane offset laterally; the constant do-nothing reward is unchanged.
        const GameGeometry held =
            game_geometry(world, params, world.ramp.lane_offset);
        m.q[keep] = lag_payoffs_from(held, params).as_array();
        m.q[keep][static_cast<int>(LagAction::do_nothing)] = current.q_dn;
    }
    for (int j = 0; j < kNumLagActions; ++j) {
        m.p[change][j] = ma.p_change;
        m.p[keep][j] = ma.p_keep;
    }
    return m;
}

}  // namespace mergegame
