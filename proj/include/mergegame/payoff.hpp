#pragma once

#include <array>
#include <stdexcept>

#include "mergegame/core.hpp"

namespace mergegame {

// Speed floor used wherever a payoff divides by a vehicle speed.
inline constexpr double kMinSpeed = 0.1;  // [m/s]
// Floor on the distance-to-ramp-end denominator of the merge incentive.
inline constexpr double kMinRampDistance = 0.5;  // [m]

struct NoInteriorMaximumError : std::domain_error {
    explicit NoInteriorMaximumError(const std::string& what) : std::domain_error(what) {}
};

struct UsmhtParams {
    double c = 2.0;  // curvature of the decaying side
    double d = 1.0;  // curvature of the saturating side
    int r = +1;      // directionality, +1 or -1

    void validate() const;
};

// Location of the interior maximum of u -> (e^u - e^-u) / (e^{cu} + e^{-du}).
// The result depends only on (c, d) and is cached. Throws
// NoInteriorMaximumError when the function is monotone (c <= 1).
double smht_shift(double c, double d);

// Bounded, peak-shifted payoff shaping function: evaluates the base function
// above at u = r*x + smht_shift(c, d), so the peak sits at x = 0. Computed in
// an exponent-normalized form that stays finite for |x| up to 1e6 and beyond.
double usmht(double x, double c, double d, int r);
double usmht(double x, const UsmhtParams& p);

// Peak value usmht(0, c, d, +1).
double usmht_max(double c, double d);

// Predicted time headway after horizon tau under constant speeds.
// v_ref is floored at kMinSpeed so standstill stays well defined.
double pth(double dx, double dv, double v_ref, double tau);

// Lateral-proximity scaling: largest when the merger is laterally on top of
// the lag, decaying to 1 with distance. Strictly positive.
double lat_scale(double dy, double phi4);

// Ramp-urgency scaling: largest when the merger reaches the ramp end (time
// to ramp end -> 0), decaying to 1 far upstream. Strictly positive.
double ramp_scale(double dx_ramp, double v_ma, double phi5);

// Scaled predictive time headway Psi.
double scaled_pth(double raw_pth, double s_lat, double s_ramp);

// Own-action payoffs of the lag vehicle.
struct LagPayoffs {
    double q_yb = 0.0;
    double q_ya = 0.0;
    double q_dn = 0.0;
    double q_bk = 0.0;

    // In LagAction index order (YB, YA, Bk, DN).
    std::array<double, kNumLagActions> as_array() const { return {q_yb, q_ya, q_bk, q_dn}; }
};

// Own-action payoffs of the merging actor.
struct MaPayoffs {
    double p_keep = 0.0;
    double p_change = 0.0;
};

// Normal-form bimatrix of the merge game. Rows follow MaAction order
// (ChangeLanes, KeepStraight); columns follow LagAction order
// (YieldBehind, YieldAhead, Block, DoNothing). p holds the merging actor's
// payoffs, q the lag's.
struct PayoffMatrix {
    std::array<std::array<double, kNumLagActions>, kNumMaActions> p{};
    std::array<std::array<double, kNumLagActions>, kNumMaActions> q{};
};

// How cell payoffs depend on the opponent's action. literal fills each
// own-action payoff across the whole row/column; conditioned re-evaluates the
// lag's interactive payoffs under the assumption the merger stays in its lane
// for the KeepStraight row.
enum class ConditioningMode { literal, conditioned };

LagPayoffs lag_payoffs(const WorldState& world, const ModelParams& params);
MaPayoffs ma_payoffs(const WorldState& world, const ModelParams& params);
PayoffMatrix payoff_matrix(const WorldState& world, const ModelParams& params,
                           ConditioningMode mode = ConditioningMode::literal);

}  // namespace mergegame
