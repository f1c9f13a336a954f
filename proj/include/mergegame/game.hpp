#pragma once

#include <array>
#include <optional>

#include "mergegame/core.hpp"
#include "mergegame/payoff.hpp"
#include "mergegame/random.hpp"

namespace mergegame {

using MaDistribution = std::array<double, kNumMaActions>;
using LagDistribution = std::array<double, kNumLagActions>;

// A mixed-strategy profile: row player is the merging actor, column player
// the lag. Each vector is nonnegative and sums to one.
struct MixedProfile {
    MaDistribution row_mix{};
    LagDistribution col_mix{};
};

// Outcome of one decision point. The lag action stays in force until
// hold_until; lag_probs is the bounded-rationality distribution it was
// sampled from.
struct Decision {
    LagAction lag_action = LagAction::do_nothing;
    LagDistribution lag_probs{0.0, 0.0, 0.0, 1.0};
    MaAction ma_action = MaAction::keep_straight;
    double hold_until = 0.0;
};

// Mixed Nash equilibrium of the 2x4 bimatrix game by support enumeration.
// Among multiple equilibria, returns the one maximizing the column player's
// expected payoff, then the row player's, then the lexicographically
// smallest support pair. Singular indifference systems are skipped; when no
// support yields a clean equilibrium the best approximate profile found is
// returned (a pure profile always exists as a candidate).
MixedProfile nash_mixed(const PayoffMatrix& game);

// Expected payoff of each lag action under the given merger mixture.
LagDistribution expected_lag_payoffs(const PayoffMatrix& game, const MaDistribution& row_mix);

// Quantal-response update: softmax of expected payoffs at temperature beta.
// Low beta concentrates on the argmax; large beta tends to uniform.
LagDistribution qre_update(const LagDistribution& expected, double beta);

// Duration the next decision is held: max(0, t_window + N(0, sigma^2)).
// Consumes no draws when sigma == 0.
double decision_window(const ModelParams& params, RandomStream& rng);

// One decision step for a lag actor. Returns prev unchanged while inside its
// hold window; otherwise solves the game, applies the quantal-response
// update, samples both actions, and schedules the next re-decision.
Decision decide(const WorldState& world, const ModelParams& params,
                const std::optional<Decision>& prev, RandomStream& rng,
                ConditioningMode mode = ConditioningMode::literal);

}  // namespace mergegame
