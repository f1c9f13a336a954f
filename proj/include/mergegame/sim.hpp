#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mergegame/core.hpp"
#include "mergegame/dynamics.hpp"
#include "mergegame/game.hpp"

namespace mergegame {

// Piecewise-constant acceleration schedule for a scripted merger. Each entry
// (t, a) applies from t until the next entry; before the first entry the
// acceleration is zero. lane_change_t, when set, starts the kinematic lane
// change at that time.
struct ScriptedProfile {
    std::vector<std::pair<double, double>> accel;
    std::optional<double> lane_change_t;

    double accel_at(double t) const;
};

enum class MaKind { scripted, game_driven };

struct MaMode {
    MaKind kind = MaKind::scripted;
    ScriptedProfile profile;
};

struct VehicleSpec {
    VehicleState state;
    IdmParams idm;
    ModelParams model;
};

struct ScenarioConfig {
    RampGeometry ramp;
    std::vector<VehicleSpec> vehicles;  // exactly one ramp vehicle (the merger)
    MaMode ma_mode;
    double dt_dyn = 0.01;
    double dt_decision = 0.1;
    double duration = 10.0;
    std::uint64_t seed = 0;

    void validate() const;
    static ScenarioConfig from_json_text(const std::string& text);
    std::string to_json_text() const;
};

struct TrajectoryRecord {
    double t = 0.0;
    std::string id;
    double x = 0.0, y = 0.0, v = 0.0, a = 0.0;
    std::string decision;  // lag action, or the merger's row action
    std::optional<LagDistribution> probs;
};

// Noteworthy happenings (collisions, forced merges).
struct SimEvent {
    double t = 0.0;
    std::string kind;
    std::string detail;
};

// A fresh choice made at a re-decision point (held repeats are not listed).
struct DecisionEvent {
    double t = 0.0;
    std::string id;
    LagAction action = LagAction::do_nothing;
    LagDistribution probs{};
};

struct TrajectoryLog {
    std::vector<TrajectoryRecord> records;
    std::vector<SimEvent> events;
    std::vector<DecisionEvent> decisions;

    void write_csv(std::ostream& out) const;
    std::string to_csv() const;
};

// Advances the scenario at dt_dyn with decision passes every dt_decision.
// Bit-identical output for identical config and seed. Collisions freeze the
// offending follower and are recorded as events; the run continues.
TrajectoryLog run_scenario(const ScenarioConfig& config);

struct BetaSweepRow {
    double beta = 0.0;
    int iterations = 0;
    // How many iterations had each action as their modal fresh choice.
    std::array<int, kNumLagActions> mode_counts{};
    // Pooled fresh choices across all iterations.
    std::array<int, kNumLagActions> choice_counts{};
    LagAction mode = LagAction::do_nothing;
    double entropy = 0.0;  // of the pooled choice distribution [nats]
};

// Replays the scenario `iterations` times per beta with derived seeds,
// overriding every lag's bounded-rationality coefficient. Behaviors are
// those of the primary lag (first main-lane vehicle listed).
std::vector<BetaSweepRow> sweep_beta(const ScenarioConfig& config,
                                     const std::vector<double>& betas, int iterations);

}  // namespace mergegame
