#include "mergegame/sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mergegame/random.hpp"

namespace mergegame {

using nlohmann::json;

namespace {

constexpr double kLaneChangeDuration = 3.0;  // [s]

void append_double(std::string& out, double value) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    out.append(buf, res.ptr);
}

bool csv_safe(const std::string& id) {
    if (id.empty()) return false;
    for (char c : id) {
        if (c == ',' || c == '\n' || c == '\r') return false;
    }
    return true;
}

}  // namespace

double ScriptedProfile::accel_at(double t) const {
    double a = 0.0;
    for (const auto& [start, value] : accel) {
        if (start <= t) {
            a = value;
        } else {
            break;
        }
    }
    return a;
}

void ScenarioConfig::validate() const {
    if (!(duration > 0.0)) throw std::invalid_argument("duration must be positive");
    if (!(dt_dyn > 0.0)) throw std::invalid_argument("dt_dyn must be positive");
    const double ratio = dt_decision / dt_dyn;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 1.0) {
        throw std::invalid_argument("dt_decision must be an integer multiple of dt_dyn");
    }
    int ramp_count = 0;
    int main_count = 0;
    std::vector<std::string> ids;
    for (const auto& v : vehicles) {
        if (!csv_safe(v.state.id)) {
            throw std::invalid_argument("vehicle id must be nonempty without commas/newlines");
        }
        ids.push_back(v.state.id);
        v.idm.validate();
        v.model.validate();
        if (v.state.lane == Lane::ramp) {
            ++ramp_count;
        } else {
            ++main_count;
        }
    }
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
        throw std::invalid_argument("vehicle ids must be unique");
    }
    if (ramp_count != 1) throw std::invalid_argument("exactly one ramp vehicle (merger) required");
    if (main_count < 1) throw std::invalid_argument("at least one main-lane vehicle required");
    for (std::size_t i = 1; i < ma_mode.profile.accel.size(); ++i) {
        if (ma_mode.profile.accel[i].first < ma_mode.profile.accel[i - 1].first) {
            throw std::invalid_argument("scripted accel entries must be time-sorted");
        }
    }
}

// --- JSON serialization -----------------------------------------------------

void to_json(json& j, const RampGeometry& r) {
    j = json{{"ramp_end_x", r.ramp_end_x},
             {"merge_zone_start_x", r.merge_zone_start_x},
             {"lane_offset", r.lane_offset}};
}

void from_json(const json& j, RampGeometry& r) {
    r = RampGeometry(j.at("ramp_end_x").get<double>(), j.at("merge_zone_start_x").get<double>(),
                     j.at("lane_offset").get<double>());
}

void to_json(json& j, const VehicleState& s) {
    j = json{{"id", s.id}, {"x", s.x}, {"y", s.y}, {"v", s.v}, {"a", s.a},
             {"lane", to_string(s.lane)}};
}

void from_json(const json& j, VehicleState& s) {
    s = VehicleState(j.at("id").get<std::string>(), j.at("x").get<double>(),
                     j.at("y").get<double>(), j.at("v").get<double>(),
                     j.value("a", 0.0), lane_from_string(j.at("lane").get<std::string>()));
}

void to_json(json& j, const IdmParams& p) {
    j = json{{"v0", p.v0}, {"T", p.T}, {"s0", p.s0},
             {"a_max", p.a_max}, {"b", p.b}, {"delta", p.delta}};
}

void from_json(const json& j, IdmParams& p) {
    p = IdmParams(j.at("v0").get<double>(), j.at("T").get<double>(), j.at("s0").get<double>(),
                  j.at("a_max").get<double>(), j.at("b").get<double>(), j.value("delta", 4.0));
}

void to_json(json& j, const ModelParams& p) {
    j = json{{"phi", p.phi}, {"tau", p.tau}, {"beta", p.beta}, {"t_window", p.t_window},
             {"sigma", p.sigma}, {"s0", p.s0}, {"T", p.T}};
}

void from_json(const json& j, ModelParams& p) {
    ModelParams defaults;
    std::array<double, 8> phi = j.value("phi", defaults.phi);
    p = ModelParams(phi, j.value("tau", defaults.tau), j.value("beta", defaults.beta),
                    j.value("t_window", defaults.t_window), j.value("sigma", defaults.sigma),
                    j.value("s0", defaults.s0), j.value("T", defaults.T));
}

void to_json(json& j, const VehicleSpec& v) {
    j = json{{"state", v.state}, {"idm", v.idm}, {"model", v.model}};
}

void from_json(const json& j, VehicleSpec& v) {
    j.at("state").get_to(v.state);
    j.at("idm").get_to(v.idm);
    if (j.contains("model")) {
        j.at("model").get_to(v.model);
    } else {
        v.model = ModelParams{};
    }
}

void to_json(json& j, const MaMode& m) {
    if (m.kind == MaKind::game_driven) {
        j = json{{"type", "game_driven"}};
        return;
    }
    j = json{{"type", "scripted"}, {"accel", m.profile.accel}};
    if (m.profile.lane_change_t) j["lane_change_t"] = *m.profile.lane_change_t;
}

void from_json(const json& j, MaMode& m) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "game_driven") {
        m.kind = MaKind::game_driven;
        m.profile = {};
        return;
    }
    if (type != "scripted") throw std::invalid_argument("ma_mode.type must be scripted|game_driven");
    m.kind = MaKind::scripted;
    m.profile.accel = j.value("accel", std::vector<std::pair<double, double>>{});
    if (j.contains("lane_change_t")) {
        m.profile.lane_change_t = j.at("lane_change_t").get<double>();
    } else {
        m.profile.lane_change_t.reset();
    }
}

void to_json(json& j, const ScenarioConfig& c) {
    j = json{{"ramp", c.ramp},       {"vehicles", c.vehicles}, {"ma_mode", c.ma_mode},
             {"dt_dyn", c.dt_dyn},   {"dt_decision", c.dt_decision},
             {"duration", c.duration}, {"seed", c.seed}};
}

void from_json(const json& j, ScenarioConfig& c) {
    j.at("ramp").get_to(c.ramp);
    j.at("vehicles").get_to(c.vehicles);
    j.at("ma_mode").get_to(c.ma_mode);
    c.dt_dyn = j.value("dt_dyn", 0.01);
    c.dt_decision = j.value("dt_decision", 0.1);
    c.duration = j.at("duration").get<double>();
    c.seed = j.value("seed", std::uint64_t{0});
}

ScenarioConfig ScenarioConfig::from_json_text(const std::string& text) {
    ScenarioConfig c = json::parse(text).get<ScenarioConfig>();
    c.validate();
    return c;
}

std::string ScenarioConfig::to_json_text() const {
    return json(*this).dump(2) + "\n";
}

// --- trajectory log ---------------------------------------------------------

std::string TrajectoryLog::to_csv() const {
    std::string out = "t,id,x,y,v,a,decision,p_yb,p_ya,p_bk,p_dn\n";
    for (const auto& r : records) {
        append_double(out, r.t);
        out += ',';
        out += r.id;
        out += ',';
        append_double(out, r.x);
        out += ',';
        append_double(out, r.y);
        out += ',';
        append_double(out, r.v);
        out += ',';
        append_double(out, r.a);
        out += ',';
        out += r.decision;
        for (int k = 0; k < kNumLagActions; ++k) {
            out += ',';
            if (r.probs) append_double(out, (*r.probs)[k]);
        }
        out += '\n';
    }
    return out;
}

void TrajectoryLog::write_csv(std::ostream& out) const {
    out << to_csv();
}

// --- scenario engine --------------------------------------------------------

namespace {

struct LagRuntime {
    VehicleSpec spec;
    VehicleState cur;
    ExecutionState exec;
    std::optional<Decision> decision;
    RandomStream rng;
    bool frozen = false;
};

struct MergerRuntime {
    VehicleSpec spec;
    VehicleState cur;
    bool changing = false;
    bool change_done = false;
    double change_start_t = 0.0;
    double change_start_y = 0.0;
};

// Nearest vehicle ahead of x in the main lane; the merger participates once
// its lane has flipped to main.
std::optional<VehicleState> main_lane_leader(const std::vector<LagRuntime>& lags,
                                             const MergerRuntime& merger, double x,
                                             const std::string& self_id) {
    std::optional<VehicleState> best;
    auto consider = [&](const VehicleState& s) {
        if (s.id == self_id || s.lane != Lane::main || !(s.x > x)) return;
        if (!best || s.x < best->x) best = s;
    };
    for (const auto& l : lags) consider(l.cur);
    consider(merger.cur);
    return best;
}

WorldState world_for(const LagRuntime& lag, const std::vector<LagRuntime>& lags,
                     const MergerRuntime& merger, const RampGeometry& ramp, double t) {
    return WorldState(t, lag.cur, merger.cur,
                      main_lane_leader(lags, merger, lag.cur.x, lag.cur.id), ramp);
}

}  // namespace

TrajectoryLog run_scenario(const ScenarioConfig& config) {
    config.validate();
    TrajectoryLog log;

    std::vector<LagRuntime> lags;
    std::optional<MergerRuntime> merger_slot;
    for (const auto& spec : config.vehicles) {
        if (spec.state.lane == Lane::ramp) {
            MergerRuntime m;
            m.spec = spec;
            m.cur = spec.state;
            merger_slot = std::move(m);
        } else {
            LagRuntime l;
            l.spec = spec;
            l.cur = spec.state;
            l.exec = ExecutionState(spec.idm);
            l.rng.seed(derive_seed(config.seed, spec.state.id));
            lags.push_back(std::move(l));
        }
    }
    MergerRuntime& merger = *merger_slot;

    const long long n_steps = std::llround(config.duration / config.dt_dyn);
    const long long k_dec = std::llround(config.dt_decision / config.dt_dyn);
    const double main_center_y = 0.0;

    auto start_lane_change = [&](double t) {
        if (merger.changing || merger.change_done) return;
        merger.changing = true;
        merger.change_start_t = t;
        merger.change_start_y = merger.cur.y;
    };

    for (long long step = 0; step < n_steps; ++step) {
        const double t = static_cast<double>(step) * config.dt_dyn;

        if (step % k_dec == 0) {
            // Decision pass over an immutable snapshot.
            const std::vector<LagRuntime> snapshot = lags;
            for (auto& lag : lags) {
                if (lag.frozen) continue;
                const WorldState world = world_for(lag, snapshot, merger, config.ramp, t);
                const bool fresh = !lag.decision || world.t >= lag.decision->hold_until;
                lag.decision = decide(world, lag.spec.model, lag.decision, lag.rng);
                if (fresh) {
                    log.decisions.push_back(
                        {t, lag.cur.id, lag.decision->lag_action, lag.decision->lag_probs});
                }
            }
            if (config.ma_mode.kind == MaKind::game_driven && !merger.changing &&
                !merger.change_done && merger.cur.x >= config.ramp.merge_zone_start_x) {
                // The merger acts on the equilibrium of the game with the
                // nearest main-lane vehicle behind it.
                const LagRuntime* paired = nullptr;
                for (const auto& l : lags) {
                    if (l.cur.x <= merger.cur.x && (!paired || l.cur.x > paired->cur.x)) {
                        paired = &l;
                    }
                }
                if (paired && paired->decision &&
                    paired->decision->ma_action == MaAction::change_lanes) {
                    start_lane_change(t);
                }
            }
        }

        if (config.ma_mode.kind == MaKind::scripted && config.ma_mode.profile.lane_change_t &&
            t + 1e-12 >= *config.ma_mode.profile.lane_change_t) {
            start_lane_change(t);
        }
        // A merger running out of ramp merges regardless of the game.
        if (merger.cur.lane == Lane::ramp && !merger.changing &&
            merger.cur.x >= config.ramp.ramp_end_x) {
            start_lane_change(t);
            log.events.push_back({t, "forced_lane_change", merger.cur.id});
        }

        // Dynamics pass: accelerations from the snapshot, then synchronous update.
        const std::vector<LagRuntime> snapshot = lags;
        const MergerRuntime merger_snapshot = merger;
        std::vector<double> accels(lags.size(), 0.0);
        for (std::size_t i = 0; i < lags.size(); ++i) {
            auto& lag = lags[i];
            if (lag.frozen) {
                accels[i] = 0.0;
                continue;
            }
            const WorldState world =
                world_for(snapshot[i], snapshot, merger_snapshot, config.ramp, t);
            lag.exec = behavior_overrides(lag.decision ? lag.decision->lag_action
                                                       : LagAction::do_nothing,
                                          world, lag.exec);
            try {
                accels[i] = mr_idm_accel(world, lag.exec);
            } catch (const CollisionError&) {
                log.events.push_back({t, "collision", lag.cur.id});
                lag.frozen = true;
                lag.cur.v = 0.0;
                lag.cur.a = 0.0;
                accels[i] = 0.0;
            }
        }
        double ma_accel = 0.0;
        if (config.ma_mode.kind == MaKind::scripted) {
            ma_accel = config.ma_mode.profile.accel_at(t);
        } else {
            const auto lead = main_lane_leader(snapshot, merger_snapshot, merger.cur.x,
                                               merger.cur.id);
            const bool follow = merger.cur.lane == Lane::main && lead.has_value();
            try {
                ma_accel = follow ? idm_accel(merger.cur.v, lead->x - merger.cur.x,
                                              merger.cur.v - lead->v, merger.spec.idm)
                                  : idm_accel(merger.cur.v,
                                              std::numeric_limits<double>::infinity(), 0.0,
                                              merger.spec.idm);
            } catch (const CollisionError&) {
                log.events.push_back({t, "collision", merger.cur.id});
                ma_accel = 0.0;
                merger.cur.v = 0.0;
            }
        }

        // Log the states at t together with the acceleration applied over
        // [t, t + dt).
        for (std::size_t i = 0; i < lags.size(); ++i) {
            const auto& lag = lags[i];
            log.records.push_back({t, lag.cur.id, lag.cur.x, lag.cur.y, lag.cur.v, accels[i],
                                   to_string(lag.decision ? lag.decision->lag_action
                                                          : LagAction::do_nothing),
                                   lag.decision ? std::optional(lag.decision->lag_probs)
                                                : std::nullopt});
        }
        log.records.push_back({t, merger.cur.id, merger.cur.x, merger.cur.y, merger.cur.v,
                               ma_accel,
                               to_string(merger.changing || merger.change_done
                                             ? MaAction::change_lanes
                                             : MaAction::keep_straight),
                               std::nullopt});

        for (std::size_t i = 0; i < lags.size(); ++i) {
            if (!lags[i].frozen) lags[i].cur = step_vehicle(lags[i].cur, accels[i], config.dt_dyn);
        }
        merger.cur = step_vehicle(merger.cur, ma_accel, config.dt_dyn);
        if (merger.changing) {
            const double progress =
                std::clamp((t + config.dt_dyn - merger.change_start_t) / kLaneChangeDuration,
                           0.0, 1.0);
            merger.cur.y =
                merger.change_start_y + progress * (main_center_y - merger.change_start_y);
            if (std::abs(merger.cur.y - main_center_y) < 0.5 * config.ramp.lane_offset) {
                merger.cur.lane = Lane::main;
            }
            if (progress >= 1.0) {
                merger.changing = false;
                merger.change_done = true;
            }
        }

        // Same-lane overlap after the step freezes the follower.
        for (auto& lag : lags) {
            if (lag.frozen) continue;
            const auto lead = main_lane_leader(lags, merger, lag.cur.x, lag.cur.id);
            if (lead && lead->x - lag.cur.x <= 0.0) {
                log.events.push_back({t + config.dt_dyn, "collision", lag.cur.id});
                lag.frozen = true;
                lag.cur.v = 0.0;
                lag.cur.a = 0.0;
            }
        }
    }
    return log;
}

std::vector<BetaSweepRow> sweep_beta(const ScenarioConfig& config,
                                     const std::vector<double>& betas, int iterations) {
    if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    config.validate();

    std::string primary_id;
    for (const auto& v : config.vehicles) {
        if (v.state.lane == Lane::main) {
            primary_id = v.state.id;
            break;
        }
    }

    std::vector<BetaSweepRow> rows;
    for (std::size_t bi = 0; bi < betas.size(); ++bi) {
        BetaSweepRow row;
        row.beta = betas[bi];
        row.iterations = iterations;
        for (int iter = 0; iter < iterations; ++iter) {
            ScenarioConfig replica = config;
            replica.seed = derive_seed(config.seed, bi, static_cast<std::uint64_t>(iter));
            for (auto& v : replica.vehicles) v.model.beta = betas[bi];
            const TrajectoryLog log = run_scenario(replica);

            std::array<int, kNumLagActions> counts{};
            for (const auto& d : log.decisions) {
                if (d.id != primary_id) continue;
                ++counts[static_cast<int>(d.action)];
                ++row.choice_counts[static_cast<int>(d.action)];
            }
            int mode = 0;
            for (int k = 1; k < kNumLagActions; ++k) {
                if (counts[k] > counts[mode]) mode = k;
            }
            ++row.mode_counts[mode];
        }
        int overall = 0;
        long long total = 0;
        for (int k = 0; k < kNumLagActions; ++k) {
            if (row.mode_counts[k] > row.mode_counts[overall]) overall = k;
            total += row.choice_counts[k];
        }
        row.mode = static_cast<LagAction>(overall);
        row.entropy = 0.0;
        for (int k = 0; k < kNumLagActions; ++k) {
            if (row.choice_counts[k] == 0) continue;
            const double p = static_cast<double>(row.choice_counts[k]) / static_cast<double>(total);
            row.entropy -= p * std::log(p);
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace mergegame
