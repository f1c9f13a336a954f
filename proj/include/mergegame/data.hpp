#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mergegame/core.hpp"
#include "mergegame/sim.hpp"

namespace mergegame {

struct SchemaError : std::runtime_error {
    explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

enum class ActorRole { lag, ma, lead };

std::string to_string(ActorRole role);
ActorRole actor_role_from_string(const std::string& s);

struct TrajectorySample {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    double v = 0.0;
};

// One recorded merge interaction: uniformly sampled lag and merger series,
// optionally a lead series on the same instants. The event id doubles as the
// lag actor's identity for per-lag calibration.
struct MergeEvent {
    std::string event_id;
    std::string site_id;
    std::vector<TrajectorySample> lag;
    std::vector<TrajectorySample> ma;
    std::vector<TrajectorySample> lead;  // empty when absent
    RampGeometry ramp;

    bool has_lead() const { return !lead.empty(); }
    double t0() const { return lag.front().t; }
    double duration() const { return lag.back().t - lag.front().t; }
    double sample_period() const { return lag[1].t - lag[0].t; }
};

enum class BehaviorLabel { do_nothing = 0, gap_opening = 1, gap_closing = 2 };

std::string to_string(BehaviorLabel label);
BehaviorLabel behavior_label_from_string(const std::string& s);

struct LabeledEpoch {
    double t_start = 0.0;
    double t_end = 0.0;
    BehaviorLabel label = BehaviorLabel::do_nothing;
};

// A decision instant paired with its ground-truth behavior class.
struct Observation {
    WorldState world;
    BehaviorLabel label = BehaviorLabel::do_nothing;
    std::string lag_id;
    std::string event_id;
};

struct LoadResult {
    std::vector<MergeEvent> events;
    std::vector<std::string> rejected;  // event ids filtered by the 3 s rule
};

// Minimum event duration accepted by load_events [s].
inline constexpr double kMinEventDuration = 3.0;

// Parses the trajectory interchange format (header row with columns
// event_id, site_id, t, actor_role, x, y, v). The ramp geometry is not part
// of the schema and is supplied by the caller. Malformed input raises
// SchemaError naming the offending row/column; events shorter than 3 s are
// dropped and reported in LoadResult::rejected.
LoadResult load_events(std::istream& in, const RampGeometry& ramp);
LoadResult load_events_file(const std::string& path, const RampGeometry& ramp);

void write_events_csv(std::ostream& out, const std::vector<MergeEvent>& events);

// Extracts one merge event from a simulation log, resampled at
// sample_period (a multiple of the log's dynamics step).
MergeEvent event_from_log(const TrajectoryLog& log, const std::string& event_id,
                          const std::string& site_id, const std::string& lag_id,
                          const std::string& ma_id, const std::optional<std::string>& lead_id,
                          const RampGeometry& ramp, double sample_period);

// Savitzky-Golay smoothing: least-squares polynomial of the given order over
// a centered window spanning window_s seconds (an odd number of samples).
// Endpoints fall back to the truncated window. Throws std::invalid_argument
// when the window holds fewer than order + 2 samples.
std::vector<double> savgol_smooth(const std::vector<double>& values, double sample_period,
                                  double window_s, int order);

// Lag-to-leader time gap series (center to center). Events without a lead
// use the merger as the gap target from the moment it crosses the lane
// boundary; earlier samples are NaN and segment as do-nothing.
std::vector<double> time_gap_series(const MergeEvent& event);

// Greedy monotone-trend segmentation of a smoothed time gap series. Epochs
// qualify as gap_opening (gap_closing) when the average rate reaches
// +-0.08 s/s and the total change reaches +-1.0 s; everything else is
// do_nothing. The returned epochs partition [t.front(), t.back()] exactly.
std::vector<LabeledEpoch> segment_behaviors(const std::vector<double>& t,
                                            const std::vector<double>& gap);

// Convenience pipeline: smooth the event's gap series with a 2 s order-2
// filter (configurable) and segment it.
std::vector<LabeledEpoch> label_event(const MergeEvent& event, double window_s = 2.0,
                                      int order = 2);

// One observation per decision instant at the given rate (instants
// t0 + k/rate for k = 1..floor(duration*rate), strictly inside the event).
std::vector<Observation> build_observations(const MergeEvent& event,
                                            const std::vector<LabeledEpoch>& epochs,
                                            double rate = 1.0);

void write_epochs_csv_header(std::ostream& out);
void write_epochs_csv(std::ostream& out, const std::string& event_id,
                      const std::vector<LabeledEpoch>& epochs);

}  // namespace mergegame
