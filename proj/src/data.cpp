#include "mergegame/data.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "mergegame/payoff.hpp"

namespace mergegame {

namespace {

constexpr double kRateThreshold = 0.08;   // [s/s]
constexpr double kTotalThreshold = 1.0;   // [s]

void append_double(std::string& out, double value) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    out.append(buf, res.ptr);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& s, int row, const std::string& column) {
    double value = 0.0;
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc{} || res.ptr != end || !std::isfinite(value)) {
        throw SchemaError("row " + std::to_string(row) + ": column '" + column +
                          "' is not a finite number: '" + s + "'");
    }
    return value;
}

double interpolate(const std::vector<TrajectorySample>& series, double t,
                   double TrajectorySample::*field) {
    if (t <= series.front().t) return series.front().*field;
    if (t >= series.back().t) return series.back().*field;
    const double dt = series[1].t - series[0].t;
    const auto idx = static_cast<std::size_t>((t - series.front().t) / dt);
    const std::size_t i = std::min(idx, series.size() - 2);
    const double w = (t - series[i].t) / (series[i + 1].t - series[i].t);
    return series[i].*field + w * (series[i + 1].*field - series[i].*field);
}

// Central-difference acceleration from the speed series.
double accel_at(const std::vector<TrajectorySample>& series, double t) {
    const double h = series[1].t - series[0].t;
    const double v_plus = interpolate(series, t + h, &TrajectorySample::v);
    const double v_minus = interpolate(series, t - h, &TrajectorySample::v);
    return (v_plus - v_minus) / (2.0 * h);
}

VehicleState state_at(const std::vector<TrajectorySample>& series, double t,
                      const std::string& id, Lane lane) {
    return VehicleState(id, interpolate(series, t, &TrajectorySample::x),
                        interpolate(series, t, &TrajectorySample::y),
                        std::max(0.0, interpolate(series, t, &TrajectorySample::v)),
                        accel_at(series, t), lane);
}

void check_uniform(const std::vector<TrajectorySample>& series, const std::string& event_id) {
    if (series.size() < 2) {
        throw SchemaError("event '" + event_id + "': series needs at least two samples");
    }
    const double dt = series[1].t - series[0].t;
    if (!(dt > 0.0)) {
        throw SchemaError("event '" + event_id + "': timestamps must strictly increase");
    }
    for (std::size_t i = 1; i < series.size(); ++i) {
        const double step = series[i].t - series[i - 1].t;
        if (std::abs(step - dt) > 1e-6 * std::max(1.0, dt)) {
            throw SchemaError("event '" + event_id + "': sampling period is not uniform");
        }
    }
}

}  // namespace

std::string to_string(ActorRole role) {
    switch (role) {
        case ActorRole::lag: return "lag";
        case ActorRole::ma: return "ma";
        case ActorRole::lead: return "lead";
    }
    throw std::logic_error("unreachable actor role");
}

ActorRole actor_role_from_string(const std::string& s) {
    if (s == "lag") return ActorRole::lag;
    if (s == "ma") return ActorRole::ma;
    if (s == "lead") return ActorRole::lead;
    throw SchemaError("unknown actor_role: '" + s + "'");
}

std::string to_string(BehaviorLabel label) {
    switch (label) {
        case BehaviorLabel::do_nothing: return "do_nothing";
        case BehaviorLabel::gap_opening: return "gap_opening";
        case BehaviorLabel::gap_closing: return "gap_closing";
    }
    throw std::logic_error("unreachable behavior label");
}

BehaviorLabel behavior_label_from_string(const std::string& s) {
    if (s == "do_nothing") return BehaviorLabel::do_nothing;
    if (s == "gap_opening") return BehaviorLabel::gap_opening;
    if (s == "gap_closing") return BehaviorLabel::gap_closing;
    throw SchemaError("unknown behavior label: '" + s + "'");
}

LoadResult load_events(std::istream& in, const RampGeometry& ramp) {
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("empty trajectory file");
    const std::vector<std::string> header = split_csv_line(line);
    const std::vector<std::string> required = {"event_id", "site_id", "t", "actor_role",
                                               "x", "y", "v"};
    std::map<std::string, int> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = static_cast<int>(i);
    for (const auto& name : required) {
        if (!col.count(name)) throw SchemaError("missing required column '" + name + "'");
    }

    // Events keep their order of first appearance.
    std::vector<std::string> order;
    std::map<std::string, MergeEvent> events;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() < required.size()) {
            throw SchemaError("row " + std::to_string(row) + ": expected at least " +
                              std::to_string(required.size()) + " fields");
        }
        auto field = [&](const std::string& name) -> const std::string& {
            return fields[static_cast<std::size_t>(col.at(name))];
        };
        const std::string event_id = field("event_id");
        if (!events.count(event_id)) {
            order.push_back(event_id);
            events[event_id].event_id = event_id;
            events[event_id].site_id = field("site_id");
            events[event_id].ramp = ramp;
        }
        TrajectorySample sample{parse_double(field("t"), row, "t"),
                                parse_double(field("x"), row, "x"),
                                parse_double(field("y"), row, "y"),
                                parse_double(field("v"), row, "v")};
        if (sample.v < 0.0) {
            throw SchemaError("row " + std::to_string(row) + ": column 'v' must be nonnegative");
        }
        switch (actor_role_from_string(field("actor_role"))) {
            case ActorRole::lag: events[event_id].lag.push_back(sample); break;
            case ActorRole::ma: events[event_id].ma.push_back(sample); break;
            case ActorRole::lead: events[event_id].lead.push_back(sample); break;
        }
    }

    LoadResult result;
    for (const auto& id : order) {
        MergeEvent& e = events[id];
        if (e.lag.empty() || e.ma.empty()) {
            throw SchemaError("event '" + id + "': lag and ma series are both required");
        }
        check_uniform(e.lag, id);
        check_uniform(e.ma, id);
        if (e.has_lead()) check_uniform(e.lead, id);
        if (e.lag.size() != e.ma.size() || (e.has_lead() && e.lead.size() != e.lag.size())) {
            throw SchemaError("event '" + id + "': actor series must share sampling instants");
        }
        if (e.duration() < kMinEventDuration) {
            result.rejected.push_back(id);
            continue;
        }
        result.events.push_back(std::move(e));
    }
    return result;
}

LoadResult load_events_file(const std::string& path, const RampGeometry& ramp) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open trajectory file: " + path);
    return load_events(in, ramp);
}

void write_events_csv(std::ostream& out, const std::vector<MergeEvent>& events) {
    std::string text = "event_id,site_id,t,actor_role,x,y,v\n";
    auto emit = [&](const MergeEvent& e, const std::vector<TrajectorySample>& series,
                    ActorRole role) {
        for (const auto& s : series) {
            text += e.event_id;
            text += ',';
            text += e.site_id;
            text += ',';
            append_double(text, s.t);
            text += ',';
            text += to_string(role);
            text += ',';
            append_double(text, s.x);
            text += ',';
            append_double(text, s.y);
            text += ',';
            append_double(text, s.v);
            text += '\n';
        }
    };
    for (const auto& e : events) {
        emit(e, e.lag, ActorRole::lag);
        emit(e, e.ma, ActorRole::ma);
        if (e.has_lead()) emit(e, e.lead, ActorRole::lead);
    }
    out << text;
}

MergeEvent event_from_log(const TrajectoryLog& log, const std::string& event_id,
                          const std::string& site_id, const std::string& lag_id,
                          const std::string& ma_id, const std::optional<std::string>& lead_id,
                          const RampGeometry& ramp, double sample_period) {
    MergeEvent event;
    event.event_id = event_id;
    event.site_id = site_id;
    event.ramp = ramp;

    std::map<std::string, std::vector<TrajectorySample>*> sinks;
    sinks[lag_id] = &event.lag;
    sinks[ma_id] = &event.ma;
    if (lead_id) sinks[*lead_id] = &event.lead;

    std::map<std::string, double> last_kept;
    for (const auto& r : log.records) {
        auto it = sinks.find(r.id);
        if (it == sinks.end()) continue;
        auto kept = last_kept.find(r.id);
        if (kept != last_kept.end() && r.t < kept->second + sample_period - 1e-9) continue;
        last_kept[r.id] = r.t;
        it->second->push_back({r.t, r.x, r.y, r.v});
    }
    if (event.lag.empty() || event.ma.empty()) {
        throw std::invalid_argument("log does not contain the requested lag/ma ids");
    }
    return event;
}

std::vector<double> savgol_smooth(const std::vector<double>& values, double sample_period,
                                  double window_s, int order) {
    if (!(sample_period > 0.0)) throw std::invalid_argument("sample_period must be positive");
    if (order < 0) throw std::invalid_argument("order must be nonnegative");
    const int half = std::max(1, static_cast<int>(std::lround(window_s / (2.0 * sample_period))));
    const int window = 2 * half + 1;
    if (window < order + 2) {
        throw std::invalid_argument("savgol window too short: " + std::to_string(window) +
                                    " samples for order " + std::to_string(order));
    }
    const int n = static_cast<int>(values.size());
    if (n == 0) return {};

    // Interior coefficients once: value at the window center of the
    // least-squares polynomial fit.
    Eigen::MatrixXd a(window, order + 1);
    for (int i = 0; i < window; ++i) {
        double p = 1.0;
        for (int j = 0; j <= order; ++j) {
            a(i, j) = p;
            p *= static_cast<double>(i - half);
        }
    }
    const Eigen::MatrixXd pinv =
        (a.transpose() * a).ldlt().solve(a.transpose());  // (order+1) x window
    const Eigen::VectorXd center_coeffs = pinv.row(0);

    std::vector<double> out(values.size());
    for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - half);
        const int hi = std::min(n - 1, i + half);
        if (hi - lo + 1 == window) {
            double s = 0.0;
            for (int k = 0; k < window; ++k) s += center_coeffs(k) * values[lo + k];
            out[i] = s;
            continue;
        }
        // Truncated window at the ends: explicit fit evaluated at sample i.
        const int len = hi - lo + 1;
        const int ord = std::min(order, len - 1);
        Eigen::MatrixXd at(len, ord + 1);
        Eigen::VectorXd rhs(len);
        for (int k = 0; k < len; ++k) {
            double p = 1.0;
            for (int j = 0; j <= ord; ++j) {
                at(k, j) = p;
                p *= static_cast<double>(lo + k - i);
            }
            rhs(k) = values[lo + k];
        }
        const Eigen::VectorXd coef = at.colPivHouseholderQr().solve(rhs);
        out[i] = coef(0);
    }
    return out;
}

std::vector<double> time_gap_series(const MergeEvent& event) {
    const std::size_t n = event.lag.size();
    std::vector<double> gap(n, std::numeric_limits<double>::quiet_NaN());
    if (event.has_lead()) {
        for (std::size_t i = 0; i < n; ++i) {
            gap[i] = (event.lead[i].x - event.lag[i].x) / std::max(event.lag[i].v, kMinSpeed);
        }
        return gap;
    }
    // No recorded leader: once the merger crosses the lane boundary it becomes
    // the vehicle the lag follows.
    std::vector<double> lag_y(n);
    for (std::size_t i = 0; i < n; ++i) lag_y[i] = event.lag[i].y;
    std::nth_element(lag_y.begin(), lag_y.begin() + n / 2, lag_y.end());
    const double main_center = lag_y[n / 2];
    bool crossed = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (!crossed &&
            std::abs(event.ma[i].y - main_center) < 0.5 * event.ramp.lane_offset) {
            crossed = true;
        }
        if (crossed) {
            gap[i] = (event.ma[i].x - event.lag[i].x) / std::max(event.lag[i].v, kMinSpeed);
        }
    }
    return gap;
}

namespace {

struct Trend {
    int start = 0;
    int end = 0;  // inclusive
    int direction = 0;
};

bool qualifies(const std::vector<double>& t, const std::vector<double>& g, int s, int e, int dir) {
    const double total = g[e] - g[s];
    const double rate = total / (t[e] - t[s]);
    if (dir > 0) return rate >= kRateThreshold && total >= kTotalThreshold;
    return rate <= -kRateThreshold && total <= -kTotalThreshold;
}

// Longest qualifying subinterval of a monotone trend; ties take the earliest.
std::optional<std::pair<int, int>> best_subinterval(const std::vector<double>& t,
                                                    const std::vector<double>& g, int s, int e,
                                                    int dir) {
    std::optional<std::pair<int, int>> best;
    int best_len = 0;
    for (int i = s; i < e; ++i) {
        for (int j = e; j > i; --j) {
            if (j - i <= best_len) break;
            if (qualifies(t, g, i, j, dir)) {
                best = {i, j};
                best_len = j - i;
                break;
            }
        }
    }
    return best;
}

void collect_epochs(const std::vector<double>& t, const std::vector<double>& g, int s, int e,
                    int dir, std::vector<LabeledEpoch>& out) {
    if (e - s < 1) return;
    const auto sub = best_subinterval(t, g, s, e, dir);
    if (!sub) return;
    out.push_back({t[sub->first], t[sub->second],
                   dir > 0 ? BehaviorLabel::gap_opening : BehaviorLabel::gap_closing});
    collect_epochs(t, g, s, sub->first, dir, out);
    collect_epochs(t, g, sub->second, e, dir, out);
}

}  // namespace

std::vector<LabeledEpoch> segment_behaviors(const std::vector<double>& t,
                                            const std::vector<double>& gap) {
    if (t.size() != gap.size()) throw std::invalid_argument("t and gap sizes differ");
    if (t.size() < 2) throw std::invalid_argument("series needs at least two samples");
    const int n = static_cast<int>(t.size());

    std::vector<LabeledEpoch> qualified;
    // Scan maximal monotone trends within each finite run; a single-sample
    // counter move with net progress does not break a trend.
    int i = 0;
    while (i + 1 < n) {
        if (std::isnan(gap[i]) || std::isnan(gap[i + 1])) {
            ++i;
            continue;
        }
        const double first = gap[i + 1] - gap[i];
        if (first == 0.0) {
            ++i;
            continue;
        }
        const int dir = first > 0.0 ? 1 : -1;
        int j = i + 1;
        while (j + 1 < n && !std::isnan(gap[j + 1])) {
            const double step = gap[j + 1] - gap[j];
            if (dir * step >= 0.0) {
                ++j;
                continue;
            }
            const bool recoverable = j + 2 < n && !std::isnan(gap[j + 2]) &&
                                     dir * (gap[j + 2] - gap[j + 1]) > 0.0 &&
                                     dir * (gap[j + 2] - gap[j]) > 0.0;
            if (recoverable) {
                j += 2;
                continue;
            }
            break;
        }
        collect_epochs(t, gap, i, j, dir, qualified);
        i = j;
    }

    std::sort(qualified.begin(), qualified.end(),
              [](const LabeledEpoch& a, const LabeledEpoch& b) { return a.t_start < b.t_start; });

    // Fill the rest of the timeline with do-nothing epochs.
    std::vector<LabeledEpoch> epochs;
    double cursor = t.front();
    for (const auto& q : qualified) {
        if (q.t_start > cursor) {
            epochs.push_back({cursor, q.t_start, BehaviorLabel::do_nothing});
        }
        epochs.push_back(q);
        cursor = q.t_end;
    }
    if (cursor < t.back() || epochs.empty()) {
        epochs.push_back({cursor, t.back(), BehaviorLabel::do_nothing});
    }
    return epochs;
}

std::vector<LabeledEpoch> label_event(const MergeEvent& event, double window_s, int order) {
    const std::vector<double> raw = time_gap_series(event);
    // NaN prefixes (no gap target yet) are left untouched; only the finite
    // tail is smoothed.
    std::size_t first_finite = 0;
    while (first_finite < raw.size() && std::isnan(raw[first_finite])) ++first_finite;
    std::vector<double> smooth = raw;
    if (first_finite < raw.size()) {
        const std::vector<double> finite(raw.begin() + first_finite, raw.end());
        const std::vector<double> s =
            savgol_smooth(finite, event.sample_period(), window_s, order);
        std::copy(s.begin(), s.end(), smooth.begin() + first_finite);
    }
    std::vector<double> times(event.lag.size());
    for (std::size_t i = 0; i < times.size(); ++i) times[i] = event.lag[i].t;
    return segment_behaviors(times, smooth);
}

std::vector<Observation> build_observations(const MergeEvent& event,
                                            const std::vector<LabeledEpoch>& epochs,
                                            double rate) {
    if (!(rate > 0.0)) throw std::invalid_argument("rate must be positive");
    std::vector<Observation> out;
    const double t0 = event.t0();
    const long long count = static_cast<long long>(std::floor(event.duration() * rate + 1e-9));
    for (long long k = 1; k <= count; ++k) {
        const double t = t0 + static_cast<double>(k) / rate;
        VehicleState lag = state_at(event.lag, t, "lag", Lane::main);
        const double dy_ma = std::abs(interpolate(event.ma, t, &TrajectorySample::y) - lag.y);
        VehicleState ma = state_at(event.ma, t, "ma",
                                   dy_ma < 0.5 * event.ramp.lane_offset ? Lane::main : Lane::ramp);
        std::optional<VehicleState> lead;
        if (event.has_lead()) {
            VehicleState l = state_at(event.lead, t, "lead", Lane::main);
            if (l.x > lag.x) lead = std::move(l);
        }
        Observation obs;
        obs.world = WorldState(t, std::move(lag), std::move(ma), std::move(lead), event.ramp);
        obs.label = BehaviorLabel::do_nothing;
        for (const auto& epoch : epochs) {
            const bool last = &epoch == &epochs.back();
            if (t >= epoch.t_start && (t < epoch.t_end || (last && t <= epoch.t_end))) {
                obs.label = epoch.label;
                break;
            }
        }
        obs.lag_id = event.event_id;
        obs.event_id = event.event_id;
        out.push_back(std::move(obs));
    }
    return out;
}

void write_epochs_csv_header(std::ostream& out) {
    out << "event_id,t_start,t_end,label\n";
}

void write_epochs_csv(std::ostream& out, const std::string& event_id,
                      const std::vector<LabeledEpoch>& epochs) {
    std::string text;
    for (const auto& e : epochs) {
        text += event_id;
        text += ',';
        append_double(text, e.t_start);
        text += ',';
        append_double(text, e.t_end);
        text += ',';
        text += to_string(e.label);
        text += '\n';
    }
    out << text;
}

}  // namespace mergegame
