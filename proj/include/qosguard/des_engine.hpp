#pragma once

// Event-driven simulation of the admission loop: per-class Poisson arrivals,
// per-arrival rate estimation and partition recomputation, admission, and
// exponential departures.
//
// Every class owns two random streams, one for inter-arrival gaps and one for
// holding times. A holding time is drawn for every arrival whether or not it
// is admitted, so two runs that differ only in policy see the same sample path.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "guard_allocator.hpp"
#include "traffic_model.hpp"

namespace qosguard {

enum class Policy { dynamic_reservation, complete_sharing };

/// Where the dynamic policy takes its rates from. `true_rates` bypasses the
/// estimator and fixes the partition from the profile.
enum class RateSource { online_estimate, true_rates };

inline const char* to_string(Policy p) { return p == Policy::dynamic_reservation ? "dynamic" : "sharing"; }
inline const char* to_string(RateSource s) { return s == RateSource::online_estimate ? "online" : "true"; }

struct Horizon {
    enum class Kind { arrivals, seconds };
    Kind kind = Kind::arrivals;
    double value = 1'000'000;

    static Horizon arrivals(std::uint64_t count) { return {Kind::arrivals, static_cast<double>(count)}; }
    static Horizon seconds(double t) { return {Kind::seconds, t}; }
};

struct SimScenario {
    SystemConfig config;
    TrafficProfile profile;
    Horizon horizon;
    std::uint64_t seed = 1;
    Policy policy = Policy::dynamic_reservation;
    RateSource rate_source = RateSource::online_estimate;
    double warmup = 0.1;           // fraction of the horizon excluded from metrics
    std::size_t trace_every = 1000;  // post-warmup arrivals between trace samples, 0 disables
    std::size_t batches = 20;      // batch count for batch-means standard errors
    bool record_events = false;

    void validate() const {
        config.validate();
        if (profile.class_count() == 0) throw std::domain_error("scenario has no traffic classes");
        if (!(horizon.value > 0.0) || !std::isfinite(horizon.value)) throw std::domain_error("horizon must be positive");
        if (!(warmup >= 0.0 && warmup < 1.0)) throw std::domain_error("warmup must lie in [0, 1)");
        if (batches < 2) throw std::domain_error("need at least two batches");
    }
};

enum class EventKind { arrival, departure };

inline const char* to_string(EventKind k) { return k == EventKind::arrival ? "arrival" : "departure"; }

struct EventRecord {
    double time = 0.0;
    EventKind kind = EventKind::arrival;
    ClassIndex cls;
    Decision decision = Decision::accept;  // departures record `accept`
    int occupied_after = 0;

    friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct PartitionSample {
    double time = 0.0;
    std::vector<int> guard_access;
    std::vector<int> limits;
    friend bool operator==(const PartitionSample&, const PartitionSample&) = default;
};

struct EstimateSample {
    double time = 0.0;
    std::vector<double> rates;
    friend bool operator==(const EstimateSample&, const EstimateSample&) = default;
};

struct SimMetrics {
    std::vector<std::uint64_t> arrivals;
    std::vector<std::uint64_t> blocks;
    std::vector<double> empirical_blocking;
    std::vector<double> batch_standard_error;  // batch means over equal arrival counts
    double utilization = 0.0;                  // time average of busy / N
    double measured_time = 0.0;
    double start_time = 0.0;
    double end_time = 0.0;
    std::vector<PartitionSample> partition_trace;
    std::vector<EstimateSample> estimator_trace;
    std::vector<EventRecord> events;  // whole run, including warmup

    std::uint64_t admissions(ClassIndex m) const { return arrivals.at(m.offset()) - blocks.at(m.offset()); }

    /// sqrt(p (1-p) / n) around the given blocking probabilities.
    std::vector<double> binomial_standard_error(const std::vector<double>& p) const {
        std::vector<double> se;
        for (std::size_t m = 0; m < arrivals.size(); ++m) {
            const double n = static_cast<double>(arrivals[m]);
            se.push_back(n > 0 ? std::sqrt(p[m] * (1.0 - p[m]) / n) : 0.0);
        }
        return se;
    }

    friend bool operator==(const SimMetrics&, const SimMetrics&) = default;
};

namespace detail {

struct PendingEvent {
    double time;
    EventKind kind;
    std::size_t cls;  // 0-based
    std::uint64_t seq;
};

// Earliest first; at equal times departures precede arrivals, then lower
// class index, then insertion order.
struct LaterEvent {
    bool operator()(const PendingEvent& a, const PendingEvent& b) const {
        if (a.time != b.time) return a.time > b.time;
        if (a.kind != b.kind) return a.kind == EventKind::arrival;
        if (a.cls != b.cls) return a.cls > b.cls;
        return a.seq > b.seq;
    }
};

inline std::mt19937_64 make_stream(std::uint64_t seed, std::size_t cls, std::uint32_t purpose) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(cls), purpose};
    return std::mt19937_64(seq);
}

}  // namespace detail

inline SimMetrics run_simulation(const SimScenario& sc) {
    sc.validate();
    const SystemConfig& cfg = sc.config;
    const std::size_t M = sc.profile.class_count();
    const std::vector<double> true_rates = sc.profile.rates();
    const int N = cfg.channels;

    const bool by_arrivals = sc.horizon.kind == Horizon::Kind::arrivals;
    const std::uint64_t total_arrivals = by_arrivals ? static_cast<std::uint64_t>(sc.horizon.value) : 0;
    const std::uint64_t warmup_arrivals =
        by_arrivals ? static_cast<std::uint64_t>(std::floor(sc.warmup * static_cast<double>(total_arrivals))) : 0;
    const double horizon_time = by_arrivals ? std::numeric_limits<double>::infinity() : sc.horizon.value;
    const double warmup_time = by_arrivals ? 0.0 : sc.warmup * sc.horizon.value;

    std::vector<std::mt19937_64> gap_rng, hold_rng;
    for (std::size_t m = 0; m < M; ++m) {
        gap_rng.push_back(detail::make_stream(sc.seed, m, 0x61727276u));
        hold_rng.push_back(detail::make_stream(sc.seed, m, 0x686f6c64u));
    }

    std::vector<ArrivalWindow> windows;
    for (std::size_t m = 0; m < M; ++m) windows.emplace_back(cfg.window, ClassIndex{m + 1});
    std::vector<double> partition_rates = true_rates;  // cold start uses configured rates
    std::vector<bool> estimated(M, false);

    ChannelPartition partition = sc.policy == Policy::complete_sharing
                                     ? complete_sharing_partition(cfg, true_rates)
                                     : compute_partition(cfg, true_rates);
    const bool online = sc.policy == Policy::dynamic_reservation && sc.rate_source == RateSource::online_estimate;

    std::priority_queue<detail::PendingEvent, std::vector<detail::PendingEvent>, detail::LaterEvent> queue;
    std::uint64_t seq = 0;
    std::vector<double> last_arrival(M, 0.0);
    auto schedule_arrival = [&](std::size_t m) {
        if (true_rates[m] <= 0.0) return;
        double t = last_arrival[m] + sample_exponential(true_rates[m], gap_rng[m]);
        // Same-class ties would produce a zero gap.
        if (t <= last_arrival[m]) t = std::nextafter(last_arrival[m], std::numeric_limits<double>::infinity());
        last_arrival[m] = t;
        queue.push({t, EventKind::arrival, m, seq++});
    };
    for (std::size_t m = 0; m < M; ++m) schedule_arrival(m);

    SimMetrics out;
    out.arrivals.assign(M, 0);
    out.blocks.assign(M, 0);

    const std::uint64_t measured_arrivals = by_arrivals ? total_arrivals - warmup_arrivals : 0;
    std::vector<std::vector<std::uint64_t>> batch_arrivals(sc.batches, std::vector<std::uint64_t>(M, 0));
    std::vector<std::vector<std::uint64_t>> batch_blocks(sc.batches, std::vector<std::uint64_t>(M, 0));

    int occupied = 0;
    double now = 0.0;
    double measuring_since = by_arrivals ? (warmup_arrivals == 0 ? 0.0 : -1.0) : warmup_time;
    double busy_integral = 0.0;
    std::uint64_t seen = 0;      // arrivals processed, including warmup
    std::uint64_t counted = 0;   // arrivals inside the measurement window

    auto advance = [&](double t) {
        if (measuring_since >= 0.0 && t > measuring_since) {
            const double from = std::max(now, measuring_since);
            busy_integral += occupied * (t - from);
        }
        now = t;
    };
    auto in_window = [&](double t) { return by_arrivals ? seen > warmup_arrivals : t >= warmup_time; };

    while (!queue.empty()) {
        const detail::PendingEvent ev = queue.top();
        if (!by_arrivals && ev.time > horizon_time) break;
        queue.pop();
        advance(ev.time);

        if (ev.kind == EventKind::departure) {
            if (occupied <= 0) throw StateCorruption("departure from an empty system");
            --occupied;
            if (sc.record_events)
                out.events.push_back({ev.time, EventKind::departure, ClassIndex{ev.cls + 1}, Decision::accept, occupied});
            continue;
        }

        const std::size_t m = ev.cls;
        ++seen;
        const double holding = sample_holding_time(cfg.service_rate, hold_rng[m]);
        schedule_arrival(m);

        windows[m].record(ev.time);
        if (online) {
            if (windows[m].gap_count() > 0) {
                partition_rates[m] = estimate_rate(windows[m]);
                estimated[m] = true;
            }
            partition = compute_partition(cfg, partition_rates);
        }

        const Decision d = admit(occupied, ClassIndex{m + 1}, partition);
        if (d == Decision::accept) {
            ++occupied;
            queue.push({ev.time + holding, EventKind::departure, m, seq++});
        }
        if (sc.record_events) out.events.push_back({ev.time, EventKind::arrival, ClassIndex{m + 1}, d, occupied});

        if (in_window(ev.time)) {
            if (measuring_since < 0.0) measuring_since = ev.time;
            const std::size_t b =
                by_arrivals ? static_cast<std::size_t>(counted * sc.batches / std::max<std::uint64_t>(measured_arrivals, 1))
                            : std::min(sc.batches - 1, static_cast<std::size_t>((ev.time - warmup_time) /
                                                                                  (horizon_time - warmup_time) * sc.batches));
            ++counted;
            ++out.arrivals[m];
            ++batch_arrivals[b][m];
            if (d == Decision::block) {
                ++out.blocks[m];
                ++batch_blocks[b][m];
            }
            if (sc.trace_every > 0 && counted % sc.trace_every == 0) {
                out.partition_trace.push_back({ev.time, partition.guard_access, partition.limits});
                out.estimator_trace.push_back({ev.time, partition_rates});
            }
        } else if (by_arrivals && seen == warmup_arrivals) {
            measuring_since = ev.time;
        }

        if (by_arrivals && seen == total_arrivals) break;
    }
    if (!by_arrivals) advance(horizon_time);

    out.start_time = std::max(measuring_since, 0.0);
    out.end_time = now;
    out.measured_time = out.end_time - out.start_time;
    out.utilization = out.measured_time > 0.0 ? busy_integral / out.measured_time / N : 0.0;

    out.empirical_blocking.assign(M, 0.0);
    out.batch_standard_error.assign(M, 0.0);
    for (std::size_t m = 0; m < M; ++m) {
        if (out.arrivals[m] > 0)
            out.empirical_blocking[m] = static_cast<double>(out.blocks[m]) / static_cast<double>(out.arrivals[m]);
        std::vector<double> means;
        for (std::size_t b = 0; b < sc.batches; ++b)
            if (batch_arrivals[b][m] > 0)
                means.push_back(static_cast<double>(batch_blocks[b][m]) / static_cast<double>(batch_arrivals[b][m]));
        if (means.size() >= 2) {
            double mean = 0.0;
            for (double x : means) mean += x;
            mean /= static_cast<double>(means.size());
            double ss = 0.0;
            for (double x : means) ss += (x - mean) * (x - mean);
            out.batch_standard_error[m] = std::sqrt(ss / static_cast<double>(means.size() - 1) /
                                                    static_cast<double>(means.size()));
        }
    }
    return out;
}

struct PolicyComparison {
    SimMetrics dynamic;
    SimMetrics sharing;
};

/// Both policies on the same sample path.
inline PolicyComparison compare_policies(const SimScenario& scenario) {
    SimScenario dyn = scenario;
    dyn.policy = Policy::dynamic_reservation;
    SimScenario shr = scenario;
    shr.policy = Policy::complete_sharing;
    return {run_simulation(dyn), run_simulation(shr)};
}

}  // namespace qosguard
