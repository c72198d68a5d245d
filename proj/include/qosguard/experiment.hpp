#pragma once

// Runs an ExperimentSpec and writes its CSV outputs plus a manifest.
//
// Independent (point, replication) runs may execute on several threads; rows
// are always assembled in sweep order, so the files do not depend on `jobs`.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "config.hpp"
#include "des_engine.hpp"
#include "markov_analyzer.hpp"
#include "vlc_phy.hpp"

namespace qosguard {

/// Nine significant digits, as used in every CSV.
inline std::string csv_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) { row_strings(header); }

    CsvWriter& cell(const std::string& s) {
        pending_.push_back(s);
        return *this;
    }
    CsvWriter& cell(double x) { return cell(csv_number(x)); }
    template <std::integral T>
    CsvWriter& cell(T x) {
        return cell(std::to_string(x));
    }

    void end_row() {
        if (pending_.size() != columns_) throw std::logic_error("csv row width does not match header");
        row_strings(pending_);
        pending_.clear();
    }

    const std::string& text() const { return text_; }

private:
    void row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) text_ += (i ? "," : "") + cells[i];
        text_ += '\n';
    }

    std::size_t columns_;
    std::vector<std::string> pending_;
    std::string text_;
};

struct RunOptions {
    unsigned jobs = 1;
};

struct ExperimentResult {
    std::vector<std::filesystem::path> files;
};

namespace detail {

inline std::vector<std::string> numbered(const std::string& prefix, std::size_t count) {
    std::vector<std::string> out;
    for (std::size_t i = 1; i <= count; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

inline std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Per-run seed, a pure function of (experiment seed, point, replication).
inline std::uint64_t run_seed(std::uint64_t seed, std::size_t point, std::size_t replication) {
    return splitmix64(splitmix64(splitmix64(seed) ^ point) ^ (replication * 0x632be59bd9b4e019ULL));
}

template <class F>
void parallel_for(std::size_t count, unsigned jobs, F&& body) {
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < jobs; ++w)
        workers.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < count;) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& t : workers) t.join();
    if (failure) std::rethrow_exception(failure);
}

inline void write_file(const std::filesystem::path& path, const std::string& text,
                       std::vector<std::filesystem::path>& written) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::filesystem::filesystem_error("cannot open for writing", path, std::make_error_code(std::errc::io_error));
    out << text;
    out.close();
    if (!out) throw std::filesystem::filesystem_error("write failed", path, std::make_error_code(std::errc::io_error));
    written.push_back(path);
}

struct SimTask {
    std::size_t point;
    std::size_t replication;
};

struct SimOutcome {
    SimMetrics dynamic;
    SimMetrics sharing;
};

inline SimScenario scenario_for(const ExperimentSpec& spec, const TrafficProfile& profile, std::size_t point,
                                std::size_t replication) {
    SimScenario sc;
    sc.config = spec.system;
    sc.profile = profile;
    sc.horizon = Horizon::arrivals(spec.simulation.arrivals);
    sc.seed = run_seed(spec.seed, point, replication);
    sc.policy = spec.simulation.policy;
    sc.rate_source = spec.simulation.estimator;
    sc.warmup = spec.simulation.warmup;
    sc.trace_every = spec.simulation.trace_every;
    sc.batches = spec.simulation.batches;
    sc.record_events = spec.simulation.events;
    return sc;
}

// Mean over replications with the spread of replication means as standard
// error; a single replication reports its batch-means error instead.
struct Summary {
    std::vector<double> mean;
    std::vector<double> se;
    double utilization = 0.0;
};

inline Summary summarize(const std::vector<const SimMetrics*>& runs) {
    const std::size_t M = runs.front()->empirical_blocking.size();
    Summary s;
    s.mean.assign(M, 0.0);
    s.se.assign(M, 0.0);
    const double R = static_cast<double>(runs.size());
    for (const auto* r : runs) {
        for (std::size_t m = 0; m < M; ++m) s.mean[m] += r->empirical_blocking[m] / R;
        s.utilization += r->utilization / R;
    }
    if (runs.size() == 1) {
        s.se = runs.front()->batch_standard_error;
        return s;
    }
    for (std::size_t m = 0; m < M; ++m) {
        double ss = 0.0;
        for (const auto* r : runs) ss += (r->empirical_blocking[m] - s.mean[m]) * (r->empirical_blocking[m] - s.mean[m]);
        s.se[m] = std::sqrt(ss / (R - 1.0) / R);
    }
    return s;
}

inline void write_analysis(const ExperimentSpec& spec, const std::filesystem::path& dir,
                           std::vector<std::filesystem::path>& written) {
    const auto points = spec.traffic.points();
    const std::size_t M = points.front().class_count();
    CsvWriter blocking(concat(concat({"lambda_T"}, numbered("B_", M)), {"utilization", "B_sharing", "util_sharing"}));
    CsvWriter util({"lambda_T", "offered_load", "utilization", "util_sharing", "util_reduced_sharing"});
    CsvWriter partition(concat(concat(concat(concat({"point", "lambda_T"}, numbered("lambda_", M)), numbered("X_", M)),
                                      numbered("y_", M)),
                               numbered("N_", M)));

    for (std::size_t p = 0; p < points.size(); ++p) {
        const auto& profile = points[p];
        const auto dyn = analyze(spec.system, profile);
        const auto shr = analyze_complete_sharing(spec.system, profile);
        const double lt = profile.total_rate();
        const double offered = lt / spec.system.service_rate;

        blocking.cell(lt);
        for (double b : dyn.report.per_class) blocking.cell(b);
        blocking.cell(dyn.report.utilization).cell(shr.report.per_class.front()).cell(shr.report.utilization);
        blocking.end_row();

        const int reduced = spec.system.channels - spec.system.guard;
        util.cell(lt).cell(offered).cell(dyn.report.utilization).cell(shr.report.utilization)
            .cell(erlang_carried_load(reduced, offered) / spec.system.channels);
        util.end_row();

        partition.cell(p).cell(lt);
        for (double r : profile.rates()) partition.cell(r);
        for (double x : dyn.partition.shares) partition.cell(x);
        for (int y : dyn.partition.guard_access) partition.cell(y);
        for (int n : dyn.partition.limits) partition.cell(n);
        partition.end_row();
    }
    write_file(dir / "blocking.csv", blocking.text(), written);
    write_file(dir / "utilization.csv", util.text(), written);
    write_file(dir / "partition_trace.csv", partition.text(), written);
}

inline void write_simulation(const ExperimentSpec& spec, const std::filesystem::path& dir, bool both_policies,
                             bool with_analysis, unsigned jobs, std::vector<std::filesystem::path>& written) {
    const auto points = spec.traffic.points();
    const std::size_t M = points.front().class_count();
    const std::size_t R = spec.simulation.replications;

    std::vector<SimTask> tasks;
    for (std::size_t p = 0; p < points.size(); ++p)
        for (std::size_t r = 0; r < R; ++r) tasks.push_back({p, r});
    std::vector<SimOutcome> outcomes(tasks.size());
    parallel_for(tasks.size(), jobs, [&](std::size_t i) {
        const auto sc = scenario_for(spec, points[tasks[i].point], tasks[i].point, tasks[i].replication);
        if (both_policies) {
            auto c = compare_policies(sc);
            outcomes[i].dynamic = std::move(c.dynamic);
            outcomes[i].sharing = std::move(c.sharing);
        } else {
            outcomes[i].dynamic = run_simulation(sc);
        }
    });

    struct Labeled {
        const char* policy;
        const SimMetrics* metrics;
    };
    auto runs_of = [&](const SimOutcome& o) {
        std::vector<Labeled> v;
        if (both_policies) {
            v.push_back({"dynamic", &o.dynamic});
            v.push_back({"sharing", &o.sharing});
        } else {
            v.push_back({to_string(spec.simulation.policy), &o.dynamic});
        }
        return v;
    };

    CsvWriter blocking(concat(concat(concat(concat({"point", "replication", "lambda_T", "policy"}, numbered("arrivals_", M)),
                                            numbered("blocks_", M)),
                                     numbered("B_", M)),
                              numbered("se_", M)));
    CsvWriter util({"point", "replication", "lambda_T", "policy", "utilization", "measured_time"});
    CsvWriter trace(concat(concat(concat({"point", "replication", "policy", "time"}, numbered("y_", M)), numbered("N_", M)),
                           numbered("lambda_hat_", M)));
    CsvWriter events({"point", "replication", "policy", "time", "kind", "class", "decision", "occupied_after"});

    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const double lt = points[tasks[i].point].total_rate();
        for (const auto& [policy, m] : runs_of(outcomes[i])) {
            blocking.cell(tasks[i].point).cell(tasks[i].replication).cell(lt).cell(policy);
            for (auto a : m->arrivals) blocking.cell(a);
            for (auto b : m->blocks) blocking.cell(b);
            for (double b : m->empirical_blocking) blocking.cell(b);
            for (double s : m->batch_standard_error) blocking.cell(s);
            blocking.end_row();

            util.cell(tasks[i].point).cell(tasks[i].replication).cell(lt).cell(policy)
                .cell(m->utilization).cell(m->measured_time);
            util.end_row();

            for (std::size_t k = 0; k < m->partition_trace.size(); ++k) {
                const auto& ps = m->partition_trace[k];
                trace.cell(tasks[i].point).cell(tasks[i].replication).cell(policy).cell(ps.time);
                for (int y : ps.guard_access) trace.cell(y);
                for (int n : ps.limits) trace.cell(n);
                for (double r : m->estimator_trace[k].rates) trace.cell(r);
                trace.end_row();
            }
            for (const auto& e : m->events) {
                events.cell(tasks[i].point).cell(tasks[i].replication).cell(policy).cell(e.time)
                    .cell(to_string(e.kind)).cell(e.cls.value).cell(to_string(e.decision)).cell(e.occupied_after);
                events.end_row();
            }
        }
    }

    // Per-point summary across replications, optionally next to the analysis.
    std::vector<std::string> head = concat(concat(concat({"point", "lambda_T", "source", "policy"}, numbered("B_", M)),
                                                  numbered("se_", M)),
                                           {"utilization"});
    CsvWriter summary(head);
    for (std::size_t p = 0; p < points.size(); ++p) {
        const double lt = points[p].total_rate();
        if (with_analysis) {
            for (const auto& [policy, a] : {std::pair{"dynamic", analyze(spec.system, points[p])},
                                            std::pair{"sharing", analyze_complete_sharing(spec.system, points[p])}}) {
                summary.cell(p).cell(lt).cell("analytic").cell(policy);
                for (double b : a.report.per_class) summary.cell(b);
                for (std::size_t m = 0; m < M; ++m) summary.cell(0.0);
                summary.cell(a.report.utilization);
                summary.end_row();
            }
        }
        std::vector<std::vector<const SimMetrics*>> per_policy(both_policies ? 2 : 1);
        std::vector<const char*> labels;
        for (std::size_t r = 0; r < R; ++r) {
            const auto runs = runs_of(outcomes[p * R + r]);
            labels.clear();
            for (std::size_t k = 0; k < runs.size(); ++k) {
                per_policy[k].push_back(runs[k].metrics);
                labels.push_back(runs[k].policy);
            }
        }
        for (std::size_t k = 0; k < per_policy.size(); ++k) {
            const auto s = summarize(per_policy[k]);
            summary.cell(p).cell(lt).cell("simulated").cell(labels[k]);
            for (double b : s.mean) summary.cell(b);
            for (double e : s.se) summary.cell(e);
            summary.cell(s.utilization);
            summary.end_row();
        }
    }

    write_file(dir / "blocking.csv", blocking.text(), written);
    write_file(dir / "blocking_summary.csv", summary.text(), written);
    write_file(dir / "utilization.csv", util.text(), written);
    write_file(dir / "partition_trace.csv", trace.text(), written);
    if (spec.simulation.events) write_file(dir / "events.csv", events.text(), written);
}

inline void write_vlc(const ExperimentSpec& spec, const std::filesystem::path& dir,
                      std::vector<std::filesystem::path>& written) {
    CsvWriter budget({"distance_m", "irradiance_angle_deg", "incidence_angle_deg", "lambertian_order",
                      "concentrator_gain", "channel_gain", "transmit_power_w", "received_power_w"});
    for (double d : spec.vlc.distances) {
        for (double psi : spec.vlc.incidence_angles) {
            auto link = spec.vlc.link;
            link.distance_m = d;
            link.incidence_angle_deg = psi;
            const double h = vlc::los_channel_gain(link);
            budget.cell(d).cell(link.irradiance_angle_deg).cell(psi).cell(vlc::lambertian_order(link.half_power_angle_deg))
                .cell(vlc::concentrator_gain(psi, link.fov_deg, link.refractive_index)).cell(h)
                .cell(spec.vlc.transmit_power).cell(vlc::received_power(spec.vlc.transmit_power, h));
            budget.end_row();
        }
    }
    CsvWriter bands({"band", "low_nm", "high_nm", "width_nm"});
    for (const auto& b : vlc::kColorBands) {
        bands.cell(b.index).cell(b.low_nm).cell(b.high_nm).cell(b.width_nm);
        bands.end_row();
    }
    CsvWriter masks({"mask", "band_count", "bands"});
    for (const auto& m : vlc::enumerate_masks()) {
        std::string list;
        for (int b : vlc::decode_band_mask(m)) list += (list.empty() ? "" : " ") + std::to_string(b);
        masks.cell(m.to_string()).cell(m.band_count()).cell(list);
        masks.end_row();
    }
    write_file(dir / "link_budget.csv", budget.text(), written);
    write_file(dir / "bands.csv", bands.text(), written);
    write_file(dir / "masks.csv", masks.text(), written);
}

}  // namespace detail

/// Validates, runs the selected mode and writes into `output_dir` (created if
/// missing). The manifest is the resolved spec in config syntax.
inline ExperimentResult run_experiment(const ExperimentSpec& spec, const std::filesystem::path& output_dir,
                                       RunOptions options = {}) {
    validate(spec);
    std::filesystem::create_directories(output_dir);
    ExperimentResult result;
    switch (spec.mode) {
        case Mode::analyze: detail::write_analysis(spec, output_dir, result.files); break;
        case Mode::simulate: detail::write_simulation(spec, output_dir, false, false, options.jobs, result.files); break;
        case Mode::compare: detail::write_simulation(spec, output_dir, true, false, options.jobs, result.files); break;
        case Mode::sweep: detail::write_simulation(spec, output_dir, true, true, options.jobs, result.files); break;
        case Mode::vlc_link: detail::write_vlc(spec, output_dir, result.files); break;
    }
    detail::write_file(output_dir / "manifest.txt", "# qosguard manifest\n" + format_config(spec), result.files);
    return result;
}

}  // namespace qosguard
