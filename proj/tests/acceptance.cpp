// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qosguard.hpp"

using namespace qosguard;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            if (pass) detail = what;
            pass = false;
        }
    }
};

struct Criterion {
    const char* id;
    const char* title;
    double budget_seconds;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

SystemConfig system(int n, int guard, double mu) {
    SystemConfig c;
    c.channels = n;
    c.guard = guard;
    c.service_rate = mu;
    return c;
}

std::vector<double> scaled_ratio(const std::vector<double>& ratio, double total) {
    double w = 0.0;
    for (double r : ratio) w += r;
    std::vector<double> out;
    for (double r : ratio) out.push_back(total * r / w);
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome erlang_degeneration() {
    Outcome o;
    double worst = 0.0;
    for (double load : {60.0, 80.0, 100.0, 120.0}) {
        const auto cfg = system(100, 0, 1.0 / 120);
        const auto rates = scaled_ratio({1, 1, 1, 1}, load / 120.0);
        const auto a = analyze(cfg, TrafficProfile(rates));
        const double b = erlang_b(100, load);
        for (double bm : a.report.per_class) worst = std::max(worst, std::abs(bm - b));
    }
    o.require(worst <= 1e-9, fmt("max |B_m - ErlangB| = %.3g", worst));
    if (o.pass) o.detail = fmt("max |B_m - ErlangB| = %.3g over loads 60..120 E", worst);
    return o;
}

Outcome small_chain_oracle() {
    Outcome o;
    std::mt19937_64 rng(20240601);
    std::uniform_int_distribution<int> channels(2, 20);
    std::uniform_int_distribution<int> classes(2, 4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_state = 0.0, worst_block = 0.0;
    for (int k = 0; k < 50; ++k) {
        const int n = channels(rng);
        const int guard = std::uniform_int_distribution<int>(0, n / 2)(rng);
        const int M = classes(rng);
        const double mu = 0.1 + u(rng);
        std::vector<double> rates(M);
        for (auto& r : rates) r = 0.05 + u(rng) * 2.0 * n * mu / M;
        const auto cfg = system(n, guard, mu);
        const auto p = compute_partition(cfg, rates);
        const auto ss = steady_state(cfg, p, rates);
        const auto dense = oracle::dense_steady_state(n, p.limits, rates, mu);
        for (int i = 0; i <= n; ++i) worst_state = std::max(worst_state, std::abs(ss.probs[i] - dense[i]));
        const auto report = blocking_probabilities(ss, p);
        for (int m = 0; m < M; ++m) {
            double tail = 0.0;
            for (int i = p.limits[m]; i <= n; ++i) tail += dense[i];
            worst_block = std::max(worst_block, std::abs(report.per_class[m] - tail));
        }
    }
    o.require(worst_state <= 1e-10, fmt("state deviation %.3g", worst_state));
    o.require(worst_block <= 1e-10, fmt("blocking deviation %.3g", worst_block));
    if (o.pass) o.detail = fmt("50 cases: max state dev %.3g, max B dev %.3g", worst_state, worst_block);
    return o;
}

Outcome worked_instance() {
    Outcome o;
    const auto cfg = system(3, 1, 1.0);
    const std::vector<double> rates{1.0, 1.0};
    const auto a = analyze(cfg, TrafficProfile(rates));
    const double b1 = 2.0 / 17, b2 = 8.0 / 17;
    o.require(std::abs(a.report.per_class[0] - b1) <= 1e-12, "analytic B_1");
    o.require(std::abs(a.report.per_class[1] - b2) <= 1e-12, "analytic B_2");

    SimScenario sc;
    sc.config = cfg;
    sc.profile = TrafficProfile(rates);
    sc.horizon = Horizon::arrivals(2'000'000);
    sc.seed = 17;
    const auto m = run_simulation(sc);
    const auto se = m.binomial_standard_error({b1, b2});
    o.require(m.arrivals[0] + m.arrivals[1] >= 1'000'000, "fewer than 1e6 measured arrivals");
    const double z1 = (m.empirical_blocking[0] - b1) / se[0];
    const double z2 = (m.empirical_blocking[1] - b2) / se[1];
    o.require(std::abs(z1) <= 3.0, fmt("simulated B_1 z = %.2f", z1));
    o.require(std::abs(z2) <= 3.0, fmt("simulated B_2 z = %.2f", z2));
    if (o.pass)
        o.detail = fmt("B = (%.6f, %.6f) simulated, z = ", m.empirical_blocking[0], m.empirical_blocking[1]) +
                   fmt("(%.2f, %.2f)", z1, z2);
    return o;
}

Outcome full_scale_agreement() {
    Outcome o;
    const double mu = 1.0 / 120;
    const auto cfg = system(100, 10, mu);
    double worst_z = 0.0, worst_binomial_z = 0.0, worst_util = 0.0;
    std::uint64_t point = 0;
    for (double load : {40.0, 70.0, 90.0, 110.0, 140.0}) {
        const auto rates = scaled_ratio({1, 1, 1, 1}, load * mu);
        const auto a = analyze(cfg, TrafficProfile(rates));

        SimScenario sc;
        sc.config = cfg;
        sc.profile = TrafficProfile(rates);
        sc.horizon = Horizon::arrivals(2'000'000);
        sc.rate_source = RateSource::true_rates;
        sc.seed = 400 + point++;
        const auto m = run_simulation(sc);
        // Blocking events cluster over a holding time, so the batch-means error is the honest
        // one; the binomial error at the analytic value is its floor (and the only estimate
        // when a class saw no blocking at all).
        const auto binomial = m.binomial_standard_error(a.report.per_class);
        for (std::size_t c = 0; c < 4; ++c) {
            const double diff = m.empirical_blocking[c] - a.report.per_class[c];
            const double se = std::max(m.batch_standard_error[c], binomial[c]);
            const double z = se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : INFINITY);
            worst_z = std::max(worst_z, std::abs(z));
            if (binomial[c] > 0.0) worst_binomial_z = std::max(worst_binomial_z, std::abs(diff / binomial[c]));
            o.require(std::abs(diff) <= 3.0 * se,
                      fmt("load %.0f E class %.0f: z = %.2f", load, static_cast<double>(c + 1), z));
        }
        const double du = std::abs(m.utilization - a.report.utilization);
        worst_util = std::max(worst_util, du);
        o.require(du <= 0.01, fmt("load %.0f E: utilization off by %.4f", load, du));
    }
    if (o.pass)
        o.detail = fmt("max |z| = %.2f (binomial-only %.2f), max utilization error = %.4f", worst_z, worst_binomial_z,
                       worst_util);
    return o;
}

Outcome curve_shapes() {
    Outcome o;
    const double mu = 1.0 / 120;
    const auto cfg = system(100, 10, mu);
    int heavy_points = 0;
    for (const std::vector<double>& ratio : {std::vector<double>{1, 1, 1, 1}, std::vector<double>{3, 4, 2, 1}}) {
        for (int k = 1; k <= 16; ++k) {
            const double total = 0.1 * k;
            const double offered = total / mu;
            const TrafficProfile profile(scaled_ratio(ratio, total));
            const auto dyn = analyze(cfg, profile);
            const auto shr = analyze_complete_sharing(cfg, profile);
            for (int m = 1; m < 4; ++m)
                o.require(dyn.report.per_class[m] >= dyn.report.per_class[m - 1],
                          fmt("lambda_T %.1f: B_%.0f < B_%.0f", total, m + 1.0, m));
            if (offered >= cfg.channels) {
                ++heavy_points;
                o.require(dyn.report.per_class[0] < shr.report.per_class[0],
                          fmt("lambda_T %.1f: dynamic B_1 %.4g not below sharing", total, dyn.report.per_class[0]));
            }
            const double lower = erlang_carried_load(cfg.channels - cfg.guard, offered) / cfg.channels;
            const double upper = shr.report.utilization;
            o.require(dyn.report.utilization >= lower - 1e-12 && dyn.report.utilization <= upper + 1e-12,
                      fmt("lambda_T %.1f: utilization %.5f outside sandwich", total, dyn.report.utilization));
        }
    }
    if (o.pass) o.detail = "32 sweep points, " + std::to_string(heavy_points) + " heavy-load points";
    return o;
}

Outcome partition_staircase() {
    Outcome o;
    const auto dir = fs::temp_directory_path() / "qosguard_acceptance_staircase";
    fs::remove_all(dir);
    const auto spec = parse_config(
        "[traffic]\nrates = 0, 0.4, 0.2, 0.1\nsweep_class = 1\nsweep_range = 0.05, 1.5, 0.05\n");
    run_experiment(spec, dir);

    std::istringstream in(slurp(dir / "partition_trace.csv"));
    std::string line;
    std::getline(in, line);
    int rows = 0;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
        // Hundredths of a call per second, exact.
        const std::int64_t l1 = std::llround(std::stod(cells[2]) * 100);
        const auto expected = oracle::exact_guard_access({l1, 40, 20, 10}, 10);
        for (int m = 0; m < 4; ++m)
            o.require(std::stoi(cells[10 + m]) == expected[m],
                      fmt("lambda_1 = %.2f: y_%.0f mismatch", l1 / 100.0, m + 1.0));
        o.require(std::stoi(cells[10]) == 10, "y_1 != 10");
        ++rows;
    }
    o.require(rows == 30, "expected 30 sweep rows, got " + std::to_string(rows));
    if (o.pass) o.detail = std::to_string(rows) + " lambda_1 points match the exact staircase";
    fs::remove_all(dir);
    return o;
}

Outcome estimator_bias() {
    Outcome o;
    const std::size_t n = 100, windows = 10'000;
    std::string detail;
    std::uint64_t seed = 700;
    for (double lambda : {0.1, 0.5, 1.0}) {
        const auto arrivals = generate_arrivals(lambda, (n + 1) * windows / lambda * 1.05, seed++);
        if (arrivals.size() < (n + 1) * windows) {
            o.require(false, "arrival stream too short");
            break;
        }
        double acc = 0.0;
        for (std::size_t w = 0; w < windows; ++w) {
            ArrivalWindow win(n);
            for (std::size_t k = 0; k <= n; ++k) win.record(arrivals[w * (n + 1) + k]);
            acc += estimate_rate(win);
        }
        const double rel = (acc / windows - lambda) / lambda;
        o.require(std::abs(rel) <= 0.02, fmt("lambda %.1f: relative error %.4f", lambda, rel));
        detail += fmt("%.1f:%+.4f ", lambda, rel);
    }
    if (o.pass) o.detail = "relative error " + detail;
    return o;
}

Outcome vlc_golden() {
    Outcome o;
    o.require(vlc::lambertian_order(60.0) == 1.0 || std::abs(vlc::lambertian_order(60.0) - 1.0) <= 1e-15,
              fmt("tau(60) = %.17g", vlc::lambertian_order(60.0)));
    o.require(std::abs(vlc::concentrator_gain(30, 60, 1.5) - 3.0) <= 1e-12, "g(30; 60, 1.5) != 3");
    vlc::OpticalLinkParams link;
    const double h = vlc::los_channel_gain(link);
    o.require(std::abs(h - 2.387e-5) / 2.387e-5 <= 1e-3, fmt("H = %.5g", h));
    o.require(vlc::enumerate_masks().size() == 127, "mask count");
    o.require(vlc::decode_band_mask(vlc::ColorBandMask::parse("0100110")) == std::vector<int>{2, 5, 6}, "0100110");
    double width = 0.0;
    bool contiguous = vlc::kColorBands.front().low_nm == 380 && vlc::kColorBands.back().high_nm == 780;
    for (std::size_t i = 0; i < vlc::kColorBands.size(); ++i) {
        width += vlc::kColorBands[i].width_nm;
        if (i > 0) contiguous = contiguous && vlc::kColorBands[i].low_nm == vlc::kColorBands[i - 1].high_nm;
    }
    o.require(contiguous && width == 400.0, "bands do not tile 380..780 nm");
    if (o.pass) o.detail = fmt("tau=%.15g g=%.15g H=%.6g", vlc::lambertian_order(60.0), 3.0, h);
    return o;
}

Outcome determinism() {
    Outcome o;
    auto spec = parse_config(
        "[experiment]\nseed = 12\n[system]\nchannels = 30\nguard = 5\nmean_holding_time = 20\n"
        "[traffic]\nratio = 3:4:2:1\ntotal_rate = 0.8, 1.6\n[simulation]\narrivals = 50000\nreplications = 2\n"
        "events = true\ntrace_every = 100\n");
    int compared = 0;
    for (Mode mode : {Mode::analyze, Mode::simulate, Mode::compare, Mode::sweep, Mode::vlc_link}) {
        spec.mode = mode;
        const auto a = fs::temp_directory_path() / "qosguard_acceptance_det_a";
        const auto b = fs::temp_directory_path() / "qosguard_acceptance_det_b";
        fs::remove_all(a);
        fs::remove_all(b);
        const auto files = run_experiment(spec, a).files;
        run_experiment(spec, b, {2});
        for (const auto& f : files) {
            o.require(slurp(f) == slurp(b / f.filename()),
                      std::string(to_string(mode)) + ": " + f.filename().string() + " differs");
            ++compared;
        }
        fs::remove_all(a);
        fs::remove_all(b);
    }
    if (o.pass) o.detail = std::to_string(compared) + " output files byte-identical across runs";
    return o;
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {"AC1", "Erlang-B degeneration", 1.0, erlang_degeneration},
        {"AC2", "small-chain dense-solve oracle", 5.0, small_chain_oracle},
        {"AC3", "worked N=3 instance", 30.0, worked_instance},
        {"AC4", "simulation vs analysis at N=100", 300.0, full_scale_agreement},
        {"AC5", "blocking order and utilization bounds", 60.0, curve_shapes},
        {"AC6", "partition staircase", 60.0, partition_staircase},
        {"AC7", "estimator bias", 30.0, estimator_bias},
        {"AC8", "VLC golden values", 60.0, vlc_golden},
        {"AC9", "determinism", 120.0, determinism},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (secs > c.budget_seconds) {
            if (o.pass) o.detail = fmt("runtime %.2f s over budget %.0f s", secs, c.budget_seconds);
            o.pass = false;
        }
        std::printf("[%s] %s %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.title, secs, o.detail.c_str());
        if (!o.pass) ++failures;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
