#pragma once

// Birth-death analysis of the guard-channel loss system.
//
// State i is the number of busy channels. From state i the chain moves up at
// the summed rate of every class whose limit N_m exceeds i and down at i*mu.
// The stationary law follows from the detailed-balance recurrence
//   i * mu * P_i = rate(i-1) * P_{i-1},
// which is the canonical solver here. The printed closed forms for P_0 and
// B_m are evaluated separately as a cross-check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "guard_allocator.hpp"

namespace qosguard {

struct SteadyState {
    std::vector<double> probs;  // P_0..P_N
    std::vector<int> limits;
    std::vector<double> rates;
    double mu = 0.0;

    int channels() const { return static_cast<int>(probs.size()) - 1; }
};

struct BlockingReport {
    std::vector<double> per_class;  // B_1..B_M
    double utilization = 0.0;       // E[busy] / N
    double mean_occupancy = 0.0;    // E[busy]
    double offered_load = 0.0;      // lambda_T / mu, Erlangs
};

/// Total admissible arrival rate out of occupancy i.
inline double state_arrival_rate(int i, std::span<const int> limits, std::span<const double> rates) {
    if (limits.size() != rates.size()) throw std::domain_error("limits and rates differ in length");
    if (limits.empty()) throw std::domain_error("no traffic classes");
    const int top = *std::max_element(limits.begin(), limits.end());
    if (i < 0 || i >= top)
        throw std::domain_error("occupancy " + std::to_string(i) + " has no upward transition");
    double rate = 0.0;
    for (std::size_t m = 0; m < limits.size(); ++m)
        if (limits[m] > i) rate += rates[m];
    return rate;
}

/// Stationary distribution over 0..channels for the given limits and rates.
inline SteadyState steady_state(int channels, std::span<const int> limits, std::span<const double> rates, double mu) {
    if (channels < 0) throw std::domain_error("channel count must be non-negative");
    if (!(mu > 0.0)) throw std::domain_error("service rate must be positive");
    if (limits.size() != rates.size() || limits.empty()) throw std::domain_error("limits and rates differ in length");
    for (int l : limits)
        if (l < 0 || l > channels) throw std::domain_error("class limit outside [0, channels]");
    for (double r : rates)
        if (!(r >= 0.0) || !std::isfinite(r)) throw std::domain_error("rates must be finite and non-negative");

    // Weights are rescaled whenever they grow large so that lambda^N / N!
    // never overflows at N in the hundreds.
    constexpr double kRescaleAbove = 1e250;
    std::vector<double> w(static_cast<std::size_t>(channels) + 1, 0.0);
    w[0] = 1.0;
    for (int i = 1; i <= channels; ++i) {
        double up = 0.0;
        for (std::size_t m = 0; m < limits.size(); ++m)
            if (limits[m] > i - 1) up += rates[m];
        w[i] = w[i - 1] * up / (i * mu);
        if (w[i] > kRescaleAbove) {
            for (int k = 0; k <= i; ++k) w[k] /= kRescaleAbove;
        }
    }
    double total = 0.0;
    for (double x : w) total += x;
    for (double& x : w) x /= total;

    SteadyState ss;
    ss.probs = std::move(w);
    ss.limits.assign(limits.begin(), limits.end());
    ss.rates.assign(rates.begin(), rates.end());
    ss.mu = mu;
    return ss;
}

inline SteadyState steady_state(const SystemConfig& config, const ChannelPartition& partition,
                                std::span<const double> rates) {
    config.validate();
    return steady_state(config.channels, partition.limits, rates, config.service_rate);
}

/// B_m is the stationary mass at or above N_m.
inline BlockingReport blocking_probabilities(const SteadyState& ss, const ChannelPartition& partition) {
    if (ss.limits != partition.limits) throw std::domain_error("steady state was solved for different limits");
    const int n = ss.channels();

    // tail[i] = P_i + ... + P_N, summed from the top so small tails keep precision.
    std::vector<double> tail(static_cast<std::size_t>(n) + 2, 0.0);
    for (int i = n; i >= 0; --i) tail[i] = tail[i + 1] + ss.probs[i];

    BlockingReport report;
    for (int limit : ss.limits) report.per_class.push_back(std::clamp(tail[limit], 0.0, 1.0));
    double mean = 0.0;
    for (int i = 0; i <= n; ++i) mean += i * ss.probs[i];
    report.mean_occupancy = mean;
    report.utilization = n > 0 ? mean / n : 0.0;
    double total = 0.0;
    for (double r : ss.rates) total += r;
    report.offered_load = total / ss.mu;
    return report;
}

/// Erlang-B blocking by the standard recurrence.
inline double erlang_b(int servers, double offered) {
    if (servers < 0) throw std::domain_error("server count must be non-negative");
    if (!(offered >= 0.0)) throw std::domain_error("offered load must be non-negative");
    double b = 1.0;
    for (int k = 1; k <= servers; ++k) b = offered * b / (k + offered * b);
    return b;
}

/// Mean busy servers of an Erlang loss system: a * (1 - B(c, a)).
inline double erlang_carried_load(int servers, double offered) {
    return offered * (1.0 - erlang_b(servers, offered));
}

namespace detail {

// log(base^exponent) with 0^0 == 1.
inline double log_pow(double base, long exponent) {
    if (exponent == 0) return 0.0;
    if (base == 0.0) return -std::numeric_limits<double>::infinity();
    return static_cast<double>(exponent) * std::log(base);
}

inline double log_sum_exp(std::span<const double> xs) {
    double hi = -std::numeric_limits<double>::infinity();
    for (double x : xs) hi = std::max(hi, x);
    if (hi == -std::numeric_limits<double>::infinity()) return hi;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - hi);
    return hi + std::log(s);
}

// Closed-form pieces in log space. Classes are 1-based in the helpers below
// to keep the index arithmetic recognisable.
struct ClosedFormTerms {
    std::vector<int> limit;       // limit[1..M]
    std::vector<double> prefix;   // prefix[k] = lambda_1 + ... + lambda_k, prefix[0] = 0
    double log_lambda_total = 0.0;
    double log_mu = 0.0;
    int classes = 0;
    int channels = 0;

    // log of prod_{k=from}^{M-1} (lambda_1+...+lambda_k)^(N_k - N_{k+1})
    double log_band_product(int from) const {
        double s = 0.0;
        for (int k = from; k <= classes - 1; ++k) s += log_pow(prefix[k], limit[k] - limit[k + 1]);
        return s;
    }

    // log of lambda_T^i / (mu^i i!), the first sum of the normalizer.
    double log_open_term(int i) const {
        double lt = i == 0 ? 0.0 : i * log_lambda_total;
        return lt - i * log_mu - std::lgamma(i + 1.0);
    }

    // log of lambda_T^{N_M} (lambda_1+...+lambda_{j-1})^{i-N_j} prod_{k=j}^{M-1}(...) / (mu^i i!)
    double log_band_term(int i, int j) const {
        const double lt = limit[classes] == 0 ? 0.0 : limit[classes] * log_lambda_total;
        return lt + log_pow(prefix[j - 1], i - limit[j]) + log_band_product(j) - i * log_mu -
               std::lgamma(i + 1.0);
    }
};

}  // namespace detail

/// Direct evaluation of the closed-form normalizer and blocking expressions
/// (highest class: P_N; class m >= 2: B_{m-1} plus the states in
/// [N_m, N_{m-1})). Evaluated in log space since mu^N N! overflows at N=100.
/// Must match blocking_probabilities(steady_state(...)); see
/// cross_check_closed_form.
inline BlockingReport closed_form_blocking(const SystemConfig& config, const ChannelPartition& partition,
                                           std::span<const double> rates) {
    config.validate();
    if (rates.size() != partition.limits.size()) throw std::domain_error("limits and rates differ in length");
    for (std::size_t m = 1; m < partition.limits.size(); ++m)
        if (partition.limits[m] > partition.limits[m - 1])
            throw std::domain_error("closed form requires non-increasing class limits");

    detail::ClosedFormTerms t;
    t.classes = static_cast<int>(rates.size());
    t.channels = config.channels;
    t.limit.assign(1, 0);
    t.limit.insert(t.limit.end(), partition.limits.begin(), partition.limits.end());
    t.prefix.assign(1, 0.0);
    for (double r : rates) t.prefix.push_back(t.prefix.back() + r);
    const double lambda_total = t.prefix.back();
    t.log_lambda_total = lambda_total > 0.0 ? std::log(lambda_total) : -std::numeric_limits<double>::infinity();
    t.log_mu = std::log(config.service_rate);
    const int M = t.classes;
    const int N = t.channels;
    const int NM = t.limit[M];

    BlockingReport report;
    report.offered_load = lambda_total / config.service_rate;

    if (!(lambda_total > 0.0)) {
        report.per_class.assign(rates.size(), 0.0);
        for (int m = 1; m <= M; ++m)
            if (t.limit[m] == 0) report.per_class[m - 1] = 1.0;
        return report;
    }

    // Unnormalized log P_i, state by state, using the same expressions that
    // make up the normalizer.
    std::vector<double> log_w(static_cast<std::size_t>(N) + 1, -std::numeric_limits<double>::infinity());
    for (int i = 0; i <= NM; ++i) log_w[i] = t.log_open_term(i);
    for (int j = 2; j <= M; ++j)
        for (int i = t.limit[j] + 1; i <= t.limit[j - 1]; ++i) log_w[i] = t.log_band_term(i, j);
    const double log_norm = detail::log_sum_exp(log_w);  // -log P_0

    // Highest class: P_N = lambda_T^{N_M} / (mu^N N!) * P_0 * prod_{k=1}^{M-1} (...)
    const double log_lt_nm = NM == 0 ? 0.0 : NM * t.log_lambda_total;
    std::vector<double> blocking(static_cast<std::size_t>(M) + 1, 0.0);
    blocking[1] = std::exp(log_lt_nm - N * t.log_mu - std::lgamma(N + 1.0) + t.log_band_product(1) - log_norm);
    for (int m = 2; m <= M; ++m) {
        double add = 0.0;
        for (int i = t.limit[m]; i <= t.limit[m - 1] - 1; ++i)
            add += std::exp(log_lt_nm - i * t.log_mu - std::lgamma(i + 1.0) +
                            detail::log_pow(t.prefix[m - 1], i - t.limit[m]) + t.log_band_product(m) - log_norm);
        blocking[m] = blocking[m - 1] + add;
    }
    for (int m = 1; m <= M; ++m) report.per_class.push_back(std::clamp(blocking[m], 0.0, 1.0));

    double mean = 0.0;
    for (int i = 1; i <= N; ++i) mean += i * std::exp(log_w[i] - log_norm);
    report.mean_occupancy = mean;
    report.utilization = mean / N;
    return report;
}

struct ClosedFormCheck {
    BlockingReport recurrence;
    BlockingReport closed_form;
    double max_abs_difference = 0.0;
    bool agrees = false;
};

/// Compares the closed form against the recurrence; both values are kept so a
/// transcription discrepancy can be reported side by side.
inline ClosedFormCheck cross_check_closed_form(const SystemConfig& config, const ChannelPartition& partition,
                                               std::span<const double> rates, double tolerance = 1e-9) {
    ClosedFormCheck check;
    check.recurrence = blocking_probabilities(steady_state(config, partition, rates), partition);
    check.closed_form = closed_form_blocking(config, partition, rates);
    for (std::size_t m = 0; m < rates.size(); ++m)
        check.max_abs_difference = std::max(
            check.max_abs_difference, std::abs(check.recurrence.per_class[m] - check.closed_form.per_class[m]));
    check.max_abs_difference = std::max(
        check.max_abs_difference, std::abs(check.recurrence.utilization - check.closed_form.utilization));
    check.agrees = check.max_abs_difference <= tolerance;
    return check;
}

struct Analysis {
    ChannelPartition partition;
    SteadyState steady;
    BlockingReport report;
};

/// Partition from the profile's own rates, then solve.
inline Analysis analyze(const SystemConfig& config, const TrafficProfile& profile) {
    const auto rates = profile.rates();
    Analysis a;
    a.partition = compute_partition(config, rates);
    a.steady = steady_state(config, a.partition, rates);
    a.report = blocking_probabilities(a.steady, a.partition);
    return a;
}

inline Analysis analyze_complete_sharing(const SystemConfig& config, const TrafficProfile& profile) {
    const auto rates = profile.rates();
    Analysis a;
    a.partition = complete_sharing_partition(config, rates);
    a.steady = steady_state(config, a.partition, rates);
    a.report = blocking_probabilities(a.steady, a.partition);
    return a;
}

}  // namespace qosguard
