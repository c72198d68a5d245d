#pragma once

// Dynamic guard-channel partition and the admission test.
//
// Of N channels, N - Gamma are open to every class. The Gamma guard channels
// are split into per-class shares proportional to the arrival rates; class m
// may use the floor of the shares of classes m..M, so higher-priority classes
// see a superset of what lower-priority classes see.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"
#include "traffic_model.hpp"

namespace qosguard {

struct SystemConfig {
    int channels = 100;              // N
    int guard = 10;                  // Gamma
    double service_rate = 1.0 / 120;  // mu, per second
    std::size_t window = 100;        // estimator gap count n

    void validate() const {
        if (channels < 1) throw std::domain_error("channel count must be positive");
        if (guard < 0 || guard > channels) throw std::domain_error("guard pool must lie in [0, channels]");
        if (!(service_rate > 0.0) || !std::isfinite(service_rate))
            throw std::domain_error("service rate must be positive");
        if (window < 1) throw std::domain_error("estimator window must hold at least one gap");
    }
};

struct ChannelPartition {
    std::vector<double> shares;     // X_m
    std::vector<int> guard_access;  // y_m
    std::vector<int> limits;        // N_m
    std::vector<double> rates_used;

    std::size_t class_count() const { return limits.size(); }
    int limit(ClassIndex m) const { return limits.at(m.offset()); }
    int channels() const { return limits.empty() ? 0 : limits.front(); }
};

enum class Decision { accept, block };

inline const char* to_string(Decision d) { return d == Decision::accept ? "accept" : "block"; }

namespace detail {

inline double checked_total(std::span<const double> rates) {
    if (rates.empty()) throw std::domain_error("rate vector is empty");
    double total = 0.0;
    for (double r : rates) {
        if (!(r >= 0.0) || !std::isfinite(r)) throw std::domain_error("rates must be finite and non-negative");
        total += r;
    }
    return total;
}

// Floor that tolerates rounding in the share ratios: 0.1 / (0.3+0.4+0.2+0.1)
// times 10 lands just below 1.0 in binary arithmetic.
inline int tolerant_floor(double x, int guard) {
    const double eps = 1e-9 * std::max(1, guard);
    return static_cast<int>(std::floor(x + eps));
}

}  // namespace detail

/// X_m = (lambda_m / lambda_T) * Gamma.
inline std::vector<double> reserved_shares(std::span<const double> rates, int guard) {
    const double total = detail::checked_total(rates);
    if (!(total > 0.0)) throw DegenerateRates("total arrival rate is zero");
    std::vector<double> shares;
    shares.reserve(rates.size());
    for (double r : rates) shares.push_back(r / total * guard);
    return shares;
}

/// y_m = floor(X_m + ... + X_M).
inline int accessible_guard(std::span<const double> shares, ClassIndex m) {
    if (m.value < 1 || m.value > shares.size())
        throw std::domain_error("class index " + std::to_string(m.value) + " out of range");
    double suffix = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < shares.size(); ++i) {
        total += shares[i];
        if (i >= m.offset()) suffix += shares[i];
    }
    const int guard = static_cast<int>(std::lround(total));
    return std::min(detail::tolerant_floor(suffix, guard), guard);
}

enum class DegeneratePolicy { equal_split, reject };

/// Partition (X, y, N_m) for the given rates.
///
/// An all-zero rate vector falls back to equal shares Gamma/M unless
/// `on_zero` is `reject`, in which case DegenerateRates propagates.
inline ChannelPartition compute_partition(const SystemConfig& config, std::span<const double> rates,
                                          DegeneratePolicy on_zero = DegeneratePolicy::equal_split) {
    config.validate();
    const double total = detail::checked_total(rates);
    const std::size_t classes = rates.size();

    ChannelPartition p;
    p.rates_used.assign(rates.begin(), rates.end());
    if (total > 0.0) {
        p.shares = reserved_shares(rates, config.guard);
    } else if (on_zero == DegeneratePolicy::equal_split) {
        p.shares.assign(classes, static_cast<double>(config.guard) / static_cast<double>(classes));
    } else {
        throw DegenerateRates("total arrival rate is zero");
    }

    // Suffix sums are accumulated from the exact rates rather than from the
    // rounded shares so that y_1 == Gamma holds exactly.
    p.guard_access.resize(classes);
    p.limits.resize(classes);
    double suffix_rate = 0.0;
    double suffix_share = 0.0;
    for (std::size_t i = classes; i-- > 0;) {
        suffix_rate += rates[i];
        suffix_share += p.shares[i];
        double reserved = total > 0.0 ? suffix_rate / total * config.guard : suffix_share;
        int y = i == 0 ? config.guard : std::min(detail::tolerant_floor(reserved, config.guard), config.guard);
        p.guard_access[i] = y;
    }
    // Rounding must not break the staircase.
    for (std::size_t i = 1; i < classes; ++i)
        p.guard_access[i] = std::min(p.guard_access[i], p.guard_access[i - 1]);
    for (std::size_t i = 0; i < classes; ++i)
        p.limits[i] = config.channels - config.guard + p.guard_access[i];
    return p;
}

/// Every class may use all N channels.
inline ChannelPartition complete_sharing_partition(const SystemConfig& config, std::span<const double> rates) {
    SystemConfig open = config;
    open.guard = 0;
    return compute_partition(open, rates);
}

/// Accept iff fewer than N_m channels are busy.
inline Decision admit(int occupied, ClassIndex m, const ChannelPartition& partition) {
    if (occupied < 0 || occupied > partition.channels())
        throw StateCorruption("occupancy " + std::to_string(occupied) + " outside [0, " +
                              std::to_string(partition.channels()) + "]");
    return occupied < partition.limit(m) ? Decision::accept : Decision::block;
}

}  // namespace qosguard
