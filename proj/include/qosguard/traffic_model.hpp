#pragma once

// Traffic classes, Poisson arrival generation, exponential holding times and
// the sliding-window arrival-rate estimator.

#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace qosguard {

/// 1-based traffic class index. Class 1 has the highest priority.
struct ClassIndex {
    std::size_t value = 1;

    constexpr std::size_t offset() const { return value - 1; }
    friend constexpr auto operator<=>(ClassIndex, ClassIndex) = default;
};

struct ClassSpec {
    ClassIndex index;
    std::string name;
    double rate = 0.0;  // arrivals per second
};

/// Ordered set of traffic classes, highest priority first.
class TrafficProfile {
public:
    TrafficProfile() = default;

    explicit TrafficProfile(std::vector<double> rates, std::vector<std::string> names = {}) {
        if (rates.empty()) throw std::domain_error("traffic profile needs at least one class");
        if (!names.empty() && names.size() != rates.size())
            throw std::domain_error("class names must match the number of rates");
        classes_.reserve(rates.size());
        for (std::size_t i = 0; i < rates.size(); ++i) {
            if (!std::isfinite(rates[i]) || rates[i] < 0.0)
                throw std::domain_error("class " + std::to_string(i + 1) +
                                        " rate must be finite and non-negative");
            std::string name = names.empty() ? "class" + std::to_string(i + 1) : std::move(names[i]);
            classes_.push_back(ClassSpec{ClassIndex{i + 1}, std::move(name), rates[i]});
        }
    }

    std::size_t class_count() const { return classes_.size(); }
    const std::vector<ClassSpec>& classes() const { return classes_; }
    const ClassSpec& at(ClassIndex m) const { return classes_.at(m.offset()); }

    std::vector<double> rates() const {
        std::vector<double> out;
        out.reserve(classes_.size());
        for (const auto& c : classes_) out.push_back(c.rate);
        return out;
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& c : classes_) out.push_back(c.name);
        return out;
    }

    /// Total arrival rate, always summed from the class rates.
    double total_rate() const {
        double sum = 0.0;
        for (const auto& c : classes_) sum += c.rate;
        return sum;
    }

    TrafficProfile scaled(double factor) const {
        auto r = rates();
        for (auto& x : r) x *= factor;
        return TrafficProfile(std::move(r), names());
    }

private:
    std::vector<ClassSpec> classes_;
};

/// Sliding window over the most recent inter-arrival gaps of one class.
///
/// A window of capacity n becomes full after n+1 arrivals; each further
/// arrival evicts the oldest gap.
class ArrivalWindow {
public:
    explicit ArrivalWindow(std::size_t capacity, ClassIndex cls = ClassIndex{1})
        : class_index_(cls), capacity_(capacity) {
        if (capacity == 0) throw std::domain_error("arrival window capacity must be at least 1");
    }

    void record(double t) {
        if (last_arrival_) {
            if (!(t > *last_arrival_))
                throw OrderingError("arrival at t=" + std::to_string(t) +
                                    " does not follow previous arrival at t=" +
                                    std::to_string(*last_arrival_));
            gaps_.push_back(t - *last_arrival_);
            if (gaps_.size() > capacity_) gaps_.pop_front();
        }
        last_arrival_ = t;
    }

    ClassIndex class_index() const { return class_index_; }
    std::size_t capacity() const { return capacity_; }
    std::size_t gap_count() const { return gaps_.size(); }
    bool full() const { return gaps_.size() == capacity_; }
    std::optional<double> last_arrival() const { return last_arrival_; }

    /// Oldest first.
    std::vector<double> gaps() const { return {gaps_.begin(), gaps_.end()}; }

    double gap_sum() const { return std::accumulate(gaps_.begin(), gaps_.end(), 0.0); }

private:
    ClassIndex class_index_;
    std::size_t capacity_;
    std::deque<double> gaps_;
    std::optional<double> last_arrival_;
};

/// Value-style wrapper around ArrivalWindow::record.
inline ArrivalWindow record_arrival(ArrivalWindow window, double t) {
    window.record(t);
    return window;
}

/// Reciprocal of the mean retained gap.
inline double estimate_rate(const ArrivalWindow& window) {
    if (window.gap_count() == 0)
        throw EstimationUnavailable("class " + std::to_string(window.class_index().value) +
                                    " has no inter-arrival gaps yet");
    return static_cast<double>(window.gap_count()) / window.gap_sum();
}

/// Exponential draw with the given rate that is strictly positive.
template <class Rng>
double sample_exponential(double rate, Rng& rng) {
    std::exponential_distribution<double> dist(rate);
    double x = dist(rng);
    while (!(x > 0.0)) x = dist(rng);
    return x;
}

template <class Rng>
double sample_holding_time(double mu, Rng& rng) {
    if (!(mu > 0.0) || !std::isfinite(mu)) throw std::domain_error("service rate must be positive");
    return sample_exponential(mu, rng);
}

/// Poisson arrival instants in (0, horizon], strictly increasing.
inline std::vector<double> generate_arrivals(double rate, double horizon, std::uint64_t seed) {
    if (!(rate >= 0.0) || !std::isfinite(rate)) throw std::domain_error("arrival rate must be non-negative");
    if (!(horizon > 0.0)) throw std::domain_error("horizon must be positive");
    std::vector<double> out;
    if (rate == 0.0) return out;
    std::mt19937_64 rng(seed);
    double t = 0.0;
    for (;;) {
        double next = t + sample_exponential(rate, rng);
        if (next <= t) next = std::nextafter(t, std::numeric_limits<double>::infinity());
        if (next > horizon) break;
        out.push_back(next);
        t = next;
    }
    return out;
}

}  // namespace qosguard
