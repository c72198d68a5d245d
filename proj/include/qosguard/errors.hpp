#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace qosguard {

// A timestamp did not advance past the previous arrival of the same class.
class OrderingError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// The arrival window holds no gaps yet; callers fall back to configured rates.
class EstimationUnavailable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// All class rates are zero, so reservation shares are undefined.
class DegenerateRates : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Admission was asked about an occupancy the system cannot be in.
class StateCorruption : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class InvalidMask : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class OutOfSpectrum : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// Configuration problem. `field` is a dotted path such as "system.guard";
// `line` is 0 when the problem is not tied to a single input line.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, int line, const std::string& message)
        : std::runtime_error(format(field, line, message)), field_(std::move(field)), line_(line) {}

    const std::string& field() const noexcept { return field_; }
    int line() const noexcept { return line_; }

private:
    static std::string format(const std::string& field, int line, const std::string& message) {
        std::string out;
        if (line > 0) out += "line " + std::to_string(line) + ": ";
        if (!field.empty()) out += field + ": ";
        return out + message;
    }

    std::string field_;
    int line_;
};

}  // namespace qosguard
