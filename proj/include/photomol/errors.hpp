#pragma once

#include <stdexcept>
#include <string>

namespace photomol {

// Bad or inconsistent user-facing configuration (keys, ranges, stability bounds).
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Runtime numerical failure: non-finite state, quadrature non-convergence.
struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

// Operation evaluated outside the regime where its result means anything
// (e.g. transfer efficiency requested before the control field is off).
struct regime_error : std::runtime_error {
    explicit regime_error(const std::string& what) : std::runtime_error(what) {}
};

// Degenerate input (zero pulse, empty history, ...).
struct degenerate_input_error : std::runtime_error {
    explicit degenerate_input_error(const std::string& what) : std::runtime_error(what) {}
};

// Soft-flagged value: carries the result plus an in-regime marker instead of
// throwing, so sweeps can record out-of-regime points as data.
template <class T>
struct Flagged {
    T value{};
    bool in_regime = true;
    std::string note;
};

}  // namespace photomol
