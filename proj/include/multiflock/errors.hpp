#pragma once

#include <stdexcept>
#include <string>

namespace mflock {

// Evaluating a quantity outside its mathematical domain (e.g. a singular
// kernel at r = 0, which callers treat as a collision signal).
class DomainError : public std::runtime_error {
public:
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// A quadrature / root-find that failed to reach the requested tolerance.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, double achieved)
        : std::runtime_error(what + " (achieved tolerance " + std::to_string(achieved) + ")"),
          achieved_tolerance(achieved) {}
    double achieved_tolerance;
};

// Two agents of the same flock collided (or the step guard could not keep
// them apart). Carries the offending pair.
class CollisionError : public std::runtime_error {
public:
    CollisionError(const std::string& what, int flock, int agent_i, int agent_j, double t)
        : std::runtime_error(what), flock(flock), agent_i(agent_i), agent_j(agent_j), time(t) {}
    int flock;
    int agent_i;
    int agent_j;
    double time;
};

// State left the finite regime; carries the last good time.
class BlowupError : public std::runtime_error {
public:
    BlowupError(const std::string& what, double last_good_time)
        : std::runtime_error(what), last_good_time(last_good_time) {}
    double last_good_time;
};

} // namespace mflock
