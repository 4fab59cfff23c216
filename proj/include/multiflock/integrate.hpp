#pragma once

#include <limits>
#include <string>
#include <vector>

#include "multiflock/dynamics.hpp"

namespace mflock {

enum class Method { rk4_fixed, rk45_adaptive };

struct IntegratorSpec {
    Method method = Method::rk45_adaptive;
    double dt = 1e-2;   // rk4_fixed step
    double rtol = 1e-8; // rk45_adaptive tolerances
    double atol = 1e-10;
    double t_end = 1.0;
    // Step rejection when any intra-flock pair distance of a singular-kernel
    // flock falls below min_pair_fraction times its start-of-step value.
    // Forced on whenever any phi_alpha is singular.
    bool collision_guard = false;
    double min_pair_fraction = 0.5;

    void validate() const;
};

enum class EventKind { collision_near_miss, step_rejected, blowup_suspected };

struct Event {
    double time = 0.0;
    EventKind kind = EventKind::step_rejected;
    std::string payload;
};

struct EventLog {
    std::vector<Event> events; // times non-decreasing
};

struct RunStats {
    long steps = 0;
    long rejected = 0;
    double min_accepted_step = std::numeric_limits<double>::infinity();
    double max_accepted_step = 0.0;
    std::uint64_t rhs_evals = 0;
};

struct IntegrationResult {
    std::vector<MultiFlockState> samples; // one per requested sample time
    EventLog log;
    RunStats stats;
};

// Integrates the master system from state0 and returns snapshots at the
// requested (sorted, within [0, t_end]) times. Throws BlowupError when the
// state leaves the finite regime and CollisionError when the collision guard
// cannot keep a singular-kernel pair separated.
IntegrationResult integrate(const MultiFlockState& state0, const ModelParams& params,
                            const IntegratorSpec& ispec, const std::vector<double>& sample_times);

// Fixed-step classical RK4 at dt_ref; the tests' ground-truth oracle (run it
// at a step at most 1/8 of the main run's smallest accepted step).
std::vector<MultiFlockState> reference_integrate(const MultiFlockState& state0,
                                                 const ModelParams& params, double dt_ref,
                                                 double t_end,
                                                 const std::vector<double>& sample_times);

struct PairMin {
    double dist = std::numeric_limits<double>::infinity(); // +inf for N = 1
    int i = -1;
    int j = -1;
};

// Exact minimum over intra-flock pairs, one entry per flock.
std::vector<PairMin> min_pair_distance(const MultiFlockState& state);

} // namespace mflock
