#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sitpatch/model.hpp"
#include "sitpatch/ode.hpp"

// Time integration of the two-patch system under a release schedule, with
// steps aligned exactly to impulse times and schedule breakpoints, and
// long-run outcome classification (extinction / persistence / periodic).

namespace sit {

enum class StepperKind { Adaptive, FixedStep };

struct IntegrationOptions {
    StepperKind method = StepperKind::Adaptive;
    double dt_max = 1.0;       // days
    double rel_tol = 1e-8;     // adaptive mode
    double abs_tol = 1e-10;    // adaptive mode, in individuals
    double t_end = 2000.0;     // days
    double sample_every = 1.0; // output thinning, days
    bool clip_negative = true;

    void validate() const;
};

struct IntegrationStats {
    std::size_t steps = 0;
    std::size_t rejected_steps = 0;
    double clipped_total = 0.0;
    std::vector<std::string> warnings;
};

// Sampled solution. Times are increasing; each impulse contributes two
// samples at the same time coordinate, pre-jump then post-jump.
struct Trajectory {
    std::vector<double> times;
    std::vector<SystemState> states;
    std::vector<double> impulse_times;
    std::vector<std::size_t> impulse_indices;  // index of each post-jump sample
    IntegrationStats stats;

    std::size_t size() const { return times.size(); }
    const SystemState& final_state() const { return states.back(); }
};

// Integrates over [0, t_end]. Impulses add their mass to M1s (releases
// happen in patch 1 only). Throws ode::IntegrationError on step-size
// underflow and std::domain_error on negative initial data.
Trajectory integrate(const ModelParams& params, const ReleaseSchedule& schedule,
                     const SystemState& initial, const IntegrationOptions& options);

// Earliest sample time after which every wild component stays below
// `threshold` through the end of the trajectory.
std::optional<double> detect_extinction(const Trajectory& traj,
                                        double threshold = 1e-2);

enum class OutcomeKind { Extinction, Persistence, PeriodicRegime, Undetermined };

std::string to_string(OutcomeKind k);

struct OutcomeReport {
    OutcomeKind kind = OutcomeKind::Undetermined;
    std::optional<double> extinction_time;
    SystemState terminal_state;
    std::map<std::string, double> diagnostics;
};

// Integrates and classifies the long-run outcome. Extinction wins over the
// other labels; persistence requires the wild sub-vector to settle above
// the extinction threshold; periodic schedules are tested on the
// post-impulse period map instead.
OutcomeReport classify_outcome(const ModelParams& params,
                               const ReleaseSchedule& schedule,
                               const SystemState& initial,
                               const IntegrationOptions& options,
                               double extinction_threshold = 1e-2,
                               double settle_tol = 1e-6);

// CSV export, header t,E1,F1,M1,M1s,E2,F2,M2,M2s,event. Post-impulse rows
// carry event = "impulse".
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace sit
