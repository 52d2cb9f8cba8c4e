#include "sitpatch/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "sitpatch/csv.hpp"

namespace sit {

void IntegrationOptions::validate() const {
    if (dt_max <= 0) throw std::invalid_argument("IntegrationOptions: dt_max must be > 0");
    if (rel_tol <= 0 || abs_tol <= 0)
        throw std::invalid_argument("IntegrationOptions: tolerances must be > 0");
    if (t_end <= 0) throw std::invalid_argument("IntegrationOptions: t_end must be > 0");
    if (sample_every <= 0)
        throw std::invalid_argument("IntegrationOptions: sample_every must be > 0");
}

namespace {

struct Target {
    double t;
    bool sample = false;
    bool impulse = false;
    double mass = 0.0;
};

// Sorted union of sample times, impulse times and schedule breakpoints,
// merging entries that coincide up to round-off.
std::vector<Target> build_targets(const ReleaseSchedule& schedule,
                                  const IntegrationOptions& opt) {
    std::vector<Target> targets;
    const double t_end = opt.t_end;

    const auto nsamples = static_cast<std::size_t>(
        std::floor(t_end / opt.sample_every * (1.0 + 1e-12)));
    for (std::size_t i = 0; i <= nsamples; ++i)
        targets.push_back({static_cast<double>(i) * opt.sample_every, true, false, 0.0});

    for (const auto& ev : schedule_impulses_in(schedule, 0.0, t_end))
        targets.push_back({ev.time, false, true, ev.mass});

    if (const auto* pw = std::get_if<PiecewiseConstantRelease>(&schedule))
        for (double bp : pw->breakpoints)
            if (bp > 0 && bp < t_end) targets.push_back({bp, false, false, 0.0});

    targets.push_back({t_end, true, false, 0.0});

    std::sort(targets.begin(), targets.end(),
              [](const Target& a, const Target& b) { return a.t < b.t; });

    std::vector<Target> merged;
    for (const auto& tg : targets) {
        const double eps = 1e-9 * std::max(1.0, tg.t);
        if (!merged.empty() && tg.t - merged.back().t < eps) {
            merged.back().sample |= tg.sample;
            merged.back().impulse |= tg.impulse;
            merged.back().mass += tg.mass;
            if (tg.impulse) merged.back().t = tg.t;  // keep the exact impulse time
        } else {
            merged.push_back(tg);
        }
    }
    return merged;
}

}  // namespace

Trajectory integrate(const ModelParams& params, const ReleaseSchedule& schedule,
                     const SystemState& initial, const IntegrationOptions& options) {
    params.validate();
    validate(schedule);
    options.validate();
    if (!initial.non_negative())
        throw std::domain_error("integrate: initial state has a negative component");

    Trajectory traj;
    if (initial.E1 > params.K1)
        traj.stats.warnings.push_back("E1(0) > K1: invariant region not guaranteed");
    if (initial.E2 > params.K2)
        traj.stats.warnings.push_back("E2(0) > K2: invariant region not guaranteed");

    ode::StepControls controls;
    controls.dt_max = options.dt_max;
    controls.rel_tol = options.rel_tol;
    controls.abs_tol = options.abs_tol;
    controls.clip = options.clip_negative;

    const auto targets = build_targets(schedule, options);
    auto y = initial.to_array();
    ode::StepStats stats;
    double t = 0.0;
    double h = options.dt_max;

    auto record = [&](double time) {
        traj.times.push_back(time);
        traj.states.push_back(SystemState::from_array(y));
    };

    for (const auto& tg : targets) {
        if (tg.t > t) {
            // Release rate is constant between consecutive targets.
            const double rate = schedule_rate_at(schedule, 0.5 * (t + tg.t));
            auto rhs = [&params, rate](const ode::State<8>& s, double) {
                return detail::vector_field_unchecked(SystemState::from_array(s), rate,
                                                      params)
                    .to_array();
            };
            if (options.method == StepperKind::Adaptive)
                ode::advance_adaptive<8>(rhs, y, t, tg.t, controls, stats, h);
            else
                ode::advance_rk4<8>(rhs, y, t, tg.t, controls, stats);
            t = tg.t;
        }
        if (tg.impulse) {
            record(tg.t);  // pre-jump value
            y[3] += tg.mass;
            record(tg.t);  // post-jump value
            traj.impulse_times.push_back(tg.t);
            traj.impulse_indices.push_back(traj.times.size() - 1);
        } else if (tg.sample) {
            record(tg.t);
        }
    }

    traj.stats.steps = stats.steps;
    traj.stats.rejected_steps = stats.rejected;
    traj.stats.clipped_total = stats.clipped;
    return traj;
}

std::optional<double> detect_extinction(const Trajectory& traj, double threshold) {
    if (threshold <= 0) throw std::invalid_argument("detect_extinction: threshold must be > 0");
    if (traj.times.empty()) return std::nullopt;
    // Last sample at or above the threshold; extinction starts just after.
    std::size_t last_above = traj.size();
    for (std::size_t i = traj.size(); i-- > 0;) {
        if (traj.states[i].wild_max() >= threshold) {
            last_above = i;
            break;
        }
    }
    if (last_above == traj.size()) return traj.times.front();
    if (last_above + 1 >= traj.size()) return std::nullopt;
    return traj.times[last_above + 1];
}

std::string to_string(OutcomeKind k) {
    switch (k) {
        case OutcomeKind::Extinction: return "extinction";
        case OutcomeKind::Persistence: return "persistence";
        case OutcomeKind::PeriodicRegime: return "periodic_regime";
        case OutcomeKind::Undetermined: return "undetermined";
    }
    return "undetermined";
}

namespace {

double wild_rel_distance(const SystemState& a, const SystemState& b) {
    static constexpr std::size_t wild[] = {0, 1, 2, 4, 5, 6};
    double num = 0.0, den = 0.0;
    for (auto i : wild) {
        num = std::max(num, std::abs(a[i] - b[i]));
        den = std::max(den, std::abs(b[i]));
    }
    return num / std::max(den, 1e-300);
}

double full_rel_distance(const SystemState& a, const SystemState& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < SystemState::dim; ++i) {
        num = std::max(num, std::abs(a[i] - b[i]));
        den = std::max(den, std::abs(b[i]));
    }
    return num / std::max(den, 1e-300);
}

}  // namespace

OutcomeReport classify_outcome(const ModelParams& params,
                               const ReleaseSchedule& schedule,
                               const SystemState& initial,
                               const IntegrationOptions& options,
                               double extinction_threshold, double settle_tol) {
    const Trajectory traj = integrate(params, schedule, initial, options);

    OutcomeReport report;
    report.terminal_state = traj.final_state();
    report.diagnostics["final_wild_max"] = report.terminal_state.wild_max();
    report.diagnostics["clipped_total"] = traj.stats.clipped_total;

    if (auto te = detect_extinction(traj, extinction_threshold)) {
        report.kind = OutcomeKind::Extinction;
        report.extinction_time = *te;
        return report;
    }

    if (std::holds_alternative<PeriodicImpulsiveRelease>(schedule) &&
        traj.impulse_indices.size() >= 2) {
        const auto n = traj.impulse_indices.size();
        const auto& prev = traj.states[traj.impulse_indices[n - 2]];
        const auto& last = traj.states[traj.impulse_indices[n - 1]];
        const double drift = full_rel_distance(prev, last);
        report.diagnostics["period_drift"] = drift;
        if (drift < settle_tol) report.kind = OutcomeKind::PeriodicRegime;
        return report;
    }

    // Drift of the wild sub-vector over the last 10% of the horizon.
    const double window_start = 0.9 * options.t_end;
    double drift = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i)
        if (traj.times[i] >= window_start)
            drift = std::max(drift, wild_rel_distance(traj.states[i], traj.final_state()));
    report.diagnostics["settle_drift"] = drift;
    if (drift < settle_tol && report.terminal_state.wild_max() > extinction_threshold)
        report.kind = OutcomeKind::Persistence;
    return report;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "t,E1,F1,M1,M1s,E2,F2,M2,M2s,event\n";
    std::size_t next_impulse = 0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const bool is_post_impulse = next_impulse < traj.impulse_indices.size() &&
                                     traj.impulse_indices[next_impulse] == i;
        if (is_post_impulse) ++next_impulse;
        os << csv::fmt(traj.times[i]);
        for (std::size_t c = 0; c < SystemState::dim; ++c)
            os << ',' << csv::fmt(traj.states[i][c]);
        os << ',' << (is_post_impulse ? "impulse" : "") << '\n';
    }
}

}  // namespace sit
