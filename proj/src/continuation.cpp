#include "sitpatch/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <stdexcept>
#include <thread>

namespace sit {

namespace {

constexpr double kPositiveFloor = 1e-6;  // wild load below this is "not positive"

double state_inf_norm(const SystemState& s) {
    double m = 0;
    for (std::size_t i = 0; i < SystemState::dim; ++i) m = std::max(m, std::abs(s[i]));
    return m;
}

double state_distance(const SystemState& a, const SystemState& b) {
    double m = 0;
    for (std::size_t i = 0; i < SystemState::dim; ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

WildEquilibrium wild_part(const SystemState& s) {
    return {s.E1, s.F1, s.M1, s.E2, s.F2, s.M2};
}

}  // namespace

BranchResult continue_branch(const ModelParams& params, double lambda_start,
                             double lambda_end, const ContinuationOptions& opt) {
    params.validate();
    if (!(lambda_start < lambda_end))
        throw std::invalid_argument("continue_branch: requires lambda_start < lambda_end");
    if (!(opt.step0 > opt.step_min && opt.step_min > 0))
        throw std::invalid_argument("continue_branch: requires step0 > step_min > 0");

    BranchResult result;
    const auto start_roots =
        controlled_equilibria(params, lambda_start, default_equilibrium_seeds(params));

    const ControlledEquilibrium* pick = nullptr;
    for (const auto& root : start_roots.roots) {
        if (root.state.wild_max() <= kPositiveFloor) continue;
        if (!pick) {
            pick = &root;
            continue;
        }
        const bool larger = root.state.E1 + root.state.E2 > pick->state.E1 + pick->state.E2;
        if ((opt.branch == BranchSelect::Stable) == larger) pick = &root;
    }
    if (!pick) {
        result.error = "no positive equilibrium at lambda_start";
        return result;
    }

    ControlledEquilibrium current = *pick;
    double lambda = lambda_start;
    result.points.push_back({lambda, current, 0.0});

    double step = opt.step0;
    double fail_min = std::numeric_limits<double>::infinity();
    while (lambda < lambda_end - 1e-12) {
        step = std::min(step, lambda_end - lambda);
        const double candidate = lambda + step;
        const auto attempt =
            controlled_equilibria(params, candidate, {wild_part(current.state)});

        bool ok = false;
        if (!attempt.roots.empty()) {
            const auto& root = attempt.roots.front();
            const double displacement = state_distance(root.state, current.state);
            const double cap = 0.6 * state_inf_norm(current.state) + 2.0;
            ok = root.state.wild_max() > kPositiveFloor && displacement <= cap;
            if (ok) {
                lambda = candidate;
                current = root;
                result.points.push_back({lambda, current, step});
                step = std::min(step * 1.5, opt.step0);
                fail_min = std::numeric_limits<double>::infinity();
            }
        }
        if (!ok) {
            fail_min = std::min(fail_min, candidate);
            step *= 0.5;
            if (step < opt.step_min) {
                result.fold_estimate = lambda;
                result.fold_gap = fail_min - lambda;
                break;
            }
        }
    }
    return result;
}

std::string to_string(CriticalMethod m) {
    return m == CriticalMethod::FoldContinuation ? "fold_continuation"
                                                 : "simulation_bisection";
}

namespace {

ReleaseSchedule make_schedule(const ScheduleKind& kind, double rate) {
    if (kind.periodic) return PeriodicImpulsiveRelease{rate, kind.period};
    return ConstantRelease{rate};
}

}  // namespace

CriticalResult critical_lambda_by_simulation(const ModelParams& params,
                                             const ScheduleKind& kind, double lo,
                                             double hi, const BisectionOptions& opt) {
    params.validate();
    if (!(lo < hi))
        throw std::invalid_argument("critical_lambda_by_simulation: requires lo < hi");
    const auto plus = wild_positive_equilibrium(params);
    if (!plus)
        throw std::runtime_error(
            "critical_lambda_by_simulation: no uncontrolled positive equilibrium "
            "(N <= 1); extinction needs no releases");
    SystemState initial{plus->E1, plus->F1, plus->M1, 0.0,
                        plus->E2, plus->F2, plus->M2, 0.0};

    int evaluations = 0;
    auto extinct = [&](double rate) {
        ++evaluations;
        const auto traj = integrate(params, make_schedule(kind, rate), initial, opt.sim);
        return detect_extinction(traj, opt.extinction_threshold).has_value();
    };

    const auto lo_report = classify_outcome(params, make_schedule(kind, lo), initial,
                                            opt.sim, opt.extinction_threshold);
    const auto hi_report = classify_outcome(params, make_schedule(kind, hi), initial,
                                            opt.sim, opt.extinction_threshold);
    evaluations += 2;
    const bool lo_ok = lo_report.kind == OutcomeKind::Persistence ||
                       lo_report.kind == OutcomeKind::PeriodicRegime;
    const bool hi_ok = hi_report.kind == OutcomeKind::Extinction;
    if (!lo_ok || !hi_ok)
        throw InvalidBracketError(
            "critical_lambda_by_simulation: invalid bracket (lo is " +
                to_string(lo_report.kind) + ", hi is " + to_string(hi_report.kind) + ")",
            lo_report, hi_report);

    while (hi - lo > opt.tol) {
        const double mid = 0.5 * (lo + hi);
        (extinct(mid) ? hi : lo) = mid;
    }

    CriticalResult result;
    result.lambda_crit = 0.5 * (lo + hi);
    result.lo = lo;
    result.hi = hi;
    result.method = CriticalMethod::SimulationBisection;
    result.evaluations = evaluations;
    result.kind = kind;
    return result;
}

CriticalResult critical_lambda_by_fold(const ModelParams& params,
                                       const ContinuationOptions& opt) {
    const double lambda_end = 1.05 * lambda_upper_bound_constant(params);
    const auto branch = continue_branch(params, 0.1, lambda_end, opt);
    if (!branch.error.empty())
        throw std::runtime_error("critical_lambda_by_fold: " + branch.error);
    if (!branch.fold_estimate)
        throw std::runtime_error(
            "critical_lambda_by_fold: branch reached the analytic bound without a fold");

    CriticalResult result;
    result.lo = *branch.fold_estimate;
    result.hi = *branch.fold_estimate + branch.fold_gap.value_or(2.0 * opt.step_min);
    result.lambda_crit = 0.5 * (result.lo + result.hi);
    result.method = CriticalMethod::FoldContinuation;
    result.evaluations = static_cast<int>(branch.points.size());
    result.kind = ScheduleKind{false, 0.0};
    return result;
}

namespace {

// Static index partition over `threads` workers; results land by index, so
// assembly order never depends on scheduling.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    unsigned workers = threads > 0 ? static_cast<unsigned>(threads)
                                   : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, n > 0 ? static_cast<unsigned>(n) : 1u);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) fn(i);
        });
    for (auto& t : pool) t.join();
}

// Critical rate for one diffusion setting; NaN when the cell fails.
double cell_critical_lambda(ModelParams p, double d12, double d21,
                            CriticalMethod method) {
    p.d12 = d12;
    p.d21 = d21;
    try {
        if (method == CriticalMethod::FoldContinuation)
            return critical_lambda_by_fold(p).lambda_crit;
        const double hi = 1.02 * lambda_upper_bound_constant(p);
        return critical_lambda_by_simulation(p, ScheduleKind{false, 0.0}, 1.0, hi)
            .lambda_crit;
    } catch (const std::exception&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

}  // namespace

std::vector<double> log_spaced(double lo, double hi, std::size_t count) {
    if (!(lo > 0 && hi > lo) || count < 2)
        throw std::invalid_argument("log_spaced: requires 0 < lo < hi and count >= 2");
    std::vector<double> grid(count);
    const double ratio = std::log(hi / lo);
    for (std::size_t i = 0; i < count; ++i)
        grid[i] = lo * std::exp(ratio * static_cast<double>(i) /
                                static_cast<double>(count - 1));
    grid.front() = lo;
    grid.back() = hi;
    return grid;
}

HeatmapGrid diffusion_heatmap(const ModelParams& params,
                              const std::vector<double>& d12_values,
                              const std::vector<double>& d21_values,
                              CriticalMethod method, int threads) {
    for (double d : d12_values)
        if (!(d > 0)) throw std::invalid_argument("diffusion_heatmap: d12 grid must be > 0");
    for (double d : d21_values)
        if (!(d > 0)) throw std::invalid_argument("diffusion_heatmap: d21 grid must be > 0");

    HeatmapGrid grid;
    grid.d12_values = d12_values;
    grid.d21_values = d21_values;
    grid.lambda_crit.assign(d12_values.size() * d21_values.size(),
                            std::numeric_limits<double>::quiet_NaN());

    const std::size_t n2 = d21_values.size();
    parallel_for(grid.lambda_crit.size(), threads, [&](std::size_t idx) {
        const std::size_t i = idx / n2, j = idx % n2;
        grid.lambda_crit[idx] =
            cell_critical_lambda(params, d12_values[i], d21_values[j], method);
    });
    return grid;
}

RatioSweepResult ratio_sweep(const ModelParams& params, double d12_fixed,
                             const std::vector<double>& eta_grid,
                             CriticalMethod method, int threads) {
    if (!(d12_fixed > 0))
        throw std::invalid_argument("ratio_sweep: d12_fixed must be > 0");
    for (std::size_t i = 0; i + 1 < eta_grid.size(); ++i)
        if (!(eta_grid[i] < eta_grid[i + 1]))
            throw std::invalid_argument("ratio_sweep: eta grid must be ascending");
    if (eta_grid.empty() || eta_grid.front() <= 0)
        throw std::invalid_argument("ratio_sweep: eta grid must be positive");

    RatioSweepResult result;
    result.eta = eta_grid;
    result.lambda_crit.assign(eta_grid.size(), std::numeric_limits<double>::quiet_NaN());
    parallel_for(eta_grid.size(), threads, [&](std::size_t i) {
        result.lambda_crit[i] = cell_critical_lambda(params, d12_fixed,
                                                     eta_grid[i] * d12_fixed, method);
    });

    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < eta_grid.size(); ++i) {
        if (std::isfinite(result.lambda_crit[i]) && result.lambda_crit[i] > best) {
            best = result.lambda_crit[i];
            result.eta_argmax = eta_grid[i];
        }
    }
    return result;
}

AuditCase make_audit_case(const ModelParams& base, const std::string& coord,
                          double factor) {
    if (!(factor > 0)) throw std::invalid_argument("make_audit_case: factor must be > 0");
    ModelParams perturbed = base;
    bool death_rate_coord;  // true for coordinates ordered upward (wild deaths)
    if (coord == "mu_E") {
        perturbed.mu_E *= factor;
        death_rate_coord = true;
    } else if (coord == "mu_F") {
        perturbed.mu_F *= factor;
        death_rate_coord = true;
    } else if (coord == "mu_M") {
        perturbed.mu_M *= factor;
        death_rate_coord = true;
    } else if (coord == "mu_s") {
        perturbed.mu_s *= factor;
        death_rate_coord = false;
    } else if (coord == "b") {
        perturbed.b *= factor;
        death_rate_coord = false;
    } else if (coord == "K1") {
        perturbed.K1 *= factor;
        death_rate_coord = false;
    } else if (coord == "K2") {
        perturbed.K2 *= factor;
        death_rate_coord = false;
    } else {
        throw std::invalid_argument("make_audit_case: unknown coordinate " + coord);
    }
    AuditCase c;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s*%g", coord.c_str(), factor);
    c.name = buf;
    // Wild death rates order upward; mu_s, b, K1, K2 order downward.
    const bool perturbed_is_upper = death_rate_coord == (factor > 1.0);
    c.lower = perturbed_is_upper ? base : perturbed;
    c.upper = perturbed_is_upper ? perturbed : base;
    return c;
}

AuditReport monotonicity_audit(const ModelParams& base,
                               const std::vector<AuditCase>& cases,
                               CriticalMethod method, double tol) {
    base.validate();
    AuditReport report;
    report.tol = tol;
    for (const auto& c : cases) {
        AuditEntry entry;
        entry.name = c.name;
        entry.lambda_lower = cell_critical_lambda(c.lower, c.lower.d12, c.lower.d21, method);
        entry.lambda_upper = cell_critical_lambda(c.upper, c.upper.d12, c.upper.d21, method);
        entry.ok = std::isfinite(entry.lambda_lower) && std::isfinite(entry.lambda_upper) &&
                   entry.lambda_lower >= entry.lambda_upper - tol;
        if (!entry.ok) ++report.violations;
        report.entries.push_back(entry);
    }
    return report;
}

}  // namespace sit
