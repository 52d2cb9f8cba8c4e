#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sitpatch/equilibria.hpp"
#include "sitpatch/integrate.hpp"
#include "sitpatch/model.hpp"

// Parameter sweeps in the release rate: natural-parameter continuation of
// equilibrium branches with fold detection, simulation-based bisection for
// critical rates, the diffusion-rate heatmap, the ratio sweep, and the
// parameter-monotonicity audit.

namespace sit {

struct BranchPoint {
    double lambda = 0;
    ControlledEquilibrium equilibrium;
    double step_used = 0;
};

enum class BranchSelect { Stable, Unstable };

struct ContinuationOptions {
    double step0 = 5.0;     // initial rate increment
    double step_min = 1e-3; // step collapse below this declares a fold
    BranchSelect branch = BranchSelect::Stable;
};

struct BranchResult {
    std::vector<BranchPoint> points;
    std::optional<double> fold_estimate;  // last rate with a converged root
    std::optional<double> fold_gap;       // distance to the first failed rate
    std::string error;                    // set when no branch could be started
};

// Traces the positive-equilibrium branch from lambda_start towards
// lambda_end, re-solving by Newton from the previous root and halving the
// step on failure. A fold is declared when the step collapses below
// step_min.
BranchResult continue_branch(const ModelParams& params, double lambda_start,
                             double lambda_end, const ContinuationOptions& opt = {});

enum class CriticalMethod { FoldContinuation, SimulationBisection };

std::string to_string(CriticalMethod m);

// Release-schedule family whose critical rate is being located.
struct ScheduleKind {
    bool periodic = false;
    double period = 10.0;  // used when periodic
};

struct CriticalResult {
    double lambda_crit = 0;
    double lo = 0, hi = 0;  // bracket, lo < lambda_crit <= hi
    CriticalMethod method = CriticalMethod::SimulationBisection;
    int evaluations = 0;
    ScheduleKind kind;
};

struct BisectionOptions {
    double tol = 0.5;
    double extinction_threshold = 1e-2;
    IntegrationOptions sim;  // defaults: adaptive, t_end = 2000
};

// Raised when the bisection bracket endpoints classify identically.
class InvalidBracketError : public std::runtime_error {
  public:
    InvalidBracketError(const std::string& what, OutcomeReport lo, OutcomeReport hi)
        : std::runtime_error(what), lo_report(std::move(lo)), hi_report(std::move(hi)) {}
    OutcomeReport lo_report, hi_report;
};

// Bisects [lo, hi] on the binary extinction outcome of a full simulation
// started from the uncontrolled positive equilibrium.
CriticalResult critical_lambda_by_simulation(const ModelParams& params,
                                             const ScheduleKind& kind, double lo,
                                             double hi,
                                             const BisectionOptions& opt = {});

// Critical rate from the fold of the constant-release equilibrium branch.
// Throws std::runtime_error if no fold is found below the analytic bound.
CriticalResult critical_lambda_by_fold(const ModelParams& params,
                                       const ContinuationOptions& opt = {});

struct HeatmapGrid {
    std::vector<double> d12_values;
    std::vector<double> d21_values;
    // Row-major over (d12, d21); per-cell failures are quiet NaN.
    std::vector<double> lambda_crit;

    double at(std::size_t i, std::size_t j) const {
        return lambda_crit[i * d21_values.size() + j];
    }
};

// Critical rate per (d12, d21) cell; cells run as independent tasks on
// `threads` workers and are assembled by index.
HeatmapGrid diffusion_heatmap(const ModelParams& params,
                              const std::vector<double>& d12_values,
                              const std::vector<double>& d21_values,
                              CriticalMethod method, int threads = 0);

// Log-spaced grid helper for the default heatmap axes.
std::vector<double> log_spaced(double lo, double hi, std::size_t count);

struct RatioSweepResult {
    std::vector<double> eta;          // d21 = eta * d12_fixed
    std::vector<double> lambda_crit;  // NaN on per-point failure
    double eta_argmax = 0;
};

RatioSweepResult ratio_sweep(const ModelParams& params, double d12_fixed,
                             const std::vector<double>& eta_grid,
                             CriticalMethod method, int threads = 0);

// One ordered parameter pair for the monotonicity audit; `lower` must
// precede `upper` in the biological-parameter order (larger wild death
// rates, smaller sterile death rate, birth rate and capacities).
struct AuditCase {
    std::string name;
    ModelParams lower;
    ModelParams upper;
};

struct AuditEntry {
    std::string name;
    double lambda_lower = 0;  // critical rate at the ⊴-smaller parameters
    double lambda_upper = 0;
    bool ok = false;          // lambda_lower >= lambda_upper - tol
};

struct AuditReport {
    std::vector<AuditEntry> entries;
    int violations = 0;
    double tol = 0;
};

AuditReport monotonicity_audit(const ModelParams& base,
                               const std::vector<AuditCase>& cases,
                               CriticalMethod method, double tol);

// Builds an audit case perturbing one coordinate of `base` by `factor`,
// oriented so the pair is ordered. Valid names: mu_E, mu_F, mu_M, mu_s, b,
// K1, K2.
AuditCase make_audit_case(const ModelParams& base, const std::string& coord,
                          double factor);

}  // namespace sit
