#ifndef CWR_ACCOUNTING_HPP
#define CWR_ACCOUNTING_HPP

#include "cwr/engine.hpp"

#include <string>
#include <vector>

namespace cwr {

// Absolute tolerance for every comparison that involves ln. Everything else
// in the library is exact.
inline constexpr double kPotentialEps = 1e-9;

/// phi(h) = 2h ln(1 + kh). Throws std::domain_error outside [0, 1].
double phi(const Rational& h, int k);
double phi(double h, int k);
/// Closed-form derivative 2(1 - 1/(1+kh) + ln(1+kh)).
double phi_prime(double h, int k);

struct PotentialSnapshot {
    std::size_t t = 0;
    double psi = 0;
    std::vector<std::pair<PageId, double>> terms;  // unmarked stale pages only
};

PotentialSnapshot potential(const EngineState& state, const Problem& problem);
double potential_value(const EngineState& state, const Problem& problem);

struct StepPotential {
    std::size_t t = 0;
    double before = 0;
    double after = 0;
    bool reset = false;
    double pre_reset = 0;   // just before the phase end inside this step
    double post_reset = 0;  // just after it

    // Change attributed to serving the request; the phase-end jump is excluded.
    double step_delta() const { return reset ? (after - post_reset) + (pre_reset - before) : after - before; }
    double phase_drop() const { return reset ? post_reset - pre_reset : 0.0; }
};

// Records Ψ around every step. Hook before_step/after_step around
// Engine::serve and forward the engine's phase observer to on_phase_event.
class PotentialTracker {
public:
    explicit PotentialTracker(const Problem& problem) : problem_(problem) {}

    void before_step(const EngineState& state);
    void on_phase_event(const EngineState& state, PhaseEventPoint point);
    void after_step(const EngineState& state, const StepReport& report);

    const std::vector<StepPotential>& steps() const { return steps_; }

private:
    const Problem& problem_;
    StepPotential current_;
    std::vector<StepPotential> steps_;
};

struct AccountingViolation {
    std::size_t t = 0;
    std::string what;
};

/// Per-step potential lemma (cost <= ΔΨ for cost < 1), the Clean and
/// PseudoClean cases, and the bound 0 <= Ψ <= 2mk ln(1+k).
std::vector<AccountingViolation> check_step_lemma(const EventLog& log, const std::vector<StepPotential>& potentials,
                                                  const Problem& problem);

/// ΔΨ at each phase end equals -2 ln(1+k) times the number of stale pages
/// dropped by the agents that reset.
std::vector<AccountingViolation> check_phase_drops(const EventLog& log, const std::vector<StepPotential>& potentials,
                                                   const Problem& problem);

/// phi(h) >= h and phi'(h) >= 1 + 2 ln(1+kh) on a grid of h in [1/k, 1].
std::vector<AccountingViolation> check_phi_facts(int k, int samples_per_unit = 16);

struct CostBoundReport {
    std::size_t horizon = 0;  // last sealed timestep
    Rational lhs;             // cost through the horizon
    Rational tail_cost;       // cost after the horizon, not covered by the bound
    long pseudo_clean_count = 0;
    long stale_eviction_sum = 0;
    double rhs = 0;
    double margin = 0;  // rhs - lhs
    bool holds = true;
};

CostBoundReport check_cost_bound(const EventLog& log, const Problem& problem);
std::string to_json(const CostBoundReport& report);

struct AccountedRun {
    RunResult run;
    std::vector<StepPotential> potentials;
};

AccountedRun run_accounted(const Problem& problem);

} // namespace cwr

#endif
