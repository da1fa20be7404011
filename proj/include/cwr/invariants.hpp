#ifndef CWR_INVARIANTS_HPP
#define CWR_INVARIANTS_HPP

#include "cwr/engine.hpp"

#include <string>
#include <vector>

namespace cwr {

struct InvariantViolation {
    std::size_t t = 0;
    std::string what;
};

/// Static state invariants: exact capacity, reserves, marked pages integral,
/// equal y across an agent's unmarked stale pages, isolated agents tight,
/// and every y either 0 or at least 1/k.
std::vector<std::string> check_state(const EngineState& state, const Problem& problem);

// Step-to-step structural properties of the engine: the frontier value h*
// (non-decreasing within a phase), the isolated-agent dichotomy, locality of
// evictions for isolated agents, and marks at phase boundaries.
class InvariantMonitor {
public:
    explicit InvariantMonitor(const Problem& problem);

    void before_step(const EngineState& state);
    void on_phase_event(const EngineState& state, PhaseEventPoint point);
    void after_step(const EngineState& state, const StepReport& report);

    const std::vector<InvariantViolation>& violations() const { return violations_; }

private:
    void fail(std::string what);
    void check_frontier(const EngineState& state);
    void check_dichotomy(const EngineState& state);

    const Problem& problem_;
    std::size_t t_ = 0;
    std::vector<Rational> y_before_;
    std::vector<char> isolated_before_;
    int frontier_phase_ = 0;
    bool has_frontier_ = false;
    Rational frontier_;
    std::vector<InvariantViolation> violations_;
};

struct CheckedRun {
    RunResult run;
    std::vector<InvariantViolation> violations;
};

/// Runs the engine with the monitor attached after every step.
CheckedRun run_checked(const Problem& problem);

} // namespace cwr

#endif
