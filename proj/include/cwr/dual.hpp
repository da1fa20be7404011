#ifndef CWR_DUAL_HPP
#define CWR_DUAL_HPP

#include "cwr/engine.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cwr {

// Dual-fitting certificate for the fractional marking engine. The dual has
// α(t) for the capacity constraint at time t, β(t,i) for agent i's reserve
// at time t, and γ(q,a) for the interval between the a-th and (a+1)-th
// requests of page q.

enum class DualCheck { CSet, PhaseSums, Stage1Delta, Stage2Delta, Snapshot };

class DualInconsistency : public std::runtime_error {
public:
    DualInconsistency(DualCheck check, const std::string& what) : std::runtime_error(what), check_(check) {}
    DualCheck check() const { return check_; }

private:
    DualCheck check_;
};

// Request times per page; t_{q,0} = 0 and a(q,t) counts requests to q at
// times <= t.
class RequestIndex {
public:
    explicit RequestIndex(const Problem& problem);

    const std::vector<std::size_t>& times(PageId q) const { return times_[static_cast<std::size_t>(q)]; }
    int ordinal(PageId q, std::size_t t) const;

private:
    std::vector<std::vector<std::size_t>> times_;
};

struct DualSolution {
    std::vector<Rational> alpha;                          // indexed by t, slot 0 unused
    std::map<std::pair<std::size_t, AgentId>, Rational> beta;
    std::map<std::pair<PageId, int>, Rational> gamma;

    explicit DualSolution(std::size_t horizon = 0) : alpha(horizon + 1) {}

    Rational beta_at(std::size_t t, AgentId i) const;
    Rational gamma_at(PageId q, int a) const;
};

struct CSet {
    std::vector<std::size_t> C;
    std::size_t ell = 0;
    // Closed form summing over agents non-isolated at both ends plus agents
    // that left isolation during the phase.
    long closed_form = 0;
    // The same plus the clean requests of agents that entered isolation at
    // the end of the phase; these count toward C but not toward closed_form.
    long closed_form_with_newly_isolated = 0;
};

/// Throws DualInconsistency unless ell equals closed_form_with_newly_isolated.
CSet compute_C(const PhaseRecord& phase, const EventLog& log, const Problem& problem);

/// First-stage update for a sealed phase with ell >= 1. Returns the exact
/// objective change and throws if it differs from the stale-drop count or if
/// the per-phase α and β sums are not exactly 1.
Rational update_stage1(DualSolution& dual, const PhaseRecord& phase, const Problem& problem,
                       const RequestIndex& index);

/// Second-stage update at the end of `phase` for agents that were isolated
/// at its start and are not at its end; moves their β mass from `previous`
/// into γ. `previous` is null for the first phase.
Rational update_stage2(DualSolution& dual, const PhaseRecord& phase, const PhaseRecord* previous,
                       const Problem& problem, const RequestIndex& index);

Rational dual_objective(const DualSolution& dual, const Problem& problem);

/// Sum over sealed phases of the stale-drop and de-isolation terms. With
/// skip_empty_phases, terms whose updates never ran (a phase with empty C,
/// or a de-isolation whose previous phase had empty C) are left out.
Rational dual_closed_form(const EventLog& log, const Problem& problem, bool skip_empty_phases);

struct SlackEntry {
    PageId page = 0;
    int a = 0;
    Rational slack;
};

struct FeasibilityReport {
    Rational max_slack;           // over all a >= 0
    Rational max_slack_positive;  // over a >= 1 only
    std::vector<SlackEntry> violations;  // slack > bound
    std::size_t constraints = 0;
};

inline const Rational kSlackBound = Rational(5);

/// Intervals are truncated at `horizon`; only ordinals up to a(q, horizon)
/// are checked.
FeasibilityReport check_feasibility(const DualSolution& dual, const Problem& problem, const RequestIndex& index,
                                    std::size_t horizon);

struct PhaseDelta {
    int phase = 0;
    std::size_t ell = 0;
    long closed_form = 0;
    long closed_form_with_newly_isolated = 0;
    Rational stage1;
    Rational stage2;
    bool skipped = false;  // ell == 0
};

struct Certificate {
    std::size_t horizon = 0;
    Rational alg_cost;    // cost through the horizon
    Rational total_cost;  // whole trace
    Rational dual_value;
    Rational closed_form;            // every phase counted
    Rational closed_form_effective;  // phases with empty C left out
    Rational lp_lower_bound;  // dual / 5
    Rational max_slack;
    Rational max_slack_positive;
    double ratio_bound = 0;  // alg_cost / lp_lower_bound; infinite when the bound is 0
    double cost_rhs = 0;     // 2 ln(1+k) (mk + dual)
    std::vector<PhaseDelta> phases;
    long closed_form_mismatches = 0;  // phases where ell differs from closed_form
    long skipped_phases = 0;
    std::vector<std::string> failures;

    // per-check outcome, for reports that break the certificate down
    bool slack_ok = true;
    bool phase_sums_ok = true;
    bool stage_deltas_ok = true;
    bool c_set_ok = true;
    bool objective_ok = true;
    bool pseudo_clean_ok = true;
    bool cost_ok = true;

    bool valid() const { return failures.empty(); }
};

/// Builds the dual through the last sealed phase and runs every check.
/// Hard inconsistencies are caught and recorded as failures.
Certificate certify(const EventLog& log, const Rational& total_cost, const Problem& problem);

/// Like certify but also returns the dual for further inspection.
Certificate certify(const EventLog& log, const Rational& total_cost, const Problem& problem, DualSolution& dual);

std::string to_json(const Certificate& cert);

} // namespace cwr

#endif
