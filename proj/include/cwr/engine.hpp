#ifndef CWR_ENGINE_HPP
#define CWR_ENGINE_HPP

#include "cwr/instance.hpp"
#include "cwr/rational.hpp"

#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cwr {

// Fractional marking engine for caching with reserves. Every page carries
// y = fraction outside the cache, kept as an exact rational. Requests are
// served by continuous (water-filling) eviction, realized here as a loop
// over breakpoints where the candidate set changes.

enum class Classification { Hit, StaleFetch, Clean, PseudoClean };

const char* to_string(Classification c);

class EngineStuck : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EngineState {
    std::vector<Rational> y;          // per universe page; untouched pages sit at 1
    std::vector<char> marked;         // per page
    std::vector<char> stale;          // per page: member of P(i, r_i - 1)
    std::vector<char> isolated;       // per agent, current
    std::vector<char> isolated_at_phase_start;
    int global_phase = 1;             // r0
    std::vector<int> local_phase;     // r_i
    std::vector<std::vector<PageId>> stale_sets;  // P(i, r_i - 1), sorted
    std::size_t t = 0;                // requests processed so far

    Rational x(PageId p) const { return 1 - y[static_cast<std::size_t>(p)]; }
    bool is_marked(PageId p) const { return marked[static_cast<std::size_t>(p)] != 0; }
    bool is_stale(PageId p) const { return stale[static_cast<std::size_t>(p)] != 0; }
    bool is_isolated(AgentId a) const { return isolated[static_cast<std::size_t>(a)] != 0; }
};

// Σ x over the agent's pages.
Rational agent_mass(const EngineState& state, const Problem& problem, AgentId agent);
bool is_tight(const EngineState& state, const Problem& problem, AgentId agent);
int marked_count(const EngineState& state, const Problem& problem, AgentId agent);
Rational total_mass(const EngineState& state);

struct PhaseReset {
    int ended_phase = 0;
    std::vector<AgentId> reset_agents;
    std::vector<AgentId> newly_isolated;
};

struct StepReport {
    std::size_t t = 0;  // 1-based
    PageId page = 0;
    AgentId agent = 0;
    Rational fetch_cost;
    Classification classification = Classification::Hit;
    int phase = 1;                    // global phase in which the request was served
    bool requester_isolated = false;  // at service time
    std::vector<PhaseReset> phase_resets;
    std::vector<std::pair<PageId, Rational>> evictions;
};

struct AgentSnapshot {
    AgentId agent = 0;
    int local_phase = 0;           // the r_i that ended
    std::vector<PageId> previous;  // P(i, r_i - 1)
    std::vector<PageId> current;   // P(i, r_i)
};

struct PhaseRecord {
    int index = 1;
    std::size_t first_t = 1;
    std::size_t last_t = 0;  // inclusive; last_t < first_t means no requests yet
    std::vector<std::size_t> full_misses;  // C(r0)
    std::vector<AgentId> isolated_at_start;  // I(r0 - 1)
    std::vector<AgentId> isolated_at_end;    // I(r0), valid once sealed
    std::vector<AgentSnapshot> resets;
    bool sealed = false;

    std::size_t ell() const { return full_misses.size(); }
    bool contains(std::size_t t) const { return t >= first_t && t <= last_t; }
    const AgentSnapshot* snapshot_of(AgentId agent) const;
};

struct EventLog {
    std::vector<StepReport> steps;
    std::vector<PhaseRecord> phases;  // the last one may be open

    std::size_t sealed_phase_count() const;
    /// Last timestep of the last sealed phase (0 if none is sealed).
    std::size_t sealed_horizon() const;
};

EngineState init_state(const Problem& problem);

enum class EvictionRule {
    IsolatedRequester,  // unmarked pages of the requesting agent only
    NonIsolated,        // unmarked pages of non-tight, non-isolated agents
};

struct WaterfillResult {
    std::vector<std::pair<PageId, Rational>> evictions;  // per-page y increase
    Rational residual;  // deficit that could not be placed; 0 on success
};

/// Computes the evictions that fetch `fetched` in full (x := 1) without
/// mutating `state`. Tightness is evaluated with the fetched page counted in
/// its agent's mass, so the requester never blocks its own eviction.
WaterfillResult waterfill(const EngineState& state, const Problem& problem, PageId fetched,
                          const Rational& deficit, EvictionRule rule);

struct PhaseEnd {
    PhaseReset reset;
    std::vector<AgentSnapshot> snapshots;
    std::vector<AgentId> isolated_at_end;
};

PhaseEnd end_phase(EngineState& state, const Problem& problem);

/// Marks the page; an isolated owner that now holds k_i marked pages becomes
/// non-isolated, at which point all of its unmarked pages must sit at y = 1.
void mark_and_deisolate(EngineState& state, const Problem& problem, PageId page);

enum class PhaseEventPoint { BeforeReset, AfterReset };
using PhaseObserver = std::function<void(const EngineState&, PhaseEventPoint)>;

class Engine {
public:
    explicit Engine(const Problem& problem);

    StepReport serve(PageId page);

    const EngineState& state() const { return state_; }
    const EventLog& log() const { return log_; }
    EventLog release_log() { return std::move(log_); }
    const Problem& problem() const { return problem_; }

    void set_phase_observer(PhaseObserver observer) { observer_ = std::move(observer); }

private:
    void apply(PageId page, const WaterfillResult& wf);

    const Problem& problem_;
    EngineState state_;
    EventLog log_;
    PhaseObserver observer_;
};

struct RunResult {
    EventLog log;
    Rational total_cost;
};

RunResult run_trace(const Problem& problem);

void write_event_csv(std::ostream& out, const EventLog& log, const Problem& problem);
std::string phase_records_json(const EventLog& log, const Problem& problem);

} // namespace cwr

#endif
