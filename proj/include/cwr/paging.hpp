#ifndef CWR_PAGING_HPP
#define CWR_PAGING_HPP

#include "cwr/instance.hpp"
#include "cwr/rational.hpp"

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace cwr {

// Plain paging (one agent, no reserve): randomized marking and its
// fractional counterpart. Both run on a Problem with m = 1 and k_0 = 0.

class PagingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void require_plain_paging(const Problem& problem);

struct RmState {
    std::vector<char> in_cache;
    std::vector<char> marked;
    int phase = 1;
};

RmState rm_init(const Problem& problem);
/// Returns true on a miss. Evicts a uniformly random unmarked cached page.
bool rm_step(RmState& state, PageId page, std::mt19937_64& rng);

struct FmState {
    int k = 0;
    std::vector<Rational> y;   // fraction outside the cache
    std::vector<char> marked;
    std::vector<char> stale;   // member of P^{r-1}
    int phase = 1;
};

FmState fm_init(const Problem& problem);
/// True if serving `page` must first close the phase: the page is not fully
/// cached and no unmarked page is left to evict.
bool fm_phase_end_needed(const FmState& state, PageId page);
/// Closes the phase; returns ℓ = |P^r \ P^{r-1}| of the phase that ended.
long fm_end_phase(FmState& state);
/// Ends the phase if needed, then fetches the page and raises every other
/// unmarked cached page uniformly. Returns the fetch cost y_p.
Rational fm_step(FmState& state, PageId page);

double fm_potential(const FmState& state);

struct FmStepRecord {
    std::size_t t = 0;
    Rational cost;
    int phase = 1;
    double psi_before = 0, psi_after = 0;
    bool phase_ended = false;
    double phase_drop = 0;
    long ended_ell = 0;
};

struct FmRun {
    Rational cost;
    std::vector<FmStepRecord> steps;
    std::vector<std::vector<Rational>> y_after;  // y after every step
    std::vector<long> ell;                       // per phase, the open one last
    long sum_ell() const;
};

FmRun run_fm(const Problem& problem);

/// Number of misses of one randomized marking run.
long rm_cost(const Problem& problem, std::uint64_t seed);

/// Exact distribution over every random choice of randomized marking; entry
/// [t][p] is Pr[p is outside the cache after step t+1]. Requires T <= 10 and
/// k <= 3.
std::vector<std::vector<Rational>> rm_eviction_marginals(const Problem& problem);
Rational rm_expected_cost_exact(const Problem& problem);

struct FmBoundReport {
    double lhs = 0;
    double rhs = 0;
    long sum_ell = 0;
    std::vector<std::string> violations;
    bool holds() const { return violations.empty(); }
};

/// Cost bound 2k ln(1+k) + (1 + 2 ln(1+k)) Σℓ, the per-step lemma and the
/// per-phase drop -2ℓ ln(1+k).
FmBoundReport check_fm_bound(const FmRun& run, int k);

} // namespace cwr

#endif
