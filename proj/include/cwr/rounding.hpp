#ifndef CWR_ROUNDING_HPP
#define CWR_ROUNDING_HPP

#include "cwr/engine.hpp"

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace cwr {

// Online rounding of the fractional engine into N integral cache states.
// The fractional vector is first floored to multiples of 1/N along an
// agent-contiguous page order, then the ensemble is moved to the new
// marginals one (increase, decrease) pair at a time.

class RoundingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DiscreteVector {
    long N = 1;
    std::vector<long> counts;  // per page, x̃_p = counts_p / N

    Rational value(PageId p) const { return make_rational(counts[static_cast<std::size_t>(p)], N); }
};

/// Dense page ids are already agent-contiguous and ordered by identifier.
std::vector<PageId> default_order(const Problem& problem);

DiscreteVector discretize(const std::vector<Rational>& x, const std::vector<PageId>& order, const Problem& problem,
                          long N);

/// Discretization guarantees: |x̃ - x| < 1/N per page and per agent,
/// integral values kept, total N·k, reserves met, Σ|x̃ - x| <= k²/N.
std::vector<std::string> check_discretization(const std::vector<Rational>& x, const DiscreteVector& d,
                                              const Problem& problem);

/// x as held by the engine (1 - y).
std::vector<Rational> cache_vector(const EngineState& state);

struct PagePair {
    PageId p = 0;  // gains one state
    PageId q = 0;  // loses one state
    bool operator==(const PagePair&) const = default;
};

/// Same-agent pairs first, then the rest in page order. Throws if the totals
/// differ or if some prefix of the pairs breaks a reserve.
std::vector<PagePair> diff_matching(const DiscreteVector& before, const DiscreteVector& after, const Problem& problem);

class Ensemble {
public:
    Ensemble(const Problem& problem, long N, const std::vector<PageId>& initial);
    Ensemble(const Problem& problem, const std::vector<std::vector<PageId>>& states);

    long size() const { return static_cast<long>(states_.size()); }
    bool contains(long s, PageId p) const { return states_[static_cast<std::size_t>(s)][static_cast<std::size_t>(p)] != 0; }
    long count(PageId p) const;
    int agent_count(long s, AgentId a) const;
    std::vector<PageId> pages(long s) const;

    // Moves `p` into state s / out of it and records the fetch.
    void add(long s, PageId p);
    void remove(long s, PageId p);

    const std::vector<long>& fetches() const { return fetches_; }
    void reset_fetches();

    /// Empty iff every state holds k distinct pages and meets every reserve,
    /// and page p sits in exactly target.counts[p] states.
    std::vector<std::string> check(const DiscreteVector& target) const;

    std::string dump() const;

private:
    const Problem& problem_;
    std::vector<std::vector<char>> states_;
    std::vector<long> fetches_;  // pages added per state since the last reset
};

/// Moves one unit of marginal from q to p. Returns the number of removals
/// (at most 6).
int apply_pair(Ensemble& ensemble, const Problem& problem, PageId p, PageId q);

/// Transforms the ensemble from `before` to `after`. Returns total removals.
long sync(Ensemble& ensemble, const Problem& problem, const DiscreteVector& before, const DiscreteVector& after);

/// Half the L1 distance.
Rational step_cost(const DiscreteVector& a, const DiscreteVector& b);
Rational step_cost(const std::vector<Rational>& a, const std::vector<Rational>& b);

struct RoundingStep {
    std::size_t t = 0;
    long removals = 0;
    Rational discretized_cost;
    Rational fractional_cost;
    long followed_fetches = 0;
};

struct RoundingRun {
    long N = 0;
    long follow_index = 0;
    Rational integral_cost;    // fetches into the followed state
    Rational expected_cost;    // removals / N
    Rational fractional_cost;  // engine cost
    Rational discretized_cost;
    std::vector<long> state_costs;  // fetches per state over the run
    std::vector<RoundingStep> steps;
    std::vector<std::string> violations;
    std::vector<std::string> warnings;  // bound checks downgraded when N < k^3
};

/// Default N is k^3; n_override > 0 replaces it.
RoundingRun run_randomized(const Problem& problem, std::uint64_t seed, long n_override = 0);

void write_rounding_csv(std::ostream& out, const RoundingRun& run);

} // namespace cwr

#endif
