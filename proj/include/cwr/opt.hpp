#ifndef CWR_OPT_HPP
#define CWR_OPT_HPP

#include "cwr/instance.hpp"

#include <stdexcept>
#include <vector>

namespace cwr {

class OracleTooLarge : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OptLimits {
    std::size_t max_universe = 12;
    int max_k = 4;
    std::size_t max_length = 14;
};

struct OptResult {
    long opt_cost = 0;
    std::vector<std::vector<PageId>> schedule;  // cache after each request
};

bool within_limits(const Problem& problem, const OptLimits& limits);

/// Exact offline optimum: shortest path through layers of feasible k-sets
/// (each holding the current request and meeting every reserve), with edge
/// weight equal to the number of pages fetched.
OptResult brute_opt(const Problem& problem, const OptLimits& limits = {});

} // namespace cwr

#endif
