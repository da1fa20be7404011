#include "cwr/opt.hpp"

#include <bit>
#include <cstdint>
#include <limits>
#include <string>

namespace cwr {

bool within_limits(const Problem& problem, const OptLimits& limits)
{
    return problem.universe.size() <= limits.max_universe && problem.k() <= limits.max_k &&
           problem.horizon() <= limits.max_length;
}

OptResult brute_opt(const Problem& problem, const OptLimits& limits)
{
    if (!within_limits(problem, limits))
        throw OracleTooLarge("opt oracle limits exceeded (universe " + std::to_string(problem.universe.size()) +
                             ", k " + std::to_string(problem.k()) + ", T " + std::to_string(problem.horizon()) + ")");
    using Mask = std::uint32_t;
    const std::size_t n = problem.universe.size();

    std::vector<Mask> agent_mask(static_cast<std::size_t>(problem.m()), 0);
    for (std::size_t p = 0; p < n; ++p)
        agent_mask[static_cast<std::size_t>(problem.universe.owner(static_cast<PageId>(p)))] |= Mask{1} << p;
    std::vector<Mask> feasible;
    for (Mask s = 0; s < (Mask{1} << n); ++s) {
        if (std::popcount(s) != problem.k())
            continue;
        bool ok = true;
        for (AgentId a = 0; a < problem.m() && ok; ++a)
            ok = std::popcount(s & agent_mask[static_cast<std::size_t>(a)]) >= problem.reserve(a);
        if (ok)
            feasible.push_back(s);
    }

    Mask start = 0;
    for (PageId p : problem.initial)
        start |= Mask{1} << p;

    constexpr long inf = std::numeric_limits<long>::max() / 4;
    // layer 0 holds only the initial cache
    std::vector<Mask> prev_sets{start};
    std::vector<long> prev_cost{0};
    std::vector<std::vector<int>> parents;  // per layer, index into the previous layer
    std::vector<std::vector<Mask>> layers;
    for (PageId req : problem.requests) {
        const Mask need = Mask{1} << req;
        std::vector<Mask> sets;
        for (Mask s : feasible)
            if (s & need)
                sets.push_back(s);
        std::vector<long> cost(sets.size(), inf);
        std::vector<int> parent(sets.size(), -1);
        for (std::size_t j = 0; j < sets.size(); ++j)
            for (std::size_t i = 0; i < prev_sets.size(); ++i) {
                if (prev_cost[i] >= inf)
                    continue;
                const long c = prev_cost[i] + std::popcount(sets[j] & ~prev_sets[i]);
                if (c < cost[j]) {
                    cost[j] = c;
                    parent[j] = static_cast<int>(i);
                }
            }
        layers.push_back(sets);
        parents.push_back(std::move(parent));
        prev_sets = std::move(sets);
        prev_cost = std::move(cost);
    }

    OptResult res;
    if (problem.requests.empty())
        return res;
    std::size_t best = 0;
    for (std::size_t j = 1; j < prev_cost.size(); ++j)
        if (prev_cost[j] < prev_cost[best])
            best = j;
    res.opt_cost = prev_cost[best];
    res.schedule.resize(layers.size());
    int idx = static_cast<int>(best);
    for (std::size_t l = layers.size(); l-- > 0;) {
        const Mask s = layers[l][static_cast<std::size_t>(idx)];
        for (std::size_t p = 0; p < n; ++p)
            if (s & (Mask{1} << p))
                res.schedule[l].push_back(static_cast<PageId>(p));
        idx = parents[l][static_cast<std::size_t>(idx)];
    }
    return res;
}

} // namespace cwr
