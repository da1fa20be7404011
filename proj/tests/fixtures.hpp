#ifndef CWR_TESTS_FIXTURES_HPP
#define CWR_TESTS_FIXTURES_HPP

#include "cwr/instance.hpp"

#include <string>
#include <vector>

namespace cwr::test {

inline std::vector<PageRef> refs(const std::vector<std::string>& names)
{
    std::vector<PageRef> out;
    for (const auto& n : names)
        out.push_back(parse_page_ref(n));
    return out;
}

inline Instance make_instance(int m, int k, std::vector<int> reserves, const std::vector<std::string>& initial,
                              const std::vector<std::string>& requests)
{
    Instance inst;
    inst.m = m;
    inst.k = k;
    inst.reserves = std::move(reserves);
    inst.initial_cache = refs(initial);
    inst.requests = refs(requests);
    return inst;
}

// E1: two agents, k = 3, agent 0 reserves one slot.
inline Instance e1(const std::vector<std::string>& requests)
{
    return make_instance(2, 3, {1, 0}, {"0/a1", "0/a2", "1/b1"}, requests);
}

// E2: two agents, k = 2, agent 0 reserves one slot.
inline Instance e2(const std::vector<std::string>& requests)
{
    return make_instance(2, 2, {1, 0}, {"0/a1", "1/b1"}, requests);
}

} // namespace cwr::test

#endif
