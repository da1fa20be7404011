#include "cwr/workloads.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <stdexcept>

namespace cwr {

const char* to_string(WorkloadModel model)
{
    switch (model) {
    case WorkloadModel::Zipf: return "zipf";
    case WorkloadModel::CycleAdversary: return "cycle-adversary";
    case WorkloadModel::IsolationAdversary: return "isolation-adversary";
    case WorkloadModel::Uniform: return "uniform";
    }
    return "?";
}

std::optional<WorkloadModel> parse_workload_model(const std::string& name)
{
    for (auto model : {WorkloadModel::Zipf, WorkloadModel::CycleAdversary, WorkloadModel::IsolationAdversary,
                       WorkloadModel::Uniform})
        if (name == to_string(model))
            return model;
    return std::nullopt;
}

std::vector<std::string> check_spec(const WorkloadSpec& spec)
{
    std::vector<std::string> out;
    if (spec.m < 1 || spec.k < 1)
        out.emplace_back("m and k must be positive");
    if (static_cast<int>(spec.reserves.size()) != spec.m || static_cast<int>(spec.pages_per_agent.size()) != spec.m)
        out.emplace_back("reserves and pages-per-agent need one entry per agent");
    if (!out.empty())
        return out;
    if (std::accumulate(spec.reserves.begin(), spec.reserves.end(), 0) >= spec.k)
        out.emplace_back("Σ reserves < k violated");
    for (int i = 0; i < spec.m; ++i) {
        if (spec.reserves[static_cast<std::size_t>(i)] < 0)
            out.push_back("negative reserve for agent " + std::to_string(i));
        if (spec.pages_per_agent[static_cast<std::size_t>(i)] < spec.reserves[static_cast<std::size_t>(i)])
            out.push_back("agent " + std::to_string(i) + " has fewer pages than its reserve");
    }
    if (std::accumulate(spec.pages_per_agent.begin(), spec.pages_per_agent.end(), 0) < spec.k)
        out.emplace_back("fewer pages than cache slots");
    if (spec.length < 0)
        out.emplace_back("negative trace length");
    if (spec.model == WorkloadModel::CycleAdversary && spec.pages_per_agent.front() < 2)
        out.emplace_back("cycle-adversary needs at least two pages for agent 0");
    return out;
}

namespace {

PageRef page_ref(int agent, int index)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "p%02d", index);
    return PageRef{agent, buf};
}

std::vector<PageRef> initial_cache(const WorkloadSpec& spec, std::mt19937_64& rng)
{
    std::vector<PageRef> cache;
    std::vector<PageRef> rest;
    for (int i = 0; i < spec.m; ++i) {
        for (int j = 0; j < spec.pages_per_agent[static_cast<std::size_t>(i)]; ++j) {
            if (j < spec.reserves[static_cast<std::size_t>(i)])
                cache.push_back(page_ref(i, j));
            else
                rest.push_back(page_ref(i, j));
        }
    }
    if (spec.model == WorkloadModel::CycleAdversary) {
        // Keep the lowest-numbered pages so the cycle starts with a full miss.
        std::stable_sort(rest.begin(), rest.end(),
                         [](const PageRef& a, const PageRef& b) { return a.page < b.page; });
    } else {
        std::shuffle(rest.begin(), rest.end(), rng);
    }
    for (std::size_t i = 0; cache.size() < static_cast<std::size_t>(spec.k); ++i)
        cache.push_back(rest[i]);
    std::sort(cache.begin(), cache.end());
    return cache;
}

} // namespace

Instance generate(const WorkloadSpec& spec)
{
    auto problems = check_spec(spec);
    if (!problems.empty())
        throw std::invalid_argument("inconsistent workload spec: " + problems.front());

    std::mt19937_64 rng(spec.seed);
    Instance inst;
    inst.m = spec.m;
    inst.k = spec.k;
    inst.reserves = spec.reserves;
    inst.initial_cache = initial_cache(spec, rng);

    std::vector<PageRef> universe;
    for (int i = 0; i < spec.m; ++i)
        for (int j = 0; j < spec.pages_per_agent[static_cast<std::size_t>(i)]; ++j)
            universe.push_back(page_ref(i, j));

    switch (spec.model) {
    case WorkloadModel::Uniform: {
        std::uniform_int_distribution<std::size_t> pick(0, universe.size() - 1);
        for (int t = 0; t < spec.length; ++t)
            inst.requests.push_back(universe[pick(rng)]);
        break;
    }
    case WorkloadModel::Zipf: {
        std::vector<PageRef> ranked = universe;
        std::shuffle(ranked.begin(), ranked.end(), rng);
        std::vector<double> weights;
        for (std::size_t r = 0; r < ranked.size(); ++r)
            weights.push_back(1.0 / std::pow(static_cast<double>(r + 1), spec.zipf_exponent));
        std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
        for (int t = 0; t < spec.length; ++t)
            inst.requests.push_back(ranked[pick(rng)]);
        break;
    }
    case WorkloadModel::CycleAdversary: {
        const int cycle = std::min(spec.k + 1, spec.pages_per_agent.front());
        for (int t = 0; t < spec.length; ++t)
            inst.requests.push_back(page_ref(0, t % cycle));
        break;
    }
    case WorkloadModel::IsolationAdversary: {
        // One request to the victim per block, then churn over everyone else.
        int victim = 0;
        for (int i = 0; i < spec.m; ++i)
            if (spec.reserves[static_cast<std::size_t>(i)] > spec.reserves[static_cast<std::size_t>(victim)])
                victim = i;
        std::vector<PageRef> victim_pages;
        std::vector<PageRef> others;
        for (const auto& ref : universe)
            (ref.agent == victim ? victim_pages : others).push_back(ref);
        if (others.empty())
            others = victim_pages;
        const int block = spec.k + 1;
        std::size_t v = 0;
        std::size_t o = 0;
        for (int t = 0; t < spec.length; ++t) {
            if (t % block == 0 && !victim_pages.empty())
                inst.requests.push_back(victim_pages[v++ % victim_pages.size()]);
            else
                inst.requests.push_back(others[o++ % others.size()]);
        }
        break;
    }
    }
    return inst;
}

WorkloadSpec random_spec(std::uint64_t seed, const WorkloadLimits& limits)
{
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

    WorkloadSpec spec;
    spec.seed = seed;
    spec.k = uniform(limits.min_k, limits.max_k);
    spec.m = uniform(1, limits.max_agents);
    spec.model = static_cast<WorkloadModel>(uniform(0, 3));
    spec.zipf_exponent = 0.5 + 0.25 * uniform(0, 6);

    // Reserves: hand out at most k - 1 units at random.
    spec.reserves.assign(static_cast<std::size_t>(spec.m), 0);
    int budget = uniform(0, spec.k - 1);
    while (budget-- > 0)
        spec.reserves[static_cast<std::size_t>(uniform(0, spec.m - 1))] += 1;

    // Pages: reserve first, then spread extra pages so the universe exceeds k.
    spec.pages_per_agent = spec.reserves;
    for (auto& p : spec.pages_per_agent)
        p = std::max(p, 1);
    int total = std::accumulate(spec.pages_per_agent.begin(), spec.pages_per_agent.end(), 0);
    const int max_total = std::max(limits.max_universe, total);
    const int target = std::min(max_total, uniform(spec.k + 1, std::max(spec.k + 1, std::min(max_total, 3 * spec.k + 2))));
    while (total < target) {
        spec.pages_per_agent[static_cast<std::size_t>(uniform(0, spec.m - 1))] += 1;
        ++total;
    }
    if (spec.model == WorkloadModel::CycleAdversary && spec.pages_per_agent.front() < 2)
        spec.model = WorkloadModel::Uniform;
    spec.length = uniform(1, limits.max_length);
    return spec;
}

WorkloadSpec random_paging_spec(std::uint64_t seed, int max_k, int max_pages, int max_length)
{
    std::mt19937_64 rng(seed ^ 0x5851f42d4c957f2dULL);
    auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    WorkloadSpec spec;
    spec.seed = seed;
    spec.m = 1;
    spec.reserves = {0};
    spec.k = uniform(1, max_k);
    spec.pages_per_agent = {uniform(spec.k + 1, std::max(spec.k + 1, max_pages))};
    const WorkloadModel models[] = {WorkloadModel::Zipf, WorkloadModel::CycleAdversary, WorkloadModel::Uniform};
    spec.model = models[uniform(0, 2)];
    spec.zipf_exponent = 0.5 + 0.25 * uniform(0, 6);
    spec.length = uniform(1, max_length);
    return spec;
}

} // namespace cwr
