#include "cwr/paging.hpp"

#include "cwr/accounting.hpp"

#include <cmath>
#include <map>
#include <utility>

namespace cwr {

void require_plain_paging(const Problem& problem)
{
    if (problem.m() != 1 || problem.reserve(0) != 0)
        throw PagingError("plain paging needs a single agent without reserve");
}

RmState rm_init(const Problem& problem)
{
    require_plain_paging(problem);
    RmState s;
    s.in_cache.assign(problem.universe.size(), 0);
    s.marked.assign(problem.universe.size(), 0);
    for (PageId p : problem.initial)
        s.in_cache[static_cast<std::size_t>(p)] = 1;
    return s;
}

namespace {

std::vector<std::size_t> unmarked_cached(const RmState& s)
{
    std::vector<std::size_t> out;
    for (std::size_t p = 0; p < s.in_cache.size(); ++p)
        if (s.in_cache[p] && !s.marked[p])
            out.push_back(p);
    return out;
}

// Applies a miss on `page` evicting `victim`, closing the phase first when
// `close` is set.
void rm_apply_miss(RmState& s, PageId page, std::size_t victim)
{
    s.in_cache[victim] = 0;
    s.in_cache[static_cast<std::size_t>(page)] = 1;
    s.marked[static_cast<std::size_t>(page)] = 1;
}

void rm_close_if_needed(RmState& s)
{
    if (!unmarked_cached(s).empty())
        return;
    std::fill(s.marked.begin(), s.marked.end(), 0);
    ++s.phase;
}

} // namespace

bool rm_step(RmState& s, PageId page, std::mt19937_64& rng)
{
    const auto pi = static_cast<std::size_t>(page);
    if (s.in_cache[pi]) {
        s.marked[pi] = 1;
        return false;
    }
    rm_close_if_needed(s);
    const auto cands = unmarked_cached(s);
    const std::size_t pick = std::uniform_int_distribution<std::size_t>(0, cands.size() - 1)(rng);
    rm_apply_miss(s, page, cands[pick]);
    return true;
}

long rm_cost(const Problem& problem, std::uint64_t seed)
{
    RmState s = rm_init(problem);
    std::mt19937_64 rng(seed);
    long misses = 0;
    for (PageId p : problem.requests)
        misses += rm_step(s, p, rng) ? 1 : 0;
    return misses;
}

std::vector<std::vector<Rational>> rm_eviction_marginals(const Problem& problem)
{
    require_plain_paging(problem);
    if (problem.horizon() > 10 || problem.k() > 3)
        throw PagingError("exhaustive randomized marking needs T <= 10 and k <= 3");
    const std::size_t n = problem.universe.size();
    // (cache, marks) -> probability
    std::map<std::pair<std::vector<char>, std::vector<char>>, Rational> dist;
    const RmState init = rm_init(problem);
    dist[{init.in_cache, init.marked}] = 1;
    std::vector<std::vector<Rational>> out;
    for (PageId page : problem.requests) {
        std::map<std::pair<std::vector<char>, std::vector<char>>, Rational> next;
        for (const auto& [key, prob] : dist) {
            RmState s;
            s.in_cache = key.first;
            s.marked = key.second;
            if (s.in_cache[static_cast<std::size_t>(page)]) {
                s.marked[static_cast<std::size_t>(page)] = 1;
                next[{s.in_cache, s.marked}] += prob;
                continue;
            }
            rm_close_if_needed(s);
            const auto cands = unmarked_cached(s);
            const Rational share = prob / static_cast<long>(cands.size());
            for (std::size_t v : cands) {
                RmState c = s;
                rm_apply_miss(c, page, v);
                next[{c.in_cache, c.marked}] += share;
            }
        }
        dist = std::move(next);
        std::vector<Rational> y(n, Rational(0));
        for (const auto& [key, prob] : dist)
            for (std::size_t p = 0; p < n; ++p)
                if (!key.first[p])
                    y[p] += prob;
        out.push_back(std::move(y));
    }
    return out;
}

Rational rm_expected_cost_exact(const Problem& problem)
{
    const auto marg = rm_eviction_marginals(problem);
    // a request misses exactly when its page was outside the cache before it
    Rational cost = 0;
    std::vector<Rational> before(problem.universe.size(), Rational(1));
    for (PageId p : problem.initial)
        before[static_cast<std::size_t>(p)] = 0;
    for (std::size_t t = 0; t < problem.horizon(); ++t) {
        cost += before[static_cast<std::size_t>(problem.requests[t])];
        before = marg[t];
    }
    return cost;
}

FmState fm_init(const Problem& problem)
{
    require_plain_paging(problem);
    FmState s;
    s.k = problem.k();
    s.y.assign(problem.universe.size(), Rational(1));
    s.marked.assign(problem.universe.size(), 0);
    s.stale.assign(problem.universe.size(), 0);
    for (PageId p : problem.initial) {
        s.y[static_cast<std::size_t>(p)] = 0;
        s.stale[static_cast<std::size_t>(p)] = 1;
    }
    return s;
}

namespace {

std::vector<std::size_t> evictable(const FmState& s, std::size_t except)
{
    std::vector<std::size_t> out;
    for (std::size_t p = 0; p < s.y.size(); ++p)
        if (p != except && !s.marked[p] && s.y[p] < 1)
            out.push_back(p);
    return out;
}

} // namespace

bool fm_phase_end_needed(const FmState& s, PageId page)
{
    const auto pi = static_cast<std::size_t>(page);
    return sgn(s.y[pi]) > 0 && evictable(s, pi).empty();
}

long fm_end_phase(FmState& s)
{
    long ell = 0;
    for (std::size_t p = 0; p < s.y.size(); ++p) {
        if (s.marked[p] && !s.stale[p])
            ++ell;
        if (!s.marked[p] && sgn(s.y[p]) > 0 && !is_one(s.y[p]))
            throw PagingError("phase ends with a fractional page");
        s.stale[p] = s.marked[p];
        s.marked[p] = 0;
    }
    ++s.phase;
    return ell;
}

Rational fm_step(FmState& s, PageId page)
{
    if (fm_phase_end_needed(s, page))
        fm_end_phase(s);
    const auto pi = static_cast<std::size_t>(page);
    const Rational cost = s.y[pi];
    if (sgn(cost) > 0) {
        const auto cands = evictable(s, pi);
        const Rational inc = cost / static_cast<long>(cands.size());
        for (std::size_t q : cands) {
            s.y[q] += inc;
            if (s.y[q] > 1)
                throw PagingError("uniform raise overshoots");
        }
        s.y[pi] = 0;
    }
    s.marked[pi] = 1;
    return cost;
}

double fm_potential(const FmState& s)
{
    double psi = 0;
    for (std::size_t p = 0; p < s.y.size(); ++p)
        if (s.stale[p] && !s.marked[p])
            psi += phi(s.y[p], s.k);
    return psi;
}

long FmRun::sum_ell() const
{
    long total = 0;
    for (long l : ell)
        total += l;
    return total;
}

FmRun run_fm(const Problem& problem)
{
    FmState s = fm_init(problem);
    FmRun run;
    run.cost = 0;
    for (std::size_t t = 0; t < problem.horizon(); ++t) {
        const PageId page = problem.requests[t];
        FmStepRecord rec;
        rec.t = t + 1;
        rec.psi_before = fm_potential(s);
        if (fm_phase_end_needed(s, page)) {
            const double pre = fm_potential(s);
            rec.ended_ell = fm_end_phase(s);
            rec.phase_ended = true;
            rec.phase_drop = fm_potential(s) - pre;
            rec.psi_before += rec.phase_drop;
            run.ell.push_back(rec.ended_ell);
        }
        rec.cost = fm_step(s, page);
        rec.phase = s.phase;
        rec.psi_after = fm_potential(s);
        run.cost += rec.cost;
        run.steps.push_back(rec);
        run.y_after.push_back(s.y);
    }
    long open = 0;
    for (std::size_t p = 0; p < s.y.size(); ++p)
        if (s.marked[p] && !s.stale[p])
            ++open;
    run.ell.push_back(open);
    return run;
}

FmBoundReport check_fm_bound(const FmRun& run, int k)
{
    FmBoundReport rep;
    const double two_ln = 2.0 * std::log1p(static_cast<double>(k));
    rep.sum_ell = run.sum_ell();
    rep.lhs = to_double(run.cost);
    rep.rhs = two_ln * k + (1.0 + two_ln) * static_cast<double>(rep.sum_ell);
    if (rep.lhs > rep.rhs + kPotentialEps)
        rep.violations.push_back("cost above 2k ln(1+k) + (1 + 2ln(1+k)) Σℓ");
    long clean = 0;
    for (const auto& st : run.steps) {
        // psi_before already includes any phase drop inside this step
        const double d = st.psi_after - st.psi_before;
        if (cmp(st.cost, 1) < 0 && to_double(st.cost) > d + kPotentialEps)
            rep.violations.push_back("t=" + std::to_string(st.t) + ": cost above ΔΨ");
        if (st.phase_ended && std::abs(st.phase_drop + two_ln * static_cast<double>(st.ended_ell)) > kPotentialEps)
            rep.violations.push_back("t=" + std::to_string(st.t) + ": phase drop differs from -2ℓ ln(1+k)");
        clean += is_one(st.cost) ? 1 : 0;
    }
    if (clean != rep.sum_ell)
        rep.violations.push_back("full fetches differ from Σℓ");
    return rep;
}

} // namespace cwr
