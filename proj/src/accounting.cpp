#include "cwr/accounting.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace cwr {

double phi(double h, int k)
{
    if (!(h >= 0.0 && h <= 1.0))
        throw std::domain_error("phi: h outside [0,1]: " + std::to_string(h));
    return 2.0 * h * std::log1p(static_cast<double>(k) * h);
}

double phi(const Rational& h, int k)
{
    if (sgn(h) < 0 || cmp(h, 1) > 0)
        throw std::domain_error("phi: h outside [0,1]: " + to_fraction_string(h));
    return phi(to_double(h), k);
}

double phi_prime(double h, int k)
{
    const double kh = static_cast<double>(k) * h;
    return 2.0 * (1.0 - 1.0 / (1.0 + kh) + std::log1p(kh));
}

PotentialSnapshot potential(const EngineState& state, const Problem& problem)
{
    PotentialSnapshot snap;
    snap.t = state.t;
    for (PageId p = 0; p < static_cast<PageId>(problem.universe.size()); ++p) {
        if (!state.is_stale(p) || state.is_marked(p))
            continue;
        const double v = phi(state.y[static_cast<std::size_t>(p)], problem.k());
        snap.terms.emplace_back(p, v);
        snap.psi += v;
    }
    return snap;
}

double potential_value(const EngineState& state, const Problem& problem)
{
    double psi = 0;
    for (PageId p = 0; p < static_cast<PageId>(problem.universe.size()); ++p)
        if (state.is_stale(p) && !state.is_marked(p))
            psi += phi(state.y[static_cast<std::size_t>(p)], problem.k());
    return psi;
}

void PotentialTracker::before_step(const EngineState& state)
{
    current_ = StepPotential{};
    current_.before = potential_value(state, problem_);
}

void PotentialTracker::on_phase_event(const EngineState& state, PhaseEventPoint point)
{
    current_.reset = true;
    if (point == PhaseEventPoint::BeforeReset)
        current_.pre_reset = potential_value(state, problem_);
    else
        current_.post_reset = potential_value(state, problem_);
}

void PotentialTracker::after_step(const EngineState& state, const StepReport& report)
{
    current_.t = report.t;
    current_.after = potential_value(state, problem_);
    steps_.push_back(current_);
}

namespace {

double two_ln(int k) { return 2.0 * std::log1p(static_cast<double>(k)); }

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::size_t set_minus_size(const std::vector<PageId>& a, const std::vector<PageId>& b)
{
    std::size_t n = 0;
    for (PageId p : a)
        if (!std::binary_search(b.begin(), b.end(), p))
            ++n;
    return n;
}

} // namespace

std::vector<AccountingViolation> check_step_lemma(const EventLog& log, const std::vector<StepPotential>& potentials,
                                                  const Problem& problem)
{
    std::vector<AccountingViolation> out;
    if (potentials.size() != log.steps.size()) {
        out.push_back({0, "potential/step count mismatch"});
        return out;
    }
    const double cap = two_ln(problem.k()) * problem.m() * problem.k();
    const double pc_floor = 1.0 - two_ln(problem.k());
    for (std::size_t i = 0; i < potentials.size(); ++i) {
        const auto& s = log.steps[i];
        const auto& p = potentials[i];
        const double d = p.step_delta();
        const double y = to_double(s.fetch_cost);
        if (cmp(s.fetch_cost, 1) < 0 && y > d + kPotentialEps)
            out.push_back({s.t, "cost " + to_fraction_string(s.fetch_cost) + " exceeds step ΔΨ " + fmt(d)});
        if (s.classification == Classification::Clean && d < 1.0 - kPotentialEps)
            out.push_back({s.t, "clean step with ΔΨ " + fmt(d) + " < 1"});
        if (s.classification == Classification::PseudoClean && d < pc_floor - kPotentialEps)
            out.push_back({s.t, "pseudo-clean step with ΔΨ " + fmt(d) + " below 1 - 2ln(1+k)"});
        if (p.after < -kPotentialEps || p.after > cap + kPotentialEps)
            out.push_back({s.t, "Ψ = " + fmt(p.after) + " outside [0, 2mk ln(1+k)]"});
    }
    return out;
}

std::vector<AccountingViolation> check_phase_drops(const EventLog& log, const std::vector<StepPotential>& potentials,
                                                   const Problem& problem)
{
    std::vector<AccountingViolation> out;
    for (std::size_t i = 0; i < potentials.size() && i < log.steps.size(); ++i) {
        const auto& s = log.steps[i];
        const auto& p = potentials[i];
        if (s.phase_resets.empty() != !p.reset) {
            out.push_back({s.t, "phase event not observed consistently"});
            continue;
        }
        if (!p.reset)
            continue;
        const int ended = s.phase_resets.front().ended_phase;
        const PhaseRecord& rec = log.phases.at(static_cast<std::size_t>(ended - 1));
        std::size_t dropped = 0;
        for (const auto& snap : rec.resets)
            dropped += set_minus_size(snap.previous, snap.current);
        const double expected = -two_ln(problem.k()) * static_cast<double>(dropped);
        if (std::abs(p.phase_drop() - expected) > kPotentialEps)
            out.push_back({s.t, "phase " + std::to_string(ended) + " drop " + fmt(p.phase_drop()) + " ≠ " + fmt(expected)});
    }
    return out;
}

std::vector<AccountingViolation> check_phi_facts(int k, int samples_per_unit)
{
    std::vector<AccountingViolation> out;
    const int steps = samples_per_unit * k;
    for (int j = 0; j <= steps; ++j) {
        // h runs over [1/k, 1]
        const double h = 1.0 / k + (1.0 - 1.0 / k) * j / steps;
        if (phi(h, k) < h - kPotentialEps)
            out.push_back({0, "phi(h) < h at h=" + fmt(h)});
        if (phi_prime(h, k) < 1.0 + 2.0 * std::log1p(k * h) - kPotentialEps)
            out.push_back({0, "phi'(h) < 1 + 2ln(1+kh) at h=" + fmt(h)});
    }
    return out;
}

CostBoundReport check_cost_bound(const EventLog& log, const Problem& problem)
{
    CostBoundReport r;
    r.horizon = log.sealed_horizon();
    r.lhs = 0;
    r.tail_cost = 0;
    for (const auto& s : log.steps) {
        if (s.t <= r.horizon) {
            r.lhs += s.fetch_cost;
            if (s.classification == Classification::PseudoClean)
                ++r.pseudo_clean_count;
        } else {
            r.tail_cost += s.fetch_cost;
        }
    }
    for (const auto& rec : log.phases) {
        if (!rec.sealed)
            continue;
        for (const auto& snap : rec.resets)
            r.stale_eviction_sum += static_cast<long>(set_minus_size(snap.previous, snap.current));
    }
    const double mk = static_cast<double>(problem.m()) * problem.k();
    r.rhs = two_ln(problem.k()) * (mk + static_cast<double>(r.pseudo_clean_count + r.stale_eviction_sum));
    r.margin = r.rhs - to_double(r.lhs);
    r.holds = r.margin >= -kPotentialEps;
    return r;
}

std::string to_json(const CostBoundReport& r)
{
    nlohmann::ordered_json j;
    j["horizon"] = r.horizon;
    j["lhs"] = to_fraction_string(r.lhs);
    j["lhs_f64"] = to_double(r.lhs);
    j["rhs"] = r.rhs;
    j["pseudo_clean_count"] = r.pseudo_clean_count;
    j["stale_eviction_sum"] = r.stale_eviction_sum;
    j["margin"] = r.margin;
    j["tail_cost"] = to_fraction_string(r.tail_cost);
    j["holds"] = r.holds;
    return j.dump();
}

AccountedRun run_accounted(const Problem& problem)
{
    Engine engine(problem);
    PotentialTracker tracker(problem);
    engine.set_phase_observer([&](const EngineState& s, PhaseEventPoint point) { tracker.on_phase_event(s, point); });
    AccountedRun out;
    out.run.total_cost = 0;
    for (PageId p : problem.requests) {
        tracker.before_step(engine.state());
        const StepReport report = engine.serve(p);
        tracker.after_step(engine.state(), report);
        out.run.total_cost += report.fetch_cost;
    }
    out.run.log = engine.release_log();
    out.potentials = tracker.steps();
    return out;
}

} // namespace cwr
