#include "cwr/instance.hpp"
#include "cwr/rational.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace cwr {

Rational parse_fraction(const std::string& text)
{
    Rational r(text);
    r.canonicalize();
    return r;
}

std::string format_page_ref(const PageRef& ref)
{
    return std::to_string(ref.agent) + "/" + ref.page;
}

PageRef parse_page_ref(const std::string& text)
{
    auto slash = text.find('/');
    if (slash == std::string::npos || slash == 0 || slash + 1 == text.size())
        throw ParseError("malformed page reference '" + text + "' (expected agent/page)");
    const std::string agent_part = text.substr(0, slash);
    if (!std::all_of(agent_part.begin(), agent_part.end(), [](unsigned char c) { return std::isdigit(c); }))
        throw ParseError("malformed agent index in '" + text + "'");
    PageRef ref;
    try {
        ref.agent = std::stoi(agent_part);
    } catch (const std::exception&) {
        throw ParseError("agent index out of range in '" + text + "'");
    }
    ref.page = text.substr(slash + 1);
    return ref;
}

namespace {

std::string join(const std::vector<std::string>& parts)
{
    std::ostringstream out;
    for (std::size_t i = 0; i < parts.size(); ++i)
        out << (i ? "; " : "") << parts[i];
    return out.str();
}

} // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : std::runtime_error("invalid instance: " + join(violations))
    , violations_(std::move(violations))
{
}

std::vector<std::string> validate(const Instance& instance)
{
    std::vector<std::string> out;
    if (instance.m < 1)
        out.emplace_back("m ≥ 1 violated");
    if (instance.k < 1)
        out.emplace_back("k ≥ 1 violated");
    if (static_cast<int>(instance.reserves.size()) != instance.m)
        out.emplace_back("reserves length ≠ m");

    long reserve_sum = 0;
    for (std::size_t i = 0; i < instance.reserves.size(); ++i) {
        if (instance.reserves[i] < 0)
            out.push_back("reserve of agent " + std::to_string(i) + " negative");
        reserve_sum += instance.reserves[i];
    }
    if (reserve_sum >= instance.k)
        out.emplace_back("Σ kᵢ < k violated");

    auto agent_ok = [&](const PageRef& ref) { return ref.agent >= 0 && ref.agent < instance.m; };
    for (const auto& ref : instance.initial_cache)
        if (!agent_ok(ref))
            out.push_back("agent out of range in initial cache: " + format_page_ref(ref));
    for (const auto& ref : instance.requests)
        if (!agent_ok(ref))
            out.push_back("agent out of range in requests: " + format_page_ref(ref));

    std::set<PageRef> distinct(instance.initial_cache.begin(), instance.initial_cache.end());
    if (distinct.size() != instance.initial_cache.size())
        out.emplace_back("initial cache pages not distinct");
    if (static_cast<int>(instance.initial_cache.size()) != instance.k)
        out.emplace_back("initial cache size ≠ k");

    for (int i = 0; i < static_cast<int>(instance.reserves.size()); ++i) {
        const auto held = std::count_if(instance.initial_cache.begin(), instance.initial_cache.end(),
                                        [i](const PageRef& ref) { return ref.agent == i; });
        if (held < instance.reserves[static_cast<std::size_t>(i)])
            out.push_back("reserve of agent " + std::to_string(i) + " unmet initially");
    }
    return out;
}

Universe::Universe(const Instance& instance)
{
    std::set<PageRef> all(instance.initial_cache.begin(), instance.initial_cache.end());
    all.insert(instance.requests.begin(), instance.requests.end());
    // std::set orders by (agent, page): agent-contiguous by construction.
    pages_.assign(all.begin(), all.end());
    per_agent_.resize(static_cast<std::size_t>(std::max(instance.m, 0)));
    owners_.reserve(pages_.size());
    for (std::size_t id = 0; id < pages_.size(); ++id) {
        const AgentId agent = pages_[id].agent;
        owners_.push_back(agent);
        if (agent >= 0 && agent < instance.m)
            per_agent_[static_cast<std::size_t>(agent)].push_back(static_cast<PageId>(id));
    }
}

PageId Universe::id_of(const PageRef& ref) const
{
    auto it = std::lower_bound(pages_.begin(), pages_.end(), ref);
    if (it == pages_.end() || *it != ref)
        throw std::out_of_range("page " + format_page_ref(ref) + " not in universe");
    return static_cast<PageId>(it - pages_.begin());
}

bool Universe::contains(const PageRef& ref) const
{
    return std::binary_search(pages_.begin(), pages_.end(), ref);
}

namespace {

Instance checked(Instance instance)
{
    auto violations = validate(instance);
    if (!violations.empty())
        throw ValidationError(std::move(violations));
    return instance;
}

} // namespace

Problem::Problem(Instance inst)
    : instance(checked(std::move(inst)))
    , universe(instance)
{
    for (const auto& ref : instance.initial_cache)
        initial.push_back(universe.id_of(ref));
    for (const auto& ref : instance.requests)
        requests.push_back(universe.id_of(ref));
}

Instance parse_instance(const std::string& json_text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("trace is not valid JSON: ") + e.what());
    }
    if (!doc.is_object())
        throw ParseError("trace must be a JSON object");

    auto require = [&](const char* key) -> const nlohmann::json& {
        if (!doc.contains(key))
            throw ParseError(std::string("missing field '") + key + "'");
        return doc.at(key);
    };

    Instance instance;
    try {
        instance.m = require("m").get<int>();
        instance.k = require("k").get<int>();
        instance.reserves = require("reserves").get<std::vector<int>>();
        for (const auto& s : require("initial_cache").get<std::vector<std::string>>())
            instance.initial_cache.push_back(parse_page_ref(s));
        for (const auto& s : require("requests").get<std::vector<std::string>>())
            instance.requests.push_back(parse_page_ref(s));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad field type: ") + e.what());
    }
    return instance;
}

std::string serialize_instance(const Instance& instance)
{
    nlohmann::ordered_json doc;
    doc["m"] = instance.m;
    doc["k"] = instance.k;
    doc["reserves"] = instance.reserves;
    auto refs = nlohmann::ordered_json::array();
    for (const auto& ref : instance.initial_cache)
        refs.push_back(format_page_ref(ref));
    doc["initial_cache"] = refs;
    refs = nlohmann::ordered_json::array();
    for (const auto& ref : instance.requests)
        refs.push_back(format_page_ref(ref));
    doc["requests"] = refs;
    return doc.dump();
}

Instance load_instance(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open trace file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return checked(parse_instance(buffer.str()));
}

void save_instance(const Instance& instance, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << serialize_instance(instance);
}

} // namespace cwr
