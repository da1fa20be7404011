#ifndef CWR_INSTANCE_HPP
#define CWR_INSTANCE_HPP

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace cwr {

using AgentId = int;
using PageId = int;  // dense index into Universe

struct PageRef {
    AgentId agent = 0;
    std::string page;

    auto operator<=>(const PageRef&) const = default;
    bool operator==(const PageRef&) const = default;
};

// "agent/page" as used in trace files.
std::string format_page_ref(const PageRef& ref);
PageRef parse_page_ref(const std::string& text);

struct Instance {
    int m = 0;
    int k = 0;
    std::vector<int> reserves;
    std::vector<PageRef> initial_cache;
    std::vector<PageRef> requests;
};

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<std::string> violations);
    const std::vector<std::string>& violations() const { return violations_; }

private:
    std::vector<std::string> violations_;
};

/// Returns every violated instance invariant, empty iff the instance is valid.
std::vector<std::string> validate(const Instance& instance);

// The realized page universe: initial cache plus every requested page.
// Dense ids follow the agent-contiguous order (agent index, then page
// identifier), which is also the discretization order used for rounding.
class Universe {
public:
    explicit Universe(const Instance& instance);

    std::size_t size() const { return pages_.size(); }
    int agent_count() const { return static_cast<int>(per_agent_.size()); }

    const PageRef& page(PageId id) const { return pages_.at(static_cast<std::size_t>(id)); }
    AgentId owner(PageId id) const { return owners_[static_cast<std::size_t>(id)]; }
    PageId id_of(const PageRef& ref) const;
    bool contains(const PageRef& ref) const;

    const std::vector<PageId>& pages_of(AgentId agent) const
    {
        return per_agent_.at(static_cast<std::size_t>(agent));
    }
    int agent_size(AgentId agent) const { return static_cast<int>(pages_of(agent).size()); }

private:
    std::vector<PageRef> pages_;
    std::vector<AgentId> owners_;
    std::vector<std::vector<PageId>> per_agent_;
};

// An instance bundled with its universe and dense request/initial ids.
struct Problem {
    Instance instance;
    Universe universe;
    std::vector<PageId> initial;
    std::vector<PageId> requests;

    explicit Problem(Instance inst);

    int m() const { return instance.m; }
    int k() const { return instance.k; }
    int reserve(AgentId agent) const { return instance.reserves[static_cast<std::size_t>(agent)]; }
    std::size_t horizon() const { return requests.size(); }
};

Instance parse_instance(const std::string& json_text);
/// Canonical serialization: fixed key order, no insignificant whitespace.
std::string serialize_instance(const Instance& instance);

/// Parses and validates; throws ParseError or ValidationError.
Instance load_instance(const std::filesystem::path& path);
void save_instance(const Instance& instance, const std::filesystem::path& path);

} // namespace cwr

#endif
