#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "pilock/semantics.hpp"

namespace pilock {

class StateBudgetExceeded : public std::runtime_error {
public:
    explicit StateBudgetExceeded(std::size_t budget)
        : std::runtime_error("state budget of " + std::to_string(budget) + " exceeded"), budget_(budget) {}
    [[nodiscard]] std::size_t budget() const { return budget_; }

private:
    std::size_t budget_;
};

/// PILOCK_MAX_STATES if set to a positive number, else one million.
std::size_t default_state_budget();

struct Edge {
    std::size_t from = 0;
    Action action;
    std::size_t to = 0;
};

struct StateGraph {
    std::vector<Config> nodes;  // node 0 is the root
    std::vector<Edge> edges;

    [[nodiscard]] std::vector<std::size_t> successors(std::size_t n) const;
    /// Root-to-node path of edge indices (breadth-first tree).
    [[nodiscard]] std::vector<std::size_t> path_to(std::size_t n) const;
    /// "from<TAB>action<TAB>to" lines after a node table.
    [[nodiscard]] std::string to_edge_list() const;
    [[nodiscard]] std::string to_dot() const;
};

enum class StepMode {
    Reductions,  // tau steps only; the environment is fixed
    Typed,       // every typed transition
};

StateGraph explore(const Config& root, Calculus c, StepMode mode = StepMode::Reductions,
                   std::size_t budget = default_state_budget(), const StepContext* ctx = nullptr);

enum class Classification { Terminated, Stuck, Deadlocked, Reducible };

std::string classification_name(Classification k);

Classification classify(const Process& p, bool complete, Calculus c = Calculus::PIL);

/// Some restricted l with p == new l.(P' | l!v) and l not free in P'.
std::optional<Name> find_leak(const Process& p);

struct ProgressVerdict {
    enum class Status { Pass, Fail, Incomplete };
    Status status = Status::Pass;
    std::string reason;
    std::vector<std::string> witness;  // rendered path from the root
    std::size_t states = 0;
    std::size_t terminated_leaves = 0;
    std::size_t deadlocks = 0;
    std::size_t leaks = 0;
};

std::string status_name(ProgressVerdict::Status s);

/// Every reachable state reduces or is terminated with pairwise distinct
/// release subjects; for PILW no state leaks.
ProgressVerdict check_progress(const Config& root, Calculus c, std::size_t budget = default_state_budget());

struct Barb {
    Name subject;
    Value payload;
    bool bound = false;  // l!(new)

    [[nodiscard]] std::string str() const;
    auto operator<=>(const Barb&) const = default;
};

std::set<Barb> strong_barbs(const NormalForm& nf);
/// Strong or weak (through reductions) barbs; `booleans_only` keeps barbs
/// whose payload is tt or ff.
std::set<Barb> barbs(const Process& p, bool weak, bool booleans_only = false);

struct LockGraph {
    std::vector<Process> vertices;  // top-level primes
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::vector<std::size_t> cycle;  // empty when acyclic

    [[nodiscard]] bool acyclic() const { return cycle.empty(); }
};

/// Edge i -> j when prime i waits for something prime j can provide: an
/// acquire on l points at primes where a release of l is available (directly
/// or stored in another lock), a wait on l at every prime still using l.
LockGraph lock_graph(const Process& p);

struct Generated {
    Process process;
    TypeEnv env;
};

/// Derivation-directed random terms. `size` bounds the number of
/// constructors; `complete` asks for complete (PILW: wait-closed)
/// instances. Deterministic in the seed.
Generated generate_typable(std::uint64_t seed, unsigned size, Calculus c, bool complete = true);

}  // namespace pilock
