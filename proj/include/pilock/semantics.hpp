#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pilock/action.hpp"
#include "pilock/ast.hpp"
#include "pilock/congruence.hpp"
#include "pilock/typing.hpp"

namespace pilock {

/// A typed state: environment plus process in normal form.
struct Config {
    TypeEnv env;
    NormalForm proc;

    [[nodiscard]] std::string key() const;
};

/// Builds a state; the normal form avoids the names of `env`.
Config make_config(const Process& p, const TypeEnv& env);

/// Names and sorts shared by the two sides of an equivalence question, so
/// that inputs range over the same values and fresh names coincide.
struct StepContext {
    NameSet known;
    SortMap sorts;
};

struct Step {
    Action action;
    Config target;
};

/// One-step reductions: communication on any lock, plus the wait redex
/// (PILW) when the restriction encloses only the release and the wait.
std::vector<NormalForm> reductions(const Process& p, Calculus c);

/// Early LTS. Inputs range over the booleans, names of the right sort, and
/// one fresh name per sort.
std::vector<std::pair<Action, NormalForm>> untyped_steps(const Process& p, Calculus c,
                                                         const StepContext* ctx = nullptr);

/// Type-allowed transitions of CCSL/PIL states.
std::vector<Step> typed_steps_pil(const Config& cfg, Calculus c = Calculus::PIL, const StepContext* ctx = nullptr);

/// Typed LTS of PILW states.
std::vector<Step> typed_steps_pilw(const Config& cfg, const StepContext* ctx = nullptr);

std::vector<Step> typed_steps(const Config& cfg, Calculus c, const StepContext* ctx = nullptr);

/// States reachable by zero or more tau steps (the state itself included).
std::vector<Config> tau_closure(const Config& cfg, Calculus c, const StepContext* ctx = nullptr);

/// Targets of the weak arrow for `mu`; a tau request means zero or more taus.
std::vector<Config> weak_closure(const Config& cfg, const Action& mu, Calculus c, const StepContext* ctx = nullptr);

/// Canonical fresh name for extrusions and inputs.
Name fresh_for(const NameSet& taken);

/// Only releases remain, possibly under restrictions.
bool is_terminated(const NormalForm& nf);

}  // namespace pilock
