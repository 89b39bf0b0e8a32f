#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pilock/semantics.hpp"
#include "pilock/verify.hpp"

namespace pilock {

class PreconditionViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Side { Left, Right };

std::string side_name(Side s);

/// One round of a game: the challenger's move and the defender's reply.
/// Moves are recorded as the normal-form keys of the states reached.
struct TraceStep {
    Side side = Side::Left;
    std::string move;         // action label, or "barb <b>" for a barb probe
    std::string challenger;   // challenger state after the move
    std::string defender;     // defender state chosen as reply; empty on the last step
};

/// Evidence that two processes differ. Either a game trace ending with a
/// move the defender cannot answer, or a context plus the trace of the
/// barbed game on the two plugged terms.
struct Distinguisher {
    Calculus calculus = Calculus::PIL;
    TypeEnv env;
    Process left, right;
    std::optional<std::string> context;  // concrete syntax with a [] hole
    std::optional<TypeEnv> context_env;
    std::vector<TraceStep> trace;
    std::string failure;  // why the last move has no answer

    [[nodiscard]] std::string serialize() const;
    static Distinguisher parse(const std::string& text);
};

struct EquivVerdict {
    bool equivalent = false;
    std::optional<Distinguisher> witness;
    std::size_t pairs = 0;  // pair states explored
    std::string label;      // what relation was decided
};

/// Weak typed bisimilarity of CCSL/PIL states; env carries the obligation
/// set. Throws PreconditionViolation if p or q does not check at env.
EquivVerdict bisim_pil(const TypeEnv& env, const Process& p, const Process& q, Calculus c = Calculus::PIL,
                       std::size_t budget = default_state_budget());

/// Weak typed bisimilarity of PILW states, with the wait and tau/l answers.
EquivVerdict bisim_pilw(const TypeEnv& env, const Process& p, const Process& q,
                        std::size_t budget = default_state_budget());

EquivVerdict bisim(const TypeEnv& env, const Process& p, const Process& q, Calculus c,
                   std::size_t budget = default_state_budget());

/// Reduction and barb matching only, no context closure. Requires complete
/// processes (wait-closed env for PILW); PILW observes boolean barbs only.
EquivVerdict barbed_game(const TypeEnv& env, const Process& p, const Process& q, Calculus c,
                         std::size_t budget = default_state_budget());

/// Plugs `text` into the [] of a context template.
std::string plug(const std::string& context, const Process& p);

/// Candidate contexts for a pair typed at env: the forwarder detector, the
/// acquire-order detector built from E_w, and a plain completion context.
std::vector<std::string> context_family(const TypeEnv& env, const Process& p, const Process& q, Calculus c);

/// Runs barbed_game on E[p], E[q] for the given context (or every member of
/// the family) and returns the first distinguishing context. With a user
/// template the plugged terms must be typable at one environment (env' if
/// given) and complete, else PreconditionViolation.
std::optional<Distinguisher> refute_with_context(const std::optional<std::string>& context, const TypeEnv& env,
                                                 const Process& p, const Process& q, Calculus c,
                                                 const std::optional<TypeEnv>& context_env = std::nullopt,
                                                 std::size_t budget = default_state_budget());

/// Re-executes the evidence; true when it still separates the two sides.
bool replay(const Distinguisher& d, std::size_t budget = default_state_budget());

/// Adds a wait under every restriction: new l.P becomes new l.(P | l((x)).0).
Process encw(const Process& p);
/// PILW environment for encw(p): usage 10 for names of R, 00 otherwise.
TypeEnv encw_env(const TypeEnv& env, const Process& p);

}  // namespace pilock
