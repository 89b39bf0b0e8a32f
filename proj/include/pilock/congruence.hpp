#pragma once

#include <string>
#include <vector>

#include "pilock/ast.hpp"

namespace pilock {

/// `Full` resolves top-level matches both ways; `Restricted` never fires the
/// mismatch axiom. Prefix bodies and match branches are always Restricted.
enum class CongruenceMode { Full, Restricted };

/// Canonical representative of a structural congruence class. Restricted
/// names are pulled to the outside and renamed `r'k`, binders `x'k`, with a
/// single counter that skips the free names of the term.
struct NormalForm {
    std::vector<Name> restricted;
    std::vector<std::optional<Sort>> annotations;  // parallel to restricted
    std::vector<Process> primes;  // Release, Acquire, Wait or Match nodes, sorted
    Process process;              // new r'1 ... (prime | ... | prime)
    std::string key;              // print(process)

    bool operator==(const NormalForm& o) const { return key == o.key; }
    bool operator<(const NormalForm& o) const { return key < o.key; }
};

/// `avoid` lists extra names the canonical bound names must not take, e.g.
/// the domain of the environment a state is typed in.
NormalForm normalize(const Process& p, CongruenceMode mode = CongruenceMode::Full, const NameSet& avoid = {});
bool struct_equiv(const Process& p, const Process& q);
Process to_process(const NormalForm& nf);

/// Rebuilds `new S.(primes)` and normalizes it.
NormalForm assemble(const std::vector<Name>& restricted, const std::vector<std::optional<Sort>>& annotations,
                    const std::vector<Process>& primes, const NameSet& avoid = {});

}  // namespace pilock
