#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pilock/action.hpp"
#include "pilock/ast.hpp"

namespace pilock {

/// Release bit r and wait bit w of a lock hypothesis.
struct Usage {
    int r = 0;
    int w = 0;
    auto operator<=>(const Usage&) const = default;
    [[nodiscard]] std::string str() const { return std::to_string(r) + std::to_string(w); }
};

/// bool | unit | Lock<T>^rw, plus `Any` for unannotated names in
/// obligation-flavoured environments.
class Type {
public:
    enum class Kind { Bool, Unit, Lock, Any };

    Type() = default;  // Any
    static Type boolean() { return Type(Kind::Bool); }
    static Type unit() { return Type(Kind::Unit); }
    static Type any() { return Type(Kind::Any); }
    static Type lock(const Type& payload, Usage u = {});
    /// Lock sorts become lock types with usage 00 at every level but the top.
    static Type from_sort(const Sort& s, Usage top = {});

    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] bool is_lock() const { return kind_ == Kind::Lock; }
    [[nodiscard]] const Type& payload() const;
    [[nodiscard]] Usage usage() const { return usage_; }
    [[nodiscard]] Type with_usage(Usage u) const;
    [[nodiscard]] std::optional<Sort> sort() const;
    [[nodiscard]] std::string str() const;

    bool operator==(const Type& o) const;

private:
    explicit Type(Kind k) : kind_(k) {}
    Kind kind_ = Kind::Any;
    Usage usage_;
    std::shared_ptr<const Type> payload_;
};

enum class Flavor { Obligations, Usages };

Flavor flavor_of(Calculus c);

/// A component: names used together. Obligation-flavoured environments use
/// the types only as sort hints.
struct Component {
    std::map<Name, Type> hyps;

    [[nodiscard]] bool contains(const Name& n) const { return hyps.count(n) != 0; }
    [[nodiscard]] NameSet names() const;
    bool operator==(const Component& o) const { return hyps == o.hyps; }
};

struct TypeEnv {
    Flavor flavor = Flavor::Obligations;
    std::vector<Component> components;
    NameSet obligations;  // obligation flavour only

    /// Drops empty components and orders the rest by their least name.
    void canonicalize();
    [[nodiscard]] NameSet domain() const;
    [[nodiscard]] int find(const Name& n) const;
    [[nodiscard]] const Type* lookup(const Name& n) const;
    [[nodiscard]] bool well_formed(std::string* why = nullptr) const;
    [[nodiscard]] std::string str() const;

    bool operator==(const TypeEnv& o) const;
};

enum class TypeErrorKind {
    DoubleRelease,
    MissingRelease,
    CompositionCycle,
    MissingWait,
    UsageOverflow,
    SelfStorage,
    ReleasedBinder,
    MatchMismatch,
    WaitSubjectInBody,
    PayloadMismatch,
    DeclaredEnvMismatch,
    SortMismatch,
    UsageConflict,
    ObligationClash,
    DeallocatedNamePresent,
    CalculusMismatch,
};

std::string kind_name(TypeErrorKind k);

struct TypeError {
    TypeErrorKind kind = TypeErrorKind::UsageConflict;
    std::string rule;
    std::string reason;
    std::string subterm;

    [[nodiscard]] std::string str() const;
};

template <class T>
struct Typed {
    std::optional<T> value;
    TypeError error;

    static Typed ok(T v) { return Typed{std::move(v), {}}; }
    static Typed fail(TypeError e) { return Typed{std::nullopt, std::move(e)}; }
    explicit operator bool() const { return value.has_value(); }
    const T& operator*() const { return *value; }
    const T* operator->() const { return &*value; }
};

/// Merge of g into gs; undefined when some member shares two or more names
/// with g, or when hypotheses for a shared name do not compose.
Typed<std::vector<Component>> connect(const Component& g, const std::vector<Component>& gs, Flavor f);
Typed<TypeEnv> compose(const TypeEnv& e1, const TypeEnv& e2);
/// compose, additionally undefined if mu deallocates a name of either domain.
Typed<TypeEnv> compose_mu(const TypeEnv& e1, const Action& mu, const TypeEnv& e2);
Component flat(const TypeEnv& e);

/// Hypothesis composition: equal payloads, usages added without overflow.
Typed<Type> compose_hyp(const Type& a, const Type& b, Flavor f);

/// Finest judgement plus the payload type of every name of the uniquified
/// term (restricted names and binders included).
struct Derivation {
    TypeEnv env;
    std::map<Name, Type> payloads;
};

Typed<Derivation> derive(const Process& p, Calculus c, const TypeEnv* declared = nullptr);

Typed<TypeEnv> infer(const Process& p, Calculus c);
Typed<TypeEnv> check(const Process& p, const TypeEnv& declared, Calculus c);

bool is_complete(const TypeEnv& e, const Process& p);
bool is_wait_closed(const TypeEnv& e);

/// Sorts recorded in the environment (types of kind Any are skipped).
SortMap env_sorts(const TypeEnv& e);

}  // namespace pilock
