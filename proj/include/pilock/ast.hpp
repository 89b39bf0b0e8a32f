#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace pilock {

enum class Calculus { CCSL, PIL, PILW };

std::string calculus_name(Calculus c);

/// Position of a node or error in the source text.
struct SourceSpan {
    std::size_t start = 0;
    std::size_t end = 0;
    std::size_t line = 1;
    std::size_t column = 1;
};

/// A lock name: a label plus a disambiguating index. Index 0 prints as the
/// bare label, index k > 0 prints as `label'k`.
struct Name {
    std::string label;
    unsigned index = 0;

    Name() = default;
    Name(std::string l, unsigned i = 0) : label(std::move(l)), index(i) {}

    auto operator<=>(const Name&) const = default;

    [[nodiscard]] std::string str() const;

    /// Binder placeholder used by CCSL prefixes, which carry no value.
    static Name unit();
    [[nodiscard]] bool is_unit() const { return label == "()"; }
};

using NameSet = std::set<Name>;

struct Value {
    enum class Kind { Name, Bool, Unit };
    Kind kind = Kind::Unit;
    Name name;
    bool flag = false;

    static Value of(Name n) { return Value{Kind::Name, std::move(n), false}; }
    static Value boolean(bool b) { return Value{Kind::Bool, {}, b}; }
    static Value unit() { return Value{Kind::Unit, {}, false}; }

    [[nodiscard]] bool is_name() const { return kind == Kind::Name; }
    [[nodiscard]] std::string str() const;

    auto operator<=>(const Value&) const = default;
};

/// Sort of a name: bool, unit (CCSL payload) or a lock carrying a sort.
class Sort {
public:
    enum class Kind { Bool, Unit, Lock };

    static Sort boolean() { return Sort(Kind::Bool, nullptr); }
    static Sort unit() { return Sort(Kind::Unit, nullptr); }
    static Sort lock(const Sort& payload) { return Sort(Kind::Lock, std::make_shared<Sort>(payload)); }

    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] bool is_lock() const { return kind_ == Kind::Lock; }
    [[nodiscard]] const Sort& payload() const;
    [[nodiscard]] std::string str() const;

    bool operator==(const Sort& o) const;
    bool operator<(const Sort& o) const { return str() < o.str(); }

private:
    Sort(Kind k, std::shared_ptr<const Sort> p) : kind_(k), payload_(std::move(p)) {}
    Kind kind_ = Kind::Bool;
    std::shared_ptr<const Sort> payload_;
};

using SortMap = std::map<Name, Sort>;

enum class ProcKind { Nil, Release, Acquire, Wait, Restrict, Par, Match };

struct ProcessNode;
using Process = std::shared_ptr<const ProcessNode>;

/// One node of a process term. Fields not used by a kind stay default.
struct ProcessNode {
    ProcKind kind = ProcKind::Nil;
    Name subject;                 // Release/Acquire/Wait subject, Restrict name
    Value payload;                // Release payload
    Name binder;                  // Acquire/Wait binder
    std::optional<Sort> annotation;
    Value lhs, rhs;               // Match operands
    Process left, right;          // Par operands, Match branches, prefix body (left)
    SourceSpan span;
};

Process nil(SourceSpan s = {});
Process release(Name subject, Value payload, SourceSpan s = {});
Process acquire(Name subject, Name binder, Process body, SourceSpan s = {});
Process wait(Name subject, Name binder, Process body, SourceSpan s = {});
Process restrict(Name n, Process body, std::optional<Sort> annotation = std::nullopt, SourceSpan s = {});
Process par(Process l, Process r, SourceSpan s = {});
Process match(Value a, Value b, Process then_p, Process else_p, SourceSpan s = {});

/// Right-nested parallel composition; the empty list gives Nil.
Process par_all(const std::vector<Process>& ps);

/// Prefix body of an Acquire/Wait, scope of a Restrict.
inline const Process& body(const Process& p) { return p->left; }

class SortError : public std::runtime_error {
public:
    SortError(const std::string& msg, std::string subterm)
        : std::runtime_error(msg), subterm_(std::move(subterm)) {}
    [[nodiscard]] const std::string& subterm() const { return subterm_; }

private:
    std::string subterm_;
};

NameSet free_locks(const Process& p);
NameSet free_locks(const Value& v);

/// All names occurring in p, free or bound.
NameSet all_names(const Process& p);

/// Capture-avoiding p{v/x}. The sort-checked variant throws SortError when
/// the sort of v differs from the sort recorded for x.
Process substitute(const Process& p, const Value& v, const Name& x);
Process substitute(const Process& p, const Value& v, const Name& x, const SortMap& sorts);

/// Renames every binder to `label'k` with k taken from a counter, skipping
/// free names; equal results mean alpha-equivalent inputs.
Process alpha_normalize(const Process& p);
bool alpha_equivalent(const Process& p, const Process& q);

/// Structural equality ignoring spans.
bool same_term(const Process& p, const Process& q);

/// Binders renamed so that no name is bound twice and no binder clashes
/// with a free name or a name of `reserved`. Binders that are already unique
/// keep their name.
Process uniquify(const Process& p, const NameSet& reserved = {});

/// Smallest `label'k` (k >= 1) not in `avoid`.
Name fresh_name(const std::string& label, const NameSet& avoid);

/// Sort reconstruction by unification. Names of `seed` are fixed. The
/// result maps every free name and (after uniquify) every binder to a sort.
/// Unconstrained sorts default to bool (unit in CCSL).
SortMap infer_sorts(const Process& p, Calculus c, const SortMap& seed = {});

struct SortVerdict {
    bool ok = true;
    std::string message;
    std::string subterm;
};

SortVerdict sort_check(const Process& p, const SortMap& sorts, Calculus c = Calculus::PIL);

/// Number of Acquire/Wait prefixes (both match branches counted).
std::size_t prefix_count(const Process& p);
std::size_t term_size(const Process& p);

}  // namespace pilock
