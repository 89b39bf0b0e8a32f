#include "pilock/typing.hpp"

#include <algorithm>
#include <functional>

#include "pilock/textio.hpp"

namespace pilock {

// ---------------------------------------------------------------- types

Type Type::lock(const Type& payload, Usage u) {
    Type t(Kind::Lock);
    t.usage_ = u;
    t.payload_ = std::make_shared<const Type>(payload);
    return t;
}

Type Type::from_sort(const Sort& s, Usage top) {
    switch (s.kind()) {
        case Sort::Kind::Bool: return boolean();
        case Sort::Kind::Unit: return unit();
        case Sort::Kind::Lock: return lock(from_sort(s.payload()), top);
    }
    return any();
}

const Type& Type::payload() const {
    if (!payload_) throw std::logic_error("payload of a non-lock type");
    return *payload_;
}

Type Type::with_usage(Usage u) const {
    Type t = *this;
    t.usage_ = u;
    return t;
}

std::optional<Sort> Type::sort() const {
    switch (kind_) {
        case Kind::Bool: return Sort::boolean();
        case Kind::Unit: return Sort::unit();
        case Kind::Any: return std::nullopt;
        case Kind::Lock: {
            auto inner = payload_->sort();
            if (!inner) return std::nullopt;
            return Sort::lock(*inner);
        }
    }
    return std::nullopt;
}

std::string Type::str() const {
    switch (kind_) {
        case Kind::Bool: return "bool";
        case Kind::Unit: return "unit";
        case Kind::Any: return "?";
        case Kind::Lock: return "Lock<" + payload_->str() + ">^" + usage_.str();
    }
    return "?";
}

bool Type::operator==(const Type& o) const {
    if (kind_ != o.kind_) return false;
    if (kind_ != Kind::Lock) return true;
    return usage_ == o.usage_ && *payload_ == *o.payload_;
}

Flavor flavor_of(Calculus c) { return c == Calculus::PILW ? Flavor::Usages : Flavor::Obligations; }

NameSet Component::names() const {
    NameSet out;
    for (const auto& kv : hyps) out.insert(kv.first);
    return out;
}

void TypeEnv::canonicalize() {
    components.erase(std::remove_if(components.begin(), components.end(),
                                    [](const Component& g) { return g.hyps.empty(); }),
                     components.end());
    std::sort(components.begin(), components.end(), [](const Component& a, const Component& b) {
        return a.hyps.begin()->first < b.hyps.begin()->first;
    });
}

NameSet TypeEnv::domain() const {
    NameSet out;
    for (const auto& g : components)
        for (const auto& kv : g.hyps) out.insert(kv.first);
    return out;
}

int TypeEnv::find(const Name& n) const {
    for (std::size_t i = 0; i < components.size(); ++i)
        if (components[i].contains(n)) return static_cast<int>(i);
    return -1;
}

const Type* TypeEnv::lookup(const Name& n) const {
    int i = find(n);
    if (i < 0) return nullptr;
    return &components[i].hyps.at(n);
}

bool TypeEnv::well_formed(std::string* why) const {
    NameSet seen;
    for (const auto& g : components) {
        for (const auto& [n, t] : g.hyps) {
            if (!seen.insert(n).second) {
                if (why) *why = "name " + n.str() + " occurs in two components";
                return false;
            }
            if (flavor == Flavor::Usages && !t.is_lock()) {
                if (why) *why = "name " + n.str() + " lacks a lock type";
                return false;
            }
        }
    }
    for (const auto& n : obligations) {
        if (!seen.count(n)) {
            if (why) *why = "obligation " + n.str() + " is outside the domain";
            return false;
        }
    }
    return true;
}

std::string TypeEnv::str() const { return print_env(*this); }

bool TypeEnv::operator==(const TypeEnv& o) const {
    if (flavor != o.flavor || obligations != o.obligations) return false;
    TypeEnv a = *this, b = o;
    a.canonicalize();
    b.canonicalize();
    return a.components == b.components;
}

std::string kind_name(TypeErrorKind k) {
    switch (k) {
        case TypeErrorKind::DoubleRelease: return "DoubleRelease";
        case TypeErrorKind::MissingRelease: return "MissingRelease";
        case TypeErrorKind::CompositionCycle: return "CompositionCycle";
        case TypeErrorKind::MissingWait: return "MissingWait";
        case TypeErrorKind::UsageOverflow: return "UsageOverflow";
        case TypeErrorKind::SelfStorage: return "SelfStorage";
        case TypeErrorKind::ReleasedBinder: return "ReleasedBinder";
        case TypeErrorKind::MatchMismatch: return "MatchMismatch";
        case TypeErrorKind::WaitSubjectInBody: return "WaitSubjectInBody";
        case TypeErrorKind::PayloadMismatch: return "PayloadMismatch";
        case TypeErrorKind::DeclaredEnvMismatch: return "DeclaredEnvMismatch";
        case TypeErrorKind::SortMismatch: return "SortMismatch";
        case TypeErrorKind::UsageConflict: return "UsageConflict";
        case TypeErrorKind::ObligationClash: return "ObligationClash";
        case TypeErrorKind::DeallocatedNamePresent: return "DeallocatedNamePresent";
        case TypeErrorKind::CalculusMismatch: return "CalculusMismatch";
    }
    return "?";
}

std::string TypeError::str() const {
    std::string s = kind_name(kind);
    if (!rule.empty()) s += " [" + rule + "]";
    if (!reason.empty()) s += ": " + reason;
    if (!subterm.empty()) s += " in `" + subterm + "`";
    return s;
}

namespace {

TypeError err(TypeErrorKind k, std::string rule, std::string reason, const Process& at = nullptr) {
    return TypeError{k, std::move(rule), std::move(reason), at ? print(at) : std::string()};
}

std::string names_str(const NameSet& s) {
    std::string out = "{";
    bool first = true;
    for (const auto& n : s) {
        if (!first) out += ",";
        first = false;
        out += n.str();
    }
    return out + "}";
}

}  // namespace

// ---------------------------------------------------------------- algebra

Typed<Type> compose_hyp(const Type& a, const Type& b, Flavor f) {
    if (f == Flavor::Obligations) {
        if (a.kind() == Type::Kind::Any) return Typed<Type>::ok(b);
        if (b.kind() == Type::Kind::Any) return Typed<Type>::ok(a);
        if (a.sort() && b.sort() && !(*a.sort() == *b.sort()))
            return Typed<Type>::fail(err(TypeErrorKind::PayloadMismatch, "compose", a.str() + " vs " + b.str()));
        return Typed<Type>::ok(a);
    }
    if (!a.is_lock() || !b.is_lock() || !(a.payload() == b.payload()))
        return Typed<Type>::fail(err(TypeErrorKind::PayloadMismatch, "compose", a.str() + " vs " + b.str()));
    Usage u{a.usage().r + b.usage().r, a.usage().w + b.usage().w};
    if (u.r > 1 || u.w > 1)
        return Typed<Type>::fail(err(TypeErrorKind::UsageOverflow, "compose", a.str() + " + " + b.str()));
    return Typed<Type>::ok(a.with_usage(u));
}

Typed<std::vector<Component>> connect(const Component& g, const std::vector<Component>& gs, Flavor f) {
    using R = Typed<std::vector<Component>>;
    Component merged = g;
    std::vector<Component> rest;
    for (const auto& gi : gs) {
        NameSet shared;
        for (const auto& kv : gi.hyps)
            if (g.contains(kv.first)) shared.insert(kv.first);
        if (shared.size() >= 2)
            return R::fail(err(TypeErrorKind::CompositionCycle, "connect", "components share " + names_str(shared)));
        if (shared.empty()) {
            rest.push_back(gi);
            continue;
        }
        for (const auto& [n, t] : gi.hyps) {
            auto it = merged.hyps.find(n);
            if (it == merged.hyps.end()) {
                merged.hyps.emplace(n, t);
            } else {
                auto h = compose_hyp(it->second, t, f);
                if (!h) return R::fail(h.error);
                it->second = *h;
            }
        }
    }
    if (!merged.hyps.empty()) rest.push_back(std::move(merged));
    return R::ok(std::move(rest));
}

Typed<TypeEnv> compose(const TypeEnv& e1, const TypeEnv& e2) {
    using R = Typed<TypeEnv>;
    if (e1.flavor != e2.flavor)
        return R::fail(err(TypeErrorKind::CalculusMismatch, "compose", "environments of different flavours"));
    NameSet clash;
    for (const auto& n : e1.obligations)
        if (e2.obligations.count(n)) clash.insert(n);
    if (!clash.empty())
        return R::fail(err(TypeErrorKind::ObligationClash, "compose", "both sides own " + names_str(clash)));
    TypeEnv out = e2;
    for (const auto& g : e1.components) {
        auto c = connect(g, out.components, e1.flavor);
        if (!c) return R::fail(c.error);
        out.components = *c;
    }
    out.obligations.insert(e1.obligations.begin(), e1.obligations.end());
    out.canonicalize();
    return R::ok(std::move(out));
}

Typed<TypeEnv> compose_mu(const TypeEnv& e1, const Action& mu, const TypeEnv& e2) {
    if (mu.deallocates() && (e1.find(mu.subject) >= 0 || e2.find(mu.subject) >= 0))
        return Typed<TypeEnv>::fail(err(TypeErrorKind::DeallocatedNamePresent, "compose_mu",
                                        mu.subject.str() + " is deallocated by " + mu.str()));
    return compose(e1, e2);
}

Component flat(const TypeEnv& e) {
    Component out;
    for (const auto& g : e.components) out.hyps.insert(g.hyps.begin(), g.hyps.end());
    return out;
}

SortMap env_sorts(const TypeEnv& e) {
    SortMap out;
    for (const auto& g : e.components)
        for (const auto& [n, t] : g.hyps)
            if (auto s = t.sort()) out.emplace(n, *s);
    return out;
}

bool is_complete(const TypeEnv& e, const Process& p) {
    if (e.flavor == Flavor::Obligations) {
        NameSet fl;
        for (const auto& n : free_locks(p))
            if (e.find(n) >= 0) fl.insert(n);
        return e.obligations == fl;
    }
    for (const auto& g : e.components) {
        for (const auto& [n, t] : g.hyps) {
            if (!t.is_lock() || t.usage() != Usage{1, 0}) return false;
            const Type& pay = t.payload();
            if (pay.kind() == Type::Kind::Bool) continue;
            if (pay.is_lock() && pay.usage() == Usage{0, 0}) continue;
            return false;
        }
    }
    return true;
}

bool is_wait_closed(const TypeEnv& e) {
    for (const auto& g : e.components)
        for (const auto& [n, t] : g.hyps)
            if (!t.is_lock() || t.usage() != Usage{1, 0} || t.payload().kind() != Type::Kind::Bool) return false;
    return true;
}

// ---------------------------------------------------------------- inference

namespace {

bool is_lock_name(const SortMap& sorts, const Name& n) {
    auto it = sorts.find(n);
    return it != sorts.end() && it->second.is_lock();
}

bool is_lock_value(const SortMap& sorts, const Value& v) {
    return v.is_name() && is_lock_name(sorts, v.name);
}

std::vector<NameSet> join_partitions(const std::vector<NameSet>& a, const std::vector<NameSet>& b) {
    std::vector<NameSet> parts = a;
    parts.insert(parts.end(), b.begin(), b.end());
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < parts.size() && !changed; ++i) {
            for (std::size_t j = i + 1; j < parts.size() && !changed; ++j) {
                bool meet = std::any_of(parts[j].begin(), parts[j].end(),
                                        [&](const Name& n) { return parts[i].count(n) != 0; });
                if (meet) {
                    parts[i].insert(parts[j].begin(), parts[j].end());
                    parts.erase(parts.begin() + static_cast<long>(j));
                    changed = true;
                }
            }
        }
    }
    return parts;
}

// Obligation flavour: judgements are TypeEnv values with Any-free types.
class ObligationTyper {
public:
    ObligationTyper(const SortMap& sorts) : sorts_(sorts) {}

    Typed<TypeEnv> go(const Process& q) {
        using R = Typed<TypeEnv>;
        TypeEnv e;
        e.flavor = Flavor::Obligations;
        switch (q->kind) {
            case ProcKind::Nil: return R::ok(e);
            case ProcKind::Release: {
                Component g;
                g.hyps.emplace(q->subject, hyp(q->subject));
                if (is_lock_value(sorts_, q->payload)) {
                    if (q->payload.name == q->subject)
                        return R::fail(err(TypeErrorKind::SelfStorage, "Rel", "a lock cannot store itself", q));
                    g.hyps.emplace(q->payload.name, hyp(q->payload.name));
                }
                e.components.push_back(g);
                e.obligations.insert(q->subject);
                return R::ok(e);
            }
            case ProcKind::Acquire: {
                auto b = go(body(q));
                if (!b) return b;
                const Name& l = q->subject;
                if (!b->obligations.count(l))
                    return R::fail(err(TypeErrorKind::MissingRelease, "Acq",
                                       "the continuation does not release " + l.str(), q));
                bool binder_lock = !q->binder.is_unit() && is_lock_name(sorts_, q->binder);
                if (binder_lock && b->obligations.count(q->binder))
                    return R::fail(err(TypeErrorKind::ReleasedBinder, "Acq",
                                       "the continuation releases the acquired value " + q->binder.str(), q));
                Component g = flat(*b);
                if (binder_lock) g.hyps.erase(q->binder);
                g.hyps.emplace(l, hyp(l));
                e.components.push_back(g);
                e.obligations = b->obligations;
                e.obligations.erase(l);
                return R::ok(e);
            }
            case ProcKind::Wait:
                return R::fail(err(TypeErrorKind::CalculusMismatch, "Wait", "wait prefixes need usage types", q));
            case ProcKind::Restrict: {
                auto b = go(body(q));
                if (!b) return b;
                const Name& n = q->subject;
                int i = b->find(n);
                if (i < 0) return b;  // unused restriction
                if (!b->obligations.count(n))
                    return R::fail(err(TypeErrorKind::MissingRelease, "New",
                                       "restricted lock " + n.str() + " is not released", q));
                e = *b;
                e.obligations.erase(n);
                e.components[i].hyps.erase(n);
                e.canonicalize();
                return R::ok(e);
            }
            case ProcKind::Par: {
                auto l = go(q->left);
                if (!l) return l;
                auto r = go(q->right);
                if (!r) return r;
                NameSet both;
                for (const auto& n : l->obligations)
                    if (r->obligations.count(n)) both.insert(n);
                if (!both.empty())
                    return R::fail(err(TypeErrorKind::DoubleRelease, "Par", names_str(both) + " released twice", q));
                auto c = compose(*l, *r);
                if (!c) {
                    TypeError e2 = c.error;
                    e2.rule = "Par";
                    e2.subterm = print(q);
                    return R::fail(e2);
                }
                return c;
            }
            case ProcKind::Match: {
                auto l = go(q->left);
                if (!l) return l;
                auto r = go(q->right);
                if (!r) return r;
                if (l->obligations != r->obligations)
                    return R::fail(err(TypeErrorKind::MatchMismatch, "Mat",
                                       "branches own " + names_str(l->obligations) + " and " +
                                           names_str(r->obligations),
                                       q));
                std::vector<NameSet> pa, pb;
                for (const auto& g : l->components) pa.push_back(g.names());
                for (const auto& g : r->components) pb.push_back(g.names());
                for (const auto& part : join_partitions(pa, pb)) {
                    Component g;
                    for (const auto& n : part) g.hyps.emplace(n, hyp(n));
                    e.components.push_back(g);
                }
                e.obligations = l->obligations;
                e.canonicalize();
                return R::ok(e);
            }
        }
        return R::ok(e);
    }

private:
    const SortMap& sorts_;
    Type hyp(const Name& n) const {
        auto it = sorts_.find(n);
        return it == sorts_.end() ? Type::any() : Type::from_sort(it->second);
    }
};

// ---- usage flavour: constraint generation over usage bits

class Bits {
public:
    static constexpr int kZero = 0, kOne = 1;
    Bits() : parent_{0, 1} {}
    int fresh() {
        parent_.push_back(static_cast<int>(parent_.size()));
        return static_cast<int>(parent_.size()) - 1;
    }
    int constant(int b) const { return b ? kOne : kZero; }
    int find(int a) {
        while (parent_[a] != a) {
            parent_[a] = parent_[parent_[a]];
            a = parent_[a];
        }
        return a;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return true;
        if (a <= kOne && b <= kOne) return false;
        if (a <= kOne) std::swap(a, b);
        parent_[a] = b;  // constants stay roots
        return true;
    }

private:
    std::vector<int> parent_;
};

struct PTerm;
using PT = std::shared_ptr<PTerm>;
struct PTerm {
    bool lock = false;
    bool unit = false;  // leaf kind
    int r = 0, w = 0;
    PT inner;
};

struct Lin {
    int c = 0;
    std::vector<int> vars;
    static Lin k(int v) { return Lin{v, {}}; }
    static Lin var(int id) { return Lin{0, {id}}; }
    Lin operator+(const Lin& o) const {
        Lin out{c + o.c, vars};
        out.vars.insert(out.vars.end(), o.vars.begin(), o.vars.end());
        return out;
    }
};

struct UsageLin {
    Lin r, w;
};

struct Constraint {
    Lin lhs;
    bool eq = true;  // else lhs <= rhs
    Lin rhs;
    TypeError error;
};

struct WJudgement {
    std::vector<NameSet> parts;
    std::map<Name, UsageLin> use;
};

class UsageTyper {
public:
    UsageTyper(const SortMap& sorts) : sorts_(sorts) {}

    Bits bits;
    std::vector<Constraint> cons;
    std::map<Name, PT> payload_of;
    std::optional<TypeError> structural;

    void seed(const Name& n, const Type& t) {
        if (t.is_lock()) payload_of[n] = from_type(t.payload());
    }

    PT payload(const Name& n) {
        auto it = payload_of.find(n);
        if (it != payload_of.end()) return it->second;
        auto st = sorts_.find(n);
        PT t = (st != sorts_.end() && st->second.is_lock()) ? from_sort(st->second.payload()) : from_sort(Sort::boolean());
        payload_of[n] = t;
        return t;
    }

    // Payload terms are built per name; equal sorts force identical shapes,
    // so unification only has to identify bits.
    bool unify(const PT& a, const PT& b) {
        if (!a->lock || !b->lock) return a->lock == b->lock;
        if (!bits.unite(a->r, b->r) || !bits.unite(a->w, b->w)) return false;
        return unify(a->inner, b->inner);
    }

    std::optional<WJudgement> go(const Process& q) {
        WJudgement j;
        switch (q->kind) {
            case ProcKind::Nil: return j;
            case ProcKind::Release: {
                const Name& l = q->subject;
                NameSet part{l};
                j.use[l] = {Lin::k(1), Lin::k(0)};
                if (is_lock_value(sorts_, q->payload)) {
                    const Name& v = q->payload.name;
                    if (v == l) return fail(err(TypeErrorKind::SelfStorage, "Rel-w", "a lock cannot store itself", q));
                    PT pl = payload(l);
                    if (!unify(pl->inner, payload(v)))
                        return fail(err(TypeErrorKind::PayloadMismatch, "Rel-w",
                                        "stored value " + v.str() + " has a different type", q));
                    j.use[v] = {Lin::var(pl->r), Lin::var(pl->w)};
                    part.insert(v);
                }
                j.parts.push_back(part);
                return j;
            }
            case ProcKind::Acquire:
            case ProcKind::Wait: {
                bool is_wait = q->kind == ProcKind::Wait;
                const char* rule = is_wait ? "Wait-w" : "Acq-w";
                const Name& l = q->subject;
                if (is_wait && free_locks(body(q)).count(l))
                    return fail(err(TypeErrorKind::WaitSubjectInBody, rule,
                                    "the continuation of a wait on " + l.str() + " uses it", q));
                auto b = go(body(q));
                if (!b) return b;
                PT pl = payload(l);
                UsageLin ul = get(*b, l);
                if (!is_wait)
                    cons.push_back({ul.r, true, Lin::k(1),
                                    err(TypeErrorKind::MissingRelease, rule,
                                        "the continuation does not release " + l.str(), q)});
                const Name& x = q->binder;
                if (is_lock_name(sorts_, x)) {
                    if (!unify(pl->inner, payload(x)))
                        return fail(err(TypeErrorKind::PayloadMismatch, rule, "binder type mismatch", q));
                    UsageLin ux = get(*b, x);
                    TypeError e = err(TypeErrorKind::ReleasedBinder, rule,
                                      "use of " + x.str() + " differs from the usage stored in " + l.str(), q);
                    cons.push_back({ux.r, true, Lin::var(pl->r), e});
                    cons.push_back({ux.w, true, Lin::var(pl->w), e});
                }
                NameSet part;
                for (const auto& p : b->parts) part.insert(p.begin(), p.end());
                part.erase(x);
                part.insert(l);
                for (auto& [n, u] : b->use)
                    if (n != x && n != l) j.use[n] = u;
                j.use[l] = is_wait ? UsageLin{Lin::k(0), Lin::k(1)} : UsageLin{Lin::k(0), ul.w};
                j.parts.push_back(part);
                return j;
            }
            case ProcKind::Restrict: {
                auto b = go(body(q));
                if (!b) return b;
                const Name& n = q->subject;
                if (!b->use.count(n)) return b;  // unused restriction
                UsageLin un = b->use[n];
                cons.push_back({un.r, true, Lin::k(1),
                                err(TypeErrorKind::MissingRelease, "New-w",
                                    "restricted lock " + n.str() + " lacks a release", q)});
                cons.push_back({un.w, true, Lin::k(1),
                                err(TypeErrorKind::MissingWait, "New-w",
                                    "restricted lock " + n.str() + " lacks a wait", q)});
                b->use.erase(n);
                for (auto& p : b->parts) p.erase(n);
                b->parts.erase(std::remove_if(b->parts.begin(), b->parts.end(),
                                              [](const NameSet& s) { return s.empty(); }),
                               b->parts.end());
                return b;
            }
            case ProcKind::Par: {
                auto l = go(q->left);
                if (!l) return l;
                auto r = go(q->right);
                if (!r) return r;
                std::vector<NameSet> parts = r->parts;
                for (const auto& g : l->parts) {
                    NameSet merged = g;
                    std::vector<NameSet> rest;
                    for (const auto& gi : parts) {
                        NameSet shared;
                        for (const auto& n : gi)
                            if (g.count(n)) shared.insert(n);
                        if (shared.size() >= 2)
                            return fail(err(TypeErrorKind::CompositionCycle, "Par-w",
                                            "components share " + names_str(shared), q));
                        if (shared.empty()) rest.push_back(gi);
                        else merged.insert(gi.begin(), gi.end());
                    }
                    rest.push_back(merged);
                    parts = rest;
                }
                j.parts = parts;
                j.use = r->use;
                for (const auto& [n, u] : l->use) {
                    auto it = j.use.find(n);
                    if (it == j.use.end()) {
                        j.use[n] = u;
                        continue;
                    }
                    TypeError e = err(TypeErrorKind::UsageOverflow, "Par-w",
                                      "both sides claim the same obligation on " + n.str(), q);
                    cons.push_back({u.r + it->second.r, false, Lin::k(1), e});
                    cons.push_back({u.w + it->second.w, false, Lin::k(1), e});
                    it->second = {u.r + it->second.r, u.w + it->second.w};
                }
                return j;
            }
            case ProcKind::Match: {
                auto l = go(q->left);
                if (!l) return l;
                auto r = go(q->right);
                if (!r) return r;
                j.parts = join_partitions(l->parts, r->parts);
                NameSet names;
                for (const auto& kv : l->use) names.insert(kv.first);
                for (const auto& kv : r->use) names.insert(kv.first);
                for (const auto& n : names) {
                    UsageLin a = get(*l, n), b = get(*r, n);
                    TypeError e = err(TypeErrorKind::MatchMismatch, "Mat-w",
                                      "branches use " + n.str() + " differently", q);
                    cons.push_back({a.r, true, b.r, e});
                    cons.push_back({a.w, true, b.w, e});
                    j.use[n] = a;
                }
                return j;
            }
        }
        return j;
    }

    // Solution: bit rep -> value. Returns the violated constraint on failure.
    std::optional<TypeError> solve(std::map<int, int>& out) {
        struct Norm {
            int c = 0;
            std::map<int, int> coef;  // rep -> multiplicity (lhs positive, rhs negative)
            bool eq = true;
            const TypeError* error = nullptr;
        };
        std::vector<Norm> norm;
        for (const auto& k : cons) {
            Norm n;
            n.eq = k.eq;
            n.error = &k.error;
            auto add = [&](const Lin& l, int sign) {
                n.c += sign * l.c;
                for (int v : l.vars) {
                    int rep = bits.find(v);
                    if (rep == Bits::kZero) continue;
                    if (rep == Bits::kOne) n.c += sign;
                    else n.coef[rep] += sign;
                }
            };
            add(k.lhs, 1);
            add(k.rhs, -1);
            for (auto it = n.coef.begin(); it != n.coef.end();)
                it = it->second == 0 ? n.coef.erase(it) : std::next(it);
            // constraint is: c + sum coef*x (==|<=) 0
            if (n.coef.empty() && (n.eq ? n.c != 0 : n.c > 0)) return k.error;
            norm.push_back(std::move(n));
        }
        std::map<int, int> val;
        for (const auto& n : norm)
            for (const auto& kv : n.coef) val.emplace(kv.first, -1);

        const TypeError* first_conflict = nullptr;
        std::function<bool(std::map<int, int>&)> search = [&](std::map<int, int>& a) -> bool {
            bool changed = true;
            while (changed) {
                changed = false;
                for (const auto& n : norm) {
                    int lo = n.c, hi = n.c;
                    for (const auto& [v, k] : n.coef) {
                        int x = a[v];
                        if (x >= 0) {
                            lo += k * x;
                            hi += k * x;
                        } else if (k > 0) {
                            hi += k;
                        } else {
                            lo += k;
                        }
                    }
                    bool bad = n.eq ? (lo > 0 || hi < 0) : lo > 0;
                    if (bad) {
                        if (!first_conflict) first_conflict = n.error;
                        return false;
                    }
                    // force unknowns when the bound is tight
                    bool tight_lo = lo == 0, tight_hi = n.eq && hi == 0;
                    if (!tight_lo && !tight_hi) continue;
                    for (const auto& [v, k] : n.coef) {
                        if (a[v] >= 0) continue;
                        // at lo every positive term is 0 and every negative term is 1
                        a[v] = tight_lo ? (k > 0 ? 0 : 1) : (k > 0 ? 1 : 0);
                        changed = true;
                    }
                }
            }
            for (auto& [v, x] : a) {
                if (x >= 0) continue;
                for (int choice : {0, 1}) {
                    std::map<int, int> b = a;
                    b[v] = choice;
                    if (search(b)) {
                        a = b;
                        return true;
                    }
                }
                return false;
            }
            return true;
        };
        if (!search(val)) {
            if (first_conflict) return *first_conflict;
            return TypeError{TypeErrorKind::UsageConflict, "solve", "usage constraints have no solution", ""};
        }
        out = val;
        return std::nullopt;
    }

    int bit_value(int id, const std::map<int, int>& sol) {
        int rep = bits.find(id);
        if (rep == Bits::kZero) return 0;
        if (rep == Bits::kOne) return 1;
        auto it = sol.find(rep);
        return (it == sol.end() || it->second < 0) ? 0 : it->second;
    }

    int eval(const Lin& l, const std::map<int, int>& sol) {
        int s = l.c;
        for (int v : l.vars) s += bit_value(v, sol);
        return s;
    }

    Type resolve(const PT& t, const std::map<int, int>& sol) {
        if (!t->lock) return t->unit ? Type::unit() : Type::boolean();
        return Type::lock(resolve(t->inner, sol), Usage{bit_value(t->r, sol), bit_value(t->w, sol)});
    }

    UsageLin get(const WJudgement& j, const Name& n) {
        auto it = j.use.find(n);
        if (it == j.use.end()) return {Lin::k(0), Lin::k(0)};
        return it->second;
    }

private:
    const SortMap& sorts_;

    std::nullopt_t fail(TypeError e) {
        structural = std::move(e);
        return std::nullopt;
    }

    PT from_sort(const Sort& s) {
        auto t = std::make_shared<PTerm>();
        if (s.is_lock()) {
            t->lock = true;
            t->r = bits.fresh();
            t->w = bits.fresh();
            t->inner = from_sort(s.payload());
        } else {
            t->unit = s.kind() == Sort::Kind::Unit;
        }
        return t;
    }

    PT from_type(const Type& ty) {
        auto t = std::make_shared<PTerm>();
        if (ty.is_lock()) {
            t->lock = true;
            t->r = bits.constant(ty.usage().r);
            t->w = bits.constant(ty.usage().w);
            t->inner = from_type(ty.payload());
        } else {
            t->unit = ty.kind() == Type::Kind::Unit;
        }
        return t;
    }
};

Typed<Derivation> derive_obligations(const Process& p, const SortMap& sorts, const TypeEnv* declared) {
    using R = Typed<Derivation>;
    ObligationTyper typer(sorts);
    auto j = typer.go(p);
    if (!j) return R::fail(j.error);
    Derivation d;
    d.env = *j;
    d.env.canonicalize();
    for (const auto& [n, s] : sorts)
        if (s.is_lock()) d.payloads.emplace(n, Type::from_sort(s.payload()));
    if (!declared) return R::ok(std::move(d));
    // weakening at the root
    if (declared->obligations != d.env.obligations)
        return R::fail(err(TypeErrorKind::DeclaredEnvMismatch, "check",
                           "declared obligations " + names_str(declared->obligations) + " but the process owns " +
                               names_str(d.env.obligations)));
    for (const auto& g : d.env.components) {
        NameSet names = g.names();
        int home = declared->find(*names.begin());
        if (home < 0)
            return R::fail(err(TypeErrorKind::DeclaredEnvMismatch, "check",
                               names.begin()->str() + " is missing from the declared environment"));
        for (const auto& n : names)
            if (!declared->components[home].contains(n))
                return R::fail(err(TypeErrorKind::DeclaredEnvMismatch, "check",
                                   "the declared environment separates " + names_str(names)));
    }
    d.env = *declared;
    return R::ok(std::move(d));
}

Typed<Derivation> derive_usages(const Process& p, const SortMap& sorts, const TypeEnv* declared) {
    using R = Typed<Derivation>;
    UsageTyper typer(sorts);
    if (declared)
        for (const auto& g : declared->components)
            for (const auto& [n, t] : g.hyps) typer.seed(n, t);
    auto j = typer.go(p);
    if (!j) return R::fail(*typer.structural);
    if (declared) {
        for (const auto& [n, u] : j->use) {
            const Type* t = declared->lookup(n);
            if (!t)
                return R::fail(err(TypeErrorKind::DeclaredEnvMismatch, "check",
                                   n.str() + " is missing from the declared environment"));
            TypeError e = err(TypeErrorKind::DeclaredEnvMismatch, "check",
                              "declared usage " + t->usage().str() + " for " + n.str() + " is not the one required");
            typer.cons.push_back({u.r, true, Lin::k(t->usage().r), e});
            typer.cons.push_back({u.w, true, Lin::k(t->usage().w), e});
        }
        for (const auto& g : declared->components)
            for (const auto& [n, t] : g.hyps)
                if (!j->use.count(n) && t.usage() != Usage{0, 0})
                    return R::fail(err(TypeErrorKind::DeclaredEnvMismatch, "check",
                                       "unused name " + n.str() + " must have usage 00"));
        for (const auto& part : j->parts) {
            int home = declared->find(*part.begin());
            for (const auto& n : part)
                if (home < 0 || !declared->components[home].contains(n))
                    return R::fail(err(TypeErrorKind::DeclaredEnvMismatch, "check",
                                       "the declared environment separates " + names_str(part)));
        }
    }
    std::map<int, int> sol;
    if (auto e = typer.solve(sol)) return R::fail(*e);
    Derivation d;
    d.env.flavor = Flavor::Usages;
    for (const auto& part : j->parts) {
        Component g;
        for (const auto& n : part) {
            const auto& u = j->use.at(n);
            g.hyps.emplace(n, Type::lock(typer.resolve(typer.payload(n), sol),
                                         Usage{typer.eval(u.r, sol), typer.eval(u.w, sol)}));
        }
        d.env.components.push_back(g);
    }
    d.env.canonicalize();
    for (const auto& [n, s] : sorts)
        if (s.is_lock()) d.payloads.emplace(n, typer.resolve(typer.payload(n), sol));
    if (declared) d.env = *declared;
    return R::ok(std::move(d));
}

}  // namespace

Typed<Derivation> derive(const Process& input, Calculus c, const TypeEnv* declared) {
    using R = Typed<Derivation>;
    if (declared) {
        std::string why;
        if (declared->flavor != flavor_of(c))
            return R::fail(err(TypeErrorKind::DeclaredEnvMismatch, "check", "environment flavour does not match"));
        if (!declared->well_formed(&why))
            return R::fail(err(TypeErrorKind::DeclaredEnvMismatch, "check", why));
    }
    NameSet reserved = declared ? declared->domain() : NameSet{};
    Process p = uniquify(input, reserved);
    SortMap seed = declared ? env_sorts(*declared) : SortMap{};
    SortMap sorts;
    try {
        sorts = infer_sorts(p, c, seed);
    } catch (const SortError& e) {
        return R::fail(TypeError{TypeErrorKind::SortMismatch, "sort", e.what(), e.subterm()});
    }
    if (c == Calculus::PILW) return derive_usages(p, sorts, declared);
    return derive_obligations(p, sorts, declared);
}

Typed<TypeEnv> infer(const Process& p, Calculus c) {
    auto d = derive(p, c);
    if (!d) return Typed<TypeEnv>::fail(d.error);
    return Typed<TypeEnv>::ok(d->env);
}

Typed<TypeEnv> check(const Process& p, const TypeEnv& declared, Calculus c) {
    auto d = derive(p, c, &declared);
    if (!d) return Typed<TypeEnv>::fail(d.error);
    return Typed<TypeEnv>::ok(d->env);
}

}  // namespace pilock
