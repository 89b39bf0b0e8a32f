#include "pilock/ast.hpp"

#include <functional>

#include "pilock/textio.hpp"

namespace pilock {

std::string calculus_name(Calculus c) {
    switch (c) {
        case Calculus::CCSL: return "ccsl";
        case Calculus::PIL: return "pil";
        case Calculus::PILW: return "pilw";
    }
    return "?";
}

std::string Name::str() const {
    if (index == 0) return label;
    return label + "'" + std::to_string(index);
}

Name Name::unit() { return Name("()", 0); }

std::string Value::str() const {
    switch (kind) {
        case Kind::Name: return name.str();
        case Kind::Bool: return flag ? "tt" : "ff";
        case Kind::Unit: return "";
    }
    return "";
}

const Sort& Sort::payload() const {
    if (!payload_) throw std::logic_error("payload of a non-lock sort");
    return *payload_;
}

std::string Sort::str() const {
    switch (kind_) {
        case Kind::Bool: return "bool";
        case Kind::Unit: return "unit";
        case Kind::Lock: return "Lock<" + payload_->str() + ">";
    }
    return "?";
}

bool Sort::operator==(const Sort& o) const {
    if (kind_ != o.kind_) return false;
    if (kind_ != Kind::Lock) return true;
    return *payload_ == *o.payload_;
}

namespace {

Process make(ProcessNode n) { return std::make_shared<const ProcessNode>(std::move(n)); }

}  // namespace

Process nil(SourceSpan s) {
    ProcessNode n;
    n.kind = ProcKind::Nil;
    n.span = s;
    return make(std::move(n));
}

Process release(Name subject, Value payload, SourceSpan s) {
    ProcessNode n;
    n.kind = ProcKind::Release;
    n.subject = std::move(subject);
    n.payload = std::move(payload);
    n.span = s;
    return make(std::move(n));
}

Process acquire(Name subject, Name binder, Process b, SourceSpan s) {
    ProcessNode n;
    n.kind = ProcKind::Acquire;
    n.subject = std::move(subject);
    n.binder = std::move(binder);
    n.left = std::move(b);
    n.span = s;
    return make(std::move(n));
}

Process wait(Name subject, Name binder, Process b, SourceSpan s) {
    ProcessNode n;
    n.kind = ProcKind::Wait;
    n.subject = std::move(subject);
    n.binder = std::move(binder);
    n.left = std::move(b);
    n.span = s;
    return make(std::move(n));
}

Process restrict(Name name, Process b, std::optional<Sort> annotation, SourceSpan s) {
    ProcessNode n;
    n.kind = ProcKind::Restrict;
    n.subject = std::move(name);
    n.left = std::move(b);
    n.annotation = std::move(annotation);
    n.span = s;
    return make(std::move(n));
}

Process par(Process l, Process r, SourceSpan s) {
    ProcessNode n;
    n.kind = ProcKind::Par;
    n.left = std::move(l);
    n.right = std::move(r);
    n.span = s;
    return make(std::move(n));
}

Process match(Value a, Value b, Process then_p, Process else_p, SourceSpan s) {
    ProcessNode n;
    n.kind = ProcKind::Match;
    n.lhs = std::move(a);
    n.rhs = std::move(b);
    n.left = std::move(then_p);
    n.right = std::move(else_p);
    n.span = s;
    return make(std::move(n));
}

Process par_all(const std::vector<Process>& ps) {
    if (ps.empty()) return nil();
    Process acc = ps.back();
    for (std::size_t i = ps.size() - 1; i-- > 0;) acc = par(ps[i], acc);
    return acc;
}

NameSet free_locks(const Value& v) {
    if (v.is_name()) return {v.name};
    return {};
}

namespace {

void collect_free(const Process& p, NameSet& out, std::multiset<Name>& bound) {
    auto note = [&](const Name& n) {
        if (!n.is_unit() && bound.find(n) == bound.end()) out.insert(n);
    };
    auto note_value = [&](const Value& v) {
        if (v.is_name()) note(v.name);
    };
    switch (p->kind) {
        case ProcKind::Nil: return;
        case ProcKind::Release:
            note(p->subject);
            note_value(p->payload);
            return;
        case ProcKind::Acquire:
        case ProcKind::Wait: {
            note(p->subject);
            auto it = bound.insert(p->binder);
            collect_free(p->left, out, bound);
            bound.erase(it);
            return;
        }
        case ProcKind::Restrict: {
            auto it = bound.insert(p->subject);
            collect_free(p->left, out, bound);
            bound.erase(it);
            return;
        }
        case ProcKind::Par:
            collect_free(p->left, out, bound);
            collect_free(p->right, out, bound);
            return;
        case ProcKind::Match:
            note_value(p->lhs);
            note_value(p->rhs);
            collect_free(p->left, out, bound);
            collect_free(p->right, out, bound);
            return;
    }
}

void collect_all(const Process& p, NameSet& out) {
    auto note_value = [&](const Value& v) {
        if (v.is_name()) out.insert(v.name);
    };
    switch (p->kind) {
        case ProcKind::Nil: return;
        case ProcKind::Release:
            out.insert(p->subject);
            note_value(p->payload);
            return;
        case ProcKind::Acquire:
        case ProcKind::Wait:
            out.insert(p->subject);
            if (!p->binder.is_unit()) out.insert(p->binder);
            collect_all(p->left, out);
            return;
        case ProcKind::Restrict:
            out.insert(p->subject);
            collect_all(p->left, out);
            return;
        case ProcKind::Par:
            collect_all(p->left, out);
            collect_all(p->right, out);
            return;
        case ProcKind::Match:
            note_value(p->lhs);
            note_value(p->rhs);
            collect_all(p->left, out);
            collect_all(p->right, out);
            return;
    }
}

Name rename_name(const Name& n, const Name& from, const Name& to) { return n == from ? to : n; }

Value rename_value(const Value& v, const Name& from, const Name& to) {
    if (v.is_name() && v.name == from) return Value::of(to);
    return v;
}

// Renames free occurrences of `from` to `to`; `to` must not be bound anywhere in p.
Process rename_free(const Process& p, const Name& from, const Name& to) {
    switch (p->kind) {
        case ProcKind::Nil: return p;
        case ProcKind::Release:
            return release(rename_name(p->subject, from, to), rename_value(p->payload, from, to), p->span);
        case ProcKind::Acquire:
        case ProcKind::Wait: {
            Name s = rename_name(p->subject, from, to);
            Process b = p->binder == from ? p->left : rename_free(p->left, from, to);
            return p->kind == ProcKind::Acquire ? acquire(s, p->binder, b, p->span) : wait(s, p->binder, b, p->span);
        }
        case ProcKind::Restrict: {
            if (p->subject == from) return p;
            return restrict(p->subject, rename_free(p->left, from, to), p->annotation, p->span);
        }
        case ProcKind::Par:
            return par(rename_free(p->left, from, to), rename_free(p->right, from, to), p->span);
        case ProcKind::Match:
            return match(rename_value(p->lhs, from, to), rename_value(p->rhs, from, to),
                         rename_free(p->left, from, to), rename_free(p->right, from, to), p->span);
    }
    return p;
}

// Rebuilds p with every binder replaced by gen(old binder), in one pass:
// `ren` maps the binders in scope to their new names.
Process rename_binders_in(const Process& p, const std::function<Name(const Name&)>& gen, std::map<Name, Name>& ren) {
    auto nm = [&](const Name& n) {
        auto it = ren.find(n);
        return it == ren.end() ? n : it->second;
    };
    auto val = [&](const Value& v) { return v.is_name() ? Value::of(nm(v.name)) : v; };
    // binds `b` to a fresh name while the body is rebuilt
    auto scoped = [&](const Name& b, const Process& body, Name& fresh) {
        fresh = gen(b);
        auto prev = ren.find(b);
        std::optional<Name> saved;
        if (prev != ren.end()) saved = prev->second;
        ren[b] = fresh;
        Process out = rename_binders_in(body, gen, ren);
        if (saved)
            ren[b] = *saved;
        else
            ren.erase(b);
        return out;
    };
    switch (p->kind) {
        case ProcKind::Nil: return p;
        case ProcKind::Release: return release(nm(p->subject), val(p->payload), p->span);
        case ProcKind::Acquire:
        case ProcKind::Wait: {
            Name subject = nm(p->subject);
            Name binder = p->binder;
            Process b = binder.is_unit() ? rename_binders_in(p->left, gen, ren) : scoped(p->binder, p->left, binder);
            return p->kind == ProcKind::Acquire ? acquire(subject, binder, b, p->span)
                                                : wait(subject, binder, b, p->span);
        }
        case ProcKind::Restrict: {
            Name fresh;
            Process b = scoped(p->subject, p->left, fresh);
            return restrict(fresh, b, p->annotation, p->span);
        }
        case ProcKind::Par:
            return par(rename_binders_in(p->left, gen, ren), rename_binders_in(p->right, gen, ren), p->span);
        case ProcKind::Match:
            return match(val(p->lhs), val(p->rhs), rename_binders_in(p->left, gen, ren),
                         rename_binders_in(p->right, gen, ren), p->span);
    }
    return p;
}

Process rename_binders(const Process& p, const std::function<Name(const Name&)>& gen) {
    std::map<Name, Name> ren;
    return rename_binders_in(p, gen, ren);
}

}  // namespace

NameSet free_locks(const Process& p) {
    NameSet out;
    std::multiset<Name> bound;
    collect_free(p, out, bound);
    return out;
}

NameSet all_names(const Process& p) {
    NameSet out;
    collect_all(p, out);
    return out;
}

Name fresh_name(const std::string& label, const NameSet& avoid) {
    for (unsigned k = 1;; ++k) {
        Name n(label, k);
        if (avoid.find(n) == avoid.end()) return n;
    }
}

Process substitute(const Process& p, const Value& v, const Name& x) {
    if (x.is_unit()) return p;
    switch (p->kind) {
        case ProcKind::Nil: return p;
        case ProcKind::Release: {
            Name s = p->subject;
            if (s == x) {
                if (!v.is_name()) throw SortError("a boolean cannot replace a release subject", print(p));
                s = v.name;
            }
            Value pay = (p->payload.is_name() && p->payload.name == x) ? v : p->payload;
            return release(s, pay, p->span);
        }
        case ProcKind::Acquire:
        case ProcKind::Wait:
        case ProcKind::Restrict: {
            Name s = p->subject;
            Name b = p->kind == ProcKind::Restrict ? p->subject : p->binder;
            Process bd = p->left;
            if (p->kind != ProcKind::Restrict && s == x) {
                if (!v.is_name()) throw SortError("a boolean cannot replace a prefix subject", print(p));
                s = v.name;
            }
            bool shadowed = (b == x);
            if (!shadowed && !b.is_unit()) {
                NameSet fl = free_locks(bd);
                if (fl.count(x) == 0) {
                    shadowed = true;  // nothing to do in the body
                } else if (v.is_name() && v.name == b) {
                    NameSet avoid = all_names(bd);
                    avoid.insert(v.name);
                    avoid.insert(x);
                    Name fresh = fresh_name(b.label, avoid);
                    bd = rename_free(bd, b, fresh);
                    b = fresh;
                }
            }
            if (!shadowed) bd = substitute(bd, v, x);
            switch (p->kind) {
                case ProcKind::Acquire: return acquire(s, b, bd, p->span);
                case ProcKind::Wait: return wait(s, b, bd, p->span);
                default: return restrict(b, bd, p->annotation, p->span);
            }
        }
        case ProcKind::Par:
            return par(substitute(p->left, v, x), substitute(p->right, v, x), p->span);
        case ProcKind::Match: {
            Value a = (p->lhs.is_name() && p->lhs.name == x) ? v : p->lhs;
            Value b = (p->rhs.is_name() && p->rhs.name == x) ? v : p->rhs;
            return match(a, b, substitute(p->left, v, x), substitute(p->right, v, x), p->span);
        }
    }
    return p;
}

Process substitute(const Process& p, const Value& v, const Name& x, const SortMap& sorts) {
    auto it = sorts.find(x);
    if (it != sorts.end()) {
        bool ok = true;
        if (v.kind == Value::Kind::Bool) ok = it->second.kind() == Sort::Kind::Bool;
        else if (v.kind == Value::Kind::Unit) ok = it->second.kind() == Sort::Kind::Unit;
        else {
            auto jt = sorts.find(v.name);
            if (jt != sorts.end()) ok = jt->second == it->second;
        }
        if (!ok) throw SortError("substituted value has the wrong sort for " + x.str(), print(p));
    }
    return substitute(p, v, x);
}

Process uniquify(const Process& p, const NameSet& reserved) {
    NameSet avoid = all_names(p);
    avoid.insert(reserved.begin(), reserved.end());
    NameSet free = free_locks(p);
    free.insert(reserved.begin(), reserved.end());
    NameSet seen;
    return rename_binders(p, [&](const Name& b) {
        if (free.count(b) == 0 && seen.count(b) == 0) {
            seen.insert(b);
            return b;
        }
        Name n = fresh_name(b.label, avoid);
        avoid.insert(n);
        seen.insert(n);
        return n;
    });
}

Process alpha_normalize(const Process& p) {
    NameSet free = free_locks(p);
    unsigned raw = 0;
    Process q = rename_binders(p, [&](const Name&) { return Name("%", ++raw); });
    unsigned k = 0;
    return rename_binders(q, [&](const Name&) {
        Name n;
        do n = Name("b", ++k);
        while (free.count(n) != 0);
        return n;
    });
}

bool same_term(const Process& p, const Process& q) {
    if (p->kind != q->kind) return false;
    switch (p->kind) {
        case ProcKind::Nil: return true;
        case ProcKind::Release: return p->subject == q->subject && p->payload == q->payload;
        case ProcKind::Acquire:
        case ProcKind::Wait:
            return p->subject == q->subject && p->binder == q->binder && same_term(p->left, q->left);
        case ProcKind::Restrict:
            return p->subject == q->subject && p->annotation == q->annotation && same_term(p->left, q->left);
        case ProcKind::Par: return same_term(p->left, q->left) && same_term(p->right, q->right);
        case ProcKind::Match:
            return p->lhs == q->lhs && p->rhs == q->rhs && same_term(p->left, q->left) &&
                   same_term(p->right, q->right);
    }
    return false;
}

bool alpha_equivalent(const Process& p, const Process& q) {
    return same_term(alpha_normalize(p), alpha_normalize(q));
}

namespace {

// Union-find over sort terms.
class SortSolver {
public:
    enum class K { Var, Bool, Unit, Lock };

    int fresh(K k = K::Var, int child = -1) {
        nodes_.push_back({static_cast<int>(nodes_.size()), k, child});
        return static_cast<int>(nodes_.size()) - 1;
    }

    int from_sort(const Sort& s) {
        switch (s.kind()) {
            case Sort::Kind::Bool: return fresh(K::Bool);
            case Sort::Kind::Unit: return fresh(K::Unit);
            case Sort::Kind::Lock: return fresh(K::Lock, from_sort(s.payload()));
        }
        return fresh();
    }

    int find(int a) {
        while (nodes_[a].parent != a) {
            nodes_[a].parent = nodes_[nodes_[a].parent].parent;
            a = nodes_[a].parent;
        }
        return a;
    }

    bool occurs(int var, int t) {
        t = find(t);
        if (t == var) return true;
        if (nodes_[t].kind == K::Lock) return occurs(var, nodes_[t].child);
        return false;
    }

    // Returns false on clash.
    bool unify(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return true;
        if (nodes_[a].kind == K::Var) {
            if (occurs(a, b)) return false;
            nodes_[a].parent = b;
            return true;
        }
        if (nodes_[b].kind == K::Var) return unify(b, a);
        if (nodes_[a].kind != nodes_[b].kind) return false;
        if (nodes_[a].kind == K::Lock) {
            int ca = nodes_[a].child, cb = nodes_[b].child;
            nodes_[a].parent = b;
            return unify(ca, cb);
        }
        nodes_[a].parent = b;
        return true;
    }

    Sort resolve(int a, const Sort& dflt) {
        a = find(a);
        switch (nodes_[a].kind) {
            case K::Var: return dflt;
            case K::Bool: return Sort::boolean();
            case K::Unit: return Sort::unit();
            case K::Lock: return Sort::lock(resolve(nodes_[a].child, dflt));
        }
        return dflt;
    }

private:
    struct Node {
        int parent;
        K kind;
        int child;
    };
    std::vector<Node> nodes_;
};

}  // namespace

SortMap infer_sorts(const Process& input, Calculus c, const SortMap& seed) {
    NameSet reserved;
    for (const auto& kv : seed) reserved.insert(kv.first);
    Process p = uniquify(input, reserved);
    SortSolver s;
    std::map<Name, int> node_of;
    for (const auto& [n, srt] : seed) node_of[n] = s.from_sort(srt);
    auto name_node = [&](const Name& n) {
        auto it = node_of.find(n);
        if (it != node_of.end()) return it->second;
        int id = s.fresh();
        node_of[n] = id;
        return id;
    };
    auto value_node = [&](const Value& v) {
        switch (v.kind) {
            case Value::Kind::Name: return name_node(v.name);
            case Value::Kind::Bool: return s.fresh(SortSolver::K::Bool);
            case Value::Kind::Unit: return s.fresh(SortSolver::K::Unit);
        }
        return s.fresh();
    };
    std::function<void(const Process&)> walk = [&](const Process& q) {
        switch (q->kind) {
            case ProcKind::Nil: return;
            case ProcKind::Release: {
                if (q->payload.is_name() && q->payload.name == q->subject)
                    throw SortError("release stores its own subject " + q->subject.str(), print(q));
                int payload = value_node(q->payload);
                if (!s.unify(name_node(q->subject), s.fresh(SortSolver::K::Lock, payload)))
                    throw SortError("release payload does not match the stored sort of " + q->subject.str(),
                                    print(q));
                return;
            }
            case ProcKind::Acquire:
            case ProcKind::Wait: {
                int payload = q->binder.is_unit() ? s.fresh(SortSolver::K::Unit) : name_node(q->binder);
                if (!s.unify(name_node(q->subject), s.fresh(SortSolver::K::Lock, payload)))
                    throw SortError("binder sort does not match the stored sort of " + q->subject.str(),
                                    print(q));
                walk(q->left);
                return;
            }
            case ProcKind::Restrict: {
                int n = name_node(q->subject);
                if (!s.unify(n, s.fresh(SortSolver::K::Lock, s.fresh())))
                    throw SortError("restricted name " + q->subject.str() + " is not a lock", print(q));
                if (q->annotation && !s.unify(n, s.from_sort(*q->annotation)))
                    throw SortError("restricted name " + q->subject.str() + " used against its annotation",
                                    print(q));
                walk(q->left);
                return;
            }
            case ProcKind::Par:
                walk(q->left);
                walk(q->right);
                return;
            case ProcKind::Match:
                if (!s.unify(value_node(q->lhs), value_node(q->rhs)))
                    throw SortError("match compares values of different sorts", print(q));
                walk(q->left);
                walk(q->right);
                return;
        }
    };
    walk(p);
    // free names are lock names; only binders may hold booleans
    for (const auto& n : free_locks(p))
        if (!s.unify(name_node(n), s.fresh(SortSolver::K::Lock, s.fresh())))
            throw SortError("free name " + n.str() + " is used as a boolean", print(p));
    Sort dflt = c == Calculus::CCSL ? Sort::unit() : Sort::boolean();
    SortMap out;
    for (const auto& [n, id] : node_of) out.emplace(n, s.resolve(id, dflt));
    return out;
}

SortVerdict sort_check(const Process& p, const SortMap& sorts, Calculus c) {
    try {
        infer_sorts(p, c, sorts);
        return {};
    } catch (const SortError& e) {
        return {false, e.what(), e.subterm()};
    }
}

std::size_t prefix_count(const Process& p) {
    switch (p->kind) {
        case ProcKind::Nil:
        case ProcKind::Release: return 0;
        case ProcKind::Acquire:
        case ProcKind::Wait: return 1 + prefix_count(p->left);
        case ProcKind::Restrict: return prefix_count(p->left);
        case ProcKind::Par:
        case ProcKind::Match: return prefix_count(p->left) + prefix_count(p->right);
    }
    return 0;
}

std::size_t term_size(const Process& p) {
    switch (p->kind) {
        case ProcKind::Nil:
        case ProcKind::Release: return 1;
        case ProcKind::Acquire:
        case ProcKind::Wait:
        case ProcKind::Restrict: return 1 + term_size(p->left);
        case ProcKind::Par:
        case ProcKind::Match: return 1 + term_size(p->left) + term_size(p->right);
    }
    return 1;
}

}  // namespace pilock
