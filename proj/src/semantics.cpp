#include "pilock/semantics.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "pilock/textio.hpp"

namespace pilock {

std::string Config::key() const { return print_env(env, true) + " |- " + proc.key; }

Config make_config(const Process& p, const TypeEnv& env) {
    Config c;
    c.env = env;
    c.env.canonicalize();
    c.proc = normalize(p, CongruenceMode::Full, env.domain());
    return c;
}

Name fresh_for(const NameSet& taken) { return fresh_name("n", taken); }

bool is_terminated(const NormalForm& nf) {
    return std::all_of(nf.primes.begin(), nf.primes.end(),
                       [](const Process& p) { return p->kind == ProcKind::Release; });
}

namespace {

// Top-level pieces of a normal form.
struct View {
    const NormalForm& nf;
    NameSet restricted;
    std::vector<NameSet> free;  // free names per prime

    explicit View(const NormalForm& n) : nf(n) {
        restricted.insert(nf.restricted.begin(), nf.restricted.end());
        for (const auto& p : nf.primes) free.push_back(free_locks(p));
    }

    bool used_elsewhere(const Name& l, std::size_t a, std::size_t b) const {
        for (std::size_t k = 0; k < free.size(); ++k)
            if (k != a && k != b && free[k].count(l)) return true;
        return false;
    }
};

// Successor: primes `drop` removed, `add` appended, restricted name `gone`
// removed, and optionally `from` renamed to `to` in the surviving primes.
NormalForm successor(const NormalForm& nf, std::vector<std::size_t> drop, const std::vector<Process>& add,
                     const NameSet& avoid, const Name* gone = nullptr, const Name* to = nullptr) {
    std::vector<Process> primes;
    for (std::size_t k = 0; k < nf.primes.size(); ++k) {
        if (std::find(drop.begin(), drop.end(), k) != drop.end()) continue;
        Process p = nf.primes[k];
        if (gone && to) p = substitute(p, Value::of(*to), *gone);
        primes.push_back(p);
    }
    primes.insert(primes.end(), add.begin(), add.end());
    std::vector<Name> names;
    std::vector<std::optional<Sort>> annots;
    for (std::size_t j = 0; j < nf.restricted.size(); ++j) {
        if (gone && nf.restricted[j] == *gone) continue;
        names.push_back(nf.restricted[j]);
        annots.push_back(nf.annotations[j]);
    }
    return assemble(names, annots, primes, avoid);
}

Process instantiate(const Process& prefix, const Value& v) {
    if (prefix->binder.is_unit()) return body(prefix);
    return substitute(body(prefix), v, prefix->binder);
}

SortMap sorts_of(const Process& p, Calculus c, const TypeEnv* env, const StepContext* ctx) {
    SortMap seed;
    if (env) seed = env_sorts(*env);
    SortMap out;
    try {
        out = infer_sorts(p, c, seed);
    } catch (const SortError&) {
        out = seed;
    }
    if (ctx)
        for (const auto& kv : ctx->sorts) out.emplace(kv.first, kv.second);
    return out;
}

// Sort of the value an acquire or wait prefix binds.
std::optional<Sort> binder_sort(const Process& prefix, const SortMap& sorts) {
    auto it = sorts.find(prefix->subject);
    if (it != sorts.end() && it->second.is_lock()) return it->second.payload();
    if (prefix->binder.is_unit()) return Sort::unit();
    auto jt = sorts.find(prefix->binder);
    if (jt != sorts.end()) return jt->second;
    return std::nullopt;
}

NameSet taken_names(const NormalForm& nf, const TypeEnv* env, const StepContext* ctx) {
    NameSet taken = all_names(nf.process);
    if (env) {
        NameSet d = env->domain();
        taken.insert(d.begin(), d.end());
    }
    if (ctx) taken.insert(ctx->known.begin(), ctx->known.end());
    return taken;
}

std::vector<Value> candidates(const Sort& s, const NameSet& pool, const SortMap& sorts, const Name& fresh) {
    std::vector<Value> out;
    switch (s.kind()) {
        case Sort::Kind::Bool:
            out.push_back(Value::boolean(true));
            out.push_back(Value::boolean(false));
            return out;
        case Sort::Kind::Unit: out.push_back(Value::unit()); return out;
        case Sort::Kind::Lock:
            for (const auto& n : pool) {
                auto it = sorts.find(n);
                if (it != sorts.end() && it->second == s) out.push_back(Value::of(n));
            }
            out.push_back(Value::of(fresh));
            return out;
    }
    return out;
}

NameSet value_pool(const NormalForm& nf, const TypeEnv* env, const StepContext* ctx) {
    NameSet pool = free_locks(nf.process);
    if (env) {
        NameSet d = env->domain();
        pool.insert(d.begin(), d.end());
    }
    if (ctx) pool.insert(ctx->known.begin(), ctx->known.end());
    return pool;
}

// tau steps shared by all calculi: communication, and the restricted wait redex.
void internal_steps(const NormalForm& nf, const View& v, const NameSet& avoid,
                    std::vector<std::pair<Action, NormalForm>>& out) {
    const auto& ps = nf.primes;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        if (ps[i]->kind != ProcKind::Release) continue;
        const Name& l = ps[i]->subject;
        for (std::size_t j = 0; j < ps.size(); ++j) {
            if (ps[j]->subject != l) continue;
            if (ps[j]->kind == ProcKind::Acquire) {
                out.emplace_back(Action::tau(), successor(nf, {i, j}, {instantiate(ps[j], ps[i]->payload)}, avoid));
            } else if (ps[j]->kind == ProcKind::Wait && v.restricted.count(l)) {
                if (v.used_elsewhere(l, i, j) || free_locks(body(ps[j])).count(l)) continue;
                if (ps[i]->payload.is_name() && ps[i]->payload.name == l) continue;
                out.emplace_back(Action::tau(),
                                 successor(nf, {i, j}, {instantiate(ps[j], ps[i]->payload)}, avoid, &l, nullptr));
            }
        }
    }
}

}  // namespace

std::vector<NormalForm> reductions(const Process& p, Calculus c) {
    (void)c;
    NormalForm nf = normalize(p);
    View v(nf);
    std::vector<std::pair<Action, NormalForm>> steps;
    internal_steps(nf, v, {}, steps);
    std::vector<NormalForm> out;
    std::set<std::string> seen;
    for (auto& s : steps)
        if (seen.insert(s.second.key).second) out.push_back(s.second);
    return out;
}

namespace {

std::vector<std::pair<Action, NormalForm>> untyped_on(const NormalForm& nf, Calculus c, const TypeEnv* env,
                                                      const StepContext* ctx) {
    std::vector<std::pair<Action, NormalForm>> out;
    View v(nf);
    NameSet avoid = env ? env->domain() : NameSet{};
    internal_steps(nf, v, avoid, out);
    SortMap sorts = sorts_of(nf.process, c, env, ctx);
    NameSet taken = taken_names(nf, env, ctx);
    Name fresh = fresh_for(taken);
    NameSet pool = value_pool(nf, env, ctx);
    const auto& ps = nf.primes;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const Process& q = ps[i];
        if (v.restricted.count(q->subject)) continue;
        if (q->kind == ProcKind::Release) {
            const Value& val = q->payload;
            if (val.is_name() && v.restricted.count(val.name)) {
                NameSet av = avoid;
                av.insert(fresh);
                out.emplace_back(Action::bound_output(q->subject, fresh),
                                 successor(nf, {i}, {}, av, &val.name, &fresh));
            } else {
                out.emplace_back(Action::output(q->subject, val), successor(nf, {i}, {}, avoid));
            }
        } else if (q->kind == ProcKind::Acquire) {
            auto s = binder_sort(q, sorts);
            if (!s) continue;
            for (const auto& val : candidates(*s, pool, sorts, fresh))
                out.emplace_back(Action::input(q->subject, val), successor(nf, {i}, {instantiate(q, val)}, avoid));
        }
    }
    return out;
}

}  // namespace

std::vector<std::pair<Action, NormalForm>> untyped_steps(const Process& p, Calculus c, const StepContext* ctx) {
    return untyped_on(normalize(p), c, nullptr, ctx);
}

std::vector<Step> typed_steps_pil(const Config& cfg, Calculus c, const StepContext* ctx) {
    std::vector<Step> out;
    const TypeEnv& env = cfg.env;
    SortMap sorts = sorts_of(cfg.proc.process, c, &env, ctx);
    auto hyp = [&](const Name& n) {
        auto it = sorts.find(n);
        return it == sorts.end() ? Type::any() : Type::from_sort(it->second);
    };
    auto lock_value = [&](const Value& v) {
        if (!v.is_name()) return false;
        auto it = sorts.find(v.name);
        return it != sorts.end() && it->second.is_lock();
    };
    for (auto& [a, nf] : untyped_on(cfg.proc, c, &env, ctx)) {
        TypeEnv next = env;
        switch (a.kind) {
            case Action::Kind::Tau: break;
            case Action::Kind::FreeOutput: {
                if (!env.obligations.count(a.subject)) continue;
                if (lock_value(a.value) && (env.find(a.subject) < 0 || env.find(a.subject) != env.find(a.value.name)))
                    continue;
                next.obligations.erase(a.subject);
                break;
            }
            case Action::Kind::BoundOutput: {
                if (!env.obligations.count(a.subject)) continue;
                int ci = env.find(a.subject);
                if (ci < 0) continue;
                const Name& n = a.value.name;
                auto it = sorts.find(a.subject);
                Type t = (it != sorts.end() && it->second.is_lock()) ? Type::from_sort(it->second.payload()) : Type::any();
                next.components[ci].hyps.emplace(n, t);
                next.obligations.erase(a.subject);
                next.obligations.insert(n);
                break;
            }
            case Action::Kind::Input: {
                if (env.obligations.count(a.subject) || env.find(a.subject) < 0) continue;
                TypeEnv unit;
                unit.flavor = Flavor::Obligations;
                Component g;
                g.hyps.emplace(a.subject, hyp(a.subject));
                // the value's sort comes from the lock, so fresh names count too
                auto st = sorts.find(a.subject);
                if (a.value.is_name() && st != sorts.end() && st->second.is_lock() && st->second.payload().is_lock())
                    g.hyps.emplace(a.value.name, Type::from_sort(st->second.payload()));
                unit.components.push_back(g);
                unit.obligations.insert(a.subject);
                auto composed = compose(env, unit);
                if (!composed) continue;
                next = *composed;
                break;
            }
            default: continue;
        }
        next.canonicalize();
        Config target;
        target.env = next;
        target.proc = nf;
        // re-normalize if the environment gained names the bound names must avoid
        if (next.domain() != env.domain()) target.proc = normalize(nf.process, CongruenceMode::Full, next.domain());
        out.push_back({a, std::move(target)});
    }
    return out;
}

namespace {

// Adds `v : Lock(pay)^u` to the component of `home`, merging v's own component.
bool join_value(TypeEnv& e, const Name& home, const Name& v, const Type& stored) {
    int hi = e.find(home);
    if (hi < 0) return false;
    int vi = e.find(v);
    if (vi == hi) return false;
    if (vi < 0) {
        e.components[hi].hyps.emplace(v, stored);
        return true;
    }
    auto h = compose_hyp(e.components[vi].hyps.at(v), stored, Flavor::Usages);
    if (!h) return false;
    e.components[vi].hyps[v] = *h;
    for (const auto& kv : e.components[vi].hyps) e.components[hi].hyps.insert(kv);
    e.components.erase(e.components.begin() + vi);
    return true;
}

void set_usage(TypeEnv& e, const Name& n, Usage u) {
    int i = e.find(n);
    if (i >= 0) e.components[i].hyps[n] = e.components[i].hyps[n].with_usage(u);
}

}  // namespace

std::vector<Step> typed_steps_pilw(const Config& cfg, const StepContext* ctx) {
    std::vector<Step> out;
    const TypeEnv& env = cfg.env;
    const NormalForm& nf = cfg.proc;
    const auto& ps = nf.primes;
    View v(nf);
    NameSet avoid = env.domain();
    SortMap sorts = sorts_of(nf.process, Calculus::PILW, &env, ctx);
    NameSet taken = taken_names(nf, &env, ctx);
    Name fresh = fresh_for(taken);
    NameSet pool = value_pool(nf, &env, ctx);

    auto emit = [&](Action a, TypeEnv e, NormalForm n) {
        e.canonicalize();
        Config c;
        if (e.domain() != env.domain()) n = normalize(n.process, CongruenceMode::Full, e.domain());
        c.env = std::move(e);
        c.proc = std::move(n);
        out.push_back({std::move(a), std::move(c)});
    };

    // communications and restricted wait redexes keep the environment
    std::vector<std::pair<Action, NormalForm>> internal;
    internal_steps(nf, v, avoid, internal);
    for (auto& [a, n] : internal) emit(a, env, n);

    for (std::size_t i = 0; i < ps.size(); ++i) {
        const Process& q = ps[i];
        const Name& l = q->subject;
        if (v.restricted.count(l)) continue;
        const Type* tl = env.lookup(l);
        if (!tl || !tl->is_lock()) continue;
        const Type& stored = tl->payload();
        Usage ul = tl->usage();

        if (q->kind == ProcKind::Release) {
            const Value& val = q->payload;
            // wait synchronisation on a free lock
            for (std::size_t j = 0; j < ps.size(); ++j) {
                if (ps[j]->kind != ProcKind::Wait || ps[j]->subject != l) continue;
                if (ul != Usage{1, 1}) continue;
                if (v.used_elsewhere(l, i, j) || free_locks(body(ps[j])).count(l)) continue;
                if (val.is_name() && val.name == l) continue;
                TypeEnv e = env;
                int li = e.find(l);
                e.components[li].hyps.erase(l);
                emit(Action::tau_slash(l), e, successor(nf, {i, j}, {instantiate(ps[j], val)}, avoid));
            }
            if (ul.r != 1) continue;
            TypeEnv e = env;
            set_usage(e, l, Usage{0, ul.w});
            if (val.is_name() && v.restricted.count(val.name)) {
                Usage left{1 - stored.usage().r, 1 - stored.usage().w};
                if (!stored.is_lock()) continue;
                e.components[e.find(l)].hyps.emplace(fresh, Type::lock(stored.payload(), left));
                NameSet av = avoid;
                av.insert(fresh);
                emit(Action::bound_output(l, fresh), e, successor(nf, {i}, {}, av, &val.name, &fresh));
            } else {
                if (val.is_name() && stored.is_lock()) {
                    const Type* tv = env.lookup(val.name);
                    if (!tv) continue;
                    Usage u{tv->usage().r - stored.usage().r, tv->usage().w - stored.usage().w};
                    if (u.r < 0 || u.w < 0) continue;
                    set_usage(e, val.name, u);
                }
                emit(Action::output(l, val), e, successor(nf, {i}, {}, avoid));
            }
        } else if (q->kind == ProcKind::Acquire || q->kind == ProcKind::Wait) {
            bool is_wait = q->kind == ProcKind::Wait;
            if (is_wait) {
                if (ul != Usage{0, 1}) continue;
                if (v.used_elsewhere(l, i, i) || free_locks(body(q)).count(l)) continue;
            } else if (ul.r != 0) {
                continue;
            }
            auto s = stored.sort();
            if (!s) continue;
            for (const auto& val : candidates(*s, pool, sorts, fresh)) {
                if (val.is_name() && (val.name == l || v.restricted.count(val.name))) continue;
                TypeEnv e = env;
                if (val.is_name() && !join_value(e, l, val.name, stored)) continue;
                if (is_wait) {
                    e.components[e.find(l)].hyps.erase(l);
                } else {
                    set_usage(e, l, Usage{1, ul.w});
                }
                Action a = is_wait ? Action::wait_act(l, val) : Action::input(l, val);
                NameSet av = avoid;
                if (val.is_name()) av.insert(val.name);
                emit(a, e, successor(nf, {i}, {instantiate(q, val)}, av));
            }
        }
    }
    return out;
}

std::vector<Step> typed_steps(const Config& cfg, Calculus c, const StepContext* ctx) {
    if (c == Calculus::PILW) return typed_steps_pilw(cfg, ctx);
    return typed_steps_pil(cfg, c, ctx);
}

std::vector<Config> tau_closure(const Config& cfg, Calculus c, const StepContext* ctx) {
    std::vector<Config> out{cfg};
    std::set<std::string> seen{cfg.key()};
    std::deque<Config> todo{cfg};
    while (!todo.empty()) {
        Config cur = todo.front();
        todo.pop_front();
        for (auto& s : typed_steps(cur, c, ctx)) {
            if (!s.action.is_tau()) continue;
            if (!seen.insert(s.target.key()).second) continue;
            out.push_back(s.target);
            todo.push_back(s.target);
        }
    }
    return out;
}

std::vector<Config> weak_closure(const Config& cfg, const Action& mu, Calculus c, const StepContext* ctx) {
    if (mu.is_tau()) return tau_closure(cfg, c, ctx);
    std::vector<Config> out;
    std::set<std::string> seen;
    for (const auto& pre : tau_closure(cfg, c, ctx)) {
        for (auto& s : typed_steps(pre, c, ctx)) {
            if (!(s.action == mu)) continue;
            for (auto& post : tau_closure(s.target, c, ctx))
                if (seen.insert(post.key()).second) out.push_back(post);
        }
    }
    return out;
}

}  // namespace pilock
