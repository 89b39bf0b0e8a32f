#include "pilock/verify.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "pilock/equiv.hpp"
#include "pilock/textio.hpp"

namespace pilock {

std::size_t default_state_budget() {
    if (const char* s = std::getenv("PILOCK_MAX_STATES")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(s, &end, 10);
        if (end && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return 1000000;
}

std::vector<std::size_t> StateGraph::successors(std::size_t n) const {
    std::vector<std::size_t> out;
    for (const auto& e : edges)
        if (e.from == n) out.push_back(e.to);
    return out;
}

std::vector<std::size_t> StateGraph::path_to(std::size_t n) const {
    // edges are recorded in BFS order, so the first edge into a node is its tree edge
    std::map<std::size_t, std::size_t> parent_edge;
    for (std::size_t i = 0; i < edges.size(); ++i)
        if (edges[i].to != 0) parent_edge.emplace(edges[i].to, i);
    std::vector<std::size_t> path;
    std::set<std::size_t> seen;
    while (n != 0 && parent_edge.count(n) && seen.insert(n).second) {
        std::size_t e = parent_edge.at(n);
        path.push_back(e);
        n = edges[e].from;
    }
    std::reverse(path.begin(), path.end());
    return path;
}

std::string StateGraph::to_edge_list() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < nodes.size(); ++i) os << "node\t" << i << "\t" << nodes[i].key() << "\n";
    for (const auto& e : edges) os << e.from << "\t" << e.action.str() << "\t" << e.to << "\n";
    return os.str();
}

namespace {

std::string dot_escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        if (ch == '"' || ch == '\\') out += '\\';
        out += ch;
    }
    return out;
}

}  // namespace

std::string StateGraph::to_dot() const {
    std::ostringstream os;
    os << "digraph states {\n";
    for (std::size_t i = 0; i < nodes.size(); ++i)
        os << "  s" << i << " [label=\"" << dot_escape(nodes[i].proc.key) << "\"];\n";
    for (const auto& e : edges)
        os << "  s" << e.from << " -> s" << e.to << " [label=\"" << dot_escape(e.action.str()) << "\"];\n";
    os << "}\n";
    return os.str();
}

StateGraph explore(const Config& root, Calculus c, StepMode mode, std::size_t budget, const StepContext* ctx) {
    StateGraph g;
    std::map<std::string, std::size_t> index;
    g.nodes.push_back(root);
    index.emplace(root.key(), 0);
    std::deque<std::size_t> todo{0};
    while (!todo.empty()) {
        std::size_t cur = todo.front();
        todo.pop_front();
        Config here = g.nodes[cur];
        for (auto& s : typed_steps(here, c, ctx)) {
            if (mode == StepMode::Reductions && !s.action.is_tau()) continue;
            std::string k = s.target.key();
            auto it = index.find(k);
            std::size_t to;
            if (it == index.end()) {
                if (g.nodes.size() >= budget) throw StateBudgetExceeded(budget);
                to = g.nodes.size();
                index.emplace(k, to);
                g.nodes.push_back(std::move(s.target));
                todo.push_back(to);
            } else {
                to = it->second;
            }
            g.edges.push_back({cur, s.action, to});
        }
    }
    return g;
}

std::string classification_name(Classification k) {
    switch (k) {
        case Classification::Terminated: return "Terminated";
        case Classification::Stuck: return "Stuck";
        case Classification::Deadlocked: return "Deadlocked";
        case Classification::Reducible: return "Reducible";
    }
    return "?";
}

Classification classify(const Process& p, bool complete, Calculus c) {
    if (!reductions(p, c).empty()) return Classification::Reducible;
    NormalForm nf = normalize(p);
    if (is_terminated(nf)) return Classification::Terminated;
    return complete ? Classification::Deadlocked : Classification::Stuck;
}

namespace {

std::optional<Name> leak_in(const NormalForm& nf) {
    for (const auto& l : nf.restricted) {
        std::size_t users = 0;
        bool released = false;
        for (const auto& p : nf.primes) {
            if (!free_locks(p).count(l)) continue;
            ++users;
            if (p->kind == ProcKind::Release && p->subject == l &&
                !(p->payload.is_name() && p->payload.name == l))
                released = true;
        }
        if (users == 1 && released) return l;
    }
    return std::nullopt;
}

}  // namespace

std::optional<Name> find_leak(const Process& p) { return leak_in(normalize(p)); }

std::string status_name(ProgressVerdict::Status s) {
    switch (s) {
        case ProgressVerdict::Status::Pass: return "Pass";
        case ProgressVerdict::Status::Fail: return "Fail";
        case ProgressVerdict::Status::Incomplete: return "Incomplete";
    }
    return "?";
}

ProgressVerdict check_progress(const Config& root, Calculus c, std::size_t budget) {
    ProgressVerdict v;
    StateGraph g;
    try {
        g = explore(root, c, StepMode::Reductions, budget);
    } catch (const StateBudgetExceeded& e) {
        v.status = ProgressVerdict::Status::Incomplete;
        v.reason = e.what();
        return v;
    }
    v.states = g.nodes.size();
    std::vector<bool> has_succ(g.nodes.size(), false);
    for (const auto& e : g.edges) has_succ[e.from] = true;
    auto witness = [&](std::size_t n) {
        std::vector<std::string> w{g.nodes[0].proc.key};
        for (std::size_t e : g.path_to(n))
            w.push_back("--" + g.edges[e].action.str() + "--> " + g.nodes[g.edges[e].to].proc.key);
        return w;
    };
    for (std::size_t n = 0; n < g.nodes.size(); ++n) {
        const NormalForm& nf = g.nodes[n].proc;
        if (c == Calculus::PILW) {
            if (auto l = leak_in(nf)) {
                ++v.leaks;
                if (v.status == ProgressVerdict::Status::Pass) {
                    v.status = ProgressVerdict::Status::Fail;
                    v.reason = "state leaks " + l->str();
                    v.witness = witness(n);
                }
            }
        }
        if (has_succ[n]) continue;
        if (!is_terminated(nf)) {
            ++v.deadlocks;
            if (v.status == ProgressVerdict::Status::Pass) {
                v.status = ProgressVerdict::Status::Fail;
                v.reason = "deadlocked state";
                v.witness = witness(n);
            }
            continue;
        }
        ++v.terminated_leaves;
        NameSet subjects;
        for (const auto& p : nf.primes) {
            if (!subjects.insert(p->subject).second && v.status == ProgressVerdict::Status::Pass) {
                v.status = ProgressVerdict::Status::Fail;
                v.reason = "two releases of " + p->subject.str() + " in a terminated state";
                v.witness = witness(n);
            }
        }
    }
    return v;
}

std::string Barb::str() const {
    if (bound) return subject.str() + "!(new)";
    return subject.str() + "!" + payload.str();
}

std::set<Barb> strong_barbs(const NormalForm& nf) {
    std::set<Barb> out;
    NameSet restricted(nf.restricted.begin(), nf.restricted.end());
    for (const auto& p : nf.primes) {
        if (p->kind != ProcKind::Release || restricted.count(p->subject)) continue;
        if (p->payload.is_name() && restricted.count(p->payload.name))
            out.insert(Barb{p->subject, Value::unit(), true});
        else
            out.insert(Barb{p->subject, p->payload, false});
    }
    return out;
}

std::set<Barb> barbs(const Process& p, bool weak, bool booleans_only) {
    std::set<Barb> out;
    NormalForm root = normalize(p);
    std::vector<NormalForm> states{root};
    if (weak) {
        std::set<std::string> seen{root.key};
        std::deque<NormalForm> todo{root};
        while (!todo.empty()) {
            NormalForm cur = todo.front();
            todo.pop_front();
            for (auto& n : reductions(cur.process, Calculus::PILW)) {
                if (!seen.insert(n.key).second) continue;
                states.push_back(n);
                todo.push_back(n);
            }
        }
    }
    for (const auto& s : states)
        for (const auto& b : strong_barbs(s))
            if (!booleans_only || (!b.bound && b.payload.kind == Value::Kind::Bool)) out.insert(b);
    return out;
}

namespace {

// Release of l available in p: not under an acquire on l or a binder for l.
// A stored l (some l0!l) counts as well, since it may carry the obligation.
bool provides(const Process& p, const Name& l) {
    switch (p->kind) {
        case ProcKind::Nil: return false;
        case ProcKind::Release:
            return p->subject == l || (p->payload.is_name() && p->payload.name == l);
        case ProcKind::Acquire:
        case ProcKind::Wait:
            if (p->binder == l) return false;
            if (p->kind == ProcKind::Acquire && p->subject == l) return false;
            return provides(body(p), l);
        case ProcKind::Restrict:
            if (p->subject == l) return false;
            return provides(body(p), l);
        case ProcKind::Par:
        case ProcKind::Match: return provides(p->left, l) || provides(p->right, l);
    }
    return false;
}

}  // namespace

LockGraph lock_graph(const Process& p) {
    LockGraph g;
    NormalForm nf = normalize(p);
    g.vertices = nf.primes;
    const std::size_t n = g.vertices.size();
    std::vector<NameSet> free;
    for (const auto& v : g.vertices) free.push_back(free_locks(v));
    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Process& v = g.vertices[i];
        if (v->kind != ProcKind::Acquire && v->kind != ProcKind::Wait) continue;
        const Name& l = v->subject;
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            bool edge = v->kind == ProcKind::Acquire ? provides(g.vertices[j], l) : free[j].count(l) != 0;
            if (edge) {
                g.edges.emplace_back(i, j);
                adj[i].push_back(j);
            }
        }
    }
    // cycle search by colouring DFS
    std::vector<int> colour(n, 0);
    std::vector<std::size_t> stack;
    std::function<bool(std::size_t)> dfs = [&](std::size_t u) {
        colour[u] = 1;
        stack.push_back(u);
        for (std::size_t w : adj[u]) {
            if (colour[w] == 1) {
                auto it = std::find(stack.begin(), stack.end(), w);
                g.cycle.assign(it, stack.end());
                return true;
            }
            if (colour[w] == 0 && dfs(w)) return true;
        }
        stack.pop_back();
        colour[u] = 2;
        return false;
    };
    for (std::size_t u = 0; u < n && g.cycle.empty(); ++u)
        if (colour[u] == 0) dfs(u);
    return g;
}

// ---------------------------------------------------------------- generator

namespace {

class Generator {
public:
    Generator(std::uint64_t seed, Calculus c) : rng_(seed), calc_(c) {}

    Process root(unsigned size, bool complete, bool higher_order_roots) {
        std::vector<Name> roots;
        unsigned base = 2 + pick(2);
        for (unsigned i = 1; i <= base; ++i) {
            Name n("l", i);
            roots.push_back(n);
            sorts_.insert_or_assign(n, base_sort());
        }
        if (calc_ != Calculus::CCSL && higher_order_roots && chance(50)) {
            Name h("h", 1);
            roots.push_back(h);
            sorts_.insert_or_assign(h, Sort::lock(base_sort()));
        }
        NameSet avail(roots.begin(), roots.end()), must;
        for (const auto& n : roots)
            if (complete || chance(50)) must.insert(n);
        return gen(must, avail, {}, static_cast<int>(size));
    }

private:
    std::mt19937_64 rng_;
    Calculus calc_;
    unsigned counter_ = 0;
    SortMap sorts_;

    unsigned pick(unsigned n) { return n == 0 ? 0 : static_cast<unsigned>(rng_() % n); }
    bool chance(unsigned pct) { return pick(100) < pct; }

    // CCSL restrictions carry no annotation, as in parsed text
    std::optional<Sort> annotation_for(const Sort& s) const {
        if (calc_ == Calculus::CCSL) return std::nullopt;
        return s;
    }

    Sort base_sort() const { return calc_ == Calculus::CCSL ? Sort::lock(Sort::unit()) : Sort::lock(Sort::boolean()); }

    Name fresh(const std::string& label) { return Name(label, ++counter_); }

    template <class T>
    T choose(const std::vector<T>& v) {
        return v[pick(static_cast<unsigned>(v.size()))];
    }

    Value bool_value(const std::vector<Name>& bools) {
        if (!bools.empty() && chance(30)) return Value::of(choose(bools));
        return Value::boolean(chance(50));
    }

    // Releases every name of `must` in parallel. Lock payloads avoid `must`,
    // so the components form a star and compose.
    Process base(const NameSet& must, const NameSet& avail, const std::vector<Name>& bools) {
        if (must.empty()) {
            if (calc_ != Calculus::CCSL) return nil();
            Name n = fresh("a");
            sorts_.insert_or_assign(n, base_sort());
            return restrict(n, release(n, Value::unit()));
        }
        std::vector<Process> parts;
        for (const auto& l : must) parts.push_back(release_of(l, must, avail, bools));
        return par_all(parts);
    }

    Process release_of(const Name& l, const NameSet& must, const NameSet& avail, const std::vector<Name>& bools) {
        if (calc_ == Calculus::CCSL) return release(l, Value::unit());
        const Sort& payload = sorts_.at(l).payload();
        if (!payload.is_lock()) return release(l, bool_value(bools));
        std::vector<Name> options;
        for (const auto& n : avail)
            if (!must.count(n) && n != l && sorts_.at(n) == payload) options.push_back(n);
        if (!options.empty() && chance(70)) return release(l, Value::of(choose(options)));
        // store a fresh restricted lock, released on the spot
        Name n = fresh("a");
        sorts_.insert_or_assign(n, payload);
        Process inner = release_of(n, {n}, {}, bools);
        return restrict(n, par(release(l, Value::of(n)), inner), payload);
    }

    Process gen(const NameSet& must, const NameSet& avail, const std::vector<Name>& bools, int size) {
        if (size <= 1) return base(must, avail, bools);
        unsigned roll = pick(100);
        if (calc_ == Calculus::CCSL && roll >= 90) roll = pick(90);
        if (roll < 40) return gen_par(must, avail, bools, size);
        if (roll < 70) {
            if (auto p = gen_prefix(must, avail, bools, size)) return p;
            return gen_restrict(must, avail, bools, size);
        }
        if (roll < 90) return gen_restrict(must, avail, bools, size);
        return gen_match(must, avail, bools, size);
    }

    Process gen_par(const NameSet& must, const NameSet& avail, const std::vector<Name>& bools, int size) {
        NameSet must_l, must_r, left, right;
        for (const auto& n : must) (chance(50) ? must_l : must_r).insert(n);
        left = must_l;
        right = must_r;
        for (const auto& n : avail) {
            if (must.count(n)) continue;
            unsigned r = pick(3);
            if (r == 0) left.insert(n);
            else if (r == 1) right.insert(n);
        }
        // at most one shared name
        std::vector<Name> all(avail.begin(), avail.end());
        if (!all.empty() && chance(60)) {
            Name s = choose(all);
            left.insert(s);
            right.insert(s);
        }
        int ls = 1 + static_cast<int>(pick(static_cast<unsigned>(size - 1)));
        int rs = std::max(1, size - ls);
        return par(gen(must_l, left, bools, ls), gen(must_r, right, bools, rs));
    }

    Process gen_prefix(const NameSet& must, const NameSet& avail, const std::vector<Name>& bools, int size) {
        std::vector<Name> subjects;
        for (const auto& n : avail)
            if (!must.count(n)) subjects.push_back(n);
        if (subjects.empty()) return nullptr;
        Name l = choose(subjects);
        NameSet must2 = must;
        must2.insert(l);
        if (calc_ == Calculus::CCSL) return acquire(l, Name::unit(), gen(must2, avail, bools, size - 1));
        Name x = fresh("y");
        const Sort& payload = sorts_.at(l).payload();
        sorts_.insert_or_assign(x, payload);
        NameSet avail2 = avail;
        std::vector<Name> bools2 = bools;
        if (payload.is_lock()) avail2.insert(x);
        else bools2.push_back(x);
        return acquire(l, x, gen(must2, avail2, bools2, size - 1));
    }

    Process gen_restrict(const NameSet& must, const NameSet& avail, const std::vector<Name>& bools, int size) {
        Name n = fresh("a");
        Sort s = base_sort();
        if (calc_ != Calculus::CCSL && chance(25)) s = Sort::lock(base_sort());
        sorts_.insert_or_assign(n, s);
        NameSet must2 = must, avail2 = avail;
        must2.insert(n);
        avail2.insert(n);
        return restrict(n, gen(must2, avail2, bools, size - 1), annotation_for(s));
    }

    Process gen_match(const NameSet& must, const NameSet& avail, const std::vector<Name>& bools, int size) {
        Value a, b;
        std::vector<Name> locks(avail.begin(), avail.end());
        if (!locks.empty() && chance(50)) {
            Name x = choose(locks);
            std::vector<Name> same;
            for (const auto& n : locks)
                if (sorts_.at(n) == sorts_.at(x)) same.push_back(n);
            a = Value::of(x);
            b = Value::of(choose(same));
        } else {
            a = bool_value(bools);
            b = bool_value(bools);
        }
        int half = std::max(1, (size - 1) / 2);
        return match(a, b, gen(must, avail, bools, half), gen(must, avail, bools, half));
    }
};

// Moves some release obligations through a fresh higher-order lock:
// l!v becomes new c.(c!l | c((y)).y!v).
Process transfer_obligations(const Process& p, std::mt19937_64& rng, unsigned& counter) {
    switch (p->kind) {
        case ProcKind::Release: {
            if (p->payload.kind == Value::Kind::Unit || rng() % 3 != 0) return p;
            Name c("c", ++counter), y("z", counter);
            return restrict(c, par(release(c, Value::of(p->subject)), wait(c, y, release(y, p->payload))));
        }
        case ProcKind::Acquire:
            return acquire(p->subject, p->binder, transfer_obligations(body(p), rng, counter));
        case ProcKind::Wait: return wait(p->subject, p->binder, transfer_obligations(body(p), rng, counter));
        case ProcKind::Restrict:
            return restrict(p->subject, transfer_obligations(body(p), rng, counter), p->annotation);
        case ProcKind::Par:
            return par(transfer_obligations(p->left, rng, counter), transfer_obligations(p->right, rng, counter));
        case ProcKind::Match:
            return match(p->lhs, p->rhs, transfer_obligations(p->left, rng, counter),
                         transfer_obligations(p->right, rng, counter));
        case ProcKind::Nil: return p;
    }
    return p;
}

}  // namespace

Generated generate_typable(std::uint64_t seed, unsigned size, Calculus c, bool complete) {
    Calculus source = c == Calculus::PILW ? Calculus::PIL : c;
    Generator g(seed, source);
    // complete PILW instances are wait-closed: a free higher-order lock may
    // keep a restricted name alive forever and block its wait
    Process p = g.root(size, complete, !(c == Calculus::PILW && complete));
    if (c == Calculus::PILW) {
        std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
        unsigned counter = 0;
        p = transfer_obligations(encw(p), rng, counter);
    }
    auto env = infer(p, c);
    if (!env) throw std::logic_error("generator produced an untypable term: " + env.error.str() + " for " + print(p));
    return {p, *env};
}

}  // namespace pilock
