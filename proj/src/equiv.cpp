#include "pilock/equiv.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "pilock/textio.hpp"

namespace pilock {

std::string side_name(Side s) { return s == Side::Left ? "left" : "right"; }

namespace {

enum class Game { Bisim, Barbed };

struct PairState {
    TypeEnv env;
    NormalForm left, right;
    std::string key;
};

struct Move {
    Side side = Side::Left;
    std::string label;
    std::string challenger;                // challenger process after the move
    std::vector<std::size_t> answers;      // pair indices
    std::vector<std::string> replies;      // defender process per answer
};

std::string pair_key(const TypeEnv& env, const NormalForm& l, const NormalForm& r) {
    return print_env(env, true) + " |- " + l.key + " ~ " + r.key;
}

SortMap merged_sorts(const Process& a, const Process& b, Calculus c, const TypeEnv& env) {
    SortMap seed = env_sorts(env);
    SortMap out = seed;
    for (const Process* p : {&a, &b}) {
        try {
            for (const auto& kv : infer_sorts(*p, c, seed)) out.emplace(kv.first, kv.second);
        } catch (const SortError&) {
        }
    }
    return out;
}

class Engine {
public:
    Engine(Game g, Calculus c, std::size_t budget) : game_(g), calc_(c), budget_(budget) {}

    void run(const TypeEnv& env, const Process& p, const Process& q) {
        TypeEnv e = env;
        e.canonicalize();
        intern(e, normalize(p, CongruenceMode::Full, e.domain()), normalize(q, CongruenceMode::Full, e.domain()));
        for (std::size_t i = 0; i < pairs_.size(); ++i) moves_.push_back(expand(i));
        decide();
    }

    bool root_alive() const { return killed_[0] < 0; }
    std::size_t size() const { return pairs_.size(); }
    const std::vector<Move>& moves(std::size_t i) const { return moves_[i]; }

    std::vector<TraceStep> trace(std::string& failure) const {
        std::vector<TraceStep> out;
        std::size_t cur = 0;
        while (true) {
            const Move& m = moves_[cur][static_cast<std::size_t>(reason_[cur])];
            TraceStep st{m.side, m.label, m.challenger, ""};
            if (m.answers.empty()) {
                out.push_back(st);
                failure = side_name(m.side == Side::Left ? Side::Right : Side::Left) + " cannot answer " + m.label;
                return out;
            }
            std::size_t best = 0;
            for (std::size_t k = 1; k < m.answers.size(); ++k)
                if (killed_[m.answers[k]] > killed_[m.answers[best]]) best = k;
            st.defender = m.replies[best];
            out.push_back(st);
            cur = m.answers[best];
        }
    }

private:
    Game game_;
    Calculus calc_;
    std::size_t budget_;
    std::vector<PairState> pairs_;
    std::map<std::string, std::size_t> index_;
    std::vector<std::vector<Move>> moves_;
    std::vector<long> killed_;  // kill order, -1 while related
    std::vector<long> reason_;  // move index that killed the pair

    std::size_t intern(const TypeEnv& env, const NormalForm& l, const NormalForm& r) {
        std::string k = pair_key(env, l, r);
        auto it = index_.find(k);
        if (it != index_.end()) return it->second;
        if (pairs_.size() >= budget_) throw StateBudgetExceeded(budget_);
        pairs_.push_back({env, l, r, k});
        index_.emplace(k, pairs_.size() - 1);
        return pairs_.size() - 1;
    }

    NormalForm renorm(const Process& p, const TypeEnv& env) const {
        return normalize(p, CongruenceMode::Full, env.domain());
    }

    Type sort_hint(const TypeEnv& env, const Name& l, const SortMap& sorts) const {
        if (const Type* t = env.lookup(l); t && t->kind() != Type::Kind::Any) return *t;
        auto it = sorts.find(l);
        return it == sorts.end() ? Type::any() : Type::from_sort(it->second);
    }

    std::vector<Move> expand(std::size_t idx) {
        const PairState ps = pairs_[idx];
        StepContext ctx;
        ctx.known = free_locks(ps.left.process);
        for (const auto& n : free_locks(ps.right.process)) ctx.known.insert(n);
        for (const auto& n : ps.env.domain()) ctx.known.insert(n);
        ctx.sorts = merged_sorts(ps.left.process, ps.right.process, calc_, ps.env);
        std::vector<Move> out;
        for (Side side : {Side::Left, Side::Right}) {
            const NormalForm& ch = side == Side::Left ? ps.left : ps.right;
            const NormalForm& df = side == Side::Left ? ps.right : ps.left;
            Config here{ps.env, ch};
            Config other{ps.env, df};
            std::string tag = context_tag(ctx);
            for (const auto& s : steps_of(here, ctx, tag)) {
                if (game_ == Game::Barbed && !s.action.is_tau()) continue;
                const TypeEnv& env2 = s.target.env;
                std::vector<Config> replies = s.action.is_tau() ? tau_star(other, ctx, tag) : weak(other, s.action, ctx, tag);
                if (game_ == Game::Bisim) extra_answers(s.action, ps.env, env2, df, ctx, tag, replies);
                Move m;
                m.side = side;
                m.label = s.action.str();
                m.challenger = s.target.proc.key;
                std::set<std::size_t> seen;
                for (const auto& r : replies) {
                    NormalForm rn = renorm(r.proc.process, env2);
                    NormalForm cn = s.target.proc;
                    std::size_t j = side == Side::Left ? intern(env2, cn, rn) : intern(env2, rn, cn);
                    if (!seen.insert(j).second) continue;
                    m.answers.push_back(j);
                    m.replies.push_back(rn.key);
                }
                out.push_back(std::move(m));
            }
            if (game_ == Game::Barbed) {
                bool bools = calc_ == Calculus::PILW;
                std::set<Barb> weak = barbs(df.process, true, bools);
                for (const auto& b : strong_barbs(ch)) {
                    if (bools && (b.bound || b.payload.kind != Value::Kind::Bool)) continue;
                    if (weak.count(b)) continue;
                    Move m;
                    m.side = side;
                    m.label = "barb " + b.str();
                    m.challenger = ch.key;
                    out.push_back(std::move(m));
                }
            }
        }
        return out;
    }

    // Answers that let the defender use the value or the lock handed over
    // by the environment instead of matching the move itself.
    void extra_answers(const Action& a, const TypeEnv& before, const TypeEnv& env2, const NormalForm& df,
                       const StepContext& ctx, const std::string& tag, std::vector<Config>& replies) {
        Process q;
        switch (a.kind) {
            case Action::Kind::Input: q = par(df.process, release(a.subject, a.value)); break;
            case Action::Kind::Wait: {
                if (calc_ != Calculus::PILW) return;
                auto t = sort_hint(before, a.subject, ctx.sorts);
                q = restrict(a.subject, par(df.process, release(a.subject, a.value)), t.sort());
                break;
            }
            case Action::Kind::TauSlash: {
                if (calc_ != Calculus::PILW) return;
                auto t = sort_hint(before, a.subject, ctx.sorts);
                q = restrict(a.subject, df.process, t.sort());
                break;
            }
            default: return;
        }
        Config start{env2, renorm(q, env2)};
        for (const auto& c : tau_star(start, ctx, tag)) replies.push_back(c);
    }

    // Steps and tau closures are memoized per state and per set of shared
    // names, since a defender state is probed by many challenges.
    std::map<std::string, std::vector<Step>> step_memo_;
    std::map<std::string, std::vector<Config>> tau_memo_;

    static std::string context_tag(const StepContext& ctx) {
        std::string t;
        for (const auto& n : ctx.known) t += n.str() + ",";
        t += "|";
        for (const auto& [n, s] : ctx.sorts) t += n.str() + ":" + s.str() + ",";
        return t;
    }

    const std::vector<Step>& steps_of(const Config& c, const StepContext& ctx, const std::string& tag) {
        std::string k = c.key() + "#" + tag;
        auto it = step_memo_.find(k);
        if (it != step_memo_.end()) return it->second;
        return step_memo_.emplace(k, typed_steps(c, calc_, &ctx)).first->second;
    }

    const std::vector<Config>& tau_star(const Config& c, const StepContext& ctx, const std::string& tag) {
        std::string k = c.key() + "#" + tag;
        auto it = tau_memo_.find(k);
        if (it != tau_memo_.end()) return it->second;
        std::vector<Config> out{c};
        std::set<std::string> seen{c.key()};
        for (std::size_t i = 0; i < out.size(); ++i) {
            Config cur = out[i];
            for (const auto& s : steps_of(cur, ctx, tag))
                if (s.action.is_tau() && seen.insert(s.target.key()).second) out.push_back(s.target);
        }
        return tau_memo_.emplace(k, std::move(out)).first->second;
    }

    std::vector<Config> weak(const Config& c, const Action& mu, const StepContext& ctx, const std::string& tag) {
        std::vector<Config> out;
        std::set<std::string> seen;
        std::vector<Config> pre = tau_star(c, ctx, tag);
        for (const auto& p : pre) {
            std::vector<Step> steps = steps_of(p, ctx, tag);
            for (const auto& s : steps) {
                if (!(s.action == mu)) continue;
                std::vector<Config> post = tau_star(s.target, ctx, tag);
                for (const auto& q : post)
                    if (seen.insert(q.key()).second) out.push_back(q);
            }
        }
        return out;
    }

    void decide() {
        const std::size_t n = pairs_.size();
        killed_.assign(n, -1);
        reason_.assign(n, -1);
        std::vector<std::vector<std::size_t>> live(n);
        std::vector<std::vector<std::pair<std::size_t, std::size_t>>> preds(n);
        std::deque<std::size_t> todo;
        long order = 0;
        auto kill = [&](std::size_t i, std::size_t m) {
            if (killed_[i] >= 0) return;
            killed_[i] = order++;
            reason_[i] = static_cast<long>(m);
            todo.push_back(i);
        };
        for (std::size_t i = 0; i < n; ++i) {
            live[i].resize(moves_[i].size());
            for (std::size_t m = 0; m < moves_[i].size(); ++m) {
                live[i][m] = moves_[i][m].answers.size();
                for (std::size_t j : moves_[i][m].answers) preds[j].emplace_back(i, m);
            }
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t m = 0; m < moves_[i].size(); ++m)
                if (live[i][m] == 0) {
                    kill(i, m);
                    break;
                }
        while (!todo.empty()) {
            std::size_t j = todo.front();
            todo.pop_front();
            for (auto [i, m] : preds[j]) {
                if (killed_[i] >= 0) continue;
                if (--live[i][m] == 0) kill(i, m);
            }
        }
        if (n <= 4000) cross_check();
    }

    // Plain Knaster-Tarski iteration from the full relation; must agree with
    // the worklist result.
    void cross_check() const {
        const std::size_t n = pairs_.size();
        std::vector<bool> in(n, true);
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t i = 0; i < n; ++i) {
                if (!in[i]) continue;
                for (const auto& m : moves_[i]) {
                    bool answered = std::any_of(m.answers.begin(), m.answers.end(), [&](std::size_t j) { return in[j]; });
                    if (!answered) {
                        in[i] = false;
                        changed = true;
                        break;
                    }
                }
            }
        }
        for (std::size_t i = 0; i < n; ++i)
            if (in[i] != (killed_[i] < 0)) throw std::logic_error("bisimulation fixpoint mismatch at " + pairs_[i].key);
    }
};

EquivVerdict play(Game g, Calculus c, const TypeEnv& env, const Process& p, const Process& q, std::size_t budget,
                  std::string label) {
    Engine e(g, c, budget);
    e.run(env, p, q);
    EquivVerdict v;
    v.pairs = e.size();
    v.label = std::move(label);
    v.equivalent = e.root_alive();
    if (!v.equivalent) {
        Distinguisher d;
        d.calculus = c;
        d.env = env;
        d.left = p;
        d.right = q;
        d.trace = e.trace(d.failure);
        v.witness = d;
    }
    return v;
}

void require_typed(const TypeEnv& env, const Process& p, Calculus c, const char* which) {
    auto r = check(p, env, c);
    if (!r)
        throw PreconditionViolation(std::string(which) + " does not check at " + print_env(env, true) + ": " +
                                    r.error.str());
}

}  // namespace

EquivVerdict bisim_pil(const TypeEnv& env, const Process& p, const Process& q, Calculus c, std::size_t budget) {
    if (c == Calculus::PILW) throw PreconditionViolation("bisim_pil needs CCSL or PIL");
    require_typed(env, p, c, "left process");
    require_typed(env, q, c, "right process");
    return play(Game::Bisim, c, env, p, q, budget, "weak typed bisimilarity");
}

EquivVerdict bisim_pilw(const TypeEnv& env, const Process& p, const Process& q, std::size_t budget) {
    require_typed(env, p, Calculus::PILW, "left process");
    require_typed(env, q, Calculus::PILW, "right process");
    return play(Game::Bisim, Calculus::PILW, env, p, q, budget, "weak typed bisimilarity (wait)");
}

EquivVerdict bisim(const TypeEnv& env, const Process& p, const Process& q, Calculus c, std::size_t budget) {
    return c == Calculus::PILW ? bisim_pilw(env, p, q, budget) : bisim_pil(env, p, q, c, budget);
}

EquivVerdict barbed_game(const TypeEnv& env, const Process& p, const Process& q, Calculus c, std::size_t budget) {
    require_typed(env, p, c, "left process");
    require_typed(env, q, c, "right process");
    if (c == Calculus::PILW) {
        if (!is_wait_closed(env)) throw PreconditionViolation("environment is not wait-closed: " + print_env(env, true));
    } else if (!is_complete(env, p) || !is_complete(env, q)) {
        throw PreconditionViolation("processes are not complete at " + print_env(env, true));
    }
    return play(Game::Barbed, c, env, p, q, budget, "reduction-closed barb equivalence");
}

std::string plug(const std::string& context, const Process& p) {
    auto at = context.find("[]");
    if (at == std::string::npos) throw PreconditionViolation("context has no [] hole");
    if (context.find("[]", at + 2) != std::string::npos) throw PreconditionViolation("context has several holes");
    return context.substr(0, at) + "(" + print(p) + ")" + context.substr(at + 2);
}

namespace {

struct FamilyBuilder {
    Calculus calc;
    SortMap sorts;
    NameSet taken;

    Name fresh(const std::string& label) {
        Name n = fresh_name(label, taken);
        taken.insert(n);
        return n;
    }

    // Release of l with a value of its payload sort; lock payloads get a
    // fresh name released on the side.
    std::string release_text(const Name& l, const Sort& s, std::vector<std::string>& extra) {
        if (calc == Calculus::CCSL) return l.str() + "!";
        if (!s.is_lock()) return l.str() + "!tt";
        const Sort& pay = s.payload();
        if (!pay.is_lock()) return l.str() + "!tt";
        Name u = fresh("u");
        extra.push_back(release_text(u, pay, extra));
        return l.str() + "!" + u.str();
    }

    Sort sort_of(const Name& n) const {
        auto it = sorts.find(n);
        if (it != sorts.end()) return it->second;
        return calc == Calculus::CCSL ? Sort::lock(Sort::unit()) : Sort::lock(Sort::boolean());
    }
};

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& s : parts) {
        if (!out.empty()) out += " | ";
        out += s;
    }
    return out;
}

}  // namespace

std::vector<std::string> context_family(const TypeEnv& env, const Process& p, const Process& q, Calculus c) {
    FamilyBuilder fb{c, merged_sorts(p, q, c, env), {}};
    NameSet names = env.domain();
    for (const auto& n : free_locks(p)) names.insert(n);
    for (const auto& n : free_locks(q)) names.insert(n);
    fb.taken = names;
    for (const auto& n : all_names(p)) fb.taken.insert(n);
    for (const auto& n : all_names(q)) fb.taken.insert(n);

    NameSet released, pending;
    for (const auto& n : names) {
        bool owes = false;
        if (env.flavor == Flavor::Obligations) {
            owes = env.obligations.count(n) != 0;
        } else if (const Type* t = env.lookup(n)) {
            owes = t->usage().r == 1;
        }
        (owes ? released : pending).insert(n);
    }
    auto completion = [&](const NameSet& skip, std::vector<std::string>& parts) {
        for (const auto& n : pending)
            if (!skip.count(n)) parts.push_back(fb.release_text(n, fb.sort_of(n), parts));
    };

    std::vector<std::string> out;
    {
        std::vector<std::string> parts{"[]"};
        completion({}, parts);
        out.push_back(join(parts));
    }
    if (c == Calculus::CCSL) return out;

    // forwarder detector: l0 is owed by the hole, l is handed to it late
    for (const auto& l0 : released) {
        for (const auto& l : pending) {
            Name w1 = fb.fresh("w"), w2 = fb.fresh("w"), y = fb.fresh("y"), z = fb.fresh("z");
            std::vector<std::string> parts{"[]"};
            parts.push_back(l0.str() + "(" + y.str() + ")." + w1.str() + "(" + z.str() + ").(" + w1.str() + "!tt | " +
                            l0.str() + "!" + y.str() + ")");
            std::vector<std::string> side;
            std::string rel = fb.release_text(l, fb.sort_of(l), side);
            parts.push_back(w2.str() + "(" + z.str() + ").(" + w2.str() + "!tt | " + rel + ")");
            parts.push_back(w1.str() + "!ff");
            parts.push_back(w2.str() + "!ff");
            parts.insert(parts.end(), side.begin(), side.end());
            completion({l}, parts);
            out.push_back(join(parts));
        }
    }
    // acquire-order detector built from E_w
    for (const auto& l1 : pending) {
        for (const auto& l2 : pending) {
            if (l1 == l2) continue;
            Name w1 = fb.fresh("w"), w2 = fb.fresh("w"), y = fb.fresh("y"), z = fb.fresh("z");
            std::vector<std::string> parts{"[]"};
            std::vector<std::string> side;
            std::string rel2 = fb.release_text(l2, fb.sort_of(l2), side);
            std::string rel1 = fb.release_text(l1, fb.sort_of(l1), side);
            parts.push_back(w2.str() + "!ff | " + w2.str() + "(" + z.str() + ").(" + rel2 + " | " + w2.str() + "!tt)");
            parts.push_back(rel1);
            parts.push_back(l1.str() + "(" + y.str() + ").(" + w1.str() + "!ff | " + w1.str() + "(" + z.str() + ").(" +
                            l1.str() + "!" + y.str() + " | " + w1.str() + "!tt))");
            parts.insert(parts.end(), side.begin(), side.end());
            completion({l1, l2}, parts);
            out.push_back(join(parts));
        }
    }
    return out;
}

std::optional<Distinguisher> refute_with_context(const std::optional<std::string>& context, const TypeEnv& env,
                                                 const Process& p, const Process& q, Calculus c,
                                                 const std::optional<TypeEnv>& context_env, std::size_t budget) {
    const bool user = context.has_value();
    std::vector<std::string> contexts = user ? std::vector<std::string>{*context} : context_family(env, p, q, c);
    for (const auto& ctx : contexts) {
        Process ep, eq;
        try {
            ep = parse(plug(ctx, p), c);
            eq = parse(plug(ctx, q), c);
        } catch (const ParseError& e) {
            if (user) throw PreconditionViolation(std::string("context does not parse: ") + e.what());
            continue;
        }
        TypeEnv ce;
        if (context_env) {
            ce = *context_env;
        } else {
            auto inferred = infer(ep, c);
            if (!inferred) {
                if (user) throw PreconditionViolation("E[left] is untypable: " + inferred.error.str());
                continue;
            }
            ce = *inferred;
        }
        EquivVerdict v;
        try {
            v = barbed_game(ce, ep, eq, c, budget);
        } catch (const PreconditionViolation&) {
            if (user) throw;
            continue;
        }
        if (v.equivalent) continue;
        Distinguisher d = *v.witness;
        d.env = env;
        d.left = p;
        d.right = q;
        d.context = ctx;
        d.context_env = ce;
        return d;
    }
    return std::nullopt;
}

std::string Distinguisher::serialize() const {
    std::ostringstream os;
    os << "distinguisher\n";
    os << "calculus\t" << calculus_name(calculus) << "\n";
    os << "env\t" << print_env(env, true) << "\n";
    os << "left\t" << print(left) << "\n";
    os << "right\t" << print(right) << "\n";
    if (context) os << "context\t" << *context << "\n";
    if (context_env) os << "context-env\t" << print_env(*context_env, true) << "\n";
    for (const auto& s : trace)
        os << "step\t" << side_name(s.side) << "\t" << s.move << "\t" << s.challenger << "\t" << s.defender << "\n";
    os << "failure\t" << failure << "\n";
    return os.str();
}

Distinguisher Distinguisher::parse(const std::string& text) {
    Distinguisher d;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    if (line != "distinguisher") throw std::invalid_argument("not a distinguisher script");
    std::string env_text, ctx_env_text;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::size_t start = 0;
        while (true) {
            auto tab = line.find('\t', start);
            f.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        const std::string& tag = f[0];
        auto field = [&](std::size_t i) {
            if (i >= f.size()) throw std::invalid_argument("short line: " + line);
            return f[i];
        };
        if (tag == "calculus") {
            std::string c = field(1);
            if (c == "ccsl") d.calculus = Calculus::CCSL;
            else if (c == "pil") d.calculus = Calculus::PIL;
            else if (c == "pilw") d.calculus = Calculus::PILW;
            else throw std::invalid_argument("unknown calculus " + c);
        } else if (tag == "env") {
            env_text = field(1);
        } else if (tag == "left") {
            d.left = pilock::parse(field(1), d.calculus);
        } else if (tag == "right") {
            d.right = pilock::parse(field(1), d.calculus);
        } else if (tag == "context") {
            d.context = field(1);
        } else if (tag == "context-env") {
            ctx_env_text = field(1);
        } else if (tag == "step") {
            TraceStep s;
            s.side = field(1) == "left" ? Side::Left : Side::Right;
            s.move = field(2);
            s.challenger = field(3);
            s.defender = f.size() > 4 ? f[4] : "";
            d.trace.push_back(s);
        } else if (tag == "failure") {
            d.failure = f.size() > 1 ? f[1] : "";
        } else {
            throw std::invalid_argument("unknown line: " + line);
        }
    }
    Flavor fl = flavor_of(d.calculus);
    d.env = parse_env(env_text, fl);
    if (!ctx_env_text.empty()) d.context_env = parse_env(ctx_env_text, fl);
    return d;
}

bool replay(const Distinguisher& d, std::size_t budget) {
    Game g = d.context ? Game::Barbed : Game::Bisim;
    TypeEnv env = d.context ? *d.context_env : d.env;
    Process p = d.left, q = d.right;
    if (d.context) {
        p = parse(plug(*d.context, d.left), d.calculus);
        q = parse(plug(*d.context, d.right), d.calculus);
    }
    Engine e(g, d.calculus, budget);
    e.run(env, p, q);
    if (e.root_alive() || d.trace.empty()) return false;
    // walk the recorded rounds through the rebuilt game graph
    std::size_t cur = 0;
    for (std::size_t k = 0; k < d.trace.size(); ++k) {
        const TraceStep& st = d.trace[k];
        bool last = k + 1 == d.trace.size();
        bool found = false;
        for (const auto& m : e.moves(cur)) {
            if (m.side != st.side || m.label != st.move || m.challenger != st.challenger) continue;
            if (last) {
                if (!m.answers.empty()) continue;
                found = true;
                break;
            }
            for (std::size_t a = 0; a < m.answers.size(); ++a) {
                if (m.replies[a] != st.defender) continue;
                cur = m.answers[a];
                found = true;
                break;
            }
            if (found) break;
        }
        if (!found) return false;
    }
    return true;
}

Process encw(const Process& p) {
    NameSet taken = all_names(p);
    std::function<Process(const Process&)> go = [&](const Process& t) -> Process {
        switch (t->kind) {
            case ProcKind::Nil:
            case ProcKind::Release: return t;
            case ProcKind::Acquire: return acquire(t->subject, t->binder, go(body(t)));
            case ProcKind::Wait: return wait(t->subject, t->binder, go(body(t)));
            case ProcKind::Restrict: {
                Name x = fresh_name("x", taken);
                taken.insert(x);
                return restrict(t->subject, par(go(body(t)), wait(t->subject, x, nil())), t->annotation);
            }
            case ProcKind::Par: return par(go(t->left), go(t->right));
            case ProcKind::Match: return match(t->lhs, t->rhs, go(t->left), go(t->right));
        }
        return t;
    };
    return go(p);
}

TypeEnv encw_env(const TypeEnv& env, const Process& p) {
    SortMap sorts;
    try {
        sorts = infer_sorts(p, Calculus::PIL, env_sorts(env));
    } catch (const SortError&) {
        sorts = env_sorts(env);
    }
    TypeEnv out;
    out.flavor = Flavor::Usages;
    for (const auto& g : env.components) {
        Component h;
        for (const auto& [n, t] : g.hyps) {
            Usage u = env.obligations.count(n) ? Usage{1, 0} : Usage{0, 0};
            auto it = sorts.find(n);
            Sort s = it != sorts.end() ? it->second : Sort::lock(Sort::boolean());
            h.hyps.emplace(n, Type::from_sort(s, u));
        }
        out.components.push_back(std::move(h));
    }
    out.canonicalize();
    return out;
}

}  // namespace pilock
