#include "pilock/congruence.hpp"

#include <algorithm>
#include <functional>

#include "pilock/textio.hpp"

namespace pilock {

namespace {

// Upper bound on the orderings tried for restricted names whose signatures
// tie; beyond it the first ordering found wins.
constexpr std::size_t kPermutationCap = 5040;

struct RawLevel;

struct RawPrime {
    const ProcessNode* node = nullptr;
    std::shared_ptr<RawLevel> a, b;  // prefix body, or match branches
    NameSet free;
};

struct RawLevel {
    std::vector<std::pair<Name, std::optional<Sort>>> restricted;
    std::vector<RawPrime> primes;
};

std::shared_ptr<RawLevel> make_level(const Process& p, bool full);

NameSet raw_free(const RawLevel& l);
NameSet raw_free(const RawPrime& pr);

void add_prime(RawLevel& lvl, RawPrime pr) {
    pr.free = raw_free(pr);
    lvl.primes.push_back(std::move(pr));
}

void flatten(const Process& p, bool full, RawLevel& lvl) {
    switch (p->kind) {
        case ProcKind::Nil: return;
        case ProcKind::Par:
            flatten(p->left, full, lvl);
            flatten(p->right, full, lvl);
            return;
        case ProcKind::Restrict:
            lvl.restricted.emplace_back(p->subject, p->annotation);
            flatten(body(p), full, lvl);
            return;
        case ProcKind::Release: add_prime(lvl, {p.get(), nullptr, nullptr, {}}); return;
        case ProcKind::Acquire:
        case ProcKind::Wait: add_prime(lvl, {p.get(), make_level(body(p), false), nullptr, {}}); return;
        case ProcKind::Match:
            if (p->lhs == p->rhs) {
                flatten(p->left, full, lvl);
            } else if (full) {
                flatten(p->right, full, lvl);
            } else {
                add_prime(lvl, {p.get(), make_level(p->left, false), make_level(p->right, false), {}});
            }
            return;
    }
}

NameSet raw_free(const RawPrime& pr) {
    NameSet out;
    const ProcessNode& n = *pr.node;
    auto value = [&](const Value& v) {
        if (v.is_name()) out.insert(v.name);
    };
    switch (n.kind) {
        case ProcKind::Release:
            out.insert(n.subject);
            value(n.payload);
            break;
        case ProcKind::Acquire:
        case ProcKind::Wait: {
            out = raw_free(*pr.a);
            out.erase(n.binder);
            out.insert(n.subject);
            break;
        }
        case ProcKind::Match: {
            out = raw_free(*pr.a);
            NameSet b = raw_free(*pr.b);
            out.insert(b.begin(), b.end());
            value(n.lhs);
            value(n.rhs);
            break;
        }
        default: break;
    }
    return out;
}

NameSet raw_free(const RawLevel& l) {
    NameSet out;
    for (const auto& pr : l.primes) out.insert(pr.free.begin(), pr.free.end());
    for (const auto& r : l.restricted) out.erase(r.first);
    return out;
}

std::shared_ptr<RawLevel> make_level(const Process& p, bool full) {
    auto lvl = std::make_shared<RawLevel>();
    flatten(p, full, *lvl);
    NameSet used;
    for (const auto& pr : lvl->primes) used.insert(pr.free.begin(), pr.free.end());
    std::erase_if(lvl->restricted, [&](const auto& r) { return used.count(r.first) == 0; });
    return lvl;
}

using Tokens = std::map<Name, std::string>;

std::string tok(const Tokens& t, const Name& n) {
    auto it = t.find(n);
    return it == t.end() ? "f:" + n.str() : it->second;
}

std::string tokv(const Tokens& t, const Value& v) {
    switch (v.kind) {
        case Value::Kind::Name: return tok(t, v.name);
        case Value::Kind::Bool: return v.flag ? "tt" : "ff";
        case Value::Kind::Unit: return "";
    }
    return "";
}

struct Choice {
    std::string key;
    std::vector<std::size_t> order;
};

Choice level_choice(const RawLevel& l, int depth, Tokens& t);

std::string prime_key(const RawPrime& pr, int depth, Tokens& t) {
    const ProcessNode& n = *pr.node;
    switch (n.kind) {
        case ProcKind::Release: return "R" + tok(t, n.subject) + "!" + tokv(t, n.payload);
        case ProcKind::Acquire:
        case ProcKind::Wait: {
            std::string head = (n.kind == ProcKind::Acquire ? "A" : "W") + tok(t, n.subject);
            std::string btok;
            if (!n.binder.is_unit()) {
                btok = "b" + std::to_string(depth);
                t[n.binder] = btok;
            }
            return head + "(" + btok + "){" + level_choice(*pr.a, depth + 1, t).key + "}";
        }
        case ProcKind::Match:
            return "M[" + tokv(t, n.lhs) + "=" + tokv(t, n.rhs) + "]{" + level_choice(*pr.a, depth + 1, t).key +
                   "}{" + level_choice(*pr.b, depth + 1, t).key + "}";
        default: return "?";
    }
}

std::string joined_primes(const RawLevel& l, int depth, Tokens& t) {
    std::vector<std::string> keys;
    keys.reserve(l.primes.size());
    for (const auto& pr : l.primes) keys.push_back(prime_key(pr, depth, t));
    std::sort(keys.begin(), keys.end());
    std::string out;
    for (const auto& k : keys) out += k + "|";
    return out;
}

std::string annot_str(const std::optional<Sort>& s) { return s ? s->str() : "_"; }

std::string local_token(int depth, std::size_t j) { return "n" + std::to_string(depth) + "." + std::to_string(j); }

// Best ordering of the restricted names `names` (indices into l.restricted)
// over the primes `primes`, which mention no other restricted name. Names
// are tokenized locally from 0.
Choice cluster_choice(const RawLevel& l, const std::vector<std::size_t>& names, const std::vector<std::size_t>& primes,
                      int depth, Tokens& t) {
    auto keyed = [&]() {
        std::vector<std::string> keys;
        keys.reserve(primes.size());
        for (std::size_t p : primes) keys.push_back(prime_key(l.primes[p], depth, t));
        std::sort(keys.begin(), keys.end());
        std::string out;
        for (const auto& k : keys) out += k + "|";
        return out;
    };
    const std::size_t k = names.size();
    if (k == 0) return {keyed(), {}};

    // signature of each restricted name: the cluster seen with that name
    // marked and its siblings blurred
    std::vector<std::string> sig(k);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) t[l.restricted[names[j]].first] = (i == j ? "@" : "?");
        std::vector<std::string> keys;
        for (std::size_t p : primes)
            if (l.primes[p].free.count(l.restricted[names[i]].first)) keys.push_back(prime_key(l.primes[p], depth, t));
        std::sort(keys.begin(), keys.end());
        sig[i] = annot_str(l.restricted[names[i]].second) + "#";
        for (const auto& key : keys) sig[i] += key + "|";
    }
    std::vector<std::size_t> base(k);
    for (std::size_t i = 0; i < k; ++i) base[i] = i;
    std::stable_sort(base.begin(), base.end(), [&](std::size_t a, std::size_t b) { return sig[a] < sig[b]; });

    std::vector<std::pair<std::size_t, std::size_t>> groups;  // [begin, end) in base
    for (std::size_t i = 0; i < k;) {
        std::size_t j = i + 1;
        while (j < k && sig[base[j]] == sig[base[i]]) ++j;
        if (j - i > 1) groups.emplace_back(i, j);
        i = j;
    }

    Choice best;
    bool have = false;
    std::size_t tried = 0;
    auto evaluate = [&](const std::vector<std::size_t>& order) {
        std::string head = "v";
        for (std::size_t j = 0; j < k; ++j) {
            t[l.restricted[names[order[j]]].first] = local_token(depth, j);
            head += annot_str(l.restricted[names[order[j]]].second) + ";";
        }
        std::string key = head + "{" + keyed() + "}";
        if (!have || key < best.key) {
            best = {key, order};
            have = true;
        }
        ++tried;
    };
    std::vector<std::size_t> order = base;
    std::function<void(std::size_t)> enumerate = [&](std::size_t g) {
        if (tried >= kPermutationCap && have) return;
        if (g == groups.size()) {
            evaluate(order);
            return;
        }
        auto [b, e] = groups[g];
        std::vector<std::size_t> slice(order.begin() + static_cast<long>(b), order.begin() + static_cast<long>(e));
        std::sort(slice.begin(), slice.end());
        do {
            std::copy(slice.begin(), slice.end(), order.begin() + static_cast<long>(b));
            enumerate(g + 1);
            if (tried >= kPermutationCap) break;
        } while (std::next_permutation(slice.begin(), slice.end()));
    };
    enumerate(0);
    for (auto& o : best.order) o = names[o];
    return best;
}

// Restricted names linked through a common prime form one cluster. Each
// cluster is ordered on its own and the clusters are sorted by key, so
// isomorphic clusters never need to be permuted against each other.
Choice level_choice(const RawLevel& l, int depth, Tokens& t) {
    const std::size_t k = l.restricted.size();
    if (k == 0) return {"{" + joined_primes(l, depth, t) + "}", {}};

    std::map<Name, std::size_t> index;
    for (std::size_t i = 0; i < k; ++i) index[l.restricted[i].first] = i;
    std::vector<std::size_t> parent(k);
    for (std::size_t i = 0; i < k; ++i) parent[i] = i;
    std::function<std::size_t(std::size_t)> root = [&](std::size_t i) {
        return parent[i] == i ? i : parent[i] = root(parent[i]);
    };
    std::vector<long> prime_root(l.primes.size(), -1);
    for (std::size_t p = 0; p < l.primes.size(); ++p) {
        for (const auto& n : l.primes[p].free) {
            auto it = index.find(n);
            if (it == index.end()) continue;
            if (prime_root[p] < 0)
                prime_root[p] = static_cast<long>(it->second);
            else
                parent[root(it->second)] = root(static_cast<std::size_t>(prime_root[p]));
        }
    }
    std::map<std::size_t, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> clusters;
    for (std::size_t i = 0; i < k; ++i) clusters[root(i)].first.push_back(i);
    std::vector<std::size_t> loose;  // primes with no restricted name
    for (std::size_t p = 0; p < l.primes.size(); ++p) {
        if (prime_root[p] < 0)
            loose.push_back(p);
        else
            clusters[root(static_cast<std::size_t>(prime_root[p]))].second.push_back(p);
    }

    std::vector<Choice> parts;
    for (auto& [r, c] : clusters) parts.push_back(cluster_choice(l, c.first, c.second, depth, t));
    std::stable_sort(parts.begin(), parts.end(), [](const Choice& a, const Choice& b) { return a.key < b.key; });

    Choice out;
    out.key = "v{" + cluster_choice(l, {}, loose, depth, t).key + "}";
    for (const auto& part : parts) {
        out.key += "(" + part.key + ")";
        out.order.insert(out.order.end(), part.order.begin(), part.order.end());
    }
    for (std::size_t j = 0; j < k; ++j) t[l.restricted[out.order[j]].first] = local_token(depth, j);
    return out;
}

class Builder {
public:
    explicit Builder(NameSet avoid) : avoid_(std::move(avoid)) {}

    Name next(const std::string& label) {
        Name n;
        do n = Name(label, ++counter_);
        while (avoid_.count(n));
        return n;
    }

    Name rn(const Name& n) const {
        auto it = ren_.find(n);
        return it == ren_.end() ? n : it->second;
    }

    Value rv(const Value& v) const { return v.is_name() ? Value::of(rn(v.name)) : v; }

    // Builds the canonical process of a level; fills `top` for depth 0.
    Process level(const RawLevel& l, int depth, Tokens& t, NormalForm* top) {
        Choice c = level_choice(l, depth, t);
        std::vector<Name> names;
        std::vector<std::optional<Sort>> annots;
        for (std::size_t j : c.order) {
            Name fresh = next("r");
            ren_[l.restricted[j].first] = fresh;
            names.push_back(fresh);
            annots.push_back(l.restricted[j].second);
        }
        std::vector<std::pair<std::string, std::size_t>> keyed;
        for (std::size_t i = 0; i < l.primes.size(); ++i) keyed.emplace_back(prime_key(l.primes[i], depth, t), i);
        std::stable_sort(keyed.begin(), keyed.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        // prime_key above rebinds binder tokens; restore the level tokens
        for (std::size_t j = 0; j < c.order.size(); ++j) t[l.restricted[c.order[j]].first] = local_token(depth, j);
        std::vector<Process> primes;
        for (const auto& kv : keyed) primes.push_back(prime(l.primes[kv.second], depth, t));
        Process p = par_all(primes);
        for (std::size_t j = names.size(); j-- > 0;) p = restrict(names[j], p, annots[j]);
        if (top) {
            top->restricted = names;
            top->annotations = annots;
            top->primes = primes;
            top->process = p;
        }
        return p;
    }

private:
    NameSet avoid_;
    unsigned counter_ = 0;
    std::map<Name, Name> ren_;

    Process prime(const RawPrime& pr, int depth, Tokens& t) {
        const ProcessNode& n = *pr.node;
        switch (n.kind) {
            case ProcKind::Release: return release(rn(n.subject), rv(n.payload));
            case ProcKind::Acquire:
            case ProcKind::Wait: {
                Name subject = rn(n.subject);
                Name binder = n.binder;
                if (!binder.is_unit()) {
                    t[n.binder] = "b" + std::to_string(depth);
                    binder = next("x");
                    ren_[n.binder] = binder;
                }
                Process b = level(*pr.a, depth + 1, t, nullptr);
                return n.kind == ProcKind::Acquire ? acquire(subject, binder, b) : wait(subject, binder, b);
            }
            case ProcKind::Match: {
                Process a = level(*pr.a, depth + 1, t, nullptr);
                Process b = level(*pr.b, depth + 1, t, nullptr);
                return match(rv(n.lhs), rv(n.rhs), a, b);
            }
            default: return nil();
        }
    }
};

}  // namespace

NormalForm normalize(const Process& input, CongruenceMode mode, const NameSet& avoid) {
    Process p = uniquify(input);
    auto lvl = make_level(p, mode == CongruenceMode::Full);
    Tokens t;
    NameSet taken = free_locks(p);
    taken.insert(avoid.begin(), avoid.end());
    Builder b(taken);
    NormalForm nf;
    b.level(*lvl, 0, t, &nf);
    nf.key = print(nf.process);
    return nf;
}

bool struct_equiv(const Process& p, const Process& q) {
    return normalize(p).key == normalize(q).key;
}

Process to_process(const NormalForm& nf) { return nf.process; }

NormalForm assemble(const std::vector<Name>& restricted, const std::vector<std::optional<Sort>>& annotations,
                    const std::vector<Process>& primes, const NameSet& avoid) {
    Process p = par_all(primes);
    for (std::size_t j = restricted.size(); j-- > 0;)
        p = restrict(restricted[j], p, j < annotations.size() ? annotations[j] : std::nullopt);
    return normalize(p, CongruenceMode::Full, avoid);
}

}  // namespace pilock
