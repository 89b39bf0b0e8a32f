#include "pilock/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "pilock/equiv.hpp"
#include "pilock/textio.hpp"
#include "pilock/verify.hpp"

namespace pilock {

namespace {

using json = nlohmann::json;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string calculus;  // empty: taken from the input file extension
    std::string env;
    std::size_t max_states = 0;
    std::uint64_t seed = 1;
    std::string format = "text";
    std::string context;
    std::string context_env;
    std::string graph;
    unsigned size = 8;
    std::vector<std::string> inputs;
};

Calculus calculus_of(const std::string& s) {
    if (s == "ccsl") return Calculus::CCSL;
    if (s == "pil") return Calculus::PIL;
    if (s == "pilw") return Calculus::PILW;
    throw UsageError("unknown calculus " + s);
}

std::string slurp(const std::string& path) {
    if (path == "-") {
        std::ostringstream os;
        os << std::cin.rdbuf();
        return os.str();
    }
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Process load(const std::string& path, Calculus c) {
    std::string text = slurp(path);
    try {
        return parse(text, c);
    } catch (const ParseError& e) {
        throw UsageError(path + ": " + e.located());
    }
}

// --env takes inline text or the path of a file holding it.
std::optional<TypeEnv> env_flag(const std::string& text, Calculus c) {
    if (text.empty()) return std::nullopt;
    std::string body = text;
    std::error_code ec;
    if (std::filesystem::is_regular_file(text, ec)) body = slurp(text);
    while (!body.empty() && (body.back() == '\n' || body.back() == ' ')) body.pop_back();
    try {
        return parse_env(body, flavor_of(c));
    } catch (const ParseError& e) {
        throw UsageError("--env: " + e.located());
    }
}

// Every free name has a release somewhere: the completeness stand-in for
// terms that have no typing.
bool releases_everything(const Process& p) {
    NameSet released;
    std::function<void(const Process&)> walk = [&](const Process& t) {
        switch (t->kind) {
            case ProcKind::Release: released.insert(t->subject); break;
            case ProcKind::Acquire:
            case ProcKind::Wait:
            case ProcKind::Restrict: walk(body(t)); break;
            case ProcKind::Par:
            case ProcKind::Match:
                walk(t->left);
                walk(t->right);
                break;
            case ProcKind::Nil: break;
        }
    };
    walk(p);
    for (const auto& n : free_locks(p))
        if (!released.count(n)) return false;
    return true;
}

class Commands {
public:
    Commands(const RunConfig& cfg, std::ostream& out) : cfg_(cfg), out_(out), calc_(calculus_of(cfg.calculus)) {}

    int check() {
        Process p = load(input(0), calc_);
        auto declared = env_flag(cfg_.env, calc_);
        auto r = declared ? pilock::check(p, *declared, calc_) : infer(p, calc_);
        if (r) {
            emit({{"verdict", "typable"}, {"env", print_env(*r)}}, print_env(*r));
            return kExitOk;
        }
        emit({{"verdict", "untypable"}, {"error", kind_name(r.error.kind)}, {"rule", r.error.rule},
              {"reason", r.error.reason}, {"subterm", r.error.subterm}},
             "untypable: " + r.error.str());
        return kExitNegative;
    }

    int run() {
        Process p = load(input(0), calc_);
        std::mt19937_64 rng(cfg_.seed);
        NormalForm cur = normalize(p);
        std::vector<std::string> path{cur.key};
        std::size_t cap = budget();
        while (path.size() <= cap) {
            auto next = reductions(cur.process, calc_);
            if (next.empty()) break;
            cur = next[rng() % next.size()];
            path.push_back(cur.key);
        }
        bool complete = completeness(p);
        Classification k = classify(cur.process, complete, calc_);
        std::ostringstream text;
        for (std::size_t i = 0; i < path.size(); ++i) text << (i ? "-> " : "   ") << path[i] << "\n";
        text << "final: " << cur.key << " (" << classification_name(k) << ")";
        emit({{"verdict", classification_name(k)}, {"final", cur.key}, {"path", path}}, text.str());
        return k == Classification::Deadlocked ? kExitNegative : kExitOk;
    }

    int explore() {
        Process p = load(input(0), calc_);
        TypeEnv env = env_or_infer(p);
        Config root = make_config(p, env);
        bool complete = completeness(p);
        ProgressVerdict v = check_progress(root, calc_, budget());
        if (v.status == ProgressVerdict::Status::Incomplete) {
            emit({{"verdict", "Incomplete"}, {"reason", v.reason}}, "Incomplete: " + v.reason);
            return kExitResource;
        }
        LockGraph lg = lock_graph(p);
        std::set<Barb> weak = barbs(p, true);
        std::ostringstream text;
        std::string stuck_label = complete ? "deadlocks" : "stuck";
        text << "states: " << v.states << "\n";
        text << "terminated leaves: " << v.terminated_leaves << ", " << stuck_label << ": " << v.deadlocks
             << ", leaks: " << v.leaks << "\n";
        bool failed = v.status == ProgressVerdict::Status::Fail && (complete || v.leaks > 0);
        text << "progress: " << (failed ? "Fail (" + v.reason + ")" : std::string("Pass")) << "\n";
        if (failed)
            for (const auto& w : v.witness) text << "  " << w << "\n";
        text << "lock graph: " << lg.vertices.size() << " primes, " << lg.edges.size() << " edges, "
             << (lg.acyclic() ? "acyclic" : "cycle");
        if (!lg.acyclic()) {
            text << " through";
            for (auto i : lg.cycle) text << " [" << print(lg.vertices[i]) << "]";
        }
        text << "\nweak barbs:";
        std::vector<std::string> barb_text;
        for (const auto& b : weak) {
            text << " " << b.str();
            barb_text.push_back(b.str());
        }
        if (!cfg_.graph.empty()) {
            StateGraph g = pilock::explore(root, calc_, StepMode::Reductions, budget());
            text << "\n" << (cfg_.graph == "dot" ? g.to_dot() : g.to_edge_list());
        }
        emit({{"verdict", failed ? "Fail" : "Pass"},
              {"states", v.states},
              {"terminated_leaves", v.terminated_leaves},
              {complete ? "deadlocks" : "stuck", v.deadlocks},
              {"leaks", v.leaks},
              {"reason", v.reason},
              {"witness", failed ? v.witness : std::vector<std::string>{}},
              {"lock_graph_acyclic", lg.acyclic()},
              {"weak_barbs", barb_text}},
             text.str());
        return failed ? kExitNegative : kExitOk;
    }

    int bisim() {
        Process p = load(input(0), calc_), q = load(input(1), calc_);
        TypeEnv env = shared_env(p, q);
        EquivVerdict v;
        try {
            v = pilock::bisim(env, p, q, calc_, budget());
        } catch (const PreconditionViolation& e) {
            throw UsageError(e.what());
        }
        return report(v.equivalent, v.witness, "Equivalent", "Distinguished", v.pairs);
    }

    int refute() {
        Process p = load(input(0), calc_), q = load(input(1), calc_);
        TypeEnv env = shared_env(p, q);
        std::optional<std::string> ctx;
        if (!cfg_.context.empty()) {
            std::error_code ec;
            ctx = std::filesystem::is_regular_file(cfg_.context, ec) ? slurp(cfg_.context) : cfg_.context;
            while (!ctx->empty() && ctx->back() == '\n') ctx->pop_back();
        }
        std::optional<TypeEnv> cenv = env_flag(cfg_.context_env, calc_);
        std::optional<Distinguisher> d;
        try {
            d = refute_with_context(ctx, env, p, q, calc_, cenv, budget());
        } catch (const PreconditionViolation& e) {
            throw UsageError(e.what());
        }
        return report(!d.has_value(), d, "NotRefuted", "Distinguished", 0);
    }

    int translate() {
        if (calc_ == Calculus::PILW) throw UsageError("translate reads PIL terms");
        Process p = load(input(0), Calculus::PIL);
        TypeEnv env = env_or_infer(p, true);
        Process w = encw(p);
        TypeEnv wenv = encw_env(env, p);
        auto ok = pilock::check(w, wenv, Calculus::PILW);
        std::ostringstream text;
        text << print(w) << "\nenv: " << print_env(wenv) << "\nchecks: "
             << (ok ? std::string("yes") : "no (" + ok.error.str() + ")");
        emit({{"verdict", ok ? "typable" : "untypable"}, {"process", print(w)}, {"env", print_env(wenv)}}, text.str());
        return ok ? kExitOk : kExitNegative;
    }

    int replay() {
        Distinguisher d;
        try {
            d = Distinguisher::parse(slurp(input(0)));
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        } catch (const ParseError& e) {
            throw UsageError(e.located());
        }
        bool ok = pilock::replay(d, budget());
        emit({{"verdict", ok ? "Replayed" : "NotReplayed"}}, ok ? "Replayed" : "NotReplayed");
        return ok ? kExitOk : kExitNegative;
    }

    int generate() {
        Generated g = generate_typable(cfg_.seed, cfg_.size, calc_, true);
        emit({{"process", print(g.process)}, {"env", print_env(g.env)}},
             print(g.process) + "\nenv: " + print_env(g.env));
        return kExitOk;
    }

private:
    const RunConfig& cfg_;
    std::ostream& out_;
    Calculus calc_;
    std::optional<bool> typable_complete_;

    const std::string& input(std::size_t i) const {
        if (i >= cfg_.inputs.size()) throw UsageError("missing input file");
        return cfg_.inputs[i];
    }

    std::size_t budget() const { return cfg_.max_states ? cfg_.max_states : default_state_budget(); }

    TypeEnv env_or_infer(const Process& p, bool pil = false) {
        Calculus c = pil ? Calculus::PIL : calc_;
        if (auto e = env_flag(cfg_.env, c)) {
            auto r = pilock::check(p, *e, c);
            if (!r) throw UsageError("process does not check at --env: " + r.error.str());
            typable_complete_ = is_complete(*e, p);
            return *e;
        }
        auto r = infer(p, c);
        if (r) {
            typable_complete_ = is_complete(*r, p);
            return *r;
        }
        if (pil) throw UsageError("untypable: " + r.error.str());
        TypeEnv empty;
        empty.flavor = flavor_of(c);
        return empty;
    }

    bool completeness(const Process& p) {
        if (!typable_complete_) {
            auto r = infer(p, calc_);
            if (r) typable_complete_ = is_complete(*r, p);
        }
        return typable_complete_ ? *typable_complete_ : releases_everything(p);
    }

    TypeEnv shared_env(const Process& p, const Process& q) {
        if (auto e = env_flag(cfg_.env, calc_)) return *e;
        for (const Process* a : {&p, &q}) {
            auto r = infer(*a, calc_);
            if (!r) continue;
            const Process& b = a == &p ? q : p;
            if (pilock::check(b, *r, calc_)) return *r;
        }
        throw UsageError("no common environment found; pass --env");
    }

    int report(bool positive, const std::optional<Distinguisher>& d, const std::string& yes, const std::string& no,
               std::size_t pairs) {
        if (positive) {
            emit({{"verdict", yes}, {"pairs", pairs}}, yes);
            return kExitOk;
        }
        std::string script = d ? d->serialize() : "";
        emit({{"verdict", no}, {"pairs", pairs}, {"failure", d ? d->failure : ""}, {"distinguisher", script}},
             no + "\n" + script);
        return kExitNegative;
    }

    void emit(json record, const std::string& text) {
        if (cfg_.format == "records") {
            record["calculus"] = cfg_.calculus;
            out_ << record.dump() << "\n";
        } else {
            out_ << text << "\n";
        }
    }
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"pilock: lock-typed asynchronous pi-calculus workbench"};
    app.require_subcommand(1, 1);
    app.add_option("--calculus", cfg.calculus, "ccsl, pil or pilw")->check(CLI::IsMember({"ccsl", "pil", "pilw"}));
    app.add_option("--env", cfg.env, "typing environment, inline or a file");
    app.add_option("--max-states", cfg.max_states, "state budget (default PILOCK_MAX_STATES or 1e6)")
        ->check(CLI::PositiveNumber);
    app.add_option("--seed", cfg.seed, "seed for the scheduler and generator");
    app.add_option("--format", cfg.format, "text or records")->check(CLI::IsMember({"text", "records"}));

    struct Sub {
        const char* name;
        const char* help;
        std::size_t files;
    };
    std::vector<Sub> subs = {
        {"check", "type-check a process", 1},
        {"run", "follow one maximal reduction path", 1},
        {"explore", "explore all reductions and report safety properties", 1},
        {"bisim", "decide weak typed bisimilarity of two processes", 2},
        {"refute", "search for a distinguishing context", 2},
        {"translate", "print the wait-completed translation of a PIL process", 1},
        {"replay", "re-run a distinguisher script", 1},
        {"generate", "print a random typable complete process", 0},
    };
    std::map<std::string, CLI::App*> cmds;
    for (const auto& s : subs) {
        CLI::App* sc = app.add_subcommand(s.name, s.help);
        if (s.files) sc->add_option("files", cfg.inputs, "input files")->expected(static_cast<int>(s.files))->required();
        cmds[s.name] = sc;
    }
    cmds["explore"]->add_option("--graph", cfg.graph, "also print the graph: edges or dot")
        ->check(CLI::IsMember({"edges", "dot"}));
    cmds["refute"]->add_option("--context", cfg.context, "context with a [] hole, inline or a file");
    cmds["refute"]->add_option("--context-env", cfg.context_env, "environment of the plugged terms");
    cmds["generate"]->add_option("--size", cfg.size, "number of constructors");
    // options given after the subcommand name
    for (auto& [name, sc] : cmds) {
        sc->add_option("--calculus", cfg.calculus)->check(CLI::IsMember({"ccsl", "pil", "pilw"}));
        sc->add_option("--env", cfg.env);
        sc->add_option("--max-states", cfg.max_states)->check(CLI::PositiveNumber);
        sc->add_option("--seed", cfg.seed);
        sc->add_option("--format", cfg.format)->check(CLI::IsMember({"text", "records"}));
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        return kExitUsage;
    }

    if (cfg.calculus.empty()) {
        cfg.calculus = "pil";
        if (!cfg.inputs.empty()) {
            std::string ext = std::filesystem::path(cfg.inputs.front()).extension().string();
            if (ext == ".ccsl" || ext == ".pilw") cfg.calculus = ext.substr(1);
        }
    }

    try {
        Commands c(cfg, out);
        std::string name = app.get_subcommands().front()->get_name();
        if (name == "check") return c.check();
        if (name == "run") return c.run();
        if (name == "explore") return c.explore();
        if (name == "bisim") return c.bisim();
        if (name == "refute") return c.refute();
        if (name == "translate") return c.translate();
        if (name == "replay") return c.replay();
        return c.generate();
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const StateBudgetExceeded& e) {
        err << "incomplete: " << e.what() << "\n";
        return kExitResource;
    }
}

}  // namespace pilock
