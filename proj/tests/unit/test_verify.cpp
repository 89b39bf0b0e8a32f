#include "doctest.h"
#include "support.hpp"

#include "pilock/verify.hpp"

using namespace pilock;

TEST_CASE("classification") {
    CHECK(classify(pil("l!tt | m!ff"), true) == Classification::Terminated);
    CHECK(classify(pil("l(x).l!x | l!tt"), true) == Classification::Reducible);
    CHECK(classify(pil("l(x).l!x"), false) == Classification::Stuck);
    CHECK(classify(pil("l(x).l!x"), true) == Classification::Deadlocked);
}

TEST_CASE("leaks") {
    CHECK(find_leak(pil("new a.a!tt")).has_value());
    CHECK_FALSE(find_leak(pil("new a.(a!tt | a(x).a!x)")).has_value());
    CHECK_FALSE(find_leak(pil("l!tt")).has_value());
}

TEST_CASE("exploring a complete term") {
    Process p = corpus_term("p3_complete.ccsl", Calculus::CCSL);
    Config root = make_config(p, *infer(p, Calculus::CCSL));
    ProgressVerdict v = check_progress(root, Calculus::CCSL);
    CHECK(v.status == ProgressVerdict::Status::Pass);
    CHECK(v.deadlocks == 0);
    CHECK(v.terminated_leaves >= 1);
    StateGraph g = explore(root, Calculus::CCSL);
    CHECK(g.nodes.size() == v.states);
    CHECK(g.to_dot().find("digraph") != std::string::npos);
}

TEST_CASE("the deadlock of two crossed forwarders is found") {
    Process p = pil("l1(x).l2(y).(l1!x | l2!y) | l2(y).l1(x).(l1!x | l2!y) | l1!tt | l2!tt");
    TypeEnv env = parse_env("{l1,l2}; R={l1,l2}", Flavor::Obligations);
    ProgressVerdict v = check_progress(make_config(p, env), Calculus::PIL);
    CHECK(v.status == ProgressVerdict::Status::Fail);
    CHECK(v.deadlocks >= 1);
    CHECK_FALSE(v.witness.empty());
}

TEST_CASE("budgets") {
    Process p = corpus_term("p3_complete.ccsl", Calculus::CCSL);
    Config root = make_config(p, *infer(p, Calculus::CCSL));
    CHECK_THROWS_AS(explore(root, Calculus::CCSL, StepMode::Reductions, 2), StateBudgetExceeded);
    CHECK(check_progress(root, Calculus::CCSL, 2).status == ProgressVerdict::Status::Incomplete);
}

TEST_CASE("lock graph") {
    LockGraph cyc = lock_graph(corpus_term("pdl.pil", Calculus::PIL));
    CHECK_FALSE(cyc.acyclic());
    CHECK(lock_graph(corpus_term("p3.pil", Calculus::PIL)).acyclic());
    LockGraph single = lock_graph(pil("l!tt"));
    CHECK(single.edges.empty());
}

TEST_CASE("barbs") {
    auto strong = strong_barbs(normalize(pil("l!tt | new a.m!a | k(x).c!x")));
    CHECK(strong.size() == 2);
    auto weak = barbs(corpus_term("choice.pil", Calculus::PIL), true);
    CHECK(weak.count(Barb{Name("c"), Value::boolean(true), false}) == 1);
    CHECK(weak.count(Barb{Name("c"), Value::boolean(false), false}) == 1);
    auto bools = barbs(pil("l!tt | new a.m!a"), false, true);
    CHECK(bools.size() == 1);
}

TEST_CASE("the generator is deterministic and typable") {
    for (Calculus c : {Calculus::CCSL, Calculus::PIL, Calculus::PILW}) {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            Generated a = generate_typable(seed, 8, c), b = generate_typable(seed, 8, c);
            CHECK(print(a.process) == print(b.process));
            CHECK(check(a.process, a.env, c));
            CHECK(is_complete(a.env, a.process));
            if (c == Calculus::PILW) CHECK(is_wait_closed(a.env));
        }
    }
}

TEST_CASE("wait-closed pilw processes show a boolean barb") {
    Process p = corpus_term("wait_ok.pilw", Calculus::PILW);
    auto b = barbs(p, true, true);
    CHECK_FALSE(b.empty());
}
