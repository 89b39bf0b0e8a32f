#include "doctest.h"
#include "support.hpp"

#include "pilock/verify.hpp"

using namespace pilock;

namespace {
std::string verdict(const Process& p, Calculus c) {
    auto r = infer(p, c);
    return r ? print_env(*r) : kind_name(r.error.kind);
}
}  // namespace

TEST_CASE("ccsl judgements") {
    CHECK(verdict(ccsl("l1.(l1! | l2!)"), Calculus::CCSL) == "{l1,l2}; R={l2}");
    CHECK(verdict(ccsl("l1.l2.(l1! | l2!)"), Calculus::CCSL) == "{l1,l2}; R=∅");
    CHECK(verdict(ccsl("l1.l1! | l2.l2!"), Calculus::CCSL) == "{l1}{l2}; R=∅");
    CHECK(verdict(ccsl("l1.(l1! | l1!)"), Calculus::CCSL) == "DoubleRelease");
    CHECK(verdict(ccsl("l1.l2.l1!"), Calculus::CCSL) == "MissingRelease");
    CHECK_THROWS(ccsl("0"));  // no inactive process here
}

TEST_CASE("pil judgements") {
    CHECK(verdict(corpus_term("p3.pil", Calculus::PIL), Calculus::PIL) == "{l1,l2}; R={l2}");
    CHECK(verdict(corpus_term("pdl.pil", Calculus::PIL), Calculus::PIL) == "CompositionCycle");
    CHECK(verdict(pil("l(m).l1!l"), Calculus::PIL) == "MissingRelease");
    // a match needs both branches at the same judgement
    CHECK(verdict(pil("l(x).[x=tt]l!x,l!ff"), Calculus::PIL) == "{l}; R=∅");
    CHECK_FALSE(infer(pil("l(x).[x=tt]l!x,0"), Calculus::PIL));
}

TEST_CASE("pilw judgements") {
    CHECK(verdict(corpus_term("wait_ok.pilw", Calculus::PILW), Calculus::PILW) == "{l:Lock<bool>^10}");
    CHECK(verdict(corpus_term("wait_missing.pilw", Calculus::PILW), Calculus::PILW) == "MissingWait");
    CHECK(verdict(pilw("0"), Calculus::PILW) == "∅");
    CHECK(verdict(pilw("new l.(l!v | l((x)).0)"), Calculus::PILW) == "{v:Lock<bool>^00}");
    CHECK(verdict(pilw("l!tt | l!ff"), Calculus::PILW) == "UsageOverflow");
}

TEST_CASE("check against a declared environment") {
    Process p = ccsl("l1.(l1! | l2!)");
    CHECK(check(p, parse_env("{l1,l2}; R={l2}", Flavor::Obligations), Calculus::CCSL));
    // a coarser component is fine
    CHECK(check(p, parse_env("{l1,l2,l3}; R={l2}", Flavor::Obligations), Calculus::CCSL));
    auto bad = check(p, parse_env("{l1,l2}; R=∅", Flavor::Obligations), Calculus::CCSL);
    CHECK_FALSE(bad);
}

TEST_CASE("composition") {
    Flavor f = Flavor::Obligations;
    TypeEnv a = parse_env("{l1,l2}; R={l1}", f), b = parse_env("{l2,l3}; R={l3}", f);
    auto ab = compose(a, b);
    REQUIRE(ab);
    CHECK(print_env(*ab) == "{l1,l2,l3}; R={l1,l3}");
    // sharing two names closes a cycle
    CHECK_FALSE(compose(parse_env("{l1,l2}; R=∅", f), parse_env("{l1,l2}; R=∅", f)));
    // both sides owing the same lock
    CHECK_FALSE(compose(parse_env("{l1}; R={l1}", f), parse_env("{l1}; R={l1}", f)));
}

TEST_CASE("usage composition") {
    Type r = Type::lock(Type::boolean(), {1, 0}), w = Type::lock(Type::boolean(), {0, 1});
    auto rw = compose_hyp(r, w, Flavor::Usages);
    REQUIRE(rw);
    CHECK(rw->usage() == Usage{1, 1});
    CHECK_FALSE(compose_hyp(r, r, Flavor::Usages));
    CHECK_FALSE(compose_hyp(r, Type::lock(Type::unit(), {0, 0}), Flavor::Usages));
}

TEST_CASE("connect counts shared names") {
    Component g;
    g.hyps = {{Name("a"), Type::any()}, {Name("b"), Type::any()}};
    Component one, two;
    one.hyps = {{Name("a"), Type::any()}, {Name("c"), Type::any()}};
    two.hyps = {{Name("a"), Type::any()}, {Name("b"), Type::any()}};
    CHECK(connect(g, {one}, Flavor::Obligations));
    CHECK_FALSE(connect(g, {two}, Flavor::Obligations));
}

TEST_CASE("completeness") {
    Process p = pil("l(x).l!x | l!tt");
    auto e = infer(p, Calculus::PIL);
    REQUIRE(e);
    CHECK(is_complete(*e, p));
    Process q = pil("l(x).l!x");
    CHECK_FALSE(is_complete(*infer(q, Calculus::PIL), q));
    CHECK(is_wait_closed(parse_env("{l:Lock<bool>^10}", Flavor::Usages)));
    CHECK_FALSE(is_wait_closed(parse_env("{l:Lock<Lock<bool>^00>^10}", Flavor::Usages)));
}

TEST_CASE("a free higher-order lock can keep a restricted name from its wait") {
    // complete but not wait-closed: nothing ever acquires h, so the stored
    // reference to a survives and the wait on a is blocked for good
    Process p = pilw("new a.(h!a | a!tt | a((x)).0)");
    auto e = infer(p, Calculus::PILW);
    REQUIRE(e);
    CHECK(is_complete(*e, p));
    CHECK_FALSE(is_wait_closed(*e));
    CHECK(classify(p, true, Calculus::PILW) == Classification::Deadlocked);
}
