#include <algorithm>

#include "doctest.h"
#include "support.hpp"

#include "pilock/semantics.hpp"

using namespace pilock;

namespace {
bool has_action(const std::vector<Step>& steps, const std::string& a) {
    return std::any_of(steps.begin(), steps.end(), [&](const Step& s) { return s.action.str() == a; });
}

std::vector<std::string> keys(const std::vector<NormalForm>& v) {
    std::vector<std::string> out;
    for (const auto& n : v) out.push_back(n.key);
    std::sort(out.begin(), out.end());
    return out;
}
}  // namespace

TEST_CASE("communication") {
    auto r = reductions(pil("l!tt | l(x).c!x"), Calculus::PIL);
    CHECK(keys(r) == std::vector<std::string>{"c!tt"});
    CHECK(reductions(pil("l(x).c!x"), Calculus::PIL).empty());
}

TEST_CASE("wait fires only when alone with the release") {
    CHECK(keys(reductions(pilw("new l.(l!v | l((x)).x!tt)"), Calculus::PILW)) == std::vector<std::string>{"v!tt"});
    CHECK(reductions(pilw("new l.(l!tt | l((x)).0 | l(y).l!y)"), Calculus::PILW).size() == 1);
}

TEST_CASE("matches resolve during reduction") {
    auto r = reductions(pil("l!tt | l(x).[x=tt]a!tt,b!tt"), Calculus::PIL);
    CHECK(keys(r) == std::vector<std::string>{"a!tt"});
}

TEST_CASE("untyped inputs use the candidate set") {
    auto steps = untyped_steps(pil("l(x).l!x"), Calculus::PIL);
    std::vector<std::string> acts;
    for (const auto& [a, nf] : steps) acts.push_back(a.str());
    CHECK(std::find(acts.begin(), acts.end(), "l(tt)") != acts.end());
    CHECK(std::find(acts.begin(), acts.end(), "l(ff)") != acts.end());
}

TEST_CASE("typed transitions of a pil state") {
    Process p = pil("l1(x).(l1!x | l2!tt)");
    Config c = make_config(p, parse_env("{l1,l2}; R={l2}", Flavor::Obligations));
    auto steps = typed_steps_pil(c);
    REQUIRE(has_action(steps, "l1(tt)"));
    for (const auto& s : steps)
        if (s.action.str() == "l1(tt)") CHECK(s.target.env.obligations == NameSet{Name("l1"), Name("l2")});
    // the release of l2 is not available before the acquire
    CHECK_FALSE(has_action(steps, "l2!tt"));
}

TEST_CASE("an output gives the obligation away") {
    Config c = make_config(pil("l0!tt"), parse_env("{l0}; R={l0}", Flavor::Obligations));
    auto steps = typed_steps_pil(c);
    REQUIRE(steps.size() == 1);
    CHECK(steps[0].action.str() == "l0!tt");
    CHECK(steps[0].target.env.obligations.empty());
}

TEST_CASE("the environment cannot hand over an owned lock") {
    Config c = make_config(pil("l1(x).l1!x | l1!tt"), parse_env("{l1}; R={l1}", Flavor::Obligations));
    for (const auto& s : typed_steps_pil(c)) CHECK(s.action.kind != Action::Kind::Input);
}

TEST_CASE("the higher-order input of the owned lock is ruled out") {
    Process p = corpus_term("ho_p1.pil", Calculus::PIL);
    Config c = make_config(p, parse_env("{l,l2}; R={l2}", Flavor::Obligations));
    auto steps = typed_steps_pil(c);
    CHECK_FALSE(has_action(steps, "l(l2)"));
    CHECK(std::any_of(steps.begin(), steps.end(), [](const Step& s) { return s.action.kind == Action::Kind::Input; }));
}

TEST_CASE("bound output extrudes a fresh name") {
    Config c = make_config(pil("new a.(l!a | a!tt)"), parse_env("{l}; R={l}", Flavor::Obligations));
    auto steps = typed_steps_pil(c);
    REQUIRE(steps.size() == 1);
    CHECK(steps[0].action.kind == Action::Kind::BoundOutput);
    Name n = steps[0].action.value.name;
    CHECK(steps[0].target.env.obligations.count(n) == 1);
    CHECK(steps[0].target.env.obligations.count(Name("l")) == 0);
}

TEST_CASE("pilw deallocation of a free lock") {
    Config c = make_config(pilw("l((x)).0"), parse_env("{l:Lock<bool>^01}", Flavor::Usages));
    auto steps = typed_steps_pilw(c);
    REQUIRE(has_action(steps, "l((tt))"));
    for (const auto& s : steps)
        if (s.action.str() == "l((tt))") CHECK(s.target.env.domain().empty());
}

TEST_CASE("closures") {
    Config c = make_config(pil("l!tt | l(x).l!x"), parse_env("{l}; R={l}", Flavor::Obligations));
    auto taus = tau_closure(c, Calculus::PIL);
    CHECK(taus.size() == 2);  // the start and the state after the communication
    auto weak = weak_closure(c, Action::output(Name("l"), Value::boolean(true)), Calculus::PIL);
    CHECK_FALSE(weak.empty());
}

TEST_CASE("fresh names and terminated states") {
    CHECK(fresh_for({Name("n", 1)}) != Name("n", 1));
    CHECK(is_terminated(normalize(pil("new a.(a!tt | l!a)"))));
    CHECK_FALSE(is_terminated(normalize(pil("l(x).l!x"))));
}
