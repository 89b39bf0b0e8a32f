#include "doctest.h"
#include "support.hpp"

#include "pilock/congruence.hpp"

using namespace pilock;

TEST_CASE("monoid laws") {
    CHECK(struct_equiv(pil("l!tt | 0"), pil("l!tt")));
    CHECK(struct_equiv(pil("l!tt | m!ff"), pil("m!ff | l!tt")));
    CHECK(struct_equiv(pil("(l!tt | m!ff) | k!tt"), pil("l!tt | (m!ff | k!tt)")));
    CHECK_FALSE(struct_equiv(pil("l!tt"), pil("l!ff")));
}

TEST_CASE("restriction laws") {
    CHECK(struct_equiv(pil("new a.0"), pil("0")));
    CHECK(struct_equiv(pil("new a.new b.(a!b | b!tt)"), pil("new b.new a.(a!b | b!tt)")));
    CHECK(struct_equiv(pil("new a.(a!tt | m!ff)"), pil("new a.a!tt | m!ff")));
    CHECK(struct_equiv(pil("new a.a!tt"), pil("new b.b!tt")));
    CHECK_FALSE(struct_equiv(pil("new a.(a!tt | m!a)"), pil("new a.a!tt | m!a")));
}

TEST_CASE("isomorphic restricted clusters commute") {
    // identical clusters in any order and with any names
    Process p = pil("new a.(h!a | a!tt) | new b.(h!b | b!tt) | new c.(k!c | c!ff)");
    Process q = pil("new z.(k!z | z!ff) | new y.(h!y | y!tt) | new x.(h!x | x!tt)");
    CHECK(normalize(p).key == normalize(q).key);
    Process r = pil("new a.(h!a | a!tt) | new b.(k!b | b!tt) | new c.(h!c | c!ff)");
    CHECK(normalize(p).key != normalize(r).key);
}

TEST_CASE("names linked across clusters keep their structure") {
    Process p = pil("new a.new b.(a!b | b!tt | h!a)");
    Process q = pil("new a.new b.(b!a | a!tt | h!b)");
    CHECK(normalize(p).key == normalize(q).key);
    CHECK(normalize(p).key != normalize(pil("new a.new b.(a!b | b!tt | h!b)")).key);
}

TEST_CASE("matches") {
    CHECK(struct_equiv(pil("[tt=tt]l!tt,m!tt"), pil("l!tt")));
    CHECK(struct_equiv(pil("[tt=ff]l!tt,m!tt"), pil("m!tt")));
    // under a prefix the mismatch axiom does not fire
    NormalForm a = normalize(pil("k(x).[tt=ff]l!tt,m!tt"));
    NormalForm b = normalize(pil("k(x).m!tt"));
    CHECK(a.key != b.key);
    NormalForm c = normalize(pil("[tt=ff]l!tt,m!tt"), CongruenceMode::Restricted);
    CHECK(c.key != normalize(pil("m!tt")).key);
}

TEST_CASE("canonical names") {
    NormalForm nf = normalize(pil("new q.(q!tt | l(y).(l!y | q!y))"));
    REQUIRE(nf.restricted.size() == 1);
    CHECK(nf.restricted[0] == Name("r", 1));
    CHECK(nf.key == print(nf.process));
    CHECK(nf.primes.size() == 2);
    // names of the avoid set are skipped
    NormalForm av = normalize(pil("new q.q!tt"), CongruenceMode::Full, {Name("r", 1)});
    CHECK(av.restricted[0] == Name("r", 2));
}

TEST_CASE("assemble agrees with normalize") {
    NormalForm nf = normalize(pil("new a.(a!tt | l(x).l!x)"));
    NormalForm again = assemble(nf.restricted, nf.annotations, nf.primes);
    CHECK(again.key == nf.key);
    CHECK(same_term(to_process(nf), nf.process));
}
