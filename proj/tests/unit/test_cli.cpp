#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "support.hpp"

#include "pilock/cli.hpp"

using namespace pilock;

namespace {
struct Run {
    int code = 0;
    std::string out, err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    Run r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}
}  // namespace

TEST_CASE("check") {
    Run ok = cli({"check", corpus_file("p3.pil")});
    CHECK(ok.code == kExitOk);
    CHECK(ok.out == "{l1,l2}; R={l2}\n");
    Run bad = cli({"check", corpus_file("pdl.pil")});
    CHECK(bad.code == kExitNegative);
    CHECK(bad.out.rfind("untypable: CompositionCycle", 0) == 0);
    // the calculus comes from the extension
    CHECK(cli({"check", corpus_file("wait_ok.pilw")}).out == "{l:Lock<bool>^10}\n");
}

TEST_CASE("records are json") {
    Run r = cli({"check", "--format", "records", corpus_file("p3.pil")});
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["verdict"] == "typable");
    CHECK(j["env"] == "{l1,l2}; R={l2}");
}

TEST_CASE("explore and budgets") {
    Run r = cli({"explore", corpus_file("p3_complete.ccsl")});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("progress: Pass") != std::string::npos);
    CHECK(r.out.find("deadlocks: 0") != std::string::npos);
    Run small = cli({"explore", "--max-states", "2", corpus_file("p3_complete.ccsl")});
    CHECK(small.code == kExitResource);
    CHECK(small.out.find("Incomplete") != std::string::npos);
}

TEST_CASE("run ends in a terminated state") {
    Run r = cli({"run", corpus_file("p3_complete.ccsl")});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("final: l1! | l2! (Terminated)") != std::string::npos);
}

TEST_CASE("bisim and replay") {
    Run eq = cli({"bisim", "--env", "{l}; R=∅", corpus_file("async_forward.pil"), corpus_file("nil.pil")});
    CHECK(eq.code == kExitOk);
    CHECK(eq.out == "Equivalent\n");
    Run ne = cli({"bisim", "--env", "{l,l0}; R={l0}", corpus_file("forwarder.pil"), corpus_file("release_l0.pil")});
    CHECK(ne.code == kExitNegative);
    auto at = ne.out.find("distinguisher");
    REQUIRE(at != std::string::npos);
    std::string script = "pilock_test_distinguisher.txt";
    std::ofstream(script) << ne.out.substr(at);
    Run again = cli({"replay", script});
    std::remove(script.c_str());
    CHECK(again.code == kExitOk);
}

TEST_CASE("usage errors") {
    CHECK(cli({"nonsense"}).code == kExitUsage);
    CHECK(cli({"check", "/nonexistent.pil"}).code == kExitUsage);
    CHECK(cli({"check", "--calculus", "pil", corpus_file("p1.ccsl")}).code == kExitUsage);
    CHECK(cli({"bisim", corpus_file("p3.pil")}).code == kExitUsage);
}

TEST_CASE("generate is reproducible") {
    Run a = cli({"generate", "--seed", "3", "--size", "6", "--calculus", "pil"});
    Run b = cli({"generate", "--seed", "3", "--size", "6", "--calculus", "pil"});
    CHECK(a.code == kExitOk);
    CHECK(a.out == b.out);
    CHECK(a.out.find("env: ") != std::string::npos);
}
