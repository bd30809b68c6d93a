#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "dynlab/corpus.hpp"
#include "dynlab/program.hpp"
#include "script.hpp"

using namespace dynlab;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

Result cli(const std::string& args, bool merge_stderr = true) {
    std::string cmd = std::string(DYNLAB_CLI_PATH) + " " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe);
    Result r;
    std::array<char, 4096> buf{};
    size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string temp_file(const std::string& name, const std::string& content) {
    fs::path dir = fs::temp_directory_path() / "dynlab-cli-tests";
    fs::create_directories(dir);
    fs::path p = dir / name;
    std::ofstream(p) << content;
    return p.string();
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

const char* kBroken = R"(program broken
input { U/1 }
aux { Q/0 }
query Q
init empty

on insert U(u):
  Q: true

on delete U(u):
  Q: true
)";

}  // namespace

TEST_CASE("script parser binds names and constants") {
    DynamicProgram p = builtin_program("st-twopath-binary").program;
    Script sc = parse_script("graph { nodes 5; const s=0 t=4; edges (0,1) (1,4) }\nins E(s, a)\ndel E(a, t)\n", p);
    CHECK(sc.db.domain_size() == 5);
    CHECK(sc.db.constant(p.schema->id("s")) == 0);
    CHECK(sc.db.constant(p.schema->id("t")) == 4);
    CHECK(sc.db.holds(p.schema->id("E"), {0, 1}));
    CHECK(sc.db.holds(p.schema->id("E"), {1, 4}));
    CHECK(sc.names.at("a") == 2);
    REQUIRE(sc.seq.size() == 2);
    CHECK(sc.seq[0] == Modification{Modification::Kind::ins, "E", {0, 2}});
    CHECK(sc.seq[1] == Modification{Modification::Kind::del, "E", {2, 4}});

    DynamicProgram u = builtin_program("non-empty-set").program;
    Script d = parse_script("db { nodes 3; U(2) }\nins U(x)\nins U(y)\n", u);
    CHECK(d.names.at("x") == 0);
    CHECK(d.names.at("y") == 1);
    CHECK(parse_script("ins U(a)\nins U(b)\n", u).db.domain_size() == 2);
}

TEST_CASE("script parser diagnostics") {
    DynamicProgram u = builtin_program("non-empty-set").program;
    try {
        parse_script("ins U(a)\nins Q()\n", u, "s.txt");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.pos().line == 2);
        CHECK(e.pos().column == 5);
    }
    CHECK_THROWS_AS(parse_script("ins U(a, b)\n", u), ParseError);
    CHECK_THROWS_AS(parse_script("domain 2\nins U(5)\n", u), ParseError);
    CHECK_THROWS_AS(parse_script("frobnicate\n", u), ParseError);
    CHECK_THROWS_AS(parse_script("domain 1\nins U(a)\nins U(b)\n", u), ParseError);
}

TEST_CASE("cli run") {
    std::string script = temp_file("one.txt", "ins U(a)\n");
    Result r = cli("run non-empty-set " + script);
    CHECK(r.code == 0);
    CHECK(contains(r.out, "step 1: Q=true"));

    Result dump = cli("run non-empty-set " + script + " --dump-aux");
    CHECK(contains(dump.out, "First"));

    Result js = cli("run non-empty-set " + script + " --json", false);
    REQUIRE(js.code == 0);
    auto j = nlohmann::json::parse(js.out);
    CHECK(j["format"] == 1);
    REQUIRE(j["steps"].size() == 2);
    CHECK(j["steps"][1]["query"] == true);
    // The trace uses the state serialization.
    DynamicProgram p = builtin_program("non-empty-set").program;
    State s1 = state_from_json(j["steps"][1]["state"], p.schema);
    CHECK(to_json(s1) == j["steps"][1]["state"]);
    CHECK(s1.holds(p.schema->id("First"), {0}));

    std::string bad = temp_file("bad.dynp", "program bad\ninput { U/1 }\naux { Q/0 }\nquery Q\ninit empty\n"
                                            "default frame\non insert U(u):\n  Q: U(u) & | true\n");
    Result e = cli("run " + bad + " " + script);
    CHECK(e.code != 0);
    CHECK(contains(e.out, ":8:"));

    std::string dishonest = temp_file("twice.txt", "ins U(a)\nins U(a)\n");
    Result h = cli("run non-empty-set " + dishonest + " --honest");
    CHECK(h.code == 3);
    CHECK(contains(h.out, "step 2"));
}

TEST_CASE("cli verify exit codes") {
    Result ok = cli("verify " + std::string(DYNLAB_SOURCE_DIR) +
                    "/corpus/st-twopath-binary.dynp --oracle st-twopath --domain 5 --maxlen 5 --exhaustive --honest");
    CHECK(ok.code == 0);
    CHECK(contains(ok.out, "ok"));

    std::string broken = temp_file("broken.dynp", kBroken);
    Result bad = cli("verify " + broken + " --oracle nonemptyset --domain 2 --maxlen 3 --json", false);
    CHECK(bad.code == 1);
    auto j = nlohmann::json::parse(bad.out);
    REQUIRE(j.contains("counterexample"));
    std::string cx = temp_file("cx.json", j["counterexample"].dump());
    Result replay = cli("run " + broken + " --replay " + cx + " --oracle nonemptyset");
    CHECK(replay.code == 1);

    Result big = cli("verify st-twopath-binary --domain 50 --exhaustive");
    CHECK(big.code == 2);
    CHECK(contains(big.out, "resource"));

    Result seeded = cli("verify s-twopath-ternary --random --samples 50 --maxlen 6 --domain 5 --seed 9");
    CHECK(seeded.code == 0);
    CHECK(contains(seeded.out, "seed: 9"));

    CHECK(cli("verify non-empty-set --oracle no-such-oracle").code == 3);
}

TEST_CASE("cli attack") {
    Result star = cli("attack unary-twopath --driver star-deletion --n 6");
    CHECK(star.code == 1);
    CHECK(contains(star.out, "witness"));

    Result guard = cli("attack s-twopath-ternary --driver star-deletion --n 4");
    CHECK(guard.code == 3);
    CHECK(contains(guard.out, "arity 3 > 1"));

    Result cq = cli("attack conj-nonemptyset --driver cq-adversary");
    CHECK(cq.code == 1);

    Result none = cli("attack unary-twopath --driver star-deletion --n 1");
    CHECK(none.code == 2);
}

TEST_CASE("cli transform") {
    Result dedup = cli("transform repeated-vars --pass dedup-vars", false);
    CHECK(dedup.code == 0);
    DynamicProgram expected = builtin_program("repeated-vars-dedup").program;
    CHECK(equal(parse_program(dedup.out), expected));
    CHECK(dedup.out == print_program(expected));

    Result check = cli("transform non-empty-set --pass rel2fun --check -o " +
                       (fs::temp_directory_path() / "dynlab-cli-tests" / "nes-fun.dynp").string());
    CHECK(check.code == 0);
    CHECK(contains(check.out, "agrees with the original"));

    Result pass = cli("transform pointer-init --pass rel2fun");
    CHECK(pass.code == 0);
    CHECK(contains(pass.out, "passed through"));

    Result bad = cli("transform reach-1layer-qf --pass dedup-vars");
    CHECK(bad.code == 3);
}

TEST_CASE("cli analyze and corpus") {
    Result r = cli("analyze reach-1layer-qf");
    CHECK(contains(r.out, "max aux arity 1, builtin functions unary, nesting depth 1"));
    Result b = cli("analyze st-twopath-binary");
    CHECK(contains(b.out, "max aux arity 2"));
    CHECK(contains(b.out, "conjunctive: no"));

    std::string lost = temp_file("lost.dynp", R"(program lost
input { U/1 }
aux { Q/0, Lost/1 }
query Q
init empty
default frame

on insert U(u):
  Q: true
  Lost(x): Lost(x) | x = u
)");
    Result u = cli("analyze " + lost);
    CHECK(contains(u.out, "unreachable: Lost"));
    Result dot = cli("analyze " + lost + " --dot");
    CHECK(contains(dot.out, "digraph"));

    Result list = cli("corpus list");
    CHECK(contains(list.out, "non-empty-set"));
    CHECK_FALSE(contains(list.out, "unary-twopath"));
    CHECK(contains(cli("corpus list --all").out, "unary-twopath"));
    CHECK(cli("corpus show non-empty-set", false).out == corpus_source("non-empty-set"));
    CHECK(cli("corpus show nothing-here").code == 3);
}
