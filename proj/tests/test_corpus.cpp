#include <doctest.h>

#include <map>
#include <set>

#include "dynlab/corpus.hpp"
#include "dynlab/queries.hpp"
#include "dynlab/verify.hpp"
#include "helpers.hpp"

using namespace dynlab;
using namespace testing;

namespace {

Element constant(const State& s, const std::string& name) { return s.constant(s.schema().id(name)); }

std::set<Tuple> rel_of(const State& s, const std::string& r) {
    auto ts = s.tuples(s.schema().id(r));
    return {ts.begin(), ts.end()};
}

// List must be one simple path from First to Last through exactly U.
bool list_invariant(const State& s) {
    auto u = rel_of(s, "U");
    auto first = rel_of(s, "First");
    auto last = rel_of(s, "Last");
    auto list = rel_of(s, "List");
    if (u.empty()) return list.empty();
    if (first.size() != 1 || last.size() != 1) return false;
    std::map<Element, Element> next;
    for (const Tuple& e : list)
        if (!next.emplace(e[0], e[1]).second) return false;
    std::set<Element> seen;
    Element cur = (*first.begin())[0];
    while (true) {
        if (!seen.insert(cur).second) return false;
        auto it = next.find(cur);
        if (it == next.end()) break;
        cur = it->second;
    }
    if (cur != (*last.begin())[0]) return false;
    if (seen.size() != list.size() + 1) return false;
    std::set<Tuple> nodes;
    for (Element e : seen) nodes.insert({e});
    return nodes == u;
}

}  // namespace

TEST_CASE("corpus names") {
    auto main = corpus_names(false);
    CHECK(main == std::vector<std::string>{"non-empty-set", "st-twopath-binary", "s-twopath-ternary", "reach-1layer-qf"});
    CHECK(corpus_names(true).size() > main.size());
    CHECK_THROWS_AS(builtin_program("no-such-program"), Error);
}

TEST_CASE("list program query trace") {
    CorpusEntry e = builtin_program("non-empty-set");
    const DynamicProgram& p = e.program;
    auto trace = run(p, init_state(p, make_input_db(p, 2)),
                     {ins("U", {0}), ins("U", {1}), del("U", {0}), del("U", {1})}, true);
    std::vector<bool> q;
    for (size_t i = 1; i < trace.size(); ++i) q.push_back(query_value(p, trace[i]));
    CHECK(q == std::vector<bool>{true, true, true, false});
}

TEST_CASE("binary two-path program fires on the second insertion") {
    const DynamicProgram& p = builtin_program("st-twopath-binary").program;
    State s = init_state(p, make_input_db(p, 4));
    Element src = constant(s, "s"), dst = constant(s, "t");
    Element a = 0;
    while (a == src || a == dst) ++a;
    s = apply(p, s, ins("E", {src, a}));
    CHECK_FALSE(query_value(p, s));
    s = apply(p, s, ins("E", {a, dst}));
    CHECK(query_value(p, s));
    CHECK(rel_of(s, "In").count({a}));
    CHECK(rel_of(s, "Out").count({a}));
}

TEST_CASE("1-layered reachability program counts middle nodes") {
    const DynamicProgram& p = builtin_program("reach-1layer-qf").program;
    State s = init_state(p, make_input_db(p, 5));
    CHECK(constant(s, "s") == 0);
    CHECK(constant(s, "t") == 4);
    s = apply(p, s, ins("E", {0, 2}));
    s = apply(p, s, ins("E", {2, 4}));
    CHECK(rel_of(s, "C") == std::set<Tuple>{{1}});
    CHECK(query_value(p, s));
    CHECK(s.fun(s.schema().id("Succ"), {4}) == 4);
    CHECK(s.fun(s.schema().id("Pred"), {0}) == 0);
    s = apply(p, s, del("E", {0, 2}));
    CHECK(rel_of(s, "C") == std::set<Tuple>{{0}});
    CHECK_FALSE(query_value(p, s));
}

TEST_CASE("class tags match the rules") {
    CHECK(builtin_program("st-twopath-binary").tags.arity == 2);
    CHECK(builtin_program("s-twopath-ternary").tags.arity == 3);
    ClassTags r = builtin_program("reach-1layer-qf").tags;
    CHECK(r.arity == 1);
    CHECK(r.unary_builtin_functions);
    CHECK_FALSE(r.dynprop);
    CHECK(builtin_program("conj-nonemptyset").tags.conjunctive);

    for (const std::string& name : corpus_names(true)) {
        CorpusEntry e = builtin_program(name);
        ProgramClass pc = classify_program(e.program);
        CHECK_MESSAGE(e.tags.arity == pc.max_aux_arity, name);
        CHECK_MESSAGE(e.tags.conjunctive == pc.conjunctive, name);
        CHECK_MESSAGE(e.tags.negation_free == pc.negation_free, name);
        CHECK_MESSAGE(e.tags.dynprop == !pc.has_functions, name);
        CHECK_MESSAGE(e.tags.nesting_depth == pc.nesting_depth, name);
        int declared = 0;
        for (const Symbol& sym : e.program.schema->symbols())
            if (sym.role == Role::aux) declared = std::max(declared, sym.arity);
        CHECK_MESSAGE(e.tags.arity == declared, name);
    }
}

TEST_CASE("completed rules are marked in the sources") {
    for (const std::string name : {"st-twopath-binary", "s-twopath-ternary", "reach-1layer-qf"})
        CHECK_MESSAGE(corpus_source(name).find("derived-from-prose") != std::string::npos, name);
}

TEST_CASE("main corpus entries carry oracles and guards") {
    std::map<std::string, std::string> oracle{{"non-empty-set", "nonemptyset"},
                                              {"st-twopath-binary", "st-twopath"},
                                              {"s-twopath-ternary", "s-twopath"},
                                              {"reach-1layer-qf", "st-reach"}};
    for (const auto& [name, o] : oracle) {
        CorpusEntry e = builtin_program(name);
        CHECK(e.oracle == o);
        CHECK_NOTHROW(find_guard(e.guard));
    }
    CHECK(builtin_program("reach-1layer-qf").guard == "1-layered");
}

TEST_CASE("list invariant holds along random honest runs") {
    const DynamicProgram& p = builtin_program("non-empty-set").program;
    std::mt19937_64 rng(2024);
    for (int round = 0; round < 200; ++round) {
        State s = init_state(p, make_input_db(p, 5));
        REQUIRE(list_invariant(s));
        for (int step = 0; step < 25; ++step) {
            Element a = static_cast<Element>(rng() % 5);
            Modification m = s.holds(s.schema().id("U"), {a}) ? del("U", {a}) : ins("U", {a});
            s = apply(p, s, m);
            REQUIRE_MESSAGE(list_invariant(s), "round " << round << " step " << step);
        }
    }
}

TEST_CASE("oracle-backed init agrees with the oracle on every small database") {
    for (const std::string& name : corpus_names(false)) {
        CorpusEntry e = builtin_program(name);
        Oracle oracle = find_oracle(e.oracle);
        Guard guard = find_guard(e.guard);
        const DynamicProgram& p = e.program;
        State base = make_input_db(p, 4);
        int rid = p.schema->ids(Role::input, SymbolKind::relation)[0];
        int cells = base.table_size(p.schema->at(rid).arity);
        std::mt19937_64 rng(5);
        for (int round = 0; round < 100; ++round) {
            State db = base;
            for (int c = 0; c < cells; ++c) db.set(rid, db.decode(c, p.schema->at(rid).arity), rng() % 4 == 0);
            if (!guard(db)) continue;
            CHECK_MESSAGE(query_value(p, init_state(p, db)) == oracle(db), name);
        }
    }
}

TEST_CASE("main corpus maintains its query at small bounds") {
    for (const std::string& name : corpus_names(false)) {
        CorpusEntry e = builtin_program(name);
        CheckConfig cfg;
        cfg.domain_size = 4;
        cfg.max_len = 3;
        cfg.guard = e.guard;
        Verdict v = check_maintenance(e.program, find_oracle(e.oracle), cfg);
        CHECK_MESSAGE(v.status == Verdict::Status::ok, name << ": " << v.message);
    }
}

TEST_CASE("the verbatim list rule loses the list after three middle nodes") {
    CorpusEntry e = builtin_program("st-twopath-verbatim-list");
    const DynamicProgram& p = e.program;
    Oracle oracle = find_oracle("st-twopath");
    State db = make_input_db(p, 5);
    Element s = constant(db, "s"), t = constant(db, "t");
    std::vector<Element> mid;
    for (Element v = 0; v < 5; ++v)
        if (v != s && v != t) mid.push_back(v);
    std::vector<Modification> seq;
    for (Element v : mid) {
        seq.push_back(ins("E", {s, v}));
        seq.push_back(ins("E", {v, t}));
    }
    for (Element v : mid) seq.push_back(del("E", {s, v}));
    auto trace = run(p, init_state(p, db), seq, true);
    State cur = db;
    size_t first_bad = 0;
    for (size_t i = 0; i < seq.size(); ++i) {
        cur = apply_input_modification(cur, seq[i]);
        if (query_value(p, trace[i + 1]) != oracle(cur)) {
            first_bad = i + 1;
            break;
        }
    }
    CHECK(first_bad == 9);

    Counterexample cx;
    cx.program = p.name;
    cx.initial_db = db;
    cx.seq = seq;
    cx.step = 9;
    cx.expected = false;
    cx.produced = true;
    CHECK(validate(p, oracle, cx));
    CHECK_FALSE(cx.trace_digest.empty());

    // The completed program gets it right.
    const DynamicProgram& good = builtin_program("st-twopath-binary").program;
    CHECK_FALSE(query_value(good, run(good, init_state(good, db), seq, true).back()));
}
