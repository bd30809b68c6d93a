#include <doctest.h>

#include <algorithm>
#include <set>

#include "dynlab/corpus.hpp"
#include "dynlab/verify.hpp"
#include "helpers.hpp"

using namespace dynlab;
using namespace testing;

namespace {

const DynamicProgram& corpus(const std::string& name) {
    static std::map<std::string, CorpusEntry> cache;
    auto it = cache.find(name);
    if (it == cache.end()) it = cache.emplace(name, builtin_program(name)).first;
    return it->second.program;
}

const char* kBrokenDelete = R"(
program broken
input { U/1 }
aux { Q/0 }
query Q
init empty

on insert U(u):
  Q: true

on delete U(u):
  Q: true
)";

bool subset_of(const std::vector<Element>& a, const std::vector<Element>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

AtomicType letter(const std::string& fact) { return AtomicType{1, {fact}}; }

// Component map plus constants, checked against restrict + isomorphism.
bool component_iso(const State& s, const Tuple& a, const State& t, const Tuple& b) {
    std::map<Element, Element> fwd, bwd;
    auto bind = [&](Element x, Element y) {
        auto [i, ni] = fwd.emplace(x, y);
        auto [j, nj] = bwd.emplace(y, x);
        return i->second == y && j->second == x;
    };
    for (size_t i = 0; i < a.size(); ++i)
        if (!bind(a[i], b[i])) return false;
    for (int c : s.schema().ids_of_kind(SymbolKind::constant))
        if (!bind(s.constant(c), t.constant(c))) return false;
    std::vector<Element> as, bs;
    for (auto [x, y] : fwd) as.push_back(x);
    SubState rs = restrict(s, as);
    for (Element x : rs.elements) bs.push_back(fwd[x]);
    SubState rt = restrict(t, bs);
    std::vector<Element> local;
    for (Element x : rs.elements) {
        Element y = fwd[x];
        local.push_back(static_cast<Element>(std::find(rt.elements.begin(), rt.elements.end(), y) - rt.elements.begin()));
    }
    return check_isomorphism(rs.state, rt.state, local);
}

}  // namespace

TEST_CASE("maintenance check on the list program") {
    CheckConfig cfg;
    cfg.domain_size = 3;
    cfg.max_len = 6;
    Verdict v = check_maintenance(corpus("non-empty-set"), find_oracle("nonemptyset"), cfg);
    CHECK(v.status == Verdict::Status::ok);
    CHECK(v.exit_code() == 0);
    CHECK(v.sequences > 0);
}

TEST_CASE("maintenance check finds the forced divergence") {
    DynamicProgram p = parse_program(kBrokenDelete);
    CheckConfig cfg;
    cfg.domain_size = 2;
    cfg.max_len = 3;
    Verdict v = check_maintenance(p, find_oracle("nonemptyset"), cfg);
    REQUIRE(v.status == Verdict::Status::counterexample);
    CHECK(v.exit_code() == 1);
    const Counterexample& cx = *v.counterexample;
    CHECK(cx.step == 2);
    CHECK_FALSE(cx.expected);
    CHECK(cx.produced);
    CHECK(cx.seq == std::vector<Modification>{ins("U", {0}), del("U", {0})});
    CHECK(cx.validated);
    CHECK_FALSE(cx.trace_digest.empty());
}

TEST_CASE("counterexample JSON round trip and self-validation") {
    DynamicProgram p = parse_program(kBrokenDelete);
    CheckConfig cfg;
    cfg.domain_size = 2;
    cfg.max_len = 2;
    Verdict v = check_maintenance(p, find_oracle("nonemptyset"), cfg);
    REQUIRE(v.counterexample);
    nlohmann::json j = v.counterexample->to_json();
    CHECK(j["format"] == 1);
    Counterexample back = counterexample_from_json(j, p.schema);
    CHECK(back.seq == v.counterexample->seq);
    CHECK(validate(p, find_oracle("nonemptyset"), back));
    CHECK(back.trace_digest == v.counterexample->trace_digest);

    Counterexample tampered = back;
    tampered.step = 1;
    CHECK_FALSE(validate(p, find_oracle("nonemptyset"), tampered));

    nlohmann::json vj = v.to_json();
    CHECK(vj["status"] == "counterexample");
    CHECK(vj.contains("seed"));
}

TEST_CASE("exhaustive mode refuses oversized searches") {
    CheckConfig cfg;
    cfg.domain_size = 50;
    cfg.max_len = 5;
    try {
        check_maintenance(corpus("st-twopath-binary"), find_oracle("st-twopath"), cfg);
        FAIL("expected a resource error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::resource);
        CHECK(std::string(e.what()).find("cap") != std::string::npos);
    }
}

TEST_CASE("parallel and serial runs agree") {
    DynamicProgram p = parse_program(kBrokenDelete);
    CheckConfig cfg;
    cfg.domain_size = 3;
    cfg.max_len = 4;
    Verdict serial = check_maintenance(p, find_oracle("nonemptyset"), cfg);
    cfg.jobs = 3;
    Verdict par = check_maintenance(p, find_oracle("nonemptyset"), cfg);
    REQUIRE(serial.counterexample);
    REQUIRE(par.counterexample);
    CHECK(serial.counterexample->seq == par.counterexample->seq);
    CHECK(serial.counterexample->step == par.counterexample->step);

    CheckConfig ok;
    ok.domain_size = 4;
    ok.max_len = 4;
    ok.jobs = 3;
    CHECK(check_maintenance(corpus("non-empty-set"), find_oracle("nonemptyset"), ok).status == Verdict::Status::ok);
}

TEST_CASE("random mode is reproducible from its seed") {
    DynamicProgram p = parse_program(kBrokenDelete);
    CheckConfig cfg;
    cfg.domain_size = 4;
    cfg.max_len = 6;
    cfg.mode = CheckConfig::Mode::random;
    cfg.samples = 200;
    cfg.seed = 42;
    Verdict a = check_maintenance(p, find_oracle("nonemptyset"), cfg);
    Verdict b = check_maintenance(p, find_oracle("nonemptyset"), cfg);
    REQUIRE(a.counterexample);
    CHECK(a.seed == 42);
    CHECK(a.counterexample->seq == b.counterexample->seq);
    CHECK(a.counterexample->validated);
}

TEST_CASE("equivalence check reports the first differing tuple") {
    DynamicProgram ref = parse_program(R"(
program keep
input { U/1 }
aux { R/1 }
query R
init empty

on insert U(u):
  R(x): R(x) | x = u

on delete U(u):
  R(x): R(x) & x != u
)");
    DynamicProgram lazy = parse_program(R"(
program lazy
input { U/1 }
aux { R/1 }
query R
init empty

on insert U(u):
  R(x): R(x) | x = u

on delete U(u):
  R(x): R(x)
)");
    CheckConfig cfg;
    cfg.domain_size = 2;
    cfg.max_len = 3;
    Verdict v = check_equivalence(ref, lazy, cfg);
    REQUIRE(v.status == Verdict::Status::counterexample);
    // Lexicographic search reaches [ins U(0), ins U(1), del U(0)] before [ins U(0), del U(0)].
    CHECK(v.counterexample->query_tuple == Tuple{0});
    CHECK(v.counterexample->step == 3);
    CHECK(v.counterexample->seq == std::vector<Modification>{ins("U", {0}), ins("U", {1}), del("U", {0})});
    CHECK(validate_against(lazy, ref, *v.counterexample));
}

TEST_CASE("subsequence") {
    CHECK(subsequence(std::string("ab"), std::string("acb")));
    CHECK(subsequence(std::string(""), std::string("xyz")));
    CHECK_FALSE(subsequence(std::string("ba"), std::string("ab")));

    TypeWord u{letter("A"), letter("B")};
    TypeWord v{letter("A"), letter("C"), letter("B")};
    CHECK(subsequence(u, v));
    CHECK(*embedding(u, v) == std::vector<int>{0, 2});
    CHECK_FALSE(embedding(v, u));
}

TEST_CASE("subsequence is reflexive and transitive") {
    std::mt19937_64 rng(6);
    auto word = [&] {
        std::string w;
        for (int n = static_cast<int>(rng() % 6); n > 0; --n) w += static_cast<char>('a' + rng() % 3);
        return w;
    };
    for (int i = 0; i < 2000; ++i) {
        std::string a = word(), b = word(), c = word();
        CHECK(subsequence(a, a));
        if (subsequence(a, b) && subsequence(b, c)) CHECK(subsequence(a, c));
    }
}

TEST_CASE("higman_pair") {
    using P = std::optional<std::pair<int, int>>;
    CHECK(higman_pair(std::vector<std::string>{"a", "ba"}) == P({1, 2}));
    CHECK(higman_pair(std::vector<std::string>{"b", "a"}) == P());
    CHECK(higman_pair(std::vector<std::string>{"x", "y", "xy"}) == P({1, 3}));

    std::mt19937_64 rng(8);
    for (int i = 0; i < 500; ++i) {
        std::vector<std::string> words;
        for (int n = 1 + static_cast<int>(rng() % 5); n > 0; --n) {
            std::string w;
            for (int m = static_cast<int>(rng() % 4); m > 0; --m) w += static_cast<char>('a' + rng() % 3);
            words.push_back(w);
        }
        P before = higman_pair(words);
        words.push_back("abc");
        P after = higman_pair(words);
        if (before) CHECK(after == before);
    }
}

TEST_CASE("neighborhoods") {
    auto rel_only = make_schema({rel("U", 1), cnst("c")});
    State r(rel_only, 4);
    r.set_constant(rel_only->id("c"), 3);
    CHECK(neighborhood(r, {1}, 4) == std::vector<Element>{1, 3});

    auto succ = make_schema({fun("Succ", 1, Role::builtin)});
    State s(succ, 3);
    interpret_builtin("succ", 0, s);
    CHECK(neighborhood(s, {0}, 1) == std::vector<Element>{0, 1});
    CHECK(neighborhood(s, {0}, 0) == std::vector<Element>{0});

    // {0,1} is closed under f.
    State f(make_schema({fun("f", 1)}), 3);
    f.set_fun(0, {0}, 1);
    f.set_fun(0, {1}, 0);
    f.set_fun(0, {2}, 0);
    for (int k = 0; k < 5; ++k) CHECK(neighborhood(f, {0, 1}, k) == std::vector<Element>{0, 1});
    CHECK(neighborhood(f, {2}, 1) == std::vector<Element>{0, 2});
}

TEST_CASE("neighborhood monotonicity and composition") {
    std::mt19937_64 rng(10);
    auto sch = make_schema({fun("f", 1), fun("g", 2), cnst("c")});
    for (int i = 0; i < 150; ++i) {
        State s(sch, 6);
        randomize_functions(s, rng);
        s.set_constant(sch->id("c"), static_cast<Element>(rng() % 6));
        std::vector<Element> a{static_cast<Element>(rng() % 6)};
        std::vector<Element> a2 = a;
        a2.push_back(static_cast<Element>(rng() % 6));
        std::sort(a2.begin(), a2.end());
        a2.erase(std::unique(a2.begin(), a2.end()), a2.end());
        for (int k = 0; k < 3; ++k) {
            auto nk = neighborhood(s, a, k);
            auto nk1 = neighborhood(s, a, k + 1);
            CHECK(subset_of(a, nk));
            CHECK(subset_of(nk, nk1));
            CHECK(subset_of(nk, neighborhood(s, a2, k)));
            CHECK(subset_of(neighborhood(s, nk, 1), nk1));
        }
    }
}

TEST_CASE("k_similar") {
    auto rel_sch = make_schema({rel("U", 1), rel("E", 2), cnst("c")});
    std::mt19937_64 rng(13);
    for (int i = 0; i < 300; ++i) {
        State s(rel_sch, 4), t(rel_sch, 4);
        randomize_relations(s, rng, 0.5);
        randomize_relations(t, rng, 0.5);
        s.set_constant(rel_sch->id("c"), 0);
        t.set_constant(rel_sch->id("c"), static_cast<Element>(rng() % 2));
        Tuple a{static_cast<Element>(rng() % 4), static_cast<Element>(rng() % 4)};
        Tuple b{static_cast<Element>(rng() % 4), static_cast<Element>(rng() % 4)};
        bool sim = k_similar(s, a, t, b, 2).has_value();
        CHECK(sim == component_iso(s, a, t, b));
        if (sim) CHECK(k_similar(s, a, t, b, 0).has_value());
    }

    // Closed isomorphic subsets are similar at every depth.
    auto fsch = make_schema({fun("f", 1), rel("U", 1)});
    State s(fsch, 4);
    s.set_fun(0, {0}, 1);
    s.set_fun(0, {1}, 0);
    s.set_fun(0, {2}, 3);
    s.set_fun(0, {3}, 3);
    s.set(1, {0}, true);
    std::vector<Element> pi{2, 3, 0, 1};
    State t = permute(s, pi);
    for (int k = 0; k < 5; ++k) {
        auto m = k_similar(s, {0}, t, {2}, k);
        REQUIRE(m);
        CHECK((*m)[0] == 2);
        CHECK((*m)[1] == (k == 0 ? -1 : 3));
        CHECK((*m)[2] == -1);
    }
    CHECK_FALSE(k_similar(s, {0}, s, {1}, 0));
    CHECK_THROWS_AS(k_similar(s, {0}, s, {0, 1}, 0), Error);
}

TEST_CASE("neighborhood_vector") {
    State r(make_schema({rel("U", 1)}), 3);
    NeighborhoodVector v = neighborhood_vector(r, {0, 1}, 2);
    CHECK(v.values == std::vector<Element>{0, 1});
    CHECK(v.type.classes() == 2);

    State e(make_schema({fun("e", 1)}), 3);
    e.set_fun(0, {0}, 1);
    e.set_fun(0, {1}, 2);
    e.set_fun(0, {2}, 2);
    NeighborhoodVector w = neighborhood_vector(e, {0}, 1);
    CHECK(w.terms == std::vector<std::string>{"x", "e(x)"});
    CHECK(w.values == std::vector<Element>{0, 1});
    NeighborhoodVector d = neighborhood_vector(e, {0, 0}, 1);
    CHECK(d.type.class_of[0] == d.type.class_of[2]);
    CHECK(d.type.class_of[1] == d.type.class_of[3]);
    CHECK(d.type.classes() == 2);
}

TEST_CASE("substructure_check instances") {
    const DynamicProgram& p = corpus("non-empty-set");
    State s = run(p, init_state(p, make_input_db(p, 4)), {ins("U", {0}), ins("U", {1})}, true).back();

    std::vector<Element> id{0, 1, 2, 3};
    CHECK(substructure_check(p, s, {0, 1, 2, 3}, s, id, {del("U", {0}), ins("U", {3})}) == SubstructureOutcome::holds);
    CHECK(substructure_check(p, s, {0}, s, {1, -1, -1, -1}, {}) == SubstructureOutcome::precondition_failed);
    CHECK(substructure_check(p, s, {2}, s, {-1, -1, 3, -1}, {ins("U", {2}), del("U", {2})}) ==
          SubstructureOutcome::holds);
    CHECK_THROWS_AS(substructure_check(p, s, {2}, s, {-1, -1, 3, -1}, {ins("U", {0})}), Error);
}

TEST_CASE("substructure property on the relational corpus") {
    for (const std::string name : {"non-empty-set", "st-twopath-binary", "s-twopath-ternary"}) {
        SubstructureConfig cfg;
        cfg.samples = 60;
        cfg.seed = 3;
        cfg.guard = builtin_program(name).guard;
        Verdict v = substructure_property(corpus(name), cfg, false);
        CHECK_MESSAGE(v.status == Verdict::Status::ok, name << ": " << v.message);
    }
}

TEST_CASE("functional substructure check") {
    const DynamicProgram& p = corpus("reach-1layer-qf");
    State s = init_state(p, make_input_db(p, 6));
    // Identical states and tuples are similar at any depth.
    CHECK(substructure_check_fun(p, s, {0, 2, 5}, s, {0, 2, 5}, 5, {ins("E", {0, 2}), ins("E", {2, 5})}) ==
          SubstructureOutcome::holds);
    SubstructureConfig cfg;
    cfg.samples = 30;
    cfg.domain_size = 12;
    cfg.guard = "1-layered";
    CHECK(substructure_property(p, cfg, true).status == Verdict::Status::ok);
}

TEST_CASE("diverse_saturation") {
    const DynamicProgram& p = corpus("conj-nonemptyset");
    auto depths = deletion_depth(p);
    CHECK(depths.at("Q") == 0);
    CHECK(depths.at("R") == 1);
    State s = init_state(p, make_input_db(p, 3));
    int u = p.schema->id("U"), r = p.schema->id("R"), q = p.schema->id("Q");

    s.set(u, {0}, true);
    auto v = diverse_saturation(s, p, depths, "U");
    CHECK(v == std::vector<Violation>{{"Q", {}}});
    s.set(q, {}, true);
    CHECK(diverse_saturation(s, p, depths, "U").empty());

    s.set(u, {1}, true);
    s.set(r, {1}, true);
    CHECK(diverse_saturation(s, p, depths, "U") == std::vector<Violation>{{"R", {0}}});
    s.set(r, {0}, true);
    CHECK(diverse_saturation(s, p, depths, "U").empty());
}

TEST_CASE("cq adversary") {
    AttackResult r = cq_adversary(corpus("conj-nonemptyset"), 4);
    REQUIRE(r.counterexample);
    const Counterexample& cx = *r.counterexample;
    CHECK(cx.validated);
    CHECK(cx.produced);
    CHECK_FALSE(cx.expected);
    CHECK(cx.seq.size() <= 4);
    CHECK(std::count_if(cx.seq.begin(), cx.seq.end(),
                        [](const Modification& m) { return m.kind == Modification::Kind::ins; }) == 2);
    CHECK_THROWS_AS(cq_adversary(corpus("non-empty-set"), 4), Error);
}

TEST_CASE("star-deletion attack") {
    CHECK_FALSE(attack_star_deletion(corpus("unary-twopath"), 1).counterexample);
    std::optional<Counterexample> found;
    for (int n = 1; n <= 8 && !found; ++n) found = attack_star_deletion(corpus("unary-twopath"), n).counterexample;
    REQUIRE(found);
    CHECK(found->validated);
    CHECK(found->expected != found->produced);
    CHECK(validate(corpus("unary-twopath"), find_oracle("st-reach"), *found));
    try {
        attack_star_deletion(corpus("s-twopath-ternary"), 4);
        FAIL("expected an arity error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("arity 3 > 1") != std::string::npos);
    }
}

TEST_CASE("subset-gadget attack") {
    const DynamicProgram& p = corpus("reach-binary-strawman");
    CHECK_FALSE(attack_subset_gadget(p, 0).counterexample);
    AttackResult r = attack_subset_gadget(p, 2);
    if (r.counterexample) {
        CHECK(r.counterexample->validated);
        CHECK(validate(p, find_oracle("st-reach"), *r.counterexample));
    }
    CHECK(r.details.is_object());
    try {
        attack_subset_gadget(p, 7);
        FAIL("expected a resource error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::resource);
    }
}

TEST_CASE("init function values avoid swappable elements") {
    const DynamicProgram& ptr = corpus("pointer-init");
    State empty = make_input_db(ptr, 5);
    CHECK(is_invariant_init(ptr, empty).invariant);
    CHECK(initfunc_hits(ptr, empty, false).empty());

    // Projection init is invariant, yet its values are the arguments.
    DynamicProgram proj = parse_program(R"(
program proj
input { E/2 }
aux { Q/0, fun P/1 }
query Q
init empty
default frame
)");
    State in = make_input_db(proj, 4);
    CHECK(is_invariant_init(proj, in).invariant);
    CHECK_FALSE(initfunc_hits(proj, in, false).empty());
    CHECK(initfunc_hits(proj, in, true).empty());
}

TEST_CASE("diverse tuples share a type under invariant init") {
    DynamicProgram p = parse_program(R"(
program copy-graph
input { E/2 }
aux { Q/0, Copy_E/2 }
const s, t
query Q
init builtin copy-input
default frame
)");
    for (int i = 1; i <= 4; ++i) {
        LayeredSpec spec{1, {i}, true};
        State g = gen_layered(spec, layered_complete_edges(spec));
        State in = make_input_db(p, g.domain_size());
        in.set_constant(p.schema->id("s"), g.constant(g.schema().id("s")));
        in.set_constant(p.schema->id("t"), g.constant(g.schema().id("t")));
        for (const Tuple& e : g.tuples(0)) in.set(p.schema->id("E"), e, true);
        REQUIRE(is_invariant_init(p, in).invariant);
        State st = init_state(p, in);
        std::vector<Element> layer;
        for (int j = 0; j < i; ++j) layer.push_back(spec.node(1, j));
        for (int m = 1; m <= 2; ++m)
            CHECK(diverse_tuples_share_type(st, layer, m, relations_with_role(*p.schema, Role::aux)));
    }
    // Marking one element breaks it.
    State g(make_schema({rel("U", 1)}), 3);
    g.set(0, {0}, true);
    CHECK_FALSE(diverse_tuples_share_type(g, {0, 1, 2}, 1, {0}));
}
