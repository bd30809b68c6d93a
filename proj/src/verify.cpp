#include "dynlab/verify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace dynlab {

using json = nlohmann::json;

namespace {

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string digest(const std::vector<State>& trace, size_t upto) {
    uint64_t h = 1469598103934665603ULL;
    for (size_t i = 0; i <= upto && i < trace.size(); ++i)
        for (unsigned char c : trace[i].key()) {
            h ^= c;
            h *= 1099511628211ULL;
        }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

Guard guard_of(const CheckConfig& cfg) { return cfg.instance_guard ? cfg.instance_guard : find_guard(cfg.guard); }

State initial_db(const DynamicProgram& p, int n, const std::vector<Modification>& extra) {
    State db = make_input_db(p, n);
    for (const auto& m : extra) db = apply_input_modification(db, m);
    return db;
}

// Every modification of an input relation, in lexicographic order.
std::vector<Modification> all_modifications(const State& db) {
    std::vector<Modification> out;
    const Schema& sch = db.schema();
    for (auto kind : {Modification::Kind::ins, Modification::Kind::del})
        for (int r : sch.ids(Role::input, SymbolKind::relation))
            for (int c = 0; c < db.table_size(sch.at(r).arity); ++c)
                out.push_back(Modification{kind, sch.at(r).name, db.decode(c, sch.at(r).arity)});
    std::sort(out.begin(), out.end());
    return out;
}

bool admissible(const State& s, const Modification& m, const Guard& guard) {
    State probe = s;
    probe.set(s.schema().id(m.relation), m.tuple, m.kind == Modification::Kind::ins);
    return guard(probe);
}

// What a checked run compares against: an oracle on the input, or the
// query of a reference program run alongside.
struct Subject {
    const DynamicProgram* p = nullptr;
    const DynamicProgram* ref = nullptr;
    Oracle oracle;
};

struct Node {
    State a;
    State b;  // reference state; empty without a reference
};

struct Divergence {
    Tuple tuple;
    bool expected;
    bool produced;
};

// Oracle runs compare the Boolean query; reference runs compare the
// whole query relation and report its first differing tuple.
std::optional<Divergence> diverges(const Subject& sub, const Node& n) {
    if (!sub.ref) {
        bool want = sub.oracle(n.a), got = query_value(*sub.p, n.a);
        if (want == got) return std::nullopt;
        return Divergence{{}, want, got};
    }
    int q = n.a.schema().id(sub.p->query), qr = n.b.schema().id(sub.ref->query);
    const auto& got = n.a.table(q);
    const auto& want = n.b.table(qr);
    if (got.size() != want.size()) throw Error(ErrorKind::schema, "query symbols differ in arity");
    for (size_t c = 0; c < got.size(); ++c)
        if ((got[c] != 0) != (want[c] != 0))
            return Divergence{n.a.decode(static_cast<int>(c), n.a.schema().at(q).arity), want[c] != 0, got[c] != 0};
    return std::nullopt;
}

Node step(const Subject& sub, const Node& n, const Modification& m) {
    Node out{apply(*sub.p, n.a, m), State()};
    if (sub.ref) out.b = apply(*sub.ref, n.b, m);
    return out;
}

std::string node_key(const Subject& sub, const Node& n) {
    return sub.ref ? n.a.key() + '|' + n.b.key() : n.a.key();
}

Counterexample make_cx(const Subject& sub, const State& db, std::vector<Modification> seq, const Divergence& d) {
    Counterexample cx;
    cx.program = sub.p->name;
    cx.initial_db = db;
    cx.step = seq.size();
    cx.seq = std::move(seq);
    cx.query_tuple = d.tuple;
    cx.expected = d.expected;
    cx.produced = d.produced;
    return cx;
}

struct Search {
    const Subject& sub;
    const CheckConfig& cfg;
    const std::vector<Modification>& mods;
    const Guard& guard;
    const State& db;
    const std::atomic<int>* best = nullptr;  // lowest branch with a witness so far
    int branch = 0;
    std::unordered_map<std::string, int> memo;
    std::vector<Modification> path;
    std::optional<Counterexample> found;
    size_t visited = 0;

    bool cancelled() const { return best && best->load() < branch; }

    bool visit(const Node& n, const Modification& m) {
        ++visited;
        if (!cfg.cap_override && static_cast<double>(visited) > cfg.cap)
            throw Error(ErrorKind::resource, "exhaustive check exceeded the cap of " +
                                                 std::to_string(static_cast<uint64_t>(cfg.cap)) + " sequences after " +
                                                 std::to_string(visited) + " steps");
        path.push_back(m);
        Node child = step(sub, n, m);
        if (auto d = diverges(sub, child)) {
            found = make_cx(sub, db, path, *d);
            return true;
        }
        bool r = dfs(child, cfg.max_len - static_cast<int>(path.size()));
        path.pop_back();
        return r;
    }

    bool dfs(const Node& n, int remaining) {
        if (remaining <= 0 || cancelled()) return false;
        auto [it, fresh] = memo.try_emplace(node_key(sub, n), remaining);
        if (!fresh) {
            if (it->second >= remaining) return false;
            it->second = remaining;
        }
        for (const auto& m : mods) {
            if (cfg.honest_only && !is_honest(n.a, m)) continue;
            if (!admissible(n.a, m, guard)) continue;
            if (visit(n, m)) return true;
        }
        return false;
    }
};

Verdict run_check(const Subject& sub, const CheckConfig& cfg) {
    const DynamicProgram& p = *sub.p;
    if (cfg.domain_size < 1) throw Error(ErrorKind::precondition, "domain size must be positive");
    Guard guard = guard_of(cfg);
    State db = initial_db(p, cfg.domain_size, cfg.initial_tuples);
    if (!guard(db)) throw Error(ErrorKind::precondition, "initial database violates the instance guard");
    Node root{init_state(p, db), State()};
    if (sub.ref) root.b = init_state(*sub.ref, initial_db(*sub.ref, cfg.domain_size, cfg.initial_tuples));

    Verdict v;
    v.seed = cfg.seed;
    auto finish_cx = [&](Counterexample cx) {
        if (sub.ref)
            validate_against(p, *sub.ref, cx);
        else
            validate(p, sub.oracle, cx);
        v.status = Verdict::Status::counterexample;
        v.message = "divergence at step " + std::to_string(cx.step) + ": expected " + (cx.expected ? "true" : "false") +
                    ", program produced " + (cx.produced ? "true" : "false");
        v.counterexample = std::move(cx);
        return v;
    };
    if (auto d = diverges(sub, root)) return finish_cx(make_cx(sub, db, {}, *d));

    std::vector<Modification> mods = all_modifications(db);
    int jobs = std::max(1, cfg.jobs);

    if (cfg.mode == CheckConfig::Mode::exhaustive) {
        double branching = cfg.honest_only ? static_cast<double>(mods.size()) / 2 : static_cast<double>(mods.size());
        double estimate = 0, power = 1;
        for (int i = 0; i < cfg.max_len; ++i) estimate += (power *= branching);
        if (!cfg.cap_override && estimate > cfg.cap) {
            std::ostringstream os;
            os << "exhaustive check needs up to " << estimate << " sequences (" << mods.size()
               << " modifications, length " << cfg.max_len << "), over the cap of " << cfg.cap;
            throw Error(ErrorKind::resource, os.str());
        }
        std::vector<Modification> first;
        for (const auto& m : mods)
            if ((!cfg.honest_only || is_honest(root.a, m)) && admissible(root.a, m, guard)) first.push_back(m);

        if (jobs == 1 || first.size() < 2 || cfg.max_len < 2) {
            Search s{sub, cfg, mods, guard, db, nullptr, 0, {}, {}, {}, 0};
            s.memo.emplace(node_key(sub, root), cfg.max_len);
            for (const auto& m : first)
                if (cfg.max_len > 0 && s.visit(root, m)) break;
            v.sequences = s.visited;
            v.states = s.memo.size();
            if (s.found) return finish_cx(std::move(*s.found));
        } else {
            // Branches on the first modification; the lowest branch with a
            // witness wins, so the result matches the serial search.
            std::vector<std::optional<Counterexample>> results(first.size());
            std::vector<size_t> visited(first.size()), states(first.size());
            std::vector<std::exception_ptr> errors(static_cast<size_t>(jobs));
            std::atomic<int> next{0};
            std::atomic<int> best{static_cast<int>(first.size())};
            auto worker = [&](int w) {
                try {
                    for (int i = next++; i < static_cast<int>(first.size()); i = next++) {
                        if (best.load() < i) continue;
                        Search s{sub, cfg, mods, guard, db, &best, i, {}, {}, {}, 0};
                        s.memo.emplace(node_key(sub, root), cfg.max_len);
                        s.visit(root, first[static_cast<size_t>(i)]);
                        visited[static_cast<size_t>(i)] = s.visited;
                        states[static_cast<size_t>(i)] = s.memo.size();
                        if (s.found) {
                            results[static_cast<size_t>(i)] = std::move(s.found);
                            int cur = best.load();
                            while (i < cur && !best.compare_exchange_weak(cur, i)) {
                            }
                        }
                    }
                } catch (...) {
                    errors[static_cast<size_t>(w)] = std::current_exception();
                }
            };
            std::vector<std::thread> pool;
            for (int w = 0; w < jobs; ++w) pool.emplace_back(worker, w);
            for (auto& t : pool) t.join();
            for (auto& e : errors)
                if (e) std::rethrow_exception(e);
            v.sequences = std::accumulate(visited.begin(), visited.end(), size_t{0});
            v.states = std::accumulate(states.begin(), states.end(), size_t{0});
            for (auto& r : results)
                if (r) return finish_cx(std::move(*r));
        }
        v.status = Verdict::Status::ok;
        v.message = "ok up to length " + std::to_string(cfg.max_len) + " over domain size " +
                    std::to_string(cfg.domain_size) + " (exhaustive, " + std::to_string(v.sequences) + " steps, " +
                    std::to_string(v.states) + " states)";
        return v;
    }

    // Random mode: sample i uses its own generator derived from the seed.
    auto sample = [&](size_t i) -> std::optional<Counterexample> {
        std::mt19937_64 rng(splitmix64(cfg.seed ^ splitmix64(i)));
        int len = std::uniform_int_distribution<int>(1, std::max(1, cfg.max_len))(rng);
        Node n = root;
        std::vector<Modification> seq;
        std::vector<size_t> order(mods.size());
        std::iota(order.begin(), order.end(), 0);
        for (int k = 0; k < len; ++k) {
            std::shuffle(order.begin(), order.end(), rng);
            const Modification* pick = nullptr;
            for (size_t idx : order) {
                const auto& m = mods[idx];
                if (cfg.honest_only && !is_honest(n.a, m)) continue;
                if (!admissible(n.a, m, guard)) continue;
                pick = &m;
                break;
            }
            if (!pick) break;
            seq.push_back(*pick);
            n = step(sub, n, *pick);
            if (auto d = diverges(sub, n)) return make_cx(sub, db, seq, *d);
        }
        return std::nullopt;
    };
    std::vector<std::optional<Counterexample>> results(static_cast<size_t>(jobs));
    std::vector<size_t> first_hit(static_cast<size_t>(jobs), cfg.samples);
    std::vector<std::exception_ptr> errors(static_cast<size_t>(jobs));
    std::atomic<size_t> best{cfg.samples};
    auto worker = [&](int w) {
        try {
            for (size_t i = static_cast<size_t>(w); i < cfg.samples; i += static_cast<size_t>(jobs)) {
                if (best.load() < i) break;
                if (auto cx = sample(i)) {
                    results[static_cast<size_t>(w)] = std::move(cx);
                    first_hit[static_cast<size_t>(w)] = i;
                    size_t cur = best.load();
                    while (i < cur && !best.compare_exchange_weak(cur, i)) {
                    }
                    break;
                }
            }
        } catch (...) {
            errors[static_cast<size_t>(w)] = std::current_exception();
        }
    };
    if (jobs == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < jobs; ++w) pool.emplace_back(worker, w);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    size_t winner = static_cast<size_t>(std::min_element(first_hit.begin(), first_hit.end()) - first_hit.begin());
    if (results[winner]) {
        v.sequences = first_hit[winner] + 1;
        return finish_cx(std::move(*results[winner]));
    }
    v.sequences = cfg.samples;
    v.status = Verdict::Status::ok;
    v.message = "ok on " + std::to_string(cfg.samples) + " random sequences of length <= " +
                std::to_string(cfg.max_len) + " over domain size " + std::to_string(cfg.domain_size) + " (seed " +
                std::to_string(cfg.seed) + ")";
    return v;
}

bool replay(const DynamicProgram& p, const std::function<bool(const std::vector<State>&, size_t)>& expected,
            Counterexample& cx, std::vector<State>& trace) {
    if (cx.step > cx.seq.size()) return false;
    std::vector<Modification> prefix(cx.seq.begin(), cx.seq.begin() + static_cast<long>(cx.step));
    trace = run(p, init_state(p, cx.initial_db), prefix, false);
    const State& last = trace[cx.step];
    bool got = cx.query_tuple.empty() ? query_value(p, last) : last.holds(last.schema().id(p.query), cx.query_tuple);
    bool want = expected(trace, cx.step);
    cx.validated = got == cx.produced && want == cx.expected && got != want;
    if (cx.validated) cx.trace_digest = digest(trace, cx.step);
    return cx.validated;
}

}  // namespace

json Counterexample::to_json() const {
    json j;
    j["format"] = 1;
    j["program"] = program;
    j["initial_db"] = dynlab::to_json(initial_db);
    json seqj = json::array();
    for (const auto& m : seq) seqj.push_back(dynlab::to_json(m));
    j["sequence"] = seqj;
    j["step"] = step;
    if (!query_tuple.empty()) j["query_tuple"] = query_tuple;
    j["expected"] = expected;
    j["produced"] = produced;
    j["trace_digest"] = trace_digest;
    j["validated"] = validated;
    return j;
}

Counterexample counterexample_from_json(const json& j, SchemaPtr schema) {
    if (j.value("format", 0) != 1) throw Error(ErrorKind::parse, "unsupported counterexample format");
    Counterexample cx;
    cx.program = j.at("program").get<std::string>();
    cx.initial_db = state_from_json(j.at("initial_db"), std::move(schema));
    for (const auto& m : j.at("sequence")) cx.seq.push_back(modification_from_json(m));
    cx.step = j.at("step").get<size_t>();
    if (j.contains("query_tuple")) cx.query_tuple = j.at("query_tuple").get<Tuple>();
    cx.expected = j.at("expected").get<bool>();
    cx.produced = j.at("produced").get<bool>();
    cx.trace_digest = j.value("trace_digest", "");
    cx.validated = j.value("validated", false);
    return cx;
}

bool validate(const DynamicProgram& p, const Oracle& oracle, Counterexample& cx) {
    std::vector<State> trace;
    return replay(p, [&](const std::vector<State>& tr, size_t i) { return oracle(tr[i]); }, cx, trace);
}

bool validate_against(const DynamicProgram& p, const DynamicProgram& reference, Counterexample& cx) {
    State ref_db = make_input_db(reference, cx.initial_db.domain_size());
    const Schema& sch = cx.initial_db.schema();
    for (int r : sch.ids(Role::input, SymbolKind::relation))
        for (const Tuple& t : cx.initial_db.tuples(r)) ref_db.set(reference.schema->id(sch.at(r).name), t, true);
    std::vector<Modification> prefix(cx.seq.begin(), cx.seq.begin() + static_cast<long>(std::min(cx.step, cx.seq.size())));
    auto ref_trace = run(reference, init_state(reference, ref_db), prefix, false);
    std::vector<State> trace;
    auto ref_value = [&](const std::vector<State>&, size_t i) {
        const State& r = ref_trace[i];
        return cx.query_tuple.empty() ? query_value(reference, r) : r.holds(r.schema().id(reference.query), cx.query_tuple);
    };
    return replay(p, ref_value, cx, trace);
}

int Verdict::exit_code() const {
    switch (status) {
        case Status::ok: return 0;
        case Status::counterexample: return 1;
        default: return 2;
    }
}

std::string to_string(Verdict::Status s) {
    switch (s) {
        case Verdict::Status::ok: return "ok";
        case Verdict::Status::counterexample: return "counterexample";
        default: return "inconclusive";
    }
}

json Verdict::to_json() const {
    json j;
    j["format"] = 1;
    j["status"] = to_string(status);
    j["message"] = message;
    j["seed"] = seed;
    j["sequences"] = sequences;
    j["states"] = states;
    if (counterexample) j["counterexample"] = counterexample->to_json();
    if (!witness.is_null()) j["witness"] = witness;
    return j;
}

Verdict check_maintenance(const DynamicProgram& p, const Oracle& oracle, const CheckConfig& cfg) {
    Subject sub{&p, nullptr, oracle};
    return run_check(sub, cfg);
}

Verdict check_equivalence(const DynamicProgram& reference, const DynamicProgram& candidate, const CheckConfig& cfg) {
    Subject sub{&candidate, &reference, nullptr};
    return run_check(sub, cfg);
}

// ---------------------------------------------------------------- words

namespace {
template <class Word>
std::optional<std::vector<int>> embed(const Word& u, const Word& v) {
    std::vector<int> pos;
    size_t j = 0;
    for (size_t i = 0; i < u.size(); ++i) {
        while (j < v.size() && !(v[j] == u[i])) ++j;
        if (j == v.size()) return std::nullopt;
        pos.push_back(static_cast<int>(j++));
    }
    return pos;
}

template <class Word>
std::optional<std::pair<int, int>> first_pair(const std::vector<Word>& words) {
    for (size_t k = 1; k < words.size(); ++k)
        for (size_t l = 0; l < k; ++l)
            if (embed(words[l], words[k])) return std::make_pair(static_cast<int>(l + 1), static_cast<int>(k + 1));
    return std::nullopt;
}
}  // namespace

bool subsequence(const std::string& u, const std::string& v) { return embed(u, v).has_value(); }
bool subsequence(const TypeWord& u, const TypeWord& v) { return embed(u, v).has_value(); }
std::optional<std::vector<int>> embedding(const TypeWord& u, const TypeWord& v) { return embed(u, v); }
std::optional<std::pair<int, int>> higman_pair(const std::vector<std::string>& words) { return first_pair(words); }
std::optional<std::pair<int, int>> higman_pair(const std::vector<TypeWord>& words) { return first_pair(words); }

// ---------------------------------------------------------------- neighborhoods

namespace {

constexpr size_t kWorkCap = 50'000'000;

Element constant_in(const State& s, const std::string& name) { return s.constant(s.schema().id(name)); }

// Pairs (t^S(a), t^T(b)) for all terms up to depth k. With a single state
// the second component mirrors the first.
std::optional<std::vector<std::pair<Element, Element>>> term_pairs(const State& s, const Tuple& a, const State& t,
                                                                   const Tuple& b, int k, bool need_function) {
    std::set<std::pair<Element, Element>> seen;
    std::vector<std::pair<Element, Element>> pairs;
    std::vector<Element> left(static_cast<size_t>(s.domain_size()), -1), right(static_cast<size_t>(t.domain_size()), -1);
    bool consistent = true;
    auto add = [&](Element x, Element y) {
        if (!seen.insert({x, y}).second) return;
        pairs.emplace_back(x, y);
        if (left[x] >= 0 && left[x] != y) consistent = false;
        if (right[y] >= 0 && right[y] != x) consistent = false;
        left[x] = y;
        right[y] = x;
    };
    for (size_t i = 0; i < a.size(); ++i) add(a[i], b[i]);
    const Schema& sch = s.schema();
    for (int c : sch.ids_of_kind(SymbolKind::constant)) add(s.constant(c), constant_in(t, sch.at(c).name));
    if (need_function && !consistent) return std::nullopt;
    auto funs = sch.ids_of_kind(SymbolKind::function);
    size_t work = 0;
    for (int round = 1; round <= k; ++round) {
        size_t before = pairs.size();
        std::vector<std::pair<Element, Element>> pool = pairs;
        for (int f : funs) {
            int ar = sch.at(f).arity;
            int ft = t.schema().id(sch.at(f).name);
            if (ar == 0) {
                add(s.table(f)[0], t.table(ft)[0]);
                continue;
            }
            std::vector<size_t> idx(static_cast<size_t>(ar), 0);
            Tuple x(static_cast<size_t>(ar)), y(static_cast<size_t>(ar));
            while (true) {
                if (++work > kWorkCap) throw Error(ErrorKind::resource, "neighborhood computation exceeds work cap");
                for (int i = 0; i < ar; ++i) {
                    x[i] = pool[idx[i]].first;
                    y[i] = pool[idx[i]].second;
                }
                add(s.fun(f, x), t.fun(ft, y));
                int i = ar - 1;
                while (i >= 0 && ++idx[i] == pool.size()) idx[i--] = 0;
                if (i < 0) break;
            }
        }
        if (need_function && !consistent) return std::nullopt;
        if (pairs.size() == before) break;
    }
    return pairs;
}

bool relations_preserved(const State& s, const State& t, const std::vector<Element>& pi,
                         const std::vector<Element>& dom) {
    const Schema& sch = s.schema();
    for (int r : sch.ids_of_kind(SymbolKind::relation)) {
        int rt = t.schema().id(sch.at(r).name);
        int ar = sch.at(r).arity;
        std::vector<size_t> idx(static_cast<size_t>(ar), 0);
        Tuple x(static_cast<size_t>(ar)), y(static_cast<size_t>(ar));
        while (true) {
            for (int i = 0; i < ar; ++i) {
                x[i] = dom[idx[i]];
                y[i] = pi[x[i]];
            }
            if (s.holds(r, x) != t.holds(rt, y)) return false;
            int i = ar - 1;
            while (i >= 0 && ++idx[i] == dom.size()) idx[i--] = 0;
            if (i < 0) break;
        }
    }
    return true;
}

}  // namespace

std::vector<Element> neighborhood(const State& s, const std::vector<Element>& a, int k) {
    if (k < 0) throw Error(ErrorKind::precondition, "negative neighborhood depth");
    for (Element e : a)
        if (e < 0 || e >= s.domain_size()) throw Error(ErrorKind::domain, "neighborhood seed outside domain");
    auto pairs = term_pairs(s, a, s, a, k, false);
    std::set<Element> out;
    for (const auto& pr : *pairs) out.insert(pr.first);
    return {out.begin(), out.end()};
}

std::optional<std::vector<Element>> k_similar(const State& s, const Tuple& a, const State& t, const Tuple& b, int k) {
    if (a.size() != b.size()) throw Error(ErrorKind::precondition, "tuples of different length");
    auto pairs = term_pairs(s, a, t, b, k, true);
    if (!pairs) return std::nullopt;
    std::vector<Element> pi(static_cast<size_t>(s.domain_size()), -1);
    std::vector<Element> dom;
    for (const auto& [x, y] : *pairs) {
        pi[x] = y;
        dom.push_back(x);
    }
    std::sort(dom.begin(), dom.end());
    if (!relations_preserved(s, t, pi, dom)) return std::nullopt;
    return pi;
}

NeighborhoodVector neighborhood_vector(const State& s, const Tuple& tup, int k, size_t cap) {
    NeighborhoodVector out;
    std::vector<TermPtr> terms;
    for (const auto& term : terms_up_to_depth(s.schema(), k, {"x"}, cap)) {
        std::vector<std::string> vars;
        collect_vars(term, vars);
        if (!vars.empty()) terms.push_back(term);
    }
    for (Element c : tup) {
        Assignment asg{{"x", c}};
        for (const auto& term : terms) {
            out.terms.push_back(print(term));
            out.values.push_back(eval_term(term, s, asg));
        }
    }
    out.type = equality_type_of(out.values);
    return out;
}

// ---------------------------------------------------------------- substructure

namespace {

bool over(const std::vector<Element>& set, const Tuple& t) {
    return std::all_of(t.begin(), t.end(),
                       [&](Element e) { return std::find(set.begin(), set.end(), e) != set.end(); });
}

std::vector<Modification> map_seq(const std::vector<Modification>& alpha, const std::vector<Element>& pi) {
    std::vector<Modification> beta = alpha;
    for (auto& m : beta)
        for (auto& e : m.tuple) e = pi[e];
    return beta;
}

// Isomorphism of restrictions to A and pi(A) via pi.
bool restricted_iso(const State& s, const std::vector<Element>& a, const State& t, const std::vector<Element>& pi) {
    std::vector<Element> b;
    for (Element e : a) b.push_back(pi[e]);
    SubState rs = restrict(s, a), rt = restrict(t, b);
    std::vector<Element> local(rs.elements.size());
    for (size_t i = 0; i < rs.elements.size(); ++i) {
        Element img = pi[rs.elements[i]];
        local[i] = static_cast<Element>(std::find(rt.elements.begin(), rt.elements.end(), img) - rt.elements.begin());
    }
    return check_isomorphism(rs.state, rt.state, local);
}

bool constants_inside(const State& s, const std::vector<Element>& a) {
    for (Element c : s.constant_values())
        if (std::find(a.begin(), a.end(), c) == a.end()) return false;
    return true;
}

}  // namespace

SubstructureOutcome substructure_check(const DynamicProgram& p, const State& s, const std::vector<Element>& a,
                                       const State& t, const std::vector<Element>& pi,
                                       const std::vector<Modification>& alpha) {
    if (!s.schema().ids_of_kind(SymbolKind::function).empty())
        throw Error(ErrorKind::precondition, "relational substructure check on a schema with functions");
    if (!constants_inside(s, a)) return SubstructureOutcome::precondition_failed;
    std::set<Element> img;
    for (Element e : a) {
        if (pi.at(static_cast<size_t>(e)) < 0) return SubstructureOutcome::precondition_failed;
        img.insert(pi[e]);
    }
    if (img.size() != a.size()) return SubstructureOutcome::precondition_failed;
    std::vector<Element> b(img.begin(), img.end());
    if (!constants_inside(t, b)) return SubstructureOutcome::precondition_failed;
    for (const auto& m : alpha)
        if (!over(a, m.tuple)) throw Error(ErrorKind::precondition, "modification outside the subset");
    if (!restricted_iso(s, a, t, pi)) return SubstructureOutcome::precondition_failed;
    State s2 = run(p, s, alpha, false).back();
    State t2 = run(p, t, map_seq(alpha, pi), false).back();
    return restricted_iso(s2, a, t2, pi) ? SubstructureOutcome::holds : SubstructureOutcome::violated;
}

SubstructureOutcome substructure_check_fun(const DynamicProgram& p, const State& s, const Tuple& a, const State& t,
                                           const Tuple& b, int m, const std::vector<Modification>& alpha) {
    auto pi = k_similar(s, a, t, b, m);
    if (!pi) return SubstructureOutcome::precondition_failed;
    std::vector<Element> aset(a.begin(), a.end());
    for (const auto& mod : alpha)
        if (!over(aset, mod.tuple)) throw Error(ErrorKind::precondition, "modification outside the tuple");
    State s2 = run(p, s, alpha, false).back();
    State t2 = run(p, t, map_seq(alpha, *pi), false).back();
    return k_similar(s2, a, t2, b, 0) ? SubstructureOutcome::holds : SubstructureOutcome::violated;
}

namespace {

struct Sampler {
    const DynamicProgram& p;
    const SubstructureConfig& cfg;
    Guard guard;
    std::mt19937_64 rng;
    std::vector<Modification> mods;

    int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

    State random_state() {
        State s = init_state(p, make_input_db(p, cfg.domain_size));
        int len = uniform(0, cfg.prefix_len);
        for (int i = 0; i < len; ++i) {
            std::vector<const Modification*> ok;
            for (const auto& m : mods)
                if (is_honest(s, m) && admissible(s, m, guard)) ok.push_back(&m);
            if (ok.empty()) break;
            s = apply(p, s, *ok[static_cast<size_t>(uniform(0, static_cast<int>(ok.size()) - 1))]);
        }
        return s;
    }

    std::vector<Element> non_constants(const State& s) {
        auto cs = s.constant_values();
        std::vector<Element> out;
        for (Element e = 0; e < s.domain_size(); ++e)
            if (std::find(cs.begin(), cs.end(), e) == cs.end()) out.push_back(e);
        return out;
    }

    std::vector<Element> pick(std::vector<Element> pool, int count) {
        std::shuffle(pool.begin(), pool.end(), rng);
        pool.resize(static_cast<size_t>(std::min<int>(count, static_cast<int>(pool.size()))));
        return pool;
    }

    std::vector<Modification> random_seq(const std::vector<Element>& elems, int max_len) {
        std::vector<Modification> seq;
        const Schema& sch = *p.schema;
        auto inputs = sch.ids(Role::input, SymbolKind::relation);
        int len = uniform(0, max_len);
        for (int i = 0; i < len && !elems.empty(); ++i) {
            int r = inputs[static_cast<size_t>(uniform(0, static_cast<int>(inputs.size()) - 1))];
            Tuple t;
            for (int j = 0; j < sch.at(r).arity; ++j)
                t.push_back(elems[static_cast<size_t>(uniform(0, static_cast<int>(elems.size()) - 1))]);
            seq.push_back(Modification{uniform(0, 1) ? Modification::Kind::ins : Modification::Kind::del,
                                       sch.at(r).name, t});
        }
        return seq;
    }
};

json state_pair_witness(const State& s, const State& t, const std::vector<Modification>& alpha) {
    json w;
    w["S"] = to_json(s);
    w["T"] = to_json(t);
    json a = json::array();
    for (const auto& m : alpha) a.push_back(to_json(m));
    w["alpha"] = a;
    return w;
}

}  // namespace

Verdict substructure_property(const DynamicProgram& p, const SubstructureConfig& cfg, bool with_functions) {
    Sampler smp{p, cfg, find_guard(cfg.guard), std::mt19937_64(splitmix64(cfg.seed)), {}};
    smp.mods = all_modifications(make_input_db(p, cfg.domain_size));
    bool has_functions = !p.schema->ids_of_kind(SymbolKind::function).empty();
    if (!with_functions && has_functions)
        throw Error(ErrorKind::precondition, "program uses functions; run the functional suite");
    int depth = classify_program(p).nesting_depth;
    int m = cfg.similarity_depth.value_or(cfg.seq_len * depth + depth);

    Verdict v;
    v.seed = cfg.seed;
    size_t tested = 0, skipped = 0, nontrivial = 0;
    // Draws until `samples` admissible pairs were tested, within a budget.
    for (size_t i = 0; tested < cfg.samples && i < cfg.samples * 20; ++i) {
        State s = smp.random_state();
        int mode = smp.uniform(0, 3);
        State t = mode == 2 ? smp.random_state() : s;
        auto free_s = smp.non_constants(s);
        SubstructureOutcome out;
        std::vector<Modification> alpha;
        bool trivial = true;
        if (!with_functions) {
            std::vector<Element> a = smp.pick(free_s, smp.uniform(1, std::max(1, static_cast<int>(free_s.size()))));
            if (mode == 3) {
                // a permuted copy that fixes the constants
                std::vector<Element> perm(static_cast<size_t>(s.domain_size()));
                std::iota(perm.begin(), perm.end(), 0);
                auto shuffled = smp.pick(free_s, static_cast<int>(free_s.size()));
                for (size_t j = 0; j < free_s.size(); ++j) perm[free_s[j]] = shuffled[j];
                t = permute(s, perm);
            }
            for (Element c : s.constant_values())
                if (std::find(a.begin(), a.end(), c) == a.end()) a.push_back(c);
            std::sort(a.begin(), a.end());
            // Search an embedding of A into T that fixes constants by name.
            std::vector<Element> pi(static_cast<size_t>(s.domain_size()), -1);
            const Schema& sch = s.schema();
            for (int c : sch.ids_of_kind(SymbolKind::constant)) pi[s.constant(c)] = t.constant(c);
            std::vector<Element> movable;
            for (Element e : a)
                if (pi[e] < 0) movable.push_back(e);
            auto targets = smp.non_constants(t);
            if (targets.size() < movable.size()) {
                ++skipped;
                continue;
            }
            std::vector<std::vector<Element>> candidates;
            std::vector<Element> choice(movable.size());
            std::vector<bool> used(static_cast<size_t>(t.domain_size()), false);
            std::function<void(size_t)> gen = [&](size_t j) {
                if (candidates.size() >= 5000) return;
                if (j == movable.size()) {
                    candidates.push_back(choice);
                    return;
                }
                for (Element e : targets)
                    if (!used[e]) {
                        used[e] = true;
                        choice[j] = e;
                        gen(j + 1);
                        used[e] = false;
                    }
            };
            gen(0);
            std::shuffle(candidates.begin(), candidates.end(), smp.rng);
            bool found = false;
            for (const auto& cand : candidates) {
                for (size_t j = 0; j < movable.size(); ++j) pi[movable[j]] = cand[j];
                if (restricted_iso(s, a, t, pi)) {
                    found = true;
                    break;
                }
            }
            if (!found) {
                ++skipped;
                continue;
            }
            for (Element e : a) trivial = trivial && pi[e] == e;
            trivial = trivial && s == t;
            alpha = smp.random_seq(a, cfg.seq_len);
            out = substructure_check(p, s, a, t, pi, alpha);
        } else {
            Tuple a = smp.pick(free_s, smp.uniform(1, std::min(2, std::max(1, static_cast<int>(free_s.size())))));
            Tuple b = a;
            if (mode == 1 || mode == 2) {
                b = smp.pick(smp.non_constants(t), static_cast<int>(a.size()));
                if (b.size() != a.size()) {
                    ++skipped;
                    continue;
                }
            } else if (mode == 3) {
                // Change T away from the m-neighborhood of a.
                auto nb = neighborhood(s, a, m);
                std::vector<Element> outside;
                for (Element e = 0; e < s.domain_size(); ++e)
                    if (!std::binary_search(nb.begin(), nb.end(), e)) outside.push_back(e);
                if (!outside.empty())
                    for (int r : p.schema->ids_of_kind(SymbolKind::relation)) {
                        if (p.schema->at(r).role == Role::builtin || p.schema->at(r).arity == 0) continue;
                        Tuple tup;
                        for (int j = 0; j < p.schema->at(r).arity; ++j)
                            tup.push_back(outside[static_cast<size_t>(smp.uniform(0, static_cast<int>(outside.size()) - 1))]);
                        t.set(r, tup, !t.holds(r, tup));
                    }
            }
            trivial = s == t && a == b;
            alpha = smp.random_seq(std::vector<Element>(a.begin(), a.end()), cfg.seq_len);
            out = substructure_check_fun(p, s, a, t, b, m, alpha);
        }
        if (out == SubstructureOutcome::precondition_failed) {
            ++skipped;
            continue;
        }
        ++tested;
        if (!trivial) ++nontrivial;
        if (out == SubstructureOutcome::violated) {
            v.status = Verdict::Status::counterexample;
            v.message = "substructure property violated at sample " + std::to_string(i);
            v.witness = state_pair_witness(s, t, alpha);
            v.witness["sample"] = i;
            v.sequences = tested;
            return v;
        }
    }
    v.sequences = tested;
    v.witness = json{{"tested", tested}, {"skipped", skipped}, {"nontrivial", nontrivial}};
    if (with_functions) v.witness["similarity_depth"] = m;
    if (tested == 0) {
        v.status = Verdict::Status::inconclusive;
        v.message = "no admissible subset pairs among " + std::to_string(skipped) + " draws";
        return v;
    }
    v.status = Verdict::Status::ok;
    v.message = "ok on " + std::to_string(tested) + " pairs (" + std::to_string(nontrivial) + " non-trivial, " +
                std::to_string(skipped) + " skipped)";
    return v;
}

// ---------------------------------------------------------------- attacks

namespace {

int max_aux_arity(const DynamicProgram& p) {
    int m = 0;
    for (int id : p.aux_ids()) m = std::max(m, p.schema->at(id).arity);
    return m;
}

void require_graph_program(const DynamicProgram& p, const std::string& driver) {
    const Schema& sch = *p.schema;
    if (!sch.has("E") || sch.at("E").role != Role::input || sch.at("E").arity != 2 || !sch.has("s") || !sch.has("t"))
        throw Error(ErrorKind::precondition, driver + " needs input E/2 and constants s, t");
    if (!p.schema->ids(Role::aux, SymbolKind::function).empty())
        throw Error(ErrorKind::precondition, driver + " needs relational auxiliary data");
}

Modification edge(Modification::Kind k, Element a, Element b) { return Modification{k, "E", {a, b}}; }

// First step at which the program leaves the oracle on a replay.
std::optional<Counterexample> first_divergence(const DynamicProgram& p, const Oracle& oracle, const State& db,
                                               const std::vector<Modification>& seq) {
    auto trace = run(p, init_state(p, db), seq, false);
    for (size_t i = 0; i < trace.size(); ++i) {
        bool want = oracle(trace[i]), got = query_value(p, trace[i]);
        if (want != got) {
            Counterexample cx;
            cx.program = p.name;
            cx.initial_db = db;
            cx.seq.assign(seq.begin(), seq.begin() + static_cast<long>(i));
            cx.step = i;
            cx.expected = want;
            cx.produced = got;
            validate(p, oracle, cx);
            return cx;
        }
    }
    return std::nullopt;
}

json word_json(const TypeWord& w) {
    json j = json::array();
    for (const auto& t : w) j.push_back(t.to_string());
    return j;
}

json seq_json(const std::vector<Modification>& seq) {
    json j = json::array();
    for (const auto& m : seq) j.push_back(to_string(m));
    return j;
}

void pick_witness(AttackResult& res, const DynamicProgram& p, const Oracle& oracle, const State& db,
                  const std::vector<Modification>& seq1, const std::vector<Modification>& seq2) {
    auto c1 = first_divergence(p, oracle, db, seq1);
    auto c2 = first_divergence(p, oracle, db, seq2);
    res.details["beta1_diverges"] = c1.has_value();
    res.details["beta2_diverges"] = c2.has_value();
    if (c1 && (!c2 || c1->step <= c2->step))
        res.counterexample = std::move(c1);
    else if (c2)
        res.counterexample = std::move(c2);
    if (res.counterexample)
        res.diagnostic = "program diverges from the oracle at step " + std::to_string(res.counterexample->step);
    else
        res.diagnostic = "both sequences agree with the oracle; no witness";
}

std::vector<Element> free_elements(const State& s) {
    auto cs = s.constant_values();
    std::vector<Element> out;
    for (Element e = 0; e < s.domain_size(); ++e)
        if (std::find(cs.begin(), cs.end(), e) == cs.end()) out.push_back(e);
    return out;
}

}  // namespace

AttackResult attack_star_deletion(const DynamicProgram& p, int n) {
    int arity = max_aux_arity(p);
    if (arity > 1)
        throw Error(ErrorKind::precondition,
                    "star-deletion needs unary auxiliary data: arity " + std::to_string(arity) + " > 1");
    require_graph_program(p, "star-deletion");
    AttackResult res;
    res.details["n"] = n;
    if (n < 1) {
        res.diagnostic = "n must be positive";
        return res;
    }
    const Schema& sch = *p.schema;
    State db = make_input_db(p, n + 2);
    Element s = db.constant(sch.id("s")), t = db.constant(sch.id("t"));
    auto layer = free_elements(db);
    if (static_cast<int>(layer.size()) != n) throw Error(ErrorKind::precondition, "constants s and t coincide");

    // Shrink the layer until it is homogeneous for the builtin relations.
    State s0 = init_state(p, db);
    auto builtins = relations_with_role(sch, Role::builtin);
    std::vector<Element> a = layer;
    if (!builtins.empty()) {
        std::optional<std::vector<Element>> h;
        for (int size = n; size >= 1 && !h; --size) h = find_homogeneous_subset(s0, layer, size, {s, t}, builtins);
        a = h.value_or(std::vector<Element>{});
    }
    int np = static_cast<int>(a.size());
    res.details["homogeneous_layer"] = a;

    std::vector<Modification> alpha;
    for (Element x : a) {
        alpha.push_back(edge(Modification::Kind::ins, s, x));
        alpha.push_back(edge(Modification::Kind::ins, x, t));
    }
    // S'_i keeps the edges (s, a_1) .. (s, a_i).
    std::vector<State> suffix(static_cast<size_t>(np + 1));
    suffix[np] = run(p, s0, alpha, false).back();
    for (int i = np - 1; i >= 0; --i)
        suffix[i] = apply(p, suffix[i + 1], edge(Modification::Kind::del, s, a[i]));

    auto aux = relations_with_role(sch, Role::aux);
    std::vector<TypeWord> words;
    for (int i = 1; i <= np; ++i) {
        TypeWord w;
        for (int j = 0; j < i; ++j) w.push_back(atomic_type(suffix[i], {a[j]}, aux));
        words.push_back(std::move(w));
    }
    json wj = json::array();
    for (const auto& w : words) wj.push_back(word_json(w));
    res.details["words"] = wj;

    auto pair = higman_pair(words);
    if (!pair) {
        res.diagnostic = "no Higman pair among " + std::to_string(np) + " words; try a larger n";
        return res;
    }
    int k = pair->first, l = pair->second;
    auto emb = *embedding(words[k - 1], words[l - 1]);
    res.details["pair"] = {k, l};
    res.details["embedding"] = emb;

    auto build = [&](int keep, const std::vector<int>& removed) {
        std::vector<Modification> seq = alpha;
        for (int i = np - 1; i >= keep; --i) seq.push_back(edge(Modification::Kind::del, s, a[i]));
        for (int j : removed) seq.push_back(edge(Modification::Kind::del, s, a[j]));
        return seq;
    };
    std::vector<int> first_k(static_cast<size_t>(k));
    std::iota(first_k.begin(), first_k.end(), 0);
    auto seq1 = build(k, first_k);
    auto seq2 = build(l, emb);
    res.details["beta1"] = seq_json(seq1);
    res.details["beta2"] = seq_json(seq2);
    pick_witness(res, p, oracle_st_reach, db, seq1, seq2);
    return res;
}

AttackResult attack_subset_gadget(const DynamicProgram& p, int n2) {
    int arity = max_aux_arity(p);
    if (arity > 2)
        throw Error(ErrorKind::precondition,
                    "subset-gadget needs binary auxiliary data: arity " + std::to_string(arity) + " > 2");
    require_graph_program(p, "subset-gadget");
    AttackResult res;
    res.details["n2"] = n2;
    if (n2 <= 0) {
        res.diagnostic = "n2 = 0 leaves no gadget";
        return res;
    }
    if (n2 > 6) throw Error(ErrorKind::resource, "subset gadget with n2 = " + std::to_string(n2) + " exceeds the cap of 6");
    const Schema& sch = *p.schema;
    int na = 1 << n2;
    State db = make_input_db(p, na + n2 + 2);
    Element s = db.constant(sch.id("s")), t = db.constant(sch.id("t"));
    auto free = free_elements(db);
    std::vector<Element> A(free.begin(), free.begin() + na), B(free.begin() + na, free.end());
    for (Element b : B) db.set(sch.id("E"), {b, t}, true);
    State s0 = init_state(p, db);

    auto builtins = relations_with_role(sch, Role::builtin);
    if (!builtins.empty()) {
        for (Element x : A)
            if (!find_homogeneous_subset(s0, B, n2, {x}, builtins)) {
                res.diagnostic = "second layer is not homogeneous for the builtin relations at this scale";
                return res;
            }
    }

    std::vector<Modification> alpha;
    for (int mask = 0; mask < na; ++mask)
        for (int j = 0; j < n2; ++j)
            if (mask >> j & 1) alpha.push_back(edge(Modification::Kind::ins, A[mask], B[j]));
    State s1 = run(p, s0, alpha, false).back();

    std::vector<Element> b3;
    for (int size = n2; size >= 1 && b3.empty(); --size)
        if (auto h = find_homogeneous_subset(s1, B, size, {})) b3 = *h;
    res.details["homogeneous_layer"] = b3;
    auto node_of = [&](int i) {  // a_{X_i} with X_i the first i elements of b3
        int mask = 0;
        for (int j = 0; j < i; ++j) mask |= 1 << (std::find(B.begin(), B.end(), b3[j]) - B.begin());
        return A[mask];
    };
    auto sigma = all_relations(sch);
    std::vector<TypeWord> words;
    for (int i = 1; i <= static_cast<int>(b3.size()); ++i) {
        TypeWord w;
        for (int j = 0; j < i; ++j) w.push_back(atomic_type(s1, {node_of(i), b3[j]}, sigma));
        words.push_back(std::move(w));
    }
    json wj = json::array();
    for (const auto& w : words) wj.push_back(word_json(w));
    res.details["words"] = wj;
    auto pair = higman_pair(words);
    if (!pair) {
        res.diagnostic = "no Higman pair among " + std::to_string(words.size()) + " words; try a larger n2";
        return res;
    }
    int k = pair->first, l = pair->second;
    auto emb = *embedding(words[k - 1], words[l - 1]);
    res.details["pair"] = {k, l};
    res.details["embedding"] = emb;

    auto build = [&](Element hub, const std::vector<int>& idx) {
        std::vector<Modification> seq = alpha;
        for (int j : idx) seq.push_back(edge(Modification::Kind::del, hub, b3[j]));
        seq.push_back(edge(Modification::Kind::ins, s, hub));
        return seq;
    };
    std::vector<int> first_k(static_cast<size_t>(k));
    std::iota(first_k.begin(), first_k.end(), 0);
    auto seq1 = build(node_of(k), first_k);
    auto seq2 = build(node_of(l), emb);
    res.details["beta1"] = seq_json(seq1);
    res.details["beta2"] = seq_json(seq2);
    pick_witness(res, p, oracle_st_reach, db, seq1, seq2);
    return res;
}

std::vector<Violation> diverse_saturation(const State& s, const DynamicProgram& p,
                                          const std::map<std::string, std::optional<int>>& depths,
                                          const std::string& u_symbol) {
    const Schema& sch = s.schema();
    std::vector<Element> u;
    for (const Tuple& t : s.tuples(sch.id(u_symbol))) u.push_back(t.at(0));
    std::vector<Violation> out;
    for (int id : p.aux_ids()) {
        const Symbol& sym = sch.at(id);
        if (sym.kind != SymbolKind::relation) continue;
        auto it = depths.find(sym.name);
        if (it == depths.end() || !it->second) continue;
        int k = *it->second;
        if (static_cast<int>(u.size()) < k + 1 || sym.arity > static_cast<int>(u.size())) continue;
        std::vector<size_t> idx(static_cast<size_t>(sym.arity), 0);
        Tuple tup(static_cast<size_t>(sym.arity));
        while (true) {
            for (int i = 0; i < sym.arity; ++i) tup[i] = u[idx[i]];
            std::set<Element> distinct(tup.begin(), tup.end());
            if (static_cast<int>(distinct.size()) == sym.arity && !s.holds(id, tup)) out.emplace_back(sym.name, tup);
            int i = sym.arity - 1;
            while (i >= 0 && ++idx[i] == u.size()) idx[i--] = 0;
            if (i < 0) break;
        }
    }
    return out;
}

AttackResult cq_adversary(const DynamicProgram& p, int bound) {
    if (!classify_program(p).conjunctive)
        throw Error(ErrorKind::precondition, "cq-adversary needs a conjunctive program");
    auto inputs = p.schema->ids(Role::input, SymbolKind::relation);
    if (inputs.size() != 1 || p.schema->at(inputs[0]).arity != 1)
        throw Error(ErrorKind::precondition, "cq-adversary needs a single unary input relation");
    std::string u = p.schema->at(inputs[0]).name;

    DynamicProgram q = eliminate_repeated_variables(p);
    auto depths = deletion_depth(q);
    int m = 0;
    for (int id : q.aux_ids())
        if (auto d = depths[q.schema->at(id).name]) m = std::max(m, *d);

    AttackResult res;
    res.details["max_deletion_depth"] = m;
    int consts = static_cast<int>(p.schema->ids_of_kind(SymbolKind::constant).size());
    State db = make_input_db(q, m + 1 + consts);
    auto elems = free_elements(db);
    elems.resize(std::min(elems.size(), static_cast<size_t>(m + 1)));
    res.details["U"] = elems;

    std::vector<Modification> seq;
    for (Element e : elems) seq.push_back(Modification{Modification::Kind::ins, u, {e}});
    auto trace = run(q, init_state(q, db), seq, true);
    auto found = [&](const std::vector<Modification>& s, size_t step, bool want, bool got) {
        Counterexample cx;
        cx.program = p.name;
        cx.initial_db = make_input_db(p, db.domain_size());
        cx.seq.assign(s.begin(), s.begin() + static_cast<long>(step));
        cx.step = step;
        cx.expected = want;
        cx.produced = got;
        validate(p, oracle_nonemptyset, cx);
        res.counterexample = std::move(cx);
        res.diagnostic = "query disagrees with non-emptiness at step " + std::to_string(step);
        return res;
    };
    for (size_t i = 0; i < trace.size(); ++i) {
        bool want = oracle_nonemptyset(trace[i]), got = query_value(q, trace[i]);
        if (want != got) return found(seq, i, want, got);
    }
    json sat = json::array();
    for (const auto& [name, tup] : diverse_saturation(trace.back(), q, depths, u))
        sat.push_back(name + "(" + [&] {
            std::string s;
            for (size_t i = 0; i < tup.size(); ++i) s += (i ? "," : "") + std::to_string(tup[i]);
            return s;
        }() + ")");
    res.details["unsaturated"] = sat;

    // Iterative deepening over honest deletion sequences, lexicographic per length.
    State filled = trace.back();
    int depth_limit = std::min(bound, static_cast<int>(elems.size()));
    for (int len = 1; len <= depth_limit; ++len) {
        std::vector<Modification> path;
        std::vector<bool> used(elems.size(), false);
        std::optional<AttackResult> hit;
        std::function<bool(const State&)> go = [&](const State& st) {
            if (static_cast<int>(path.size()) == len) {
                bool want = oracle_nonemptyset(st), got = query_value(q, st);
                if (want != got) {
                    std::vector<Modification> full = seq;
                    full.insert(full.end(), path.begin(), path.end());
                    hit = found(full, full.size(), want, got);
                    return true;
                }
                return false;
            }
            for (size_t i = 0; i < elems.size(); ++i) {
                if (used[i]) continue;
                used[i] = true;
                path.push_back(Modification{Modification::Kind::del, u, {elems[i]}});
                bool r = go(apply(q, st, path.back()));
                path.pop_back();
                used[i] = false;
                if (r) return true;
            }
            return false;
        };
        if (go(filled)) return *hit;
    }
    res.diagnostic = "no divergence within " + std::to_string(depth_limit) +
                     " deletions; a larger U (bigger max deletion depth) may be needed";
    return res;
}

std::vector<InitFuncHit> initfunc_hits(const DynamicProgram& p, const State& input, bool allow_arguments) {
    State st = init_state(p, input);
    auto free = free_elements(input);
    std::set<Element> swappable;
    std::vector<Element> pi(static_cast<size_t>(input.domain_size()));
    for (size_t i = 0; i < free.size(); ++i)
        for (size_t j = i + 1; j < free.size(); ++j) {
            std::iota(pi.begin(), pi.end(), 0);
            std::swap(pi[free[i]], pi[free[j]]);
            if (check_isomorphism(input, input, pi)) {
                swappable.insert(free[i]);
                swappable.insert(free[j]);
            }
        }
    std::vector<InitFuncHit> out;
    const Schema& sch = *p.schema;
    for (int f : sch.ids(Role::aux, SymbolKind::function)) {
        int ar = sch.at(f).arity;
        for (int c = 0; c < st.table_size(ar); ++c) {
            Element v = st.table(f)[c];
            if (!swappable.count(v)) continue;
            Tuple args = st.decode(c, ar);
            if (allow_arguments && std::find(args.begin(), args.end(), v) != args.end()) continue;
            out.push_back(InitFuncHit{sch.at(f).name, args, v});
        }
    }
    return out;
}

bool diverse_tuples_share_type(const State& s, const std::vector<Element>& elements, int arity,
                               const std::vector<int>& sigma) {
    if (arity > static_cast<int>(elements.size())) return true;
    std::optional<AtomicType> ref;
    std::vector<Element> pool = elements;
    std::sort(pool.begin(), pool.end());
    std::vector<bool> used(pool.size(), false);
    Tuple tup;
    std::function<bool()> go = [&]() {
        if (static_cast<int>(tup.size()) == arity) {
            AtomicType ty = atomic_type(s, tup, sigma);
            if (!ref) ref = ty;
            return *ref == ty;
        }
        for (size_t i = 0; i < pool.size(); ++i) {
            if (used[i]) continue;
            used[i] = true;
            tup.push_back(pool[i]);
            bool ok = go();
            tup.pop_back();
            used[i] = false;
            if (!ok) return false;
        }
        return true;
    };
    return go();
}

}  // namespace dynlab
