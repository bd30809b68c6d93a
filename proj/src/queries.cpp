#include "dynlab/queries.hpp"

#include <algorithm>
#include <deque>

namespace dynlab {

namespace {

int edge_rel(const State& g) {
    auto e = g.schema().find("E");
    if (!e || g.schema().at(*e).kind != SymbolKind::relation || g.schema().at(*e).arity != 2)
        throw Error(ErrorKind::schema, "graph query needs a binary relation E");
    return *e;
}

Element constant_of(const State& g, const char* name) {
    auto c = g.schema().find(name);
    if (!c || g.schema().at(*c).kind != SymbolKind::constant)
        throw Error(ErrorKind::precondition, std::string("graph query needs constant ") + name);
    return g.constant(*c);
}

bool edge(const State& g, int e, Element a, Element b) { return g.holds_code(e, a * g.domain_size() + b); }

bool adjacent(const State& g, int e, Element a, Element b) { return edge(g, e, a, b) || edge(g, e, b, a); }

int parse_k(const std::string& name, size_t prefix) {
    try {
        int k = std::stoi(name.substr(prefix));
        if (k >= 1) return k;
    } catch (const std::exception&) {
    }
    throw Error(ErrorKind::precondition, "bad oracle parameter in '" + name + "'");
}

std::vector<Element> plain_elements(const State& g) {
    std::vector<Element> cs = g.constant_values();
    std::vector<Element> out;
    for (int v = 0; v < g.domain_size(); ++v)
        if (std::find(cs.begin(), cs.end(), v) == cs.end()) out.push_back(v);
    return out;
}

// Layer index per element for k equal-ish layers of the non-constant elements.
bool layered_by_ids(const State& g, int k) {
    int e = edge_rel(g);
    Element s = constant_of(g, "s"), t = constant_of(g, "t");
    std::vector<Element> plain = plain_elements(g);
    std::vector<int> layer(static_cast<size_t>(g.domain_size()), -1);
    layer[s] = 0;
    layer[t] = k + 1;
    int per = k == 0 ? 0 : static_cast<int>((plain.size() + static_cast<size_t>(k) - 1) / static_cast<size_t>(k));
    for (size_t i = 0; i < plain.size(); ++i) layer[plain[i]] = 1 + static_cast<int>(i) / std::max(per, 1);
    int n = g.domain_size();
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            if (edge(g, e, a, b) && layer[b] != layer[a] + 1) return false;
    return true;
}

}  // namespace

SchemaPtr graph_schema(bool with_s, bool with_t) {
    auto s = std::make_shared<Schema>();
    s->add_relation("E", 2, Role::input);
    if (with_s) s->add_constant("s");
    if (with_t) s->add_constant("t");
    return s;
}

bool oracle_st_reach(const State& g) {
    int e = edge_rel(g);
    Element s = constant_of(g, "s"), t = constant_of(g, "t");
    int n = g.domain_size();
    std::vector<char> seen(static_cast<size_t>(n), 0);
    std::deque<Element> queue{s};
    seen[s] = 1;
    while (!queue.empty()) {
        Element v = queue.front();
        queue.pop_front();
        if (v == t) return true;
        for (Element w = 0; w < n; ++w)
            if (!seen[w] && edge(g, e, v, w)) {
                seen[w] = 1;
                queue.push_back(w);
            }
    }
    return false;
}

bool oracle_nonemptyset(const State& db) {
    auto u = db.schema().find("U");
    if (!u || db.schema().at(*u).arity != 1) throw Error(ErrorKind::schema, "non-emptiness needs a unary relation U");
    const auto& table = db.table(*u);
    return std::any_of(table.begin(), table.end(), [](int v) { return v != 0; });
}

bool oracle_st_twopath(const State& g) {
    int e = edge_rel(g);
    Element s = constant_of(g, "s"), t = constant_of(g, "t");
    for (Element x = 0; x < g.domain_size(); ++x)
        if (edge(g, e, s, x) && edge(g, e, x, t)) return true;
    return false;
}

bool oracle_s_twopath(const State& g) {
    int e = edge_rel(g);
    Element s = constant_of(g, "s");
    int n = g.domain_size();
    for (Element x = 0; x < n; ++x) {
        if (!edge(g, e, s, x)) continue;
        for (Element y = 0; y < n; ++y)
            if (edge(g, e, x, y)) return true;
    }
    return false;
}

bool oracle_k_clique(const State& g, int k) {
    if (k < 1) throw Error(ErrorKind::precondition, "clique size must be at least 1");
    int e = edge_rel(g);
    int n = g.domain_size();
    std::vector<Element> pick;
    std::function<bool(Element)> grow = [&](Element from) {
        if (static_cast<int>(pick.size()) == k) return true;
        for (Element v = from; v < n; ++v) {
            bool ok = std::all_of(pick.begin(), pick.end(), [&](Element u) { return adjacent(g, e, u, v); });
            if (!ok) continue;
            pick.push_back(v);
            if (grow(v + 1)) return true;
            pick.pop_back();
        }
        return false;
    };
    return grow(0);
}

bool oracle_k_colorability(const State& g, int k) {
    if (k < 1) throw Error(ErrorKind::precondition, "color count must be at least 1");
    int e = edge_rel(g);
    int n = g.domain_size();
    for (Element v = 0; v < n; ++v)
        if (edge(g, e, v, v)) return false;
    std::vector<int> color(static_cast<size_t>(n), -1);
    std::function<bool(Element)> assign = [&](Element v) {
        if (v == n) return true;
        for (int c = 0; c < k; ++c) {
            bool ok = true;
            for (Element u = 0; u < v && ok; ++u)
                if (color[u] == c && adjacent(g, e, u, v)) ok = false;
            if (!ok) continue;
            color[v] = c;
            if (assign(v + 1)) return true;
        }
        color[v] = -1;
        return false;
    };
    return assign(0);
}

Oracle find_oracle(const std::string& name) {
    if (name == "nonemptyset") return oracle_nonemptyset;
    if (name == "st-reach") return oracle_st_reach;
    if (name == "st-twopath") return oracle_st_twopath;
    if (name == "s-twopath") return oracle_s_twopath;
    if (name.rfind("clique:", 0) == 0) {
        int k = parse_k(name, 7);
        return [k](const State& g) { return oracle_k_clique(g, k); };
    }
    if (name.rfind("colorable:", 0) == 0) {
        int k = parse_k(name, 10);
        return [k](const State& g) { return oracle_k_colorability(g, k); };
    }
    throw Error(ErrorKind::precondition, "unknown oracle '" + name + "'");
}

std::vector<std::string> oracle_names() {
    return {"nonemptyset", "st-reach", "st-twopath", "s-twopath", "clique:K", "colorable:K"};
}

Guard find_guard(const std::string& name) {
    if (name.empty() || name == "none") return [](const State&) { return true; };
    if (name == "1-layered") return [](const State& g) { return layered_by_ids(g, 1); };
    if (name == "2-layered") return [](const State& g) { return layered_by_ids(g, 2); };
    if (name == "no-self-loops")
        return [](const State& g) {
            int e = edge_rel(g);
            for (Element v = 0; v < g.domain_size(); ++v)
                if (edge(g, e, v, v)) return false;
            return true;
        };
    throw Error(ErrorKind::precondition, "unknown guard '" + name + "'");
}

std::vector<std::string> guard_names() { return {"none", "1-layered", "2-layered", "no-self-loops"}; }

int LayeredSpec::node_count() const {
    int n = with_st ? 2 : 0;
    for (int x : sizes) n += x;
    return n;
}

Element LayeredSpec::node(int layer, int j) const {
    if (layer < 1 || layer > k || j < 0 || j >= sizes.at(static_cast<size_t>(layer - 1)))
        throw Error(ErrorKind::domain, "no such layer node");
    Element v = with_st ? 1 : 0;
    for (int i = 1; i < layer; ++i) v += sizes[static_cast<size_t>(i - 1)];
    return v + j;
}

int LayeredSpec::layer_of(Element v) const {
    if (with_st && v == 0) return 0;
    if (with_st && v == node_count() - 1) return k + 1;
    Element cur = with_st ? 1 : 0;
    for (int i = 1; i <= k; ++i) {
        if (v < cur + sizes[static_cast<size_t>(i - 1)]) return i;
        cur += sizes[static_cast<size_t>(i - 1)];
    }
    throw Error(ErrorKind::domain, "element outside the layered graph");
}

namespace {
void check_spec(const LayeredSpec& spec) {
    if (spec.k < 1 || static_cast<int>(spec.sizes.size()) != spec.k)
        throw Error(ErrorKind::precondition, "layer sizes must list k >= 1 layers");
    for (int x : spec.sizes)
        if (x < 1) throw Error(ErrorKind::precondition, "layer sizes must be positive");
}
}  // namespace

State gen_layered(const LayeredSpec& spec, const std::vector<Edge>& edges) {
    check_spec(spec);
    State g(graph_schema(spec.with_st, spec.with_st), spec.node_count());
    if (spec.with_st) {
        g.set_constant(g.schema().id("s"), 0);
        g.set_constant(g.schema().id("t"), spec.node_count() - 1);
    }
    int e = g.schema().id("E");
    for (const auto& [a, b] : edges) {
        if (a < 0 || b < 0 || a >= g.domain_size() || b >= g.domain_size())
            throw Error(ErrorKind::domain, "edge endpoint outside the graph");
        if (spec.layer_of(b) != spec.layer_of(a) + 1)
            throw Error(ErrorKind::precondition,
                        "edge (" + std::to_string(a) + "," + std::to_string(b) + ") crosses the layer discipline");
        g.set(e, {a, b}, true);
    }
    return g;
}

std::vector<Edge> layered_complete_edges(const LayeredSpec& spec) {
    check_spec(spec);
    std::vector<Edge> out;
    int n = spec.node_count();
    for (Element a = 0; a < n; ++a)
        for (Element b = 0; b < n; ++b)
            if (spec.layer_of(b) == spec.layer_of(a) + 1) out.emplace_back(a, b);
    return out;
}

bool respects_layers(const LayeredSpec& spec, const State& g) {
    int e = edge_rel(g);
    int n = g.domain_size();
    if (n != spec.node_count()) return false;
    for (Element a = 0; a < n; ++a)
        for (Element b = 0; b < n; ++b)
            if (edge(g, e, a, b) && spec.layer_of(b) != spec.layer_of(a) + 1) return false;
    return true;
}

State reduce_identify_st(const State& g, const LayeredSpec& spec) {
    if (spec.k != 2 || !spec.with_st || !respects_layers(spec, g))
        throw Error(ErrorKind::precondition, "identify-s-t needs a 2-layered s-t-graph");
    int e = edge_rel(g);
    Element s = constant_of(g, "s"), t = constant_of(g, "t");
    int n = g.domain_size();
    State out(graph_schema(true, false), n - 1);
    out.set_constant(out.schema().id("s"), s);
    int oe = out.schema().id("E");
    auto map = [&](Element v) { return v == t ? s : (v > t ? v - 1 : v); };
    for (Element a = 0; a < n; ++a)
        for (Element b = 0; b < n; ++b)
            if (edge(g, e, a, b)) out.set(oe, {map(a), map(b)}, true);
    return out;
}

State reduce_tensor_clique(const State& g, int m, int copies) {
    if (m < 0) throw Error(ErrorKind::precondition, "clique size must be non-negative");
    if (copies != 1 && copies != 2) throw Error(ErrorKind::precondition, "copies must be 1 or 2");
    if (m == 0) return g;
    int e = edge_rel(g);
    int n = g.domain_size();
    int total = n + copies * m;
    State out(g.schema_ptr(), total);
    for (int c : g.schema().ids_of_kind(SymbolKind::constant)) out.set_constant(c, g.constant(c));
    int oe = e;
    for (Element a = 0; a < n; ++a)
        for (Element b = 0; b < n; ++b)
            if (edge(g, e, a, b)) out.set(oe, {a, b}, true);
    for (int c = 0; c < copies; ++c) {
        Element base = n + c * m;
        for (Element u = base; u < base + m; ++u) {
            for (Element v = base; v < base + m; ++v)
                if (u != v) out.set(oe, {u, v}, true);
            for (Element v = 0; v < n; ++v) {
                out.set(oe, {u, v}, true);
                out.set(oe, {v, u}, true);
            }
        }
    }
    return out;
}

}  // namespace dynlab
