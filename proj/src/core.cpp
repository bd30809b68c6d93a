#include "dynlab/core.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>

namespace dynlab {

std::string to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::schema: return "schema";
        case ErrorKind::domain: return "domain";
        case ErrorKind::precondition: return "precondition";
        case ErrorKind::not_closed: return "not-closed";
        case ErrorKind::parse: return "parse";
        case ErrorKind::unsupported: return "unsupported";
        case ErrorKind::resource: return "resource";
        case ErrorKind::honesty: return "honesty";
        case ErrorKind::program: return "program";
    }
    return "unknown";
}

std::string to_string(SymbolKind k) {
    switch (k) {
        case SymbolKind::relation: return "relation";
        case SymbolKind::function: return "function";
        case SymbolKind::constant: return "constant";
    }
    return "unknown";
}

std::string to_string(Role r) {
    switch (r) {
        case Role::input: return "input";
        case Role::aux: return "aux";
        case Role::builtin: return "builtin";
    }
    return "unknown";
}

int Schema::add(Symbol sym) {
    if (sym.name.empty()) throw Error(ErrorKind::schema, "empty symbol name");
    if (index_.count(sym.name)) throw Error(ErrorKind::schema, "duplicate symbol '" + sym.name + "'");
    if (sym.arity < 0) throw Error(ErrorKind::schema, "negative arity for '" + sym.name + "'");
    if (sym.role == Role::input && sym.kind != SymbolKind::relation)
        throw Error(ErrorKind::schema, "input symbol '" + sym.name + "' must be a relation");
    if (sym.kind == SymbolKind::constant && sym.arity != 0)
        throw Error(ErrorKind::schema, "constant '" + sym.name + "' must have arity 0");
    int id = static_cast<int>(symbols_.size());
    index_.emplace(sym.name, id);
    symbols_.push_back(std::move(sym));
    return id;
}

int Schema::add_relation(const std::string& name, int arity, Role role) {
    return add(Symbol{name, SymbolKind::relation, role, arity});
}

int Schema::add_function(const std::string& name, int arity, Role role) {
    return add(Symbol{name, SymbolKind::function, role, arity});
}

int Schema::add_constant(const std::string& name) {
    return add(Symbol{name, SymbolKind::constant, Role::builtin, 0});
}

std::optional<int> Schema::find(std::string_view name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

int Schema::id(std::string_view name) const {
    auto f = find(name);
    if (!f) throw Error(ErrorKind::schema, "unknown symbol '" + std::string(name) + "'");
    return *f;
}

std::vector<int> Schema::ids(Role role, SymbolKind kind) const {
    std::vector<int> out;
    for (int i = 0; i < size(); ++i)
        if (symbols_[i].role == role && symbols_[i].kind == kind) out.push_back(i);
    return out;
}

std::vector<int> Schema::ids_of_kind(SymbolKind kind) const {
    std::vector<int> out;
    for (int i = 0; i < size(); ++i)
        if (symbols_[i].kind == kind) out.push_back(i);
    return out;
}

int Schema::max_relation_arity() const {
    int m = 0;
    for (const auto& s : symbols_)
        if (s.kind == SymbolKind::relation) m = std::max(m, s.arity);
    return m;
}

int Schema::max_arity(Role role) const {
    int m = 0;
    for (const auto& s : symbols_)
        if (s.role == role && s.kind != SymbolKind::constant) m = std::max(m, s.arity);
    return m;
}

std::string to_string(const Modification& m) {
    std::string out = (m.kind == Modification::Kind::ins ? "ins " : "del ") + m.relation + "(";
    for (size_t i = 0; i < m.tuple.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(m.tuple[i]);
    }
    return out + ")";
}

namespace {

int ipow(int base, int exp) {
    int r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

}  // namespace

State::State(SchemaPtr schema, int domain_size) : schema_(std::move(schema)), n_(domain_size) {
    if (!schema_) throw Error(ErrorKind::schema, "state without schema");
    if (n_ < 0) throw Error(ErrorKind::domain, "negative domain size");
    tables_.resize(static_cast<size_t>(schema_->size()));
    for (int id = 0; id < schema_->size(); ++id) {
        const Symbol& sym = schema_->at(id);
        switch (sym.kind) {
            case SymbolKind::relation:
                tables_[id].assign(static_cast<size_t>(table_size(sym.arity)), 0);
                break;
            case SymbolKind::function: {
                if (n_ == 0) throw Error(ErrorKind::domain, "function symbol over empty domain");
                int size = table_size(sym.arity);
                tables_[id].assign(static_cast<size_t>(size), 0);
                if (sym.arity > 0) {
                    int stride = table_size(sym.arity - 1);
                    for (int c = 0; c < size; ++c) tables_[id][c] = c / stride;
                }
                break;
            }
            case SymbolKind::constant:
                if (n_ == 0) throw Error(ErrorKind::domain, "constant over empty domain");
                tables_[id].assign(1, 0);
                break;
        }
    }
}

int State::table_size(int arity) const { return ipow(n_, arity); }

int State::code(const Tuple& tup) const {
    int c = 0;
    for (Element e : tup) {
        if (e < 0 || e >= n_)
            throw Error(ErrorKind::domain, "element " + std::to_string(e) + " outside domain of size " +
                                               std::to_string(n_));
        c = c * n_ + e;
    }
    return c;
}

Tuple State::decode(int code, int arity) const {
    Tuple t(static_cast<size_t>(arity));
    for (int i = arity - 1; i >= 0; --i) {
        t[i] = code % n_;
        code /= n_;
    }
    return t;
}

bool State::holds(int rel, const Tuple& tup) const {
    if (static_cast<int>(tup.size()) != schema_->at(rel).arity)
        throw Error(ErrorKind::schema, "arity mismatch for '" + schema_->at(rel).name + "'");
    return tables_[rel][code(tup)] != 0;
}

void State::set(int rel, const Tuple& tup, bool value) {
    if (static_cast<int>(tup.size()) != schema_->at(rel).arity)
        throw Error(ErrorKind::schema, "arity mismatch for '" + schema_->at(rel).name + "'");
    tables_[rel][code(tup)] = value ? 1 : 0;
}

void State::clear(int sym) { std::fill(tables_[sym].begin(), tables_[sym].end(), 0); }

Element State::fun(int f, const Tuple& args) const {
    if (static_cast<int>(args.size()) != schema_->at(f).arity)
        throw Error(ErrorKind::schema, "arity mismatch for '" + schema_->at(f).name + "'");
    return tables_[f][code(args)];
}

void State::set_fun(int f, const Tuple& args, Element value) {
    if (value < 0 || value >= n_) throw Error(ErrorKind::domain, "function value outside domain");
    if (static_cast<int>(args.size()) != schema_->at(f).arity)
        throw Error(ErrorKind::schema, "arity mismatch for '" + schema_->at(f).name + "'");
    tables_[f][code(args)] = value;
}

void State::set_constant(int c, Element value) {
    if (value < 0 || value >= n_) throw Error(ErrorKind::domain, "constant value outside domain");
    tables_[c][0] = value;
}

std::vector<Tuple> State::tuples(int rel) const {
    std::vector<Tuple> out;
    int arity = schema_->at(rel).arity;
    for (int c = 0; c < static_cast<int>(tables_[rel].size()); ++c)
        if (tables_[rel][c]) out.push_back(decode(c, arity));
    return out;
}

std::vector<Element> State::constant_values() const {
    std::vector<Element> out;
    for (int c : schema_->ids_of_kind(SymbolKind::constant)) out.push_back(constant(c));
    return out;
}

bool State::operator==(const State& other) const {
    if (n_ != other.n_) return false;
    if (schema_ != other.schema_ && !(*schema_ == *other.schema_)) return false;
    return tables_ == other.tables_;
}

std::string State::key() const {
    std::string k;
    for (const auto& t : tables_) {
        for (int v : t) k.push_back(static_cast<char>(v));
        k.push_back('\xff');
    }
    return k;
}

std::string State::key_of(Role role) const {
    std::string k;
    for (int id = 0; id < schema_->size(); ++id) {
        if (schema_->at(id).role != role) continue;
        for (int v : tables_[id]) k.push_back(static_cast<char>(v));
        k.push_back('\xff');
    }
    return k;
}

void check_modification(const State& db, const Modification& m) {
    auto id = db.schema().find(m.relation);
    if (!id) throw Error(ErrorKind::schema, "unknown relation '" + m.relation + "'");
    const Symbol& sym = db.schema().at(*id);
    if (sym.kind != SymbolKind::relation || sym.role != Role::input)
        throw Error(ErrorKind::schema, "'" + m.relation + "' is not an input relation");
    if (static_cast<int>(m.tuple.size()) != sym.arity)
        throw Error(ErrorKind::schema, "arity mismatch in " + to_string(m));
    for (Element e : m.tuple)
        if (e < 0 || e >= db.domain_size())
            throw Error(ErrorKind::domain, "element outside domain in " + to_string(m));
}

State apply_input_modification(const State& db, const Modification& m) {
    check_modification(db, m);
    State out = db;
    out.set(db.schema().id(m.relation), m.tuple, m.kind == Modification::Kind::ins);
    return out;
}

SubState restrict(const State& s, const std::vector<Element>& subset, bool relation_only) {
    std::vector<Element> elems = subset;
    std::sort(elems.begin(), elems.end());
    if (std::adjacent_find(elems.begin(), elems.end()) != elems.end())
        throw Error(ErrorKind::precondition, "restriction subset has duplicates");
    std::vector<int> pos(static_cast<size_t>(s.domain_size()), -1);
    for (size_t i = 0; i < elems.size(); ++i) {
        Element e = elems[i];
        if (e < 0 || e >= s.domain_size()) throw Error(ErrorKind::domain, "subset element outside domain");
        pos[e] = static_cast<int>(i);
    }
    const Schema& sch = s.schema();
    for (int c : sch.ids_of_kind(SymbolKind::constant))
        if (pos[s.constant(c)] < 0)
            throw Error(ErrorKind::precondition, "subset misses constant '" + sch.at(c).name + "'");

    SchemaPtr schema = s.schema_ptr();
    bool has_functions = !sch.ids_of_kind(SymbolKind::function).empty();
    if (relation_only && has_functions) {
        auto reduced = std::make_shared<Schema>();
        for (const Symbol& sym : sch.symbols())
            if (sym.kind != SymbolKind::function) reduced->add(sym);
        schema = reduced;
    }
    int m = static_cast<int>(elems.size());
    State out(schema, m);
    for (int id = 0; id < schema->size(); ++id) {
        const Symbol& sym = schema->at(id);
        int orig = sch.id(sym.name);
        int size = out.table_size(sym.arity);
        for (int c = 0; c < size; ++c) {
            Tuple local = out.decode(c, sym.arity);
            Tuple global(local.size());
            for (size_t i = 0; i < local.size(); ++i) global[i] = elems[local[i]];
            switch (sym.kind) {
                case SymbolKind::relation:
                    out.table(id)[c] = s.table(orig)[s.code(global)];
                    break;
                case SymbolKind::function: {
                    Element v = s.table(orig)[s.code(global)];
                    if (pos[v] < 0)
                        throw Error(ErrorKind::not_closed,
                                    "value of '" + sym.name + "' escapes the subset");
                    out.table(id)[c] = pos[v];
                    break;
                }
                case SymbolKind::constant:
                    out.table(id)[0] = pos[s.constant(orig)];
                    break;
            }
        }
    }
    return SubState{std::move(out), std::move(elems)};
}

State permute(const State& s, const std::vector<Element>& pi) {
    int n = s.domain_size();
    if (static_cast<int>(pi.size()) != n) throw Error(ErrorKind::precondition, "permutation size mismatch");
    const Schema& sch = s.schema();
    State out(s.schema_ptr(), n);
    for (int id = 0; id < sch.size(); ++id) {
        const Symbol& sym = sch.at(id);
        int size = s.table_size(sym.arity);
        if (sym.kind == SymbolKind::constant) {
            out.table(id)[0] = pi[s.constant(id)];
            continue;
        }
        for (int c = 0; c < size; ++c) {
            Tuple t = s.decode(c, sym.arity);
            for (auto& e : t) e = pi[e];
            int target = s.code(t);
            if (sym.kind == SymbolKind::relation)
                out.table(id)[target] = s.table(id)[c];
            else
                out.table(id)[target] = pi[s.table(id)[c]];
        }
    }
    return out;
}

bool check_isomorphism(const State& s, const State& t, const std::vector<Element>& pi) {
    if (!(s.schema() == t.schema())) throw Error(ErrorKind::schema, "isomorphism check across schemas");
    if (static_cast<int>(pi.size()) != s.domain_size() || s.domain_size() != t.domain_size())
        throw Error(ErrorKind::precondition, "map is not a bijection between the domains");
    std::vector<char> seen(static_cast<size_t>(t.domain_size()), 0);
    for (Element e : pi) {
        if (e < 0 || e >= t.domain_size() || seen[e])
            throw Error(ErrorKind::precondition, "map is not a bijection between the domains");
        seen[e] = 1;
    }
    return permute(s, pi) == t;
}

bool AtomicType::contains(const std::string& fact) const {
    return std::binary_search(facts.begin(), facts.end(), fact);
}

std::string AtomicType::to_string() const {
    std::string out = "{";
    for (size_t i = 0; i < facts.size(); ++i) {
        if (i) out += ", ";
        out += facts[i];
    }
    return out + "}";
}

std::vector<int> all_relations(const Schema& schema) { return schema.ids_of_kind(SymbolKind::relation); }

std::vector<int> relations_with_role(const Schema& schema, Role role) {
    return schema.ids(role, SymbolKind::relation);
}

AtomicType atomic_type(const State& s, const Tuple& tup, const std::vector<int>& sigma) {
    const Schema& sch = s.schema();
    std::vector<std::string> names;
    std::vector<Element> values;
    for (size_t i = 0; i < tup.size(); ++i) {
        if (tup[i] < 0 || tup[i] >= s.domain_size())
            throw Error(ErrorKind::domain, "type of tuple with element outside domain");
        names.push_back("x" + std::to_string(i + 1));
        values.push_back(tup[i]);
    }
    for (int c : sch.ids_of_kind(SymbolKind::constant)) {
        names.push_back(sch.at(c).name);
        values.push_back(s.constant(c));
    }
    int terms = static_cast<int>(names.size());
    AtomicType ty;
    ty.arity = static_cast<int>(tup.size());
    for (int rel : sigma) {
        const Symbol& sym = sch.at(rel);
        if (sym.kind != SymbolKind::relation) throw Error(ErrorKind::schema, "type over non-relation");
        int combos = ipow(terms, sym.arity);
        std::vector<int> idx(static_cast<size_t>(sym.arity));
        for (int c = 0; c < combos; ++c) {
            int rest = c;
            for (int i = sym.arity - 1; i >= 0; --i) {
                idx[i] = rest % terms;
                rest /= terms;
            }
            int code = 0;
            for (int i : idx) code = code * s.domain_size() + values[i];
            if (!s.holds_code(rel, code)) continue;
            std::string fact = sym.name + "(";
            for (int i = 0; i < sym.arity; ++i) {
                if (i) fact += ",";
                fact += names[idx[i]];
            }
            ty.facts.push_back(fact + ")");
        }
    }
    for (int i = 0; i < terms; ++i)
        for (int j = 0; j < terms; ++j)
            if (i != j && values[i] == values[j]) ty.facts.push_back(names[i] + "=" + names[j]);
    std::sort(ty.facts.begin(), ty.facts.end());
    ty.facts.erase(std::unique(ty.facts.begin(), ty.facts.end()), ty.facts.end());
    return ty;
}

namespace {

Tuple with_anchor(Tuple t, const Tuple& anchor) {
    t.insert(t.end(), anchor.begin(), anchor.end());
    return t;
}

}  // namespace

bool is_homogeneous(const State& s, const std::vector<Element>& order,
                    const std::vector<Element>& subset, int up_to_arity, const Tuple& anchor) {
    std::vector<Element> sorted;
    for (Element e : order)
        if (std::find(subset.begin(), subset.end(), e) != subset.end()) sorted.push_back(e);
    for (Element e : subset)
        if (std::find(order.begin(), order.end(), e) == order.end())
            throw Error(ErrorKind::precondition, "order does not cover the subset");
    std::vector<int> sigma = all_relations(s.schema());
    int m = static_cast<int>(sorted.size());
    for (int l = 1; l <= std::min(up_to_arity, m); ++l) {
        std::optional<AtomicType> ref;
        std::vector<int> idx(static_cast<size_t>(l));
        std::iota(idx.begin(), idx.end(), 0);
        while (true) {
            Tuple t;
            for (int i : idx) t.push_back(sorted[i]);
            AtomicType ty = atomic_type(s, with_anchor(t, anchor), sigma);
            if (!ref)
                ref = ty;
            else if (!(*ref == ty))
                return false;
            int i = l - 1;
            while (i >= 0 && idx[i] == m - l + i) --i;
            if (i < 0) break;
            ++idx[i];
            for (int j = i + 1; j < l; ++j) idx[j] = idx[j - 1] + 1;
        }
    }
    return true;
}

std::optional<std::vector<Element>> find_homogeneous_subset(const State& s,
                                                            const std::vector<Element>& order,
                                                            int n, const Tuple& anchor,
                                                            const std::vector<int>& sigma) {
    for (Element e : anchor)
        if (e < 0 || e >= s.domain_size()) throw Error(ErrorKind::domain, "anchor outside domain");
    std::vector<Element> cand;
    for (Element e : order)
        if (std::find(anchor.begin(), anchor.end(), e) == anchor.end()) cand.push_back(e);
    if (n < 0 || n > static_cast<int>(cand.size())) return std::nullopt;
    int m = 0;
    for (int r : sigma) m = std::max(m, s.schema().at(r).arity);

    std::vector<Element> chosen;
    std::vector<std::optional<AtomicType>> ref(static_cast<size_t>(m + 1));

    // Checks every l-tuple that ends in the freshly added last element.
    auto consistent = [&]() -> bool {
        int c = static_cast<int>(chosen.size());
        for (int l = 1; l <= std::min(m, c); ++l) {
            // choose l-1 earlier positions
            std::vector<int> idx(static_cast<size_t>(l - 1));
            std::iota(idx.begin(), idx.end(), 0);
            int pool = c - 1;
            while (true) {
                Tuple t;
                for (int i : idx) t.push_back(chosen[i]);
                t.push_back(chosen.back());
                AtomicType ty = atomic_type(s, with_anchor(t, anchor), sigma);
                if (!ref[l]) {
                    ref[l] = ty;
                } else if (!(*ref[l] == ty)) {
                    return false;
                }
                int i = l - 2;
                while (i >= 0 && idx[i] == pool - (l - 1) + i) --i;
                if (i < 0) break;
                ++idx[i];
                for (int j = i + 1; j < l - 1; ++j) idx[j] = idx[j - 1] + 1;
            }
        }
        return true;
    };

    std::function<bool(size_t)> dfs = [&](size_t from) -> bool {
        if (static_cast<int>(chosen.size()) == n) return true;
        size_t need = static_cast<size_t>(n) - chosen.size();
        for (size_t i = from; i + need <= cand.size(); ++i) {
            chosen.push_back(cand[i]);
            int c = static_cast<int>(chosen.size());
            if (consistent() && dfs(i + 1)) return true;
            if (c <= m) ref[c].reset();
            chosen.pop_back();
        }
        return false;
    };
    if (dfs(0)) return chosen;
    return std::nullopt;
}

std::optional<std::vector<Element>> find_homogeneous_subset(const State& s,
                                                            const std::vector<Element>& order,
                                                            int n, const Tuple& anchor) {
    return find_homogeneous_subset(s, order, n, anchor, all_relations(s.schema()));
}

nlohmann::json to_json(const State& s) {
    nlohmann::json j;
    j["domain"] = s.domain_size();
    nlohmann::json rels = nlohmann::json::object();
    nlohmann::json funs = nlohmann::json::object();
    nlohmann::json consts = nlohmann::json::object();
    const Schema& sch = s.schema();
    for (int id = 0; id < sch.size(); ++id) {
        const Symbol& sym = sch.at(id);
        switch (sym.kind) {
            case SymbolKind::relation: {
                nlohmann::json list = nlohmann::json::array();
                for (const Tuple& t : s.tuples(id)) list.push_back(t);
                rels[sym.name] = list;
                break;
            }
            case SymbolKind::function: {
                nlohmann::json list = nlohmann::json::array();
                for (int c = 0; c < s.table_size(sym.arity); ++c) {
                    Tuple row = s.decode(c, sym.arity);
                    row.push_back(s.table(id)[c]);
                    list.push_back(row);
                }
                funs[sym.name] = list;
                break;
            }
            case SymbolKind::constant:
                consts[sym.name] = s.constant(id);
                break;
        }
    }
    j["relations"] = rels;
    j["functions"] = funs;
    j["constants"] = consts;
    return j;
}

nlohmann::json to_json(const Modification& m) {
    return nlohmann::json{{"kind", m.kind == Modification::Kind::ins ? "ins" : "del"},
                          {"relation", m.relation},
                          {"tuple", m.tuple}};
}

Modification modification_from_json(const nlohmann::json& j) {
    Modification m;
    std::string kind = j.at("kind").get<std::string>();
    if (kind != "ins" && kind != "del") throw Error(ErrorKind::parse, "bad modification kind '" + kind + "'");
    m.kind = kind == "ins" ? Modification::Kind::ins : Modification::Kind::del;
    m.relation = j.at("relation").get<std::string>();
    m.tuple = j.at("tuple").get<Tuple>();
    return m;
}

State state_from_json(const nlohmann::json& j, SchemaPtr schema) {
    State s(schema, j.at("domain").get<int>());
    const Schema& sch = *schema;
    for (int id = 0; id < sch.size(); ++id) {
        const Symbol& sym = sch.at(id);
        switch (sym.kind) {
            case SymbolKind::relation:
                if (j.contains("relations") && j["relations"].contains(sym.name))
                    for (const auto& t : j["relations"][sym.name]) s.set(id, t.get<Tuple>(), true);
                break;
            case SymbolKind::function:
                if (j.contains("functions") && j["functions"].contains(sym.name))
                    for (const auto& row : j["functions"][sym.name]) {
                        Tuple r = row.get<Tuple>();
                        Element v = r.back();
                        r.pop_back();
                        s.set_fun(id, r, v);
                    }
                break;
            case SymbolKind::constant:
                if (j.contains("constants") && j["constants"].contains(sym.name))
                    s.set_constant(id, j["constants"][sym.name].get<int>());
                break;
        }
    }
    return s;
}

}  // namespace dynlab
