#include "dynlab/program.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <numeric>
#include <random>

namespace dynlab {

std::string to_string(const Trigger& t) {
    return std::string(t.kind == Modification::Kind::ins ? "insert " : "delete ") + t.relation;
}

bool equal(const UpdateRule& a, const UpdateRule& b) {
    if (a.target != b.target || !(a.trigger == b.trigger) || a.params != b.params || a.vars != b.vars ||
        a.is_frame != b.is_frame)
        return false;
    if (static_cast<bool>(a.formula) != static_cast<bool>(b.formula)) return false;
    if (static_cast<bool>(a.term) != static_cast<bool>(b.term)) return false;
    if (a.formula && !equal(a.formula, b.formula)) return false;
    if (a.term && !equal(a.term, b.term)) return false;
    return true;
}

namespace {

bool equal_terms(const std::vector<TermPtr>& a, const std::vector<TermPtr>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (!equal(a[i], b[i])) return false;
    return true;
}

bool equal_init(const InitSpec& a, const InitSpec& b) {
    if (a.kind != b.kind || a.builtin_name != b.builtin_name) return false;
    if (a.facts.size() != b.facts.size() || a.derive.size() != b.derive.size()) return false;
    for (size_t i = 0; i < a.facts.size(); ++i) {
        const auto& x = a.facts[i];
        const auto& y = b.facts[i];
        if (x.symbol != y.symbol || !equal_terms(x.args, y.args)) return false;
        if (static_cast<bool>(x.value) != static_cast<bool>(y.value)) return false;
        if (x.value && !equal(x.value, y.value)) return false;
    }
    for (size_t i = 0; i < a.derive.size(); ++i) {
        const auto& x = a.derive[i];
        const auto& y = b.derive[i];
        if (x.target != y.target || x.vars != y.vars) return false;
        if (static_cast<bool>(x.formula) != static_cast<bool>(y.formula)) return false;
        if (x.formula && !equal(x.formula, y.formula)) return false;
        if (static_cast<bool>(x.term) != static_cast<bool>(y.term)) return false;
        if (x.term && !equal(x.term, y.term)) return false;
    }
    return true;
}

}  // namespace

bool equal(const DynamicProgram& a, const DynamicProgram& b) {
    if (a.name != b.name || !(*a.schema == *b.schema) || a.query != b.query || a.default_frame != b.default_frame ||
        a.constants != b.constants || a.builtin_interp != b.builtin_interp)
        return false;
    if (!equal_init(a.init, b.init)) return false;
    if (a.rules.size() != b.rules.size()) return false;
    for (const auto& [key, rule] : a.rules) {
        auto it = b.rules.find(key);
        if (it == b.rules.end() || !equal(rule, it->second)) return false;
    }
    return true;
}

class CompiledProgram {
public:
    struct Rule {
        int target = -1;
        int arity = 0;
        bool function = false;
        int nparams = 0;
        std::shared_ptr<const CompiledFormula> formula;
        std::shared_ptr<const CompiledTerm> term;
    };
    std::vector<std::vector<Rule>> by_trigger;  // index: relation id * 2 + kind
    int query = -1;
};

namespace {

int trigger_index(const Schema& sch, const Trigger& t) {
    return sch.id(t.relation) * 2 + (t.kind == Modification::Kind::ins ? 0 : 1);
}

bool has_element_literal(const TermPtr& t);
bool has_element_literal(const FormulaPtr& f) {
    for (const auto& t : f->terms)
        if (has_element_literal(t)) return true;
    for (const auto& k : f->kids)
        if (has_element_literal(k)) return true;
    return false;
}
bool has_element_literal(const TermPtr& t) {
    if (t->kind == Term::Kind::element) return true;
    if (t->cond && has_element_literal(t->cond)) return true;
    for (const auto& a : t->args)
        if (has_element_literal(a)) return true;
    return false;
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

const std::set<std::string>& known_interpretations() {
    static const std::set<std::string> k = {"succ", "pred", "lt", "le", "min", "max"};
    return k;
}

std::vector<std::string> fresh_vars(int n, const std::vector<std::string>& avoid, const Schema& sch) {
    std::vector<std::string> out;
    for (const char* prefix : {"y", "z", "w"}) {
        out.clear();
        bool ok = true;
        for (int i = 1; i <= n; ++i) {
            std::string v = prefix + std::to_string(i);
            if (std::find(avoid.begin(), avoid.end(), v) != avoid.end() || sch.has(v)) {
                ok = false;
                break;
            }
            out.push_back(v);
        }
        if (ok) return out;
    }
    throw Error(ErrorKind::program, "cannot pick fresh variable names");
}

UpdateRule frame_rule(const Symbol& target, const Trigger& trig, const std::vector<std::string>& params,
                      const Schema& sch) {
    UpdateRule r;
    r.target = target.name;
    r.trigger = trig;
    r.params = params;
    r.vars = fresh_vars(target.arity, params, sch);
    std::vector<TermPtr> args;
    for (const auto& v : r.vars) args.push_back(ast::var(v));
    if (target.kind == SymbolKind::relation)
        r.formula = ast::rel(target.name, args);
    else
        r.term = ast::app(target.name, args);
    r.is_frame = true;
    return r;
}

std::vector<std::string> default_params(const Trigger& t, const Schema& sch) {
    int arity = sch.at(t.relation).arity;
    std::vector<std::string> out;
    for (int i = 1; i <= arity; ++i) {
        std::string v = "u" + std::to_string(i);
        if (sch.has(v)) v = "p" + std::to_string(i);
        out.push_back(v);
    }
    return out;
}

}  // namespace

std::vector<Trigger> DynamicProgram::triggers() const {
    std::vector<Trigger> out;
    for (int id : schema->ids(Role::input, SymbolKind::relation)) {
        out.push_back(Trigger{Modification::Kind::ins, schema->at(id).name});
        out.push_back(Trigger{Modification::Kind::del, schema->at(id).name});
    }
    return out;
}

std::vector<int> DynamicProgram::aux_ids() const {
    std::vector<int> out;
    for (int i = 0; i < schema->size(); ++i)
        if (schema->at(i).role == Role::aux) out.push_back(i);
    return out;
}

const UpdateRule& DynamicProgram::rule(const std::string& target, const Trigger& t) const {
    auto it = rules.find({target, t});
    if (it == rules.end())
        throw Error(ErrorKind::program, "no rule for " + target + " on " + to_string(t));
    return it->second;
}

const CompiledProgram& DynamicProgram::compiled() const {
    if (!compiled_) throw Error(ErrorKind::program, "program '" + name + "' used before finalize()");
    return *compiled_;
}

void DynamicProgram::finalize() {
    if (!schema) throw Error(ErrorKind::program, "program without schema");
    const Schema& sch = *schema;
    auto qid = sch.find(query);
    if (!qid) throw Error(ErrorKind::program, "query symbol '" + query + "' is not declared");
    if (sch.at(*qid).role != Role::aux || sch.at(*qid).kind != SymbolKind::relation)
        throw Error(ErrorKind::program, "query symbol '" + query + "' must be an aux relation");

    for (const auto& [key, rule] : rules) {
        auto tid = sch.find(rule.target);
        if (!tid || sch.at(*tid).role != Role::aux)
            throw Error(ErrorKind::program, "rule target '" + rule.target + "' is not an aux symbol");
        auto rid = sch.find(rule.trigger.relation);
        if (!rid || sch.at(*rid).role != Role::input)
            throw Error(ErrorKind::program, "trigger relation '" + rule.trigger.relation + "' is not an input relation");
    }

    for (auto& [key, rule] : rules) {
        std::vector<TermPtr> own;
        for (const auto& v : rule.vars) own.push_back(ast::var(v));
        rule.is_frame = rule.formula ? equal(rule.formula, ast::rel(rule.target, own))
                                     : rule.term && equal(rule.term, ast::app(rule.target, own));
    }

    // Fill coverage.
    for (const Trigger& trig : triggers()) {
        std::vector<std::string> params;
        for (const auto& [key, rule] : rules)
            if (rule.trigger == trig) {
                params = rule.params;
                break;
            }
        if (params.empty()) params = default_params(trig, sch);
        for (int id : aux_ids()) {
            const Symbol& sym = sch.at(id);
            if (rules.count({sym.name, trig})) continue;
            if (!default_frame)
                throw Error(ErrorKind::program, "missing rule for " + sym.name + " on " + to_string(trig) +
                                                    " (declare `default frame` to keep old values)");
            rules.emplace(std::make_pair(sym.name, trig), frame_rule(sym, trig, params, sch));
        }
    }

    // Placements and builtins.
    for (int c : sch.ids_of_kind(SymbolKind::constant)) {
        bool placed = std::any_of(constants.begin(), constants.end(),
                                  [&](const ConstPlacement& cp) { return cp.name == sch.at(c).name; });
        if (!placed) constants.push_back(ConstPlacement{sch.at(c).name, static_cast<int>(constants.size())});
    }
    for (int id = 0; id < sch.size(); ++id) {
        const Symbol& sym = sch.at(id);
        if (sym.role != Role::builtin || sym.kind == SymbolKind::constant) continue;
        auto it = builtin_interp.find(sym.name);
        std::string interp = it != builtin_interp.end() ? it->second : lower(sym.name);
        if (!known_interpretations().count(interp))
            throw Error(ErrorKind::program, "no interpretation for builtin '" + sym.name + "'");
    }
    if (init.kind == InitSpec::Kind::builtin && !has_initializer(init.builtin_name))
        throw Error(ErrorKind::program, "unknown builtin initializer '" + init.builtin_name + "'");

    auto cp = std::make_shared<CompiledProgram>();
    cp->query = *qid;
    cp->by_trigger.resize(static_cast<size_t>(sch.size()) * 2);
    for (const Trigger& trig : triggers()) {
        auto& slot = cp->by_trigger[trigger_index(sch, trig)];
        for (int id : aux_ids()) {
            const Symbol& sym = sch.at(id);
            const UpdateRule& r = rules.at({sym.name, trig});
            int trig_arity = sch.at(trig.relation).arity;
            if (static_cast<int>(r.params.size()) != trig_arity)
                throw Error(ErrorKind::program, "rule " + sym.name + " on " + to_string(trig) +
                                                    ": parameter count differs from the arity of " + trig.relation);
            if (static_cast<int>(r.vars.size()) != sym.arity)
                throw Error(ErrorKind::program, "rule " + sym.name + " on " + to_string(trig) +
                                                    ": variable count differs from the arity of " + sym.name);
            std::vector<std::string> all = r.params;
            all.insert(all.end(), r.vars.begin(), r.vars.end());
            std::set<std::string> uniq(all.begin(), all.end());
            if (uniq.size() != all.size())
                throw Error(ErrorKind::program, "rule " + sym.name + " on " + to_string(trig) + ": repeated variable name");
            for (const auto& v : all)
                if (sch.has(v))
                    throw Error(ErrorKind::program, "variable '" + v + "' clashes with a schema symbol");
            CompileScope scope{&sch, all};
            CompiledProgram::Rule cr;
            cr.target = id;
            cr.arity = sym.arity;
            cr.nparams = trig_arity;
            if (sym.kind == SymbolKind::relation) {
                if (!r.formula || r.term)
                    throw Error(ErrorKind::program, "relation " + sym.name + " needs a formula rule");
                if (has_element_literal(r.formula))
                    throw Error(ErrorKind::program, "element literals are not allowed in update rules");
                cr.formula = Evaluator::compile(r.formula, scope);
            } else {
                if (!r.term || r.formula)
                    throw Error(ErrorKind::program, "function " + sym.name + " needs a term rule (:=)");
                if (has_element_literal(r.term))
                    throw Error(ErrorKind::program, "element literals are not allowed in update rules");
                cr.function = true;
                cr.term = Evaluator::compile(r.term, scope);
            }
            slot.push_back(std::move(cr));
        }
    }
    compiled_ = cp;
}

State make_input_db(const DynamicProgram& p, int n) {
    State s(p.schema, n);
    const Schema& sch = *p.schema;
    for (const auto& cp : p.constants) {
        int idx = cp.index < 0 ? n - 1 : cp.index;
        if (idx < 0 || idx >= n)
            throw Error(ErrorKind::domain, "constant '" + cp.name + "' does not fit a domain of size " + std::to_string(n));
        s.set_constant(sch.id(cp.name), idx);
    }
    for (int id = 0; id < sch.size(); ++id) {
        const Symbol& sym = sch.at(id);
        if (sym.role != Role::builtin || sym.kind == SymbolKind::constant) continue;
        auto it = p.builtin_interp.find(sym.name);
        interpret_builtin(it != p.builtin_interp.end() ? it->second : lower(sym.name), id, s);
    }
    return s;
}

bool is_honest(const State& s, const Modification& m) {
    bool present = s.holds(s.schema().id(m.relation), m.tuple);
    return m.kind == Modification::Kind::ins ? !present : present;
}

State apply(const DynamicProgram& p, const State& s, const Modification& m) {
    const CompiledProgram& cp = p.compiled();
    check_modification(s, m);
    const Schema& sch = s.schema();
    State out = s;
    out.set(sch.id(m.relation), m.tuple, m.kind == Modification::Kind::ins);
    const auto& rules = cp.by_trigger[trigger_index(sch, Trigger{m.kind, m.relation})];
    int n = s.domain_size();
    std::vector<Element> slots(m.tuple.begin(), m.tuple.end());
    for (const auto& r : rules) {
        slots.resize(static_cast<size_t>(r.nparams + r.arity));
        std::fill(slots.begin() + r.nparams, slots.end(), 0);
        auto& table = out.table(r.target);
        int size = static_cast<int>(table.size());
        for (int c = 0; c < size; ++c) {
            if (r.function)
                table[c] = Evaluator::eval(*r.term, s, slots.data());
            else
                table[c] = Evaluator::eval(*r.formula, s, slots.data()) ? 1 : 0;
            for (int i = r.nparams + r.arity - 1; i >= r.nparams; --i) {
                if (++slots[i] < n) break;
                slots[i] = 0;
            }
        }
    }
    return out;
}

bool query_value(const DynamicProgram& p, const State& s) {
    int q = p.compiled().query;
    if (s.schema().at(q).arity != 0)
        throw Error(ErrorKind::program, "query symbol '" + p.query + "' is not 0-ary");
    return s.table(q)[0] != 0;
}

std::vector<State> run(const DynamicProgram& p, const State& s0, const std::vector<Modification>& seq,
                       bool honest_only) {
    std::vector<State> trace{s0};
    for (size_t i = 0; i < seq.size(); ++i) {
        const State& cur = trace.back();
        check_modification(cur, seq[i]);
        if (honest_only && !is_honest(cur, seq[i]))
            throw Error(ErrorKind::honesty, "step " + std::to_string(i + 1) + ": dishonest " + to_string(seq[i]));
        trace.push_back(apply(p, cur, seq[i]));
    }
    return trace;
}

namespace {

std::map<std::string, BuiltinInitializer>& initializer_registry() {
    static std::map<std::string, BuiltinInitializer> reg = [] {
        std::map<std::string, BuiltinInitializer> r;
        r["copy-input"] = [](const DynamicProgram& p, State& s) {
            const Schema& sch = *p.schema;
            for (int in : sch.ids(Role::input, SymbolKind::relation)) {
                auto target = sch.find("Copy_" + sch.at(in).name);
                if (!target || sch.at(*target).role != Role::aux ||
                    sch.at(*target).kind != SymbolKind::relation || sch.at(*target).arity != sch.at(in).arity)
                    continue;
                s.table(*target) = s.table(in);
            }
        };
        r["mark-first"] = [](const DynamicProgram& p, State& s) {
            for (int id : p.schema->ids(Role::aux, SymbolKind::relation))
                if (p.schema->at(id).arity == 1) s.set(id, {0}, true);
        };
        r["constant-pointers"] = [](const DynamicProgram& p, State& s) {
            auto consts = p.schema->ids_of_kind(SymbolKind::constant);
            if (consts.empty()) throw Error(ErrorKind::program, "constant-pointers needs a constant symbol");
            Element v = s.constant(consts.front());
            for (int id : p.schema->ids(Role::aux, SymbolKind::function))
                std::fill(s.table(id).begin(), s.table(id).end(), v);
        };
        return r;
    }();
    return reg;
}

Element eval_closed(const TermPtr& t, const State& s) {
    CompileScope scope{&s.schema(), {}};
    auto c = Evaluator::compile(t, scope);
    return Evaluator::eval(*c, s, nullptr);
}

void run_derive(const InitDerive& d, State& st) {
    const Schema& sch = st.schema();
    int id = sch.id(d.target);
    const Symbol& sym = sch.at(id);
    if (static_cast<int>(d.vars.size()) != sym.arity)
        throw Error(ErrorKind::program, "derive entry for '" + d.target + "' has wrong arity");
    CompileScope scope{&sch, d.vars};
    State snapshot = st;
    int n = st.domain_size();
    std::vector<Element> slots(d.vars.size(), 0);
    int size = st.table_size(sym.arity);
    if (sym.kind == SymbolKind::relation) {
        if (!d.formula) throw Error(ErrorKind::program, "derive entry for relation '" + d.target + "' needs a formula");
        auto f = Evaluator::compile(d.formula, scope);
        for (int c = 0; c < size; ++c) {
            Tuple t = st.decode(c, sym.arity);
            std::copy(t.begin(), t.end(), slots.begin());
            st.table(id)[c] = Evaluator::eval(*f, snapshot, slots.data()) ? 1 : 0;
        }
    } else if (sym.kind == SymbolKind::function) {
        if (!d.term) throw Error(ErrorKind::program, "derive entry for function '" + d.target + "' needs a term");
        auto t = Evaluator::compile(d.term, scope);
        for (int c = 0; c < size; ++c) {
            Tuple tu = st.decode(c, sym.arity);
            std::copy(tu.begin(), tu.end(), slots.begin());
            Element v = Evaluator::eval(*t, snapshot, slots.data());
            if (v < 0 || v >= n) throw Error(ErrorKind::domain, "derived value outside domain");
            st.table(id)[c] = v;
        }
    } else {
        throw Error(ErrorKind::program, "cannot derive constant '" + d.target + "'");
    }
}

}  // namespace

void register_initializer(const std::string& name, BuiltinInitializer fn) {
    initializer_registry()[name] = std::move(fn);
}

bool has_initializer(const std::string& name) { return initializer_registry().count(name) > 0; }

void interpret_builtin(const std::string& interp, int sym, State& s) {
    const Symbol& S = s.schema().at(sym);
    int n = s.domain_size();
    auto need = [&](SymbolKind k, int arity) {
        if (S.kind != k || S.arity != arity)
            throw Error(ErrorKind::program, "interpretation '" + interp + "' does not fit '" + S.name + "'");
    };
    if (interp == "succ" || interp == "pred") {
        need(SymbolKind::function, 1);
        for (int i = 0; i < n; ++i)
            s.table(sym)[i] = interp == "succ" ? std::min(i + 1, n - 1) : std::max(i - 1, 0);
    } else if (interp == "lt" || interp == "le") {
        need(SymbolKind::relation, 2);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) s.table(sym)[i * n + j] = interp == "lt" ? (i < j) : (i <= j);
    } else if (interp == "min" || interp == "max") {
        need(SymbolKind::function, 0);
        s.table(sym)[0] = interp == "min" ? 0 : n - 1;
    } else {
        throw Error(ErrorKind::program, "unknown builtin interpretation '" + interp + "'");
    }
}

State init_state(const DynamicProgram& p, const State& input) {
    const Schema& sch = *p.schema;
    if (!(input.schema() == sch)) throw Error(ErrorKind::schema, "input database has a different schema");
    int n = input.domain_size();
    State st = make_input_db(p, n);
    for (int c : sch.ids_of_kind(SymbolKind::constant)) st.set_constant(c, input.constant(c));
    bool oracle = p.init.kind == InitSpec::Kind::oracle;
    if (!oracle)
        for (int id : sch.ids(Role::input, SymbolKind::relation)) st.table(id) = input.table(id);
    if (p.init.kind == InitSpec::Kind::builtin) {
        auto it = initializer_registry().find(p.init.builtin_name);
        if (it == initializer_registry().end())
            throw Error(ErrorKind::program, "unknown builtin initializer '" + p.init.builtin_name + "'");
        it->second(p, st);
    }
    for (const InitFact& f : p.init.facts) {
        int id = sch.id(f.symbol);
        Tuple args;
        for (const auto& a : f.args) args.push_back(eval_closed(a, st));
        if (sch.at(id).kind == SymbolKind::relation)
            st.set(id, args, true);
        else if (sch.at(id).kind == SymbolKind::function)
            st.set_fun(id, args, eval_closed(f.value, st));
        else
            throw Error(ErrorKind::program, "init fact for constant '" + f.symbol + "'");
    }
    for (const InitDerive& d : p.init.derive) run_derive(d, st);
    if (oracle) {
        for (int id : sch.ids(Role::input, SymbolKind::relation)) {
            const auto& table = input.table(id);
            for (int c = 0; c < static_cast<int>(table.size()); ++c)
                if (table[c])
                    st = apply(p, st, Modification{Modification::Kind::ins, sch.at(id).name,
                                                   input.decode(c, sch.at(id).arity)});
        }
    }
    return st;
}

InvarianceResult is_invariant_init(const DynamicProgram& p, const State& input, int exhaustive_cap,
                                   size_t samples, uint64_t seed) {
    InvarianceResult res;
    int n = input.domain_size();
    State base = init_state(p, input);
    std::vector<Element> pi(static_cast<size_t>(n));
    std::iota(pi.begin(), pi.end(), 0);
    auto test = [&](const std::vector<Element>& perm) {
        ++res.permutations_checked;
        State lhs = permute(base, perm);
        State rhs = init_state(p, permute(input, perm));
        if (!(lhs == rhs)) {
            res.invariant = false;
            res.witness = perm;
            return false;
        }
        return true;
    };
    if (n <= exhaustive_cap) {
        do {
            if (!test(pi)) return res;
        } while (std::next_permutation(pi.begin(), pi.end()));
    } else {
        std::mt19937_64 rng(seed);
        for (size_t i = 0; i < samples; ++i) {
            std::shuffle(pi.begin(), pi.end(), rng);
            if (!test(pi)) return res;
        }
    }
    return res;
}

bool DepGraph::has_edge(const std::string& a, const std::string& b) const {
    auto ia = std::find(nodes.begin(), nodes.end(), a);
    auto ib = std::find(nodes.begin(), nodes.end(), b);
    if (ia == nodes.end() || ib == nodes.end()) return false;
    return edges.count({static_cast<int>(ia - nodes.begin()), static_cast<int>(ib - nodes.begin())}) > 0;
}

std::string DepGraph::to_dot(const std::string& graph_name) const {
    std::string out = "digraph \"" + graph_name + "\" {\n";
    for (const auto& n : nodes) out += "  \"" + n + "\";\n";
    for (const auto& [a, b] : edges) out += "  \"" + nodes[a] + "\" -> \"" + nodes[b] + "\";\n";
    return out + "}\n";
}

DepGraph dependency_graph(const DynamicProgram& p, bool deletions_only) {
    DepGraph g;
    const Schema& sch = *p.schema;
    std::map<std::string, int> index;
    for (int id : p.aux_ids()) {
        index[sch.at(id).name] = static_cast<int>(g.nodes.size());
        g.nodes.push_back(sch.at(id).name);
    }
    for (const auto& [key, rule] : p.rules) {
        if (deletions_only && rule.trigger.kind != Modification::Kind::del) continue;
        auto from = index.find(rule.target);
        if (from == index.end()) continue;
        std::vector<std::string> syms;
        if (rule.formula) collect_symbols(rule.formula, syms);
        if (rule.term) collect_symbols(rule.term, syms);
        for (const auto& s : syms) {
            auto to = index.find(s);
            if (to != index.end()) g.edges.insert({from->second, to->second});
        }
    }
    return g;
}

std::map<std::string, std::optional<int>> deletion_depth(const DynamicProgram& p) {
    DepGraph g = dependency_graph(p, true);
    std::map<std::string, std::optional<int>> out;
    for (const auto& n : g.nodes) out[n] = std::nullopt;
    auto q = std::find(g.nodes.begin(), g.nodes.end(), p.query);
    if (q == g.nodes.end()) return out;
    std::vector<int> dist(g.nodes.size(), -1);
    std::deque<int> queue{static_cast<int>(q - g.nodes.begin())};
    dist[queue.front()] = 0;
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        for (const auto& [a, b] : g.edges)
            if (a == v && dist[b] < 0) {
                dist[b] = dist[v] + 1;
                queue.push_back(b);
            }
    }
    for (size_t i = 0; i < g.nodes.size(); ++i)
        if (dist[i] >= 0) out[g.nodes[i]] = dist[i];
    return out;
}

ProgramClass classify_program(const DynamicProgram& p) {
    ProgramClass c;
    const Schema& sch = *p.schema;
    for (int id = 0; id < sch.size(); ++id) {
        const Symbol& sym = sch.at(id);
        if (sym.kind == SymbolKind::function) c.has_functions = true;
        if (sym.role == Role::aux) {
            c.max_aux_arity = std::max(c.max_aux_arity, sym.arity);
            if (sym.kind == SymbolKind::function) c.has_aux_functions = true;
        }
        if (sym.role == Role::builtin && sym.kind == SymbolKind::function)
            c.max_builtin_function_arity = std::max(c.max_builtin_function_arity, sym.arity);
    }
    for (const auto& [key, rule] : p.rules) {
        SyntaxFlags f = rule.formula ? classify_syntax(rule.formula) : classify_syntax(rule.term);
        c.negation_free = c.negation_free && f.negation_free;
        c.conjunctive = c.conjunctive && f.conjunctive;
        c.repeated_vars = c.repeated_vars || f.repeated_vars_in_atom;
        c.nesting_depth = std::max(c.nesting_depth, rule.formula ? nesting_depth(rule.formula) : nesting_depth(rule.term));
    }
    return c;
}

// ---------------------------------------------------------------------
// Repeated-variable elimination

namespace {

std::string derived_name(const std::string& base, const EqualityType& rho, const Schema& sch) {
    std::string suffix;
    bool wide = rho.class_of.size() > 9;
    for (size_t i = 0; i < rho.class_of.size(); ++i) {
        if (wide && i) suffix += "_";
        suffix += std::to_string(rho.class_of[i] + 1);
    }
    std::string name = base + "_" + suffix;
    while (sch.has(name)) name += "x";
    return name;
}

struct Dedup {
    const DynamicProgram& src;
    DynamicProgram out;
    std::shared_ptr<Schema> schema;
    std::map<std::pair<std::string, EqualityType>, std::string> derived;  // (base, rho) -> name
    std::deque<std::tuple<std::string, std::string, EqualityType>> work;   // name, base, rho
    size_t cap = 0;

    explicit Dedup(const DynamicProgram& p) : src(p) {}

    FormulaPtr rewrite(const FormulaPtr& f) {
        if (f->kind == Formula::Kind::rel) {
            std::vector<std::string> keys;
            bool plain = true;
            for (const auto& t : f->terms) {
                if (t->kind == Term::Kind::var)
                    keys.push_back("v:" + t->name);
                else if (t->kind == Term::Kind::constant)
                    keys.push_back("c:" + t->name + ":" + std::to_string(keys.size()));
                else
                    plain = false;
            }
            if (!plain) return f;
            std::vector<int> cls;
            std::map<std::string, int> first;
            for (const auto& k : keys) {
                auto it = first.find(k);
                if (it == first.end()) {
                    int c = static_cast<int>(first.size());
                    first.emplace(k, c);
                    cls.push_back(c);
                } else {
                    cls.push_back(it->second);
                }
            }
            EqualityType rho = equality_type_from_classes(cls);
            if (rho.classes() == static_cast<int>(cls.size())) return f;
            std::vector<TermPtr> reps;
            for (const auto& block : rho.blocks) reps.push_back(f->terms[block.front()]);
            return ast::rel(symbol_for(f->name, rho), reps);
        }
        if (f->kids.empty()) return f;
        auto copy = std::make_shared<Formula>(*f);
        for (auto& k : copy->kids) k = rewrite(k);
        return copy;
    }

    std::string symbol_for(const std::string& base, const EqualityType& rho) {
        auto key = std::make_pair(base, rho);
        auto it = derived.find(key);
        if (it != derived.end()) return it->second;
        if (derived.size() >= cap)
            throw Error(ErrorKind::resource, "repeated-variable elimination exceeded its step cap");
        std::string name = derived_name(base, rho, *schema);
        schema->add_relation(name, rho.classes(), Role::aux);
        derived.emplace(key, name);
        work.emplace_back(name, base, rho);
        return name;
    }

    void define(const std::string& name, const std::string& base, const EqualityType& rho) {
        const Schema& sch = *src.schema;
        const Symbol& bsym = sch.at(base);
        for (const Trigger& trig : src.triggers()) {
            UpdateRule r;
            r.target = name;
            r.trigger = trig;
            if (bsym.role == Role::aux) {
                const UpdateRule& orig = src.rule(base, trig);
                r.params = orig.params;
                VarMap map;
                for (const auto& block : rho.blocks) {
                    r.vars.push_back(orig.vars[block.front()]);
                    for (int pos : block) map[orig.vars[pos]] = ast::var(orig.vars[block.front()]);
                }
                r.formula = rewrite(substitute(orig.formula, map));
                r.is_frame = orig.is_frame;
            } else {
                r.params = src.rules.empty() ? std::vector<std::string>{} : params_for(trig);
                r.vars = fresh_vars(rho.classes(), r.params, *schema);
                std::vector<TermPtr> own;
                for (const auto& v : r.vars) own.push_back(ast::var(v));
                FormulaPtr keep = ast::rel(name, own);
                if (bsym.role == Role::input && trig.relation == base) {
                    std::vector<FormulaPtr> match;
                    for (size_t i = 0; i < rho.class_of.size(); ++i)
                        match.push_back(ast::eq(ast::var(r.vars[rho.class_of[i]]), ast::var(r.params[i])));
                    FormulaPtr m = ast::conj_all(match);
                    r.formula = trig.kind == Modification::Kind::ins ? ast::disj(keep, m) : ast::conj(keep, ast::neg(m));
                } else {
                    r.formula = keep;
                    r.is_frame = true;
                }
            }
            out.rules[{name, trig}] = r;
        }
        InitDerive d;
        d.target = name;
        d.vars = fresh_vars(rho.classes(), {}, *schema);
        std::vector<TermPtr> args;
        for (int c : rho.class_of) args.push_back(ast::var(d.vars[c]));
        d.formula = ast::rel(base, args);
        out.init.derive.push_back(d);
    }

    std::vector<std::string> params_for(const Trigger& trig) {
        for (const auto& [key, rule] : src.rules)
            if (rule.trigger == trig) return rule.params;
        return default_params(trig, *src.schema);
    }
};

size_t bell(int n) {
    std::vector<std::vector<size_t>> t(static_cast<size_t>(n + 1));
    t[0] = {1};
    for (int i = 1; i <= n; ++i) {
        t[i].push_back(t[i - 1].back());
        for (size_t j = 0; j < t[i - 1].size(); ++j) t[i].push_back(t[i].back() + t[i - 1][j]);
    }
    return t[n].front();
}

}  // namespace

DynamicProgram eliminate_repeated_variables(const DynamicProgram& p) {
    if (!p.finalized()) throw Error(ErrorKind::program, "program not finalized");
    if (!p.schema->ids_of_kind(SymbolKind::function).empty())
        throw Error(ErrorKind::unsupported, "repeated-variable elimination needs a program without function symbols");
    Dedup d(p);
    d.schema = std::make_shared<Schema>(*p.schema);
    d.out = p;
    d.out.rules.clear();
    for (int id : p.schema->ids_of_kind(SymbolKind::relation)) d.cap += bell(p.schema->at(id).arity);
    for (int id : p.aux_ids()) {
        const std::string& name = p.schema->at(id).name;
        for (const Trigger& trig : p.triggers()) {
            UpdateRule r = p.rule(name, trig);
            if (r.formula) r.formula = d.rewrite(r.formula);
            d.out.rules[{name, trig}] = r;
        }
    }
    while (!d.work.empty()) {
        auto [name, base, rho] = d.work.front();
        d.work.pop_front();
        d.define(name, base, rho);
    }
    d.out.schema = d.schema;
    d.out.finalize();
    return d.out;
}

// ---------------------------------------------------------------------
// Relations encoded by functions

namespace {

struct Rel2Fun {
    std::map<std::string, std::string> fname;  // relation -> function
    std::string top, bot;

    TermPtr top_t() const { return ast::app(top, {}); }
    TermPtr bot_t() const { return ast::app(bot, {}); }

    FormulaPtr rewrite(const FormulaPtr& f) const {
        if (f->kind == Formula::Kind::rel) {
            auto it = fname.find(f->name);
            std::vector<TermPtr> args;
            for (const auto& t : f->terms) args.push_back(rewrite(t));
            if (it == fname.end()) return ast::rel(f->name, args);
            return ast::eq(ast::app(it->second, args), top_t());
        }
        auto copy = std::make_shared<Formula>(*f);
        for (auto& t : copy->terms) t = rewrite(t);
        for (auto& k : copy->kids) k = rewrite(k);
        return copy;
    }

    TermPtr rewrite(const TermPtr& t) const {
        if (t->args.empty() && !t->cond) return t;
        auto copy = std::make_shared<Term>(*t);
        for (auto& a : copy->args) a = rewrite(a);
        if (copy->cond) copy->cond = rewrite(copy->cond);
        return copy;
    }

    TermPtr encode(const FormulaPtr& f) const { return ast::ite(rewrite(f), top_t(), bot_t()); }
};

std::string fresh_name(const std::string& want, const Schema& a, const Schema& b) {
    std::string name = want;
    while (a.has(name) || b.has(name)) name += "x";
    return name;
}

}  // namespace

DynamicProgram relations_to_functions(const DynamicProgram& p) {
    if (!p.finalized()) throw Error(ErrorKind::program, "program not finalized");
    const Schema& sch = *p.schema;
    std::vector<int> convert;
    for (int id : sch.ids(Role::aux, SymbolKind::relation))
        if (sch.at(id).name != p.query) convert.push_back(id);
    if (convert.empty()) return p;
    if (p.init.kind == InitSpec::Kind::builtin)
        throw Error(ErrorKind::unsupported, "relations-to-functions cannot translate a builtin initializer");

    Rel2Fun rf;
    auto schema = std::make_shared<Schema>();
    Schema empty;
    for (int id : convert) rf.fname[sch.at(id).name] = fresh_name("f_" + sch.at(id).name, sch, empty);
    for (int id = 0; id < sch.size(); ++id) {
        Symbol sym = sch.at(id);
        auto it = rf.fname.find(sym.name);
        if (it != rf.fname.end() && sym.role == Role::aux) {
            sym.name = it->second;
            sym.kind = SymbolKind::function;
        }
        schema->add(sym);
    }
    rf.top = fresh_name("ctop", sch, *schema);
    schema->add_function(rf.top, 0, Role::aux);
    rf.bot = fresh_name("cbot", sch, *schema);
    schema->add_function(rf.bot, 0, Role::aux);

    DynamicProgram out;
    out.name = p.name;
    out.schema = schema;
    out.query = p.query;
    out.default_frame = p.default_frame;
    out.constants = p.constants;
    out.builtin_interp = p.builtin_interp;
    out.init.kind = p.init.kind;

    for (const auto& [key, rule] : p.rules) {
        UpdateRule r = rule;
        auto it = rf.fname.find(rule.target);
        if (it != rf.fname.end()) {
            r.target = it->second;
            std::vector<TermPtr> args;
            for (const auto& v : r.vars) args.push_back(ast::var(v));
            r.formula = nullptr;
            r.term = rule.is_frame ? ast::app(it->second, args) : rf.encode(rule.formula);
        } else if (r.formula) {
            r.formula = rf.rewrite(r.formula);
        } else {
            r.term = rf.rewrite(r.term);
        }
        out.rules[{r.target, r.trigger}] = r;
    }
    for (const Trigger& trig : p.triggers()) {
        std::vector<std::string> params = p.rule(p.query, trig).params;
        for (const std::string& c : {rf.top, rf.bot}) {
            UpdateRule r;
            r.target = c;
            r.trigger = trig;
            r.params = params;
            r.term = ast::app(c, {});
            r.is_frame = true;
            out.rules[{c, trig}] = r;
        }
    }

    // Facts of converted relations become derived definitions.
    InitDerive top{rf.top, {}, nullptr, ast::elem(0)};
    InitDerive bot{rf.bot, {}, nullptr, ast::elem(1)};
    out.init.derive.push_back(top);
    out.init.derive.push_back(bot);
    for (const InitFact& f : p.init.facts)
        if (!rf.fname.count(f.symbol)) out.init.facts.push_back(f);
    for (int id : convert) {
        const Symbol& sym = sch.at(id);
        InitDerive d;
        d.target = rf.fname[sym.name];
        d.vars = fresh_vars(sym.arity, {}, *schema);
        std::vector<FormulaPtr> matches;
        for (const InitFact& f : p.init.facts) {
            if (f.symbol != sym.name) continue;
            std::vector<FormulaPtr> eqs;
            for (size_t i = 0; i < f.args.size(); ++i) eqs.push_back(ast::eq(ast::var(d.vars[i]), f.args[i]));
            matches.push_back(ast::conj_all(eqs));
        }
        d.term = matches.empty() ? rf.bot_t() : ast::ite(ast::disj_all(matches), rf.top_t(), rf.bot_t());
        out.init.derive.push_back(d);
    }
    for (const InitDerive& d : p.init.derive) {
        InitDerive e = d;
        auto it = rf.fname.find(d.target);
        if (it != rf.fname.end()) {
            e.target = it->second;
            e.term = rf.encode(d.formula);
            e.formula = nullptr;
        } else if (e.formula) {
            e.formula = rf.rewrite(e.formula);
        } else {
            e.term = rf.rewrite(e.term);
        }
        out.init.derive.push_back(e);
    }
    out.finalize();
    return out;
}

}  // namespace dynlab
