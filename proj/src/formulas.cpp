#include "dynlab/formulas.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace dynlab {

namespace ast {

TermPtr var(const std::string& name) {
    auto t = std::make_shared<Term>();
    t->kind = Term::Kind::var;
    t->name = name;
    return t;
}

TermPtr cnst(const std::string& name) {
    auto t = std::make_shared<Term>();
    t->kind = Term::Kind::constant;
    t->name = name;
    return t;
}

TermPtr app(const std::string& fn, std::vector<TermPtr> args) {
    auto t = std::make_shared<Term>();
    t->kind = Term::Kind::app;
    t->name = fn;
    t->args = std::move(args);
    return t;
}

TermPtr ite(FormulaPtr cond, TermPtr then_t, TermPtr else_t) {
    auto t = std::make_shared<Term>();
    t->kind = Term::Kind::ite;
    t->cond = std::move(cond);
    t->args = {std::move(then_t), std::move(else_t)};
    return t;
}

TermPtr elem(Element e) {
    auto t = std::make_shared<Term>();
    t->kind = Term::Kind::element;
    t->element = e;
    return t;
}

FormulaPtr truth() {
    auto f = std::make_shared<Formula>();
    f->kind = Formula::Kind::truth;
    return f;
}

FormulaPtr falsity() {
    auto f = std::make_shared<Formula>();
    f->kind = Formula::Kind::falsity;
    return f;
}

FormulaPtr rel(const std::string& name, std::vector<TermPtr> args) {
    auto f = std::make_shared<Formula>();
    f->kind = Formula::Kind::rel;
    f->name = name;
    f->terms = std::move(args);
    return f;
}

FormulaPtr eq(TermPtr a, TermPtr b) {
    auto f = std::make_shared<Formula>();
    f->kind = Formula::Kind::eq;
    f->terms = {std::move(a), std::move(b)};
    return f;
}

FormulaPtr neq(TermPtr a, TermPtr b) { return neg(eq(std::move(a), std::move(b))); }

FormulaPtr neg(FormulaPtr g) {
    auto f = std::make_shared<Formula>();
    f->kind = Formula::Kind::neg;
    f->kids = {std::move(g)};
    return f;
}

FormulaPtr conj(FormulaPtr a, FormulaPtr b) {
    auto f = std::make_shared<Formula>();
    f->kind = Formula::Kind::conj;
    f->kids = {std::move(a), std::move(b)};
    return f;
}

FormulaPtr disj(FormulaPtr a, FormulaPtr b) {
    auto f = std::make_shared<Formula>();
    f->kind = Formula::Kind::disj;
    f->kids = {std::move(a), std::move(b)};
    return f;
}

FormulaPtr conj_all(const std::vector<FormulaPtr>& fs) {
    if (fs.empty()) return truth();
    FormulaPtr acc = fs.front();
    for (size_t i = 1; i < fs.size(); ++i) acc = conj(acc, fs[i]);
    return acc;
}

FormulaPtr disj_all(const std::vector<FormulaPtr>& fs) {
    if (fs.empty()) return falsity();
    FormulaPtr acc = fs.front();
    for (size_t i = 1; i < fs.size(); ++i) acc = disj(acc, fs[i]);
    return acc;
}

}  // namespace ast

bool equal(const TermPtr& a, const TermPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->kind != b->kind || a->name != b->name || a->element != b->element) return false;
    if (a->args.size() != b->args.size()) return false;
    for (size_t i = 0; i < a->args.size(); ++i)
        if (!equal(a->args[i], b->args[i])) return false;
    if (static_cast<bool>(a->cond) != static_cast<bool>(b->cond)) return false;
    return !a->cond || equal(a->cond, b->cond);
}

bool equal(const FormulaPtr& a, const FormulaPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->kind != b->kind || a->name != b->name) return false;
    if (a->terms.size() != b->terms.size() || a->kids.size() != b->kids.size()) return false;
    for (size_t i = 0; i < a->terms.size(); ++i)
        if (!equal(a->terms[i], b->terms[i])) return false;
    for (size_t i = 0; i < a->kids.size(); ++i)
        if (!equal(a->kids[i], b->kids[i])) return false;
    return true;
}

namespace {

int level(const FormulaPtr& f) {
    switch (f->kind) {
        case Formula::Kind::disj: return 1;
        case Formula::Kind::conj: return 2;
        default: return 3;
    }
}

std::string print_args(const std::vector<TermPtr>& args) {
    std::string out;
    for (size_t i = 0; i < args.size(); ++i) {
        if (i) out += ",";
        out += print(args[i]);
    }
    return out;
}

std::string print_at(const FormulaPtr& f, int min_level) {
    std::string s = print(f);
    return level(f) < min_level ? "(" + s + ")" : s;
}

}  // namespace

std::string print(const TermPtr& t) {
    switch (t->kind) {
        case Term::Kind::var:
        case Term::Kind::constant: return t->name;
        case Term::Kind::element: return "@" + std::to_string(t->element);
        case Term::Kind::app:
            if (t->args.empty()) return t->name;
            return t->name + "(" + print_args(t->args) + ")";
        case Term::Kind::ite:
            return "ite(" + print(t->cond) + ", " + print(t->args[0]) + ", " + print(t->args[1]) + ")";
    }
    return "?";
}

std::string print(const FormulaPtr& f) {
    switch (f->kind) {
        case Formula::Kind::truth: return "true";
        case Formula::Kind::falsity: return "false";
        case Formula::Kind::rel:
            if (f->terms.empty()) return f->name;
            return f->name + "(" + print_args(f->terms) + ")";
        case Formula::Kind::eq: return print(f->terms[0]) + " = " + print(f->terms[1]);
        case Formula::Kind::neg: {
            const FormulaPtr& k = f->kids[0];
            if (k->kind == Formula::Kind::eq) return print(k->terms[0]) + " != " + print(k->terms[1]);
            return "!" + print_at(k, 3);
        }
        case Formula::Kind::conj: return print_at(f->kids[0], 2) + " & " + print_at(f->kids[1], 3);
        case Formula::Kind::disj: return print_at(f->kids[0], 1) + " | " + print_at(f->kids[1], 2);
    }
    return "?";
}

class CompiledFormula;

class CompiledTerm {
public:
    Term::Kind kind = Term::Kind::var;
    int index = 0;  // slot, symbol id, or element
    std::vector<CompiledTerm> args;
    std::shared_ptr<const CompiledFormula> cond;
};

class CompiledFormula {
public:
    Formula::Kind kind = Formula::Kind::truth;
    int sym = -1;
    std::vector<CompiledTerm> terms;
    std::vector<CompiledFormula> kids;
};

namespace {

CompiledTerm compile_term(const TermPtr& t, const CompileScope& sc);

CompiledFormula compile_formula(const FormulaPtr& f, const CompileScope& sc) {
    CompiledFormula out;
    out.kind = f->kind;
    switch (f->kind) {
        case Formula::Kind::truth:
        case Formula::Kind::falsity: break;
        case Formula::Kind::rel: {
            auto id = sc.schema->find(f->name);
            if (!id) throw Error(ErrorKind::schema, "unknown relation '" + f->name + "'");
            const Symbol& sym = sc.schema->at(*id);
            if (sym.kind != SymbolKind::relation)
                throw Error(ErrorKind::schema, "'" + f->name + "' is not a relation");
            if (sym.arity != static_cast<int>(f->terms.size()))
                throw Error(ErrorKind::schema, "arity mismatch for '" + f->name + "'");
            out.sym = *id;
            for (const auto& t : f->terms) out.terms.push_back(compile_term(t, sc));
            break;
        }
        case Formula::Kind::eq:
            for (const auto& t : f->terms) out.terms.push_back(compile_term(t, sc));
            break;
        case Formula::Kind::neg:
        case Formula::Kind::conj:
        case Formula::Kind::disj:
            for (const auto& k : f->kids) out.kids.push_back(compile_formula(k, sc));
            break;
    }
    return out;
}

CompiledTerm compile_term(const TermPtr& t, const CompileScope& sc) {
    CompiledTerm out;
    out.kind = t->kind;
    switch (t->kind) {
        case Term::Kind::var: {
            auto it = std::find(sc.vars.begin(), sc.vars.end(), t->name);
            if (it != sc.vars.end()) {
                out.index = static_cast<int>(it - sc.vars.begin());
                break;
            }
            auto id = sc.schema->find(t->name);
            if (id && sc.schema->at(*id).kind == SymbolKind::constant) {
                out.kind = Term::Kind::constant;
                out.index = *id;
                break;
            }
            if (id && sc.schema->at(*id).kind == SymbolKind::function && sc.schema->at(*id).arity == 0) {
                out.kind = Term::Kind::app;
                out.index = *id;
                break;
            }
            throw Error(ErrorKind::schema, "unbound variable '" + t->name + "'");
        }
        case Term::Kind::constant: {
            auto id = sc.schema->find(t->name);
            if (!id || sc.schema->at(*id).kind != SymbolKind::constant)
                throw Error(ErrorKind::schema, "unknown constant '" + t->name + "'");
            out.index = *id;
            break;
        }
        case Term::Kind::element: out.index = t->element; break;
        case Term::Kind::app: {
            auto id = sc.schema->find(t->name);
            if (!id) throw Error(ErrorKind::schema, "unknown function '" + t->name + "'");
            const Symbol& sym = sc.schema->at(*id);
            if (sym.kind != SymbolKind::function)
                throw Error(ErrorKind::schema, "'" + t->name + "' is not a function");
            if (sym.arity != static_cast<int>(t->args.size()))
                throw Error(ErrorKind::schema, "arity mismatch for '" + t->name + "'");
            out.index = *id;
            for (const auto& a : t->args) out.args.push_back(compile_term(a, sc));
            break;
        }
        case Term::Kind::ite:
            out.cond = std::make_shared<CompiledFormula>(compile_formula(t->cond, sc));
            for (const auto& a : t->args) out.args.push_back(compile_term(a, sc));
            break;
    }
    return out;
}

}  // namespace

std::shared_ptr<const CompiledFormula> Evaluator::compile(const FormulaPtr& f, const CompileScope& scope) {
    return std::make_shared<CompiledFormula>(compile_formula(f, scope));
}

std::shared_ptr<const CompiledTerm> Evaluator::compile(const TermPtr& t, const CompileScope& scope) {
    return std::make_shared<CompiledTerm>(compile_term(t, scope));
}

Element Evaluator::eval(const CompiledTerm& t, const State& s, const Element* slots) {
    switch (t.kind) {
        case Term::Kind::var: return slots[t.index];
        case Term::Kind::constant: return s.table(t.index)[0];
        case Term::Kind::element:
            if (t.index < 0 || t.index >= s.domain_size())
                throw Error(ErrorKind::domain, "element literal @" + std::to_string(t.index) + " outside domain");
            return t.index;
        case Term::Kind::app: {
            int n = s.domain_size();
            int code = 0;
            for (const auto& a : t.args) code = code * n + eval(a, s, slots);
            return s.table(t.index)[code];
        }
        case Term::Kind::ite: return eval(*t.cond, s, slots) ? eval(t.args[0], s, slots) : eval(t.args[1], s, slots);
    }
    return 0;
}

bool Evaluator::eval(const CompiledFormula& f, const State& s, const Element* slots) {
    switch (f.kind) {
        case Formula::Kind::truth: return true;
        case Formula::Kind::falsity: return false;
        case Formula::Kind::rel: {
            int n = s.domain_size();
            int code = 0;
            for (const auto& a : f.terms) code = code * n + eval(a, s, slots);
            return s.table(f.sym)[code] != 0;
        }
        case Formula::Kind::eq: return eval(f.terms[0], s, slots) == eval(f.terms[1], s, slots);
        case Formula::Kind::neg: return !eval(f.kids[0], s, slots);
        case Formula::Kind::conj: return eval(f.kids[0], s, slots) && eval(f.kids[1], s, slots);
        case Formula::Kind::disj: return eval(f.kids[0], s, slots) || eval(f.kids[1], s, slots);
    }
    return false;
}

namespace {

CompileScope scope_of(const State& s, const Assignment& asg, std::vector<Element>& slots) {
    CompileScope sc;
    sc.schema = &s.schema();
    for (const auto& [name, value] : asg) {
        if (value < 0 || value >= s.domain_size())
            throw Error(ErrorKind::domain, "assignment of '" + name + "' outside domain");
        sc.vars.push_back(name);
        slots.push_back(value);
    }
    return sc;
}

}  // namespace

bool eval_formula(const FormulaPtr& f, const State& s, const Assignment& asg) {
    std::vector<Element> slots;
    CompileScope sc = scope_of(s, asg, slots);
    auto c = Evaluator::compile(f, sc);
    return Evaluator::eval(*c, s, slots.data());
}

Element eval_term(const TermPtr& t, const State& s, const Assignment& asg) {
    std::vector<Element> slots;
    CompileScope sc = scope_of(s, asg, slots);
    auto c = Evaluator::compile(t, sc);
    return Evaluator::eval(*c, s, slots.data());
}

int nesting_depth(const TermPtr& t) {
    switch (t->kind) {
        case Term::Kind::var:
        case Term::Kind::constant:
        case Term::Kind::element: return 0;
        case Term::Kind::app: {
            int m = 0;
            for (const auto& a : t->args) m = std::max(m, nesting_depth(a));
            return m + 1;
        }
        case Term::Kind::ite:
            return std::max({nesting_depth(t->cond), nesting_depth(t->args[0]), nesting_depth(t->args[1])});
    }
    return 0;
}

int nesting_depth(const FormulaPtr& f) {
    int m = 0;
    for (const auto& t : f->terms) m = std::max(m, nesting_depth(t));
    for (const auto& k : f->kids) m = std::max(m, nesting_depth(k));
    return m;
}

namespace {

bool is_atom(const FormulaPtr& f) {
    return f->kind == Formula::Kind::truth || f->kind == Formula::Kind::falsity || f->kind == Formula::Kind::rel ||
           f->kind == Formula::Kind::eq;
}

bool is_literal(const FormulaPtr& f) {
    return is_atom(f) || (f->kind == Formula::Kind::neg && is_atom(f->kids[0]));
}

bool conjunctive_tree(const FormulaPtr& f) {
    if (f->kind == Formula::Kind::conj) return conjunctive_tree(f->kids[0]) && conjunctive_tree(f->kids[1]);
    return is_literal(f);
}

void scan(const FormulaPtr& f, SyntaxFlags& flags);

void scan_term(const TermPtr& t, SyntaxFlags& flags) {
    if (t->kind == Term::Kind::ite) {
        SyntaxFlags inner = classify_syntax(t->cond);
        flags.negation_free = flags.negation_free && inner.negation_free;
        flags.conjunctive = flags.conjunctive && inner.conjunctive;
        flags.repeated_vars_in_atom = flags.repeated_vars_in_atom || inner.repeated_vars_in_atom;
    }
    for (const auto& a : t->args) scan_term(a, flags);
}

void scan(const FormulaPtr& f, SyntaxFlags& flags) {
    if (f->kind == Formula::Kind::neg) flags.negation_free = false;
    if (f->kind == Formula::Kind::rel) {
        std::vector<std::string> vars;
        for (const auto& t : f->terms) collect_vars(t, vars);
        std::set<std::string> uniq(vars.begin(), vars.end());
        if (uniq.size() != vars.size()) flags.repeated_vars_in_atom = true;
    }
    for (const auto& t : f->terms) scan_term(t, flags);
    for (const auto& k : f->kids) scan(k, flags);
}

}  // namespace

SyntaxFlags classify_syntax(const FormulaPtr& f) {
    SyntaxFlags flags;
    flags.conjunctive = conjunctive_tree(f);
    scan(f, flags);
    return flags;
}

SyntaxFlags classify_syntax(const TermPtr& t) {
    SyntaxFlags flags;
    scan_term(t, flags);
    return flags;
}

std::string EqualityType::to_string() const {
    std::string out = "{";
    for (size_t b = 0; b < blocks.size(); ++b) {
        if (b) out += ",";
        out += "{";
        for (size_t i = 0; i < blocks[b].size(); ++i) {
            if (i) out += ",";
            out += std::to_string(blocks[b][i] + 1);
        }
        out += "}";
    }
    return out + "}";
}

EqualityType equality_type_from_classes(const std::vector<int>& class_of) {
    EqualityType ty;
    std::map<int, int> renumber;
    for (size_t i = 0; i < class_of.size(); ++i) {
        auto it = renumber.find(class_of[i]);
        int c;
        if (it == renumber.end()) {
            c = static_cast<int>(ty.blocks.size());
            renumber.emplace(class_of[i], c);
            ty.blocks.emplace_back();
        } else {
            c = it->second;
        }
        ty.class_of.push_back(c);
        ty.blocks[c].push_back(static_cast<int>(i));
    }
    return ty;
}

EqualityType equality_type_of(const Tuple& tup) { return equality_type_from_classes(tup); }

std::vector<EqualityType> all_equality_types(int n) {
    // restricted growth strings enumerate set partitions canonically
    std::vector<EqualityType> out;
    std::vector<int> a(static_cast<size_t>(n), 0);
    std::function<void(int, int)> rec = [&](int i, int maxc) {
        if (i == n) {
            out.push_back(equality_type_from_classes(a));
            return;
        }
        for (int c = 0; c <= maxc + 1; ++c) {
            a[i] = c;
            rec(i + 1, std::max(maxc, c));
        }
    };
    if (n == 0) {
        out.push_back(EqualityType{});
        return out;
    }
    a[0] = 0;
    rec(1, 0);
    return out;
}

std::vector<TermPtr> terms_up_to_depth(const Schema& schema, int k, const std::vector<std::string>& vars,
                                       size_t cap) {
    std::vector<TermPtr> terms;
    std::vector<int> depth;
    for (const auto& v : vars) {
        terms.push_back(ast::var(v));
        depth.push_back(0);
    }
    std::vector<std::string> consts;
    for (int c : schema.ids_of_kind(SymbolKind::constant)) consts.push_back(schema.at(c).name);
    std::sort(consts.begin(), consts.end());
    for (const auto& c : consts) {
        terms.push_back(ast::cnst(c));
        depth.push_back(0);
    }
    std::vector<std::pair<std::string, int>> funs;
    for (int f : schema.ids_of_kind(SymbolKind::function)) funs.emplace_back(schema.at(f).name, schema.at(f).arity);
    std::sort(funs.begin(), funs.end());

    for (int d = 1; d <= k; ++d) {
        size_t pool = terms.size();
        for (const auto& [name, arity] : funs) {
            if (arity == 0) {
                if (d == 1) {
                    terms.push_back(ast::app(name, {}));
                    depth.push_back(1);
                }
                continue;
            }
            std::vector<size_t> idx(static_cast<size_t>(arity), 0);
            while (true) {
                int m = 0;
                for (size_t i : idx) m = std::max(m, depth[i]);
                if (m == d - 1) {
                    std::vector<TermPtr> args;
                    for (size_t i : idx) args.push_back(terms[i]);
                    terms.push_back(ast::app(name, std::move(args)));
                    depth.push_back(d);
                    if (terms.size() > cap)
                        throw Error(ErrorKind::resource,
                                    "term enumeration exceeds cap " + std::to_string(cap) + " at depth " +
                                        std::to_string(d));
                }
                int i = arity - 1;
                while (i >= 0 && idx[i] + 1 == pool) {
                    idx[i] = 0;
                    --i;
                }
                if (i < 0) break;
                ++idx[i];
            }
        }
    }
    return terms;
}

void collect_symbols(const TermPtr& t, std::vector<std::string>& out) {
    if (t->kind == Term::Kind::app || t->kind == Term::Kind::constant) out.push_back(t->name);
    if (t->cond) collect_symbols(t->cond, out);
    for (const auto& a : t->args) collect_symbols(a, out);
}

void collect_symbols(const FormulaPtr& f, std::vector<std::string>& out) {
    if (f->kind == Formula::Kind::rel) out.push_back(f->name);
    for (const auto& t : f->terms) collect_symbols(t, out);
    for (const auto& k : f->kids) collect_symbols(k, out);
}

void collect_vars(const TermPtr& t, std::vector<std::string>& out) {
    if (t->kind == Term::Kind::var) out.push_back(t->name);
    if (t->cond) collect_vars(t->cond, out);
    for (const auto& a : t->args) collect_vars(a, out);
}

void collect_vars(const FormulaPtr& f, std::vector<std::string>& out) {
    for (const auto& t : f->terms) collect_vars(t, out);
    for (const auto& k : f->kids) collect_vars(k, out);
}

TermPtr substitute(const TermPtr& t, const VarMap& map) {
    if (t->kind == Term::Kind::var) {
        auto it = map.find(t->name);
        return it == map.end() ? t : it->second;
    }
    if (t->args.empty() && !t->cond) return t;
    auto out = std::make_shared<Term>(*t);
    for (auto& a : out->args) a = substitute(a, map);
    if (out->cond) out->cond = substitute(out->cond, map);
    return out;
}

FormulaPtr substitute(const FormulaPtr& f, const VarMap& map) {
    if (f->terms.empty() && f->kids.empty()) return f;
    auto out = std::make_shared<Formula>(*f);
    for (auto& t : out->terms) t = substitute(t, map);
    for (auto& k : out->kids) k = substitute(k, map);
    return out;
}

}  // namespace dynlab
