#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "dynlab/program.hpp"

namespace dynlab {

ParseError::ParseError(const std::string& origin, SourcePos pos, const std::string& msg)
    : Error(ErrorKind::parse,
            origin + ":" + std::to_string(pos.line) + ":" + std::to_string(pos.column) + ": " + msg),
      pos_(pos) {}

namespace {

struct Token {
    enum class Kind { ident, number, punct, end };
    Kind kind = Kind::end;
    std::string text;
    SourcePos pos;
};

std::vector<Token> lex(const std::string& src, const std::string& origin) {
    std::vector<Token> out;
    int line = 1, col = 1;
    size_t i = 0;
    auto advance = [&](size_t k) {
        for (size_t j = 0; j < k; ++j, ++i) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };
    while (i < src.size()) {
        char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
            continue;
        }
        if (c == '#') {
            while (i < src.size() && src[i] != '\n') advance(1);
            continue;
        }
        Token t;
        t.pos = {line, col};
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t j = i;
            while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_' || src[j] == '-'))
                ++j;
            // Hyphens only inside names like builtin initializers; a trailing one is not part of the name.
            while (j > i && src[j - 1] == '-') --j;
            t.kind = Token::Kind::ident;
            t.text = src.substr(i, j - i);
            advance(j - i);
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            t.kind = Token::Kind::number;
            t.text = src.substr(i, j - i);
            advance(j - i);
        } else {
            std::string two = src.substr(i, 2);
            t.kind = Token::Kind::punct;
            if (two == ":=" || two == "!=") {
                t.text = two;
                advance(2);
            } else if (std::string("{}(),/:=!&|@").find(c) != std::string::npos) {
                t.text = std::string(1, c);
                advance(1);
            } else {
                throw ParseError(origin, t.pos, std::string("unexpected character '") + c + "'");
            }
        }
        out.push_back(t);
    }
    Token end;
    end.pos = {line, col};
    out.push_back(end);
    return out;
}

const std::set<std::string>& keywords() {
    static const std::set<std::string> k = {"program", "input", "aux",    "builtin", "const", "query",
                                            "init",    "derive", "on",    "insert",  "delete", "default",
                                            "frame",   "fun",   "true",   "false",   "ite",    "empty",
                                            "oracle",  "table", "last",  "let"};
    return k;
}

bool is_section(const std::string& s) {
    return s == "program" || s == "input" || s == "aux" || s == "builtin" || s == "const" || s == "query" ||
           s == "init" || s == "derive" || s == "on" || s == "default";
}

class Parser {
public:
    Parser(std::vector<Token> toks, std::string origin) : toks_(std::move(toks)), origin_(std::move(origin)) {}

    const Token& peek(size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
    bool at_end() const { return peek().kind == Token::Kind::end; }
    bool is(const std::string& text) const {
        return peek().kind != Token::Kind::end && peek().kind != Token::Kind::number && peek().text == text;
    }
    bool accept(const std::string& text) {
        if (!is(text)) return false;
        ++pos_;
        return true;
    }
    [[noreturn]] void fail(const std::string& msg) const { fail_at(peek().pos, msg); }
    [[noreturn]] void fail_at(SourcePos p, const std::string& msg) const { throw ParseError(origin_, p, msg); }
    std::string describe() const {
        return peek().kind == Token::Kind::end ? std::string("end of input") : "'" + peek().text + "'";
    }
    void expect(const std::string& text) {
        if (!accept(text)) fail("expected '" + text + "', found " + describe());
    }
    std::string ident(const char* what) {
        if (peek().kind != Token::Kind::ident) fail(std::string("expected ") + what + ", found " + describe());
        if (keywords().count(peek().text)) fail("'" + peek().text + "' is a reserved word");
        return toks_[pos_++].text;
    }
    int number() {
        if (peek().kind != Token::Kind::number) fail("expected a number, found " + describe());
        return std::stoi(toks_[pos_++].text);
    }

    // Formulas and terms against a schema and a variable scope.
    struct Macro {
        std::vector<std::string> vars;
        FormulaPtr body;
    };
    std::map<std::string, Macro> macros;
    const Schema* schema = nullptr;
    std::vector<std::string> scope;
    bool allow_elements = false;

    FormulaPtr formula() {
        FormulaPtr f = conjunction();
        while (accept("|")) f = ast::disj(f, conjunction());
        return f;
    }

    TermPtr term() {
        SourcePos p = peek().pos;
        if (accept("@")) {
            if (!allow_elements) fail_at(p, "element literals are only allowed in init sections");
            return ast::elem(number());
        }
        if (accept("ite")) {
            expect("(");
            FormulaPtr c = formula();
            expect(",");
            TermPtr a = term();
            expect(",");
            TermPtr b = term();
            expect(")");
            return ast::ite(c, a, b);
        }
        std::string name = ident("a term");
        if (accept("(")) {
            auto sym = schema->find(name);
            if (!sym || schema->at(*sym).kind != SymbolKind::function) fail_at(p, "unknown function symbol '" + name + "'");
            std::vector<TermPtr> args = arguments();
            if (static_cast<int>(args.size()) != schema->at(*sym).arity)
                fail_at(p, "function '" + name + "' expects " + std::to_string(schema->at(*sym).arity) + " arguments");
            return ast::app(name, std::move(args));
        }
        if (std::find(scope.begin(), scope.end(), name) != scope.end()) return ast::var(name);
        auto sym = schema->find(name);
        if (sym && schema->at(*sym).kind == SymbolKind::constant) return ast::cnst(name);
        if (sym && schema->at(*sym).kind == SymbolKind::function && schema->at(*sym).arity == 0)
            return ast::app(name, {});
        fail_at(p, "unknown identifier '" + name + "'");
    }

    std::vector<std::string> var_list() {
        std::vector<std::string> out;
        if (accept("(")) {
            if (!accept(")")) {
                do out.push_back(ident("a variable"));
                while (accept(","));
                expect(")");
            }
        }
        return out;
    }

    Parser& with_scope(std::vector<std::string> vars) {
        scope = std::move(vars);
        return *this;
    }

private:
    std::vector<TermPtr> arguments() {
        std::vector<TermPtr> args;
        if (accept(")")) return args;
        do args.push_back(term());
        while (accept(","));
        expect(")");
        return args;
    }

    FormulaPtr conjunction() {
        FormulaPtr f = unary();
        while (accept("&")) f = ast::conj(f, unary());
        return f;
    }

    FormulaPtr unary() {
        if (accept("!")) return ast::neg(unary());
        if (accept("(")) {
            FormulaPtr f = formula();
            expect(")");
            return f;
        }
        if (accept("true")) return ast::truth();
        if (accept("false")) return ast::falsity();
        SourcePos p = peek().pos;
        if (peek().kind == Token::Kind::ident && macros.count(peek().text)) {
            const Macro& m = macros.at(toks_[pos_++].text);
            std::vector<TermPtr> args;
            if (accept("(")) args = arguments();
            if (args.size() != m.vars.size()) fail_at(p, "wrong number of arguments for macro");
            VarMap map;
            for (size_t i = 0; i < args.size(); ++i) map[m.vars[i]] = args[i];
            return substitute(m.body, map);
        }
        if (peek().kind == Token::Kind::ident && !keywords().count(peek().text)) {
            auto sym = schema->find(peek().text);
            bool bound = std::find(scope.begin(), scope.end(), peek().text) != scope.end();
            if (sym && !bound && schema->at(*sym).kind == SymbolKind::relation) {
                std::string name = ident("a relation");
                std::vector<TermPtr> args;
                if (accept("(")) args = arguments();
                if (static_cast<int>(args.size()) != schema->at(*sym).arity)
                    fail_at(p, "relation '" + name + "' expects " + std::to_string(schema->at(*sym).arity) + " arguments");
                return ast::rel(name, std::move(args));
            }
        }
        TermPtr a = term();
        if (accept("=")) return ast::eq(a, term());
        if (accept("!=")) return ast::neq(a, term());
        fail("expected '=' or '!=' after a term, found " + describe());
    }

    std::vector<Token> toks_;
    size_t pos_ = 0;
    std::string origin_;
};

struct ProgramParser {
    Parser& ps;
    DynamicProgram prog;
    std::shared_ptr<Schema> schema = std::make_shared<Schema>();
    bool seen_query = false;

    void declare(const std::string& name, int arity, bool fun, Role role, SourcePos p) {
        if (schema->has(name)) ps.fail_at(p, "symbol '" + name + "' declared twice");
        if (fun)
            schema->add_function(name, arity, role);
        else
            schema->add_relation(name, arity, role);
    }

    void symbol_block(Role role) {
        ps.expect("{");
        if (ps.accept("}")) return;
        do {
            bool fun = ps.accept("fun");
            SourcePos p = ps.peek().pos;
            std::string name = ps.ident("a symbol name");
            ps.expect("/");
            int arity = ps.number();
            if (role == Role::input && fun) ps.fail_at(p, "input symbols must be relations");
            declare(name, arity, fun, role, p);
            if (role == Role::builtin && ps.accept("=")) prog.builtin_interp[name] = ps.ident("an interpretation");
        } while (ps.accept(","));
        ps.expect("}");
    }

    void const_section() {
        do {
            SourcePos p = ps.peek().pos;
            std::string name = ps.ident("a constant name");
            if (schema->has(name)) ps.fail_at(p, "symbol '" + name + "' declared twice");
            schema->add_constant(name);
            int index = static_cast<int>(prog.constants.size());
            if (ps.accept("=")) index = ps.accept("last") ? -1 : ps.number();
            prog.constants.push_back(ConstPlacement{name, index});
        } while (ps.accept(","));
    }

    void facts() {
        ps.expect("{");
        ps.allow_elements = true;
        ps.schema = schema.get();
        ps.scope.clear();
        while (!ps.accept("}")) {
            SourcePos p = ps.peek().pos;
            InitFact f;
            f.symbol = ps.ident("a symbol");
            auto sym = schema->find(f.symbol);
            if (!sym || schema->at(*sym).role != Role::aux || schema->at(*sym).kind == SymbolKind::constant)
                ps.fail_at(p, "init facts must name an aux relation or function, got '" + f.symbol + "'");
            if (ps.accept("(")) {
                if (!ps.accept(")")) {
                    do f.args.push_back(ps.term());
                    while (ps.accept(","));
                    ps.expect(")");
                }
            }
            if (static_cast<int>(f.args.size()) != schema->at(*sym).arity)
                ps.fail_at(p, "wrong number of arguments for '" + f.symbol + "'");
            if (schema->at(*sym).kind == SymbolKind::function) {
                ps.expect("=");
                f.value = ps.term();
            }
            prog.init.facts.push_back(f);
            ps.accept(",");
        }
        ps.allow_elements = false;
    }

    void init_section() {
        SourcePos p = ps.peek().pos;
        if (ps.accept("empty"))
            prog.init.kind = InitSpec::Kind::empty;
        else if (ps.accept("oracle"))
            prog.init.kind = InitSpec::Kind::oracle;
        else if (ps.accept("table"))
            prog.init.kind = InitSpec::Kind::table;
        else if (ps.accept("builtin")) {
            prog.init.kind = InitSpec::Kind::builtin;
            prog.init.builtin_name = ps.ident("an initializer name");
        } else
            ps.fail_at(p, "expected empty, oracle, table or builtin after 'init'");
        if (ps.is("{")) facts();
    }

    // Header `Name(vars)` followed by `:` formula or `:=` term.
    void rule_body(const std::string& target, SourcePos p, std::vector<std::string> params,
                   std::vector<std::string>& vars, FormulaPtr& formula, TermPtr& term) {
        auto sym = schema->find(target);
        if (!sym || schema->at(*sym).role != Role::aux) ps.fail_at(p, "'" + target + "' is not an aux symbol");
        const Symbol& S = schema->at(*sym);
        if (static_cast<int>(vars.size()) != S.arity)
            ps.fail_at(p, "'" + target + "' has arity " + std::to_string(S.arity));
        std::vector<std::string> all = params;
        all.insert(all.end(), vars.begin(), vars.end());
        for (size_t i = 0; i < all.size(); ++i) {
            if (schema->has(all[i])) ps.fail_at(p, "variable '" + all[i] + "' clashes with a declared symbol");
            if (std::find(all.begin(), all.begin() + static_cast<long>(i), all[i]) != all.begin() + static_cast<long>(i))
                ps.fail_at(p, "variable '" + all[i] + "' bound twice");
        }
        ps.schema = schema.get();
        ps.with_scope(all);
        if (S.kind == SymbolKind::relation) {
            if (!ps.accept(":")) ps.fail("relation rules use ':' before the formula");
            formula = ps.formula();
        } else {
            if (!ps.accept(":=")) ps.fail("function rules use ':=' before the term");
            term = ps.term();
        }
    }

    void derive_section() {
        ps.expect("{");
        ps.allow_elements = true;
        while (!ps.accept("}")) {
            SourcePos p = ps.peek().pos;
            InitDerive d;
            d.target = ps.ident("a derived symbol");
            d.vars = ps.var_list();
            rule_body(d.target, p, {}, d.vars, d.formula, d.term);
            prog.init.derive.push_back(d);
        }
        ps.allow_elements = false;
    }

    void on_section() {
        Trigger trig;
        if (ps.accept("insert"))
            trig.kind = Modification::Kind::ins;
        else if (ps.accept("delete"))
            trig.kind = Modification::Kind::del;
        else
            ps.fail("expected 'insert' or 'delete' after 'on'");
        SourcePos p = ps.peek().pos;
        trig.relation = ps.ident("an input relation");
        auto rid = schema->find(trig.relation);
        if (!rid || schema->at(*rid).role != Role::input)
            ps.fail_at(p, "'" + trig.relation + "' is not an input relation");
        std::vector<std::string> params = ps.var_list();
        if (static_cast<int>(params.size()) != schema->at(*rid).arity)
            ps.fail_at(p, "'" + trig.relation + "' has arity " + std::to_string(schema->at(*rid).arity));
        ps.expect(":");
        ps.macros.clear();
        while (!ps.at_end() && !is_section(ps.peek().text)) {
            SourcePos rp = ps.peek().pos;
            if (ps.accept("let")) {
                SourcePos mp = ps.peek().pos;
                std::string name = ps.ident("a macro name");
                if (schema->has(name) || ps.macros.count(name)) ps.fail_at(mp, "macro '" + name + "' clashes with another name");
                Parser::Macro m;
                m.vars = ps.var_list();
                ps.expect("=");
                std::vector<std::string> all = params;
                all.insert(all.end(), m.vars.begin(), m.vars.end());
                ps.schema = schema.get();
                ps.with_scope(all);
                m.body = ps.formula();
                ps.macros[name] = m;
                continue;
            }
            UpdateRule r;
            r.trigger = trig;
            r.params = params;
            r.target = ps.ident("a rule target");
            r.vars = ps.var_list();
            rule_body(r.target, rp, params, r.vars, r.formula, r.term);
            if (prog.rules.count({r.target, trig}))
                ps.fail_at(rp, "second rule for '" + r.target + "' on " + to_string(trig));
            prog.rules[{r.target, trig}] = r;
        }
    }

    DynamicProgram run() {
        ps.expect("program");
        prog.name = ps.ident("a program name");
        SourcePos query_pos;
        while (!ps.at_end()) {
            SourcePos p = ps.peek().pos;
            if (ps.accept("input"))
                symbol_block(Role::input);
            else if (ps.accept("aux"))
                symbol_block(Role::aux);
            else if (ps.accept("builtin"))
                symbol_block(Role::builtin);
            else if (ps.accept("const"))
                const_section();
            else if (ps.accept("query")) {
                query_pos = ps.peek().pos;
                prog.query = ps.ident("the query symbol");
                seen_query = true;
            } else if (ps.accept("init"))
                init_section();
            else if (ps.accept("derive"))
                derive_section();
            else if (ps.accept("default")) {
                ps.expect("frame");
                prog.default_frame = true;
            } else if (ps.accept("on"))
                on_section();
            else
                ps.fail_at(p, "unexpected " + ps.describe() + " at top level");
        }
        if (!seen_query) ps.fail("missing 'query' declaration");
        auto q = schema->find(prog.query);
        if (!q || schema->at(*q).role != Role::aux || schema->at(*q).kind != SymbolKind::relation)
            ps.fail_at(query_pos, "query symbol must be a declared aux relation");
        prog.schema = schema;
        try {
            prog.finalize();
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            ps.fail_at(ps.peek().pos, e.what());
        }
        return prog;
    }
};

std::string symbol_decl(const Symbol& s) {
    return std::string(s.kind == SymbolKind::function ? "fun " : "") + s.name + "/" + std::to_string(s.arity);
}

std::string header(const std::string& name, const std::vector<std::string>& vars) {
    if (vars.empty()) return name;
    std::string out = name + "(";
    for (size_t i = 0; i < vars.size(); ++i) out += (i ? ", " : "") + vars[i];
    return out + ")";
}

bool canonical_frame_vars(const std::vector<std::string>& vars) {
    for (size_t i = 0; i < vars.size(); ++i)
        if (vars[i] != "y" + std::to_string(i + 1)) return false;
    return true;
}

std::string body(const FormulaPtr& f, const TermPtr& t) { return f ? ": " + print(f) : " := " + print(t); }

}  // namespace

DynamicProgram parse_program(const std::string& text, const std::string& origin) {
    Parser ps(lex(text, origin), origin);
    ProgramParser pp{ps, {}};
    return pp.run();
}

FormulaPtr parse_formula(const std::string& text, const Schema& schema, const std::vector<std::string>& vars) {
    Parser ps(lex(text, "<formula>"), "<formula>");
    ps.schema = &schema;
    ps.with_scope(vars);
    FormulaPtr f = ps.formula();
    if (!ps.at_end()) ps.fail("unexpected " + ps.describe() + " after formula");
    return f;
}

TermPtr parse_term(const std::string& text, const Schema& schema, const std::vector<std::string>& vars) {
    Parser ps(lex(text, "<term>"), "<term>");
    ps.schema = &schema;
    ps.with_scope(vars);
    TermPtr t = ps.term();
    if (!ps.at_end()) ps.fail("unexpected " + ps.describe() + " after term");
    return t;
}

std::string print_program(const DynamicProgram& p) {
    const Schema& sch = *p.schema;
    std::ostringstream out;
    out << "program " << p.name << "\n";
    auto block = [&](const char* kw, Role role) {
        std::vector<std::string> items;
        for (const Symbol& s : sch.symbols()) {
            if (s.role != role || s.kind == SymbolKind::constant) continue;
            std::string d = symbol_decl(s);
            auto it = p.builtin_interp.find(s.name);
            if (role == Role::builtin && it != p.builtin_interp.end()) d += " = " + it->second;
            items.push_back(d);
        }
        if (items.empty() && role == Role::builtin) return;
        out << kw << " { ";
        for (size_t i = 0; i < items.size(); ++i) out << (i ? ", " : "") << items[i];
        out << (items.empty() ? "}" : " }") << "\n";
    };
    block("input", Role::input);
    block("aux", Role::aux);
    block("builtin", Role::builtin);
    if (!p.constants.empty()) {
        bool plain = true;
        for (size_t i = 0; i < p.constants.size(); ++i)
            if (p.constants[i].index != static_cast<int>(i)) plain = false;
        out << "const ";
        for (size_t i = 0; i < p.constants.size(); ++i) {
            out << (i ? ", " : "") << p.constants[i].name;
            if (!plain) out << " = " << (p.constants[i].index < 0 ? "last" : std::to_string(p.constants[i].index));
        }
        out << "\n";
    }
    out << "query " << p.query << "\n";
    static const char* kinds[] = {"empty", "oracle", "table", "builtin"};
    out << "init " << kinds[static_cast<int>(p.init.kind)];
    if (p.init.kind == InitSpec::Kind::builtin) out << " " << p.init.builtin_name;
    if (!p.init.facts.empty()) {
        out << " {";
        for (size_t i = 0; i < p.init.facts.size(); ++i) {
            const InitFact& f = p.init.facts[i];
            out << (i ? ", " : " ") << f.symbol;
            if (!f.args.empty()) {
                out << "(";
                for (size_t j = 0; j < f.args.size(); ++j) out << (j ? ", " : "") << print(f.args[j]);
                out << ")";
            }
            if (f.value) out << " = " << print(f.value);
        }
        out << " }";
    }
    out << "\n";
    if (!p.init.derive.empty()) {
        out << "derive {\n";
        for (const InitDerive& d : p.init.derive) out << "  " << header(d.target, d.vars) << body(d.formula, d.term) << "\n";
        out << "}\n";
    }
    if (p.default_frame) out << "default frame\n";
    for (const Trigger& trig : p.triggers()) {
        std::vector<const UpdateRule*> shown;
        std::vector<std::string> params;
        for (int id : p.aux_ids()) {
            auto it = p.rules.find({sch.at(id).name, trig});
            if (it == p.rules.end()) continue;
            if (params.empty()) params = it->second.params;
            if (p.default_frame && it->second.is_frame && canonical_frame_vars(it->second.vars)) continue;
            shown.push_back(&it->second);
        }
        if (shown.empty() && p.default_frame) continue;
        if (params.empty()) {
            int arity = sch.at(trig.relation).arity;
            for (int i = 1; i <= arity; ++i) params.push_back("u" + std::to_string(i));
        }
        out << "\non " << (trig.kind == Modification::Kind::ins ? "insert " : "delete ") << trig.relation << "("
            << [&] {
                   std::string s;
                   for (size_t i = 0; i < params.size(); ++i) s += (i ? ", " : "") + params[i];
                   return s;
               }()
            << "):\n";
        for (const UpdateRule* r : shown) out << "  " << header(r->target, r->vars) << body(r->formula, r->term) << "\n";
    }
    return out.str();
}

}  // namespace dynlab
