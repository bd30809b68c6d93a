#include "script.hpp"

#include <cctype>
#include <optional>
#include <set>

namespace dynlab {
namespace {

struct Tok {
    enum Kind { ident, number, punct, end } kind = end;
    std::string text;
    SourcePos pos;
};

std::vector<Tok> lex(const std::string& src, const std::string& origin) {
    std::vector<Tok> out;
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
        } else if (c == '#') {
            while (i < src.size() && src[i] != '\n') advance(1);
        } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t j = i;
            while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_' || src[j] == '-'))
                ++j;
            out.push_back({Tok::ident, src.substr(i, j - i), {line, col}});
            advance(j - i);
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            out.push_back({Tok::number, src.substr(i, j - i), {line, col}});
            advance(j - i);
        } else if (std::string("(),;{}=").find(c) != std::string::npos) {
            out.push_back({Tok::punct, std::string(1, c), {line, col}});
            advance(1);
        } else {
            throw ParseError(origin, {line, col}, std::string("unexpected character '") + c + "'");
        }
    }
    out.push_back({Tok::end, "", {line, col}});
    return out;
}

struct Ref {
    std::string text;
    bool numeric = false;
    SourcePos pos;
};

struct RawAtom {
    std::string relation;
    std::vector<Ref> args;
    SourcePos pos;
    Modification::Kind kind = Modification::Kind::ins;
};

class ScriptParser {
public:
    ScriptParser(const std::string& text, const DynamicProgram& p, const std::string& origin)
        : toks_(lex(text, origin)), p_(p), origin_(origin) {}

    Script parse() {
        while (peek().kind != Tok::end) item();
        return resolve();
    }

private:
    std::vector<Tok> toks_;
    size_t at_ = 0;
    const DynamicProgram& p_;
    std::string origin_;
    std::optional<int> nodes_;
    std::vector<std::pair<std::string, Ref>> consts_;
    std::vector<RawAtom> facts_, mods_;

    const Tok& peek() const { return toks_[at_]; }
    [[noreturn]] void fail(const Tok& t, const std::string& msg) const { throw ParseError(origin_, t.pos, msg); }
    const Tok& take() { return toks_[at_++]; }
    bool accept(const std::string& punct) {
        if (peek().kind == Tok::punct && peek().text == punct) {
            ++at_;
            return true;
        }
        return false;
    }
    void expect(const std::string& punct) {
        if (!accept(punct)) fail(peek(), "expected '" + punct + "'");
    }
    std::string ident() {
        if (peek().kind != Tok::ident) fail(peek(), "expected a name");
        return take().text;
    }
    int number() {
        if (peek().kind != Tok::number) fail(peek(), "expected a number");
        return std::stoi(take().text);
    }
    Ref ref() {
        const Tok& t = peek();
        if (t.kind != Tok::ident && t.kind != Tok::number) fail(t, "expected an element");
        take();
        return Ref{t.text, t.kind == Tok::number, t.pos};
    }
    RawAtom atom(std::string rel, SourcePos pos) {
        RawAtom a{std::move(rel), {}, pos};
        expect("(");
        if (!accept(")")) {
            do a.args.push_back(ref());
            while (accept(","));
            expect(")");
        }
        return a;
    }

    void item() {
        const Tok& t = peek();
        if (t.kind != Tok::ident) fail(t, "expected 'ins', 'del', 'domain', 'graph' or 'db'");
        std::string kw = take().text;
        if (kw == "domain") {
            nodes_ = number();
        } else if (kw == "ins" || kw == "del") {
            SourcePos pos = peek().pos;
            RawAtom a = atom(ident(), pos);
            a.kind = kw == "ins" ? Modification::Kind::ins : Modification::Kind::del;
            mods_.push_back(std::move(a));
        } else if (kw == "graph" || kw == "db") {
            expect("{");
            while (!accept("}")) {
                if (accept(";")) continue;
                const Tok& s = peek();
                std::string word = ident();
                if (word == "nodes") {
                    nodes_ = number();
                } else if (word == "const") {
                    while (peek().kind == Tok::ident && toks_[at_ + 1].kind == Tok::punct && toks_[at_ + 1].text == "=") {
                        std::string name = ident();
                        expect("=");
                        consts_.emplace_back(name, ref());
                    }
                } else if (word == "edges") {
                    while (peek().kind == Tok::punct && peek().text == "(") {
                        SourcePos pos = peek().pos;
                        expect("(");
                        RawAtom a{"E", {}, pos};
                        a.args.push_back(ref());
                        expect(",");
                        a.args.push_back(ref());
                        expect(")");
                        facts_.push_back(std::move(a));
                    }
                } else if (peek().kind == Tok::punct && peek().text == "(") {
                    facts_.push_back(atom(word, s.pos));
                } else {
                    fail(s, "unknown statement '" + word + "'");
                }
            }
        } else {
            fail(t, "unknown script command '" + kw + "'");
        }
    }

    Script resolve() {
        const Schema& sch = *p_.schema;
        std::set<std::string> const_names;
        for (int c : sch.ids_of_kind(SymbolKind::constant)) const_names.insert(sch.at(c).name);

        std::vector<const Ref*> refs;
        for (auto* list : {&facts_, &mods_})
            for (const auto& a : *list)
                for (const auto& r : a.args) refs.push_back(&r);
        for (const auto& [name, r] : consts_) {
            if (!const_names.count(name)) throw ParseError(origin_, r.pos, "unknown constant '" + name + "'");
            refs.push_back(&r);
        }
        std::set<std::string> free_names;
        int max_id = -1;
        for (const Ref* r : refs) {
            if (r->numeric)
                max_id = std::max(max_id, std::stoi(r->text));
            else if (!const_names.count(r->text))
                free_names.insert(r->text);
        }
        int n = nodes_.value_or(std::max({max_id + 1, static_cast<int>(free_names.size() + const_names.size()), 1}));

        Script sc;
        sc.db = make_input_db(p_, n);
        auto element = [&](const Ref& r) -> Element {
            if (r.numeric) {
                int v = std::stoi(r.text);
                if (v >= n) throw ParseError(origin_, r.pos, "element " + r.text + " outside a domain of size " + std::to_string(n));
                return v;
            }
            if (const_names.count(r.text)) return sc.db.constant(sch.id(r.text));
            auto it = sc.names.find(r.text);
            if (it == sc.names.end()) throw ParseError(origin_, r.pos, "unbound element '" + r.text + "'");
            return it->second;
        };
        for (const auto& [name, r] : consts_) {
            if (!r.numeric) throw ParseError(origin_, r.pos, "constant placement needs an element id");
            sc.db.set_constant(sch.id(name), element(r));
        }
        std::set<Element> taken;
        for (Element v : sc.db.constant_values()) taken.insert(v);
        for (const Ref* r : refs)
            if (r->numeric) taken.insert(std::stoi(r->text));
        Element next = 0;
        for (const Ref* r : refs) {
            if (r->numeric || const_names.count(r->text) || sc.names.count(r->text)) continue;
            while (next < n && taken.count(next)) ++next;
            if (next >= n) throw ParseError(origin_, r->pos, "no free element left for '" + r->text + "'");
            sc.names[r->text] = next;
            taken.insert(next);
        }
        auto resolve_atom = [&](const RawAtom& a) {
            auto id = sch.find(a.relation);
            if (!id || sch.at(*id).role != Role::input || sch.at(*id).kind != SymbolKind::relation)
                throw ParseError(origin_, a.pos, "'" + a.relation + "' is not an input relation");
            if (static_cast<int>(a.args.size()) != sch.at(*id).arity)
                throw ParseError(origin_, a.pos, "'" + a.relation + "' expects " + std::to_string(sch.at(*id).arity) +
                                                     " arguments");
            Tuple t;
            for (const auto& r : a.args) t.push_back(element(r));
            return Modification{a.kind, a.relation, t};
        };
        for (const auto& f : facts_) {
            Modification m = resolve_atom(f);
            sc.db.set(sch.id(m.relation), m.tuple, true);
        }
        for (const auto& m : mods_) sc.seq.push_back(resolve_atom(m));
        return sc;
    }
};

}  // namespace

Script parse_script(const std::string& text, const DynamicProgram& p, const std::string& origin) {
    return ScriptParser(text, p, origin).parse();
}

}  // namespace dynlab
