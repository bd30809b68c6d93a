#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dynlab/core.hpp"

namespace dynlab {

struct Term;
struct Formula;
using TermPtr = std::shared_ptr<const Term>;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Term {
    enum class Kind { var, constant, app, ite, element };
    Kind kind = Kind::var;
    std::string name;  // variable, constant or function symbol
    std::vector<TermPtr> args;
    FormulaPtr cond;   // ite only; args = {then, else}
    Element element = -1;  // literal element, allowed only in init sections
};

struct Formula {
    enum class Kind { truth, falsity, rel, eq, neg, conj, disj };
    Kind kind = Kind::truth;
    std::string name;  // relation symbol
    std::vector<TermPtr> terms;  // rel arguments, or the two sides of eq
    std::vector<FormulaPtr> kids;
};

namespace ast {
TermPtr var(const std::string& name);
TermPtr cnst(const std::string& name);
TermPtr app(const std::string& fn, std::vector<TermPtr> args);
TermPtr ite(FormulaPtr cond, TermPtr then_t, TermPtr else_t);
TermPtr elem(Element e);
FormulaPtr truth();
FormulaPtr falsity();
FormulaPtr rel(const std::string& name, std::vector<TermPtr> args);
FormulaPtr eq(TermPtr a, TermPtr b);
FormulaPtr neq(TermPtr a, TermPtr b);
FormulaPtr neg(FormulaPtr f);
FormulaPtr conj(FormulaPtr a, FormulaPtr b);
FormulaPtr disj(FormulaPtr a, FormulaPtr b);
FormulaPtr conj_all(const std::vector<FormulaPtr>& fs);
FormulaPtr disj_all(const std::vector<FormulaPtr>& fs);
}  // namespace ast

bool equal(const TermPtr& a, const TermPtr& b);
bool equal(const FormulaPtr& a, const FormulaPtr& b);

// Canonical printing with minimal parentheses (! binds tighter than &,
// which binds tighter than |; both binary connectives associate left).
std::string print(const TermPtr& t);
std::string print(const FormulaPtr& f);

using Assignment = std::map<std::string, Element>;

bool eval_formula(const FormulaPtr& f, const State& s, const Assignment& asg);
Element eval_term(const TermPtr& t, const State& s, const Assignment& asg);

int nesting_depth(const TermPtr& t);
int nesting_depth(const FormulaPtr& f);

struct SyntaxFlags {
    bool negation_free = true;
    bool conjunctive = true;
    bool repeated_vars_in_atom = false;
};
SyntaxFlags classify_syntax(const FormulaPtr& f);
// Flags of an update term: the conditions of its ite nodes are classified.
SyntaxFlags classify_syntax(const TermPtr& t);

struct EqualityType {
    std::vector<int> class_of;             // class index per position, classes numbered by least member
    std::vector<std::vector<int>> blocks;  // 0-based positions per class
    bool operator==(const EqualityType&) const = default;
    auto operator<=>(const EqualityType&) const = default;
    int classes() const { return static_cast<int>(blocks.size()); }
    std::string to_string() const;  // 1-based, e.g. {{1,2},{3}}
};

EqualityType equality_type_of(const Tuple& tup);
EqualityType equality_type_from_classes(const std::vector<int>& class_of);
// All equality types on n positions, in canonical order.
std::vector<EqualityType> all_equality_types(int n);

// Plain terms (no ite) of nesting depth <= k over vars and constants,
// ordered by depth, then function symbol name, then argument order.
std::vector<TermPtr> terms_up_to_depth(const Schema& schema, int k, const std::vector<std::string>& vars,
                                       size_t cap = 200000);

// Symbols mentioned anywhere inside.
void collect_symbols(const FormulaPtr& f, std::vector<std::string>& out);
void collect_symbols(const TermPtr& t, std::vector<std::string>& out);
void collect_vars(const FormulaPtr& f, std::vector<std::string>& out);
void collect_vars(const TermPtr& t, std::vector<std::string>& out);

// Rewriting helpers.
using VarMap = std::map<std::string, TermPtr>;
TermPtr substitute(const TermPtr& t, const VarMap& map);
FormulaPtr substitute(const FormulaPtr& f, const VarMap& map);

// Compiled evaluation: symbols resolved to ids, variables to slots.
class CompiledFormula;
class CompiledTerm;

struct CompileScope {
    const Schema* schema = nullptr;
    std::vector<std::string> vars;  // slot order
};

class Evaluator {
public:
    // Compiles against a schema; throws Error(schema) on unknown symbols,
    // arity mismatches, or unbound variables.
    static std::shared_ptr<const CompiledFormula> compile(const FormulaPtr& f, const CompileScope& scope);
    static std::shared_ptr<const CompiledTerm> compile(const TermPtr& t, const CompileScope& scope);
    static bool eval(const CompiledFormula& f, const State& s, const Element* slots);
    static Element eval(const CompiledTerm& t, const State& s, const Element* slots);
};

}  // namespace dynlab
