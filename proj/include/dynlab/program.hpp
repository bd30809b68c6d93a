#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dynlab/core.hpp"
#include "dynlab/formulas.hpp"

namespace dynlab {

struct Trigger {
    Modification::Kind kind = Modification::Kind::ins;
    std::string relation;
    bool operator==(const Trigger&) const = default;
    auto operator<=>(const Trigger&) const = default;
};

std::string to_string(const Trigger& t);

struct UpdateRule {
    std::string target;
    Trigger trigger;
    std::vector<std::string> params;  // bound to the modified tuple
    std::vector<std::string> vars;    // bound to the updated tuple
    FormulaPtr formula;               // relation targets
    TermPtr term;                     // function targets
    bool is_frame = false;            // synthesized by `default frame`
};

bool equal(const UpdateRule& a, const UpdateRule& b);

// A fact of an init table: R(args) or f(args) = value. Arguments are
// closed terms (constants or element literals).
struct InitFact {
    std::string symbol;
    std::vector<TermPtr> args;
    TermPtr value;  // functions only
};

// A derived definition evaluated after facts, in order.
struct InitDerive {
    std::string target;
    std::vector<std::string> vars;
    FormulaPtr formula;
    TermPtr term;
};

struct InitSpec {
    enum class Kind { empty, oracle, table, builtin };
    Kind kind = Kind::empty;
    std::string builtin_name;
    std::vector<InitFact> facts;
    std::vector<InitDerive> derive;
};

// Where a constant sits in a fresh domain: an index, or -1 for the last element.
struct ConstPlacement {
    std::string name;
    int index = 0;
    bool operator==(const ConstPlacement&) const = default;
};

struct SourcePos {
    int line = 0;
    int column = 0;
};

class CompiledProgram;

class DynamicProgram {
public:
    std::string name;
    SchemaPtr schema;
    std::string query;
    InitSpec init;
    bool default_frame = false;
    std::vector<ConstPlacement> constants;
    std::map<std::string, std::string> builtin_interp;  // builtin symbol -> interpretation name
    std::map<std::pair<std::string, Trigger>, UpdateRule> rules;

    // Checks coverage and well-formedness, then compiles the rules.
    // Missing (symbol, trigger) pairs get frame rules when default_frame
    // is set and are an error otherwise.
    void finalize();
    bool finalized() const { return compiled_ != nullptr; }
    const CompiledProgram& compiled() const;

    std::vector<Trigger> triggers() const;
    const UpdateRule& rule(const std::string& target, const Trigger& t) const;
    std::vector<int> aux_ids() const;

private:
    std::shared_ptr<const CompiledProgram> compiled_;
};

bool equal(const DynamicProgram& a, const DynamicProgram& b);

// Input-only state for a program: domain, constants placed, input relations empty.
State make_input_db(const DynamicProgram& p, int domain_size);

State apply(const DynamicProgram& p, const State& s, const Modification& m);
bool query_value(const DynamicProgram& p, const State& s);
std::vector<State> run(const DynamicProgram& p, const State& s0, const std::vector<Modification>& seq,
                       bool honest_only);
bool is_honest(const State& s, const Modification& m);

// Builds the program state for an input database (domain, constants, input
// relations taken from `input`).
State init_state(const DynamicProgram& p, const State& input);

using BuiltinInitializer = std::function<void(const DynamicProgram&, State&)>;
void register_initializer(const std::string& name, BuiltinInitializer fn);
bool has_initializer(const std::string& name);

// Interpretations for builtin symbols: succ, pred (clamped), lt, le, min, max.
void interpret_builtin(const std::string& interp, int sym, State& s);

struct InvarianceResult {
    bool invariant = true;
    size_t permutations_checked = 0;
    std::vector<Element> witness;  // a permutation breaking invariance
};

// Exhaustive over all permutations when domain <= exhaustive_cap, else
// `samples` seeded random permutations.
InvarianceResult is_invariant_init(const DynamicProgram& p, const State& input, int exhaustive_cap = 6,
                                   size_t samples = 2000, uint64_t seed = 1);

DynamicProgram eliminate_repeated_variables(const DynamicProgram& p);
DynamicProgram relations_to_functions(const DynamicProgram& p);

struct DepGraph {
    std::vector<std::string> nodes;
    std::set<std::pair<int, int>> edges;
    bool has_edge(const std::string& a, const std::string& b) const;
    std::string to_dot(const std::string& graph_name) const;
};

DepGraph dependency_graph(const DynamicProgram& p, bool deletions_only);
std::map<std::string, std::optional<int>> deletion_depth(const DynamicProgram& p);

struct ProgramClass {
    int max_aux_arity = 0;
    int max_builtin_function_arity = 0;
    bool has_aux_functions = false;
    bool has_functions = false;
    bool negation_free = true;
    bool conjunctive = true;
    bool repeated_vars = false;
    int nesting_depth = 0;
};
ProgramClass classify_program(const DynamicProgram& p);

// DSL
DynamicProgram parse_program(const std::string& text, const std::string& origin = "<input>");
std::string print_program(const DynamicProgram& p);

// Parses a formula or term against a program's schema with the given
// variables in scope (used by tests and the CLI).
FormulaPtr parse_formula(const std::string& text, const Schema& schema, const std::vector<std::string>& vars);
TermPtr parse_term(const std::string& text, const Schema& schema, const std::vector<std::string>& vars);

class ParseError : public Error {
public:
    ParseError(const std::string& origin, SourcePos pos, const std::string& msg);
    SourcePos pos() const { return pos_; }

private:
    SourcePos pos_;
};

}  // namespace dynlab
