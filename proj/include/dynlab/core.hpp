#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace dynlab {

using Element = int;
using Tuple = std::vector<Element>;

enum class ErrorKind {
    schema,
    domain,
    precondition,
    not_closed,
    parse,
    unsupported,
    resource,
    honesty,
    program,
};

std::string to_string(ErrorKind k);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

enum class SymbolKind { relation, function, constant };
enum class Role { input, aux, builtin };

std::string to_string(SymbolKind k);
std::string to_string(Role r);

struct Symbol {
    std::string name;
    SymbolKind kind = SymbolKind::relation;
    Role role = Role::aux;
    int arity = 0;
    bool operator==(const Symbol&) const = default;
};

class Schema {
public:
    // Throws Error(schema) on duplicate names, non-relational input
    // symbols, or constants with nonzero arity.
    int add(Symbol sym);
    int add_relation(const std::string& name, int arity, Role role);
    int add_function(const std::string& name, int arity, Role role);
    int add_constant(const std::string& name);

    std::optional<int> find(std::string_view name) const;
    int id(std::string_view name) const;
    const Symbol& at(int id) const { return symbols_.at(static_cast<size_t>(id)); }
    const Symbol& at(std::string_view name) const { return at(id(name)); }
    bool has(std::string_view name) const { return find(name).has_value(); }
    int size() const { return static_cast<int>(symbols_.size()); }
    const std::vector<Symbol>& symbols() const { return symbols_; }

    std::vector<int> ids(Role role, SymbolKind kind) const;
    std::vector<int> ids_of_kind(SymbolKind kind) const;
    int max_relation_arity() const;
    int max_arity(Role role) const;

    bool operator==(const Schema& other) const { return symbols_ == other.symbols_; }

private:
    std::vector<Symbol> symbols_;
    std::map<std::string, int, std::less<>> index_;
};

using SchemaPtr = std::shared_ptr<const Schema>;

struct Modification {
    enum class Kind { ins, del };
    Kind kind = Kind::ins;
    std::string relation;
    Tuple tuple;
    bool operator==(const Modification&) const = default;
    auto operator<=>(const Modification&) const = default;
};

std::string to_string(const Modification& m);

// A finite structure over a contiguous domain 0..n-1. Relations and
// functions are stored as dense tables indexed by the lexicographic code
// of their argument tuple, so equality is structural.
class State {
public:
    State() = default;
    State(SchemaPtr schema, int domain_size);

    int domain_size() const { return n_; }
    const Schema& schema() const { return *schema_; }
    const SchemaPtr& schema_ptr() const { return schema_; }

    int code(const Tuple& tup) const;
    Tuple decode(int code, int arity) const;
    int table_size(int arity) const;

    bool holds(int rel, const Tuple& tup) const;
    bool holds_code(int rel, int code) const { return tables_[rel][code] != 0; }
    void set(int rel, const Tuple& tup, bool value);
    void clear(int sym);

    Element fun(int f, const Tuple& args) const;
    void set_fun(int f, const Tuple& args, Element value);

    Element constant(int c) const { return tables_[c][0]; }
    void set_constant(int c, Element value);

    std::vector<int>& table(int sym) { return tables_[sym]; }
    const std::vector<int>& table(int sym) const { return tables_[sym]; }

    std::vector<Tuple> tuples(int rel) const;
    std::vector<Element> constant_values() const;

    bool operator==(const State& other) const;
    // Compact binary key of the full interpretation, for memo tables.
    std::string key() const;
    std::string key_of(Role role) const;

private:
    SchemaPtr schema_;
    int n_ = 0;
    std::vector<std::vector<int>> tables_;
};

// Input-level update: inserts or removes a tuple from an input relation.
State apply_input_modification(const State& db, const Modification& m);
void check_modification(const State& db, const Modification& m);

struct SubState {
    State state;
    std::vector<Element> elements;  // elements[i] = original id of new element i
};

// Restriction to a subset that contains every constant. With
// relation_only, function symbols are dropped from the schema instead of
// requiring closure.
SubState restrict(const State& s, const std::vector<Element>& subset, bool relation_only = false);

// True iff pi (total map of domain(s) into domain(t)) is an isomorphism.
bool check_isomorphism(const State& s, const State& t, const std::vector<Element>& pi);

// Image of s under a permutation of its domain.
State permute(const State& s, const std::vector<Element>& pi);

struct AtomicType {
    int arity = 0;
    std::vector<std::string> facts;  // sorted, canonical
    bool operator==(const AtomicType&) const = default;
    auto operator<=>(const AtomicType&) const = default;
    bool contains(const std::string& fact) const;
    std::string to_string() const;
};

// sigma lists relation symbol ids; constants always appear as terms.
AtomicType atomic_type(const State& s, const Tuple& tup, const std::vector<int>& sigma);
std::vector<int> all_relations(const Schema& schema);
std::vector<int> relations_with_role(const Schema& schema, Role role);

bool is_homogeneous(const State& s, const std::vector<Element>& order,
                    const std::vector<Element>& subset, int up_to_arity,
                    const Tuple& anchor = {});

std::optional<std::vector<Element>> find_homogeneous_subset(const State& s,
                                                            const std::vector<Element>& order,
                                                            int n, const Tuple& anchor,
                                                            const std::vector<int>& sigma);
std::optional<std::vector<Element>> find_homogeneous_subset(const State& s,
                                                            const std::vector<Element>& order,
                                                            int n, const Tuple& anchor = {});

nlohmann::json to_json(const State& s);
nlohmann::json to_json(const Modification& m);
Modification modification_from_json(const nlohmann::json& j);
// Reads a state whose schema is already known.
State state_from_json(const nlohmann::json& j, SchemaPtr schema);

}  // namespace dynlab
