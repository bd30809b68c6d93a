#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "dynlab/core.hpp"
#include "dynlab/program.hpp"

namespace testing {

using namespace dynlab;

inline SchemaPtr make_schema(const std::vector<Symbol>& syms) {
    auto s = std::make_shared<Schema>();
    for (const auto& sym : syms) s->add(sym);
    return s;
}

inline Symbol rel(const std::string& name, int arity, Role role = Role::input) {
    return Symbol{name, SymbolKind::relation, role, arity};
}
inline Symbol fun(const std::string& name, int arity, Role role = Role::aux) {
    return Symbol{name, SymbolKind::function, role, arity};
}
inline Symbol cnst(const std::string& name) { return Symbol{name, SymbolKind::constant, Role::builtin, 0}; }

inline Modification ins(const std::string& r, Tuple t) { return {Modification::Kind::ins, r, std::move(t)}; }
inline Modification del(const std::string& r, Tuple t) { return {Modification::Kind::del, r, std::move(t)}; }

// Random relational content over every relation symbol.
inline void randomize_relations(State& s, std::mt19937_64& rng, double density = 0.3) {
    std::bernoulli_distribution coin(density);
    const Schema& sch = s.schema();
    for (int id = 0; id < sch.size(); ++id) {
        const Symbol& sym = sch.at(id);
        if (sym.kind != SymbolKind::relation) continue;
        for (int c = 0; c < s.table_size(sym.arity); ++c) s.set(id, s.decode(c, sym.arity), coin(rng));
    }
}

inline void randomize_functions(State& s, std::mt19937_64& rng) {
    const Schema& sch = s.schema();
    std::uniform_int_distribution<Element> pick(0, s.domain_size() - 1);
    for (int id = 0; id < sch.size(); ++id) {
        const Symbol& sym = sch.at(id);
        if (sym.kind != SymbolKind::function) continue;
        for (int c = 0; c < s.table_size(sym.arity); ++c) s.set_fun(id, s.decode(c, sym.arity), pick(rng));
    }
}

inline std::vector<Element> random_permutation(int n, std::mt19937_64& rng) {
    std::vector<Element> pi(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) pi[i] = i;
    std::shuffle(pi.begin(), pi.end(), rng);
    return pi;
}

}  // namespace testing
