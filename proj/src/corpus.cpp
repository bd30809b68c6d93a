#include "dynlab/corpus.hpp"

#include <map>

namespace dynlab {

namespace corpus_data {
struct File {
    const char* name;
    bool extra;
    const char* text;
};
const std::vector<File>& files();
}  // namespace corpus_data

namespace {

struct Meta {
    const char* oracle;
    const char* guard;
};

const std::map<std::string, Meta>& metadata() {
    static const std::map<std::string, Meta> m = {
        {"non-empty-set", {"nonemptyset", "none"}},
        {"st-twopath-binary", {"st-twopath", "none"}},
        {"s-twopath-ternary", {"s-twopath", "none"}},
        {"reach-1layer-qf", {"st-reach", "1-layered"}},
        {"st-twopath-verbatim-list", {"st-twopath", "none"}},
        {"unary-twopath", {"st-reach", "1-layered"}},
        {"conj-nonemptyset", {"nonemptyset", "none"}},
        {"reach-binary-strawman", {"st-reach", "2-layered"}},
        {"copy-init", {"nonemptyset", "none"}},
        {"mark-first-init", {"nonemptyset", "none"}},
    };
    return m;
}

const std::vector<std::string> main_order = {"non-empty-set", "st-twopath-binary", "s-twopath-ternary",
                                             "reach-1layer-qf"};

}  // namespace

ClassTags class_tags(const DynamicProgram& p) {
    ProgramClass c = classify_program(p);
    ClassTags t;
    t.dynprop = !c.has_functions;
    t.arity = c.max_aux_arity;
    t.negation_free = c.negation_free;
    t.conjunctive = c.conjunctive;
    t.unary_builtin_functions = c.max_builtin_function_arity <= 1;
    t.nesting_depth = c.nesting_depth;
    return t;
}

std::string to_string(const ClassTags& t) {
    std::string out = t.dynprop ? "DynProp" : "DynQF";
    out += ", max aux arity " + std::to_string(t.arity);
    out += std::string(", negation-free: ") + (t.negation_free ? "yes" : "no");
    out += std::string(", conjunctive: ") + (t.conjunctive ? "yes" : "no");
    out += ", nesting depth " + std::to_string(t.nesting_depth);
    if (!t.dynprop) out += std::string(", builtin functions unary: ") + (t.unary_builtin_functions ? "yes" : "no");
    return out;
}

std::vector<std::string> corpus_names(bool include_extra) {
    std::vector<std::string> out = main_order;
    if (include_extra)
        for (const auto& f : corpus_data::files())
            if (f.extra) out.push_back(f.name);
    return out;
}

std::string corpus_source(const std::string& name) {
    for (const auto& f : corpus_data::files())
        if (name == f.name) return f.text;
    throw Error(ErrorKind::precondition, "unknown corpus program '" + name + "'");
}

CorpusEntry builtin_program(const std::string& name) {
    CorpusEntry e;
    e.name = name;
    e.source = corpus_source(name);
    for (const auto& f : corpus_data::files())
        if (name == f.name) e.extra = f.extra;
    e.program = parse_program(e.source, name + ".dynp");
    auto it = metadata().find(name);
    if (it != metadata().end()) {
        e.oracle = it->second.oracle;
        e.guard = it->second.guard;
    } else {
        e.guard = "none";
    }
    e.tags = class_tags(e.program);
    return e;
}

}  // namespace dynlab
