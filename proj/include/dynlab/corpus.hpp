#pragma once

#include <string>
#include <vector>

#include "dynlab/program.hpp"

namespace dynlab {

struct ClassTags {
    bool dynprop = true;   // no function symbols at all
    bool dynqf = true;     // quantifier-free, always true here
    int arity = 0;         // max aux arity
    bool negation_free = true;
    bool conjunctive = true;
    bool unary_builtin_functions = true;
    int nesting_depth = 0;
};

ClassTags class_tags(const DynamicProgram& p);
std::string to_string(const ClassTags& t);

struct CorpusEntry {
    std::string name;
    std::string source;
    DynamicProgram program;
    std::string oracle;  // empty when the query is not Boolean
    std::string guard;
    ClassTags tags;
    bool extra = false;
};

// The four main programs, then (when asked) the auxiliary ones.
std::vector<std::string> corpus_names(bool include_extra = false);
CorpusEntry builtin_program(const std::string& name);
std::string corpus_source(const std::string& name);

}  // namespace dynlab
