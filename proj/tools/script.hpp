#pragma once

#include <map>
#include <string>
#include <vector>

#include "dynlab/program.hpp"

namespace dynlab {

// A modification script:
//   domain 4                                  (optional)
//   graph { nodes 5; const s=0 t=4; edges (0,1) (1,4) }
//   db { nodes 3; U(0) R(1,2) }               (any input relation)
//   ins U(a)
//   del E(0, 1)
// Elements are numbers, constant names, or free names bound to the
// lowest unused non-constant ids in order of appearance.
struct Script {
    State db;
    std::vector<Modification> seq;
    std::map<std::string, Element> names;
};

Script parse_script(const std::string& text, const DynamicProgram& p, const std::string& origin = "<script>");

}  // namespace dynlab
