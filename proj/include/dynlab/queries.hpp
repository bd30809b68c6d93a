#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dynlab/core.hpp"

namespace dynlab {

// Schema {E/2 input} plus constants s and/or t.
SchemaPtr graph_schema(bool with_s, bool with_t);

bool oracle_st_reach(const State& g);
bool oracle_nonemptyset(const State& db);
bool oracle_st_twopath(const State& g);
bool oracle_s_twopath(const State& g);
// A k-set where every unordered pair is joined by an edge in some direction.
bool oracle_k_clique(const State& g, int k);
// Edge direction ignored; a self-loop rules out every coloring.
bool oracle_k_colorability(const State& g, int k);

using Oracle = std::function<bool(const State&)>;
// Names: nonemptyset, st-reach, st-twopath, s-twopath, clique:K, colorable:K.
Oracle find_oracle(const std::string& name);
std::vector<std::string> oracle_names();

// Admissible input databases for a check: none, 1-layered, 2-layered,
// no-self-loops. Layers are read off element ids: the non-constant
// elements in increasing order, split into equal halves for 2 layers.
using Guard = std::function<bool(const State&)>;
Guard find_guard(const std::string& name);
std::vector<std::string> guard_names();

struct LayeredSpec {
    int k = 1;
    std::vector<int> sizes;
    bool with_st = true;
    int node_count() const;
    // Node id of the j-th element (0-based) of layer i (1-based).
    Element node(int layer, int j) const;
    // Layer of a node: 0 for s, k+1 for t, 1..k otherwise.
    int layer_of(Element v) const;
};

using Edge = std::pair<Element, Element>;

// s = 0, layers in order, t = last.
State gen_layered(const LayeredSpec& spec, const std::vector<Edge>& edges);
// Every edge the layer discipline allows.
std::vector<Edge> layered_complete_edges(const LayeredSpec& spec);
bool respects_layers(const LayeredSpec& spec, const State& g);

// Merges t into s; the result has only the constant s and drops node t.
State reduce_identify_st(const State& g, const LayeredSpec& spec);
// Adds `copies` fresh m-cliques, each joined both ways to every original node.
State reduce_tensor_clique(const State& g, int m, int copies = 1);

}  // namespace dynlab
