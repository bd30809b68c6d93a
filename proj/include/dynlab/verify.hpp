#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dynlab/core.hpp"
#include "dynlab/formulas.hpp"
#include "dynlab/program.hpp"
#include "dynlab/queries.hpp"

namespace dynlab {

struct CheckConfig {
    enum class Mode { exhaustive, random };
    int domain_size = 3;
    int max_len = 4;
    Mode mode = Mode::exhaustive;
    size_t samples = 1000;
    uint64_t seed = 1;
    bool honest_only = true;
    std::string guard = "none";
    Guard instance_guard;  // overrides `guard` when set
    double cap = 2e8;      // bound on explored sequences in exhaustive mode
    bool cap_override = false;
    int jobs = 1;
    std::vector<Modification> initial_tuples;  // inserted before initialization
};

struct Counterexample {
    std::string program;
    State initial_db;  // input database handed to the initializer
    std::vector<Modification> seq;
    size_t step = 0;  // 0 = right after initialization
    Tuple query_tuple;  // for non-Boolean queries: the first tuple that differs
    bool expected = false;
    bool produced = false;
    std::string trace_digest;
    bool validated = false;

    nlohmann::json to_json() const;
};

Counterexample counterexample_from_json(const nlohmann::json& j, SchemaPtr schema);

// Replays the counterexample and checks that the recorded values come back.
// Records the trace digest on success.
bool validate(const DynamicProgram& p, const Oracle& oracle, Counterexample& cx);
// Same, against a reference program instead of an oracle.
bool validate_against(const DynamicProgram& p, const DynamicProgram& reference, Counterexample& cx);

struct Verdict {
    enum class Status { ok, counterexample, inconclusive };
    Status status = Status::ok;
    std::string message;
    uint64_t seed = 0;
    size_t sequences = 0;  // sequences (or samples) examined
    size_t states = 0;     // distinct states visited
    std::optional<Counterexample> counterexample;
    nlohmann::json witness;  // property violations and driver details

    int exit_code() const;
    nlohmann::json to_json() const;
};

std::string to_string(Verdict::Status s);

Verdict check_maintenance(const DynamicProgram& p, const Oracle& oracle, const CheckConfig& cfg);
// Differential check: the query of `candidate` must match `reference` at every step.
Verdict check_equivalence(const DynamicProgram& reference, const DynamicProgram& candidate, const CheckConfig& cfg);

// Words over atomic types.
using TypeWord = std::vector<AtomicType>;

bool subsequence(const std::string& u, const std::string& v);
bool subsequence(const TypeWord& u, const TypeWord& v);
// Leftmost embedding positions (0-based) of u into v.
std::optional<std::vector<int>> embedding(const TypeWord& u, const TypeWord& v);

// 1-based (l, k) with l < k and words[l] a subsequence of words[k]; the
// least k, then the least l.
std::optional<std::pair<int, int>> higman_pair(const std::vector<std::string>& words);
std::optional<std::pair<int, int>> higman_pair(const std::vector<TypeWord>& words);

// Neighborhoods and similarity. Constants count as depth-0 terms.
std::vector<Element> neighborhood(const State& s, const std::vector<Element>& a, int k);

// pi as a vector over the domain of s (-1 outside N^k(a)), when the
// term-induced map is a relation-preserving bijection of neighborhoods.
std::optional<std::vector<Element>> k_similar(const State& s, const Tuple& a, const State& t, const Tuple& b, int k);

struct NeighborhoodVector {
    std::vector<std::string> terms;  // per component, in enumeration order
    std::vector<Element> values;
    EqualityType type;
};
NeighborhoodVector neighborhood_vector(const State& s, const Tuple& tup, int k, size_t cap = 100000);

// One instance of the substructure property.
enum class SubstructureOutcome { precondition_failed, holds, violated };
SubstructureOutcome substructure_check(const DynamicProgram& p, const State& s, const std::vector<Element>& a,
                                       const State& t, const std::vector<Element>& pi,
                                       const std::vector<Modification>& alpha);
// Functional variant: a and its image must be m-similar; outcomes are
// compared by 0-similarity.
SubstructureOutcome substructure_check_fun(const DynamicProgram& p, const State& s, const Tuple& a, const State& t,
                                           const Tuple& b, int m, const std::vector<Modification>& alpha);

struct SubstructureConfig {
    size_t samples = 500;
    uint64_t seed = 1;
    int domain_size = 5;
    int prefix_len = 6;   // length of the random runs producing the states
    int seq_len = 4;      // longest pi-respecting sequence
    std::string guard = "none";
    std::optional<int> similarity_depth;  // functional suite; default max seq len * depth + depth
};

Verdict substructure_property(const DynamicProgram& p, const SubstructureConfig& cfg, bool with_functions);

struct AttackResult {
    std::optional<Counterexample> counterexample;
    std::string diagnostic;
    nlohmann::json details;
};

// Star graph, suffix deletions, unary type words, Higman pair.
AttackResult attack_star_deletion(const DynamicProgram& p, int n);
// Subset-coding gadget for two layers with 2^n2 nodes in the first layer.
AttackResult attack_subset_gadget(const DynamicProgram& p, int n2);

using Violation = std::pair<std::string, Tuple>;
std::vector<Violation> diverse_saturation(const State& s, const DynamicProgram& p,
                                          const std::map<std::string, std::optional<int>>& depths,
                                          const std::string& u_symbol);
// Honest insertions fill U, then honest deletion-only sequences of up to
// `bound` deletions are searched.
AttackResult cq_adversary(const DynamicProgram& p, int bound);

// Init-related properties.
// Elements b that some aux function value hits although swapping b with
// another non-constant b' is an automorphism of the input. With
// allow_arguments, values equal to one of the function's own arguments
// are tolerated.
struct InitFuncHit {
    std::string function;
    Tuple args;
    Element value;
};
std::vector<InitFuncHit> initfunc_hits(const DynamicProgram& p, const State& input, bool allow_arguments);

// True iff all pairwise-distinct tuples over `elements` of length `arity`
// share one atomic type over sigma.
bool diverse_tuples_share_type(const State& s, const std::vector<Element>& elements, int arity,
                               const std::vector<int>& sigma);

}  // namespace dynlab
