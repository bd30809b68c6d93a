#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dynlab/corpus.hpp"
#include "dynlab/verify.hpp"
#include "script.hpp"

using namespace dynlab;
using json = nlohmann::json;

namespace {

constexpr int kExitError = 3;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::precondition, "cannot read '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// A path to a .dynp file, or the name of a corpus program.
DynamicProgram load_program(const std::string& arg) {
    if (std::filesystem::exists(arg)) return parse_program(read_file(arg), arg);
    for (const auto& name : corpus_names(true))
        if (name == arg) return builtin_program(name).program;
    throw Error(ErrorKind::precondition, "no program file or corpus entry named '" + arg + "'");
}

std::optional<CorpusEntry> corpus_entry(const DynamicProgram& p) {
    for (const auto& name : corpus_names(true))
        if (name == p.name) return builtin_program(name);
    return std::nullopt;
}

std::string tuple_text(const Tuple& t) {
    std::string s = "(";
    for (size_t i = 0; i < t.size(); ++i) s += (i ? "," : "") + std::to_string(t[i]);
    return s + ")";
}

std::string query_text(const DynamicProgram& p, const State& s) {
    int q = s.schema().id(p.query);
    if (s.schema().at(q).arity == 0) return p.query + "=" + (query_value(p, s) ? "true" : "false");
    std::string out = p.query + "={";
    bool first = true;
    for (const Tuple& t : s.tuples(q)) {
        out += (first ? "" : ", ") + tuple_text(t);
        first = false;
    }
    return out + "}";
}

void dump_aux(const DynamicProgram& p, const State& s) {
    const Schema& sch = *p.schema;
    for (int id : p.aux_ids()) {
        const Symbol& sym = sch.at(id);
        std::cout << "    " << sym.name << " = ";
        if (sym.kind == SymbolKind::relation) {
            std::cout << "{";
            bool first = true;
            for (const Tuple& t : s.tuples(id)) {
                std::cout << (first ? "" : ", ") << tuple_text(t);
                first = false;
            }
            std::cout << "}\n";
        } else {
            std::cout << "[";
            for (int c = 0; c < s.table_size(sym.arity); ++c) std::cout << (c ? " " : "") << s.table(id)[c];
            std::cout << "]\n";
        }
    }
}

Oracle oracle_for(const DynamicProgram& p, const std::string& flag) {
    if (!flag.empty()) return find_oracle(flag);
    if (auto e = corpus_entry(p); e && !e->oracle.empty()) return find_oracle(e->oracle);
    throw Error(ErrorKind::precondition, "no oracle given and none known for '" + p.name + "'");
}

int cmd_run(const std::string& prog_file, const std::string& script_file, bool dump, bool as_json, bool honest,
            const std::string& replay_file, const std::string& oracle_name) {
    DynamicProgram p = load_program(prog_file);
    if (!replay_file.empty()) {
        Counterexample cx = counterexample_from_json(json::parse(read_file(replay_file)), p.schema);
        std::optional<Oracle> oracle;
        if (!oracle_name.empty() || corpus_entry(p)) oracle = oracle_for(p, oracle_name);
        std::vector<Modification> prefix(cx.seq.begin(), cx.seq.begin() + static_cast<long>(std::min(cx.step, cx.seq.size())));
        auto trace = run(p, init_state(p, cx.initial_db), prefix, false);
        for (size_t i = 0; i < trace.size(); ++i) {
            std::cout << "step " << i << ": " << query_text(p, trace[i]);
            if (i > 0) std::cout << "  (" << to_string(prefix[i - 1]) << ")";
            std::cout << "\n";
        }
        bool got = query_value(p, trace.back());
        bool ok = got == cx.produced;
        if (oracle) ok = ok && (*oracle)(trace.back()) == cx.expected && got != cx.expected;
        std::cout << (ok ? "reproduced" : "not reproduced") << ": step " << cx.step << " expected "
                  << (cx.expected ? "true" : "false") << ", produced " << (got ? "true" : "false") << "\n";
        return ok ? 1 : 2;
    }
    Script sc = parse_script(read_file(script_file), p, script_file);
    State s = init_state(p, sc.db);
    std::vector<State> trace{s};
    for (size_t i = 0; i < sc.seq.size(); ++i) {
        if (honest && !is_honest(trace.back(), sc.seq[i]))
            throw Error(ErrorKind::honesty, "step " + std::to_string(i + 1) + ": dishonest " + to_string(sc.seq[i]));
        trace.push_back(apply(p, trace.back(), sc.seq[i]));
    }
    if (as_json) {
        json j;
        j["format"] = 1;
        j["program"] = p.name;
        j["names"] = sc.names;
        j["initial_db"] = to_json(sc.db);
        json steps = json::array();
        for (size_t i = 0; i < trace.size(); ++i) {
            json st;
            st["step"] = i;
            if (i > 0) st["modification"] = to_json(sc.seq[i - 1]);
            if (trace[i].schema().at(p.query).arity == 0) st["query"] = query_value(p, trace[i]);
            st["state"] = to_json(trace[i]);
            steps.push_back(st);
        }
        j["steps"] = steps;
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    for (size_t i = 0; i < trace.size(); ++i) {
        std::cout << "step " << i << ": " << query_text(p, trace[i]);
        if (i > 0) std::cout << "  (" << to_string(sc.seq[i - 1]) << ")";
        std::cout << "\n";
        if (dump) dump_aux(p, trace[i]);
    }
    return 0;
}

int cmd_verify(const std::string& prog_file, const std::string& oracle_name, CheckConfig cfg, bool random,
               bool as_json) {
    DynamicProgram p = load_program(prog_file);
    Oracle oracle = oracle_for(p, oracle_name);
    if (random) cfg.mode = CheckConfig::Mode::random;
    if (cfg.guard.empty()) {
        auto e = corpus_entry(p);
        cfg.guard = e ? e->guard : "none";
    }
    Verdict v = check_maintenance(p, oracle, cfg);
    if (as_json) {
        std::cout << v.to_json().dump(2) << "\n";
    } else {
        std::cout << "verdict: " << to_string(v.status) << "\n" << v.message << "\nseed: " << v.seed << "\n";
        if (v.counterexample) std::cout << v.counterexample->to_json().dump(2) << "\n";
    }
    return v.exit_code();
}

int cmd_attack(const std::string& prog_file, const std::string& driver, std::optional<int> size, bool as_json) {
    DynamicProgram p = load_program(prog_file);
    AttackResult r;
    if (driver == "star-deletion")
        r = attack_star_deletion(p, size.value_or(6));
    else if (driver == "subset-gadget")
        r = attack_subset_gadget(p, size.value_or(2));
    else if (driver == "cq-adversary")
        r = cq_adversary(p, size.value_or(4));
    else
        throw Error(ErrorKind::precondition, "unknown driver '" + driver + "'");
    if (as_json) {
        json j{{"format", 1}, {"driver", driver}, {"diagnostic", r.diagnostic}, {"details", r.details}};
        if (r.counterexample) j["counterexample"] = r.counterexample->to_json();
        std::cout << j.dump(2) << "\n";
    } else if (r.counterexample) {
        std::cout << "witness found: " << r.diagnostic << "\n" << r.counterexample->to_json().dump(2) << "\n";
    } else {
        std::cout << "none at this scale: " << r.diagnostic << "\n";
    }
    return r.counterexample ? 1 : 2;
}

int cmd_transform(const std::string& prog_file, const std::string& pass, const std::string& out_file, bool check,
                  int domain, int maxlen) {
    DynamicProgram p = load_program(prog_file);
    DynamicProgram q;
    if (pass == "dedup-vars")
        q = eliminate_repeated_variables(p);
    else if (pass == "rel2fun")
        q = relations_to_functions(p);
    else
        throw Error(ErrorKind::precondition, "unknown pass '" + pass + "'");
    std::ostream& notes = out_file.empty() ? std::cerr : std::cout;
    if (equal(p, q)) notes << "note: " << pass << " changed nothing; program passed through\n";
    std::string text = print_program(q);
    if (out_file.empty()) {
        std::cout << text;
    } else {
        std::ofstream(out_file) << text;
        notes << "wrote " << out_file << "\n";
    }
    if (!check) return 0;
    CheckConfig cfg;
    cfg.domain_size = domain;
    cfg.max_len = maxlen;
    Verdict v = check_equivalence(p, q, cfg);
    if (v.status == Verdict::Status::ok)
        notes << "check: query agrees with the original on all honest sequences of length <= " << maxlen
              << " over domain size " << domain << "\n";
    else
        notes << "check: " << v.message << "\n" << v.to_json().dump(2) << "\n";
    return v.exit_code();
}

int cmd_analyze(const std::string& prog_file, bool dot) {
    DynamicProgram p = load_program(prog_file);
    ProgramClass pc = classify_program(p);
    std::string bf = pc.max_builtin_function_arity == 0
                         ? (p.schema->ids(Role::builtin, SymbolKind::function).empty() ? "none" : "0-ary")
                         : pc.max_builtin_function_arity == 1 ? "unary"
                                                              : std::to_string(pc.max_builtin_function_arity) + "-ary";
    std::cout << "program " << p.name << "\n";
    std::cout << "max aux arity " << pc.max_aux_arity << ", builtin functions " << bf << ", nesting depth "
              << pc.nesting_depth << "\n";
    std::cout << "conjunctive: " << (pc.conjunctive ? "yes" : "no") << ", negation-free: "
              << (pc.negation_free ? "yes" : "no") << ", aux functions: " << (pc.has_aux_functions ? "yes" : "no")
              << ", repeated variables: " << (pc.repeated_vars ? "yes" : "no") << "\n";

    DepGraph full = dependency_graph(p, false), del = dependency_graph(p, true);
    auto print_edges = [](const DepGraph& g, const std::string& title) {
        std::cout << title << ":";
        if (g.edges.empty()) std::cout << " none";
        std::cout << "\n";
        for (const auto& [a, b] : g.edges) std::cout << "  " << g.nodes[a] << " -> " << g.nodes[b] << "\n";
    };
    print_edges(full, "dependencies");
    print_edges(del, "deletion dependencies");
    std::cout << "deletion depths:\n";
    for (const auto& [name, d] : deletion_depth(p))
        std::cout << "  " << name << ": " << (d ? std::to_string(*d) : "unreachable") << "\n";

    std::vector<bool> seen(full.nodes.size(), false);
    std::vector<int> stack;
    for (size_t i = 0; i < full.nodes.size(); ++i)
        if (full.nodes[i] == p.query) {
            seen[i] = true;
            stack.push_back(static_cast<int>(i));
        }
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (const auto& [a, b] : full.edges)
            if (a == v && !seen[b]) {
                seen[b] = true;
                stack.push_back(b);
            }
    }
    std::cout << "unreachable:";
    bool any = false;
    for (size_t i = 0; i < full.nodes.size(); ++i)
        if (!seen[i]) {
            std::cout << " " << full.nodes[i];
            any = true;
        }
    std::cout << (any ? "" : " none") << "\n";
    if (dot) std::cout << full.to_dot(p.name) << del.to_dot(p.name + "-deletions");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dynamic programs with quantifier-free updates: run, check, attack, transform"};
    app.require_subcommand(1);

    std::string prog, script, replay, oracle, out_file, pass, driver;
    bool dump = false, as_json = false, honest = false;

    auto* run_cmd = app.add_subcommand("run", "Run a modification script and print the query after every step");
    run_cmd->add_option("program", prog, "Program file or corpus name")->required();
    run_cmd->add_option("script", script, "Modification script");
    run_cmd->add_flag("--dump-aux", dump, "Print auxiliary data after every step");
    run_cmd->add_flag("--json", as_json, "Emit the trace as JSON");
    run_cmd->add_flag("--honest", honest, "Reject dishonest modifications");
    run_cmd->add_option("--replay", replay, "Replay a counterexample JSON file");
    run_cmd->add_option("--oracle", oracle, "Oracle used to confirm a replay");

    CheckConfig cfg;
    cfg.guard = "";
    bool exhaustive = false, random = false;
    auto* verify_cmd = app.add_subcommand("verify", "Check that a program maintains its query up to bounds");
    verify_cmd->add_option("program", prog, "Program file or corpus name")->required();
    verify_cmd->add_option("--oracle", oracle, "Oracle: nonemptyset, st-reach, st-twopath, s-twopath, clique:K, colorable:K");
    verify_cmd->add_option("--domain", cfg.domain_size, "Domain size")->capture_default_str();
    verify_cmd->add_option("--maxlen", cfg.max_len, "Longest modification sequence")->capture_default_str();
    auto* ex_flag = verify_cmd->add_flag("--exhaustive", exhaustive, "Enumerate all sequences (default)");
    verify_cmd->add_flag("--random", random, "Sample random sequences")->excludes(ex_flag);
    verify_cmd->add_option("--samples", cfg.samples, "Random samples")->capture_default_str();
    verify_cmd->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
    verify_cmd->add_flag("--honest", cfg.honest_only, "Only honest modifications");
    verify_cmd->add_option("--guard", cfg.guard, "Instance guard: none, 1-layered, 2-layered, no-self-loops");
    verify_cmd->add_option("--jobs", cfg.jobs, "Worker threads")->capture_default_str();
    verify_cmd->add_flag("--cap-override", cfg.cap_override, "Ignore the exhaustive search cap");
    verify_cmd->add_flag("--json", as_json, "Emit the verdict as JSON");

    std::optional<int> size;
    auto* attack_cmd = app.add_subcommand("attack", "Run a lower-bound witness search");
    attack_cmd->add_option("program", prog, "Program file or corpus name")->required();
    attack_cmd->add_option("--driver", driver, "star-deletion, subset-gadget or cq-adversary")->required();
    attack_cmd->add_option("--n", size, "Scale: layer size, gadget exponent, or deletion bound");
    attack_cmd->add_flag("--json", as_json, "Emit JSON");

    int domain = 4, maxlen = 5;
    bool check = false;
    auto* transform_cmd = app.add_subcommand("transform", "Rewrite a program");
    transform_cmd->add_option("program", prog, "Program file or corpus name")->required();
    transform_cmd->add_option("--pass", pass, "dedup-vars or rel2fun")->required();
    transform_cmd->add_option("-o,--output", out_file, "Output file (default stdout)");
    transform_cmd->add_flag("--check", check, "Compare the query with the original exhaustively");
    transform_cmd->add_option("--domain", domain, "Domain size for --check")->capture_default_str();
    transform_cmd->add_option("--maxlen", maxlen, "Sequence length for --check")->capture_default_str();

    bool dot = false;
    auto* analyze_cmd = app.add_subcommand("analyze", "Print class tags, dependency graphs and deletion depths");
    analyze_cmd->add_option("program", prog, "Program file or corpus name")->required();
    analyze_cmd->add_flag("--dot", dot, "Also print the graphs in DOT");

    std::string corpus_action, corpus_name;
    bool all = false;
    auto* corpus_cmd = app.add_subcommand("corpus", "List or print the built-in programs");
    corpus_cmd->add_option("action", corpus_action, "list or show")->required()->check(CLI::IsMember({"list", "show"}));
    corpus_cmd->add_option("name", corpus_name, "Program to show");
    corpus_cmd->add_flag("--all", all, "Include auxiliary programs");

    CLI11_PARSE(app, argc, argv);
    (void)exhaustive;

    try {
        if (*run_cmd) {
            if (script.empty() && replay.empty()) throw Error(ErrorKind::precondition, "run needs a script or --replay");
            return cmd_run(prog, script, dump, as_json, honest, replay, oracle);
        }
        if (*verify_cmd) return cmd_verify(prog, oracle, cfg, random, as_json);
        if (*attack_cmd) return cmd_attack(prog, driver, size, as_json);
        if (*transform_cmd) return cmd_transform(prog, pass, out_file, check, domain, maxlen);
        if (*analyze_cmd) return cmd_analyze(prog, dot);
        if (*corpus_cmd) {
            if (corpus_action == "list") {
                for (const auto& name : corpus_names(all)) {
                    auto e = builtin_program(name);
                    std::cout << name << "  [" << to_string(e.tags) << "]"
                              << (e.oracle.empty() ? "" : "  oracle " + e.oracle) << "\n";
                }
                return 0;
            }
            if (corpus_name.empty()) throw Error(ErrorKind::precondition, "corpus show needs a name");
            std::cout << corpus_source(corpus_name);
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        return e.kind() == ErrorKind::resource ? 2 : kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return 0;
}
