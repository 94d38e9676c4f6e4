#pragma once

#include <algorithm>
#include <cctype>
#include <concepts>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "resin/ast.hpp"
#include "resin/errors.hpp"
#include "resin/semiring.hpp"
#include "resin/typecheck.hpp"

namespace resin {

// Grounding turns a typed program into, per target, a propositional
// program over *source atoms* (declared signals plus virtual comparison
// atoms) and *derived atoms* (rule heads). Variables are substituted over
// the Herbrand universe (constants appearing anywhere in the program);
// ground comparisons that reference undeclared source atoms drop their
// rule. Only the target's derivation cone is kept, so signals that cannot
// influence the target never enter the model space.

// One side of a ground comparison: a number literal or a declared source.
struct ComparisonOperand {
    bool is_number = false;
    double number = 0.0;
    std::string source_key; // when !is_number
    std::string channel;
    SignalType dtype = SignalType::Number;
};

// A source atom of the ground program. Plain sources mirror their
// declaration; comparison atoms carry the recipe the runtime needs to
// coerce raw samples into a weight.
struct GroundSource {
    std::string key;
    SignalType dtype = SignalType::Probability;
    std::string channel;
    bool is_comparison = false;
    RelOp op = RelOp::Gt;
    ComparisonOperand lhs, rhs;
};

struct GroundRule {
    int head = -1;                // derived atom index
    std::vector<int> pos_sources; // source indices, sorted
    std::vector<int> neg_sources;
    std::vector<int> pos_derived; // derived indices, sorted
    std::vector<int> neg_derived;

    friend bool operator==(const GroundRule&, const GroundRule&) = default;
};

struct GroundProgram {
    std::string target_key;
    std::string target_channel;
    std::vector<GroundSource> sources;
    std::vector<std::string> derived;
    std::vector<GroundRule> rules;
    std::vector<int> stratum;  // per derived atom
    int target_derived = -1;   // index into derived, or
    int target_source = -1;    // index into sources when the target re-exports one
};

// Default cap on the enumerated model space: 2^24 assignments.
inline constexpr int kDefaultSourceLimit = 24;

namespace detail {

struct GroundAtomRef {
    enum class Kind { Derived, DeclaredSource, VirtualSource };
    bool negated = false;
    Kind kind = Kind::Derived;
    std::string key;      // Derived / DeclaredSource
    int virtual_idx = -1; // VirtualSource

    bool is_source() const { return kind != Kind::Derived; }
};

struct ProtoRule {
    std::string head;
    std::vector<GroundAtomRef> body;
    bool dead = false;
};

class Grounder {
  public:
    Grounder(const TypedProgram& tp, std::string target_key)
        : tp_(tp), target_key_(std::move(target_key)) {}

    GroundProgram run() {
        const TargetInfo* target = nullptr;
        for (const auto& t : tp_.targets)
            if (t.key == target_key_) target = &t;
        if (!target) throw CompileError("no target named '" + target_key_ + "'");

        GroundProgram out;
        out.target_key = target->key;
        out.target_channel = target->channel;

        for (size_t i = 0; i < tp_.sources.size(); ++i)
            declared_.emplace(tp_.sources[i].key, static_cast<int>(i));

        if (target->is_source) {
            const SourceInfo& s = tp_.sources[declared_.at(target->key)];
            out.sources.push_back(GroundSource{s.key, s.dtype, s.channel, false, RelOp::Gt, {}, {}});
            out.target_source = 0;
            return out;
        }

        collect_universe();
        for (const Clause& c : tp_.clauses) ground_clause(c);
        prune();
        build(out);
        return out;
    }

  private:
    void collect_universe() {
        std::set<std::string> u;
        auto add_term = [&](const Term& t) {
            if (t.kind == Term::Kind::Constant) u.insert(t.name);
            if (t.kind == Term::Kind::Number) u.insert(t.number);
        };
        auto add_atom_args = [&](const Atom& a) {
            for (const Term& t : a.args) add_term(t);
        };
        for (const auto& s : tp_.sources) add_atom_args(s.atom);
        for (const Clause& c : tp_.clauses) {
            add_atom_args(c.head);
            for (const BodyLiteral& lit : c.body) {
                if (lit.atom.is_comparison) {
                    for (const Term* t : {&lit.atom.lhs, &lit.atom.rhs})
                        for (const Term& arg : t->args) add_term(arg);
                } else {
                    add_atom_args(lit.atom);
                }
            }
        }
        universe_.assign(u.begin(), u.end());
        if (universe_.empty()) universe_.push_back("_"); // variable-free programs never index it
    }

    static void collect_clause_vars(const Clause& c, std::vector<std::string>& vars) {
        std::set<std::string> seen;
        auto walk = [&](const Term& t, auto&& self) -> void {
            if (t.kind == Term::Kind::Variable && seen.insert(t.name).second)
                vars.push_back(t.name);
            for (const Term& a : t.args) self(a, self);
        };
        for (const Term& t : c.head.args) walk(t, walk);
        for (const BodyLiteral& lit : c.body) {
            if (lit.atom.is_comparison) {
                walk(lit.atom.lhs, walk);
                walk(lit.atom.rhs, walk);
            } else {
                for (const Term& t : lit.atom.args) walk(t, walk);
            }
        }
    }

    Term substitute(const Term& t, const std::map<std::string, std::string>& sub) const {
        if (t.kind == Term::Kind::Variable) {
            Term g;
            const std::string& v = sub.at(t.name);
            // Universe constants keep their lexical class: digits = number.
            if (!v.empty() && (std::isdigit(static_cast<unsigned char>(v[0])))) {
                g.kind = Term::Kind::Number;
                g.number = v;
            } else {
                g.kind = Term::Kind::Constant;
                g.name = v;
            }
            return g;
        }
        Term g = t;
        for (Term& a : g.args) a = substitute(a, sub);
        return g;
    }

    static std::string term_key(const Term& t) {
        std::string out;
        atom_key_term(out, t);
        return out;
    }

    // Resolve a comparison operand after substitution. Returns false when a
    // source-shaped operand does not name a declared source (drops the rule).
    bool resolve_operand(const Term& g, ComparisonOperand& op) const {
        if (g.kind == Term::Kind::Number) {
            op.is_number = true;
            op.number = g.number_value();
            return true;
        }
        const std::string key = term_key(g);
        auto it = declared_.find(key);
        if (it == declared_.end()) return false;
        const SourceInfo& s = tp_.sources[it->second];
        op.is_number = false;
        op.source_key = s.key;
        op.channel = s.channel;
        op.dtype = s.dtype;
        return true;
    }

    int intern_comparison(const Atom& ground_cmp) {
        ComparisonOperand lhs, rhs;
        if (!resolve_operand(ground_cmp.lhs, lhs) || !resolve_operand(ground_cmp.rhs, rhs))
            return -1;
        std::string key;
        key += lhs.is_number ? term_key(ground_cmp.lhs) : lhs.source_key;
        key += to_string(ground_cmp.op);
        key += rhs.is_number ? term_key(ground_cmp.rhs) : rhs.source_key;
        auto it = virtual_by_key_.find(key);
        if (it != virtual_by_key_.end()) return it->second;

        GroundSource v;
        v.key = key;
        v.is_comparison = true;
        v.op = ground_cmp.op;
        v.lhs = lhs;
        v.rhs = rhs;
        v.dtype = !lhs.is_number && lhs.dtype == SignalType::Density ? SignalType::Density
                  : !rhs.is_number && rhs.dtype == SignalType::Density
                      ? SignalType::Density
                      : SignalType::Number;
        v.channel = !lhs.is_number ? lhs.channel : rhs.channel;
        const int idx = static_cast<int>(virtuals_.size());
        virtuals_.push_back(std::move(v));
        virtual_by_key_.emplace(key, idx);
        return idx;
    }

    void ground_clause(const Clause& c) {
        std::vector<std::string> vars;
        collect_clause_vars(c, vars);
        std::vector<size_t> odo(vars.size(), 0);
        while (true) {
            std::map<std::string, std::string> sub;
            for (size_t i = 0; i < vars.size(); ++i) sub[vars[i]] = universe_[odo[i]];
            emit_rule(c, sub);
            // advance odometer
            size_t i = 0;
            for (; i < odo.size(); ++i) {
                if (++odo[i] < universe_.size()) break;
                odo[i] = 0;
            }
            if (i == odo.size()) break;
        }
    }

    void emit_rule(const Clause& c, const std::map<std::string, std::string>& sub) {
        ProtoRule rule;
        Atom head = c.head;
        for (Term& t : head.args) t = substitute(t, sub);
        rule.head = atom_key(head);

        for (const BodyLiteral& lit : c.body) {
            GroundAtomRef ref;
            ref.negated = lit.negated;
            if (lit.atom.is_comparison) {
                Atom g = lit.atom;
                g.lhs = substitute(g.lhs, sub);
                g.rhs = substitute(g.rhs, sub);
                const int v = intern_comparison(g);
                if (v < 0) return; // undeclared ground source: drop the rule
                ref.kind = GroundAtomRef::Kind::VirtualSource;
                ref.virtual_idx = v;
            } else {
                Atom g = lit.atom;
                for (Term& t : g.args) t = substitute(t, sub);
                ref.key = atom_key(g);
                ref.kind = declared_.count(ref.key) > 0 ? GroundAtomRef::Kind::DeclaredSource
                                                        : GroundAtomRef::Kind::Derived;
            }
            rule.body.push_back(std::move(ref));
        }
        proto_.push_back(std::move(rule));
    }

    // Iteratively remove rules with positive references to atoms that are
    // neither declared sources nor derivable heads; negative references to
    // such atoms are vacuously true and disappear from the body.
    void prune() {
        bool changed = true;
        while (changed) {
            changed = false;
            std::set<std::string> derivable;
            for (const ProtoRule& r : proto_)
                if (!r.dead) derivable.insert(r.head);
            for (ProtoRule& r : proto_) {
                if (r.dead) continue;
                std::vector<GroundAtomRef> keep;
                for (GroundAtomRef& ref : r.body) {
                    if (ref.is_source() || derivable.count(ref.key)) {
                        keep.push_back(std::move(ref));
                    } else if (!ref.negated) {
                        r.dead = true; // positively depends on a false atom
                        changed = true;
                        break;
                    } else {
                        changed = true; // "not <false>" is vacuously true
                    }
                }
                if (!r.dead) r.body = std::move(keep);
            }
        }
    }

    void build(GroundProgram& out) {
        // Cone of the target over live rules.
        std::set<std::string> cone;
        if ([&] {
                for (const ProtoRule& r : proto_)
                    if (!r.dead && r.head == target_key_) return true;
                return false;
            }()) {
            std::vector<std::string> work{target_key_};
            cone.insert(target_key_);
            while (!work.empty()) {
                const std::string h = std::move(work.back());
                work.pop_back();
                for (const ProtoRule& r : proto_) {
                    if (r.dead || r.head != h) continue;
                    for (const GroundAtomRef& ref : r.body) {
                        if (!ref.is_source() && cone.insert(ref.key).second) work.push_back(ref.key);
                    }
                }
            }
        }

        // Derived table in deterministic (first-rule-appearance) order.
        std::map<std::string, int> derived_idx;
        for (const ProtoRule& r : proto_) {
            if (r.dead || !cone.count(r.head)) continue;
            if (!derived_idx.count(r.head)) {
                derived_idx.emplace(r.head, static_cast<int>(out.derived.size()));
                out.derived.push_back(r.head);
            }
            for (const GroundAtomRef& ref : r.body) {
                if (!ref.is_source() && !derived_idx.count(ref.key)) {
                    derived_idx.emplace(ref.key, static_cast<int>(out.derived.size()));
                    out.derived.push_back(ref.key);
                }
            }
        }

        // Source table: declared sources in declaration order, then virtual
        // comparison sources in interning order, both restricted to the cone.
        std::set<int> used_decl, used_virtual;
        for (const ProtoRule& r : proto_) {
            if (r.dead || !cone.count(r.head)) continue;
            for (const GroundAtomRef& ref : r.body) {
                if (ref.kind == GroundAtomRef::Kind::VirtualSource)
                    used_virtual.insert(ref.virtual_idx);
                else if (ref.kind == GroundAtomRef::Kind::DeclaredSource)
                    used_decl.insert(declared_.at(ref.key));
            }
        }
        std::map<std::string, int> source_idx;
        for (int i : used_decl) {
            const SourceInfo& s = tp_.sources[i];
            source_idx.emplace(s.key, static_cast<int>(out.sources.size()));
            out.sources.push_back(GroundSource{s.key, s.dtype, s.channel, false, RelOp::Gt, {}, {}});
        }
        std::map<int, int> virtual_remap;
        for (int v : used_virtual) {
            virtual_remap.emplace(v, static_cast<int>(out.sources.size()));
            out.sources.push_back(virtuals_[v]);
        }

        // Final rules, deduplicated.
        std::vector<GroundRule> rules;
        for (const ProtoRule& r : proto_) {
            if (r.dead || !cone.count(r.head)) continue;
            GroundRule gr;
            gr.head = derived_idx.at(r.head);
            bool contradiction = false;
            for (const GroundAtomRef& ref : r.body) {
                switch (ref.kind) {
                    case GroundAtomRef::Kind::VirtualSource:
                        (ref.negated ? gr.neg_sources : gr.pos_sources)
                            .push_back(virtual_remap.at(ref.virtual_idx));
                        break;
                    case GroundAtomRef::Kind::DeclaredSource:
                        (ref.negated ? gr.neg_sources : gr.pos_sources)
                            .push_back(source_idx.at(ref.key));
                        break;
                    case GroundAtomRef::Kind::Derived:
                        (ref.negated ? gr.neg_derived : gr.pos_derived)
                            .push_back(derived_idx.at(ref.key));
                        break;
                }
            }
            for (auto* v : {&gr.pos_sources, &gr.neg_sources, &gr.pos_derived, &gr.neg_derived}) {
                std::sort(v->begin(), v->end());
                v->erase(std::unique(v->begin(), v->end()), v->end());
            }
            auto intersects = [](const std::vector<int>& a, const std::vector<int>& b) {
                return std::find_first_of(a.begin(), a.end(), b.begin(), b.end()) != a.end();
            };
            contradiction = intersects(gr.pos_sources, gr.neg_sources) ||
                            intersects(gr.pos_derived, gr.neg_derived);
            if (contradiction) continue;
            if (std::find(rules.begin(), rules.end(), gr) == rules.end()) rules.push_back(std::move(gr));
        }
        out.rules = std::move(rules);

        if (auto it = derived_idx.find(target_key_); it != derived_idx.end())
            out.target_derived = it->second;

        stratify(out);
    }

    // Stratified negation: derived-atom dependency graph, SCC condensation;
    // a negative edge inside an SCC is an error, otherwise strata are the
    // longest negative-edge-weighted paths.
    void stratify(GroundProgram& out) {
        const int n = static_cast<int>(out.derived.size());
        out.stratum.assign(n, 0);
        if (n == 0) return;

        struct Edge {
            int from, to; // body atom -> head
            bool negative;
        };
        std::vector<Edge> edges;
        for (const GroundRule& r : out.rules) {
            for (int d : r.pos_derived) edges.push_back({d, r.head, false});
            for (int d : r.neg_derived) edges.push_back({d, r.head, true});
        }

        // Tarjan SCC (iterative would be nicer; recursion depth is desk-scale).
        std::vector<std::vector<int>> adj(n);
        for (size_t e = 0; e < edges.size(); ++e) adj[edges[e].from].push_back(static_cast<int>(e));
        std::vector<int> index(n, -1), low(n, 0), comp(n, -1), stack;
        std::vector<char> on_stack(n, 0);
        int next_index = 0, next_comp = 0;
        auto strongconnect = [&](int v, auto&& self) -> void {
            index[v] = low[v] = next_index++;
            stack.push_back(v);
            on_stack[v] = 1;
            for (int e : adj[v]) {
                const int w = edges[e].to;
                if (index[w] < 0) {
                    self(w, self);
                    low[v] = std::min(low[v], low[w]);
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
            }
            if (low[v] == index[v]) {
                while (true) {
                    const int w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                    comp[w] = next_comp;
                    if (w == v) break;
                }
                ++next_comp;
            }
        };
        for (int v = 0; v < n; ++v)
            if (index[v] < 0) strongconnect(v, strongconnect);

        for (const Edge& e : edges) {
            if (e.negative && comp[e.from] == comp[e.to]) {
                throw CompileError("non-stratified negation: '" + out.derived[e.to] +
                                   "' depends negatively on '" + out.derived[e.from] +
                                   "' through a cycle");
            }
        }

        // Longest path over the condensation; Tarjan emits components in
        // reverse topological order, so walk components descending.
        std::vector<int> comp_stratum(next_comp, 0);
        for (int c = next_comp - 1; c >= 0; --c) {
            for (const Edge& e : edges) {
                if (comp[e.from] != c) continue;
                const int need = comp_stratum[c] + (e.negative ? 1 : 0);
                if (comp[e.to] != c) comp_stratum[comp[e.to]] = std::max(comp_stratum[comp[e.to]], need);
            }
        }
        for (int v = 0; v < n; ++v) out.stratum[v] = comp_stratum[comp[v]];
    }

    const TypedProgram& tp_;
    std::string target_key_;
    std::map<std::string, int> declared_;
    std::vector<std::string> universe_;
    std::vector<ProtoRule> proto_;
    std::vector<GroundSource> virtuals_;
    std::map<std::string, int> virtual_by_key_;
};

} // namespace detail

inline GroundProgram ground(const TypedProgram& typed, const std::string& target_key) {
    return detail::Grounder(typed, target_key).run();
}

// ---- stable models -------------------------------------------------------

// A stable model is a total assignment over the ground program's source
// atoms; bit i of `bits` is the truth of sources[i].
struct StableModel {
    std::uint32_t bits = 0;
};

// Least fixpoint of the (stratified) program under a fixed source
// assignment; returns the derived-atom truth vector.
inline std::vector<std::uint8_t> derive(const GroundProgram& gp, std::uint32_t bits) {
    std::vector<std::uint8_t> derived(gp.derived.size(), 0);
    int max_stratum = 0;
    for (int s : gp.stratum) max_stratum = std::max(max_stratum, s);
    auto src = [&](int i) { return (bits >> i) & 1u; };
    for (int s = 0; s <= max_stratum; ++s) {
        bool changed = true;
        while (changed) {
            changed = false;
            for (const GroundRule& r : gp.rules) {
                if (gp.stratum[r.head] != s || derived[r.head]) continue;
                bool fire = true;
                for (int i : r.pos_sources)
                    if (!src(i)) { fire = false; break; }
                if (fire)
                    for (int i : r.neg_sources)
                        if (src(i)) { fire = false; break; }
                if (fire)
                    for (int i : r.pos_derived)
                        if (!derived[i]) { fire = false; break; }
                if (fire)
                    for (int i : r.neg_derived)
                        if (derived[i]) { fire = false; break; }
                if (fire) {
                    derived[r.head] = 1;
                    changed = true;
                }
            }
        }
    }
    return derived;
}

// Enumerate the stable models in which the target holds, in ascending
// binary order of the source assignment. The model space is 2^N; N beyond
// `source_limit` is refused.
inline std::vector<StableModel> enumerate_stable_models(const GroundProgram& gp,
                                                        int source_limit = kDefaultSourceLimit) {
    const int n = static_cast<int>(gp.sources.size());
    if (n > source_limit) {
        throw CompileError("model space too large: " + std::to_string(n) +
                           " sources exceed the limit of " + std::to_string(source_limit) +
                           " (2^" + std::to_string(n) + " assignments)");
    }
    std::vector<StableModel> models;
    if (gp.target_source >= 0) {
        for (std::uint32_t m = 0; m < (1u << n); ++m)
            if ((m >> gp.target_source) & 1u) models.push_back({m});
        return models;
    }
    if (gp.target_derived < 0) return models; // target underivable: no models
    for (std::uint32_t m = 0; m < (1u << n); ++m) {
        if (derive(gp, m)[gp.target_derived]) models.push_back({m});
    }
    return models;
}

// ---- WMC polynomial --------------------------------------------------------

struct WmcLiteral {
    int source = 0;
    bool negated = false;

    friend bool operator==(const WmcLiteral&, const WmcLiteral&) = default;
};

struct WmcTerm {
    std::vector<WmcLiteral> literals;

    friend bool operator==(const WmcTerm&, const WmcTerm&) = default;
};

// Sum over models of the product of per-source literal weights. Ground
// programs produce total terms (every relevant source appears in every
// term); synthetic workloads may mention a subset per term.
struct WmcPolynomial {
    std::string target_key;
    std::string target_channel;
    std::vector<GroundSource> sources;
    std::vector<WmcTerm> terms;
};

inline WmcPolynomial build_wmc_polynomial(const GroundProgram& gp,
                                          const std::vector<StableModel>& models) {
    WmcPolynomial poly;
    poly.target_key = gp.target_key;
    poly.target_channel = gp.target_channel;
    poly.sources = gp.sources;
    const int n = static_cast<int>(gp.sources.size());
    for (const StableModel& m : models) {
        WmcTerm term;
        term.literals.reserve(n);
        for (int i = 0; i < n; ++i)
            term.literals.push_back(WmcLiteral{i, ((m.bits >> i) & 1u) == 0});
        poly.terms.push_back(std::move(term));
    }
    return poly;
}

// Direct polynomial evaluation from explicit per-literal weights
// (weight_of(source_index, negated) -> Value).
template <Semiring S, class WeightFn>
    requires std::invocable<WeightFn&, int, bool>
typename S::Value evaluate_polynomial(const WmcPolynomial& poly, WeightFn&& weight_of) {
    auto acc = S::zero();
    for (const WmcTerm& t : poly.terms) {
        auto prod = S::one();
        for (const WmcLiteral& lit : t.literals)
            prod = S::times(prod, weight_of(lit.source, lit.negated));
        acc = S::plus(acc, prod);
    }
    return acc;
}

// Convenience: positive weights only, negations via the semiring complement.
template <Semiring S>
typename S::Value evaluate_polynomial(const WmcPolynomial& poly,
                                      const std::vector<typename S::Value>& positive) {
    return evaluate_polynomial<S>(poly, [&](int src, bool neg) {
        return literal_weight<S>(positive.at(static_cast<size_t>(src)), neg);
    });
}

} // namespace resin
