#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "resin/errors.hpp"
#include "resin/ground.hpp"
#include "resin/semiring.hpp"

namespace resin {

// A reactive circuit holds the model polynomial as a DAG of memoized
// formula nodes. Each formula is a sum of product gates; a gate multiplies
// signed signal literals and the memos of child formulas. Updates
// invalidate exactly the formulas that (transitively) depend on the
// changed signal, and `react` re-evaluates those in decreasing topological
// order, so every formula is recomputed at most once per drain.
//
// `drop` moves a set of signals one level away from the root by factoring
// their literals into child formulas; `lift` is the inverse. Both preserve
// the root value, keep the structure canonical (shared identical children,
// no trivial pass-through nodes) and refresh affected memos by
// re-evaluation.
template <Semiring S>
class ReactiveCircuit {
  public:
    using Value = typename S::Value;

    ReactiveCircuit() = default;

    explicit ReactiveCircuit(const WmcPolynomial& poly)
        : target_key_(poly.target_key), target_channel_(poly.target_channel),
          sources_(poly.sources) {
        for (size_t i = 0; i < sources_.size(); ++i)
            source_idx_.emplace(sources_[i].key, static_cast<int>(i));
        pos_w_.resize(sources_.size());
        neg_w_.resize(sources_.size());
        has_pos_.assign(sources_.size(), 0);
        has_neg_.assign(sources_.size(), 0);

        Node rootnode;
        for (const WmcTerm& t : poly.terms) {
            Gate g;
            for (const WmcLiteral& lit : t.literals) g.lits.push_back({lit.source, lit.negated});
            std::sort(g.lits.begin(), g.lits.end());
            rootnode.gates.push_back(std::move(g));
        }
        rootnode.alive = true;
        nodes_.push_back(std::move(rootnode));
        root_ = 0;
        reindex();
    }

    // ---- signals and weights ------------------------------------------

    const std::vector<GroundSource>& sources() const { return sources_; }
    const std::string& target_key() const { return target_key_; }
    const std::string& target_channel() const { return target_channel_; }

    int source_index(const std::string& key) const {
        auto it = source_idx_.find(key);
        return it == source_idx_.end() ? -1 : it->second;
    }

    // Positive weight; the negated literal's weight follows from the
    // semiring complement when one exists, otherwise it stays unset.
    void set_weight(int src, Value positive) {
        check_source(src);
        pos_w_[src] = positive;
        has_pos_[src] = 1;
        if constexpr (S::has_complement) {
            neg_w_[src] = S::complement(positive);
            has_neg_[src] = 1;
        }
    }
    void set_weight(const std::string& key, Value positive) {
        set_weight(require_source(key), positive);
    }

    // Explicit weights for both polarities (complement-free semirings).
    void set_weight_pair(int src, Value positive, Value negated) {
        check_source(src);
        pos_w_[src] = positive;
        neg_w_[src] = negated;
        has_pos_[src] = 1;
        has_neg_[src] = 1;
    }

    bool has_weight(int src) const {
        check_source(src);
        return has_pos_[src] != 0;
    }

    // ---- evaluation ----------------------------------------------------

    // Recompute every memo bottom-up and return the root value.
    Value evaluate_full() {
        for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
            nodes_[*it].memo = compute(*it, true);
            nodes_[*it].fresh = true;
        }
        pending_.clear();
        return nodes_[root_].memo;
    }

    // Mark every formula that depends on the signal, directly or through
    // descendants, as stale and queue it. Set semantics: re-invalidating
    // before a react changes nothing.
    void invalidate(int src) {
        check_source(src);
        for (int id : dep_[src]) {
            nodes_[id].fresh = false;
            pending_.insert(id);
        }
    }
    void invalidate(const std::string& key) { invalidate(require_source(key)); }

    // Queued formulas as topological indices, largest (deepest) first.
    std::vector<int> pending_indices() const {
        std::vector<int> out;
        for (int id : pending_) out.push_back(topo_of_[id]);
        std::sort(out.rbegin(), out.rend());
        return out;
    }

    struct ReactResult {
        Value value{};
        long long ops = 0;
    };

    // Drain the invalidation queue deepest-first, recomputing each queued
    // formula once from fresh children. Returns the root memo and the
    // number of semiring applications performed.
    ReactResult react() {
        long long ops = 0;
        while (!pending_.empty()) {
            int id = *pending_.begin();
            for (int cand : pending_)
                if (topo_of_[cand] > topo_of_[id]) id = cand;
            pending_.erase(id);
            nodes_[id].memo = compute(id, false);
            nodes_[id].fresh = true;
            ops += omega_of(id);
        }
        if (!nodes_[root_].fresh)
            throw EvalError("root memo is stale; run a full evaluation first");
        cumulative_ops_ += ops;
        return {nodes_[root_].memo, ops};
    }

    Value root_value() const {
        if (!nodes_[root_].fresh)
            throw EvalError("root memo is stale; run a full evaluation first");
        return nodes_[root_].memo;
    }

    long long cumulative_ops() const { return cumulative_ops_; }

    // ---- adaptation ------------------------------------------------------

    // Move the signals' literals one level toward the leaves. Gates of a
    // holder formula are grouped by what they keep; each group's dropped
    // products become one child formula, so the holder only re-multiplies
    // a memo when the dropped signals change. Gates that already reference
    // children push the literals into (a private copy of) their first
    // child instead of growing the chain.
    void drop(const std::vector<int>& srcs) { adapt(srcs, /*is_drop=*/true); }
    void drop(const std::vector<std::string>& atoms) { drop(to_indices(atoms)); }
    void drop(std::initializer_list<const char*> atoms) {
        drop(std::vector<std::string>(atoms.begin(), atoms.end()));
    }

    // Inverse move: factor the signals' literals out of their holders into
    // every referencing site one level toward the root. A holder whose
    // gates disagree on the lifted factor is first split by factor; the
    // root isolates factors in place (there is nothing above it).
    void lift(const std::vector<int>& srcs) { adapt(srcs, /*is_drop=*/false); }
    void lift(const std::vector<std::string>& atoms) { lift(to_indices(atoms)); }
    void lift(std::initializer_list<const char*> atoms) {
        lift(std::vector<std::string>(atoms.begin(), atoms.end()));
    }

    // ---- accounting ------------------------------------------------------

    // Applications (binary ⊕/⊗ steps) to evaluate one formula: an n-ary
    // gate costs n−1 multiplications, joining G gates costs G−1 additions.
    long long omega_of(int id) const {
        const Node& n = nodes_[id];
        long long ops = n.gates.empty() ? 0 : static_cast<long long>(n.gates.size()) - 1;
        for (const Gate& g : n.gates) {
            const long long arity = static_cast<long long>(g.lits.size() + g.refs.size());
            ops += std::max<long long>(arity - 1, 0);
        }
        return ops;
    }

    long long root_omega() const { return omega_of(root_); }

    long long total_omega() const {
        long long total = 0;
        for (int id : order_) total += omega_of(id);
        return total;
    }

    long long omega_at(int topo_index) const {
        return omega_of(order_.at(static_cast<size_t>(topo_index)));
    }

    // Cost of one update of the signal: the summed ω of every formula that
    // must be re-evaluated when it changes.
    long long dep_omega(int src) const {
        check_source(src);
        long long total = 0;
        for (int id : dep_[src]) total += omega_of(id);
        return total;
    }

    struct RateReport {
        double rho_max = 0.0;
        double rho_rc = 0.0;
        double gain = 1.0;
    };

    // Operation rates for a map of per-signal change frequencies: the
    // non-reactive bound re-evaluates everything on every update, the
    // reactive rate only pays each signal's dependency cone.
    RateReport rates(const std::map<std::string, double>& focs) const {
        RateReport r;
        const double omega_total = static_cast<double>(total_omega());
        double lambda_sum = 0.0;
        for (size_t i = 0; i < sources_.size(); ++i) {
            auto it = focs.find(sources_[i].key);
            const double lambda = it == focs.end() ? 0.0 : it->second;
            if (lambda < 0.0)
                throw DomainError("negative change frequency for signal '" + sources_[i].key + "'");
            lambda_sum += lambda;
            r.rho_rc += lambda * static_cast<double>(dep_omega(static_cast<int>(i)));
        }
        r.rho_max = lambda_sum * omega_total;
        if (r.rho_rc == 0.0) {
            if (r.rho_max != 0.0)
                throw std::logic_error("reactive rate zero with positive traffic");
            r.gain = 1.0;
        } else {
            r.gain = r.rho_max / r.rho_rc;
        }
        return r;
    }

    // ---- structure -------------------------------------------------------

    int formula_count() const { return static_cast<int>(order_.size()); }

    // Longest root-to-formula distance in the memo DAG; a flat circuit has
    // depth 0.
    int depth() const {
        int d = 0;
        for (int id : order_) d = std::max(d, depth_of_[id]);
        return d;
    }

    // Depth of the shallowest formula holding a literal of the signal;
    // -1 when no formula mentions it (empty circuits).
    int signal_depth(int src) const {
        check_source(src);
        int best = std::numeric_limits<int>::max();
        for (int id : order_)
            if (holds_literal(id, src)) best = std::min(best, depth_of_[id]);
        return best == std::numeric_limits<int>::max() ? -1 : best;
    }

    // One node per line: topological id, kind, children, ω, gate structure.
    std::string dump() const {
        std::ostringstream out;
        out << "rc semiring=" << S::name << " formulas=" << order_.size()
            << " signals=" << sources_.size() << " omega=" << total_omega() << "\n";
        for (size_t t = 0; t < order_.size(); ++t) {
            const Node& n = nodes_[order_[t]];
            out << "f" << t << " formula omega=" << omega_of(order_[t]) << " depth="
                << depth_of_[order_[t]] << " children=[";
            std::set<int> kids;
            for (const Gate& g : n.gates)
                for (int r : g.refs) kids.insert(topo_of_[r]);
            bool first = true;
            for (int k : kids) {
                if (!first) out << ' ';
                out << 'f' << k;
                first = false;
            }
            out << "] gates=[";
            for (size_t gi = 0; gi < n.gates.size(); ++gi) {
                if (gi) out << " | ";
                const Gate& g = n.gates[gi];
                bool f2 = true;
                for (const Lit& l : g.lits) {
                    if (!f2) out << ' ';
                    out << (l.neg ? '-' : '+') << sources_[l.src].key;
                    f2 = false;
                }
                for (int r : g.refs) {
                    if (!f2) out << ' ';
                    out << "&f" << topo_of_[r];
                    f2 = false;
                }
            }
            out << "]\n";
        }
        for (size_t i = 0; i < sources_.size(); ++i)
            out << "s" << i << " signal " << sources_[i].key << " " << sources_[i].channel << "\n";
        return out.str();
    }

    // Structural invariants: single live root, ancestors indexed before
    // descendants, every gate non-empty, every non-root formula reachable.
    void check_invariants() const {
        if (root_ < 0 || !nodes_[root_].alive) throw std::logic_error("no live root");
        for (int id : order_) {
            const Node& n = nodes_[id];
            if (!n.alive) throw std::logic_error("dead node in order");
            for (const Gate& g : n.gates) {
                if (g.lits.empty() && g.refs.empty() && n.gates.size() > 1)
                    throw std::logic_error("empty gate in multi-gate formula");
                for (int r : g.refs) {
                    if (!nodes_[r].alive) throw std::logic_error("reference to dead node");
                    if (topo_of_[id] >= topo_of_[r])
                        throw std::logic_error("topological order violated");
                }
            }
        }
        if (topo_of_[root_] != 0) throw std::logic_error("root is not index zero");
    }

  private:
    struct Lit {
        int src = 0;
        bool neg = false;
        friend auto operator<=>(const Lit&, const Lit&) = default;
    };
    struct Gate {
        std::vector<Lit> lits; // sorted, duplicates allowed (products of powers)
        std::vector<int> refs; // child node ids, sorted multiset
        friend bool operator==(const Gate&, const Gate&) = default;
        friend auto operator<=>(const Gate&, const Gate&) = default;
    };
    struct Node {
        std::vector<Gate> gates;
        Value memo{};
        bool fresh = false;
        bool alive = false;
    };

    // ---- helpers ---------------------------------------------------------

    void check_source(int src) const {
        if (src < 0 || static_cast<size_t>(src) >= sources_.size())
            throw EvalError("unknown signal index " + std::to_string(src));
    }

    int require_source(const std::string& key) const {
        const int idx = source_index(key);
        if (idx < 0) throw EvalError("unknown signal '" + key + "'");
        return idx;
    }

    std::vector<int> to_indices(const std::vector<std::string>& atoms) const {
        std::vector<int> out;
        out.reserve(atoms.size());
        for (const std::string& a : atoms) out.push_back(require_source(a));
        return out;
    }

    Value literal_value(const Lit& l) const {
        if (l.neg) {
            if (!has_neg_[l.src])
                throw EvalError("signal 'not " + sources_[l.src].key + "' has no weight");
            return neg_w_[l.src];
        }
        if (!has_pos_[l.src])
            throw EvalError("signal '" + sources_[l.src].key + "' has no weight");
        return pos_w_[l.src];
    }

    // Evaluate one formula from literal weights and child memos. During a
    // reactive drain children must already be fresh (they have larger
    // topological indices); a full evaluation recomputes bottom-up anyway.
    Value compute(int id, bool full_pass) const {
        const Node& n = nodes_[id];
        Value acc = S::zero();
        bool first = true;
        for (const Gate& g : n.gates) {
            Value prod = S::one();
            for (const Lit& l : g.lits) prod = S::times(prod, literal_value(l));
            for (int r : g.refs) {
                if (!nodes_[r].fresh)
                    throw std::logic_error("stale child memo encountered during evaluation");
                prod = S::times(prod, nodes_[r].memo);
            }
            acc = first ? prod : S::plus(acc, prod);
            first = false;
        }
        (void)full_pass;
        return acc;
    }

    bool holds_literal(int id, int src) const {
        for (const Gate& g : nodes_[id].gates)
            for (const Lit& l : g.lits)
                if (l.src == src) return true;
        return false;
    }

    int add_node(Node n) {
        n.alive = true;
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    // Total number of reference sites of `id` across live formulas.
    int reference_sites(int id) const {
        int count = 0;
        for (const Node& n : nodes_) {
            if (!n.alive) continue;
            for (const Gate& g : n.gates)
                for (int r : g.refs) count += (r == id);
        }
        return count;
    }

    // ---- adaptation core -------------------------------------------------

    static std::vector<Lit> extract_set_lits(Gate& g, const std::set<int>& srcs) {
        std::vector<Lit> taken;
        auto it = std::stable_partition(g.lits.begin(), g.lits.end(),
                                        [&](const Lit& l) { return !srcs.count(l.src); });
        taken.assign(it, g.lits.end());
        g.lits.erase(it, g.lits.end());
        return taken;
    }

    void adapt(const std::vector<int>& srcs_in, bool is_drop) {
        std::set<int> srcs;
        for (int s : srcs_in) {
            check_source(s);
            srcs.insert(s);
        }
        if (srcs.empty()) return;

        std::optional<Value> root_before;
        if (nodes_[root_].fresh) root_before = nodes_[root_].memo;

        const std::vector<int> holders = [&] {
            std::vector<int> out;
            for (int id : order_) {
                for (int s : srcs) {
                    if (holds_literal(id, s)) {
                        out.push_back(id);
                        break;
                    }
                }
            }
            return out;
        }();

        if (is_drop) {
            for (int id : holders) drop_in(id, srcs);
        } else {
            // Deepest holders first so factors land in parents before those
            // parents are themselves rewritten.
            for (auto it = holders.rbegin(); it != holders.rend(); ++it) lift_in(*it, srcs);
        }

        normalize();
        reindex();
        refresh_memos();
        pending_.clear();
        for (int id : order_)
            if (!nodes_[id].fresh) pending_.insert(id);
        check_invariants();
        assert_root_preserved(root_before);
    }

    void drop_in(int id, const std::set<int>& srcs) {
        // add_node may reallocate nodes_, so never hold a Node reference
        // across node creation: work on moved-out gates and re-index.
        std::vector<Gate> gates = std::move(nodes_[id].gates);
        std::vector<Gate> out_gates;
        // Gates are grouped by the part they keep; each group moves its
        // dropped factors into one shared child.  A gate's references ride
        // along with its factor -- kept * (d1*r1 + d2*r2) -- so the holder
        // ends up with one reference per kept signature regardless of how
        // many gates contributed, and no child is ever cloned.
        std::map<std::vector<Lit>, std::vector<Gate>> groups;

        for (Gate& g : gates) {
            std::vector<Lit> dropped = extract_set_lits(g, srcs);
            if (dropped.empty()) {
                out_gates.push_back(std::move(g));
                continue;
            }
            std::sort(dropped.begin(), dropped.end());
            std::vector<Lit> kept = std::move(g.lits);
            groups[std::move(kept)].push_back(Gate{std::move(dropped), std::move(g.refs)});
        }

        for (auto& [kept, members] : groups) {
            Node child;
            child.gates = std::move(members);
            std::sort(child.gates.begin(), child.gates.end());
            const int cid = add_node(std::move(child));
            Gate g;
            g.lits = kept;
            g.refs = {cid};
            out_gates.push_back(std::move(g));
        }
        std::sort(out_gates.begin(), out_gates.end());
        nodes_[id].gates = std::move(out_gates);
        nodes_[id].fresh = false;
    }

    void lift_in(int id, const std::set<int>& srcs) {
        // As in drop_in, nodes_ may reallocate on add_node: work on the
        // moved-out gates and address everything by index.
        std::vector<Gate> gates = std::move(nodes_[id].gates);

        // Signature = the lifted factor of each gate.
        std::vector<std::vector<Lit>> sig(gates.size());
        for (size_t gi = 0; gi < gates.size(); ++gi) {
            sig[gi] = extract_set_lits(gates[gi], srcs);
            std::sort(sig[gi].begin(), sig[gi].end());
        }
        const bool uniform = !sig.empty() && !sig[0].empty() &&
                             std::all_of(sig.begin(), sig.end(),
                                         [&](const std::vector<Lit>& s) { return s == sig[0]; });

        if (uniform) {
            // f = sig ⊗ rest: multiply sig into every reference site; a
            // root holder gets a fresh root above it instead.
            nodes_[id].gates = std::move(gates);
            nodes_[id].fresh = false;
            if (id == root_) {
                Node parent;
                Gate g;
                g.lits = sig[0];
                g.refs = {id};
                parent.gates.push_back(std::move(g));
                root_ = add_node(std::move(parent));
                return;
            }
            for (Node& p : nodes_) {
                if (!p.alive) continue;
                bool touched = false;
                for (Gate& g : p.gates) {
                    const auto k =
                        static_cast<size_t>(std::count(g.refs.begin(), g.refs.end(), id));
                    for (size_t rep = 0; rep < k; ++rep)
                        g.lits.insert(g.lits.end(), sig[0].begin(), sig[0].end());
                    if (k) {
                        std::sort(g.lits.begin(), g.lits.end());
                        touched = true;
                    }
                }
                if (touched) p.fresh = false;
            }
            return;
        }

        // Mixed factors: split the formula by signature group.
        std::map<std::vector<Lit>, std::vector<Gate>> groups;
        for (size_t gi = 0; gi < gates.size(); ++gi)
            groups[sig[gi]].push_back(std::move(gates[gi]));

        if (id == root_) {
            // Nothing above the root: isolate each factor in place.
            std::vector<Gate> out_gates;
            for (auto& [s, members] : groups) {
                if (s.empty()) {
                    for (Gate& g : members) out_gates.push_back(std::move(g));
                    continue;
                }
                Node child;
                child.gates = std::move(members);
                std::sort(child.gates.begin(), child.gates.end());
                const int cid = add_node(std::move(child));
                Gate g;
                g.lits = s;
                g.refs = {cid};
                out_gates.push_back(std::move(g));
            }
            std::sort(out_gates.begin(), out_gates.end());
            nodes_[id].gates = std::move(out_gates);
            nodes_[id].fresh = false;
            return;
        }

        // Non-root: one child per group, then distribute the grouped sum
        // into every gate that referenced this formula.
        std::vector<std::pair<std::vector<Lit>, int>> parts;
        for (auto& [s, members] : groups) {
            Node child;
            child.gates = std::move(members);
            std::sort(child.gates.begin(), child.gates.end());
            parts.emplace_back(s, add_node(std::move(child)));
        }
        for (size_t pid = 0; pid < nodes_.size(); ++pid) {
            if (!nodes_[pid].alive || static_cast<int>(pid) == id) continue;
            bool touched = false;
            for (const Gate& g : nodes_[pid].gates) {
                if (std::count(g.refs.begin(), g.refs.end(), id)) {
                    touched = true;
                    break;
                }
            }
            if (!touched) continue;
            std::vector<Gate> rewritten;
            std::vector<Gate> own = std::move(nodes_[pid].gates);
            for (Gate& g : own) {
                const auto k = std::count(g.refs.begin(), g.refs.end(), id);
                if (k == 0) {
                    rewritten.push_back(std::move(g));
                    continue;
                }
                Gate base = std::move(g);
                base.refs.erase(std::remove(base.refs.begin(), base.refs.end(), id),
                                base.refs.end());
                // k-fold cross product over the groups (k is almost always 1).
                std::vector<Gate> expansion{std::move(base)};
                for (long rep = 0; rep < k; ++rep) {
                    std::vector<Gate> next;
                    for (const Gate& e : expansion) {
                        for (const auto& [s, cid] : parts) {
                            Gate ng = e;
                            ng.lits.insert(ng.lits.end(), s.begin(), s.end());
                            ng.refs.push_back(cid);
                            next.push_back(std::move(ng));
                        }
                    }
                    expansion = std::move(next);
                }
                for (Gate& e : expansion) {
                    std::sort(e.lits.begin(), e.lits.end());
                    std::sort(e.refs.begin(), e.refs.end());
                    rewritten.push_back(std::move(e));
                }
            }
            std::sort(rewritten.begin(), rewritten.end());
            nodes_[pid].gates = std::move(rewritten);
            nodes_[pid].fresh = false;
        }
        nodes_[id].alive = false; // fully distributed into parents
    }

    // ---- canonicalization --------------------------------------------------

    std::string content_key(const Node& n) const {
        std::ostringstream ss;
        for (const Gate& g : n.gates) {
            for (const Lit& l : g.lits) ss << (l.neg ? '-' : '+') << l.src << ',';
            for (int r : g.refs) ss << '&' << r << ',';
            ss << '|';
        }
        return ss.str();
    }

    // Keep the structure canonical after adaptation:
    //  - constant-one formulas (all gates empty products) vanish from
    //    their reference sites,
    //  - pass-through formulas (one gate, one bare reference) are inlined,
    //  - gates of one formula sharing a literal set factor it out
    //    (l·a + l·b = l·(a+b)), so single-signal moves converge to the
    //    same shape as one batched move,
    //  - content-identical formulas are shared,
    //  - sums of exclusively-owned sums are hoisted flat,
    // iterated to a fixed point, then unreachable nodes are pruned.
    void normalize() {
        bool changed = true;
        while (changed) {
            changed = false;
            changed |= merge_common_factors();

            for (size_t id = 0; id < nodes_.size(); ++id) {
                Node& n = nodes_[id];
                if (!n.alive || static_cast<int>(id) == root_) continue;
                const bool constant_one =
                    n.gates.size() == 1 && n.gates[0].lits.empty() && n.gates[0].refs.empty();
                const bool pass_through =
                    n.gates.size() == 1 && n.gates[0].lits.empty() && n.gates[0].refs.size() == 1;
                if (!constant_one && !pass_through) continue;
                const int replacement = pass_through ? n.gates[0].refs[0] : -1;
                for (Node& p : nodes_) {
                    if (!p.alive) continue;
                    for (Gate& g : p.gates) {
                        bool hit = false;
                        for (int& r : g.refs) {
                            if (r != static_cast<int>(id)) continue;
                            hit = true;
                            if (pass_through) r = replacement;
                        }
                        if (hit && constant_one)
                            g.refs.erase(std::remove(g.refs.begin(), g.refs.end(),
                                                     static_cast<int>(id)),
                                         g.refs.end());
                        if (hit) {
                            std::sort(g.refs.begin(), g.refs.end());
                            changed = true;
                        }
                    }
                }
                n.alive = false;
                changed = true;
            }

            // Content dedup; the root stays the representative of its class
            // and is never merged away (merging it would re-root the DAG).
            std::map<std::string, int> by_content;
            by_content.emplace(content_key(nodes_[root_]), root_);
            for (size_t id = 0; id < nodes_.size(); ++id) {
                Node& n = nodes_[id];
                if (!n.alive || static_cast<int>(id) == root_) continue;
                auto [it, inserted] = by_content.emplace(content_key(n), static_cast<int>(id));
                if (inserted) continue;
                const int rep = it->second;
                if (rep == root_) continue; // never point descendants at the root
                for (Node& p : nodes_) {
                    if (!p.alive) continue;
                    for (Gate& g : p.gates) {
                        bool hit = false;
                        for (int& r : g.refs)
                            if (r == static_cast<int>(id)) {
                                r = rep;
                                hit = true;
                            }
                        if (hit) std::sort(g.refs.begin(), g.refs.end());
                    }
                }
                n.alive = false;
                changed = true;
            }

            changed |= hoist_owned_sums();
        }
    }

    // l·a + l·b = l·(a+b): within one formula, gates that share the same
    // literal multiset (and carry references) collapse into a single gate
    // over a fresh sum node. Without this, repeated single-signal drops
    // leave one gate per original sign pattern forever, and the root never
    // regains the 2^kept·kept shape a batched drop produces.
    bool merge_common_factors() {
        bool any = false;
        const size_t upto = nodes_.size(); // new nodes need no re-scan this pass
        for (size_t id = 0; id < upto; ++id) {
            if (!nodes_[id].alive) continue;
            // Group mergeable gates by literal set. A gate must carry both
            // a factor to pull out and a reference to push down: bare
            // literal gates have no sum to share, and bare reference gates
            // would "factor out" nothing, re-creating themselves forever.
            std::map<std::vector<Lit>, std::vector<size_t>> runs;
            for (size_t gi = 0; gi < nodes_[id].gates.size(); ++gi)
                if (!nodes_[id].gates[gi].refs.empty() && !nodes_[id].gates[gi].lits.empty())
                    runs[nodes_[id].gates[gi].lits].push_back(gi);
            bool touched = false;
            std::vector<Gate> merged;
            std::vector<bool> consumed(nodes_[id].gates.size(), false);
            for (auto& [lits, members] : runs) {
                if (members.size() < 2) continue;
                Node sum;
                for (size_t gi : members) {
                    Gate part;
                    part.refs = nodes_[id].gates[gi].refs;
                    sum.gates.push_back(std::move(part));
                    consumed[gi] = true;
                }
                std::sort(sum.gates.begin(), sum.gates.end());
                const int sid = add_node(std::move(sum));
                Gate g;
                g.lits = lits;
                g.refs = {sid};
                merged.push_back(std::move(g));
                touched = true;
            }
            if (!touched) continue;
            std::vector<Gate> out;
            for (size_t gi = 0; gi < nodes_[id].gates.size(); ++gi)
                if (!consumed[gi]) out.push_back(std::move(nodes_[id].gates[gi]));
            for (Gate& g : merged) out.push_back(std::move(g));
            std::sort(out.begin(), out.end());
            nodes_[id].gates = std::move(out);
            nodes_[id].fresh = false;
            any = true;
        }
        return any;
    }

    // A bare-reference gate whose target is owned by this single reference
    // site is an inline sum: splice the target's gates in place of the
    // gate. Together with factor merging this flattens the intermediate
    // (a+b)-style nodes the merge creates, so the dropped layer stays one
    // level deep instead of accumulating indirection.
    bool hoist_owned_sums() {
        // Reference counts snapshotted up front: gates get moved around
        // below, and a recount mid-splice would miss refs already moved.
        std::map<int, int> sites;
        for (const Node& n : nodes_) {
            if (!n.alive) continue;
            for (const Gate& g : n.gates)
                for (int r : g.refs) ++sites[r];
        }
        bool any = false;
        for (size_t id = 0; id < nodes_.size(); ++id) {
            if (!nodes_[id].alive) continue;
            bool touched = false;
            std::vector<Gate> out;
            for (Gate& g : nodes_[id].gates) {
                if (g.lits.empty() && g.refs.size() == 1) {
                    const int r = g.refs[0];
                    // Only splice targets that carry no literal content of
                    // their own: such a node is a bare sum-of-references, an
                    // administrative layer that addition associativity lets
                    // us flatten.  Nodes holding literals stay put -- their
                    // depth encodes a deliberate placement choice.
                    const bool administrative =
                        r != root_ && nodes_[r].alive && sites[r] == 1 &&
                        !nodes_[r].gates.empty() &&
                        std::all_of(nodes_[r].gates.begin(), nodes_[r].gates.end(),
                                    [](const Gate& cg) { return cg.lits.empty(); });
                    if (administrative) {
                        for (Gate& cg : nodes_[r].gates) out.push_back(std::move(cg));
                        nodes_[r].gates.clear();
                        nodes_[r].alive = false;
                        touched = true;
                        continue;
                    }
                }
                out.push_back(std::move(g));
            }
            // Gates were moved into `out` while scanning, so the node's
            // gate list is rebuilt from it even when nothing was hoisted.
            if (touched) {
                std::sort(out.begin(), out.end());
                nodes_[id].fresh = false;
                any = true;
            }
            nodes_[id].gates = std::move(out);
        }
        return any;
    }

    // Reverse post-order from the root: ancestors receive smaller indices
    // than descendants. Also rebuilds reachability, depths and per-signal
    // dependency sets.
    void reindex() {
        topo_of_.assign(nodes_.size(), -1);
        depth_of_.assign(nodes_.size(), 0);
        order_.clear();

        // Iterative DFS post-order.
        std::vector<char> state(nodes_.size(), 0); // 0 new, 1 open, 2 done
        std::vector<std::pair<int, size_t>> stack{{root_, 0}};
        std::vector<int> post;
        std::vector<std::vector<int>> children(nodes_.size());
        for (size_t id = 0; id < nodes_.size(); ++id) {
            if (!nodes_[id].alive) continue;
            std::vector<int>& cs = children[id];
            for (const Gate& g : nodes_[id].gates)
                for (int r : g.refs) cs.push_back(r);
        }
        while (!stack.empty()) {
            auto& [id, next] = stack.back();
            if (state[id] == 0) state[id] = 1;
            if (next < children[id].size()) {
                const int c = children[id][next++];
                if (state[c] == 1) throw std::logic_error("cycle in circuit");
                if (state[c] == 0) stack.emplace_back(c, 0);
            } else {
                state[id] = 2;
                post.push_back(id);
                stack.pop_back();
            }
        }
        for (auto it = post.rbegin(); it != post.rend(); ++it) {
            topo_of_[*it] = static_cast<int>(order_.size());
            order_.push_back(*it);
        }
        // Prune unreachable nodes.
        for (size_t id = 0; id < nodes_.size(); ++id)
            if (nodes_[id].alive && topo_of_[id] < 0) nodes_[id].alive = false;

        for (int id : order_)
            for (int c : children[id]) depth_of_[c] = std::max(depth_of_[c], depth_of_[id] + 1);

        // Dependency sets: literal holders plus all their ancestors.
        std::vector<std::vector<int>> parents(nodes_.size());
        for (int id : order_)
            for (int c : children[id]) parents[c].push_back(id);

        dep_.assign(sources_.size(), {});
        for (size_t s = 0; s < sources_.size(); ++s) {
            std::set<int> dep;
            std::vector<int> work;
            for (int id : order_)
                if (holds_literal(id, static_cast<int>(s))) {
                    if (dep.insert(id).second) work.push_back(id);
                }
            while (!work.empty()) {
                const int id = work.back();
                work.pop_back();
                for (int p : parents[id])
                    if (dep.insert(p).second) work.push_back(p);
            }
            dep_[s].assign(dep.begin(), dep.end());
        }

        std::set<int> live_pending;
        for (int id : pending_)
            if (nodes_[id].alive) live_pending.insert(id);
        pending_ = std::move(live_pending);
    }

    // Recompute every memo that can be computed (all weights known); the
    // rest stay stale and queued.
    void refresh_memos() {
        for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
            Node& n = nodes_[*it];
            try {
                n.memo = compute(*it, true);
                n.fresh = true;
            } catch (const EvalError&) {
                n.fresh = false;
            } catch (const std::logic_error&) {
                n.fresh = false; // stale child: stays queued
            }
        }
    }

    void assert_root_preserved(const std::optional<Value>& before) const {
        if constexpr (std::is_floating_point_v<Value>) {
            if (!before || !nodes_[root_].fresh) return;
            const double a = static_cast<double>(*before);
            const double b = static_cast<double>(nodes_[root_].memo);
            if (std::abs(a - b) > 1e-12 * std::max(1.0, std::abs(a)))
                throw std::logic_error("adaptation changed the root value");
        }
    }

    std::string target_key_;
    std::string target_channel_;
    std::vector<GroundSource> sources_;
    std::map<std::string, int> source_idx_;
    std::vector<Value> pos_w_, neg_w_;
    std::vector<char> has_pos_, has_neg_;

    std::vector<Node> nodes_;
    int root_ = -1;
    std::vector<int> topo_of_;
    std::vector<int> depth_of_;
    std::vector<int> order_; // topo index -> node id
    std::vector<std::vector<int>> dep_;
    std::set<int> pending_;
    long long cumulative_ops_ = 0;
};

} // namespace resin
