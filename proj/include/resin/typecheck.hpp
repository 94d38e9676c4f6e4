#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "resin/ast.hpp"
#include "resin/errors.hpp"

namespace resin {

// Canonical text form of a ground-or-not atom/term, used as atom identity
// everywhere downstream: "a", "distance(drone_1,drone_2)".
inline void atom_key_term(std::string& out, const Term& t) {
    switch (t.kind) {
        case Term::Kind::Variable:
        case Term::Kind::Constant: out += t.name; break;
        case Term::Kind::Number: out += t.number; break;
        case Term::Kind::Predicate:
            out += t.name;
            out += '(';
            for (size_t i = 0; i < t.args.size(); ++i) {
                if (i) out += ',';
                atom_key_term(out, t.args[i]);
            }
            out += ')';
            break;
    }
}

inline std::string atom_key(const Atom& a) {
    std::string out = a.name;
    if (!a.args.empty()) {
        out += '(';
        for (size_t i = 0; i < a.args.size(); ++i) {
            if (i) out += ',';
            atom_key_term(out, a.args[i]);
        }
        out += ')';
    }
    return out;
}

struct SourceInfo {
    std::string key;
    Atom atom;
    std::string channel;
    SignalType dtype = SignalType::Probability;
};

struct TargetInfo {
    std::string key;
    std::string channel;
    bool is_source = false; // target re-exports a declared source directly
};

// One syntactic comparison occurrence, already validated against the
// declared source families.
struct ComparisonInfo {
    SourcePos pos;
    bool cdf = false; // a Density operand takes the Gaussian-CDF coercion
};

struct TypedProgram {
    Program program;
    std::vector<SourceInfo> sources;
    std::vector<TargetInfo> targets;
    std::vector<Clause> clauses;
    std::vector<ComparisonInfo> comparisons;
};

namespace detail {

struct Family {
    std::string name;
    size_t arity;
    auto operator<=>(const Family&) const = default;
};

class TypeChecker {
  public:
    TypeChecker(const Program& p, std::string file) : prog_(p), file_(std::move(file)) {}

    TypedProgram run() {
        TypedProgram out;
        out.program = prog_;
        collect_sources(out);
        collect_clauses(out);
        collect_targets(out);
        for (const Clause& c : out.clauses) check_clause(c, out);
        if (!diags_.empty()) {
            std::string msg;
            for (size_t i = 0; i < diags_.size(); ++i) {
                if (i) msg += '\n';
                msg += diags_[i];
            }
            throw CompileError(msg);
        }
        return out;
    }

  private:
    void diag(SourcePos pos, const std::string& msg) {
        diags_.push_back(file_ + ":" + std::to_string(pos.line) + ":" + std::to_string(pos.col) +
                         ": " + msg);
    }

    // Predicate arguments must be flat: variables, constants or numbers.
    bool check_args_flat(const std::vector<Term>& args, SourcePos pos) {
        for (const Term& t : args) {
            if (t.kind == Term::Kind::Predicate) {
                diag(pos, "function terms are unsupported ('" + t.name + "(...)' as an argument)");
                return false;
            }
        }
        return true;
    }

    bool is_ground(const Atom& a) {
        for (const Term& t : a.args)
            if (t.kind == Term::Kind::Variable) return false;
        return true;
    }

    void collect_sources(TypedProgram& out) {
        std::set<std::string> channels;
        for (const auto& st : prog_.statements) {
            const auto* d = std::get_if<SourceDecl>(&st);
            if (!d) continue;
            check_args_flat(d->atom.args, d->pos);
            if (!is_ground(d->atom)) {
                diag(d->pos, "source declaration must be ground (no variables)");
                continue;
            }
            const std::string key = atom_key(d->atom);
            if (source_by_key_.count(key)) {
                diag(d->pos, "redeclared source '" + key + "'");
                continue;
            }
            if (!channels.insert(d->channel).second) {
                diag(d->pos, "duplicate source channel \"" + d->channel + "\"");
            }
            const Family fam{d->atom.name, d->atom.args.size()};
            auto [it, fresh] = source_family_type_.emplace(fam, d->dtype);
            if (!fresh && it->second != d->dtype) {
                diag(d->pos, "conflicting signal types for source family '" + d->atom.name + "'");
            }
            source_by_key_.emplace(key, out.sources.size());
            out.sources.push_back(SourceInfo{key, d->atom, d->channel, d->dtype});
        }
    }

    void collect_clauses(TypedProgram& out) {
        for (const auto& st : prog_.statements) {
            const auto* c = std::get_if<Clause>(&st);
            if (!c) continue;
            check_args_flat(c->head.args, c->head.pos);
            const Family fam{c->head.name, c->head.args.size()};
            if (source_family_type_.count(fam)) {
                diag(c->head.pos, "source atom '" + c->head.name + "' cannot be a rule head");
            }
            head_families_.insert(fam);
            out.clauses.push_back(*c);
        }
    }

    void collect_targets(TypedProgram& out) {
        std::set<std::string> channels;
        for (const auto& st : prog_.statements) {
            const auto* d = std::get_if<TargetDecl>(&st);
            if (!d) continue;
            if (!is_ground(d->atom)) {
                diag(d->pos, "target declaration must be ground (no variables)");
                continue;
            }
            if (!channels.insert(d->channel).second) {
                diag(d->pos, "duplicate target channel \"" + d->channel + "\"");
            }
            const std::string key = atom_key(d->atom);
            const Family fam{d->atom.name, d->atom.args.size()};
            TargetInfo info{key, d->channel, false};
            if (auto it = source_by_key_.find(key); it != source_by_key_.end()) {
                const SignalType t = out.sources[it->second].dtype;
                if (t != SignalType::Probability && t != SignalType::Boolean) {
                    diag(d->pos, "target '" + key + "' re-exports a " +
                                     std::string(to_string(t)) +
                                     " source; only Probability and Boolean sources can be targets");
                    continue;
                }
                info.is_source = true;
            } else if (!head_families_.count(fam)) {
                diag(d->pos, "target atom '" + key + "' is neither a rule head nor a declared source");
                continue;
            }
            out.targets.push_back(std::move(info));
        }
        if (out.targets.empty()) {
            SourcePos pos{1, 1};
            diag(pos, "program declares no target");
        }
    }

    // Comparison operand classification.
    enum class OperandKind { NumberLiteral, Source, Bad };
    struct Operand {
        OperandKind kind = OperandKind::Bad;
        SignalType dtype = SignalType::Number;
    };

    Operand classify_operand(const Term& t, SourcePos pos) {
        Operand op;
        if (t.kind == Term::Kind::Number) {
            op.kind = OperandKind::NumberLiteral;
            return op;
        }
        if (t.kind == Term::Kind::Variable) {
            diag(pos, "comparison operand '" + t.name +
                          "' is a bare variable; operands must reference a source or be numeric");
            return op;
        }
        if (t.kind == Term::Kind::Predicate) check_args_flat(t.args, pos);
        const Family fam{t.name, t.kind == Term::Kind::Predicate ? t.args.size() : 0};
        auto it = source_family_type_.find(fam);
        if (it == source_family_type_.end()) {
            if (head_families_.count(fam)) {
                diag(pos, "cannot compare derived atom '" + t.name + "'");
            } else {
                diag(pos, "unknown atom '" + t.name + "' in comparison");
            }
            return op;
        }
        if (it->second == SignalType::Probability || it->second == SignalType::Boolean) {
            diag(pos, std::string("cannot compare ") + to_string(it->second) + " signal '" + t.name +
                          "'; only Number and Density signals support comparisons");
            return op;
        }
        op.kind = OperandKind::Source;
        op.dtype = it->second;
        return op;
    }

    void check_comparison(const Atom& a, TypedProgram& out) {
        const Operand l = classify_operand(a.lhs, a.pos);
        const Operand r = classify_operand(a.rhs, a.pos);
        if (l.kind == OperandKind::Bad || r.kind == OperandKind::Bad) return;
        if (l.kind == OperandKind::NumberLiteral && r.kind == OperandKind::NumberLiteral) {
            diag(a.pos, "comparison between two literals never references a signal");
            return;
        }
        if (l.kind == OperandKind::Source && r.kind == OperandKind::Source &&
            l.dtype == SignalType::Density && r.dtype == SignalType::Density) {
            diag(a.pos, "comparisons between two Density signals are not supported");
            return;
        }
        const bool cdf = (l.kind == OperandKind::Source && l.dtype == SignalType::Density) ||
                         (r.kind == OperandKind::Source && r.dtype == SignalType::Density);
        out.comparisons.push_back(ComparisonInfo{a.pos, cdf});
    }

    void check_plain_atom(const Atom& a) {
        check_args_flat(a.args, a.pos);
        const Family fam{a.name, a.args.size()};
        if (auto it = source_family_type_.find(fam); it != source_family_type_.end()) {
            if (it->second == SignalType::Number || it->second == SignalType::Density) {
                diag(a.pos, std::string(to_string(it->second)) + " signal '" + a.name +
                                "' must be used in a comparison");
            }
            return;
        }
        if (!head_families_.count(fam)) {
            diag(a.pos, "unknown atom '" + a.name + "'");
        }
    }

    static void collect_vars(const Term& t, std::set<std::string>& vars) {
        if (t.kind == Term::Kind::Variable) vars.insert(t.name);
        for (const Term& arg : t.args) collect_vars(arg, vars);
    }

    void check_clause(const Clause& c, TypedProgram& out) {
        std::set<std::string> bound, used;
        for (const Term& t : c.head.args) collect_vars(t, used);
        for (const BodyLiteral& lit : c.body) {
            const Atom& a = lit.atom;
            if (a.is_comparison) {
                check_comparison(a, out);
                // Variables inside a comparison's source term are bound by
                // grounding over the declared source atoms of that family.
                collect_vars(a.lhs, bound);
                collect_vars(a.rhs, bound);
                collect_vars(a.lhs, used);
                collect_vars(a.rhs, used);
            } else {
                check_plain_atom(a);
                for (const Term& t : a.args) {
                    collect_vars(t, used);
                    if (!lit.negated) collect_vars(t, bound);
                }
            }
        }
        for (const std::string& v : used) {
            if (!bound.count(v)) {
                diag(c.pos, "unsafe variable '" + v + "' (not bound by a positive body literal)");
            }
        }
    }

    const Program& prog_;
    std::string file_;
    std::vector<std::string> diags_;
    std::map<std::string, size_t> source_by_key_;
    std::map<Family, SignalType> source_family_type_;
    std::set<Family> head_families_;
};

} // namespace detail

inline TypedProgram typecheck(const Program& program, const std::string& file = "<input>") {
    return detail::TypeChecker(program, file).run();
}

} // namespace resin
