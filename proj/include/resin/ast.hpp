#pragma once

#include <string>
#include <variant>
#include <vector>

namespace resin {

// Abstract syntax for Resin programs.
//
// A program is a flat list of statements: source declarations binding an
// atom to a typed channel, target declarations binding an atom to an
// output channel, clauses (head if l1 and l2 and ...), and comments.
// Pretty-printing is stable: print(parse(print(ast))) == print(ast), and
// structural equality ignores source positions.

struct SourcePos {
    int line = 0; // 1-based
    int col = 0;  // 1-based
};

enum class SignalType { Probability, Density, Number, Boolean };

inline const char* to_string(SignalType t) {
    switch (t) {
        case SignalType::Probability: return "Probability";
        case SignalType::Density: return "Density";
        case SignalType::Number: return "Number";
        case SignalType::Boolean: return "Boolean";
    }
    return "?";
}

enum class RelOp { Gt, Lt, Eq, Ge, Le };

inline const char* to_string(RelOp op) {
    switch (op) {
        case RelOp::Gt: return ">";
        case RelOp::Lt: return "<";
        case RelOp::Eq: return "==";
        case RelOp::Ge: return ">=";
        case RelOp::Le: return "<=";
    }
    return "?";
}

// Terms appear as predicate arguments and comparison operands.
struct Term {
    enum class Kind { Variable, Constant, Number, Predicate };

    Kind kind = Kind::Constant;
    std::string name;       // variable / constant / predicate name
    std::string number;     // number lexeme, kept verbatim for round-trips
    std::vector<Term> args; // predicate arguments
    SourcePos pos;

    double number_value() const { return std::stod(number); }

    friend bool operator==(const Term& a, const Term& b) {
        return a.kind == b.kind && a.name == b.name && a.number == b.number && a.args == b.args;
    }
};

// An atom is either a predicate (possibly 0-ary) or a comparison.
struct Atom {
    bool is_comparison = false;

    // predicate form
    std::string name;
    std::vector<Term> args;

    // comparison form
    Term lhs;
    RelOp op = RelOp::Gt;
    Term rhs;

    SourcePos pos;

    friend bool operator==(const Atom& a, const Atom& b) {
        if (a.is_comparison != b.is_comparison) return false;
        if (a.is_comparison) return a.lhs == b.lhs && a.op == b.op && a.rhs == b.rhs;
        return a.name == b.name && a.args == b.args;
    }
};

struct BodyLiteral {
    bool negated = false;
    Atom atom;

    friend bool operator==(const BodyLiteral&, const BodyLiteral&) = default;
};

struct SourceDecl {
    Atom atom;
    std::string channel;
    SignalType dtype = SignalType::Probability;
    SourcePos pos;

    friend bool operator==(const SourceDecl& a, const SourceDecl& b) {
        return a.atom == b.atom && a.channel == b.channel && a.dtype == b.dtype;
    }
};

struct TargetDecl {
    Atom atom;
    std::string channel;
    SourcePos pos;

    friend bool operator==(const TargetDecl& a, const TargetDecl& b) {
        return a.atom == b.atom && a.channel == b.channel;
    }
};

struct Clause {
    Atom head;
    std::vector<BodyLiteral> body;
    SourcePos pos;

    friend bool operator==(const Clause& a, const Clause& b) {
        return a.head == b.head && a.body == b.body;
    }
};

struct Comment {
    std::string text; // everything after '#', verbatim
    SourcePos pos;

    friend bool operator==(const Comment& a, const Comment& b) { return a.text == b.text; }
};

using Statement = std::variant<SourceDecl, TargetDecl, Clause, Comment>;

struct Program {
    std::vector<Statement> statements;

    friend bool operator==(const Program&, const Program&) = default;
};

// ---- printing ----------------------------------------------------------

inline void print_term(std::string& out, const Term& t) {
    switch (t.kind) {
        case Term::Kind::Variable:
        case Term::Kind::Constant: out += t.name; break;
        case Term::Kind::Number: out += t.number; break;
        case Term::Kind::Predicate:
            out += t.name;
            out += '(';
            for (size_t i = 0; i < t.args.size(); ++i) {
                if (i) out += ", ";
                print_term(out, t.args[i]);
            }
            out += ')';
            break;
    }
}

inline void print_atom(std::string& out, const Atom& a) {
    if (a.is_comparison) {
        print_term(out, a.lhs);
        out += ' ';
        out += to_string(a.op);
        out += ' ';
        print_term(out, a.rhs);
        return;
    }
    Term t;
    t.kind = a.args.empty() ? Term::Kind::Constant : Term::Kind::Predicate;
    t.name = a.name;
    t.args = a.args;
    print_term(out, t);
}

inline std::string to_string(const Atom& a) {
    std::string out;
    print_atom(out, a);
    return out;
}

inline std::string to_string(const Statement& st) {
    std::string out;
    if (const auto* s = std::get_if<SourceDecl>(&st)) {
        print_atom(out, s->atom);
        out += " <- source(\"" + s->channel + "\", ";
        out += to_string(s->dtype);
        out += ").";
    } else if (const auto* t = std::get_if<TargetDecl>(&st)) {
        print_atom(out, t->atom);
        out += " -> target(\"" + t->channel + "\").";
    } else if (const auto* c = std::get_if<Clause>(&st)) {
        print_atom(out, c->head);
        out += " if ";
        for (size_t i = 0; i < c->body.size(); ++i) {
            if (i) out += " and ";
            if (c->body[i].negated) out += "not ";
            print_atom(out, c->body[i].atom);
        }
        out += '.';
    } else if (const auto* m = std::get_if<Comment>(&st)) {
        out += '#';
        out += m->text;
    }
    return out;
}

inline std::string to_string(const Program& p) {
    std::string out;
    for (const auto& st : p.statements) {
        out += to_string(st);
        out += '\n';
    }
    return out;
}

} // namespace resin
