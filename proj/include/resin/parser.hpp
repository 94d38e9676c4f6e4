#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "resin/ast.hpp"
#include "resin/errors.hpp"
#include "resin/lexer.hpp"

namespace resin {

// Recursive-descent parser. Grammar sketch:
//
//   program     := statement*
//   statement   := comment | source_decl | target_decl | clause
//   source_decl := atom "<-" "source" "(" path "," type ")" "."
//   target_decl := atom "->" "target" "(" path ")" "."
//   clause      := atom "if" literal ("and" literal)* "."
//   literal     := ["not"] (comparison | atom)
//   comparison  := operand relop operand
//   operand     := variable | number | id | id "(" term ("," term)* ")"
//
// Throws CompileError with file:line:col on the first syntax error.

namespace detail {

class Parser {
  public:
    Parser(std::vector<Token> tokens, std::string file)
        : toks_(std::move(tokens)), file_(std::move(file)) {}

    Program parse_program() {
        Program prog;
        while (!at(TokenKind::EndOfFile)) {
            if (at(TokenKind::Comment)) {
                Comment c;
                c.text = cur().text;
                c.pos = cur().pos;
                ++i_;
                prog.statements.emplace_back(std::move(c));
                continue;
            }
            prog.statements.push_back(parse_statement());
        }
        return prog;
    }

  private:
    const Token& cur() const { return toks_[i_]; }
    bool at(TokenKind k) const { return cur().kind == k; }

    [[noreturn]] void fail(const std::string& msg) const {
        const Token& t = cur();
        std::string shown = t.kind == TokenKind::EndOfFile ? "end of input" : "'" + t.text + "'";
        throw CompileError(file_ + ":" + std::to_string(t.pos.line) + ":" +
                           std::to_string(t.pos.col) + ": " + msg + " (got " + shown + ")");
    }

    Token expect(TokenKind k, const std::string& what) {
        if (!at(k)) fail("expected " + what);
        return toks_[i_++];
    }

    Statement parse_statement() {
        Atom head = parse_predicate_atom("statement head");
        if (at(TokenKind::RelOp)) fail("a comparison cannot be a clause head");
        if (at(TokenKind::ArrowIn)) return parse_source_decl(std::move(head));
        if (at(TokenKind::ArrowOut)) return parse_target_decl(std::move(head));
        if (at(TokenKind::KwIf)) return parse_clause(std::move(head));
        fail("expected '<-', '->' or 'if' after statement head");
    }

    SourceDecl parse_source_decl(Atom atom) {
        SourceDecl d;
        d.atom = std::move(atom);
        d.pos = d.atom.pos;
        expect(TokenKind::ArrowIn, "'<-'");
        expect(TokenKind::KwSource, "'source'");
        expect(TokenKind::LParen, "'('");
        d.channel = expect(TokenKind::Path, "a quoted channel path").text;
        expect(TokenKind::Comma, "','");
        d.dtype = expect(TokenKind::TypeName, "a signal type").type;
        expect(TokenKind::RParen, "')'");
        expect(TokenKind::Dot, "'.' after statement");
        return d;
    }

    TargetDecl parse_target_decl(Atom atom) {
        TargetDecl d;
        d.atom = std::move(atom);
        d.pos = d.atom.pos;
        expect(TokenKind::ArrowOut, "'->'");
        expect(TokenKind::KwTarget, "'target'");
        expect(TokenKind::LParen, "'('");
        d.channel = expect(TokenKind::Path, "a quoted channel path").text;
        expect(TokenKind::RParen, "')'");
        expect(TokenKind::Dot, "'.' after statement");
        return d;
    }

    Clause parse_clause(Atom head) {
        Clause c;
        c.head = std::move(head);
        c.pos = c.head.pos;
        expect(TokenKind::KwIf, "'if'");
        c.body.push_back(parse_literal());
        while (at(TokenKind::KwAnd)) {
            ++i_;
            c.body.push_back(parse_literal());
        }
        expect(TokenKind::Dot, "'.' after statement");
        return c;
    }

    BodyLiteral parse_literal() {
        BodyLiteral lit;
        if (at(TokenKind::KwNot)) {
            lit.negated = true;
            ++i_;
        }
        lit.atom = parse_atom();
        return lit;
    }

    // An atom in a body: either a comparison (operand relop operand) or a
    // plain predicate atom.
    Atom parse_atom() {
        const SourcePos at_pos = cur().pos;
        Term first = parse_operand();
        if (at(TokenKind::RelOp)) {
            Atom a;
            a.is_comparison = true;
            a.pos = at_pos;
            a.lhs = std::move(first);
            a.op = toks_[i_++].rel;
            a.rhs = parse_operand();
            return a;
        }
        if (first.kind == Term::Kind::Variable) fail("a variable is not an atom");
        if (first.kind == Term::Kind::Number) fail("a number is not an atom");
        Atom a;
        a.pos = at_pos;
        a.name = std::move(first.name);
        a.args = std::move(first.args);
        return a;
    }

    // Head position: only predicate / 0-ary id allowed.
    Atom parse_predicate_atom(const std::string& what) {
        if (!at(TokenKind::Identifier)) fail("expected " + what);
        Term t = parse_operand();
        Atom a;
        a.pos = t.pos;
        a.name = std::move(t.name);
        a.args = std::move(t.args);
        return a;
    }

    Term parse_operand() {
        Term t;
        t.pos = cur().pos;
        if (at(TokenKind::Variable)) {
            t.kind = Term::Kind::Variable;
            t.name = toks_[i_++].text;
            return t;
        }
        if (at(TokenKind::Number)) {
            t.kind = Term::Kind::Number;
            t.number = toks_[i_++].text;
            return t;
        }
        if (!at(TokenKind::Identifier)) fail("expected a term");
        t.name = toks_[i_++].text;
        if (at(TokenKind::LParen)) {
            ++i_;
            t.kind = Term::Kind::Predicate;
            t.args.push_back(parse_operand());
            while (at(TokenKind::Comma)) {
                ++i_;
                t.args.push_back(parse_operand());
            }
            expect(TokenKind::RParen, "')'");
        } else {
            t.kind = Term::Kind::Constant;
        }
        return t;
    }

    std::vector<Token> toks_;
    std::string file_;
    size_t i_ = 0;
};

} // namespace detail

inline Program parse(std::string_view source, const std::string& file = "<input>") {
    return detail::Parser(tokenize(source, file), file).parse_program();
}

} // namespace resin
