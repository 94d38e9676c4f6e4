#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "resin/ast.hpp"
#include "resin/errors.hpp"

namespace resin {

enum class TokenKind {
    Identifier, // [a-z][a-zA-Z0-9_]*
    Variable,   // [A-Z][a-zA-Z0-9_]*
    Number,     // [0-9]+(.[0-9]+)?
    Path,       // "..." restricted to [a-zA-Z0-9_/]
    TypeName,   // Probability | Density | Number | Boolean
    KwSource,
    KwTarget,
    KwIf,
    KwAnd,
    KwNot,
    ArrowIn,  // <-
    ArrowOut, // ->
    RelOp,    // > < == >= <=
    LParen,
    RParen,
    Comma,
    Dot,
    Comment, // '#' to end of line
    EndOfFile,
};

struct Token {
    TokenKind kind = TokenKind::EndOfFile;
    std::string text; // lexeme (path without quotes, comment without '#')
    RelOp rel = RelOp::Gt;
    SignalType type = SignalType::Probability;
    SourcePos pos;
};

namespace detail {

[[noreturn]] inline void lex_error(const std::string& file, SourcePos pos, const std::string& msg) {
    throw CompileError(file + ":" + std::to_string(pos.line) + ":" + std::to_string(pos.col) + ": " + msg);
}

} // namespace detail

// Tokenize a whole program. Comments become tokens so the parser can keep
// them in the AST. Throws CompileError (file:line:col: message) on illegal
// characters and unterminated path strings.
inline std::vector<Token> tokenize(std::string_view src, const std::string& file = "<input>") {
    std::vector<Token> out;
    size_t i = 0;
    SourcePos pos{1, 1};

    auto advance = [&](size_t n = 1) {
        for (size_t k = 0; k < n && i < src.size(); ++k, ++i) {
            if (src[i] == '\n') {
                ++pos.line;
                pos.col = 1;
            } else {
                ++pos.col;
            }
        }
    };
    auto peek = [&](size_t off = 0) -> char { return i + off < src.size() ? src[i + off] : '\0'; };
    auto push = [&](TokenKind kind, std::string text, SourcePos at) {
        Token t;
        t.kind = kind;
        t.text = std::move(text);
        t.pos = at;
        out.push_back(std::move(t));
    };

    while (i < src.size()) {
        const char c = peek();
        const SourcePos at = pos;
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            advance();
            continue;
        }
        if (c == '#') {
            advance();
            std::string text;
            while (i < src.size() && peek() != '\n') {
                text += peek();
                advance();
            }
            push(TokenKind::Comment, std::move(text), at);
            continue;
        }
        if (std::islower(static_cast<unsigned char>(c))) {
            std::string word;
            while (i < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
                word += peek();
                advance();
            }
            TokenKind kind = TokenKind::Identifier;
            if (word == "source") kind = TokenKind::KwSource;
            else if (word == "target") kind = TokenKind::KwTarget;
            else if (word == "if") kind = TokenKind::KwIf;
            else if (word == "and") kind = TokenKind::KwAnd;
            else if (word == "not") kind = TokenKind::KwNot;
            push(kind, std::move(word), at);
            continue;
        }
        if (std::isupper(static_cast<unsigned char>(c))) {
            std::string word;
            while (i < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
                word += peek();
                advance();
            }
            Token t;
            t.pos = at;
            if (word == "Probability" || word == "Density" || word == "Number" || word == "Boolean") {
                t.kind = TokenKind::TypeName;
                t.type = word == "Probability" ? SignalType::Probability
                         : word == "Density"   ? SignalType::Density
                         : word == "Number"    ? SignalType::Number
                                               : SignalType::Boolean;
            } else {
                t.kind = TokenKind::Variable;
            }
            t.text = std::move(word);
            out.push_back(std::move(t));
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::string num;
            while (std::isdigit(static_cast<unsigned char>(peek()))) {
                num += peek();
                advance();
            }
            if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
                num += '.';
                advance();
                while (std::isdigit(static_cast<unsigned char>(peek()))) {
                    num += peek();
                    advance();
                }
            }
            push(TokenKind::Number, std::move(num), at);
            continue;
        }
        if (c == '"') {
            advance();
            std::string path;
            while (true) {
                if (i >= src.size() || peek() == '\n') {
                    detail::lex_error(file, at, "unterminated path string");
                }
                const char p = peek();
                if (p == '"') {
                    advance();
                    break;
                }
                if (!std::isalnum(static_cast<unsigned char>(p)) && p != '_' && p != '/') {
                    detail::lex_error(file, pos,
                                      std::string("invalid character '") + p + "' in path string");
                }
                path += p;
                advance();
            }
            push(TokenKind::Path, std::move(path), at);
            continue;
        }
        switch (c) {
            case '(': advance(); push(TokenKind::LParen, "(", at); continue;
            case ')': advance(); push(TokenKind::RParen, ")", at); continue;
            case ',': advance(); push(TokenKind::Comma, ",", at); continue;
            case '.': advance(); push(TokenKind::Dot, ".", at); continue;
            case '<': {
                if (peek(1) == '-') {
                    advance(2);
                    push(TokenKind::ArrowIn, "<-", at);
                } else {
                    Token t;
                    t.pos = at;
                    t.kind = TokenKind::RelOp;
                    if (peek(1) == '=') {
                        advance(2);
                        t.rel = RelOp::Le;
                        t.text = "<=";
                    } else {
                        advance();
                        t.rel = RelOp::Lt;
                        t.text = "<";
                    }
                    out.push_back(std::move(t));
                }
                continue;
            }
            case '>': {
                Token t;
                t.pos = at;
                t.kind = TokenKind::RelOp;
                if (peek(1) == '=') {
                    advance(2);
                    t.rel = RelOp::Ge;
                    t.text = ">=";
                } else {
                    advance();
                    t.rel = RelOp::Gt;
                    t.text = ">";
                }
                out.push_back(std::move(t));
                continue;
            }
            case '=': {
                if (peek(1) == '=') {
                    Token t;
                    t.pos = at;
                    t.kind = TokenKind::RelOp;
                    t.rel = RelOp::Eq;
                    t.text = "==";
                    advance(2);
                    out.push_back(std::move(t));
                    continue;
                }
                detail::lex_error(file, at, "illegal character '=' (did you mean '==')");
            }
            case '-': {
                if (peek(1) == '>') {
                    advance(2);
                    push(TokenKind::ArrowOut, "->", at);
                    continue;
                }
                detail::lex_error(file, at, "illegal character '-' (did you mean '->')");
            }
            default: detail::lex_error(file, at, std::string("illegal character '") + c + "'");
        }
    }
    push(TokenKind::EndOfFile, "", pos);
    return out;
}

} // namespace resin
