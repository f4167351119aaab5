#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <vector>

#include "autocoach/reward/ast.hpp"
#include "autocoach/reward/fingerprint.hpp"

namespace autocoach::dsl {

enum class ParseErrorKind {
    syntax,
    missing_total,
    duplicate_component,
    unknown_identifier,
    reserved_identifier,
    depth_exceeded,
    size_exceeded,
};

inline const char* to_string(ParseErrorKind k) {
    switch (k) {
        case ParseErrorKind::syntax: return "syntax";
        case ParseErrorKind::missing_total: return "missing_total";
        case ParseErrorKind::duplicate_component: return "duplicate_component";
        case ParseErrorKind::unknown_identifier: return "unknown_identifier";
        case ParseErrorKind::reserved_identifier: return "reserved_identifier";
        case ParseErrorKind::depth_exceeded: return "depth_exceeded";
        default: return "size_exceeded";
    }
}

struct ParseError {
    ParseErrorKind kind = ParseErrorKind::syntax;
    std::string message;
    int line = 0;
    int col = 0;

    std::string describe() const {
        return std::string(to_string(kind)) + " at line " + std::to_string(line) + ", col " +
               std::to_string(col) + ": " + message;
    }
};

struct ParseResult {
    std::optional<RewardProgram> program;
    std::optional<ParseError> error;

    bool ok() const { return program.has_value(); }
};

// The grammar, quoted verbatim by docs and prompt templates.
inline constexpr const char* kGrammarEbnf = R"EBNF(program    = { statement , newline } , total_stmt ;
statement  = name , "=" , expr ;          (* one named reward component *)
total_stmt = "total" , "=" , expr ;       (* required, must come last *)
expr       = "if" , expr , "then" , expr , "else" , expr | comparison ;
comparison = sum , { ( "<" | "<=" | ">" | ">=" | "==" ) , sum } ;
sum        = term , { ( "+" | "-" ) , term } ;
term       = unary , { ( "*" | "/" ) , unary } ;
unary      = "-" , unary | primary ;
primary    = number | identifier | call | "(" , expr , ")" ;
call       = ( "abs" | "exp" | "tanh" | "sqrt" ) , "(" , expr , ")"
           | ( "min" | "max" ) , "(" , expr , "," , expr , ")"
           | "clip" , "(" , expr , "," , expr , "," , expr , ")" ;
identifier = accessible variable | previously defined component name ;
comment    = "#" , { any character } , end of line ;)EBNF";

namespace detail {

enum class TokKind { number, ident, op, newline, end };

struct Token {
    TokKind kind = TokKind::end;
    std::string text;
    double number = 0.0;
    int line = 1;
    int col = 1;
};

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(src) {}

    // Newlines inside parentheses are suppressed so long expressions may wrap.
    std::optional<Token> next(ParseError& err) {
        for (;;) {
            if (pos_ >= src_.size()) return Token{TokKind::end, "", 0.0, line_, col_};
            const char c = src_[pos_];
            if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
                continue;
            }
            if (c == '\n') {
                const Token t{TokKind::newline, "\n", 0.0, line_, col_};
                advance();
                if (paren_depth_ > 0) continue;
                return t;
            }
            if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
                continue;
            }
            break;
        }

        const int line = line_, col = col_;
        const char c = src_[pos_];

        if (std::isdigit(static_cast<unsigned char>(c))) return lex_number(line, col, err);

        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string name;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
                name += src_[pos_];
                advance();
            }
            return Token{TokKind::ident, name, 0.0, line, col};
        }

        auto two = [&](const char* s) {
            return pos_ + 1 < src_.size() && src_[pos_] == s[0] && src_[pos_ + 1] == s[1];
        };
        for (const char* op : {"<=", ">=", "=="}) {
            if (two(op)) {
                advance();
                advance();
                return Token{TokKind::op, op, 0.0, line, col};
            }
        }
        if (std::string("+-*/()=<>,").find(c) != std::string::npos) {
            if (c == '(') ++paren_depth_;
            if (c == ')' && paren_depth_ > 0) --paren_depth_;
            advance();
            return Token{TokKind::op, std::string(1, c), 0.0, line, col};
        }

        err = {ParseErrorKind::syntax, std::string("unexpected character '") + c + "'", line, col};
        return std::nullopt;
    }

private:
    std::optional<Token> lex_number(int line, int col, ParseError& err) {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            advance();
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t mark = pos_;
            advance();
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
            if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
            } else {
                pos_ = mark;  // 'e' belongs to a following identifier
            }
        }
        const std::string text = src_.substr(start, pos_ - start);
        try {
            return Token{TokKind::number, text, std::stod(text), line, col};
        } catch (...) {
            err = {ParseErrorKind::syntax, "invalid number literal '" + text + "'", line, col};
            return std::nullopt;
        }
    }

    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    const std::string& src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
    int paren_depth_ = 0;
};

class Parser {
public:
    explicit Parser(const std::string& src) : src_(src), lexer_(src_) {}

    ParseResult run() {
        if (!bump()) return fail();

        bool saw_total = false;
        while (cur_.kind != TokKind::end) {
            if (cur_.kind == TokKind::newline) {
                if (!bump()) return fail();
                continue;
            }
            if (saw_total) {
                err_ = {ParseErrorKind::syntax, "statements after total", cur_.line, cur_.col};
                return fail();
            }
            if (!parse_statement(saw_total)) return fail();
        }
        if (!saw_total) {
            err_ = {ParseErrorKind::missing_total, "program must end with 'total = <expr>'", cur_.line,
                    cur_.col};
            return fail();
        }

        program_.source_text = src_;
        program_.fingerprint = fingerprint(program_);
        return {std::move(program_), std::nullopt};
    }

private:
    ParseResult fail() { return {std::nullopt, err_}; }

    bool bump() {
        auto t = lexer_.next(err_);
        if (!t) return false;
        cur_ = *t;
        return true;
    }

    bool expect_op(const char* op) {
        if (cur_.kind != TokKind::op || cur_.text != op) {
            err_ = {ParseErrorKind::syntax, std::string("expected '") + op + "', found '" + cur_.text + "'",
                    cur_.line, cur_.col};
            return false;
        }
        return bump();
    }

    bool parse_statement(bool& saw_total) {
        if (cur_.kind != TokKind::ident) {
            err_ = {ParseErrorKind::syntax, "expected a component name", cur_.line, cur_.col};
            return false;
        }
        const Token name_tok = cur_;
        const std::string name = cur_.text;
        if (!bump()) return false;
        if (!expect_op("=")) return false;

        int root = parse_expr(0);
        if (root < 0) return false;

        if (cur_.kind != TokKind::newline && cur_.kind != TokKind::end) {
            err_ = {ParseErrorKind::syntax, "unexpected trailing token '" + cur_.text + "'", cur_.line,
                    cur_.col};
            return false;
        }

        if (name == "total") {
            program_.total_root = root;
            saw_total = true;
            return true;
        }
        if (is_reserved(name)) {
            err_ = {ParseErrorKind::reserved_identifier, "'" + name + "' is a reserved name", name_tok.line,
                    name_tok.col};
            return false;
        }
        if (accessible_var_index(name) >= 0) {
            err_ = {ParseErrorKind::reserved_identifier,
                    "'" + name + "' shadows an accessible variable", name_tok.line, name_tok.col};
            return false;
        }
        if (program_.component_index(name) >= 0) {
            err_ = {ParseErrorKind::duplicate_component, "component '" + name + "' already defined",
                    name_tok.line, name_tok.col};
            return false;
        }
        program_.components.push_back({name, root});
        return true;
    }

    static bool is_reserved(const std::string& name) {
        if (name == "if" || name == "then" || name == "else") return true;
        for (const char* b : kBuiltinNames)
            if (name == b) return true;
        return false;
    }

    int add_node(ExprNode n) {
        if (static_cast<int>(program_.nodes.size()) >= kMaxProgramNodes) {
            err_ = {ParseErrorKind::size_exceeded,
                    "program exceeds " + std::to_string(kMaxProgramNodes) + " nodes", cur_.line, cur_.col};
            return -1;
        }
        program_.nodes.push_back(n);
        return static_cast<int>(program_.nodes.size()) - 1;
    }

    // Returns a node index or -1 with err_ set.
    int parse_expr(int depth) {
        if (depth >= kMaxExprDepth) {
            err_ = {ParseErrorKind::depth_exceeded,
                    "expression deeper than " + std::to_string(kMaxExprDepth), cur_.line, cur_.col};
            return -1;
        }
        if (cur_.kind == TokKind::ident && cur_.text == "if") {
            if (!bump()) return -1;
            const int cond = parse_expr(depth + 1);
            if (cond < 0) return -1;
            if (!expect_keyword("then")) return -1;
            const int thn = parse_expr(depth + 1);
            if (thn < 0) return -1;
            if (!expect_keyword("else")) return -1;
            const int els = parse_expr(depth + 1);
            if (els < 0) return -1;
            ExprNode n;
            n.kind = ExprKind::if_else;
            n.child[0] = cond;
            n.child[1] = thn;
            n.child[2] = els;
            n.child_count = 3;
            return add_node(n);
        }
        return parse_comparison(depth);
    }

    bool expect_keyword(const char* kw) {
        if (cur_.kind != TokKind::ident || cur_.text != kw) {
            err_ = {ParseErrorKind::syntax, std::string("expected '") + kw + "', found '" + cur_.text + "'",
                    cur_.line, cur_.col};
            return false;
        }
        return bump();
    }

    int parse_binary_chain(int depth, int (Parser::*sub)(int), std::initializer_list<std::pair<const char*, ExprKind>> ops) {
        int lhs = (this->*sub)(depth + 1);
        if (lhs < 0) return -1;
        for (;;) {
            bool matched = false;
            for (const auto& [text, kind] : ops) {
                if (cur_.kind == TokKind::op && cur_.text == text) {
                    if (!bump()) return -1;
                    const int rhs = (this->*sub)(depth + 1);
                    if (rhs < 0) return -1;
                    ExprNode n;
                    n.kind = kind;
                    n.child[0] = lhs;
                    n.child[1] = rhs;
                    n.child_count = 2;
                    lhs = add_node(n);
                    if (lhs < 0) return -1;
                    matched = true;
                    break;
                }
            }
            if (!matched) return lhs;
        }
    }

    int parse_comparison(int depth) {
        return parse_binary_chain(depth, &Parser::parse_sum,
                                  {{"<=", ExprKind::le},
                                   {">=", ExprKind::ge},
                                   {"==", ExprKind::eq},
                                   {"<", ExprKind::lt},
                                   {">", ExprKind::gt}});
    }

    int parse_sum(int depth) {
        return parse_binary_chain(depth, &Parser::parse_term,
                                  {{"+", ExprKind::add}, {"-", ExprKind::sub}});
    }

    int parse_term(int depth) {
        return parse_binary_chain(depth, &Parser::parse_unary,
                                  {{"*", ExprKind::mul}, {"/", ExprKind::div}});
    }

    int parse_unary(int depth) {
        if (depth >= kMaxExprDepth) {
            err_ = {ParseErrorKind::depth_exceeded,
                    "expression deeper than " + std::to_string(kMaxExprDepth), cur_.line, cur_.col};
            return -1;
        }
        if (cur_.kind == TokKind::op && cur_.text == "-") {
            if (!bump()) return -1;
            const int operand = parse_unary(depth + 1);
            if (operand < 0) return -1;
            ExprNode n;
            n.kind = ExprKind::neg;
            n.child[0] = operand;
            n.child_count = 1;
            return add_node(n);
        }
        return parse_primary(depth);
    }

    int parse_primary(int depth) {
        if (cur_.kind == TokKind::number) {
            ExprNode n;
            n.kind = ExprKind::literal;
            n.literal = cur_.number;
            if (!bump()) return -1;
            return add_node(n);
        }
        if (cur_.kind == TokKind::op && cur_.text == "(") {
            if (!bump()) return -1;
            const int inner = parse_expr(depth + 1);
            if (inner < 0) return -1;
            if (!expect_op(")")) return -1;
            return inner;
        }
        if (cur_.kind == TokKind::ident) {
            const Token name_tok = cur_;
            const std::string name = cur_.text;
            if (!bump()) return -1;
            if (cur_.kind == TokKind::op && cur_.text == "(") return parse_call(name, name_tok, depth);
            return resolve_identifier(name, name_tok);
        }
        err_ = {ParseErrorKind::syntax, "expected an expression, found '" + cur_.text + "'", cur_.line,
                cur_.col};
        return -1;
    }

    int resolve_identifier(const std::string& name, const Token& tok) {
        ExprNode n;
        const int var = accessible_var_index(name);
        if (var >= 0) {
            n.kind = ExprKind::variable;
            n.var_index = var;
            return add_node(n);
        }
        const int comp = program_.component_index(name);
        if (comp >= 0) {
            n.kind = ExprKind::component_ref;
            n.component_index = comp;
            return add_node(n);
        }
        err_ = {ParseErrorKind::unknown_identifier, "unknown identifier '" + name + "'", tok.line, tok.col};
        return -1;
    }

    int parse_call(const std::string& name, const Token& tok, int depth) {
        int builtin = -1;
        for (int i = 0; i < static_cast<int>(std::size(kBuiltinNames)); ++i)
            if (name == kBuiltinNames[i]) builtin = i;
        if (builtin < 0) {
            err_ = {ParseErrorKind::unknown_identifier, "unknown function '" + name + "'", tok.line,
                    tok.col};
            return -1;
        }
        if (!expect_op("(")) return -1;

        ExprNode n;
        n.kind = ExprKind::call;
        n.builtin = static_cast<Builtin>(builtin);
        const int arity = builtin_arity(n.builtin);
        for (int i = 0; i < arity; ++i) {
            if (i > 0 && !expect_op(",")) return -1;
            const int arg = parse_expr(depth + 1);
            if (arg < 0) return -1;
            n.child[i] = arg;
        }
        n.child_count = arity;
        if (!expect_op(")")) return -1;
        return add_node(n);
    }

    const std::string& src_;
    Lexer lexer_;
    Token cur_;
    ParseError err_;
    RewardProgram program_;
};

}  // namespace detail

// Parses reward program source into a validated RewardProgram. All failure
// modes are reported as machine-readable error kinds so the orchestrator can
// quote them back to the generating agent.
inline ParseResult parse(const std::string& source) { return detail::Parser(source).run(); }

}  // namespace autocoach::dsl
