#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "subexp/errors.hpp"

namespace subexp {

// ---------------------------------------------------------------------------
// Abstract syntax tree
// ---------------------------------------------------------------------------

enum class NodeKind {
    Literal, // numeric constant
    VarT,    // prefix variable t<k>, 1-based index stored in `index`
    VarX,    // distinguished test-function variable
    VarY,    // second test-function variable (bivariate)
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Sqrt,
    Abs,
    Sin,
    Cos,
    Min,
    Max,
};

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

/// Immutable expression node. Trees are shared freely across threads.
struct ExprNode {
    NodeKind kind;
    double literal = 0.0; // Literal
    int index = 0;        // VarT, 1-based
    ExprPtr lhs;          // unary operand or left operand
    ExprPtr rhs;          // right operand (binary ops, second min/max arg)
};

/// A parsed expression plus the static facts the rest of the library needs.
struct BoundExpr {
    ExprPtr root;
    int max_prefix_index = 0; // highest t<k> index referenced (0 if none)
    bool uses_x = false;
    bool uses_y = false;

    bool valid() const { return root != nullptr; }
};

namespace detail {

inline ExprPtr make_literal(double v) {
    ExprNode n;
    n.kind = NodeKind::Literal;
    n.literal = v;
    return std::make_shared<const ExprNode>(std::move(n));
}

inline ExprPtr make_var(NodeKind kind, int index = 0) {
    ExprNode n;
    n.kind = kind;
    n.index = index;
    return std::make_shared<const ExprNode>(std::move(n));
}

inline ExprPtr make_op(NodeKind kind, ExprPtr a, ExprPtr b = nullptr) {
    ExprNode n;
    n.kind = kind;
    n.lhs = std::move(a);
    n.rhs = std::move(b);
    return std::make_shared<const ExprNode>(std::move(n));
}

// ---------------------------------------------------------------------------
// Tokenizer + recursive descent parser
// ---------------------------------------------------------------------------

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, LParen, RParen, Comma, End };

struct Token {
    Tok kind;
    double number = 0.0;
    std::string ident;
    std::size_t pos = 0;
};

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) { advance(); }

    const Token& peek() const { return cur_; }

    Token next() {
        Token t = cur_;
        advance();
        return t;
    }

private:
    void advance() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        cur_.pos = pos_;
        if (pos_ >= text_.size()) {
            cur_.kind = Tok::End;
            return;
        }
        char c = text_[pos_];
        switch (c) {
        case '+': cur_.kind = Tok::Plus; ++pos_; return;
        case '-': cur_.kind = Tok::Minus; ++pos_; return;
        case '*': cur_.kind = Tok::Star; ++pos_; return;
        case '/': cur_.kind = Tok::Slash; ++pos_; return;
        case '(': cur_.kind = Tok::LParen; ++pos_; return;
        case ')': cur_.kind = Tok::RParen; ++pos_; return;
        case ',': cur_.kind = Tok::Comma; ++pos_; return;
        default: break;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
                ++pos_;
            // optional exponent part of the literal, e.g. 1e-3
            if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
                std::size_t mark = pos_;
                ++pos_;
                if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
                if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                        ++pos_;
                } else {
                    pos_ = mark; // 'e' begins an identifier, not an exponent
                }
            }
            double v = 0.0;
            auto [p, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
            if (ec != std::errc() || p != text_.data() + pos_)
                throw SyntaxError("malformed numeric literal", start);
            cur_.kind = Tok::Number;
            cur_.number = v;
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            cur_.kind = Tok::Ident;
            cur_.ident = std::string(text_.substr(start, pos_ - start));
            return;
        }
        throw SyntaxError(std::string("unexpected character '") + c + "'", pos_);
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    Token cur_;
};

struct ParseContext {
    int max_prefix_index; // t<k> legal iff k < max_prefix_index
    bool allow_x;
    bool allow_y;
    int seen_max_t = 0;
    bool seen_x = false;
    bool seen_y = false;
};

inline ExprPtr parse_sum(Lexer& lx, ParseContext& ctx);

inline ExprPtr parse_primary(Lexer& lx, ParseContext& ctx) {
    Token t = lx.next();
    switch (t.kind) {
    case Tok::Number:
        return make_literal(t.number);
    case Tok::LParen: {
        ExprPtr inner = parse_sum(lx, ctx);
        Token close = lx.next();
        if (close.kind != Tok::RParen) throw SyntaxError("expected ')'", close.pos);
        return inner;
    }
    case Tok::Ident: {
        const std::string& id = t.ident;
        if (id == "x") {
            if (!ctx.allow_x) throw VariableOutOfScope("variable 'x' not allowed here", t.pos);
            ctx.seen_x = true;
            return make_var(NodeKind::VarX);
        }
        if (id == "y") {
            if (!ctx.allow_y) throw VariableOutOfScope("variable 'y' not allowed here", t.pos);
            ctx.seen_y = true;
            return make_var(NodeKind::VarY);
        }
        if (id.size() >= 2 && id[0] == 't') {
            int k = 0;
            auto [p, ec] = std::from_chars(id.data() + 1, id.data() + id.size(), k);
            if (ec == std::errc() && p == id.data() + id.size()) {
                if (k < 1) throw SyntaxError("variable index must be >= 1", t.pos);
                if (k >= ctx.max_prefix_index)
                    throw VariableOutOfScope("variable t" + std::to_string(k) +
                                                 " exceeds allowed prefix (max t" +
                                                 std::to_string(ctx.max_prefix_index - 1) + ")",
                                             t.pos);
                ctx.seen_max_t = std::max(ctx.seen_max_t, k);
                return make_var(NodeKind::VarT, k);
            }
        }
        // function call
        NodeKind fk;
        int arity;
        if (id == "sqrt") { fk = NodeKind::Sqrt; arity = 1; }
        else if (id == "abs") { fk = NodeKind::Abs; arity = 1; }
        else if (id == "sin") { fk = NodeKind::Sin; arity = 1; }
        else if (id == "cos") { fk = NodeKind::Cos; arity = 1; }
        else if (id == "min") { fk = NodeKind::Min; arity = 2; }
        else if (id == "max") { fk = NodeKind::Max; arity = 2; }
        else throw SyntaxError("unknown identifier '" + id + "'", t.pos);

        Token open = lx.next();
        if (open.kind != Tok::LParen) throw SyntaxError("expected '(' after '" + id + "'", open.pos);
        ExprPtr a = parse_sum(lx, ctx);
        ExprPtr b;
        if (arity == 2) {
            Token comma = lx.next();
            if (comma.kind != Tok::Comma)
                throw SyntaxError("'" + id + "' expects two arguments", comma.pos);
            b = parse_sum(lx, ctx);
        }
        Token close = lx.next();
        if (close.kind != Tok::RParen) throw SyntaxError("expected ')'", close.pos);
        return make_op(fk, std::move(a), std::move(b));
    }
    case Tok::End:
        throw SyntaxError("unexpected end of expression", t.pos);
    default:
        throw SyntaxError("unexpected token", t.pos);
    }
}

inline ExprPtr parse_unary(Lexer& lx, ParseContext& ctx) {
    if (lx.peek().kind == Tok::Minus) {
        Token m = lx.next();
        (void)m;
        ExprPtr inner = parse_unary(lx, ctx);
        return make_op(NodeKind::Neg, std::move(inner));
    }
    return parse_primary(lx, ctx);
}

inline ExprPtr parse_product(Lexer& lx, ParseContext& ctx) {
    ExprPtr left = parse_unary(lx, ctx);
    while (lx.peek().kind == Tok::Star || lx.peek().kind == Tok::Slash) {
        Token op = lx.next();
        ExprPtr right = parse_unary(lx, ctx);
        left = make_op(op.kind == Tok::Star ? NodeKind::Mul : NodeKind::Div,
                       std::move(left), std::move(right));
    }
    return left;
}

inline ExprPtr parse_sum(Lexer& lx, ParseContext& ctx) {
    ExprPtr left = parse_product(lx, ctx);
    while (lx.peek().kind == Tok::Plus || lx.peek().kind == Tok::Minus) {
        Token op = lx.next();
        ExprPtr right = parse_product(lx, ctx);
        left = make_op(op.kind == Tok::Plus ? NodeKind::Add : NodeKind::Sub,
                       std::move(left), std::move(right));
    }
    return left;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Public parsing entry points
// ---------------------------------------------------------------------------

/**
 * Parses expression text into an immutable AST.
 *
 * Grammar: decimal literals, prefix variables t1..t<max_prefix_index-1>,
 * optionally the distinguished variables x / y, binary + - * /, unary -,
 * and the functions sqrt, abs, sin, cos (one argument) and min, max (two
 * arguments). Standard precedence: unary minus binds tightest, then * /,
 * then + -.
 *
 * Throws SyntaxError or VariableOutOfScope.
 */
inline BoundExpr parse_expr(std::string_view text, int max_prefix_index, bool allow_x = false,
                            bool allow_y = false) {
    if (text.empty()) throw SyntaxError("empty expression", 0);
    detail::Lexer lx(text);
    detail::ParseContext ctx{max_prefix_index, allow_x, allow_y};
    ExprPtr root = detail::parse_sum(lx, ctx);
    detail::Token tail = lx.next();
    if (tail.kind != detail::Tok::End) throw SyntaxError("trailing input after expression", tail.pos);
    return BoundExpr{std::move(root), ctx.seen_max_t, ctx.seen_x, ctx.seen_y};
}

/// Parses a bound function f(t1..t<i-1>); x and y are rejected.
inline BoundExpr parse_bound_expr(std::string_view text, int max_prefix_index) {
    return parse_expr(text, max_prefix_index, false, false);
}

/// Parses a test function phi(x) or phi(x, y); prefix variables are rejected.
inline BoundExpr parse_test_expr(std::string_view text, bool bivariate) {
    return parse_expr(text, 1, true, bivariate);
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace detail {

inline double eval_node(const ExprNode& n, std::span<const double> prefix, double x, double y) {
    switch (n.kind) {
    case NodeKind::Literal: return n.literal;
    case NodeKind::VarT:
        if (static_cast<std::size_t>(n.index) > prefix.size())
            throw DomainError("prefix too short for variable t" + std::to_string(n.index));
        return prefix[static_cast<std::size_t>(n.index - 1)];
    case NodeKind::VarX: return x;
    case NodeKind::VarY: return y;
    case NodeKind::Neg: return -eval_node(*n.lhs, prefix, x, y);
    case NodeKind::Add: return eval_node(*n.lhs, prefix, x, y) + eval_node(*n.rhs, prefix, x, y);
    case NodeKind::Sub: return eval_node(*n.lhs, prefix, x, y) - eval_node(*n.rhs, prefix, x, y);
    case NodeKind::Mul: return eval_node(*n.lhs, prefix, x, y) * eval_node(*n.rhs, prefix, x, y);
    case NodeKind::Div: {
        double denom = eval_node(*n.rhs, prefix, x, y);
        if (denom == 0.0) throw DomainError("division by zero");
        return eval_node(*n.lhs, prefix, x, y) / denom;
    }
    case NodeKind::Sqrt: {
        double a = eval_node(*n.lhs, prefix, x, y);
        if (a < 0.0) throw DomainError("sqrt of negative value " + std::to_string(a));
        return std::sqrt(a);
    }
    case NodeKind::Abs: return std::fabs(eval_node(*n.lhs, prefix, x, y));
    case NodeKind::Sin: return std::sin(eval_node(*n.lhs, prefix, x, y));
    case NodeKind::Cos: return std::cos(eval_node(*n.lhs, prefix, x, y));
    case NodeKind::Min:
        return std::min(eval_node(*n.lhs, prefix, x, y), eval_node(*n.rhs, prefix, x, y));
    case NodeKind::Max:
        return std::max(eval_node(*n.lhs, prefix, x, y), eval_node(*n.rhs, prefix, x, y));
    }
    throw DomainError("corrupt expression node");
}

} // namespace detail

/**
 * Evaluates an expression at the given prefix vector (t1..tk). The prefix must
 * cover every referenced variable. Throws DomainError on sqrt of a negative,
 * division by zero, or a non-finite result.
 */
inline double eval_expr(const BoundExpr& e, std::span<const double> prefix) {
    double v = detail::eval_node(*e.root, prefix, 0.0, 0.0);
    if (!std::isfinite(v)) throw DomainError("expression evaluated to a non-finite value");
    return v;
}

/// Evaluates a test function at x (and y for bivariate expressions).
inline double eval_test_expr(const BoundExpr& e, double x, double y = 0.0) {
    double v = detail::eval_node(*e.root, {}, x, y);
    if (!std::isfinite(v)) throw DomainError("expression evaluated to a non-finite value");
    return v;
}

// ---------------------------------------------------------------------------
// Static analysis
// ---------------------------------------------------------------------------

/// True when the subtree references no variable at all.
inline bool is_constant_expr(const ExprNode& n) {
    switch (n.kind) {
    case NodeKind::Literal: return true;
    case NodeKind::VarT:
    case NodeKind::VarX:
    case NodeKind::VarY: return false;
    case NodeKind::Neg:
    case NodeKind::Sqrt:
    case NodeKind::Abs:
    case NodeKind::Sin:
    case NodeKind::Cos: return is_constant_expr(*n.lhs);
    default: return is_constant_expr(*n.lhs) && is_constant_expr(*n.rhs);
    }
}

/// True when the subtree is an affine function of its variables. Products and
/// quotients qualify only when one side is variable-free; the nonlinear
/// functions qualify only on variable-free arguments.
inline bool is_affine_expr(const ExprNode& n) {
    switch (n.kind) {
    case NodeKind::Literal:
    case NodeKind::VarT:
    case NodeKind::VarX:
    case NodeKind::VarY: return true;
    case NodeKind::Neg: return is_affine_expr(*n.lhs);
    case NodeKind::Add:
    case NodeKind::Sub: return is_affine_expr(*n.lhs) && is_affine_expr(*n.rhs);
    case NodeKind::Mul:
        return (is_constant_expr(*n.lhs) && is_affine_expr(*n.rhs)) ||
               (is_affine_expr(*n.lhs) && is_constant_expr(*n.rhs));
    case NodeKind::Div: return is_affine_expr(*n.lhs) && is_constant_expr(*n.rhs);
    case NodeKind::Sqrt:
    case NodeKind::Abs:
    case NodeKind::Sin:
    case NodeKind::Cos: return is_constant_expr(*n.lhs);
    case NodeKind::Min:
    case NodeKind::Max: return is_constant_expr(*n.lhs) && is_constant_expr(*n.rhs);
    }
    return false;
}

inline bool is_constant(const BoundExpr& e) { return is_constant_expr(*e.root); }
inline bool is_affine(const BoundExpr& e) { return is_affine_expr(*e.root); }

// ---------------------------------------------------------------------------
// Canonical printer
// ---------------------------------------------------------------------------

namespace detail {

/// Shortest round-trip formatting of a double literal.
inline std::string format_literal(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

inline int precedence(NodeKind k) {
    switch (k) {
    case NodeKind::Add:
    case NodeKind::Sub: return 1;
    case NodeKind::Mul:
    case NodeKind::Div: return 2;
    case NodeKind::Neg: return 3;
    default: return 4;
    }
}

inline void print_node(const ExprNode& n, std::string& out) {
    auto child = [&](const ExprNode& c, bool needs_paren) {
        if (needs_paren) out += '(';
        print_node(c, out);
        if (needs_paren) out += ')';
    };
    switch (n.kind) {
    case NodeKind::Literal: out += format_literal(n.literal); return;
    case NodeKind::VarT: out += 't' + std::to_string(n.index); return;
    case NodeKind::VarX: out += 'x'; return;
    case NodeKind::VarY: out += 'y'; return;
    case NodeKind::Neg:
        out += '-';
        child(*n.lhs, precedence(n.lhs->kind) < precedence(NodeKind::Neg));
        return;
    case NodeKind::Add:
    case NodeKind::Sub: {
        child(*n.lhs, precedence(n.lhs->kind) < 1);
        out += n.kind == NodeKind::Add ? " + " : " - ";
        child(*n.rhs, precedence(n.rhs->kind) <= 1);
        return;
    }
    case NodeKind::Mul:
    case NodeKind::Div: {
        child(*n.lhs, precedence(n.lhs->kind) < 2);
        out += n.kind == NodeKind::Mul ? "*" : "/";
        child(*n.rhs, precedence(n.rhs->kind) <= 2);
        return;
    }
    case NodeKind::Sqrt:
    case NodeKind::Abs:
    case NodeKind::Sin:
    case NodeKind::Cos: {
        switch (n.kind) {
        case NodeKind::Sqrt: out += "sqrt("; break;
        case NodeKind::Abs: out += "abs("; break;
        case NodeKind::Sin: out += "sin("; break;
        default: out += "cos("; break;
        }
        print_node(*n.lhs, out);
        out += ')';
        return;
    }
    case NodeKind::Min:
    case NodeKind::Max:
        out += n.kind == NodeKind::Min ? "min(" : "max(";
        print_node(*n.lhs, out);
        out += ", ";
        print_node(*n.rhs, out);
        out += ')';
        return;
    }
}

} // namespace detail

/// Canonical text form; reparsing it yields a structurally identical tree.
inline std::string to_string(const BoundExpr& e) {
    std::string out;
    detail::print_node(*e.root, out);
    return out;
}

/// Structural equality of two ASTs.
inline bool expr_equal(const ExprNode& a, const ExprNode& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
    case NodeKind::Literal: return a.literal == b.literal;
    case NodeKind::VarT: return a.index == b.index;
    case NodeKind::VarX:
    case NodeKind::VarY: return true;
    default:
        if ((a.lhs == nullptr) != (b.lhs == nullptr)) return false;
        if ((a.rhs == nullptr) != (b.rhs == nullptr)) return false;
        if (a.lhs && !expr_equal(*a.lhs, *b.lhs)) return false;
        if (a.rhs && !expr_equal(*a.rhs, *b.rhs)) return false;
        return true;
    }
}

inline bool expr_equal(const BoundExpr& a, const BoundExpr& b) {
    return expr_equal(*a.root, *b.root);
}

} // namespace subexp
