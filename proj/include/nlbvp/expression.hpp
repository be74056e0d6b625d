#ifndef NLBVP_EXPRESSION_HPP
#define NLBVP_EXPRESSION_HPP

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nlbvp/errors.hpp"

namespace nlbvp {

// Small arithmetic DSL for coefficient fields and nonlinearities.
// Grammar (standard precedence, ^ right-associative and binding tighter
// than unary minus):
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := '-' unary | power
//   power  := primary ('^' unary)?
//   primary:= number | ident '(' expr ')' | ident | '(' expr ')'

enum class ExprOp {
    Literal,
    Variable,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Neg,
    Call,
};

enum class Builtin {
    Sin,
    Cos,
    Exp,
    Sinh,
    Cosh,
    Tanh,
    Sqrt,
    Abs,
    Log,
};

inline std::optional<Builtin> builtin_by_name(std::string_view name) {
    if (name == "sin") return Builtin::Sin;
    if (name == "cos") return Builtin::Cos;
    if (name == "exp") return Builtin::Exp;
    if (name == "sinh") return Builtin::Sinh;
    if (name == "cosh") return Builtin::Cosh;
    if (name == "tanh") return Builtin::Tanh;
    if (name == "sqrt") return Builtin::Sqrt;
    if (name == "abs") return Builtin::Abs;
    if (name == "log") return Builtin::Log;
    return std::nullopt;
}

inline const char* builtin_name(Builtin b) {
    switch (b) {
        case Builtin::Sin: return "sin";
        case Builtin::Cos: return "cos";
        case Builtin::Exp: return "exp";
        case Builtin::Sinh: return "sinh";
        case Builtin::Cosh: return "cosh";
        case Builtin::Tanh: return "tanh";
        case Builtin::Sqrt: return "sqrt";
        case Builtin::Abs: return "abs";
        case Builtin::Log: return "log";
    }
    return "?";
}

struct ExprNode {
    ExprOp op = ExprOp::Literal;
    double value = 0.0;           // Literal
    std::string name;             // Variable
    Builtin fn = Builtin::Sin;    // Call
    std::vector<ExprNode> args;   // children
};

// How far an expression can be from being a globally Lipschitz map of its
// variables, judged structurally (the catalog rule: products of unknowns,
// powers above 1, sqrt/exp/sinh/cosh/log compositions are only locally
// Lipschitz).
enum class LipschitzClass { Global, Local };

namespace detail {

struct Token {
    enum Kind { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End } kind;
    double number = 0.0;
    std::string ident;
    std::size_t pos = 0;
};

class Lexer {
  public:
    explicit Lexer(std::string_view src) : src_(src) {}

    Token next() {
        while (i_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[i_]))) ++i_;
        Token t;
        t.pos = i_;
        if (i_ >= src_.size()) {
            t.kind = Token::End;
            return t;
        }
        char c = src_[i_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t end = i_;
            while (end < src_.size() &&
                   (std::isdigit(static_cast<unsigned char>(src_[end])) || src_[end] == '.'))
                ++end;
            if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
                std::size_t e = end + 1;
                if (e < src_.size() && (src_[e] == '+' || src_[e] == '-')) ++e;
                if (e < src_.size() && std::isdigit(static_cast<unsigned char>(src_[e]))) {
                    while (e < src_.size() && std::isdigit(static_cast<unsigned char>(src_[e]))) ++e;
                    end = e;
                }
            }
            std::string num(src_.substr(i_, end - i_));
            try {
                t.number = std::stod(num);
            } catch (const std::exception&) {
                throw ParseError("malformed number '" + num + "'", i_);
            }
            t.kind = Token::Number;
            i_ = end;
            return t;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t end = i_;
            while (end < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[end])) || src_[end] == '_'))
                ++end;
            t.kind = Token::Ident;
            t.ident = std::string(src_.substr(i_, end - i_));
            i_ = end;
            return t;
        }
        ++i_;
        switch (c) {
            case '+': t.kind = Token::Plus; return t;
            case '-': t.kind = Token::Minus; return t;
            case '*': t.kind = Token::Star; return t;
            case '/': t.kind = Token::Slash; return t;
            case '^': t.kind = Token::Caret; return t;
            case '(': t.kind = Token::LParen; return t;
            case ')': t.kind = Token::RParen; return t;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", t.pos);
    }

  private:
    std::string_view src_;
    std::size_t i_ = 0;
};

class Parser {
  public:
    Parser(std::string_view src, const std::vector<std::string>* allowed_vars)
        : lex_(src), allowed_(allowed_vars) {
        advance();
    }

    ExprNode parse() {
        ExprNode e = parse_expr();
        if (tok_.kind != Token::End) throw ParseError("unexpected trailing input", tok_.pos);
        return e;
    }

  private:
    void advance() { tok_ = lex_.next(); }

    ExprNode parse_expr() {
        ExprNode lhs = parse_term();
        while (tok_.kind == Token::Plus || tok_.kind == Token::Minus) {
            ExprOp op = tok_.kind == Token::Plus ? ExprOp::Add : ExprOp::Sub;
            advance();
            ExprNode rhs = parse_term();
            ExprNode n;
            n.op = op;
            n.args.push_back(std::move(lhs));
            n.args.push_back(std::move(rhs));
            lhs = std::move(n);
        }
        return lhs;
    }

    ExprNode parse_term() {
        ExprNode lhs = parse_unary();
        while (tok_.kind == Token::Star || tok_.kind == Token::Slash) {
            ExprOp op = tok_.kind == Token::Star ? ExprOp::Mul : ExprOp::Div;
            advance();
            ExprNode rhs = parse_unary();
            ExprNode n;
            n.op = op;
            n.args.push_back(std::move(lhs));
            n.args.push_back(std::move(rhs));
            lhs = std::move(n);
        }
        return lhs;
    }

    ExprNode parse_unary() {
        if (tok_.kind == Token::Minus) {
            advance();
            ExprNode n;
            n.op = ExprOp::Neg;
            n.args.push_back(parse_unary());
            return n;
        }
        return parse_power();
    }

    ExprNode parse_power() {
        ExprNode base = parse_primary();
        if (tok_.kind == Token::Caret) {
            advance();
            ExprNode expo = parse_unary();  // right-assoc, allows 2^-3
            ExprNode n;
            n.op = ExprOp::Pow;
            n.args.push_back(std::move(base));
            n.args.push_back(std::move(expo));
            return n;
        }
        return base;
    }

    ExprNode parse_primary() {
        switch (tok_.kind) {
            case Token::Number: {
                ExprNode n;
                n.op = ExprOp::Literal;
                n.value = tok_.number;
                advance();
                return n;
            }
            case Token::Ident: {
                std::string name = tok_.ident;
                std::size_t pos = tok_.pos;
                advance();
                if (tok_.kind == Token::LParen) {
                    auto fn = builtin_by_name(name);
                    if (!fn) throw ParseError("unknown function '" + name + "'", pos);
                    advance();
                    ExprNode arg = parse_expr();
                    expect_rparen();
                    ExprNode n;
                    n.op = ExprOp::Call;
                    n.fn = *fn;
                    n.args.push_back(std::move(arg));
                    return n;
                }
                if (builtin_by_name(name))
                    throw ParseError("function '" + name + "' needs an argument list", pos);
                if (allowed_ &&
                    std::find(allowed_->begin(), allowed_->end(), name) == allowed_->end())
                    throw ParseError("unknown identifier '" + name + "'", pos);
                ExprNode n;
                n.op = ExprOp::Variable;
                n.name = std::move(name);
                return n;
            }
            case Token::LParen: {
                advance();
                ExprNode e = parse_expr();
                expect_rparen();
                return e;
            }
            default:
                throw ParseError("expected number, identifier or '('", tok_.pos);
        }
    }

    void expect_rparen() {
        if (tok_.kind != Token::RParen) throw ParseError("expected ')'", tok_.pos);
        advance();
    }

    Lexer lex_;
    Token tok_;
    const std::vector<std::string>* allowed_;
};

inline double apply_builtin(Builtin fn, double a) {
    double r;
    switch (fn) {
        case Builtin::Sin: r = std::sin(a); break;
        case Builtin::Cos: r = std::cos(a); break;
        case Builtin::Exp: r = std::exp(a); break;
        case Builtin::Sinh: r = std::sinh(a); break;
        case Builtin::Cosh: r = std::cosh(a); break;
        case Builtin::Tanh: r = std::tanh(a); break;
        case Builtin::Sqrt:
            if (a < 0.0) throw EvalError("sqrt of negative value " + std::to_string(a));
            r = std::sqrt(a);
            break;
        case Builtin::Abs: r = std::fabs(a); break;
        case Builtin::Log:
            if (a <= 0.0) throw EvalError("log of non-positive value " + std::to_string(a));
            r = std::log(a);
            break;
        default: throw EvalError("bad builtin");
    }
    if (!std::isfinite(r)) throw EvalError("overflow in builtin call");
    return r;
}

inline double checked_pow(double a, double b) {
    if (a < 0.0 && b != std::floor(b))
        throw EvalError("non-integer power of negative base");
    if (a == 0.0 && b < 0.0) throw EvalError("zero raised to a negative power");
    double r = std::pow(a, b);
    if (!std::isfinite(r)) throw EvalError("overflow in power");
    return r;
}

}  // namespace detail

// Flattened postfix form with variables resolved to slot indices; the hot
// path for per-node field evaluation.
class CompiledExpression {
  public:
    double operator()(std::span<const double> vars) const {
        stack_.clear();
        for (const Instr& in : code_) {
            switch (in.op) {
                case ExprOp::Literal: stack_.push_back(in.value); break;
                case ExprOp::Variable: stack_.push_back(vars[in.slot]); break;
                case ExprOp::Neg: stack_.back() = -stack_.back(); break;
                case ExprOp::Call:
                    stack_.back() = detail::apply_builtin(in.fn, stack_.back());
                    break;
                default: {
                    double b = stack_.back();
                    stack_.pop_back();
                    double& a = stack_.back();
                    switch (in.op) {
                        case ExprOp::Add: a += b; break;
                        case ExprOp::Sub: a -= b; break;
                        case ExprOp::Mul: a *= b; break;
                        case ExprOp::Div:
                            if (b == 0.0) throw EvalError("division by zero");
                            a /= b;
                            break;
                        case ExprOp::Pow: a = detail::checked_pow(a, b); break;
                        default: throw EvalError("bad opcode");
                    }
                }
            }
        }
        double r = stack_.back();
        if (!std::isfinite(r)) throw EvalError("non-finite result");
        return r;
    }

  private:
    friend class Expression;
    struct Instr {
        ExprOp op;
        double value = 0.0;
        std::size_t slot = 0;
        Builtin fn = Builtin::Sin;
    };
    std::vector<Instr> code_;
    mutable std::vector<double> stack_;
};

class Expression {
  public:
    Expression() = default;

    static Expression parse(std::string_view src) { return parse(src, nullptr); }

    // allowed_vars restricts which identifiers may appear; any other
    // identifier is rejected with its source position.
    static Expression parse(std::string_view src, const std::vector<std::string>& allowed_vars) {
        return parse(src, &allowed_vars);
    }

    static Expression literal(double v) {
        Expression e;
        e.root_.op = ExprOp::Literal;
        e.root_.value = v;
        return e;
    }

    static Expression variable(std::string name) {
        Expression e;
        e.root_.op = ExprOp::Variable;
        e.root_.name = std::move(name);
        e.vars_.push_back(e.root_.name);
        return e;
    }

    const std::vector<std::string>& variables() const { return vars_; }

    double eval(std::span<const std::pair<std::string, double>> env) const {
        return eval_node(root_, env);
    }

    double eval(std::initializer_list<std::pair<std::string, double>> env) const {
        return eval(std::span<const std::pair<std::string, double>>(env.begin(), env.size()));
    }

    CompiledExpression compile(std::span<const std::string> var_order) const {
        CompiledExpression c;
        compile_node(root_, var_order, c);
        return c;
    }

    std::string str() const { return print_node(root_); }

    bool structurally_equal(const Expression& other) const {
        return nodes_equal(root_, other.root_);
    }

    LipschitzClass lipschitz_class() const {
        return classify(root_) == NodeClass::Local ? LipschitzClass::Local
                                                  : LipschitzClass::Global;
    }

    bool is_affine() const {
        NodeClass c = classify_affine(root_);
        return c == NodeClass::Constant || c == NodeClass::Affine;
    }

    const ExprNode& root() const { return root_; }

  private:
    static Expression parse(std::string_view src, const std::vector<std::string>* allowed) {
        Expression e;
        detail::Parser p(src, allowed);
        e.root_ = p.parse();
        collect_vars(e.root_, e.vars_);
        std::sort(e.vars_.begin(), e.vars_.end());
        e.vars_.erase(std::unique(e.vars_.begin(), e.vars_.end()), e.vars_.end());
        return e;
    }

    static void collect_vars(const ExprNode& n, std::vector<std::string>& out) {
        if (n.op == ExprOp::Variable) out.push_back(n.name);
        for (const ExprNode& a : n.args) collect_vars(a, out);
    }

    static double eval_node(const ExprNode& n,
                            std::span<const std::pair<std::string, double>> env) {
        switch (n.op) {
            case ExprOp::Literal: return n.value;
            case ExprOp::Variable: {
                for (const auto& [name, v] : env)
                    if (name == n.name) return v;
                throw EvalError("unbound variable '" + n.name + "'");
            }
            case ExprOp::Neg: return -eval_node(n.args[0], env);
            case ExprOp::Call: return detail::apply_builtin(n.fn, eval_node(n.args[0], env));
            default: {
                double a = eval_node(n.args[0], env);
                double b = eval_node(n.args[1], env);
                double r;
                switch (n.op) {
                    case ExprOp::Add: r = a + b; break;
                    case ExprOp::Sub: r = a - b; break;
                    case ExprOp::Mul: r = a * b; break;
                    case ExprOp::Div:
                        if (b == 0.0) throw EvalError("division by zero");
                        r = a / b;
                        break;
                    case ExprOp::Pow: r = detail::checked_pow(a, b); break;
                    default: throw EvalError("bad opcode");
                }
                if (!std::isfinite(r)) throw EvalError("non-finite result");
                return r;
            }
        }
    }

    static void compile_node(const ExprNode& n, std::span<const std::string> var_order,
                             CompiledExpression& c) {
        for (const ExprNode& a : n.args) compile_node(a, var_order, c);
        CompiledExpression::Instr in;
        in.op = n.op;
        if (n.op == ExprOp::Literal) in.value = n.value;
        if (n.op == ExprOp::Call) in.fn = n.fn;
        if (n.op == ExprOp::Variable) {
            auto it = std::find(var_order.begin(), var_order.end(), n.name);
            if (it == var_order.end())
                throw EvalError("variable '" + n.name + "' has no slot in this binding");
            in.slot = static_cast<std::size_t>(it - var_order.begin());
        }
        c.code_.push_back(in);
    }

    static std::string print_node(const ExprNode& n) {
        switch (n.op) {
            case ExprOp::Literal: {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.17g", n.value);
                return buf;
            }
            case ExprOp::Variable: return n.name;
            case ExprOp::Neg: return "(-" + print_node(n.args[0]) + ")";
            case ExprOp::Call:
                return std::string(builtin_name(n.fn)) + "(" + print_node(n.args[0]) + ")";
            default: {
                const char* op = n.op == ExprOp::Add   ? " + "
                                 : n.op == ExprOp::Sub ? " - "
                                 : n.op == ExprOp::Mul ? "*"
                                 : n.op == ExprOp::Div ? "/"
                                                       : "^";
                return "(" + print_node(n.args[0]) + op + print_node(n.args[1]) + ")";
            }
        }
    }

    static bool nodes_equal(const ExprNode& a, const ExprNode& b) {
        if (a.op != b.op) return false;
        if (a.op == ExprOp::Literal && a.value != b.value) return false;
        if (a.op == ExprOp::Variable && a.name != b.name) return false;
        if (a.op == ExprOp::Call && a.fn != b.fn) return false;
        if (a.args.size() != b.args.size()) return false;
        for (std::size_t i = 0; i < a.args.size(); ++i)
            if (!nodes_equal(a.args[i], b.args[i])) return false;
        return true;
    }

    enum class NodeClass { Constant, Affine, Global, Local };

    static NodeClass worst(NodeClass a, NodeClass b) { return a > b ? a : b; }

    // Structural globally-Lipschitz test: affine combinations plus bounded-
    // derivative builtins (sin, cos, tanh, abs) of globally Lipschitz parts.
    static NodeClass classify(const ExprNode& n) {
        switch (n.op) {
            case ExprOp::Literal: return NodeClass::Constant;
            case ExprOp::Variable: return NodeClass::Affine;
            case ExprOp::Neg: return classify(n.args[0]);
            case ExprOp::Add:
            case ExprOp::Sub:
                return worst(classify(n.args[0]), classify(n.args[1]));
            case ExprOp::Mul: {
                NodeClass a = classify(n.args[0]);
                NodeClass b = classify(n.args[1]);
                if (a == NodeClass::Constant) return b;
                if (b == NodeClass::Constant) return a;
                return NodeClass::Local;
            }
            case ExprOp::Div: {
                NodeClass a = classify(n.args[0]);
                NodeClass b = classify(n.args[1]);
                if (b == NodeClass::Constant) return a;
                return NodeClass::Local;
            }
            case ExprOp::Pow: {
                NodeClass a = classify(n.args[0]);
                NodeClass b = classify(n.args[1]);
                if (a == NodeClass::Constant && b == NodeClass::Constant)
                    return NodeClass::Constant;
                if (b == NodeClass::Constant && n.args[1].op == ExprOp::Literal &&
                    n.args[1].value == 1.0)
                    return a;
                return NodeClass::Local;
            }
            case ExprOp::Call: {
                NodeClass a = classify(n.args[0]);
                if (a == NodeClass::Constant) return NodeClass::Constant;
                switch (n.fn) {
                    case Builtin::Sin:
                    case Builtin::Cos:
                    case Builtin::Tanh:
                    case Builtin::Abs:
                        return a == NodeClass::Local ? NodeClass::Local : NodeClass::Global;
                    default:
                        return NodeClass::Local;
                }
            }
        }
        return NodeClass::Local;
    }

    // Affine in the variables: literals, variables, sums, scalar multiples.
    static NodeClass classify_affine(const ExprNode& n) {
        switch (n.op) {
            case ExprOp::Literal: return NodeClass::Constant;
            case ExprOp::Variable: return NodeClass::Affine;
            case ExprOp::Neg: return classify_affine(n.args[0]);
            case ExprOp::Add:
            case ExprOp::Sub: {
                NodeClass a = classify_affine(n.args[0]);
                NodeClass b = classify_affine(n.args[1]);
                if (a == NodeClass::Local || b == NodeClass::Local) return NodeClass::Local;
                return worst(a, b);
            }
            case ExprOp::Mul: {
                NodeClass a = classify_affine(n.args[0]);
                NodeClass b = classify_affine(n.args[1]);
                if (a == NodeClass::Constant && b != NodeClass::Local) return b;
                if (b == NodeClass::Constant && a != NodeClass::Local) return a;
                return NodeClass::Local;
            }
            case ExprOp::Div: {
                NodeClass a = classify_affine(n.args[0]);
                NodeClass b = classify_affine(n.args[1]);
                if (b == NodeClass::Constant && a != NodeClass::Local) return a;
                return NodeClass::Local;
            }
            case ExprOp::Pow:
            case ExprOp::Call: {
                bool all_const = true;
                for (const ExprNode& a : n.args)
                    if (classify_affine(a) != NodeClass::Constant) all_const = false;
                return all_const ? NodeClass::Constant : NodeClass::Local;
            }
        }
        return NodeClass::Local;
    }

    ExprNode root_;
    std::vector<std::string> vars_;
};

}  // namespace nlbvp

#endif
