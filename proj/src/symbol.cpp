#include "hindex/symbol.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "hindex/error.hpp"
#include "hindex/kernels.hpp"

namespace hindex {

namespace sym {

namespace {

Expr make(Node n) { return std::make_shared<const Node>(std::move(n)); }

[[noreturn]] void shape_error(const std::string& what, const Expr& a, const Expr& b) {
    throw Error(ErrorKind::InvalidInput, "shape mismatch in " + what + ": " + std::to_string(a->rows) + "x" +
                                             std::to_string(a->cols) + " vs " + std::to_string(b->rows) + "x" +
                                             std::to_string(b->cols));
}

bool is_const_scalar(const Expr& e, cplx* v = nullptr) {
    if (e->op != Op::Const || e->rows != 1 || e->cols != 1) return false;
    if (v) *v = e->value;
    return true;
}

// Bring a scalar operand to the shape of a square partner.
void broadcast(Expr& a, Expr& b) {
    if (is_scalar(a) && !is_scalar(b) && b->rows == b->cols) a = mul(a, identity(b->rows));
    if (is_scalar(b) && !is_scalar(a) && a->rows == a->cols) b = mul(b, identity(a->rows));
}

cplx var_partial(VarKind v, int i) {
    const cplx I(0.0, 1.0);
    switch (v) {
        case VarKind::X1: return i == 0 ? 1.0 : 0.0;
        case VarKind::X2: return i == 1 ? 1.0 : 0.0;
        case VarKind::X3: return i == 2 ? 1.0 : 0.0;
        case VarKind::X4: return i == 3 ? 1.0 : 0.0;
        case VarKind::Z1: return i == 0 ? cplx(1.0) : (i == 1 ? I : cplx(0.0));
        case VarKind::ZB1: return i == 0 ? cplx(1.0) : (i == 1 ? -I : cplx(0.0));
        case VarKind::Z2: return i == 2 ? cplx(1.0) : (i == 3 ? I : cplx(0.0));
        case VarKind::ZB2: return i == 2 ? cplx(1.0) : (i == 3 ? -I : cplx(0.0));
    }
    return 0.0;
}

std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

bool is_zero(const Expr& e) { return e->op == Op::Const && e->value == cplx(0.0); }
bool is_scalar(const Expr& e) { return e->rows == 1 && e->cols == 1; }

Expr constant(cplx v, int rows, int cols) {
    Node n;
    n.op = Op::Const;
    n.value = v;
    n.rows = rows;
    n.cols = cols;
    return make(std::move(n));
}

Expr zero(int rows, int cols) { return constant(0.0, rows, cols); }

Expr identity(int k) {
    if (k == 1) return constant(1.0);
    std::vector<Expr> entries;
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) entries.push_back(constant(i == j ? 1.0 : 0.0));
    return matrix(k, k, std::move(entries));
}

Expr var(VarKind v) {
    Node n;
    n.op = Op::Var;
    n.var = v;
    return make(std::move(n));
}

Expr matrix(int rows, int cols, std::vector<Expr> entries) {
    if (rows <= 0 || cols <= 0 || static_cast<int>(entries.size()) != rows * cols)
        throw Error(ErrorKind::InvalidInput, "matrix literal has inconsistent dimensions");
    bool all_zero = true;
    for (const auto& e : entries) {
        if (!is_scalar(e)) throw Error(ErrorKind::InvalidInput, "matrix literal entries must be scalar");
        all_zero = all_zero && is_zero(e);
    }
    if (rows == 1 && cols == 1) return entries[0];
    if (all_zero) return zero(rows, cols);
    Node n;
    n.op = Op::Matrix;
    n.rows = rows;
    n.cols = cols;
    n.args = std::move(entries);
    return make(std::move(n));
}

Expr su2() {
    return matrix(2, 2, {var(VarKind::Z1), neg(var(VarKind::ZB2)), var(VarKind::Z2), var(VarKind::ZB1)});
}

Expr add(const Expr& a0, const Expr& b0) {
    Expr a = a0, b = b0;
    broadcast(a, b);
    if (a->rows != b->rows || a->cols != b->cols) shape_error("sum", a, b);
    if (is_zero(a)) return b;
    if (is_zero(b)) return a;
    cplx u, v;
    if (is_const_scalar(a, &u) && is_const_scalar(b, &v)) return constant(u + v);
    Node n;
    n.op = Op::Add;
    n.rows = a->rows;
    n.cols = a->cols;
    n.args = {a, b};
    return make(std::move(n));
}

Expr sub(const Expr& a0, const Expr& b0) {
    Expr a = a0, b = b0;
    broadcast(a, b);
    if (a->rows != b->rows || a->cols != b->cols) shape_error("difference", a, b);
    if (is_zero(b)) return a;
    if (is_zero(a)) return neg(b);
    cplx u, v;
    if (is_const_scalar(a, &u) && is_const_scalar(b, &v)) return constant(u - v);
    Node n;
    n.op = Op::Sub;
    n.rows = a->rows;
    n.cols = a->cols;
    n.args = {a, b};
    return make(std::move(n));
}

Expr neg(const Expr& a) {
    if (is_zero(a)) return a;
    if (a->op == Op::Const) return constant(-a->value, a->rows, a->cols);
    if (a->op == Op::Neg) return a->args[0];
    Node n;
    n.op = Op::Neg;
    n.rows = a->rows;
    n.cols = a->cols;
    n.args = {a};
    return make(std::move(n));
}

Expr mul(const Expr& a, const Expr& b) {
    int rows, cols;
    if (is_scalar(a)) {
        rows = b->rows;
        cols = b->cols;
    } else if (is_scalar(b)) {
        rows = a->rows;
        cols = a->cols;
    } else {
        if (a->cols != b->rows) shape_error("product", a, b);
        rows = a->rows;
        cols = b->cols;
    }
    if (is_zero(a) || is_zero(b)) return zero(rows, cols);
    cplx u, v;
    const bool ca = is_const_scalar(a, &u), cb = is_const_scalar(b, &v);
    if (ca && cb) return constant(u * v);
    if (ca && u == cplx(1.0)) return b;
    if (cb && v == cplx(1.0)) return a;
    Node n;
    n.op = Op::Mul;
    n.rows = rows;
    n.cols = cols;
    n.args = {a, b};
    return make(std::move(n));
}

Expr pow(const Expr& a, int k) {
    if (a->rows != a->cols) throw Error(ErrorKind::InvalidInput, "power of a non-square matrix");
    if (k < 0) return pow(inv(a), -k);
    if (k == 0) return identity(a->rows);
    if (k == 1) return a;
    cplx u;
    if (is_const_scalar(a, &u)) return constant(std::pow(u, k));
    if (is_zero(a)) return a;
    Node n;
    n.op = Op::Pow;
    n.rows = a->rows;
    n.cols = a->cols;
    n.power = k;
    n.args = {a};
    return make(std::move(n));
}

Expr inv(const Expr& a) {
    if (a->rows != a->cols) throw Error(ErrorKind::InvalidInput, "inverse of a non-square matrix");
    cplx u;
    if (is_const_scalar(a, &u)) {
        if (u == cplx(0.0)) throw Error(ErrorKind::NonInvertible, "inverse of the constant 0");
        return constant(1.0 / u);
    }
    if (is_zero(a)) throw Error(ErrorKind::NonInvertible, "inverse of a zero matrix");
    if (a->op == Op::Inv) return a->args[0];
    Node n;
    n.op = Op::Inv;
    n.rows = a->rows;
    n.cols = a->cols;
    n.args = {a};
    return make(std::move(n));
}

Expr conj(const Expr& a) {
    switch (a->op) {
        case Op::Const: return constant(std::conj(a->value), a->rows, a->cols);
        case Op::Var:
            switch (a->var) {
                case VarKind::Z1: return var(VarKind::ZB1);
                case VarKind::Z2: return var(VarKind::ZB2);
                case VarKind::ZB1: return var(VarKind::Z1);
                case VarKind::ZB2: return var(VarKind::Z2);
                default: return a;
            }
        case Op::Conj: return a->args[0];
        default: break;
    }
    Node n;
    n.op = Op::Conj;
    n.rows = a->rows;
    n.cols = a->cols;
    n.args = {a};
    return make(std::move(n));
}

Expr adj(const Expr& a) {
    if (is_scalar(a)) return conj(a);
    if (is_zero(a)) return zero(a->cols, a->rows);
    if (a->op == Op::Adj) return a->args[0];
    Node n;
    n.op = Op::Adj;
    n.rows = a->cols;
    n.cols = a->rows;
    n.args = {a};
    return make(std::move(n));
}

Expr derivative(const Expr& e, int i) {
    switch (e->op) {
        case Op::Const: return zero(e->rows, e->cols);
        case Op::Var: {
            const cplx c = var_partial(e->var, i);
            return c == cplx(0.0) ? zero(1, 1) : constant(c);
        }
        case Op::Matrix: {
            std::vector<Expr> d;
            d.reserve(e->args.size());
            for (const auto& a : e->args) d.push_back(derivative(a, i));
            return matrix(e->rows, e->cols, std::move(d));
        }
        case Op::Add: return add(derivative(e->args[0], i), derivative(e->args[1], i));
        case Op::Sub: return sub(derivative(e->args[0], i), derivative(e->args[1], i));
        case Op::Neg: return neg(derivative(e->args[0], i));
        case Op::Mul: {
            const Expr& a = e->args[0];
            const Expr& b = e->args[1];
            Expr da = derivative(a, i), db = derivative(b, i);
            Expr t1 = is_zero(da) ? zero(e->rows, e->cols) : mul(da, b);
            Expr t2 = is_zero(db) ? zero(e->rows, e->cols) : mul(a, db);
            return add(t1, t2);
        }
        case Op::Pow: {
            const Expr& a = e->args[0];
            Expr da = derivative(a, i);
            if (is_zero(da)) return zero(e->rows, e->cols);
            // d(a^k) = da·a^{k−1} + a·d(a^{k−1})
            Expr rest = pow(a, e->power - 1);
            return add(mul(da, rest), mul(a, derivative(rest, i)));
        }
        case Op::Inv: {
            Expr da = derivative(e->args[0], i);
            if (is_zero(da)) return zero(e->rows, e->cols);
            return neg(mul(mul(e, da), e));
        }
        case Op::Conj: return conj(derivative(e->args[0], i));
        case Op::Adj: return adj(derivative(e->args[0], i));
    }
    return zero(e->rows, e->cols);
}

std::string to_string(const Expr& e) {
    switch (e->op) {
        case Op::Const: {
            if (!is_scalar(e)) {
                std::string s = "[";
                for (int i = 0; i < e->rows; ++i) {
                    s += i ? ",[" : "[";
                    for (int j = 0; j < e->cols; ++j) s += j ? ",0" : "0";
                    s += "]";
                }
                return s + "]";
            }
            const double re = e->value.real(), im = e->value.imag();
            if (im == 0.0) return "(" + fmt_real(re) + ")";
            if (re == 0.0) return "(" + fmt_real(im) + "i)";
            return "(" + fmt_real(re) + (im < 0 ? "-" : "+") + fmt_real(std::abs(im)) + "i)";
        }
        case Op::Var:
            switch (e->var) {
                case VarKind::X1: return "x1";
                case VarKind::X2: return "x2";
                case VarKind::X3: return "x3";
                case VarKind::X4: return "x4";
                case VarKind::Z1: return "z1";
                case VarKind::Z2: return "z2";
                case VarKind::ZB1: return "conj(z1)";
                case VarKind::ZB2: return "conj(z2)";
            }
            break;
        case Op::Matrix: {
            std::string s = "[";
            for (int i = 0; i < e->rows; ++i) {
                s += i ? ",[" : "[";
                for (int j = 0; j < e->cols; ++j) {
                    if (j) s += ",";
                    s += to_string(e->args[i * e->cols + j]);
                }
                s += "]";
            }
            return s + "]";
        }
        case Op::Add: return "(" + to_string(e->args[0]) + " + " + to_string(e->args[1]) + ")";
        case Op::Sub: return "(" + to_string(e->args[0]) + " - " + to_string(e->args[1]) + ")";
        case Op::Neg: return "(-" + to_string(e->args[0]) + ")";
        case Op::Mul: return "(" + to_string(e->args[0]) + " * " + to_string(e->args[1]) + ")";
        case Op::Pow: return "(" + to_string(e->args[0]) + ")^" + std::to_string(e->power);
        case Op::Inv: return "inv(" + to_string(e->args[0]) + ")";
        case Op::Conj: return "conj(" + to_string(e->args[0]) + ")";
        case Op::Adj: return "adj(" + to_string(e->args[0]) + ")";
    }
    return "?";
}

}  // namespace sym

// ---------------------------------------------------------------- parser

namespace {

enum class Tok { Number, Imag, Ident, Punct, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    double number = 0.0;
    int line = 1, col = 1;
};

class Lexer {
public:
    explicit Lexer(const std::string& s) : s_(s) {}

    Token next() {
        skip_space();
        Token t;
        t.line = line_;
        t.col = col_;
        if (pos_ >= s_.size()) return t;
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && pos_ + 1 < s_.size() &&
                                                           std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])))) {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) advance();
            if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
                std::size_t look = pos_ + 1;
                if (look < s_.size() && (s_[look] == '+' || s_[look] == '-')) ++look;
                if (look < s_.size() && std::isdigit(static_cast<unsigned char>(s_[look]))) {
                    while (pos_ < look) advance();
                    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) advance();
                }
            }
            t.text = s_.substr(start, pos_ - start);
            char* end = nullptr;
            t.number = std::strtod(t.text.c_str(), &end);
            if (end == nullptr || *end != '\0') throw ParseError("malformed number '" + t.text + "'", t.line, t.col);
            t.kind = Tok::Number;
            // An 'i' glued to a number makes it imaginary, unless it starts an identifier.
            if (pos_ < s_.size() && s_[pos_] == 'i' &&
                (pos_ + 1 >= s_.size() || !std::isalnum(static_cast<unsigned char>(s_[pos_ + 1])))) {
                advance();
                t.kind = Tok::Imag;
            }
            return t;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) advance();
            t.kind = Tok::Ident;
            t.text = s_.substr(start, pos_ - start);
            return t;
        }
        if (std::string("+-*/^()[],").find(c) != std::string::npos) {
            advance();
            t.kind = Tok::Punct;
            t.text = std::string(1, c);
            return t;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", t.line, t.col);
    }

private:
    void advance() {
        if (s_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }
    void skip_space() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) advance();
    }

    const std::string& s_;
    std::size_t pos_ = 0;
    int line_ = 1, col_ = 1;
};

class Parser {
public:
    Parser(const std::string& text, const ParseContext& ctx) : lex_(text), ctx_(ctx) { tok_ = lex_.next(); }

    Expr parse() {
        Expr e = expr();
        if (tok_.kind != Tok::End) fail("unexpected '" + tok_.text + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, tok_.line, tok_.col); }
    [[noreturn]] void fail_at(const std::string& msg, const Token& t) const { throw ParseError(msg, t.line, t.col); }

    bool is_punct(char c) const { return tok_.kind == Tok::Punct && tok_.text[0] == c; }
    void expect(char c) {
        if (!is_punct(c)) fail(std::string("expected '") + c + "'" + (tok_.kind == Tok::End ? " before end of input" : ""));
        tok_ = lex_.next();
    }

    // Wraps shape errors from the algebra with the operator position.
    template <class F>
    Expr guarded(const Token& at, F&& f) {
        try {
            return f();
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            fail_at(e.what(), at);
        }
    }

    Expr expr() {
        Expr lhs = term();
        while (is_punct('+') || is_punct('-')) {
            const Token op = tok_;
            tok_ = lex_.next();
            Expr rhs = term();
            lhs = guarded(op, [&] { return op.text == "+" ? sym::add(lhs, rhs) : sym::sub(lhs, rhs); });
        }
        return lhs;
    }

    Expr term() {
        Expr lhs = unary();
        while (is_punct('*') || is_punct('/')) {
            const Token op = tok_;
            tok_ = lex_.next();
            Expr rhs = unary();
            if (op.text == "*") {
                lhs = guarded(op, [&] { return sym::mul(lhs, rhs); });
            } else {
                if (!sym::is_scalar(rhs)) fail_at("division is only defined by scalars", op);
                lhs = guarded(op, [&] { return sym::mul(lhs, sym::inv(rhs)); });
            }
        }
        return lhs;
    }

    Expr unary() {
        if (is_punct('-')) {
            tok_ = lex_.next();
            return sym::neg(unary());
        }
        if (is_punct('+')) {
            tok_ = lex_.next();
            return unary();
        }
        return power();
    }

    int integer_token() {
        if (tok_.kind != Tok::Number || tok_.number != std::floor(tok_.number) || std::abs(tok_.number) > 64)
            fail("exponent must be an integer of magnitude at most 64");
        const int k = static_cast<int>(tok_.number);
        tok_ = lex_.next();
        return k;
    }

    Expr power() {
        Expr base = primary();
        if (!is_punct('^')) return base;
        const Token op = tok_;
        tok_ = lex_.next();
        int k;
        if (is_punct('(')) {
            tok_ = lex_.next();
            bool negative = false;
            if (is_punct('-')) {
                negative = true;
                tok_ = lex_.next();
            }
            k = integer_token();
            if (negative) k = -k;
            expect(')');
        } else if (is_punct('-')) {
            tok_ = lex_.next();
            k = -integer_token();
        } else {
            k = integer_token();
        }
        return guarded(op, [&] { return sym::pow(base, k); });
    }

    Expr primary() {
        const Token t = tok_;
        switch (t.kind) {
            case Tok::Number: tok_ = lex_.next(); return sym::constant(t.number);
            case Tok::Imag: tok_ = lex_.next(); return sym::constant(cplx(0.0, t.number));
            case Tok::Ident: tok_ = lex_.next(); return identifier(t);
            case Tok::Punct:
                if (t.text == "(") {
                    tok_ = lex_.next();
                    Expr e = expr();
                    expect(')');
                    return e;
                }
                if (t.text == "[") return matrix_literal();
                fail("unexpected '" + t.text + "'");
            case Tok::End: fail("unexpected end of input");
        }
        fail("unexpected token");
    }

    Expr matrix_literal() {
        const Token open = tok_;
        expect('[');
        std::vector<std::vector<Expr>> rows;
        do {
            if (!rows.empty()) expect(',');
            expect('[');
            std::vector<Expr> row;
            do {
                if (!row.empty()) expect(',');
                const Token at = tok_;
                Expr e = expr();
                if (!sym::is_scalar(e)) fail_at("matrix literal entries must be scalar", at);
                row.push_back(e);
            } while (is_punct(','));
            expect(']');
            if (!rows.empty() && row.size() != rows.front().size()) fail_at("ragged matrix literal", open);
            rows.push_back(std::move(row));
        } while (is_punct(','));
        expect(']');
        std::vector<Expr> flat;
        for (auto& r : rows)
            for (auto& e : r) flat.push_back(e);
        const int nr = static_cast<int>(rows.size()), nc = static_cast<int>(rows.front().size());
        return guarded(open, [&] { return sym::matrix(nr, nc, flat); });
    }

    Expr identifier(const Token& t) {
        const std::string& id = t.text;
        const bool s3 = ctx_.n == 1;
        if (id == "i") return sym::constant(cplx(0.0, 1.0));
        if (id == "I") return sym::identity(ctx_.r);
        if (id == "x1") return sym::var(VarKind::X1);
        if (id == "x2") return sym::var(VarKind::X2);
        if (id == "z1") return sym::var(VarKind::Z1);
        if (s3 && id == "x3") return sym::var(VarKind::X3);
        if (s3 && id == "x4") return sym::var(VarKind::X4);
        if (s3 && id == "z2") return sym::var(VarKind::Z2);
        if (!s3 && id == "z") return sym::var(VarKind::Z1);
        if (id == "conj" || id == "adj" || id == "inv") {
            expect('(');
            Expr a = expr();
            expect(')');
            return guarded(t, [&] {
                if (id == "conj") return sym::conj(a);
                if (id == "adj") return sym::adj(a);
                return sym::inv(a);
            });
        }
        if (id == "su2") {
            if (!s3) fail_at("su2(x) is only defined on S^3", t);
            expect('(');
            if (tok_.kind != Tok::Ident || tok_.text != "x") fail("su2 takes the point argument 'x'");
            tok_ = lex_.next();
            expect(')');
            return sym::su2();
        }
        fail_at("unknown identifier '" + id + "'" + (s3 ? "" : " on S^1"), t);
    }

    Lexer lex_;
    ParseContext ctx_;
    Token tok_;
};

}  // namespace

Expr parse_symbol(const std::string& text, const ParseContext& ctx) {
    if (ctx.n != 0 && ctx.n != 1) throw Error(ErrorKind::Unsupported, "symbols are only parsed on S^1 and S^3");
    if (ctx.r < 1) throw Error(ErrorKind::InvalidInput, "matrix size r must be positive");
    Parser p(text, ctx);
    return p.parse();
}

// ------------------------------------------------------------- evaluator

Evaluator::Evaluator(std::vector<Expr> roots) : keep_(std::move(roots)) {
    std::unordered_map<const Node*, int> slot;
    // Iterative post-order so deep trees cannot overflow the stack.
    for (const auto& root : keep_) {
        std::vector<std::pair<const Node*, std::size_t>> stack{{root.get(), 0}};
        while (!stack.empty()) {
            auto& [node, next] = stack.back();
            if (slot.count(node)) {
                stack.pop_back();
                continue;
            }
            if (next < node->args.size()) {
                const Node* child = node->args[next++].get();
                if (!slot.count(child)) stack.push_back({child, 0});
                continue;
            }
            Instr ins{node, {}};
            for (const auto& a : node->args) ins.in.push_back(slot.at(a.get()));
            slot[node] = static_cast<int>(program_.size());
            program_.push_back(std::move(ins));
            stack.pop_back();
        }
        roots_.push_back(slot.at(root.get()));
    }
}

std::vector<BatchValues> Evaluator::eval(std::size_t count, const double* const x[4]) const {
    const kernels::Table& K = kernels::active();
    std::vector<BatchValues> reg(program_.size());
    auto entry_re = [&](BatchValues& b, int e) { return b.re.data() + static_cast<std::size_t>(e) * count; };
    auto entry_im = [&](BatchValues& b, int e) { return b.im.data() + static_cast<std::size_t>(e) * count; };
    for (std::size_t p = 0; p < program_.size(); ++p) {
        const Instr& ins = program_[p];
        const Node& n = *ins.node;
        BatchValues& out = reg[p];
        out.rows = n.rows;
        out.cols = n.cols;
        out.count = count;
        const std::size_t total = static_cast<std::size_t>(n.rows * n.cols) * count;
        out.re.assign(total, 0.0);
        out.im.assign(total, 0.0);
        switch (n.op) {
            case Op::Const:
                std::fill(out.re.begin(), out.re.end(), n.value.real());
                std::fill(out.im.begin(), out.im.end(), n.value.imag());
                break;
            case Op::Var: {
                const int k = n.var == VarKind::X1 || n.var == VarKind::Z1 || n.var == VarKind::ZB1 ? 0
                              : n.var == VarKind::X2                                            ? 1
                              : n.var == VarKind::X3 || n.var == VarKind::Z2 || n.var == VarKind::ZB2 ? 2
                                                                                                    : 3;
                std::copy(x[k], x[k] + count, out.re.begin());
                if (n.var == VarKind::Z1 || n.var == VarKind::Z2) {
                    std::copy(x[k + 1], x[k + 1] + count, out.im.begin());
                } else if (n.var == VarKind::ZB1 || n.var == VarKind::ZB2) {
                    for (std::size_t q = 0; q < count; ++q) out.im[q] = -x[k + 1][q];
                }
                break;
            }
            case Op::Matrix:
                for (int e = 0; e < n.rows * n.cols; ++e) {
                    const BatchValues& a = reg[ins.in[e]];
                    std::copy(a.re.begin(), a.re.end(), entry_re(out, e));
                    std::copy(a.im.begin(), a.im.end(), entry_im(out, e));
                }
                break;
            case Op::Add:
            case Op::Sub: {
                const BatchValues& a = reg[ins.in[0]];
                const BatchValues& b = reg[ins.in[1]];
                (n.op == Op::Add ? K.add : K.sub)(total, a.re.data(), a.im.data(), b.re.data(), b.im.data(),
                                                  out.re.data(), out.im.data());
                break;
            }
            case Op::Neg: {
                const BatchValues& a = reg[ins.in[0]];
                K.scale(total, -1.0, 0.0, a.re.data(), a.im.data(), out.re.data(), out.im.data());
                break;
            }
            case Op::Conj: {
                const BatchValues& a = reg[ins.in[0]];
                K.conj(total, a.re.data(), a.im.data(), out.re.data(), out.im.data());
                break;
            }
            case Op::Adj: {
                BatchValues& a = reg[ins.in[0]];
                for (int i = 0; i < n.rows; ++i)
                    for (int j = 0; j < n.cols; ++j)
                        K.conj(count, entry_re(a, j * a.cols + i), entry_im(a, j * a.cols + i), entry_re(out, i * n.cols + j),
                               entry_im(out, i * n.cols + j));
                break;
            }
            case Op::Mul:
            case Op::Pow: {
                auto matmul = [&](BatchValues& a, BatchValues& b, BatchValues& o) {
                    if (a.rows == 1 && a.cols == 1) {
                        for (int e = 0; e < b.rows * b.cols; ++e)
                            K.mul(count, a.re.data(), a.im.data(), entry_re(b, e), entry_im(b, e), entry_re(o, e),
                                  entry_im(o, e));
                        return;
                    }
                    if (b.rows == 1 && b.cols == 1) {
                        for (int e = 0; e < a.rows * a.cols; ++e)
                            K.mul(count, entry_re(a, e), entry_im(a, e), b.re.data(), b.im.data(), entry_re(o, e),
                                  entry_im(o, e));
                        return;
                    }
                    for (int i = 0; i < a.rows; ++i)
                        for (int j = 0; j < b.cols; ++j) {
                            const int e = i * b.cols + j;
                            K.mul(count, entry_re(a, i * a.cols), entry_im(a, i * a.cols), entry_re(b, j),
                                  entry_im(b, j), entry_re(o, e), entry_im(o, e));
                            for (int k = 1; k < a.cols; ++k)
                                K.mul_acc(count, entry_re(a, i * a.cols + k), entry_im(a, i * a.cols + k),
                                          entry_re(b, k * b.cols + j), entry_im(b, k * b.cols + j), entry_re(o, e),
                                          entry_im(o, e));
                        }
                };
                if (n.op == Op::Mul) {
                    matmul(reg[ins.in[0]], reg[ins.in[1]], out);
                } else {
                    BatchValues& a = reg[ins.in[0]];
                    BatchValues acc = a;
                    for (int k = 1; k < n.power; ++k) {
                        BatchValues next = out;
                        matmul(acc, a, next);
                        acc = std::move(next);
                    }
                    out = std::move(acc);
                }
                break;
            }
            case Op::Inv: {
                BatchValues& a = reg[ins.in[0]];
                if (n.rows == 1) {
                    const std::vector<double> one(count, 1.0), zero(count, 0.0);
                    K.div(count, one.data(), zero.data(), a.re.data(), a.im.data(), out.re.data(), out.im.data());
                } else if (n.rows == 2) {
                    std::vector<double> dr(count), di(count), tr(count), ti(count);
                    K.mul(count, entry_re(a, 0), entry_im(a, 0), entry_re(a, 3), entry_im(a, 3), dr.data(), di.data());
                    K.mul(count, entry_re(a, 1), entry_im(a, 1), entry_re(a, 2), entry_im(a, 2), tr.data(), ti.data());
                    K.sub(count, dr.data(), di.data(), tr.data(), ti.data(), dr.data(), di.data());
                    const int src[4] = {3, 1, 2, 0};
                    const double sgn[4] = {1.0, -1.0, -1.0, 1.0};
                    for (int e = 0; e < 4; ++e) {
                        K.scale(count, sgn[e], 0.0, entry_re(a, src[e]), entry_im(a, src[e]), tr.data(), ti.data());
                        K.div(count, tr.data(), ti.data(), dr.data(), di.data(), entry_re(out, e), entry_im(out, e));
                    }
                } else {
                    const int r = n.rows;
                    Eigen::MatrixXcd m(r, r);
                    for (std::size_t q = 0; q < count; ++q) {
                        for (int i = 0; i < r; ++i)
                            for (int j = 0; j < r; ++j) m(i, j) = a.at(i, j, q);
                        const Eigen::MatrixXcd mi = m.fullPivLu().inverse();
                        for (int i = 0; i < r; ++i)
                            for (int j = 0; j < r; ++j) {
                                const std::size_t idx = static_cast<std::size_t>(i * r + j) * count + q;
                                out.re[idx] = mi(i, j).real();
                                out.im[idx] = mi(i, j).imag();
                            }
                    }
                }
                break;
            }
        }
    }
    std::vector<BatchValues> res;
    res.reserve(roots_.size());
    for (int r : roots_) res.push_back(reg[r]);
    return res;
}

std::vector<Eigen::MatrixXcd> Evaluator::eval_point(const Vec4& x) const {
    const double* ptr[4] = {&x[0], &x[1], &x[2], &x[3]};
    const auto vals = eval(1, ptr);
    std::vector<Eigen::MatrixXcd> out;
    for (const auto& v : vals) {
        Eigen::MatrixXcd m(v.rows, v.cols);
        for (int i = 0; i < v.rows; ++i)
            for (int j = 0; j < v.cols; ++j) m(i, j) = v.at(i, j, 0);
        out.push_back(std::move(m));
    }
    return out;
}

// ------------------------------------------------------------ polynomials

namespace {

void poly_add_to(Poly& acc, const Poly& p, cplx s = 1.0) {
    for (const auto& [m, c] : p) {
        cplx& slot = acc[m];
        slot += s * c;
        if (slot == cplx(0.0)) acc.erase(m);
    }
}

Poly poly_mul(const Poly& a, const Poly& b) {
    Poly out;
    for (const auto& [ma, ca] : a)
        for (const auto& [mb, cb] : b) {
            const Monomial m{ma[0] + mb[0], ma[1] + mb[1], ma[2] + mb[2], ma[3] + mb[3]};
            cplx& slot = out[m];
            slot += ca * cb;
        }
    for (auto it = out.begin(); it != out.end();) it = it->second == cplx(0.0) ? out.erase(it) : std::next(it);
    return out;
}

Poly poly_conj(const Poly& p) {
    Poly out;
    for (const auto& [m, c] : p) out[{m[2], m[3], m[0], m[1]}] = std::conj(c);
    return out;
}

MatPoly mp_zero(int rows, int cols) { return {rows, cols, std::vector<Poly>(rows * cols)}; }

MatPoly mp_identity(int k) {
    MatPoly p = mp_zero(k, k);
    for (int i = 0; i < k; ++i) p.entries[i * k + i][{0, 0, 0, 0}] = 1.0;
    return p;
}

MatPoly mp_mul(const MatPoly& a, const MatPoly& b) {
    if (a.rows == 1 && a.cols == 1) {
        MatPoly o = mp_zero(b.rows, b.cols);
        for (std::size_t e = 0; e < b.entries.size(); ++e) o.entries[e] = poly_mul(a.entries[0], b.entries[e]);
        return o;
    }
    if (b.rows == 1 && b.cols == 1) {
        MatPoly o = mp_zero(a.rows, a.cols);
        for (std::size_t e = 0; e < a.entries.size(); ++e) o.entries[e] = poly_mul(a.entries[e], b.entries[0]);
        return o;
    }
    MatPoly o = mp_zero(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.cols; ++j)
            for (int k = 0; k < a.cols; ++k) poly_add_to(o.entries[i * b.cols + j], poly_mul(a.at(i, k), b.at(k, j)));
    return o;
}

MatPoly build(const Expr& e) {
    const cplx I(0.0, 1.0);
    switch (e->op) {
        case Op::Const: {
            MatPoly p = mp_zero(e->rows, e->cols);
            if (e->value != cplx(0.0))
                for (auto& q : p.entries) q[{0, 0, 0, 0}] = e->value;
            return p;
        }
        case Op::Var: {
            MatPoly p = mp_zero(1, 1);
            Poly& q = p.entries[0];
            switch (e->var) {
                case VarKind::Z1: q[{1, 0, 0, 0}] = 1.0; break;
                case VarKind::Z2: q[{0, 1, 0, 0}] = 1.0; break;
                case VarKind::ZB1: q[{0, 0, 1, 0}] = 1.0; break;
                case VarKind::ZB2: q[{0, 0, 0, 1}] = 1.0; break;
                case VarKind::X1: q[{1, 0, 0, 0}] = 0.5; q[{0, 0, 1, 0}] = 0.5; break;
                case VarKind::X2: q[{1, 0, 0, 0}] = -0.5 * I; q[{0, 0, 1, 0}] = 0.5 * I; break;
                case VarKind::X3: q[{0, 1, 0, 0}] = 0.5; q[{0, 0, 0, 1}] = 0.5; break;
                case VarKind::X4: q[{0, 1, 0, 0}] = -0.5 * I; q[{0, 0, 0, 1}] = 0.5 * I; break;
            }
            return p;
        }
        case Op::Matrix: {
            MatPoly p = mp_zero(e->rows, e->cols);
            for (std::size_t k = 0; k < e->args.size(); ++k) p.entries[k] = build(e->args[k]).entries[0];
            return p;
        }
        case Op::Add:
        case Op::Sub: {
            MatPoly a = build(e->args[0]);
            const MatPoly b = build(e->args[1]);
            for (std::size_t k = 0; k < a.entries.size(); ++k)
                poly_add_to(a.entries[k], b.entries[k], e->op == Op::Add ? 1.0 : -1.0);
            return a;
        }
        case Op::Neg: {
            MatPoly a = build(e->args[0]);
            for (auto& q : a.entries)
                for (auto& [m, c] : q) c = -c;
            return a;
        }
        case Op::Mul: return mp_mul(build(e->args[0]), build(e->args[1]));
        case Op::Pow: {
            const MatPoly a = build(e->args[0]);
            MatPoly acc = mp_identity(a.rows);
            for (int k = 0; k < e->power; ++k) acc = mp_mul(acc, a);
            return acc;
        }
        case Op::Inv: {
            const MatPoly a = build(e->args[0]);
            if (a.rows == 1 && a.entries[0].size() == 1 && a.entries[0].begin()->first == Monomial{0, 0, 0, 0}) {
                MatPoly p = mp_zero(1, 1);
                p.entries[0][{0, 0, 0, 0}] = 1.0 / a.entries[0].begin()->second;
                return p;
            }
            throw Error(ErrorKind::Unsupported, "symbol is not polynomial in z, conj(z): inverse of a non-constant");
        }
        case Op::Conj: {
            MatPoly a = build(e->args[0]);
            for (auto& q : a.entries) q = poly_conj(q);
            return a;
        }
        case Op::Adj: return polynomial_adjoint(build(e->args[0]));
    }
    throw Error(ErrorKind::Unsupported, "unknown expression node");
}

}  // namespace

int MatPoly::degree() const {
    int d = 0;
    for (const auto& q : entries)
        for (const auto& [m, c] : q) d = std::max(d, m[0] + m[1] + m[2] + m[3]);
    return d;
}

MatPoly polynomial_adjoint(const MatPoly& p) {
    MatPoly o = mp_zero(p.cols, p.rows);
    for (int i = 0; i < p.rows; ++i)
        for (int j = 0; j < p.cols; ++j) o.entries[j * p.rows + i] = poly_conj(p.at(i, j));
    return o;
}

MatPoly to_polynomial(const Expr& e) { return build(e); }

}  // namespace hindex
