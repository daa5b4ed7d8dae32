#pragma once

#include <array>
#include <complex>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hindex/contact_models.hpp"

namespace hindex {

// Expression trees for matrix-valued functions on the ambient space of a
// sphere. Nodes are immutable and shared; constructors simplify trivially
// zero terms so derivative trees stay small.

enum class VarKind { X1, X2, X3, X4, Z1, Z2, ZB1, ZB2 };

enum class Op { Const, Var, Matrix, Add, Sub, Neg, Mul, Pow, Inv, Conj, Adj };

struct Node;
using Expr = std::shared_ptr<const Node>;

struct Node {
    Op op = Op::Const;
    int rows = 1;
    int cols = 1;
    cplx value{};            // Const: every entry equals value
    VarKind var = VarKind::X1;
    int power = 0;           // Pow: exponent >= 0
    std::vector<Expr> args;  // Matrix: row-major scalar entries
};

namespace sym {

Expr constant(cplx v, int rows = 1, int cols = 1);
Expr zero(int rows, int cols);
Expr identity(int k);
Expr var(VarKind v);
Expr matrix(int rows, int cols, std::vector<Expr> entries);
Expr su2();

// Scalar (1×1) operands broadcast as scalar·I in sums; shapes are checked
// and violations throw Error(InvalidInput).
Expr add(const Expr& a, const Expr& b);
Expr sub(const Expr& a, const Expr& b);
Expr neg(const Expr& a);
Expr mul(const Expr& a, const Expr& b);
Expr pow(const Expr& a, int k);  // negative k means inverse power
Expr inv(const Expr& a);
Expr conj(const Expr& a);
Expr adj(const Expr& a);

bool is_zero(const Expr& e);
bool is_scalar(const Expr& e);

// ∂/∂x_{i+1} of the ambient extension, i in [0, 4).
Expr derivative(const Expr& e, int i);

// Fully parenthesised DSL text; parse(to_string(e)) evaluates identically.
std::string to_string(const Expr& e);

}  // namespace sym

struct ParseContext {
    int n = 1;  // 0: circle (x1, x2, z), 1: S³ (x1..x4, z1, z2, su2(x))
    int r = 1;  // size of the identity I
};

// Grammar:
//   expr    := term { ("+" | "-") term }
//   term    := unary { ("*" | "/") unary }
//   unary   := "-" unary | power
//   power   := primary [ "^" ( int | "-" int | "(" ["-"] int ")" ) ]
//   primary := number ["i"] | "i" | "I" | ident | func "(" expr ")"
//            | "su2" "(" "x" ")" | "(" expr ")" | matrix
//   matrix  := "[" row { "," row } "]"      row := "[" expr { "," expr } "]"
//   func    := "conj" | "adj" | "inv"
// Errors are ParseError with 1-based line and column.
Expr parse_symbol(const std::string& text, const ParseContext& ctx);

// Values of a matrix expression at a batch of points, entry-major:
// entry e = i*cols + j, point k at index e*count + k.
struct BatchValues {
    int rows = 0, cols = 0;
    std::size_t count = 0;
    std::vector<double> re, im;
    cplx at(int i, int j, std::size_t k) const {
        const std::size_t idx = static_cast<std::size_t>(i * cols + j) * count + k;
        return {re[idx], im[idx]};
    }
};

// Compiles one or more expressions into a straight-line program over shared
// subexpressions and evaluates it on point batches with the complex kernels.
class Evaluator {
public:
    explicit Evaluator(std::vector<Expr> roots);
    explicit Evaluator(const Expr& root) : Evaluator(std::vector<Expr>{root}) {}

    std::size_t outputs() const { return roots_.size(); }
    // x[k] points at the k-th ambient coordinate of count points.
    std::vector<BatchValues> eval(std::size_t count, const double* const x[4]) const;
    std::vector<Eigen::MatrixXcd> eval_point(const Vec4& x) const;

private:
    struct Instr {
        const Node* node;
        std::vector<int> in;
    };
    std::vector<Instr> program_;
    std::vector<int> roots_;
    std::vector<Expr> keep_;
};

// Matrix-valued polynomials in (z₁, z₂, z̄₁, z̄₂); exponents in that order.
using Monomial = std::array<int, 4>;
using Poly = std::map<Monomial, cplx>;

struct MatPoly {
    int rows = 0, cols = 0;
    std::vector<Poly> entries;  // row-major
    const Poly& at(int i, int j) const { return entries[i * cols + j]; }
    int degree() const;
};

// Throws Error(Unsupported) when the expression is not polynomial
// (inverses are only accepted for nonzero scalar constants).
MatPoly to_polynomial(const Expr& e);
MatPoly polynomial_adjoint(const MatPoly& p);

}  // namespace hindex
