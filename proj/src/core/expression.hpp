#pragma once

// Arithmetic expressions over points of [0,1]^d.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('+' | '-') unary | power
//   power   := primary ('^' unary)?          right associative
//   primary := number | constant | variable | func '(' expr ')' | '(' expr ')'
//
// constants: pi, e. functions: sin, cos, exp. variables: x (d = 1) or
// x1..xd, and free parameters theta1..thetam.

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bbgp {

class Expression {
public:
    /// Throws InvalidArgument with the column of the first offending token.
    static Expression parse(std::string_view text, int dim);

    [[nodiscard]] double operator()(std::span<const double> x, std::span<const double> theta = {}) const;

    [[nodiscard]] int dim() const { return dim_; }
    /// Highest theta index referenced (0 when the expression is parameter free).
    [[nodiscard]] int parameter_count() const { return parameter_count_; }
    [[nodiscard]] const std::string& text() const { return text_; }

    enum class Op { Const, Var, Param, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp };
    struct Instr {
        Op op;
        double value = 0.0;
        int slot = 0;
    };

private:
    Expression() = default;

    std::string text_;
    int dim_ = 1;
    int parameter_count_ = 0;
    std::size_t max_depth_ = 0;
    std::vector<Instr> program_;  // postfix

    friend class ExpressionParser;
};

}  // namespace bbgp
