#include "core/expression.hpp"

#include "core/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>

namespace bbgp {

class ExpressionParser {
public:
    ExpressionParser(std::string_view text, Expression& out) : text_(text), out_(out) {}

    void run() {
        parse_expr();
        skip_space();
        if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    }

private:
    using Op = Expression::Op;

    [[noreturn]] void fail(const std::string& what) const {
        throw InvalidArgument("expression error at column " + std::to_string(pos_ + 1) + ": " + what + " in \"" +
                              std::string(text_) + "\"");
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void emit(Op op, double value = 0.0, int slot = 0) { out_.program_.push_back({op, value, slot}); }

    void parse_expr() {
        parse_term();
        for (;;) {
            if (accept('+')) {
                parse_term();
                emit(Op::Add);
            } else if (accept('-')) {
                parse_term();
                emit(Op::Sub);
            } else {
                return;
            }
        }
    }

    void parse_term() {
        parse_unary();
        for (;;) {
            if (accept('*')) {
                parse_unary();
                emit(Op::Mul);
            } else if (accept('/')) {
                parse_unary();
                emit(Op::Div);
            } else {
                return;
            }
        }
    }

    void parse_unary() {
        if (accept('-')) {
            parse_unary();
            emit(Op::Neg);
        } else if (accept('+')) {
            parse_unary();
        } else {
            parse_power();
        }
    }

    void parse_power() {
        parse_primary();
        if (accept('^')) {
            parse_unary();
            emit(Op::Pow);
        }
    }

    void parse_primary() {
        skip_space();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            parse_expr();
            if (!accept(')')) fail("expected ')'");
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            parse_number();
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            parse_identifier();
            return;
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    void parse_number() {
        const char* begin = text_.data() + pos_;
        const char* end = text_.data() + text_.size();
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(begin, end, v);
        if (ec != std::errc()) fail("malformed number");
        pos_ += static_cast<std::size_t>(ptr - begin);
        emit(Op::Const, v);
    }

    void parse_identifier() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
        const std::string name(text_.substr(start, pos_ - start));

        if (name == "sin" || name == "cos" || name == "exp") {
            if (!accept('(')) fail("expected '(' after " + name);
            parse_expr();
            if (!accept(')')) fail("expected ')'");
            emit(name == "sin" ? Op::Sin : name == "cos" ? Op::Cos : Op::Exp);
            return;
        }
        if (name == "pi") return emit(Op::Const, std::numbers::pi);
        if (name == "e") return emit(Op::Const, std::numbers::e);
        if (name == "x") {
            if (out_.dim_ != 1) {
                pos_ = start;
                fail("'x' is only valid for d = 1; use x1..x" + std::to_string(out_.dim_));
            }
            return emit(Op::Var, 0.0, 0);
        }
        if (auto idx = suffix_index(name, "theta")) {
            out_.parameter_count_ = std::max(out_.parameter_count_, *idx);
            return emit(Op::Param, 0.0, *idx - 1);
        }
        if (auto idx = suffix_index(name, "x")) {
            if (*idx > out_.dim_) {
                pos_ = start;
                fail("variable " + name + " exceeds dimension " + std::to_string(out_.dim_));
            }
            return emit(Op::Var, 0.0, *idx - 1);
        }
        pos_ = start;
        fail("unknown identifier '" + name + "'");
    }

    static std::optional<int> suffix_index(const std::string& name, std::string_view prefix) {
        if (name.size() <= prefix.size() || name.compare(0, prefix.size(), prefix) != 0) return std::nullopt;
        int v = 0;
        const char* b = name.data() + prefix.size();
        const char* e = name.data() + name.size();
        auto [ptr, ec] = std::from_chars(b, e, v);
        if (ec != std::errc() || ptr != e || v < 1) return std::nullopt;
        return v;
    }

    std::string_view text_;
    Expression& out_;
    std::size_t pos_ = 0;
};

Expression Expression::parse(std::string_view text, int dim) {
    require(dim >= 1 && dim <= 3, "expression dimension must be 1, 2 or 3");
    Expression e;
    e.text_ = std::string(text);
    e.dim_ = dim;
    ExpressionParser(text, e).run();

    std::size_t depth = 0;
    for (const auto& ins : e.program_) {
        switch (ins.op) {
            case Op::Const:
            case Op::Var:
            case Op::Param: ++depth; break;
            case Op::Add:
            case Op::Sub:
            case Op::Mul:
            case Op::Div:
            case Op::Pow: --depth; break;
            default: break;
        }
        e.max_depth_ = std::max(e.max_depth_, depth);
    }
    return e;
}

double Expression::operator()(std::span<const double> x, std::span<const double> theta) const {
    require(static_cast<int>(x.size()) == dim_, "expression evaluated at a point of the wrong dimension");
    require(static_cast<int>(theta.size()) >= parameter_count_,
            "expression needs " + std::to_string(parameter_count_) + " parameters, got " + std::to_string(theta.size()));
    std::array<double, 64> small{};
    std::vector<double> large;
    double* stack = small.data();
    if (max_depth_ > small.size()) {
        large.resize(max_depth_);
        stack = large.data();
    }
    std::size_t top = 0;
    for (const auto& ins : program_) {
        switch (ins.op) {
            case Op::Const: stack[top++] = ins.value; break;
            case Op::Var: stack[top++] = x[static_cast<std::size_t>(ins.slot)]; break;
            case Op::Param: stack[top++] = theta[static_cast<std::size_t>(ins.slot)]; break;
            case Op::Add: --top; stack[top - 1] += stack[top]; break;
            case Op::Sub: --top; stack[top - 1] -= stack[top]; break;
            case Op::Mul: --top; stack[top - 1] *= stack[top]; break;
            case Op::Div: --top; stack[top - 1] /= stack[top]; break;
            case Op::Pow: --top; stack[top - 1] = std::pow(stack[top - 1], stack[top]); break;
            case Op::Neg: stack[top - 1] = -stack[top - 1]; break;
            case Op::Sin: stack[top - 1] = std::sin(stack[top - 1]); break;
            case Op::Cos: stack[top - 1] = std::cos(stack[top - 1]); break;
            case Op::Exp: stack[top - 1] = std::exp(stack[top - 1]); break;
        }
    }
    return stack[0];
}

}  // namespace bbgp
