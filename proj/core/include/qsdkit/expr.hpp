#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qsd {

/// Rate expressions over the scaled state y1..yk and named parameters.
///
/// Grammar (whitespace-insensitive):
///
///     expr   := term (('+'|'-') term)*
///     term   := factor (('*'|'/') factor)*
///     factor := '-' factor | atom ('^' atom)?
///     atom   := number | ident | '(' expr ')' | func '(' expr ')'
///     func   := 'exp' | 'log' | 'sqrt'
///     ident  := 'y' digit+ | parameter name
///
/// Unary minus is an extension of the core grammar; every expression of the
/// core grammar parses to the same tree with or without it.
class RateExpr {
public:
    enum class Op : std::uint8_t { Num, Var, Param, Add, Sub, Mul, Div, Pow, Neg, Exp, Log, Sqrt };

    struct Node {
        Op op;
        double value = 0.0; // Num
        int index = -1;     // Var: coordinate (0-based), Param: slot in the parameter list
        int lhs = -1;       // child node ids; unary ops use lhs only
        int rhs = -1;
    };

    RateExpr() = default;

    /// Evaluates at scaled state `y` with parameter values ordered as the
    /// parameter list the expression was parsed against. Throws
    /// Error(DomainError) for log/sqrt of a negative number, division by zero,
    /// or any non-finite result.
    double eval(std::span<const double> y, std::span<const double> params) const;

    /// Fully parenthesised rendering. Parsing the output yields a
    /// structurally equal tree.
    std::string print() const;

    const std::string& source() const noexcept { return source_; }
    const std::vector<std::string>& parameter_names() const noexcept { return param_names_; }
    int dimension() const noexcept { return k_; }
    std::span<const Node> nodes() const noexcept { return nodes_; }
    int root() const noexcept { return root_; }
    bool empty() const noexcept { return nodes_.empty(); }

    /// Tree equality, ignoring source text.
    bool structurally_equal(const RateExpr& other) const;

    /// Copy with coordinates relabelled: variable y_{i+1} becomes y_{perm[i]+1}.
    RateExpr with_permuted_coordinates(std::span<const int> perm) const;

    friend RateExpr parse_rate_expr(std::string_view, int, std::span<const std::string>);

private:
    struct Instr {
        Op op;
        double value;
        int index;
    };

    void compile();
    bool equal_subtree(int a, const RateExpr& other, int b) const;
    void print_node(int id, std::string& out) const;

    std::vector<Node> nodes_;
    int root_ = -1;
    int k_ = 0;
    std::string source_;
    std::vector<std::string> param_names_;
    std::vector<Instr> program_;
    int max_stack_ = 0;
};

/// Parses `text` in dimension `k` against the given parameter names.
/// Throws SyntaxError (with byte position) or Error(UnknownIdentifier).
RateExpr parse_rate_expr(std::string_view text, int k, std::span<const std::string> params);

} // namespace qsd
