#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ladder {

/// Terminals of the arithmetic-expression grammar
///   S -> S '+' T | S '*' T | S '/' T | T
///   T -> '(' S ')' | 'sin(' S ')' | 'exp(' S ')' | 'v' | '1' | '2' | '3'
enum class Token : std::uint8_t { Plus, Times, Divide, LParen, RParen, Sin, Exp, Var, One, Two, Three };

inline constexpr int kTokenCount = 11;

/// A combinatorial structure: the token sequence of an expression.
using Structure = std::vector<Token>;

std::string_view token_text(Token t);

/// Space-separated token string, e.g. "sin( v ) * 2".
std::string to_string(std::span<const Token> tokens);

/// Splits a space-separated token string. Throws SyntaxError on an unknown
/// token (position = index of the offending token).
Structure tokenize(std::string_view text);

enum class NodeKind : std::uint8_t { Add, Mul, Div, Paren, Sin, Exp, Var, One, Two, Three };

/// Parse tree of an expression. Binary nodes hold (S, T) children; their right
/// child is never itself a binary node. Paren/Sin/Exp hold one child.
struct ExprTree {
    NodeKind kind = NodeKind::Var;
    std::vector<ExprTree> children;

    bool operator==(const ExprTree&) const = default;
};

Structure serialize(const ExprTree& tree);

/// Recursive descent over the grammar. All binary operators associate to the
/// left at the same level, so "v + 1 * 2" is (v + 1) * 2.
ExprTree parse(std::span<const Token> tokens);

/// Uniform choice among productions. Unit production S -> T keeps the depth;
/// every other expansion increases it by one. At depth >= max_depth S must
/// pick T and T must pick one of 'v', '1', '2', '3'.
ExprTree generate_expression(std::mt19937_64& rng, int max_depth);

/// Plain recursive evaluation. Division by |x| < 1e-12 yields NaN.
double evaluate(const ExprTree& tree, double v);

/// (1/3 * v) * sin(v * v), matching the left-associated evaluation order of
/// the expression "1 / 3 * v * sin( v * v )".
double target_function(double v);

struct ObjectiveConfig {
    int grid_points = 1000;
    double grid_lo = -10.0;
    double grid_hi = 10.0;
    double mse_floor = 1e-10;
    double penalty_mse = 1e10;
};

/// log(max(MSE, floor)) of the expression against the target over an
/// inclusive evenly spaced grid; log(penalty) if any value is non-finite.
/// Minimization convention.
class ExprObjective {
public:
    explicit ExprObjective(ObjectiveConfig cfg = {});

    double operator()(const ExprTree& tree) const;
    double operator()(std::span<const Token> tokens) const { return (*this)(parse(tokens)); }

    const ObjectiveConfig& config() const noexcept { return cfg_; }
    std::span<const double> grid() const noexcept { return grid_; }
    double penalty() const;

private:
    ObjectiveConfig cfg_;
    std::vector<double> grid_;
    std::vector<double> target_;
};

/// Deduplicated (by token string) database of random expressions, in
/// generation order.
std::vector<Structure> generate_database(std::size_t count, int max_depth, std::uint64_t seed);

}  // namespace ladder
