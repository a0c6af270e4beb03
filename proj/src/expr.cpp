#include "ladder/expr.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "ladder/errors.hpp"

namespace ladder {

namespace {

constexpr std::array<std::string_view, kTokenCount> kTokenText = {"+",    "*",    "/", "(", ")", "sin(",
                                                                  "exp(", "v",    "1", "2", "3"};

void serialize_into(const ExprTree& t, Structure& out)
{
    switch (t.kind) {
    case NodeKind::Add:
    case NodeKind::Mul:
    case NodeKind::Div:
        serialize_into(t.children.at(0), out);
        out.push_back(t.kind == NodeKind::Add ? Token::Plus : t.kind == NodeKind::Mul ? Token::Times : Token::Divide);
        serialize_into(t.children.at(1), out);
        return;
    case NodeKind::Paren:
    case NodeKind::Sin:
    case NodeKind::Exp:
        out.push_back(t.kind == NodeKind::Paren ? Token::LParen : t.kind == NodeKind::Sin ? Token::Sin : Token::Exp);
        serialize_into(t.children.at(0), out);
        out.push_back(Token::RParen);
        return;
    case NodeKind::Var: out.push_back(Token::Var); return;
    case NodeKind::One: out.push_back(Token::One); return;
    case NodeKind::Two: out.push_back(Token::Two); return;
    case NodeKind::Three: out.push_back(Token::Three); return;
    }
}

class Parser {
public:
    explicit Parser(std::span<const Token> tokens) : tokens_(tokens) {}

    ExprTree run()
    {
        ExprTree tree = parse_s();
        if (pos_ != tokens_.size())
            throw SyntaxError(pos_, "unexpected '" + std::string(token_text(tokens_[pos_])) + "'");
        return tree;
    }

private:
    ExprTree parse_s()
    {
        ExprTree left = parse_t();
        while (pos_ < tokens_.size()) {
            NodeKind kind;
            switch (tokens_[pos_]) {
            case Token::Plus: kind = NodeKind::Add; break;
            case Token::Times: kind = NodeKind::Mul; break;
            case Token::Divide: kind = NodeKind::Div; break;
            default: return left;
            }
            ++pos_;
            ExprTree right = parse_t();
            ExprTree node{kind, {}};
            node.children.reserve(2);
            node.children.push_back(std::move(left));
            node.children.push_back(std::move(right));
            left = std::move(node);
        }
        return left;
    }

    ExprTree parse_t()
    {
        if (pos_ >= tokens_.size()) throw SyntaxError(pos_, "unexpected end of input");
        const Token t = tokens_[pos_++];
        switch (t) {
        case Token::Var: return {NodeKind::Var, {}};
        case Token::One: return {NodeKind::One, {}};
        case Token::Two: return {NodeKind::Two, {}};
        case Token::Three: return {NodeKind::Three, {}};
        case Token::LParen:
        case Token::Sin:
        case Token::Exp: {
            const NodeKind kind = t == Token::LParen ? NodeKind::Paren : t == Token::Sin ? NodeKind::Sin : NodeKind::Exp;
            ExprTree inner = parse_s();
            if (pos_ >= tokens_.size()) throw SyntaxError(pos_, "unexpected end of input, expected ')'");
            if (tokens_[pos_] != Token::RParen)
                throw SyntaxError(pos_, "expected ')', got '" + std::string(token_text(tokens_[pos_])) + "'");
            ++pos_;
            ExprTree node{kind, {}};
            node.children.push_back(std::move(inner));
            return node;
        }
        default:
            --pos_;
            throw SyntaxError(pos_, "unexpected '" + std::string(token_text(t)) + "'");
        }
    }

    std::span<const Token> tokens_;
    std::size_t pos_ = 0;
};

ExprTree leaf(std::mt19937_64& rng)
{
    constexpr std::array<NodeKind, 4> kLeaves = {NodeKind::Var, NodeKind::One, NodeKind::Two, NodeKind::Three};
    std::uniform_int_distribution<int> pick(0, 3);
    return {kLeaves[static_cast<std::size_t>(pick(rng))], {}};
}

ExprTree generate_t(std::mt19937_64& rng, int depth, int max_depth);

ExprTree generate_s(std::mt19937_64& rng, int depth, int max_depth)
{
    if (depth >= max_depth) return generate_t(rng, depth, max_depth);
    std::uniform_int_distribution<int> pick(0, 3);
    const int choice = pick(rng);
    if (choice == 3) return generate_t(rng, depth, max_depth);
    constexpr std::array<NodeKind, 3> kOps = {NodeKind::Add, NodeKind::Mul, NodeKind::Div};
    ExprTree node{kOps[static_cast<std::size_t>(choice)], {}};
    node.children.reserve(2);
    node.children.push_back(generate_s(rng, depth + 1, max_depth));
    node.children.push_back(generate_t(rng, depth + 1, max_depth));
    return node;
}

ExprTree generate_t(std::mt19937_64& rng, int depth, int max_depth)
{
    if (depth >= max_depth) return leaf(rng);
    std::uniform_int_distribution<int> pick(0, 6);
    const int choice = pick(rng);
    if (choice >= 3) return leaf(rng);
    constexpr std::array<NodeKind, 3> kWraps = {NodeKind::Paren, NodeKind::Sin, NodeKind::Exp};
    ExprTree node{kWraps[static_cast<std::size_t>(choice)], {}};
    node.children.push_back(generate_s(rng, depth + 1, max_depth));
    return node;
}

}  // namespace

std::string_view token_text(Token t)
{
    return kTokenText.at(static_cast<std::size_t>(t));
}

std::string to_string(std::span<const Token> tokens)
{
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out.append(token_text(tokens[i]));
    }
    return out;
}

Structure tokenize(std::string_view text)
{
    Structure out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == ' ' || text[i] == '\t') {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && text[j] != ' ' && text[j] != '\t') ++j;
        const std::string_view word = text.substr(i, j - i);
        bool found = false;
        for (int k = 0; k < kTokenCount; ++k) {
            if (kTokenText[static_cast<std::size_t>(k)] == word) {
                out.push_back(static_cast<Token>(k));
                found = true;
                break;
            }
        }
        if (!found) throw SyntaxError(out.size(), "unknown token '" + std::string(word) + "'");
        i = j;
    }
    return out;
}

Structure serialize(const ExprTree& tree)
{
    Structure out;
    serialize_into(tree, out);
    return out;
}

ExprTree parse(std::span<const Token> tokens)
{
    return Parser(tokens).run();
}

ExprTree generate_expression(std::mt19937_64& rng, int max_depth)
{
    if (max_depth < 1) throw ConfigError("generate_expression: max_depth must be >= 1");
    return generate_s(rng, 1, max_depth);
}

double evaluate(const ExprTree& t, double v)
{
    switch (t.kind) {
    case NodeKind::Add: return evaluate(t.children[0], v) + evaluate(t.children[1], v);
    case NodeKind::Mul: return evaluate(t.children[0], v) * evaluate(t.children[1], v);
    case NodeKind::Div: {
        const double num = evaluate(t.children[0], v);
        const double den = evaluate(t.children[1], v);
        if (!(std::abs(den) >= 1e-12)) return std::numeric_limits<double>::quiet_NaN();
        return num / den;
    }
    case NodeKind::Paren: return evaluate(t.children[0], v);
    case NodeKind::Sin: return std::sin(evaluate(t.children[0], v));
    case NodeKind::Exp: return std::exp(evaluate(t.children[0], v));
    case NodeKind::Var: return v;
    case NodeKind::One: return 1.0;
    case NodeKind::Two: return 2.0;
    case NodeKind::Three: return 3.0;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

double target_function(double v)
{
    return (1.0 / 3.0 * v) * std::sin(v * v);
}

ExprObjective::ExprObjective(ObjectiveConfig cfg) : cfg_(cfg)
{
    if (cfg_.grid_points < 2) throw ConfigError("objective: grid_points must be >= 2");
    if (!(cfg_.mse_floor > 0.0) || !(cfg_.penalty_mse > 0.0))
        throw ConfigError("objective: floor and penalty must be positive");
    grid_.resize(static_cast<std::size_t>(cfg_.grid_points));
    target_.resize(grid_.size());
    const double span = cfg_.grid_hi - cfg_.grid_lo;
    const double last = static_cast<double>(cfg_.grid_points - 1);
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        grid_[i] = cfg_.grid_lo + span * static_cast<double>(i) / last;
        target_[i] = target_function(grid_[i]);
    }
}

double ExprObjective::penalty() const
{
    return std::log(cfg_.penalty_mse);
}

double ExprObjective::operator()(const ExprTree& tree) const
{
    double sum = 0.0;
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        const double value = evaluate(tree, grid_[i]);
        if (!std::isfinite(value)) return penalty();
        const double diff = value - target_[i];
        sum += diff * diff;
    }
    const double mse = sum / static_cast<double>(grid_.size());
    if (!std::isfinite(mse) || mse > cfg_.penalty_mse) return penalty();
    return std::log(std::max(mse, cfg_.mse_floor));
}

std::vector<Structure> generate_database(std::size_t count, int max_depth, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::vector<Structure> out;
    std::unordered_set<std::string> seen;
    out.reserve(count);
    // Small depths admit few distinct expressions; give up after a bounded
    // number of consecutive duplicates.
    std::size_t misses = 0;
    while (out.size() < count && misses < 100000) {
        Structure s = serialize(generate_expression(rng, max_depth));
        if (seen.insert(to_string(s)).second) {
            out.push_back(std::move(s));
            misses = 0;
        } else {
            ++misses;
        }
    }
    return out;
}

}  // namespace ladder
