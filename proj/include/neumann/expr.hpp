#pragma once

#include "neumann/field.hpp"

#include <memory>
#include <string>
#include <string_view>

namespace neumann {

/// Grammar (documented verbatim in the CLI help):
///
///   expr   := term (('+' | '-') term)*
///   term   := factor (('*' | '/') factor)*
///   factor := base ('^' factor)?
///   base   := number | ident | '(' expr ')' | '-' factor | func '(' expr ')'
///   ident  := x | y | r | theta | s | pi | e
///   func   := sin | cos | exp | log | abs | sqrt
///
/// '^' is right-associative and binds tighter than unary minus, so
/// "-2^2" is -4 and "2^3^2" is 512. There is no implicit multiplication.
class Expr {
public:
    struct Node;

    /// Throws SyntaxError (with byte offset) or UnknownIdentifier.
    static Expr parse(std::string_view text);

    /// Throws DomainError for log/sqrt outside their domain, division by
    /// zero, or any non-finite intermediate.
    double eval(const NodeCoords& at) const;

    /// Fully parenthesized canonical text; parse(print()) reproduces the tree.
    std::string print() const;

    bool operator==(const Expr& other) const;

private:
    explicit Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
    std::shared_ptr<const Node> root_;
};

GridFunction sample(MeshPtr mesh, const Expr& e);
BoundaryFunction sample_boundary(MeshPtr mesh, const Expr& e);

}  // namespace neumann
