#pragma once

#include "dncalc/common.hpp"

#include <array>
#include <memory>
#include <string>

namespace dncalc {

/// Complex-valued expression in the variables x, y (aliases x1, x2).
/// Supports + - * / ^, unary minus, i, pi, e, numbers and
/// sin cos tan exp log sqrt sinh cosh tanh abs conj re im.
class Expression {
public:
    struct Node;

    /// Throws InvalidArgument with the column of the offending token.
    static Expression parse(const std::string& text);

    cplx evaluate(const std::array<double, 2>& x) const;
    const std::string& text() const { return text_; }

private:
    std::string text_;
    std::shared_ptr<const Node> root_;
};

}  // namespace dncalc
