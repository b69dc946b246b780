#pragma once

#include <functional>

#include "compsplit/meta/matrix.hpp"

namespace compsplit::meta {

/// A twice-differentiable objective over a parameter matrix: value, exact
/// gradient and exact Hessian-vector product. The meta update is written
/// against this interface so tests can drive it with closed-form surrogates.
struct DiffObjective {
    std::function<double(const Matrix&)> value;
    std::function<Matrix(const Matrix&)> grad;
    std::function<Matrix(const Matrix&, const Matrix&)> hvp;
};

/// One inner gradient-descent step: theta - alpha_lr * grad(theta).
/// Never mutates its input; the caller's parameters stay untouched.
inline Matrix inner_step(const Matrix& theta, const DiffObjective& train, double alpha_lr) {
    Matrix updated = theta;
    updated.axpy(-alpha_lr, train.grad(theta));
    return updated;
}

/// Loss of `pcomp` evaluated at the inner-updated parameters.
inline double lookahead_value(const Matrix& theta, const DiffObjective& train,
                              const DiffObjective& pcomp, double alpha_lr) {
    return pcomp.value(inner_step(theta, train, alpha_lr));
}

/// Composite objective train(theta) + lambda * pcomp(theta - alpha * grad_train(theta)).
inline double meta_objective(const Matrix& theta, const DiffObjective& train,
                             const DiffObjective& pcomp, double alpha_lr, double lambda) {
    return train.value(theta) + lambda * lookahead_value(theta, train, pcomp, alpha_lr);
}

/// Gradient of the composite objective. With second_order the chain rule
/// through the inner step contributes -alpha * H_train(theta) * g_pcomp(theta1);
/// without it the inner update is treated as constant (first-order variant).
inline Matrix meta_gradient(const Matrix& theta, const DiffObjective& train,
                            const DiffObjective& pcomp, double alpha_lr, double lambda,
                            bool second_order) {
    Matrix g = train.grad(theta);
    if (lambda != 0.0) {
        const Matrix theta1 = inner_step(theta, train, alpha_lr);
        Matrix g_pcomp = pcomp.grad(theta1);
        if (second_order) {
            g_pcomp.axpy(-alpha_lr, train.hvp(theta, g_pcomp));
        }
        g.axpy(lambda, g_pcomp);
    }
    return g;
}

}  // namespace compsplit::meta
