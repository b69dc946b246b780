#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "compsplit/meta/maml.hpp"
#include "compsplit/meta/matrix.hpp"
#include "compsplit/schema.hpp"

namespace compsplit::meta {

/// A datum for the toy generator: a condition and an observed token sequence.
struct TokenRecord {
    Combination combination;
    std::vector<std::int32_t> tokens;
};

struct TokenBatch {
    std::vector<TokenRecord> records;
};

/// Linear-softmax conditional token generator. theta has one row per
/// attribute value (flattened aspect-major); a combination's token logits are
/// the sum of its attribute rows plus the frozen bias phi. Exact closed-form
/// loss, gradient and Hessian-vector product make second-order meta updates
/// cheap.
struct ToyGenModel {
    SchemaPtr schema;
    Matrix theta;             // (sum_i a_i) x V
    std::vector<double> phi;  // length V, frozen

    ToyGenModel(SchemaPtr schema_in, std::size_t vocab_size);

    std::size_t vocab_size() const { return phi.size(); }

    /// softmax(phi + sum of the combination's theta rows)
    std::vector<double> token_distribution(const Combination& c) const;
};

struct LossGrad {
    double loss = 0.0;
    Matrix grad;
};

struct TrainConfig {
    double alpha_lr = 0.1;        // inner learning rate
    double beta_lr = 0.1;         // outer learning rate (defaults to alpha)
    double lambda_weight = 0.01;  // pseudo-comp trade-off
    std::size_t batch_size = 8;
    std::size_t steps = 300;
    std::uint64_t seed = 0;
    double aux_loss_weight = 0.0;  // weight of the row-separation penalty
    bool second_order = true;
};

/// Mean-over-records negative log-likelihood (token cross-entropy summed over
/// positions) plus aux_weight times the row-separation penalty.
double train_loss_value(const ToyGenModel& model, const TokenBatch& batch, double aux_weight = 0.0);

/// Loss and its exact gradient with respect to theta.
LossGrad train_loss(const ToyGenModel& model, const TokenBatch& batch, double aux_weight = 0.0);

/// Exact Hessian-vector product of the training objective at theta.
Matrix train_loss_hvp(const ToyGenModel& model, const TokenBatch& batch, const Matrix& v,
                      double aux_weight = 0.0);

/// Mean pairwise cosine of theta rows; the optional auxiliary term that
/// pushes attribute embeddings apart. Zero-norm rows contribute nothing.
double row_separation_penalty(const Matrix& theta);

/// Pairwise cosine similarities of the attribute rows (symmetric, unit
/// diagonal); exposed so embedding geometry can be inspected after training.
Matrix row_cosine_matrix(const Matrix& theta);

/// The training objective bound to one batch as a DiffObjective, evaluated at
/// an arbitrary theta (model provides schema and phi).
DiffObjective bind_objective(const ToyGenModel& model, const TokenBatch& batch,
                             double aux_weight = 0.0);

/// Loss on the pseudo-comp batch at the inner-updated parameters
/// theta1 = theta - alpha_lr * grad(train). The model is never mutated.
double pseudo_comp_loss(const ToyGenModel& model, const TokenBatch& train_batch,
                        const TokenBatch& pcomp_batch, double alpha_lr, double aux_weight = 0.0);

struct MetaStepReport {
    double train_loss = 0.0;
    double pcomp_loss = 0.0;  // evaluated at theta1
    double grad_norm = 0.0;
};

/// One meta update: theta <- theta - beta * grad[ L(theta; train)
/// + lambda * L(theta1(theta); pcomp) ], differentiating through theta1
/// (exact second order by default, first-order variant via config).
MetaStepReport meta_step(ToyGenModel& model, const TokenBatch& train_batch,
                         const TokenBatch& pcomp_batch, const TrainConfig& config);

/// Plain SGD step on the training objective; the non-meta baseline update.
double sgd_step(ToyGenModel& model, const TokenBatch& batch, double lr, double aux_weight = 0.0);

}  // namespace compsplit::meta
