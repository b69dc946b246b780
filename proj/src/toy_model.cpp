#include "compsplit/meta/toy_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace compsplit::meta {

namespace {

std::vector<std::size_t> combination_rows(const AttributeSchema& schema, const Combination& c) {
    std::vector<std::size_t> rows;
    rows.reserve(c.values.size());
    for (std::size_t i = 0; i < c.values.size(); ++i) {
        rows.push_back(schema.value_row(i, static_cast<std::size_t>(c.values[i])));
    }
    return rows;
}

std::vector<double> logits_of(const ToyGenModel& model, const Matrix& theta, const Combination& c) {
    std::vector<double> z(model.phi);
    for (std::size_t r : combination_rows(*model.schema, c)) {
        const double* row = theta.row(r);
        for (std::size_t v = 0; v < z.size(); ++v) z[v] += row[v];
    }
    return z;
}

// stable softmax in place; returns log-sum-exp
double softmax_inplace(std::vector<double>& z) {
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - zmax);
        sum += v;
    }
    for (double& v : z) v /= sum;
    return zmax + std::log(sum);
}

void check_batch(const ToyGenModel& model, const TokenBatch& batch) {
    if (batch.records.empty()) throw std::invalid_argument("empty batch");
    const std::size_t vocab = model.vocab_size();
    for (const auto& rec : batch.records) {
        if (rec.combination.values.size() != model.schema->aspect_count()) {
            throw std::invalid_argument("record combination does not match the model schema");
        }
        for (std::int32_t t : rec.tokens) {
            if (t < 0 || static_cast<std::size_t>(t) >= vocab) {
                throw std::invalid_argument("token id " + std::to_string(t) + " outside vocabulary");
            }
        }
    }
}

// ---- mean pairwise cosine of rows: value / gradient / Hessian-vector ----

struct RowGeom {
    bool live = false;
    double norm = 0.0;
};

constexpr double kNormFloor = 1e-12;

double aux_value(const Matrix& theta) {
    const std::size_t n = theta.rows;
    if (n < 2) return 0.0;
    double sum = 0.0;
    for (std::size_t u = 0; u + 1 < n; ++u) {
        for (std::size_t w = u + 1; w < n; ++w) {
            double uu = 0.0, ww = 0.0, uw = 0.0;
            for (std::size_t k = 0; k < theta.cols; ++k) {
                uu += theta.at(u, k) * theta.at(u, k);
                ww += theta.at(w, k) * theta.at(w, k);
                uw += theta.at(u, k) * theta.at(w, k);
            }
            if (uu > kNormFloor && ww > kNormFloor) {
                sum += uw / std::sqrt(uu * ww);
            }
        }
    }
    return sum / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

void aux_grad_into(const Matrix& theta, double weight, Matrix& grad) {
    const std::size_t n = theta.rows;
    if (n < 2 || weight == 0.0) return;
    const double scale = weight / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
    for (std::size_t u = 0; u + 1 < n; ++u) {
        for (std::size_t w = u + 1; w < n; ++w) {
            double uu = 0.0, ww = 0.0, uw = 0.0;
            for (std::size_t k = 0; k < theta.cols; ++k) {
                uu += theta.at(u, k) * theta.at(u, k);
                ww += theta.at(w, k) * theta.at(w, k);
                uw += theta.at(u, k) * theta.at(w, k);
            }
            if (uu <= kNormFloor || ww <= kNormFloor) continue;
            const double nu = std::sqrt(uu), nw = std::sqrt(ww);
            const double c = uw / (nu * nw);
            for (std::size_t k = 0; k < theta.cols; ++k) {
                grad.at(u, k) += scale * (theta.at(w, k) / (nu * nw) - c * theta.at(u, k) / uu);
                grad.at(w, k) += scale * (theta.at(u, k) / (nu * nw) - c * theta.at(w, k) / ww);
            }
        }
    }
}

// Directional derivative of the cosine-penalty gradient along v.
void aux_hvp_into(const Matrix& theta, const Matrix& v, double weight, Matrix& out) {
    const std::size_t n = theta.rows;
    if (n < 2 || weight == 0.0) return;
    const double scale = weight / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
    const std::size_t cols = theta.cols;
    for (std::size_t u = 0; u + 1 < n; ++u) {
        for (std::size_t w = u + 1; w < n; ++w) {
            const double* a = theta.row(u);
            const double* b = theta.row(w);
            const double* va = v.row(u);
            const double* vb = v.row(w);
            double uu = 0.0, ww = 0.0, uw = 0.0;
            double a_va = 0.0, b_vb = 0.0, b_va = 0.0, a_vb = 0.0;
            for (std::size_t k = 0; k < cols; ++k) {
                uu += a[k] * a[k];
                ww += b[k] * b[k];
                uw += a[k] * b[k];
                a_va += a[k] * va[k];
                b_vb += b[k] * vb[k];
                b_va += b[k] * va[k];
                a_vb += a[k] * vb[k];
            }
            if (uu <= kNormFloor || ww <= kNormFloor) continue;
            const double nu = std::sqrt(uu), nw = std::sqrt(ww);
            const double c = uw / (nu * nw);
            const double dnu = a_va / nu;  // d|a| along va
            const double dnw = b_vb / nw;
            const double dc = (b_va + a_vb) / (nu * nw) - c * (dnu / nu + dnw / nw);
            const double inv = 1.0 / (nu * nw);
            for (std::size_t k = 0; k < cols; ++k) {
                // d/deps of grad_a = b/(nu nw) - c a/nu^2
                const double d_grad_a = vb[k] * inv - b[k] * inv * (dnu / nu + dnw / nw) -
                                        dc * a[k] / uu - c * va[k] / uu +
                                        2.0 * c * a[k] * dnu / (uu * nu);
                const double d_grad_b = va[k] * inv - a[k] * inv * (dnu / nu + dnw / nw) -
                                        dc * b[k] / ww - c * vb[k] / ww +
                                        2.0 * c * b[k] * dnw / (ww * nw);
                out.at(u, k) += scale * d_grad_a;
                out.at(w, k) += scale * d_grad_b;
            }
        }
    }
}

}  // namespace

ToyGenModel::ToyGenModel(SchemaPtr schema_in, std::size_t vocab_size) : schema(std::move(schema_in)) {
    if (!schema) throw std::invalid_argument("toy model needs a schema");
    if (vocab_size < 2) throw std::invalid_argument("vocabulary needs at least 2 tokens");
    theta = Matrix(schema->total_values(), vocab_size, 0.0);
    phi.assign(vocab_size, 0.0);
}

std::vector<double> ToyGenModel::token_distribution(const Combination& c) const {
    auto z = logits_of(*this, theta, c);
    softmax_inplace(z);
    return z;
}

namespace {

double nll_value_at(const ToyGenModel& model, const Matrix& theta, const TokenBatch& batch) {
    double total = 0.0;
    for (const auto& rec : batch.records) {
        auto z = logits_of(model, theta, rec.combination);
        std::vector<double> p = z;
        const double lse = softmax_inplace(p);
        double rec_loss = 0.0;
        for (std::int32_t t : rec.tokens) rec_loss += lse - z[static_cast<std::size_t>(t)];
        total += rec_loss;
    }
    return total / static_cast<double>(batch.records.size());
}

Matrix nll_grad_at(const ToyGenModel& model, const Matrix& theta, const TokenBatch& batch) {
    Matrix grad(theta.rows, theta.cols, 0.0);
    const double inv_n = 1.0 / static_cast<double>(batch.records.size());
    for (const auto& rec : batch.records) {
        auto p = logits_of(model, theta, rec.combination);
        softmax_inplace(p);
        std::vector<double> g(p.size(), 0.0);
        const double len = static_cast<double>(rec.tokens.size());
        for (std::size_t v = 0; v < p.size(); ++v) g[v] = len * p[v];
        for (std::int32_t t : rec.tokens) g[static_cast<std::size_t>(t)] -= 1.0;
        for (std::size_t r : combination_rows(*model.schema, rec.combination)) {
            double* row = grad.row(r);
            for (std::size_t v = 0; v < g.size(); ++v) row[v] += inv_n * g[v];
        }
    }
    return grad;
}

Matrix nll_hvp_at(const ToyGenModel& model, const Matrix& theta, const TokenBatch& batch,
                  const Matrix& v) {
    Matrix out(theta.rows, theta.cols, 0.0);
    const double inv_n = 1.0 / static_cast<double>(batch.records.size());
    for (const auto& rec : batch.records) {
        const auto rows = combination_rows(*model.schema, rec.combination);
        auto p = logits_of(model, theta, rec.combination);
        softmax_inplace(p);
        std::vector<double> s(p.size(), 0.0);
        for (std::size_t r : rows) {
            const double* vr = v.row(r);
            for (std::size_t k = 0; k < s.size(); ++k) s[k] += vr[k];
        }
        double ps = 0.0;
        for (std::size_t k = 0; k < s.size(); ++k) ps += p[k] * s[k];
        const double len = static_cast<double>(rec.tokens.size());
        for (std::size_t r : rows) {
            double* row = out.row(r);
            for (std::size_t k = 0; k < s.size(); ++k) {
                row[k] += inv_n * len * (p[k] * s[k] - p[k] * ps);
            }
        }
    }
    return out;
}

}  // namespace

double row_separation_penalty(const Matrix& theta) { return aux_value(theta); }

Matrix row_cosine_matrix(const Matrix& theta) {
    const std::size_t n = theta.rows;
    Matrix out(n, n, 0.0);
    std::vector<double> norms(n, 0.0);
    for (std::size_t u = 0; u < n; ++u) {
        double s = 0.0;
        for (std::size_t k = 0; k < theta.cols; ++k) s += theta.at(u, k) * theta.at(u, k);
        norms[u] = std::sqrt(s);
    }
    for (std::size_t u = 0; u < n; ++u) {
        out.at(u, u) = 1.0;
        for (std::size_t w = u + 1; w < n; ++w) {
            if (norms[u] <= kNormFloor || norms[w] <= kNormFloor) continue;
            double dot = 0.0;
            for (std::size_t k = 0; k < theta.cols; ++k) dot += theta.at(u, k) * theta.at(w, k);
            out.at(u, w) = out.at(w, u) = dot / (norms[u] * norms[w]);
        }
    }
    return out;
}

double train_loss_value(const ToyGenModel& model, const TokenBatch& batch, double aux_weight) {
    check_batch(model, batch);
    double loss = nll_value_at(model, model.theta, batch);
    if (aux_weight != 0.0) loss += aux_weight * aux_value(model.theta);
    return loss;
}

LossGrad train_loss(const ToyGenModel& model, const TokenBatch& batch, double aux_weight) {
    check_batch(model, batch);
    LossGrad out;
    out.loss = nll_value_at(model, model.theta, batch);
    out.grad = nll_grad_at(model, model.theta, batch);
    if (aux_weight != 0.0) {
        out.loss += aux_weight * aux_value(model.theta);
        aux_grad_into(model.theta, aux_weight, out.grad);
    }
    return out;
}

Matrix train_loss_hvp(const ToyGenModel& model, const TokenBatch& batch, const Matrix& v,
                      double aux_weight) {
    check_batch(model, batch);
    Matrix out = nll_hvp_at(model, model.theta, batch, v);
    if (aux_weight != 0.0) aux_hvp_into(model.theta, v, aux_weight, out);
    return out;
}

DiffObjective bind_objective(const ToyGenModel& model, const TokenBatch& batch, double aux_weight) {
    check_batch(model, batch);
    // Objectives evaluate at arbitrary theta; schema/phi come from the model.
    const ToyGenModel* m = &model;
    const TokenBatch* b = &batch;
    DiffObjective obj;
    obj.value = [m, b, aux_weight](const Matrix& theta) {
        double loss = nll_value_at(*m, theta, *b);
        if (aux_weight != 0.0) loss += aux_weight * aux_value(theta);
        return loss;
    };
    obj.grad = [m, b, aux_weight](const Matrix& theta) {
        Matrix g = nll_grad_at(*m, theta, *b);
        if (aux_weight != 0.0) aux_grad_into(theta, aux_weight, g);
        return g;
    };
    obj.hvp = [m, b, aux_weight](const Matrix& theta, const Matrix& v) {
        Matrix h = nll_hvp_at(*m, theta, *b, v);
        if (aux_weight != 0.0) aux_hvp_into(theta, v, aux_weight, h);
        return h;
    };
    return obj;
}

double pseudo_comp_loss(const ToyGenModel& model, const TokenBatch& train_batch,
                        const TokenBatch& pcomp_batch, double alpha_lr, double aux_weight) {
    const auto train_obj = bind_objective(model, train_batch, aux_weight);
    const auto pcomp_obj = bind_objective(model, pcomp_batch, aux_weight);
    return lookahead_value(model.theta, train_obj, pcomp_obj, alpha_lr);
}

MetaStepReport meta_step(ToyGenModel& model, const TokenBatch& train_batch,
                         const TokenBatch& pcomp_batch, const TrainConfig& config) {
    const auto train_obj = bind_objective(model, train_batch, config.aux_loss_weight);
    const auto pcomp_obj = bind_objective(model, pcomp_batch, config.aux_loss_weight);

    MetaStepReport report;
    report.train_loss = train_obj.value(model.theta);
    report.pcomp_loss = lookahead_value(model.theta, train_obj, pcomp_obj, config.alpha_lr);

    Matrix g = meta_gradient(model.theta, train_obj, pcomp_obj, config.alpha_lr,
                             config.lambda_weight, config.second_order);
    report.grad_norm = g.norm();
    model.theta.axpy(-config.beta_lr, g);
    return report;
}

double sgd_step(ToyGenModel& model, const TokenBatch& batch, double lr, double aux_weight) {
    const LossGrad lg = train_loss(model, batch, aux_weight);
    model.theta.axpy(-lr, lg.grad);
    return lg.loss;
}

}  // namespace compsplit::meta
