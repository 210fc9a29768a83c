#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "monotonet/box.hpp"
#include "monotonet/nn.hpp"
#include "monotonet/rng.hpp"
#include "monotonet/tape.hpp"

namespace monotonet {

enum class PenaltyKind { None, Train, Random, Mixup, Group };

inline std::string to_string(PenaltyKind k) {
    switch (k) {
        case PenaltyKind::None: return "none";
        case PenaltyKind::Train: return "train";
        case PenaltyKind::Random: return "random";
        case PenaltyKind::Mixup: return "mixup";
        case PenaltyKind::Group: return "group";
    }
    return "?";
}

inline PenaltyKind penalty_kind_from(const std::string& s) {
    if (s == "none") return PenaltyKind::None;
    if (s == "train") return PenaltyKind::Train;
    if (s == "random") return PenaltyKind::Random;
    if (s == "mixup") return PenaltyKind::Mixup;
    if (s == "group") return PenaltyKind::Group;
    throw std::invalid_argument("unknown penalty kind: " + s);
}

struct PenaltySpec {
    PenaltyKind kind = PenaltyKind::None;
    std::size_t random_samples = 1024;   // draws per evaluation for the random penalty
    std::size_t mixup_max_pairs = 1024;  // pair budget per evaluation for mixup
    double mu = 1.0;                     // inverse temperature for the group penalty
    Box box;                             // input domain, required by random/mixup

    void validate() const {
        if (random_samples < 1) throw std::invalid_argument("PenaltySpec: random_samples must be >= 1");
        if (mixup_max_pairs < 1) throw std::invalid_argument("PenaltySpec: mixup_max_pairs must be >= 1");
        if (mu <= 0.0) throw std::invalid_argument("PenaltySpec: mu must be positive");
        if ((kind == PenaltyKind::Random || kind == PenaltyKind::Mixup) && box.empty())
            throw std::invalid_argument("PenaltySpec: random/mixup penalties need a domain box");
        if (!box.empty()) box.validate();
    }
};

namespace detail {

// 0/1 row mask for the monotone dimensions, broadcast over a batch.
inline Tensor mono_mask(std::size_t rows, std::size_t dim, const std::vector<std::size_t>& M) {
    Tensor mask(Shape{rows, dim});
    for (std::size_t d : M) {
        if (d >= dim) throw std::invalid_argument("penalty: monotone dimension out of range");
        for (std::size_t i = 0; i < rows; ++i) mask(i, d) = 1.0;
    }
    return mask;
}

} // namespace detail

// Mean over the batch of sum_{i in M} max(0, -dh/dx_i)^2, as a live scalar
// node. X must already be bound on the tape.
inline Var omega_batch(Tape& t, const MlpModel& m, const BoundParams& bp, Var X,
                       const std::vector<std::size_t>& M) {
    if (M.empty()) throw std::invalid_argument("penalty: monotone dimension set is empty");
    const std::size_t rows = X.value().rows();
    if (rows == 0) throw std::invalid_argument("penalty: empty batch");
    Var G = input_gradient_matrix(t, m, bp, X);
    Var hinge_sq = square(max_const(neg(G), 0.0));
    Var masked = mul(hinge_sq, constant(t, detail::mono_mask(rows, m.spec.in_dim, M)));
    return scale(sum_all(masked), 1.0 / static_cast<double>(rows));
}

// Point-wise penalty at a single input, as a plain value.
inline double omega_pointwise(const MlpModel& m, const std::vector<double>& x,
                              const std::vector<std::size_t>& M) {
    Tape t;
    BoundParams bp = bind_params(t, m);
    Var X = leaf(t, Tensor::matrix(1, x.size(), x));
    return omega_batch(t, m, bp, X, M).value().scalar_value();
}

// Penalty over the observed batch itself.
inline Var omega_train(Tape& t, const MlpModel& m, const BoundParams& bp, const Tensor& batch,
                       const std::vector<std::size_t>& M) {
    return omega_batch(t, m, bp, leaf(t, batch), M);
}

inline double omega_train_value(const MlpModel& m, const Tensor& batch,
                                const std::vector<std::size_t>& M) {
    Tape t;
    BoundParams bp = bind_params(t, m);
    return omega_train(t, m, bp, batch, M).value().scalar_value();
}

// Fresh uniform draws from the domain box.
inline Tensor uniform_box_sample(const Box& box, std::size_t n, Rng& rng) {
    if (box.empty()) throw std::invalid_argument("uniform_box_sample: missing box");
    Tensor X(Shape{n, box.dim()});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < box.dim(); ++j) X(i, j) = rng.uniform(box.lo[j], box.hi[j]);
    return X;
}

// Penalty over uniform draws across the whole domain box.
inline Var omega_random(Tape& t, const MlpModel& m, const BoundParams& bp, const PenaltySpec& spec,
                        const std::vector<std::size_t>& M, Rng& rng) {
    Tensor X = uniform_box_sample(spec.box, spec.random_samples, rng);
    return omega_batch(t, m, bp, leaf(t, std::move(X)), M);
}

inline double omega_random_value(const MlpModel& m, const PenaltySpec& spec,
                                 const std::vector<std::size_t>& M, Rng& rng) {
    Tape t;
    BoundParams bp = bind_params(t, m);
    return omega_random(t, m, bp, spec, M, rng).value().scalar_value();
}

// ---- mixup -----------------------------------------------------------------

struct MixupDraw {
    std::size_t i;
    std::size_t j;
    double lambda;
};

inline std::vector<MixupDraw> mixup_draws(std::size_t pool_size, std::size_t count, Rng& rng) {
    std::vector<MixupDraw> out;
    out.reserve(count);
    for (std::size_t p = 0; p < count; ++p) {
        // pairs are uniform over the full index square; i == j degenerates
        // to the point itself
        const std::size_t i = static_cast<std::size_t>(rng.uniform_int(pool_size));
        const std::size_t j = static_cast<std::size_t>(rng.uniform_int(pool_size));
        out.push_back({i, j, rng.uniform01()});
    }
    return out;
}

// lambda * pool_i + (1 - lambda) * pool_j per draw, clamped onto the box so
// rounding can never step outside it.
inline Tensor mixup_combine(const Tensor& pool, const std::vector<MixupDraw>& draws, const Box& box) {
    const std::size_t dim = pool.cols();
    Tensor out(Shape{draws.size(), dim});
    for (std::size_t p = 0; p < draws.size(); ++p) {
        const MixupDraw& d = draws[p];
        for (std::size_t c = 0; c < dim; ++c) {
            const double v = d.lambda * pool(d.i, c) + (1.0 - d.lambda) * pool(d.j, c);
            out(p, c) = box.clamp(c, v);
        }
    }
    return out;
}

// Algorithm: augment the batch with as many uniform draws, then mix random
// pairs of the pooled points.
inline Tensor mixup_points(const Tensor& batch, const PenaltySpec& spec, Rng& rng,
                           std::size_t requested = 0) {
    if (batch.rank() != 2 || batch.rows() < 1)
        throw std::invalid_argument("mixup_points: batch must be a nonempty matrix");
    if (spec.box.empty()) throw std::invalid_argument("mixup_points: missing box");
    const std::size_t n = batch.rows();
    const std::size_t dim = batch.cols();
    Tensor noise = uniform_box_sample(spec.box, n, rng);
    Tensor pool(Shape{2 * n, dim});  // data rows first, then the noise rows
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < dim; ++c) {
            pool(i, c) = batch(i, c);
            pool(n + i, c) = noise(i, c);
        }
    const std::size_t count = requested == 0 ? spec.mixup_max_pairs
                                             : std::min(requested, spec.mixup_max_pairs);
    return mixup_combine(pool, mixup_draws(2 * n, count, rng), spec.box);
}

inline Var omega_mixup(Tape& t, const MlpModel& m, const BoundParams& bp, const Tensor& batch,
                       const PenaltySpec& spec, const std::vector<std::size_t>& M, Rng& rng) {
    return omega_train(t, m, bp, mixup_points(batch, spec, rng), M);
}

inline double omega_mixup_value(const MlpModel& m, const Tensor& batch, const PenaltySpec& spec,
                                const std::vector<std::size_t>& M, Rng& rng) {
    Tape t;
    BoundParams bp = bind_params(t, m);
    return omega_mixup(t, m, bp, batch, spec, M, rng).value().scalar_value();
}

// ---- group -----------------------------------------------------------------

// Cross-entropy over the per-example total slice gradients O scaled by 1/mu:
// -(1/m) sum_i log softmax(O(x_i)/mu)_{y_i}. Differentiable w.r.t. the
// parameters, which requires differentiating through the inner reverse pass.
inline Var omega_group(Tape& t, const SlicedClassifier& c, const BoundParams& bp, const Tensor& batch,
                       const std::vector<int>& labels, double mu) {
    if (mu <= 0.0) throw std::invalid_argument("omega_group: mu must be positive");
    const std::size_t m = batch.rows();
    if (labels.size() != m) throw std::invalid_argument("omega_group: labels/batch size mismatch");
    const std::size_t K = c.num_classes;
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= K)
            throw std::invalid_argument("omega_group: label out of range");

    Var X = leaf(t, batch);
    std::vector<Var> O = c.total_gradients(t, bp, X);  // K vectors of length m

    // scaled scores s_k = O_k / mu
    std::vector<Var> s;
    s.reserve(K);
    for (std::size_t k = 0; k < K; ++k) s.push_back(scale(O[k], 1.0 / mu));

    // per-row max as a constant for a stable log-sum-exp
    Tensor rowmax(Shape{m});
    for (std::size_t i = 0; i < m; ++i) {
        double mx = s[0].value()[i];
        for (std::size_t k = 1; k < K; ++k) mx = std::max(mx, s[k].value()[i]);
        rowmax[i] = mx;
    }
    Var cmax = constant(t, rowmax);

    Var denom = exp(sub(s[0], cmax));
    for (std::size_t k = 1; k < K; ++k) denom = add(denom, exp(sub(s[k], cmax)));
    Var lse = add(log(denom), cmax);

    // sum_k s_k * 1{y_i == k}
    Var own = constant(t, Tensor(Shape{m}));
    for (std::size_t k = 0; k < K; ++k) {
        Tensor mask(Shape{m});
        for (std::size_t i = 0; i < m; ++i) mask[i] = labels[i] == static_cast<int>(k) ? 1.0 : 0.0;
        own = add(own, mul(s[k], constant(t, std::move(mask))));
    }

    return scale(sum_all(sub(lse, own)), 1.0 / static_cast<double>(m));
}

inline double omega_group_value(const SlicedClassifier& c, const Tensor& batch,
                                const std::vector<int>& labels, double mu) {
    Tape t;
    BoundParams bp = bind_params(t, c.mlp);
    return omega_group(t, c, bp, batch, labels, mu).value().scalar_value();
}

} // namespace monotonet
