#pragma once

// Boosted dyadic hypercuts.
//
// A weak learner compares a target's kernel similarity to a positive anchor
// set against its similarity to a negative anchor set under one kernel:
//
//     f(x) = sign(K_m(a, x) - K_m(b, x) + eps)
//
// A strong split is sign(sum_t lambda_t f_t(x)) with the usual AdaBoost
// coefficients lambda_t = 0.5 log((1 - delta_t) / delta_t).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <tuple>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "sethash/core.hpp"
#include "sethash/kernels.hpp"
#include "sethash/parallel.hpp"
#include "sethash/random.hpp"

namespace sethash {

inline constexpr double kDeltaClamp = 1e-6;

struct WeakLearner {
    KernelId kernel = KernelId::statistical;
    SetId anchor_a = 0;  // positive anchor
    SetId anchor_b = 0;  // negative anchor
    double epsilon = 0.0;

    friend bool operator==(const WeakLearner&, const WeakLearner&) = default;
};

/// One hash bit. A split whose pseudo-labels were single-class carries no
/// learners and always outputs `constant`.
struct StrongSplit {
    std::vector<WeakLearner> learners;
    std::vector<double> weights;
    std::optional<int> constant;

    bool is_constant() const { return constant.has_value(); }

    friend bool operator==(const StrongSplit&, const StrongSplit&) = default;
};

inline double clamp_delta(double delta) { return std::clamp(delta, kDeltaClamp, 0.5 - kDeltaClamp); }

inline double learner_weight(double delta) {
    double d = clamp_delta(delta);
    return 0.5 * std::log((1.0 - d) / d);
}

inline int eval_weak(const WeakLearner& f, double k_anchor_a, double k_anchor_b) {
    return sign_pm(k_anchor_a - k_anchor_b + f.epsilon);
}

/// Row-vector form: kernel rows of both anchors, indexed by target.
inline int eval_weak(const WeakLearner& f, std::span<const double> row_a, std::span<const double> row_b,
                     std::size_t target) {
    return eval_weak(f, row_a[target], row_b[target]);
}

/// `kernel_of(kernel, anchor)` returns K(anchor, target) for the target being
/// encoded.
using AnchorKernelFn = std::function<double(KernelId, SetId)>;

inline int eval_split(const StrongSplit& split, const AnchorKernelFn& kernel_of) {
    if (split.constant) return *split.constant;
    require(!split.learners.empty() && split.learners.size() == split.weights.size(), ErrorCode::invalid_argument,
            "malformed strong split");
    double vote = 0.0;
    for (std::size_t t = 0; t < split.learners.size(); ++t) {
        const auto& f = split.learners[t];
        vote += split.weights[t] * eval_weak(f, kernel_of(f.kernel, f.anchor_a), kernel_of(f.kernel, f.anchor_b));
    }
    return sign_pm(vote);
}

/// Square kernel matrices over one training side, indexed by position; both
/// kernels share the id ordering.
struct SideKernels {
    std::vector<SetId> ids;
    std::array<Eigen::MatrixXd, kKernelCount> k;

    std::size_t size() const { return ids.size(); }
    const Eigen::MatrixXd& operator[](KernelId id) const { return k[static_cast<std::size_t>(id)]; }

    std::size_t index_of(SetId id) const {
        auto it = std::find(ids.begin(), ids.end(), id);
        require(it != ids.end(), ErrorCode::invalid_argument, "anchor " + std::to_string(id) + " not in side");
        return static_cast<std::size_t>(it - ids.begin());
    }

    std::unordered_map<SetId, std::size_t> index_map() const {
        std::unordered_map<SetId, std::size_t> m;
        for (std::size_t i = 0; i < ids.size(); ++i) m.emplace(ids[i], i);
        return m;
    }
};

inline SideKernels make_side_kernels(const std::vector<KernelMatrix>& mats) {
    require(mats.size() == kKernelCount, ErrorCode::invalid_argument, "need one matrix per kernel");
    SideKernels s;
    s.ids = mats.front().row_ids;
    for (const auto& m : mats) {
        require(m.row_ids == s.ids && m.col_ids == s.ids, ErrorCode::invalid_argument,
                "side kernels must be square over the same sets");
        s.k[static_cast<std::size_t>(m.kernel)] = m.values;
    }
    return s;
}

/// Position-based candidate, (kernel, a, b) with a positive and b negative.
struct Candidate {
    KernelId kernel;
    std::uint32_t a;
    std::uint32_t b;

    friend auto operator<=>(const Candidate&, const Candidate&) = default;
};

/// All (kernel, positive, negative) triples in lexicographic order, or a
/// seeded uniform subsample of `pool_cap` of them (order preserved).
inline std::vector<Candidate> enumerate_pool(std::span<const int> labels, std::size_t kernel_count,
                                             std::size_t pool_cap, std::uint64_t seed) {
    std::vector<std::uint32_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        require(labels[i] == 1 || labels[i] == -1, ErrorCode::invalid_argument, "labels must be +1 or -1");
        (labels[i] > 0 ? pos : neg).push_back(static_cast<std::uint32_t>(i));
    }
    require(!pos.empty() && !neg.empty(), ErrorCode::degenerate_data,
            "weak-learner pool needs at least one positive and one negative sample");
    require(kernel_count >= 1 && kernel_count <= kKernelCount, ErrorCode::invalid_argument, "bad kernel count");
    require(pool_cap >= 1, ErrorCode::invalid_argument, "pool cap must be >= 1");
    const std::size_t total = kernel_count * pos.size() * neg.size();
    auto at = [&](std::size_t flat) {
        std::size_t m = flat / (pos.size() * neg.size());
        std::size_t rest = flat % (pos.size() * neg.size());
        return Candidate{kAllKernels[m], pos[rest / neg.size()], neg[rest % neg.size()]};
    };
    std::vector<Candidate> pool;
    if (total <= pool_cap) {
        pool.reserve(total);
        for (std::size_t f = 0; f < total; ++f) pool.push_back(at(f));
        return pool;
    }
    // Selection sampling: each index kept with probability needed/remaining.
    auto rng = make_rng(seed, stream::pool);
    pool.reserve(pool_cap);
    std::size_t needed = pool_cap;
    for (std::size_t f = 0; f < total && needed > 0; ++f) {
        std::size_t remaining = total - f;
        if (rng() % remaining < needed) {
            pool.push_back(at(f));
            --needed;
        }
    }
    return pool;
}

inline std::vector<Candidate> enumerate_pool(std::span<const int> labels, std::size_t pool_cap, std::uint64_t seed) {
    return enumerate_pool(labels, kKernelCount, pool_cap, seed);
}

/// Scores of one candidate, s_i = K(a, i) - K(b, i), with their ascending order.
struct SortedScores {
    std::vector<double> value;        // sorted ascending
    std::vector<std::uint32_t> index; // sample index of each sorted value
    double sentinel = 1.0;            // max |s| + 1
};

inline SortedScores sorted_scores(const Candidate& c, const SideKernels& kernels) {
    const auto& k = kernels[c.kernel];
    const auto n = static_cast<std::size_t>(k.cols());
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i)
        s[i] = k(c.a, static_cast<Eigen::Index>(i)) - k(c.b, static_cast<Eigen::Index>(i));
    SortedScores out;
    out.index.resize(n);
    std::iota(out.index.begin(), out.index.end(), 0u);
    std::stable_sort(out.index.begin(), out.index.end(), [&](auto x, auto y) { return s[x] < s[y]; });
    out.value.resize(n);
    double mx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out.value[i] = s[out.index[i]];
        mx = std::max(mx, std::abs(s[i]));
    }
    out.sentinel = mx + 1.0;
    return out;
}

struct Selection {
    Candidate candidate{};
    std::size_t pool_index = 0;
    double epsilon = 0.0;
    double delta = 0.5;   // weighted 0/1 error
    double score = 0.5;   // delta plus the optional lambda penalty
};

/// Best threshold for one candidate under the given weights. Thresholds are
/// -sentinel, midpoints between consecutive distinct scores (the upper score
/// when the midpoint is not representable above the lower one), and +sentinel;
/// the prediction is +1 iff s >= threshold, and eps = -threshold. Among
/// equal scores the lowest threshold wins.
inline Selection best_threshold(const SortedScores& sc, std::span<const int> labels, std::span<const double> w,
                                double lambda_penalty = 0.0) {
    const std::size_t n = sc.value.size();
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (labels[i] < 0) err += w[i];
    auto score_of = [&](double e) { return lambda_penalty > 0.0 ? e + lambda_penalty * learner_weight(e) : e; };

    Selection best;
    best.epsilon = sc.sentinel;
    best.delta = err;
    best.score = score_of(err);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && sc.value[j] == sc.value[i]) {
            auto idx = sc.index[j];
            err += labels[idx] > 0 ? w[idx] : -w[idx];
            ++j;
        }
        double threshold = sc.sentinel;
        if (j < n) {
            threshold = 0.5 * (sc.value[i] + sc.value[j]);
            // Neighbours one ulp apart: the midpoint rounds onto the lower score.
            if (!(threshold > sc.value[i])) threshold = sc.value[j];
        }
        double sc_now = score_of(err);
        if (sc_now < best.score) {
            best.score = sc_now;
            best.delta = err;
            best.epsilon = -threshold;
        }
        i = j;
    }
    best.delta = std::max(best.delta, 0.0);
    return best;
}

/// Pool-wide minimizer of the weighted error. Ties go to the lowest
/// (kernel, id of a, id of b); without ids, positions stand in for ids.
inline Selection select_weak(std::span<const Candidate> pool, std::span<const SortedScores> scores,
                             std::span<const int> labels, std::span<const double> w, double lambda_penalty = 0.0,
                             std::span<const SetId> ids = {}) {
    require(!pool.empty() && pool.size() == scores.size(), ErrorCode::invalid_argument, "empty weak-learner pool");
    std::vector<Selection> per(pool.size());
    parallel_for(pool.size(), [&](std::size_t c) {
        per[c] = best_threshold(scores[c], labels, w, lambda_penalty);
        per[c].candidate = pool[c];
        per[c].pool_index = c;
    });
    auto key = [&](const Candidate& c) {
        if (ids.empty()) return std::tuple{c.kernel, SetId{c.a}, SetId{c.b}};
        return std::tuple{c.kernel, ids[c.a], ids[c.b]};
    };
    std::size_t best = 0;
    for (std::size_t c = 1; c < per.size(); ++c)
        if (per[c].score < per[best].score ||
            (per[c].score == per[best].score && key(pool[c]) < key(pool[best])))
            best = c;
    return per[best];
}

inline Selection select_weak(std::span<const Candidate> pool, std::span<const int> labels, std::span<const double> w,
                             const SideKernels& kernels, double lambda_penalty = 0.0) {
    std::vector<SortedScores> scores(pool.size());
    parallel_for(pool.size(), [&](std::size_t c) { scores[c] = sorted_scores(pool[c], kernels); });
    return select_weak(pool, scores, labels, w, lambda_penalty, kernels.ids);
}

struct BoostOptions {
    int rounds = 15;
    std::size_t pool_cap = 20000;
    std::uint64_t seed = 0;
    double lambda_penalty = 0.0;  // L1 weight on lambda added to the selection score
};

/// Per-round record of one boosting run.
struct BoostState {
    std::vector<double> sample_weights;       // final distribution
    std::vector<double> round_errors;         // delta_t, unclamped
    std::vector<double> post_update_errors;   // error of f_t under w_{t+1}
    std::vector<double> training_errors;      // unweighted 0/1 error of sign(F) after round t
    bool stopped_early = false;
};

struct BoostResult {
    StrongSplit split;
    BoostState state;
};

inline WeakLearner to_learner(const Candidate& c, double epsilon, const SideKernels& kernels) {
    return WeakLearner{c.kernel, kernels.ids[c.a], kernels.ids[c.b], epsilon};
}

/// AdaBoost over the dyadic-hypercut pool. Stops early when the best weighted
/// error reaches 0.5 - 1e-6 (keeping at least one learner) or when a learner
/// classifies every sample correctly.
inline BoostResult boost(std::span<const int> labels, const SideKernels& kernels, const BoostOptions& opt) {
    require(opt.rounds >= 1, ErrorCode::invalid_argument, "boosting needs T >= 1");
    require(labels.size() == kernels.size(), ErrorCode::dimension_mismatch, "labels and kernels disagree in size");
    const std::size_t n = labels.size();
    auto pool = enumerate_pool(labels, opt.pool_cap, opt.seed);
    std::vector<SortedScores> scores(pool.size());
    parallel_for(pool.size(), [&](std::size_t c) { scores[c] = sorted_scores(pool[c], kernels); });

    BoostResult res;
    auto& st = res.state;
    st.sample_weights.assign(n, 1.0 / static_cast<double>(n));
    std::vector<double> margin(n, 0.0);
    std::vector<int> out(n);

    for (int t = 0; t < opt.rounds; ++t) {
        auto sel = select_weak(pool, scores, labels, st.sample_weights, opt.lambda_penalty, kernels.ids);
        bool no_signal = sel.delta >= 0.5 - kDeltaClamp;
        if (no_signal && !res.split.learners.empty()) {
            st.stopped_early = true;
            break;
        }
        WeakLearner f = to_learner(sel.candidate, sel.epsilon, kernels);
        double lambda = learner_weight(sel.delta);
        res.split.learners.push_back(f);
        res.split.weights.push_back(lambda);
        st.round_errors.push_back(sel.delta);

        const auto& k = kernels[sel.candidate.kernel];
        double z = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            auto ii = static_cast<Eigen::Index>(i);
            out[i] = eval_weak(f, k(sel.candidate.a, ii), k(sel.candidate.b, ii));
            margin[i] += lambda * out[i];
            st.sample_weights[i] *= std::exp(-lambda * labels[i] * out[i]);
            z += st.sample_weights[i];
        }
        double post = 0.0;
        int wrong = 0;
        for (std::size_t i = 0; i < n; ++i) {
            st.sample_weights[i] /= z;
            if (out[i] != labels[i]) post += st.sample_weights[i];
            if (sign_pm(margin[i]) != labels[i]) ++wrong;
        }
        st.post_update_errors.push_back(post);
        st.training_errors.push_back(static_cast<double>(wrong) / static_cast<double>(n));

        if (no_signal || sel.delta == 0.0) {
            st.stopped_early = t + 1 < opt.rounds;
            break;
        }
    }
    return res;
}

/// Evaluates a split on every sample of a training side.
inline std::vector<int> eval_split_on_side(const StrongSplit& split, const SideKernels& kernels) {
    auto where = kernels.index_map();
    auto position = [&](SetId a) {
        auto it = where.find(a);
        require(it != where.end(), ErrorCode::invalid_argument, "anchor " + std::to_string(a) + " not in side");
        return static_cast<Eigen::Index>(it->second);
    };
    std::vector<int> out(kernels.size());
    for (std::size_t i = 0; i < kernels.size(); ++i)
        out[i] = eval_split(split, [&](KernelId m, SetId a) {
            return kernels[m](position(a), static_cast<Eigen::Index>(i));
        });
    return out;
}

} // namespace sethash
