#pragma once

// Set-to-set hash training.
//
// Codes for the two training halves (q: query side, r: database side) are
// initialized from kernel PCA on the statistical kernel, then refined by
// block coordinate descent:
//
//   1. greedy bit-flip descent on each side's within-side objective D_s
//   2. cross-training: q-side splits learn r-side code bits and vice versa
//   3. re-encode both sides with the new splits
//   4. greedy bit-flip descent on alpha*D_s + beta*D_c over both sides
//   5. cross-training again; re-encode; stop once few bits change
//
// D_s sums Hamming distances over same-label pairs within a side and
// subtracts nu3 times the sum over different-label pairs. D_c is the same
// contrast over (q, r) cross pairs with weight nu4.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "sethash/boosting.hpp"
#include "sethash/core.hpp"
#include "sethash/kernel_cache.hpp"
#include "sethash/kernels.hpp"
#include "sethash/parallel.hpp"
#include "sethash/random.hpp"

namespace sethash {

/// R x N bit matrix, one column per set.
class CodeMatrix {
public:
    CodeMatrix() = default;
    CodeMatrix(int bits, std::size_t count) : bits_(bits), count_(count), data_(static_cast<std::size_t>(bits) * count, 0) {
        require(bits >= 1, ErrorCode::invalid_argument, "code matrix needs R >= 1");
    }

    /// Bit (b, i) = sign_bit(values(i, b)).
    static CodeMatrix from_signs(const Eigen::MatrixXd& values) {
        CodeMatrix m(static_cast<int>(values.cols()), static_cast<std::size_t>(values.rows()));
        for (Eigen::Index i = 0; i < values.rows(); ++i)
            for (Eigen::Index b = 0; b < values.cols(); ++b)
                m.set(static_cast<int>(b), static_cast<std::size_t>(i), sign_bit(values(i, b)));
        return m;
    }

    static CodeMatrix from_codes(std::span<const HashCode> codes) {
        require(!codes.empty(), ErrorCode::invalid_argument, "no codes");
        CodeMatrix m(codes.front().size(), codes.size());
        for (std::size_t i = 0; i < codes.size(); ++i) {
            require(codes[i].size() == m.bits(), ErrorCode::dimension_mismatch, "ragged code lengths");
            for (int b = 0; b < m.bits(); ++b) m.set(b, i, codes[i].get(b));
        }
        return m;
    }

    int bits() const { return bits_; }
    std::size_t count() const { return count_; }

    bool get(int b, std::size_t i) const { return data_[static_cast<std::size_t>(b) * count_ + i] != 0; }
    void set(int b, std::size_t i, bool v) { data_[static_cast<std::size_t>(b) * count_ + i] = v ? 1 : 0; }
    void flip(int b, std::size_t i) { data_[static_cast<std::size_t>(b) * count_ + i] ^= 1; }

    HashCode column(std::size_t i) const {
        HashCode c(bits_);
        for (int b = 0; b < bits_; ++b) c.set(b, get(b, i));
        return c;
    }

    std::vector<HashCode> columns() const {
        std::vector<HashCode> out;
        out.reserve(count_);
        for (std::size_t i = 0; i < count_; ++i) out.push_back(column(i));
        return out;
    }

    std::size_t differing_bits(const CodeMatrix& other) const {
        require(bits_ == other.bits_ && count_ == other.count_, ErrorCode::dimension_mismatch, "code matrix shape mismatch");
        std::size_t d = 0;
        for (std::size_t k = 0; k < data_.size(); ++k) d += data_[k] != other.data_[k];
        return d;
    }

    friend bool operator==(const CodeMatrix&, const CodeMatrix&) = default;

private:
    int bits_ = 0;
    std::size_t count_ = 0;
    std::vector<std::uint8_t> data_;
};

struct TrainerConfig {
    int bits = 24;
    int rounds = 15;
    double alpha = 1.0;
    double beta = 1.0;
    double nu1 = 0.0;
    double nu2 = 1.0;
    std::optional<double> nu3;  // unset: intra/inter pair-count ratio
    std::optional<double> nu4;
    int max_outer = 10;
    double conv_tol = 0.001;
    double balance_tol = 0.1;
    int max_sweeps = 20;
    std::size_t pool_cap = 20000;
    std::uint64_t seed = 0;
    KernelParams kernel;

    void validate() const {
        require(bits >= 1, ErrorCode::invalid_argument, "bits must be >= 1");
        require(rounds >= 1, ErrorCode::invalid_argument, "rounds must be >= 1");
        require(max_outer >= 1, ErrorCode::invalid_argument, "max_outer must be >= 1");
        require(conv_tol > 0.0 && conv_tol < 1.0, ErrorCode::invalid_argument, "conv_tol must lie in (0,1)");
        require(balance_tol >= 0.0 && balance_tol <= 0.5, ErrorCode::invalid_argument, "balance_tol must lie in [0,0.5]");
        require(max_sweeps >= 1, ErrorCode::invalid_argument, "max_sweeps must be >= 1");
        require(pool_cap >= 1, ErrorCode::invalid_argument, "pool_cap must be >= 1");
        require(alpha >= 0.0 && beta >= 0.0 && nu1 >= 0.0 && nu2 >= 0.0, ErrorCode::invalid_argument,
                "objective coefficients must be >= 0");
        require(!nu3 || *nu3 >= 0.0, ErrorCode::invalid_argument, "nu3 must be >= 0");
        require(!nu4 || *nu4 >= 0.0, ErrorCode::invalid_argument, "nu4 must be >= 0");
        kernel.validate();
    }

    friend bool operator==(const TrainerConfig&, const TrainerConfig&) = default;
};

// --- objectives ---------------------------------------------------------------

namespace detail {

/// Maps labels of one or two sides onto dense indices 0..L-1.
struct DenseLabels {
    std::vector<std::vector<int>> per_side;
    int count = 0;
};

inline DenseLabels densify(std::initializer_list<std::span<const Label>> sides) {
    std::set<Label> all;
    for (auto s : sides) all.insert(s.begin(), s.end());
    std::map<Label, int> idx;
    for (auto l : all) idx.emplace(l, static_cast<int>(idx.size()));
    DenseLabels d;
    d.count = static_cast<int>(idx.size());
    for (auto s : sides) {
        std::vector<int> v;
        v.reserve(s.size());
        for (auto l : s) v.push_back(idx[l]);
        d.per_side.push_back(std::move(v));
    }
    return d;
}

inline std::vector<double> label_counts(const std::vector<int>& lab, int count) {
    std::vector<double> c(static_cast<std::size_t>(count), 0.0);
    for (auto l : lab) c[static_cast<std::size_t>(l)] += 1.0;
    return c;
}

} // namespace detail

/// Same-label over different-label unordered pair counts within one side.
inline double default_nu3(std::span<const Label> labels) {
    auto d = detail::densify({labels});
    auto c = detail::label_counts(d.per_side[0], d.count);
    double n = static_cast<double>(labels.size());
    double intra = 0.0;
    for (double x : c) intra += x * (x - 1.0) / 2.0;
    double inter = n * (n - 1.0) / 2.0 - intra;
    return inter > 0.0 ? intra / inter : 1.0;
}

/// Same-label over different-label (q, r) pair counts.
inline double default_nu4(std::span<const Label> labels_q, std::span<const Label> labels_r) {
    auto d = detail::densify({labels_q, labels_r});
    auto cq = detail::label_counts(d.per_side[0], d.count);
    auto cr = detail::label_counts(d.per_side[1], d.count);
    double intra = 0.0;
    for (int l = 0; l < d.count; ++l) intra += cq[static_cast<std::size_t>(l)] * cr[static_cast<std::size_t>(l)];
    double inter = static_cast<double>(labels_q.size()) * static_cast<double>(labels_r.size()) - intra;
    return inter > 0.0 ? intra / inter : 1.0;
}

inline double objective_ds(const CodeMatrix& h, std::span<const Label> labels, double nu3) {
    require(labels.size() == h.count(), ErrorCode::dimension_mismatch, "objective_ds: one label per column required");
    auto d = detail::densify({labels});
    const auto& lab = d.per_side[0];
    auto cnt = detail::label_counts(lab, d.count);
    const double n = static_cast<double>(h.count());
    double intra = 0.0, total = 0.0;
    std::vector<double> ones(static_cast<std::size_t>(d.count));
    for (int b = 0; b < h.bits(); ++b) {
        std::fill(ones.begin(), ones.end(), 0.0);
        double all = 0.0;
        for (std::size_t i = 0; i < h.count(); ++i)
            if (h.get(b, i)) {
                ones[static_cast<std::size_t>(lab[i])] += 1.0;
                all += 1.0;
            }
        total += all * (n - all);
        for (int l = 0; l < d.count; ++l)
            intra += ones[static_cast<std::size_t>(l)] * (cnt[static_cast<std::size_t>(l)] - ones[static_cast<std::size_t>(l)]);
    }
    return intra - nu3 * (total - intra);
}

inline double objective_dc(const CodeMatrix& hq, const CodeMatrix& hr, std::span<const Label> labels_q,
                           std::span<const Label> labels_r, double nu4) {
    require(labels_q.size() == hq.count() && labels_r.size() == hr.count(), ErrorCode::dimension_mismatch,
            "objective_dc: one label per column required");
    require(hq.bits() == hr.bits(), ErrorCode::dimension_mismatch, "objective_dc: code length mismatch");
    auto d = detail::densify({labels_q, labels_r});
    const auto& lq = d.per_side[0];
    const auto& lr = d.per_side[1];
    auto cq = detail::label_counts(lq, d.count);
    auto cr = detail::label_counts(lr, d.count);
    const double nq = static_cast<double>(hq.count()), nr = static_cast<double>(hr.count());
    double intra = 0.0, total = 0.0;
    std::vector<double> oq(static_cast<std::size_t>(d.count)), orr(static_cast<std::size_t>(d.count));
    for (int b = 0; b < hq.bits(); ++b) {
        std::fill(oq.begin(), oq.end(), 0.0);
        std::fill(orr.begin(), orr.end(), 0.0);
        double aq = 0.0, ar = 0.0;
        for (std::size_t i = 0; i < hq.count(); ++i)
            if (hq.get(b, i)) { oq[static_cast<std::size_t>(lq[i])] += 1.0; aq += 1.0; }
        for (std::size_t i = 0; i < hr.count(); ++i)
            if (hr.get(b, i)) { orr[static_cast<std::size_t>(lr[i])] += 1.0; ar += 1.0; }
        total += aq * (nr - ar) + (nq - aq) * ar;
        for (std::size_t l = 0; l < oq.size(); ++l)
            intra += oq[l] * (cr[l] - orr[l]) + (cq[l] - oq[l]) * orr[l];
    }
    return intra - nu4 * (total - intra);
}

// --- bit-flip descent ---------------------------------------------------------

/// Called after every accepted flip with the current codes (r is null for a
/// single-side run) and the objective change the flip was accepted for.
using FlipObserver = std::function<void(const CodeMatrix& q, const CodeMatrix* r, double delta)>;

struct DescentOptions {
    double balance_tol = 0.1;
    int max_sweeps = 20;
    std::uint64_t seed = 0;
    FlipObserver observer;
};

struct DescentStats {
    int sweeps = 0;
    int flips = 0;
};

/// Inclusive band [floor((0.5-tol)n), ceil((0.5+tol)n)] for the number of
/// ones in a bit row (over all columns) or a column (over all bits).
struct BalanceBand {
    int lo = 0;
    int hi = 0;

    BalanceBand(std::size_t n, double tol)
        : lo(static_cast<int>(std::floor((0.5 - tol) * static_cast<double>(n) + 1e-9))),
          hi(static_cast<int>(std::ceil((0.5 + tol) * static_cast<double>(n) - 1e-9))) {}

    bool contains(int ones) const { return ones >= lo && ones <= hi; }
    int distance(int ones) const { return ones < lo ? lo - ones : (ones > hi ? ones - hi : 0); }

    /// A move is admissible if it lands inside the band, or if the count was
    /// already outside and the move brings it strictly closer.
    bool admits(int before, int after) const {
        return contains(after) || distance(after) < distance(before);
    }
};

namespace detail {

struct DescentSide {
    CodeMatrix* codes;
    std::vector<int> label;  // dense
    double nu3;
};

/// Greedy coordinate descent on
///     within * sum_s D_s(side s) + cross * D_c(q, r)
/// visiting (side, bit, column) coordinates in a seeded random order each
/// sweep and flipping whenever the objective strictly decreases and both
/// balance bands admit the move.
inline DescentStats flip_descent(std::vector<DescentSide>& sides, int label_count, double within, double cross,
                                 double nu4, const DescentOptions& opt) {
    const int bits = sides.front().codes->bits();
    const std::size_t ns = sides.size();
    const auto nl = static_cast<std::size_t>(label_count);
    std::vector<std::vector<int>> cnt(ns, std::vector<int>(nl, 0));
    std::vector<std::vector<int>> ones(ns, std::vector<int>(static_cast<std::size_t>(bits) * nl, 0));
    std::vector<std::vector<int>> ones_total(ns, std::vector<int>(static_cast<std::size_t>(bits), 0));
    std::vector<std::vector<int>> col_ones(ns);
    std::vector<int> row_ones(static_cast<std::size_t>(bits), 0);
    std::size_t total_cols = 0;
    for (std::size_t s = 0; s < ns; ++s) {
        const auto& h = *sides[s].codes;
        require(h.bits() == bits, ErrorCode::dimension_mismatch, "descent: code length mismatch");
        require(sides[s].label.size() == h.count(), ErrorCode::dimension_mismatch, "descent: one label per column");
        total_cols += h.count();
        col_ones[s].assign(h.count(), 0);
        for (std::size_t i = 0; i < h.count(); ++i) {
            auto l = static_cast<std::size_t>(sides[s].label[i]);
            ++cnt[s][l];
            for (int b = 0; b < bits; ++b)
                if (h.get(b, i)) {
                    ++ones[s][static_cast<std::size_t>(b) * nl + l];
                    ++ones_total[s][static_cast<std::size_t>(b)];
                    ++col_ones[s][i];
                    ++row_ones[static_cast<std::size_t>(b)];
                }
        }
    }
    const BalanceBand row_band(total_cols, opt.balance_tol);
    const BalanceBand col_band(static_cast<std::size_t>(bits), opt.balance_tol);

    struct Coord {
        std::uint32_t side;
        std::uint32_t bit;
        std::uint32_t col;
    };
    std::vector<Coord> coords;
    coords.reserve(total_cols * static_cast<std::size_t>(bits));
    for (std::size_t s = 0; s < ns; ++s)
        for (int b = 0; b < bits; ++b)
            for (std::size_t i = 0; i < sides[s].codes->count(); ++i)
                coords.push_back({static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(i)});

    // Flipping a bit adds one to the distance of every pair that currently
    // agrees on it and removes one from every pair that disagrees.
    auto contrast = [&](std::size_t s, int b, std::size_t l, bool v, bool exclude_self, double nu) {
        const auto n = static_cast<int>(sides[s].codes->count());
        int ones_l = ones[s][static_cast<std::size_t>(b) * nl + l];
        int eq_same = (v ? ones_l : cnt[s][l] - ones_l) - (exclude_self ? 1 : 0);
        int same_total = cnt[s][l] - (exclude_self ? 1 : 0);
        int eq_all = (v ? ones_total[s][static_cast<std::size_t>(b)] : n - ones_total[s][static_cast<std::size_t>(b)]) -
                     (exclude_self ? 1 : 0);
        int eq_diff = eq_all - eq_same;
        int diff_total = n - cnt[s][l];
        return static_cast<double>(2 * eq_same - same_total) - nu * static_cast<double>(2 * eq_diff - diff_total);
    };

    auto rng = make_rng(opt.seed, stream::sweep);
    DescentStats stats;
    for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
        ++stats.sweeps;
        shuffle_in_place(coords, rng);
        int flips = 0;
        for (const auto& c : coords) {
            auto& h = *sides[c.side].codes;
            const int b = static_cast<int>(c.bit);
            const bool v = h.get(b, c.col);
            const auto l = static_cast<std::size_t>(sides[c.side].label[c.col]);
            double delta = within * contrast(c.side, b, l, v, true, sides[c.side].nu3);
            if (ns == 2 && cross != 0.0) delta += cross * contrast(1 - c.side, b, l, v, false, nu4);
            if (!(delta < -1e-12)) continue;
            const int step = v ? -1 : 1;
            int row = row_ones[static_cast<std::size_t>(b)];
            int col = col_ones[c.side][c.col];
            if (!row_band.admits(row, row + step) || !col_band.admits(col, col + step)) continue;

            h.flip(b, c.col);
            ones[c.side][static_cast<std::size_t>(b) * nl + l] += step;
            ones_total[c.side][static_cast<std::size_t>(b)] += step;
            row_ones[static_cast<std::size_t>(b)] += step;
            col_ones[c.side][c.col] += step;
            ++flips;
            if (opt.observer) opt.observer(*sides[0].codes, ns == 2 ? sides[1].codes : nullptr, delta);
        }
        stats.flips += flips;
        if (flips == 0) break;
    }
    return stats;
}

} // namespace detail

/// Greedy descent on D_s for one side under bit-wise and sample-wise balance.
inline CodeMatrix optimize_codes_ds(const CodeMatrix& init, std::span<const Label> labels, double nu3,
                                    const DescentOptions& opt, DescentStats* stats = nullptr) {
    require(labels.size() == init.count(), ErrorCode::dimension_mismatch, "optimize_codes_ds: one label per column");
    CodeMatrix h = init;
    auto d = detail::densify({labels});
    std::vector<detail::DescentSide> sides{{&h, d.per_side[0], nu3}};
    auto st = detail::flip_descent(sides, d.count, 1.0, 0.0, 0.0, opt);
    if (stats) *stats = st;
    return h;
}

struct JointWeights {
    double alpha = 1.0;
    double beta = 1.0;
    double nu3_q = 1.0;
    double nu3_r = 1.0;
    double nu4 = 1.0;
};

/// alpha * (D_s(q) + D_s(r)) + beta * D_c(q, r)
inline double joint_objective(const CodeMatrix& hq, const CodeMatrix& hr, std::span<const Label> labels_q,
                              std::span<const Label> labels_r, const JointWeights& w) {
    return w.alpha * (objective_ds(hq, labels_q, w.nu3_q) + objective_ds(hr, labels_r, w.nu3_r)) +
           w.beta * objective_dc(hq, hr, labels_q, labels_r, w.nu4);
}

/// Greedy descent on the joint objective over H = [H_q, H_r]; bit-wise
/// balance is measured over all 2N columns.
inline std::pair<CodeMatrix, CodeMatrix> refine_joint(const CodeMatrix& hq_init, const CodeMatrix& hr_init,
                                                      std::span<const Label> labels_q, std::span<const Label> labels_r,
                                                      const JointWeights& w, const DescentOptions& opt,
                                                      DescentStats* stats = nullptr) {
    require(labels_q.size() == hq_init.count() && labels_r.size() == hr_init.count(), ErrorCode::dimension_mismatch,
            "refine_joint: one label per column");
    CodeMatrix hq = hq_init, hr = hr_init;
    auto d = detail::densify({labels_q, labels_r});
    std::vector<detail::DescentSide> sides{{&hq, d.per_side[0], w.nu3_q}, {&hr, d.per_side[1], w.nu3_r}};
    auto st = detail::flip_descent(sides, d.count, w.alpha, w.beta, w.nu4, opt);
    if (stats) *stats = st;
    return {std::move(hq), std::move(hr)};
}

// --- cross-training -----------------------------------------------------------

/// For each set on side A, the index of its partner on side B: the k-th set
/// (by id) of label L on side A pairs with the (k mod m)-th of the m sets of
/// label L on side B. -1 when side B has no set of that label.
inline std::vector<long> pair_by_label(std::span<const Label> labels_a, std::span<const SetId> ids_a,
                                       std::span<const Label> labels_b, std::span<const SetId> ids_b) {
    std::map<Label, std::vector<std::size_t>> group_b;
    for (std::size_t j = 0; j < labels_b.size(); ++j) group_b[labels_b[j]].push_back(j);
    for (auto& [l, g] : group_b) std::sort(g.begin(), g.end(), [&](auto x, auto y) { return ids_b[x] < ids_b[y]; });
    std::map<Label, std::vector<std::size_t>> group_a;
    for (std::size_t i = 0; i < labels_a.size(); ++i) group_a[labels_a[i]].push_back(i);
    std::vector<long> pair(labels_a.size(), -1);
    for (auto& [l, g] : group_a) {
        std::sort(g.begin(), g.end(), [&](auto x, auto y) { return ids_a[x] < ids_a[y]; });
        auto it = group_b.find(l);
        if (it == group_b.end()) continue;
        for (std::size_t k = 0; k < g.size(); ++k)
            pair[g[k]] = static_cast<long>(it->second[k % it->second.size()]);
    }
    return pair;
}

struct CrossTrainResult {
    std::vector<StrongSplit> splits_q;
    std::vector<StrongSplit> splits_r;
    std::vector<BoostState> states_q;  // empty state for constant splits
    std::vector<BoostState> states_r;
};

struct SideData {
    const SideKernels* kernels;
    std::vector<Label> labels;
};

/// Trains R splits on each side. Side q learns bit b of its partner's code on
/// side r, and symmetrically; a set with no partner keeps its own bit.
inline CrossTrainResult cross_train(const CodeMatrix& hq, const CodeMatrix& hr, const SideData& q, const SideData& r,
                                    const TrainerConfig& cfg, std::uint64_t round_tag = 0) {
    require(hq.bits() == hr.bits(), ErrorCode::dimension_mismatch, "cross_train: code length mismatch");
    require(hq.count() == q.kernels->size() && hr.count() == r.kernels->size(), ErrorCode::dimension_mismatch,
            "cross_train: codes and kernels disagree");
    const int bits = hq.bits();
    auto pair_q = pair_by_label(q.labels, q.kernels->ids, r.labels, r.kernels->ids);
    auto pair_r = pair_by_label(r.labels, r.kernels->ids, q.labels, q.kernels->ids);

    CrossTrainResult res;
    res.splits_q.resize(static_cast<std::size_t>(bits));
    res.splits_r.resize(static_cast<std::size_t>(bits));
    res.states_q.resize(static_cast<std::size_t>(bits));
    res.states_r.resize(static_cast<std::size_t>(bits));

    auto train_one = [&](int side, int b) {
        const CodeMatrix& own = side == 0 ? hq : hr;
        const CodeMatrix& other = side == 0 ? hr : hq;
        const auto& pairing = side == 0 ? pair_q : pair_r;
        const SideData& data = side == 0 ? q : r;
        std::vector<int> y(own.count());
        for (std::size_t i = 0; i < own.count(); ++i) {
            bool bit = pairing[i] >= 0 ? other.get(b, static_cast<std::size_t>(pairing[i])) : own.get(b, i);
            y[i] = bit ? 1 : -1;
        }
        auto& split = (side == 0 ? res.splits_q : res.splits_r)[static_cast<std::size_t>(b)];
        auto& state = (side == 0 ? res.states_q : res.states_r)[static_cast<std::size_t>(b)];
        if (std::all_of(y.begin(), y.end(), [&](int v) { return v == y.front(); })) {
            split.constant = y.front();
            return;
        }
        BoostOptions opt;
        opt.rounds = cfg.rounds;
        opt.pool_cap = cfg.pool_cap;
        opt.seed = stream_seed(cfg.seed, stream::pool, (round_tag << 20) + static_cast<std::uint64_t>(side * bits + b));
        opt.lambda_penalty = side == 0 ? cfg.nu1 : cfg.nu1 * cfg.nu2;
        auto out = boost(y, *data.kernels, opt);
        split = std::move(out.split);
        state = std::move(out.state);
    };
    // Nested parallelism inside boost would oversubscribe; bits go in parallel.
    parallel_for(static_cast<std::size_t>(2 * bits), [&](std::size_t task) {
        train_one(static_cast<int>(task) / bits, static_cast<int>(task) % bits);
    });
    return res;
}

inline CodeMatrix encode_side(std::span<const StrongSplit> splits, const SideKernels& kernels) {
    CodeMatrix h(static_cast<int>(splits.size()), kernels.size());
    for (std::size_t b = 0; b < splits.size(); ++b) {
        auto out = eval_split_on_side(splits[b], kernels);
        for (std::size_t i = 0; i < out.size(); ++i) h.set(static_cast<int>(b), i, out[i] > 0);
    }
    return h;
}

// --- model --------------------------------------------------------------------

enum class Side : std::uint8_t { query = 0, database = 1 };

struct HashModel {
    Eigen::Index dim = 0;
    TrainerConfig config;            // kernel params resolved
    std::vector<PointSet> anchors;   // every set referenced by a learner, by id
    std::vector<StrongSplit> splits_q;
    std::vector<StrongSplit> splits_r;

    int bits() const { return static_cast<int>(splits_q.size()); }
    const KernelParams& kernel_params() const { return config.kernel; }
    const std::vector<StrongSplit>& splits(Side s) const { return s == Side::query ? splits_q : splits_r; }

    friend bool operator==(const HashModel& a, const HashModel& b) {
        if (a.dim != b.dim || !(a.config == b.config) || a.splits_q != b.splits_q || a.splits_r != b.splits_r ||
            a.anchors.size() != b.anchors.size())
            return false;
        for (std::size_t i = 0; i < a.anchors.size(); ++i)
            if (a.anchors[i].id != b.anchors[i].id || a.anchors[i].label != b.anchors[i].label ||
                a.anchors[i].points != b.anchors[i].points)
                return false;
        return true;
    }

    void validate() const {
        require(splits_q.size() == splits_r.size() && !splits_q.empty(), ErrorCode::format_error,
                "model must have R >= 1 splits per side");
        std::set<SetId> ids;
        for (const auto& a : anchors) {
            require(a.dim() == dim, ErrorCode::format_error, "anchor dimension disagrees with model");
            ids.insert(a.id);
        }
        for (const auto* side : {&splits_q, &splits_r})
            for (const auto& s : *side)
                for (const auto& f : s.learners)
                    require(ids.count(f.anchor_a) && ids.count(f.anchor_b) && f.anchor_a != f.anchor_b,
                            ErrorCode::format_error, "learner anchor not resolvable in model");
    }
};

/// Encodes new point sets through a trained model. Anchors are prepared once.
class Encoder {
public:
    explicit Encoder(const HashModel& model) : model_(model) {
        model_.validate();
        prepared_.resize(model_.anchors.size());
        parallel_for(model_.anchors.size(), [&](std::size_t i) {
            prepared_[i] = prepare(model_.anchors[i], model_.kernel_params());
        });
        for (std::size_t i = 0; i < prepared_.size(); ++i) where_.emplace(prepared_[i].id, i);
    }

    HashCode encode(const PointSet& target, Side side) const {
        require(target.dim() == model_.dim, ErrorCode::dimension_mismatch,
                "set " + std::to_string(target.id) + " has dimension " + std::to_string(target.dim()) +
                    ", model expects " + std::to_string(model_.dim));
        PreparedSet t = prepare(target, model_.kernel_params());
        std::unordered_map<std::uint64_t, double> memo;
        auto kernel_of = [&](KernelId m, SetId a) {
            std::uint64_t key = (a << 1) | static_cast<std::uint64_t>(m);
            auto it = memo.find(key);
            if (it != memo.end()) return it->second;
            auto w = where_.find(a);
            require(w != where_.end(), ErrorCode::format_error, "anchor " + std::to_string(a) + " missing from model");
            double v = kernel_value(m, prepared_[w->second], t, model_.kernel_params());
            memo.emplace(key, v);
            return v;
        };
        const auto& splits = model_.splits(side);
        HashCode code(static_cast<int>(splits.size()));
        for (std::size_t b = 0; b < splits.size(); ++b) code.set(static_cast<int>(b), eval_split(splits[b], kernel_of) > 0);
        return code;
    }

    std::vector<HashCode> encode_all(const SetDataset& data, Side side) const {
        std::vector<HashCode> out(data.size());
        parallel_for(data.size(), [&](std::size_t i) { out[i] = encode(data[i], side); });
        return out;
    }

private:
    HashModel model_;
    std::vector<PreparedSet> prepared_;
    std::unordered_map<SetId, std::size_t> where_;
};

inline HashCode encode(const HashModel& model, Side side, const PointSet& target) {
    return Encoder(model).encode(target, side);
}

// --- training loop ------------------------------------------------------------

struct OuterRecord {
    double changed_fraction = 0.0;
    double ds_q_after_descent = 0.0;
    double ds_r_after_descent = 0.0;
    double joint_before_refine = 0.0;
    double joint_after_refine = 0.0;
};

struct TrainResult {
    HashModel model;
    CodeMatrix codes_q;  // final training codes, reproduced by encoding through the model
    CodeMatrix codes_r;
    int outer_iterations = 0;
    bool converged = false;
    std::vector<OuterRecord> history;
    std::vector<BoostState> boost_q;  // from the final cross-training pass
    std::vector<BoostState> boost_r;
};

inline SideKernels side_kernels(const SetDataset& side, const std::vector<PreparedSet>& prepared,
                                const KernelParams& params, KernelCache* cache) {
    std::vector<KernelMatrix> mats;
    for (auto m : kAllKernels)
        mats.push_back(cache ? cache->get_or_compute(side, side, m, params) : kernel_matrix(prepared, prepared, m, params));
    return make_side_kernels(mats);
}

inline TrainResult train(const TrainSplit& split, TrainerConfig cfg, KernelCache* cache = nullptr) {
    cfg.validate();
    const auto& q = split.q;
    const auto& r = split.r;
    require(!q.empty() && !r.empty(), ErrorCode::degenerate_data, "both training halves must be nonempty");
    require(q.dim() == r.dim(), ErrorCode::dimension_mismatch, "q and r halves differ in dimension");
    require(q.fully_labeled() && r.fully_labeled(), ErrorCode::invalid_argument, "training requires labeled sets");
    {
        const auto qv = q.ids();
        std::set<SetId> qids(qv.begin(), qv.end());
        for (auto id : r.ids())
            require(!qids.count(id), ErrorCode::invalid_argument, "q and r halves share set id " + std::to_string(id));
    }

    std::vector<PointSet> all_sets = q.sets();
    all_sets.insert(all_sets.end(), r.sets().begin(), r.sets().end());
    SetDataset all(std::move(all_sets), q.dim());
    cfg.kernel = resolve_params(all, cfg.kernel, cfg.seed);

    auto prep_q = prepare_all(q, cfg.kernel);
    auto prep_r = prepare_all(r, cfg.kernel);
    SideKernels kq = side_kernels(q, prep_q, cfg.kernel, cache);
    SideKernels kr = side_kernels(r, prep_r, cfg.kernel, cache);
    SideData sq{&kq, q.labels()};
    SideData sr{&kr, r.labels()};

    JointWeights w;
    w.alpha = cfg.alpha;
    w.beta = cfg.beta;
    w.nu3_q = cfg.nu3.value_or(default_nu3(sq.labels));
    w.nu3_r = cfg.nu3.value_or(default_nu3(sr.labels));
    w.nu4 = cfg.nu4.value_or(default_nu4(sq.labels, sr.labels));

    CodeMatrix hq = CodeMatrix::from_signs(kernel_pca_init(kq[KernelId::statistical], cfg.bits));
    CodeMatrix hr = CodeMatrix::from_signs(kernel_pca_init(kr[KernelId::statistical], cfg.bits));

    TrainResult res;
    CrossTrainResult models;
    for (int outer = 0; outer < cfg.max_outer; ++outer) {
        const CodeMatrix prev_q = hq, prev_r = hr;
        OuterRecord rec;
        auto tag = static_cast<std::uint64_t>(outer);

        DescentOptions dq{cfg.balance_tol, cfg.max_sweeps, stream_seed(cfg.seed, stream::sweep, 4 * tag), {}};
        DescentOptions dr{cfg.balance_tol, cfg.max_sweeps, stream_seed(cfg.seed, stream::sweep, 4 * tag + 1), {}};
        hq = optimize_codes_ds(hq, sq.labels, w.nu3_q, dq);
        hr = optimize_codes_ds(hr, sr.labels, w.nu3_r, dr);
        rec.ds_q_after_descent = objective_ds(hq, sq.labels, w.nu3_q);
        rec.ds_r_after_descent = objective_ds(hr, sr.labels, w.nu3_r);

        models = cross_train(hq, hr, sq, sr, cfg, 2 * tag);
        hq = encode_side(models.splits_q, kq);
        hr = encode_side(models.splits_r, kr);

        rec.joint_before_refine = joint_objective(hq, hr, sq.labels, sr.labels, w);
        DescentOptions dj{cfg.balance_tol, cfg.max_sweeps, stream_seed(cfg.seed, stream::sweep, 4 * tag + 2), {}};
        std::tie(hq, hr) = refine_joint(hq, hr, sq.labels, sr.labels, w, dj);
        rec.joint_after_refine = joint_objective(hq, hr, sq.labels, sr.labels, w);

        models = cross_train(hq, hr, sq, sr, cfg, 2 * tag + 1);
        hq = encode_side(models.splits_q, kq);
        hr = encode_side(models.splits_r, kr);

        std::size_t changed = hq.differing_bits(prev_q) + hr.differing_bits(prev_r);
        rec.changed_fraction = static_cast<double>(changed) /
                               (static_cast<double>(cfg.bits) * static_cast<double>(hq.count() + hr.count()));
        res.history.push_back(rec);
        res.outer_iterations = outer + 1;
        if (rec.changed_fraction < cfg.conv_tol) {
            res.converged = true;
            break;
        }
    }

    HashModel& model = res.model;
    model.dim = q.dim();
    model.config = cfg;
    model.splits_q = models.splits_q;
    model.splits_r = models.splits_r;
    std::set<SetId> used;
    for (const auto* side : {&model.splits_q, &model.splits_r})
        for (const auto& s : *side)
            for (const auto& f : s.learners) {
                used.insert(f.anchor_a);
                used.insert(f.anchor_b);
            }
    for (const auto& s : all.sets())
        if (used.count(s.id)) model.anchors.push_back(s);
    std::sort(model.anchors.begin(), model.anchors.end(), [](const PointSet& a, const PointSet& b) { return a.id < b.id; });

    res.codes_q = std::move(hq);
    res.codes_r = std::move(hr);
    res.boost_q = std::move(models.states_q);
    res.boost_r = std::move(models.states_r);
    return res;
}

} // namespace sethash
