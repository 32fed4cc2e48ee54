#pragma once

// Brute-force reference implementations shared by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>
#include <vector>

#include "sethash/sethash.hpp"

namespace oracle {

using namespace sethash;

struct WeakChoice {
    Candidate candidate{};
    double epsilon = 0.0;
    double delta = 0.0;
};

/// Every candidate against every threshold (midpoints of distinct sorted
/// scores, the distinct scores themselves, and the two sentinels), with the
/// error counted from eval_weak. Ties go to the lowest (kernel, id a, id b),
/// then to the lowest threshold.
inline WeakChoice exhaustive_weak(std::span<const Candidate> pool, std::span<const int> labels,
                                  std::span<const double> w, const SideKernels& k) {
    WeakChoice best;
    bool have = false;
    auto key = [&](const Candidate& c) { return std::tuple{c.kernel, k.ids[c.a], k.ids[c.b]}; };
    for (const auto& c : pool) {
        const auto& m = k[c.kernel];
        std::vector<double> s(labels.size());
        double mx = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            auto ii = static_cast<Eigen::Index>(i);
            s[i] = m(c.a, ii) - m(c.b, ii);
            mx = std::max(mx, std::abs(s[i]));
        }
        std::vector<double> u = s;
        std::sort(u.begin(), u.end());
        u.erase(std::unique(u.begin(), u.end()), u.end());
        std::vector<double> thresholds{-(mx + 1.0), mx + 1.0};
        for (std::size_t j = 0; j < u.size(); ++j) {
            thresholds.push_back(u[j]);
            if (j + 1 < u.size()) thresholds.push_back(0.5 * (u[j] + u[j + 1]));
        }
        std::sort(thresholds.begin(), thresholds.end());
        for (double t : thresholds) {
            WeakLearner f{c.kernel, 0, 1, -t};
            double err = 0.0;
            for (std::size_t i = 0; i < s.size(); ++i) {
                auto ii = static_cast<Eigen::Index>(i);
                if (eval_weak(f, m(c.a, ii), m(c.b, ii)) != labels[i]) err += w[i];
            }
            bool better = !have || err < best.delta ||
                          (err == best.delta && key(c) < key(best.candidate));
            if (better) {
                best = {c, -t, err};
                have = true;
            }
        }
    }
    return best;
}

/// Outputs of a hypercut on every sample of a side.
inline std::vector<int> weak_outputs(const Candidate& c, double epsilon, const SideKernels& k) {
    const auto& m = k[c.kernel];
    WeakLearner f{c.kernel, 0, 1, epsilon};
    std::vector<int> out(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.cols(); ++i) out[static_cast<std::size_t>(i)] = eval_weak(f, m(c.a, i), m(c.b, i));
    return out;
}

/// Average precision by enumerating every prefix of the ranking.
inline double prefix_ap(const std::vector<bool>& relevant_at_rank, std::size_t total_relevant) {
    if (total_relevant == 0) return 0.0;
    double sum = 0.0;
    for (std::size_t k = 1; k <= relevant_at_rank.size(); ++k) {
        if (!relevant_at_rank[k - 1]) continue;
        std::size_t hits = 0;
        for (std::size_t j = 0; j < k; ++j) hits += relevant_at_rank[j];
        sum += static_cast<double>(hits) / static_cast<double>(k);
    }
    return sum / static_cast<double>(total_relevant);
}

/// Full scan of an index sorted by (distance, id).
inline std::vector<RankedResult> scan_sorted(const CodeIndex& index, const HashCode& q) {
    std::vector<RankedResult> all;
    for (std::size_t i = 0; i < index.size(); ++i) {
        int d = 0;
        for (int b = 0; b < q.size(); ++b) d += index.codes()[i].get(b) != q.get(b);
        all.push_back({index.ids()[i], d, 0});
    }
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
    });
    for (std::size_t i = 0; i < all.size(); ++i) all[i].rank = static_cast<int>(i + 1);
    return all;
}

/// D_s by enumerating unordered pairs.
inline double ds_pairs(const CodeMatrix& h, const std::vector<Label>& labels, double nu3) {
    double intra = 0.0, inter = 0.0;
    for (std::size_t i = 0; i < h.count(); ++i)
        for (std::size_t j = i + 1; j < h.count(); ++j) {
            int d = 0;
            for (int b = 0; b < h.bits(); ++b) d += h.get(b, i) != h.get(b, j);
            (labels[i] == labels[j] ? intra : inter) += d;
        }
    return intra - nu3 * inter;
}

/// D_c by enumerating every (q, r) pair.
inline double dc_pairs(const CodeMatrix& hq, const CodeMatrix& hr, const std::vector<Label>& lq,
                       const std::vector<Label>& lr, double nu4) {
    double intra = 0.0, inter = 0.0;
    for (std::size_t i = 0; i < hq.count(); ++i)
        for (std::size_t j = 0; j < hr.count(); ++j) {
            int d = 0;
            for (int b = 0; b < hq.bits(); ++b) d += hq.get(b, i) != hr.get(b, j);
            (lq[i] == lr[j] ? intra : inter) += d;
        }
    return intra - nu4 * inter;
}

/// Minimum of D_s over all code matrices whose rows and columns lie inside
/// the balance bands.
inline double best_balanced_ds(int bits, const std::vector<Label>& labels, double nu3, double tol) {
    const std::size_t n = labels.size();
    const std::size_t cells = static_cast<std::size_t>(bits) * n;
    BalanceBand rows(n, tol), cols(static_cast<std::size_t>(bits), tol);
    double best = std::numeric_limits<double>::infinity();
    for (std::uint64_t mask = 0; mask < (1ULL << cells); ++mask) {
        CodeMatrix h(bits, n);
        for (std::size_t c = 0; c < cells; ++c)
            if (mask >> c & 1) h.set(static_cast<int>(c / n), c % n, true);
        bool ok = true;
        for (int b = 0; b < bits && ok; ++b) {
            int ones = 0;
            for (std::size_t i = 0; i < n; ++i) ones += h.get(b, i);
            ok = rows.contains(ones);
        }
        for (std::size_t i = 0; i < n && ok; ++i) {
            int ones = 0;
            for (int b = 0; b < bits; ++b) ones += h.get(b, i);
            ok = cols.contains(ones);
        }
        if (ok) best = std::min(best, ds_pairs(h, labels, nu3));
    }
    return best;
}

} // namespace oracle
