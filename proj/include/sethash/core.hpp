#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sethash/error.hpp"
#include "sethash/random.hpp"

namespace sethash {

using SetId = std::uint64_t;
using Label = int;

/// A set of d-dimensional feature vectors, one point per row.
struct PointSet {
    SetId id = 0;
    Eigen::MatrixXd points;
    std::optional<Label> label;

    PointSet() = default;
    PointSet(SetId id_, Eigen::MatrixXd points_, std::optional<Label> label_ = std::nullopt)
        : id(id_), points(std::move(points_)), label(label_) {
        validate();
    }

    Eigen::Index size() const { return points.rows(); }
    Eigen::Index dim() const { return points.cols(); }

    void validate() const {
        require(points.rows() >= 1, ErrorCode::degenerate_data,
                "point set " + std::to_string(id) + " is empty");
        require(points.cols() >= 1, ErrorCode::degenerate_data,
                "point set " + std::to_string(id) + " has zero dimension");
        require(points.allFinite(), ErrorCode::invalid_argument,
                "point set " + std::to_string(id) + " has non-finite features");
    }
};

/// A collection of point sets sharing one feature dimension.
class SetDataset {
public:
    SetDataset() = default;

    explicit SetDataset(std::vector<PointSet> sets, Eigen::Index dim = 0)
        : sets_(std::move(sets)), dim_(dim) {
        if (dim_ == 0 && !sets_.empty()) dim_ = sets_.front().dim();
        std::set<SetId> seen;
        for (const auto& s : sets_) {
            s.validate();
            require(s.dim() == dim_, ErrorCode::dimension_mismatch,
                    "set " + std::to_string(s.id) + " has dimension " + std::to_string(s.dim()) +
                        ", dataset dimension is " + std::to_string(dim_));
            require(seen.insert(s.id).second, ErrorCode::invalid_argument,
                    "duplicate set id " + std::to_string(s.id));
            if (s.label) {
                require(*s.label >= 1, ErrorCode::invalid_argument,
                        "labels must be positive (set " + std::to_string(s.id) + ")");
                label_count_ = std::max(label_count_, *s.label);
            }
        }
    }

    const std::vector<PointSet>& sets() const { return sets_; }
    const PointSet& operator[](std::size_t i) const { return sets_[i]; }
    std::size_t size() const { return sets_.size(); }
    bool empty() const { return sets_.empty(); }
    Eigen::Index dim() const { return dim_; }
    int label_count() const { return label_count_; }

    bool fully_labeled() const {
        return std::all_of(sets_.begin(), sets_.end(), [](const PointSet& s) { return s.label.has_value(); });
    }

    std::vector<Label> labels() const {
        std::vector<Label> out;
        out.reserve(sets_.size());
        for (const auto& s : sets_) {
            require(s.label.has_value(), ErrorCode::invalid_argument,
                    "set " + std::to_string(s.id) + " is unlabeled");
            out.push_back(*s.label);
        }
        return out;
    }

    std::vector<SetId> ids() const {
        std::vector<SetId> out;
        out.reserve(sets_.size());
        for (const auto& s : sets_) out.push_back(s.id);
        return out;
    }

    SetDataset subset(const std::vector<std::size_t>& indices) const {
        std::vector<PointSet> out;
        out.reserve(indices.size());
        for (auto i : indices) out.push_back(sets_.at(i));
        return SetDataset(std::move(out), dim_);
    }

private:
    std::vector<PointSet> sets_;
    Eigen::Index dim_ = 0;
    int label_count_ = 0;
};

/// R-bit binary code packed into 64-bit words; padding bits stay zero.
class HashCode {
public:
    HashCode() = default;
    explicit HashCode(int bits) : bits_(bits), words_(word_count(bits), 0) {
        require(bits >= 0, ErrorCode::invalid_argument, "negative code length");
    }

    static HashCode from_bits(const std::vector<bool>& bits) {
        HashCode code(static_cast<int>(bits.size()));
        for (std::size_t i = 0; i < bits.size(); ++i) code.set(static_cast<int>(i), bits[i]);
        return code;
    }

    /// Parses a string of '0'/'1' characters, bit 0 first.
    static HashCode from_string(const std::string& s) {
        HashCode code(static_cast<int>(s.size()));
        for (std::size_t i = 0; i < s.size(); ++i) {
            require(s[i] == '0' || s[i] == '1', ErrorCode::invalid_argument, "bad bit character");
            code.set(static_cast<int>(i), s[i] == '1');
        }
        return code;
    }

    static std::size_t word_count(int bits) { return (static_cast<std::size_t>(bits) + 63) / 64; }

    int size() const { return bits_; }
    const std::vector<std::uint64_t>& words() const { return words_; }

    bool get(int i) const { return (words_[i >> 6] >> (i & 63)) & 1ULL; }
    void set(int i, bool v) {
        std::uint64_t mask = 1ULL << (i & 63);
        if (v)
            words_[i >> 6] |= mask;
        else
            words_[i >> 6] &= ~mask;
    }

    std::string to_string() const {
        std::string s(static_cast<std::size_t>(bits_), '0');
        for (int i = 0; i < bits_; ++i)
            if (get(i)) s[i] = '1';
        return s;
    }

    static HashCode from_words(int bits, std::vector<std::uint64_t> words) {
        require(words.size() == word_count(bits), ErrorCode::format_error, "code word count mismatch");
        if (bits % 64 != 0 && !words.empty()) {
            std::uint64_t pad = ~0ULL << (bits % 64);
            require((words.back() & pad) == 0, ErrorCode::format_error, "nonzero padding bits in code");
        }
        HashCode c;
        c.bits_ = bits;
        c.words_ = std::move(words);
        return c;
    }

    friend bool operator==(const HashCode&, const HashCode&) = default;

private:
    int bits_ = 0;
    std::vector<std::uint64_t> words_;
};

inline int hamming_distance(const HashCode& a, const HashCode& b) {
    require(a.size() == b.size(), ErrorCode::dimension_mismatch,
            "code length mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    int d = 0;
    const auto& wa = a.words();
    const auto& wb = b.words();
    for (std::size_t i = 0; i < wa.size(); ++i) d += std::popcount(wa[i] ^ wb[i]);
    return d;
}

/// Bit convention for every sign in the pipeline: non-negative maps to 1.
inline bool sign_bit(double v) { return v >= 0.0; }
inline int sign_pm(double v) { return v >= 0.0 ? 1 : -1; }

struct TrainSplit {
    SetDataset q;
    SetDataset r;
};

/// Sorts by (label, id); unlabeled sets sort first.
inline void sort_by_label_then_id(std::vector<std::size_t>& idx, const SetDataset& data) {
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        Label la = data[a].label.value_or(0), lb = data[b].label.value_or(0);
        if (la != lb) return la < lb;
        return data[a].id < data[b].id;
    });
}

/// Partitions a dataset into the query-side and database-side training
/// halves. Stratified mode keeps every label with at least two sets on both
/// sides; the q size is round(fraction * N) whenever that constraint allows,
/// otherwise the nearest size it does allow. Both halves come back
/// sorted by (label, id).
inline TrainSplit split_qr(const SetDataset& data, double fraction, std::uint64_t seed,
                           bool stratified = true) {
    require(data.size() >= 2, ErrorCode::degenerate_data,
            "cannot split a dataset of " + std::to_string(data.size()) + " set(s) into q and r parts");
    require(fraction > 0.0 && fraction < 1.0, ErrorCode::invalid_argument,
            "split fraction must lie in (0,1)");

    auto rng = make_rng(seed, stream::split);
    const std::size_t n = data.size();
    std::size_t target = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    target = std::clamp<std::size_t>(target, 1, n - 1);

    std::map<Label, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) {
        Label key = stratified ? data[i].label.value_or(0) : 0;
        groups[key].push_back(i);
    }
    std::vector<std::vector<std::size_t>*> order;
    std::vector<std::size_t> take;
    for (auto& [label, members] : groups) {
        std::sort(members.begin(), members.end(), [&](auto a, auto b) { return data[a].id < data[b].id; });
        shuffle_in_place(members, rng);
        order.push_back(&members);
        std::size_t m = members.size();
        std::size_t k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(m)));
        if (m >= 2) k = std::clamp<std::size_t>(k, 1, m - 1);
        take.push_back(k);
    }

    // Move the total toward the target one set at a time, visiting groups in
    // a seeded order. Groups of two or more never give up their last set on
    // either side, so the total can stop short of the target.
    std::vector<std::size_t> visit(order.size());
    std::iota(visit.begin(), visit.end(), 0);
    shuffle_in_place(visit, rng);
    auto total = [&] { return std::accumulate(take.begin(), take.end(), std::size_t{0}); };
    bool moved = true;
    while (total() != target && moved) {
        moved = false;
        for (auto g : visit) {
            std::size_t m = order[g]->size();
            std::size_t cur = total();
            if (cur == target) break;
            std::size_t lo = m >= 2 ? 1 : 0;
            std::size_t hi = m >= 2 ? m - 1 : m;
            if (cur < target && take[g] < hi) {
                ++take[g];
                moved = true;
            } else if (cur > target && take[g] > lo) {
                --take[g];
                moved = true;
            }
        }
    }
    std::vector<std::size_t> qi, ri;
    for (std::size_t g = 0; g < order.size(); ++g) {
        const auto& members = *order[g];
        for (std::size_t k = 0; k < members.size(); ++k) (k < take[g] ? qi : ri).push_back(members[k]);
    }
    sort_by_label_then_id(qi, data);
    sort_by_label_then_id(ri, data);
    return TrainSplit{data.subset(qi), data.subset(ri)};
}

} // namespace sethash
