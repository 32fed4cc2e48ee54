#pragma once

// Exact Hamming-space retrieval over packed codes.
//
// Code file, version 1:
//   "SHCI"  u32 version  u32 R  u64 N  u32 flags (bit 0: labels present)
//   u64[N * ceil(R/64)] packed rows   u64[N] ids   i32[N] labels (-1 none)

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sethash/binary_io.hpp"
#include "sethash/core.hpp"

namespace sethash {

struct RankedResult {
    SetId id = 0;
    int distance = 0;
    int rank = 0;  // 1-based

    friend bool operator==(const RankedResult&, const RankedResult&) = default;
};

class CodeIndex {
public:
    CodeIndex() = default;

    CodeIndex(std::vector<HashCode> codes, std::vector<SetId> ids, std::vector<std::optional<Label>> labels = {})
        : codes_(std::move(codes)), ids_(std::move(ids)), labels_(std::move(labels)) {
        require(codes_.size() == ids_.size(), ErrorCode::invalid_argument, "one id per code required");
        require(labels_.empty() || labels_.size() == ids_.size(), ErrorCode::invalid_argument,
                "labels must be absent or one per code");
        if (!codes_.empty()) bits_ = codes_.front().size();
        std::set<SetId> seen;
        for (std::size_t i = 0; i < codes_.size(); ++i) {
            require(codes_[i].size() == bits_, ErrorCode::dimension_mismatch, "index codes differ in length");
            require(seen.insert(ids_[i]).second, ErrorCode::invalid_argument,
                    "duplicate id " + std::to_string(ids_[i]) + " in index");
        }
        if (labels_.empty()) labels_.assign(ids_.size(), std::nullopt);
    }

    std::size_t size() const { return codes_.size(); }
    bool empty() const { return codes_.empty(); }
    int bits() const { return bits_; }
    const std::vector<HashCode>& codes() const { return codes_; }
    const std::vector<SetId>& ids() const { return ids_; }
    const std::vector<std::optional<Label>>& labels() const { return labels_; }
    bool has_labels() const {
        return std::all_of(labels_.begin(), labels_.end(), [](const auto& l) { return l.has_value(); });
    }

private:
    std::vector<HashCode> codes_;
    std::vector<SetId> ids_;
    std::vector<std::optional<Label>> labels_;
    int bits_ = 0;
};

inline CodeIndex build_index(std::vector<HashCode> codes, std::vector<SetId> ids,
                             std::vector<std::optional<Label>> labels = {}) {
    return CodeIndex(std::move(codes), std::move(ids), std::move(labels));
}

namespace detail {
inline void check_query(const CodeIndex& index, const HashCode& query) {
    require(index.empty() || query.size() == index.bits(), ErrorCode::dimension_mismatch,
            "query has " + std::to_string(query.size()) + " bits, index has " + std::to_string(index.bits()));
}

inline std::vector<RankedResult> scan(const CodeIndex& index, const HashCode& query) {
    std::vector<RankedResult> all(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) all[i] = {index.ids()[i], hamming_distance(index.codes()[i], query), 0};
    return all;
}

inline bool by_distance_then_id(const RankedResult& a, const RankedResult& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
}

inline void assign_ranks(std::vector<RankedResult>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i].rank = static_cast<int>(i) + 1;
}
} // namespace detail

/// k nearest codes by full scan; ties broken by ascending id.
inline std::vector<RankedResult> rank(const CodeIndex& index, const HashCode& query, std::size_t k) {
    detail::check_query(index, query);
    auto all = detail::scan(index, query);
    k = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), detail::by_distance_then_id);
    all.resize(k);
    detail::assign_ranks(all);
    return all;
}

/// Every entry within `radius`, ordered like rank().
inline std::vector<RankedResult> lookup_radius(const CodeIndex& index, const HashCode& query, int radius) {
    detail::check_query(index, query);
    require(radius >= 0 && (index.empty() || radius <= index.bits()), ErrorCode::invalid_argument,
            "radius must lie in [0, R]");
    auto all = detail::scan(index, query);
    std::erase_if(all, [&](const RankedResult& r) { return r.distance > radius; });
    std::sort(all.begin(), all.end(), detail::by_distance_then_id);
    detail::assign_ranks(all);
    return all;
}

inline constexpr Magic kCodesMagic{'S', 'H', 'C', 'I'};
inline constexpr std::uint32_t kCodesVersion = 1;

inline BinaryWriter serialize_index(const CodeIndex& index, int bits_if_empty = 0) {
    BinaryWriter w;
    const int bits = index.empty() ? bits_if_empty : index.bits();
    w.put_magic(kCodesMagic);
    w.put<std::uint32_t>(kCodesVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(bits));
    w.put<std::uint64_t>(index.size());
    w.put<std::uint32_t>(index.has_labels() && !index.empty() ? 1u : 0u);
    for (const auto& c : index.codes()) w.put_array(c.words().data(), c.words().size());
    w.put_array(index.ids().data(), index.ids().size());
    for (const auto& l : index.labels()) w.put<std::int32_t>(l.value_or(-1));
    return w;
}

inline void write_codes(const CodeIndex& index, const std::string& path) { serialize_index(index).save(path); }

inline CodeIndex read_codes(const std::string& path) {
    auto r = BinaryReader::open(path);
    r.expect_magic(kCodesMagic, "code");
    r.expect_version(kCodesVersion, "code");
    auto bits = static_cast<int>(r.get<std::uint32_t>());
    auto n = r.get<std::uint64_t>();
    r.get<std::uint32_t>();
    const auto words = HashCode::word_count(bits);
    std::vector<HashCode> codes;
    codes.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        std::vector<std::uint64_t> ws(words);
        r.get_array(ws.data(), ws.size());
        codes.push_back(HashCode::from_words(bits, std::move(ws)));
    }
    std::vector<SetId> ids(n);
    r.get_array(ids.data(), ids.size());
    std::vector<std::optional<Label>> labels(n);
    for (auto& l : labels) {
        auto v = r.get<std::int32_t>();
        if (v != -1) l = v;
    }
    require(r.at_end(), ErrorCode::format_error, path + ": trailing bytes in code file");
    return CodeIndex(std::move(codes), std::move(ids), std::move(labels));
}

} // namespace sethash
