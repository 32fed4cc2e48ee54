#pragma once

// Dataset file, version 1, little-endian:
//
//   header   "SHDS"  u32 version  u32 d  u64 N  u32 flags (bit 0: labeled)
//   per set  u64 id  i32 label (-1 = unlabeled)  u32 n  f32[n*d] row-major
//
// CSV ingestion: header row `set_id,label,f1,...,fd`, one row per point.
// Rows of one set must agree on the label; an empty label means unlabeled.

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sethash/binary_io.hpp"
#include "sethash/core.hpp"

namespace sethash {

inline constexpr Magic kDatasetMagic{'S', 'H', 'D', 'S'};
inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::int32_t kNoLabel = -1;

inline void write_dataset(const SetDataset& data, const std::string& path) {
    BinaryWriter w;
    w.put_magic(kDatasetMagic);
    w.put<std::uint32_t>(kDatasetVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(data.dim()));
    w.put<std::uint64_t>(data.size());
    w.put<std::uint32_t>(data.fully_labeled() ? 1u : 0u);
    std::vector<float> row;
    for (const auto& s : data.sets()) {
        w.put<std::uint64_t>(s.id);
        w.put<std::int32_t>(s.label ? *s.label : kNoLabel);
        w.put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        row.resize(static_cast<std::size_t>(s.size() * s.dim()));
        for (Eigen::Index p = 0; p < s.size(); ++p)
            for (Eigen::Index c = 0; c < s.dim(); ++c)
                row[static_cast<std::size_t>(p * s.dim() + c)] = static_cast<float>(s.points(p, c));
        w.put_array(row.data(), row.size());
    }
    w.save(path);
}

inline SetDataset read_dataset(const std::string& path) {
    auto r = BinaryReader::open(path);
    r.expect_magic(kDatasetMagic, "dataset");
    r.expect_version(kDatasetVersion, "dataset");
    auto d = r.get<std::uint32_t>();
    auto n_sets = r.get<std::uint64_t>();
    r.get<std::uint32_t>(); // flags are informational; per-set labels are authoritative
    require(d >= 1, ErrorCode::format_error, path + ": dimension must be >= 1");
    std::vector<PointSet> sets;
    sets.reserve(n_sets);
    std::vector<float> row;
    for (std::uint64_t i = 0; i < n_sets; ++i) {
        auto id = r.get<std::uint64_t>();
        auto label = r.get<std::int32_t>();
        auto n = r.get<std::uint32_t>();
        row.resize(static_cast<std::size_t>(n) * d);
        r.get_array(row.data(), row.size());
        Eigen::MatrixXd pts(n, d);
        for (std::uint32_t p = 0; p < n; ++p)
            for (std::uint32_t c = 0; c < d; ++c) pts(p, c) = row[static_cast<std::size_t>(p) * d + c];
        std::optional<Label> lab;
        if (label != kNoLabel) lab = label;
        sets.emplace_back(id, std::move(pts), lab);
    }
    require(r.at_end(), ErrorCode::format_error, path + ": trailing bytes after last set");
    return SetDataset(std::move(sets), d);
}

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    for (auto& c : out) {
        while (!c.empty() && (c.back() == '\r' || c.back() == ' ')) c.pop_back();
        while (!c.empty() && c.front() == ' ') c.erase(c.begin());
    }
    return out;
}

template <class T>
T parse_number(const std::string& s, const std::string& where) {
    T v{};
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    require(res.ec == std::errc() && res.ptr == s.data() + s.size(), ErrorCode::format_error,
            where + ": cannot parse '" + s + "'");
    return v;
}
} // namespace detail

inline SetDataset read_csv_dataset(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::missing_file, "cannot open " + path);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::format_error, path + ": empty CSV");
    auto header = detail::split_csv_line(line);
    require(header.size() >= 3 && header[0] == "set_id" && header[1] == "label", ErrorCode::format_error,
            path + ": header must be set_id,label,f1..fd");
    const std::size_t d = header.size() - 2;

    struct Pending {
        std::optional<Label> label;
        std::vector<std::vector<double>> rows;
    };
    std::map<SetId, Pending> pending;
    std::vector<SetId> first_seen;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto cells = detail::split_csv_line(line);
        std::string where = path + ":" + std::to_string(lineno);
        require(cells.size() == d + 2, ErrorCode::dimension_mismatch,
                where + ": expected " + std::to_string(d + 2) + " columns");
        auto id = detail::parse_number<SetId>(cells[0], where);
        std::optional<Label> label;
        if (!cells[1].empty()) label = detail::parse_number<Label>(cells[1], where);
        auto [it, inserted] = pending.try_emplace(id);
        if (inserted) {
            it->second.label = label;
            first_seen.push_back(id);
        } else {
            require(it->second.label == label, ErrorCode::format_error, where + ": inconsistent label for set");
        }
        std::vector<double> row(d);
        for (std::size_t c = 0; c < d; ++c) row[c] = detail::parse_number<double>(cells[c + 2], where);
        it->second.rows.push_back(std::move(row));
    }
    std::vector<PointSet> sets;
    for (auto id : first_seen) {
        auto& p = pending[id];
        Eigen::MatrixXd pts(static_cast<Eigen::Index>(p.rows.size()), static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < p.rows.size(); ++i)
            for (std::size_t c = 0; c < d; ++c) pts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = p.rows[i][c];
        sets.emplace_back(id, std::move(pts), p.label);
    }
    return SetDataset(std::move(sets), static_cast<Eigen::Index>(d));
}

/// Dispatches on extension: `.csv` goes through CSV ingestion.
inline SetDataset load_dataset(const std::string& path) {
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0) return read_csv_dataset(path);
    return read_dataset(path);
}

} // namespace sethash
