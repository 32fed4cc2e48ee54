#pragma once

// Retrieval metrics over a Hamming index.
//
// Relevance is label equality. AP divides by the number of relevant database
// items (queries with none are excluded from every mean). precision@k is
// hits-in-top-k over k; recall@k is hits-in-top-k over relevant count.
// Radius precision counts a query with an empty bucket as 0 unless
// `skip_empty_buckets` is set, in which case such queries are left out of
// that radius's mean.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sethash/core.hpp"
#include "sethash/error.hpp"
#include "sethash/index.hpp"
#include "sethash/random.hpp"

namespace sethash {

inline double average_precision(std::span<const RankedResult> ranking, const std::set<SetId>& relevant) {
    require(!relevant.empty(), ErrorCode::invalid_argument, "average precision needs at least one relevant item");
    double sum = 0.0;
    int hits = 0;
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        if (relevant.count(ranking[i].id)) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(relevant.size());
}

struct EvalConfig {
    std::vector<int> cutoffs{100, 200, 400, 800, 1200, 1600};
    std::vector<int> radii{2};
    bool skip_empty_buckets = false;
};

struct QueryMetrics {
    SetId id = 0;
    double ap = 0.0;
    std::vector<double> precision_at_k;
    std::vector<double> recall_at_k;
    std::vector<double> precision_at_radius;  // NaN marks an empty bucket
};

struct MetricReport {
    double map = 0.0;
    std::vector<std::pair<int, double>> precision_at_k;
    std::vector<std::pair<int, double>> recall_at_k;
    std::vector<std::pair<int, double>> precision_at_radius;
    std::size_t queries_evaluated = 0;
    std::size_t queries_excluded = 0;
    std::vector<QueryMetrics> per_query;
};

struct LabeledQuery {
    SetId id = 0;
    HashCode code;
    Label label = 0;
};

inline MetricReport evaluate(const CodeIndex& index, std::span<const LabeledQuery> queries, const EvalConfig& cfg = {}) {
    require(index.has_labels(), ErrorCode::invalid_argument, "evaluation needs a labeled index");
    MetricReport rep;
    const auto nk = cfg.cutoffs.size(), nr = cfg.radii.size();
    std::vector<double> p_sum(nk, 0.0), r_sum(nk, 0.0), rad_sum(nr, 0.0);
    std::vector<std::size_t> rad_count(nr, 0);
    double ap_sum = 0.0;

    for (const auto& q : queries) {
        std::set<SetId> relevant;
        for (std::size_t i = 0; i < index.size(); ++i)
            if (index.labels()[i] == q.label) relevant.insert(index.ids()[i]);
        if (relevant.empty()) {
            ++rep.queries_excluded;
            continue;
        }
        auto ranking = rank(index, q.code, index.size());
        QueryMetrics qm;
        qm.id = q.id;
        qm.ap = average_precision(ranking, relevant);
        std::vector<int> hits_prefix(ranking.size() + 1, 0);
        for (std::size_t i = 0; i < ranking.size(); ++i)
            hits_prefix[i + 1] = hits_prefix[i] + static_cast<int>(relevant.count(ranking[i].id));
        for (std::size_t c = 0; c < nk; ++c) {
            auto k = static_cast<std::size_t>(cfg.cutoffs[c]);
            int hits = hits_prefix[std::min(k, ranking.size())];
            qm.precision_at_k.push_back(static_cast<double>(hits) / static_cast<double>(k));
            qm.recall_at_k.push_back(static_cast<double>(hits) / static_cast<double>(relevant.size()));
            p_sum[c] += qm.precision_at_k.back();
            r_sum[c] += qm.recall_at_k.back();
        }
        for (std::size_t c = 0; c < nr; ++c) {
            int radius = std::min(cfg.radii[c], index.bits());
            auto bucket = lookup_radius(index, q.code, radius);
            if (bucket.empty()) {
                qm.precision_at_radius.push_back(std::nan(""));
                if (cfg.skip_empty_buckets) continue;
                ++rad_count[c];
                continue;
            }
            std::size_t hits = 0;
            for (const auto& b : bucket) hits += relevant.count(b.id);
            double p = static_cast<double>(hits) / static_cast<double>(bucket.size());
            qm.precision_at_radius.push_back(p);
            rad_sum[c] += p;
            ++rad_count[c];
        }
        ap_sum += qm.ap;
        ++rep.queries_evaluated;
        rep.per_query.push_back(std::move(qm));
    }
    const double nq = static_cast<double>(rep.queries_evaluated);
    rep.map = rep.queries_evaluated ? ap_sum / nq : 0.0;
    for (std::size_t c = 0; c < nk; ++c) {
        rep.precision_at_k.emplace_back(cfg.cutoffs[c], rep.queries_evaluated ? p_sum[c] / nq : 0.0);
        rep.recall_at_k.emplace_back(cfg.cutoffs[c], rep.queries_evaluated ? r_sum[c] / nq : 0.0);
    }
    for (std::size_t c = 0; c < nr; ++c)
        rep.precision_at_radius.emplace_back(cfg.radii[c],
                                             rad_count[c] ? rad_sum[c] / static_cast<double>(rad_count[c]) : 0.0);
    return rep;
}

/// All codes of `queries` that carry labels.
inline std::vector<LabeledQuery> labeled_queries(const CodeIndex& queries) {
    std::vector<LabeledQuery> out;
    for (std::size_t i = 0; i < queries.size(); ++i)
        if (queries.labels()[i]) out.push_back({queries.ids()[i], queries.codes()[i], *queries.labels()[i]});
    return out;
}

// --- curve files --------------------------------------------------------------

/// CSV with header `metric,x,y`; rows map / precision / recall /
/// radius_precision. Empty sections produce no rows.
inline std::string format_curves(const MetricReport& rep) {
    std::ostringstream out;
    auto row = [&](const char* metric, int x, double y) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", y);
        out << metric << ',' << x << ',' << buf << '\n';
    };
    out << "metric,x,y\n";
    row("map", 0, rep.map);
    for (auto [k, v] : rep.precision_at_k) row("precision", k, v);
    for (auto [k, v] : rep.recall_at_k) row("recall", k, v);
    for (auto [r, v] : rep.precision_at_radius) row("radius_precision", r, v);
    return out.str();
}

inline void emit_curves(const MetricReport& rep, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::io_error, "cannot open " + path + " for writing");
    out << format_curves(rep);
    require(static_cast<bool>(out), ErrorCode::io_error, "write failed: " + path);
}

inline MetricReport parse_curves(std::istream& in) {
    MetricReport rep;
    std::string line;
    require(static_cast<bool>(std::getline(in, line)) && line == "metric,x,y", ErrorCode::format_error,
            "curve file must start with metric,x,y");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto a = line.find(','), b = line.find(',', a + 1);
        require(a != std::string::npos && b != std::string::npos, ErrorCode::format_error, "bad curve row: " + line);
        std::string metric = line.substr(0, a);
        int x = std::stoi(line.substr(a + 1, b - a - 1));
        double y = std::stod(line.substr(b + 1));
        if (metric == "map")
            rep.map = y;
        else if (metric == "precision")
            rep.precision_at_k.emplace_back(x, y);
        else if (metric == "recall")
            rep.recall_at_k.emplace_back(x, y);
        else if (metric == "radius_precision")
            rep.precision_at_radius.emplace_back(x, y);
        else
            fail(ErrorCode::format_error, "unknown metric '" + metric + "'");
    }
    return rep;
}

inline MetricReport read_curves(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::missing_file, "cannot open " + path);
    return parse_curves(in);
}

// --- set-mean LSH baseline ----------------------------------------------------

/// Random-hyperplane LSH applied to each set's mean vector. This is a
/// point-to-point baseline adapted to sets, not a set-to-set method.
struct LshBaseline {
    Eigen::MatrixXd planes;  // R x d, standard normal, zero offsets

    int bits() const { return static_cast<int>(planes.rows()); }

    HashCode encode(const PointSet& set) const {
        require(set.dim() == planes.cols(), ErrorCode::dimension_mismatch, "LSH baseline: dimension mismatch");
        Eigen::VectorXd mean = set.points.colwise().mean().transpose();
        Eigen::VectorXd proj = planes * mean;
        HashCode code(bits());
        for (int b = 0; b < bits(); ++b) code.set(b, sign_bit(proj(b)));
        return code;
    }

    std::vector<HashCode> encode_all(const SetDataset& data) const {
        std::vector<HashCode> out;
        out.reserve(data.size());
        for (const auto& s : data.sets()) out.push_back(encode(s));
        return out;
    }
};

inline LshBaseline lsh_baseline_train(Eigen::Index dim, int bits, std::uint64_t seed) {
    require(bits >= 1, ErrorCode::invalid_argument, "LSH baseline needs R >= 1");
    require(dim >= 1, ErrorCode::invalid_argument, "LSH baseline needs d >= 1");
    auto rng = make_rng(seed, stream::lsh);
    std::normal_distribution<double> normal(0.0, 1.0);
    LshBaseline m;
    m.planes.resize(bits, dim);
    for (int b = 0; b < bits; ++b)
        for (Eigen::Index c = 0; c < dim; ++c) m.planes(b, c) = normal(rng);
    return m;
}

inline LshBaseline lsh_baseline_train(const SetDataset& data, int bits, std::uint64_t seed) {
    return lsh_baseline_train(data.dim(), bits, seed);
}

inline CodeIndex index_from(const SetDataset& data, std::vector<HashCode> codes) {
    std::vector<std::optional<Label>> labels;
    for (const auto& s : data.sets()) labels.push_back(s.label);
    return CodeIndex(std::move(codes), data.ids(), std::move(labels));
}

} // namespace sethash
