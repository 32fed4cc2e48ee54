#pragma once

#include <random>

#include "sethash/core.hpp"
#include "sethash/random.hpp"

namespace sethash {

/// Synthetic labeled point sets. Each class c has a center mu_c ~ N(0, I)
/// and a shape matrix L_c with N(0, 1/d) entries. A set of class c draws one
/// offset j ~ N(0, I) and its points are
///
///     x = mu_c + spread * (j + L_c z),   z ~ N(0, I)
///
/// so set means scatter around the class center while the within-set
/// covariance spread^2 L_c L_c^T is a class signature. Ids run from 1 in
/// class-major order; labels are 1..classes.
struct SynthConfig {
    int classes = 10;
    int sets_per_class = 12;
    int points_per_set = 20;
    int dim = 32;
    double cluster_spread = 1.0;
    std::uint64_t seed = 0;
};

inline SetDataset synthesize(const SynthConfig& cfg) {
    require(cfg.classes >= 1 && cfg.sets_per_class >= 1 && cfg.points_per_set >= 1, ErrorCode::invalid_argument,
            "synth counts must all be >= 1");
    require(cfg.dim >= 1, ErrorCode::invalid_argument, "synth dimension must be >= 1");
    require(cfg.cluster_spread >= 0.0 && std::isfinite(cfg.cluster_spread), ErrorCode::invalid_argument,
            "cluster spread must be >= 0");
    auto rng = make_rng(cfg.seed, stream::synth);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto gaussian = [&](Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
        return m;
    };
    const Eigen::Index d = cfg.dim;
    std::vector<PointSet> sets;
    SetId next_id = 1;
    for (int c = 0; c < cfg.classes; ++c) {
        Eigen::RowVectorXd center = gaussian(1, d);
        Eigen::MatrixXd shape = gaussian(d, d) / std::sqrt(static_cast<double>(d));
        for (int s = 0; s < cfg.sets_per_class; ++s) {
            Eigen::RowVectorXd offset = gaussian(1, d);
            Eigen::MatrixXd z = gaussian(cfg.points_per_set, d);
            Eigen::MatrixXd pts = (z * shape.transpose()).rowwise() + offset;
            pts = (cfg.cluster_spread * pts).rowwise() + center;
            sets.emplace_back(next_id++, std::move(pts), c + 1);
        }
    }
    return SetDataset(std::move(sets), d);
}

} // namespace sethash
