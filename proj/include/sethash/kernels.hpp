#pragma once

// Set-to-set kernels.
//
// Structural kernel: each set gets a binary affinity graph (edge iff two
// points are within mu of each other); point p is weighted by the reciprocal
// of its degree, and two sets are compared by the weight-normalized average
// of a Gaussian base similarity over all cross-set point pairs.
//
// Statistical kernel: Gaussian kernel on the Frobenius distance between
// matrix logarithms of the (ridge-regularized) set covariances.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sethash/core.hpp"
#include "sethash/parallel.hpp"
#include "sethash/random.hpp"

namespace sethash {

enum class KernelId : std::uint8_t { structural = 0, statistical = 1 };
inline constexpr std::array<KernelId, 2> kAllKernels{KernelId::structural, KernelId::statistical};
inline constexpr std::size_t kKernelCount = kAllKernels.size();

inline const char* kernel_name(KernelId id) {
    return id == KernelId::structural ? "structural" : "statistical";
}

/// Zero for mu, gamma_g or gamma_s selects the data-driven default; see
/// resolve_params.
struct KernelParams {
    double mu = 0.0;        // affinity threshold; 0 = per-set median pairwise distance
    double gamma_g = 0.0;   // structural base bandwidth
    double gamma_s = 0.0;   // statistical bandwidth
    double cov_ridge = 1e-3;

    bool resolved() const { return gamma_g > 0.0 && gamma_s > 0.0; }

    void validate() const {
        require(mu >= 0.0 && std::isfinite(mu), ErrorCode::invalid_argument, "mu must be >= 0 (0 = auto)");
        require(gamma_g >= 0.0 && std::isfinite(gamma_g), ErrorCode::invalid_argument, "gamma_g must be >= 0");
        require(gamma_s >= 0.0 && std::isfinite(gamma_s), ErrorCode::invalid_argument, "gamma_s must be >= 0");
        require(cov_ridge >= 0.0 && std::isfinite(cov_ridge), ErrorCode::invalid_argument,
                "cov_ridge must be >= 0");
    }

    friend bool operator==(const KernelParams&, const KernelParams&) = default;
};

inline constexpr double kTraceFloor = 1e-12;
inline constexpr double kEigenFloor = 1e-12;

// --- structural -------------------------------------------------------------

struct AffinityMatrix {
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> entries;
    std::vector<int> row_degrees;

    Eigen::Index size() const { return entries.rows(); }
};

/// Median of the n(n-1)/2 pairwise distances; 0 for a single point.
inline double median_pairwise_distance(const Eigen::MatrixXd& pts) {
    const Eigen::Index n = pts.rows();
    if (n < 2) return 0.0;
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index p = 0; p < n; ++p)
        for (Eigen::Index q = p + 1; q < n; ++q) d.push_back((pts.row(p) - pts.row(q)).norm());
    const std::size_t m = d.size() / 2;
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(m), d.end());
    double hi = d[m];
    if (d.size() % 2 == 1) return hi;
    double lo = *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(m));
    return 0.5 * (lo + hi);
}

/// mu == 0 selects the per-set median pairwise distance.
inline AffinityMatrix build_affinity(const PointSet& set, double mu) {
    require(mu >= 0.0 && std::isfinite(mu), ErrorCode::invalid_argument, "affinity threshold must be >= 0");
    const Eigen::Index n = set.size();
    const double threshold = mu > 0.0 ? mu : median_pairwise_distance(set.points);
    AffinityMatrix a;
    a.entries.setZero(n, n);
    a.row_degrees.assign(static_cast<std::size_t>(n), 0);
    for (Eigen::Index p = 0; p < n; ++p) {
        a.entries(p, p) = 1;
        for (Eigen::Index q = p + 1; q < n; ++q) {
            if ((set.points.row(p) - set.points.row(q)).norm() <= threshold) {
                a.entries(p, q) = 1;
                a.entries(q, p) = 1;
            }
        }
    }
    for (Eigen::Index p = 0; p < n; ++p) a.row_degrees[static_cast<std::size_t>(p)] = a.entries.row(p).template cast<int>().sum();
    return a;
}

inline Eigen::VectorXd degree_weights(const AffinityMatrix& a) {
    Eigen::VectorXd w(a.size());
    for (Eigen::Index p = 0; p < a.size(); ++p) w(p) = 1.0 / a.row_degrees[static_cast<std::size_t>(p)];
    return w;
}

/// Weighted structural similarity for precomputed degree weights.
inline double structural_kernel(const Eigen::MatrixXd& xi, const Eigen::VectorXd& wi,
                                const Eigen::MatrixXd& xj, const Eigen::VectorXd& wj, double gamma_g) {
    double num = 0.0;
    for (Eigen::Index p = 0; p < xi.rows(); ++p) {
        double row = 0.0;
        for (Eigen::Index q = 0; q < xj.rows(); ++q)
            row += wj(q) * std::exp(-gamma_g * (xi.row(p) - xj.row(q)).squaredNorm());
        num += wi(p) * row;
    }
    return num / (wi.sum() * wj.sum());
}

inline double structural_kernel(const PointSet& xi, const PointSet& xj, const AffinityMatrix& ai,
                                const AffinityMatrix& aj, double gamma_g) {
    require(xi.dim() == xj.dim(), ErrorCode::dimension_mismatch, "structural kernel: dimension mismatch");
    require(ai.size() == xi.size() && aj.size() == xj.size(), ErrorCode::invalid_argument,
            "affinity matrix does not match its point set");
    return structural_kernel(xi.points, degree_weights(ai), xj.points, degree_weights(aj), gamma_g);
}

// --- statistical ------------------------------------------------------------

struct CovarianceDescriptor {
    Eigen::MatrixXd matrix;      // SPD after ridge
    Eigen::MatrixXd log_matrix;  // principal logarithm
    double ridge = 0.0;

    /// Builds the descriptor of an SPD matrix, taking its logarithm by
    /// symmetric eigendecomposition.
    static CovarianceDescriptor from_spd(const Eigen::MatrixXd& spd, double ridge = 0.0) {
        require(spd.rows() == spd.cols() && spd.rows() >= 1, ErrorCode::invalid_argument,
                "covariance must be square");
        CovarianceDescriptor c;
        c.matrix = 0.5 * (spd + spd.transpose());
        c.ridge = ridge;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c.matrix);
        require(eig.info() == Eigen::Success, ErrorCode::degenerate_data, "eigendecomposition failed");
        Eigen::VectorXd vals = eig.eigenvalues().cwiseMax(kEigenFloor);
        const auto& v = eig.eigenvectors();
        // A clamped spectrum replaces the stored matrix so exp(log C) == C holds.
        if (eig.eigenvalues().minCoeff() < kEigenFloor) {
            c.matrix = v * vals.asDiagonal() * v.transpose();
            c.matrix = 0.5 * (c.matrix + c.matrix.transpose());
        }
        Eigen::VectorXd logs = vals.array().log().matrix();
        c.log_matrix = v * logs.asDiagonal() * v.transpose();
        c.log_matrix = 0.5 * (c.log_matrix + c.log_matrix.transpose());
        return c;
    }
};

/// Population covariance (1/n) plus a trace-scaled ridge.
inline CovarianceDescriptor covariance(const PointSet& set, double cov_ridge) {
    require(set.points.allFinite(), ErrorCode::invalid_argument, "non-finite features in set " + std::to_string(set.id));
    require(cov_ridge >= 0.0, ErrorCode::invalid_argument, "cov_ridge must be >= 0");
    const Eigen::Index d = set.dim();
    Eigen::RowVectorXd mean = set.points.colwise().mean();
    Eigen::MatrixXd centered = set.points.rowwise() - mean;
    Eigen::MatrixXd c = (centered.transpose() * centered) / static_cast<double>(set.size());
    double ridge = cov_ridge * std::max(c.trace() / static_cast<double>(d), kTraceFloor);
    c.diagonal().array() += ridge;
    return CovarianceDescriptor::from_spd(c, ridge);
}

inline double log_euclidean_distance(const CovarianceDescriptor& a, const CovarianceDescriptor& b) {
    return (a.log_matrix - b.log_matrix).norm();
}

inline double statistical_kernel(const CovarianceDescriptor& ci, const CovarianceDescriptor& cj, double gamma_s) {
    require(ci.log_matrix.rows() == cj.log_matrix.rows(), ErrorCode::dimension_mismatch,
            "statistical kernel: dimension mismatch");
    double sq = (ci.log_matrix - cj.log_matrix).squaredNorm();
    return std::exp(-sq / (2.0 * gamma_s * gamma_s));
}

// --- per-set preprocessing and matrices ---------------------------------------

/// Everything a kernel evaluation needs from one set, computed once.
struct PreparedSet {
    SetId id = 0;
    Eigen::MatrixXd points;
    Eigen::VectorXd weights;
    CovarianceDescriptor cov;
};

inline PreparedSet prepare(const PointSet& set, const KernelParams& params) {
    PreparedSet p;
    p.id = set.id;
    p.points = set.points;
    p.weights = degree_weights(build_affinity(set, params.mu));
    p.cov = covariance(set, params.cov_ridge);
    return p;
}

inline std::vector<PreparedSet> prepare_all(const SetDataset& data, const KernelParams& params) {
    std::vector<PreparedSet> out(data.size());
    parallel_for(data.size(), [&](std::size_t i) { out[i] = prepare(data[i], params); });
    return out;
}

inline double kernel_value(KernelId id, const PreparedSet& a, const PreparedSet& b, const KernelParams& params) {
    if (id == KernelId::structural) return structural_kernel(a.points, a.weights, b.points, b.weights, params.gamma_g);
    return statistical_kernel(a.cov, b.cov, params.gamma_s);
}

struct KernelMatrix {
    KernelId kernel = KernelId::statistical;
    std::vector<SetId> row_ids;
    std::vector<SetId> col_ids;
    Eigen::MatrixXd values;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
    double operator()(Eigen::Index i, Eigen::Index j) const { return values(i, j); }
};

/// Every entry is evaluated as kernel(row set, column set), including the
/// mirrored triangle, so a later kernel(anchor, target) evaluation reproduces
/// the matrix entry bit for bit.
inline KernelMatrix kernel_matrix(const std::vector<PreparedSet>& rows, const std::vector<PreparedSet>& cols,
                                  KernelId kernel, const KernelParams& params) {
    require(params.resolved(), ErrorCode::invalid_argument, "kernel parameters not resolved");
    KernelMatrix k;
    k.kernel = kernel;
    for (const auto& r : rows) k.row_ids.push_back(r.id);
    for (const auto& c : cols) k.col_ids.push_back(c.id);
    const auto nr = static_cast<Eigen::Index>(rows.size()), nc = static_cast<Eigen::Index>(cols.size());
    k.values.resize(nr, nc);
    parallel_for(static_cast<std::size_t>(nr * nc), [&](std::size_t flat) {
        auto i = static_cast<Eigen::Index>(flat) / nc, j = static_cast<Eigen::Index>(flat) % nc;
        k.values(i, j) = kernel_value(kernel, rows[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)], params);
    });
    return k;
}

inline KernelMatrix kernel_matrix(const SetDataset& rows, const SetDataset& cols, KernelId kernel,
                                  const KernelParams& params) {
    require(rows.dim() == cols.dim() || rows.empty() || cols.empty(), ErrorCode::dimension_mismatch,
            "kernel matrix: row and column datasets differ in dimension");
    return kernel_matrix(prepare_all(rows, params), prepare_all(cols, params), kernel, params);
}

// --- parameter defaults -------------------------------------------------------

/// Fills gamma_g = 1/(2 m^2), m the mean pairwise point distance over a seeded
/// subsample of training points, and gamma_s = mean pairwise log-Euclidean
/// distance between training sets. Explicit nonzero values are kept.
inline KernelParams resolve_params(const SetDataset& train, KernelParams params, std::uint64_t seed,
                                   std::size_t max_points = 1000, std::size_t max_sets = 400) {
    params.validate();
    require(!train.empty(), ErrorCode::degenerate_data, "cannot fit kernel parameters on an empty dataset");
    auto rng = make_rng(seed, stream::gamma_sample);
    if (params.gamma_g == 0.0) {
        std::vector<std::pair<std::size_t, Eigen::Index>> all;
        for (std::size_t s = 0; s < train.size(); ++s)
            for (Eigen::Index p = 0; p < train[s].size(); ++p) all.emplace_back(s, p);
        shuffle_in_place(all, rng);
        if (all.size() > max_points) all.resize(max_points);
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t a = 0; a < all.size(); ++a)
            for (std::size_t b = a + 1; b < all.size(); ++b) {
                sum += (train[all[a].first].points.row(all[a].second) -
                        train[all[b].first].points.row(all[b].second)).norm();
                ++count;
            }
        double m = count ? sum / static_cast<double>(count) : 0.0;
        params.gamma_g = m > 0.0 ? 1.0 / (2.0 * m * m) : 1.0;
    }
    if (params.gamma_s == 0.0) {
        std::vector<std::size_t> idx(train.size());
        std::iota(idx.begin(), idx.end(), 0);
        shuffle_in_place(idx, rng);
        if (idx.size() > max_sets) idx.resize(max_sets);
        std::sort(idx.begin(), idx.end());
        std::vector<CovarianceDescriptor> covs(idx.size());
        parallel_for(idx.size(), [&](std::size_t i) { covs[i] = covariance(train[idx[i]], params.cov_ridge); });
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t a = 0; a < covs.size(); ++a)
            for (std::size_t b = a + 1; b < covs.size(); ++b) {
                sum += log_euclidean_distance(covs[a], covs[b]);
                ++count;
            }
        double m = count ? sum / static_cast<double>(count) : 0.0;
        params.gamma_s = m > 0.0 ? m : 1.0;
    }
    return params;
}

// --- kernel PCA ---------------------------------------------------------------

inline Eigen::MatrixXd double_center(const Eigen::MatrixXd& k) {
    const double n = static_cast<double>(k.rows());
    Eigen::VectorXd row_mean = k.rowwise().mean();
    Eigen::RowVectorXd col_mean = k.colwise().mean();
    double total = k.sum() / (n * n);
    Eigen::MatrixXd c = k;
    c.colwise() -= row_mean;
    c.rowwise() -= col_mean;
    c.array() += total;
    return c;
}

/// Top-R kernel principal components of a square kernel matrix. Returns the
/// N x R matrix of training-set projections (centered K times the unit
/// eigenvectors, largest eigenvalue first). Each eigenvector's sign is fixed
/// so its largest-magnitude entry is positive.
inline Eigen::MatrixXd kernel_pca_init(const Eigen::MatrixXd& k, int bits) {
    require(k.rows() == k.cols(), ErrorCode::invalid_argument, "kernel PCA needs a square matrix");
    require(bits >= 1, ErrorCode::invalid_argument, "kernel PCA needs R >= 1");
    require(bits <= k.rows(), ErrorCode::invalid_argument,
            "kernel PCA: R = " + std::to_string(bits) + " exceeds N = " + std::to_string(k.rows()));
    Eigen::MatrixXd centered = double_center(0.5 * (k + k.transpose()));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(centered);
    require(eig.info() == Eigen::Success, ErrorCode::degenerate_data, "kernel PCA eigendecomposition failed");
    const Eigen::Index n = k.rows();
    Eigen::MatrixXd v(n, bits);
    for (int c = 0; c < bits; ++c) {
        Eigen::VectorXd col = eig.eigenvectors().col(n - 1 - c);
        Eigen::Index arg = 0;
        col.cwiseAbs().maxCoeff(&arg);
        if (col(arg) < 0) col = -col;
        v.col(c) = col;
    }
    return centered * v;
}

inline Eigen::MatrixXd kernel_pca_init(const KernelMatrix& k, int bits) { return kernel_pca_init(k.values, bits); }

} // namespace sethash
