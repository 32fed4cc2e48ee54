#include <gtest/gtest.h>

#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "support.hpp"

using namespace sethash;

namespace {

PointSet row_set(SetId id, std::initializer_list<std::initializer_list<double>> rows) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& r : rows) {
        Eigen::Index j = 0;
        for (double v : r) m(i, j++) = v;
        ++i;
    }
    return PointSet(id, m);
}

// Eq.-level oracle written directly from the definition with explicit loops.
double structural_oracle(const PointSet& a, const PointSet& b, double mu, double gamma) {
    auto degrees = [&](const PointSet& s) {
        std::vector<double> w(static_cast<std::size_t>(s.size()));
        double thr = mu;
        if (mu == 0.0) {
            std::vector<double> d;
            for (Eigen::Index p = 0; p < s.size(); ++p)
                for (Eigen::Index q = p + 1; q < s.size(); ++q) d.push_back((s.points.row(p) - s.points.row(q)).norm());
            std::sort(d.begin(), d.end());
            thr = d.empty() ? 0.0 : (d.size() % 2 ? d[d.size() / 2] : 0.5 * (d[d.size() / 2 - 1] + d[d.size() / 2]));
        }
        for (Eigen::Index p = 0; p < s.size(); ++p) {
            int deg = 0;
            for (Eigen::Index u = 0; u < s.size(); ++u) deg += (s.points.row(p) - s.points.row(u)).norm() <= thr;
            w[static_cast<std::size_t>(p)] = 1.0 / deg;
        }
        return w;
    };
    auto wa = degrees(a), wb = degrees(b);
    double num = 0.0, sa = 0.0, sb = 0.0;
    for (double v : wa) sa += v;
    for (double v : wb) sb += v;
    for (Eigen::Index p = 0; p < a.size(); ++p)
        for (Eigen::Index q = 0; q < b.size(); ++q) {
            double d2 = 0.0;
            for (Eigen::Index c = 0; c < a.dim(); ++c) d2 += std::pow(a.points(p, c) - b.points(q, c), 2);
            num += wa[static_cast<std::size_t>(p)] * wb[static_cast<std::size_t>(q)] * std::exp(-gamma * d2);
        }
    return num / (sa * sb);
}

double structural(const PointSet& a, const PointSet& b, double mu, double gamma) {
    return structural_kernel(a, b, build_affinity(a, mu), build_affinity(b, mu), gamma);
}

} // namespace

TEST(Affinity, SpecExamples) {
    auto one = row_set(1, {{0.5, 0.5}});
    auto a1 = build_affinity(one, 0.7);
    EXPECT_EQ(a1.entries.rows(), 1);
    EXPECT_EQ(a1.entries(0, 0), 1);

    auto far = row_set(2, {{0.0}, {3.0}});
    auto a2 = build_affinity(far, 2.0);
    EXPECT_EQ(a2.entries(0, 1), 0);
    EXPECT_EQ(a2.entries(0, 0) + a2.entries(1, 1), 2);
    EXPECT_EQ(a2.row_degrees, (std::vector<int>{1, 1}));

    auto near = row_set(3, {{0.0}, {1.0}});
    auto a3 = build_affinity(near, 2.0);
    EXPECT_EQ(a3.entries.cast<int>().sum(), 4);
}

TEST(Affinity, SymmetricWithUnitDiagonalAndAutoMedian) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
        auto s = testutil::random_set(rng, 1, 2 + static_cast<Eigen::Index>(rng() % 9), 3);
        for (double mu : {0.0, 0.5, 2.0}) {
            auto a = build_affinity(s, mu);
            EXPECT_TRUE((a.entries.cast<int>() - a.entries.transpose().cast<int>()).cwiseAbs().sum() == 0);
            for (Eigen::Index p = 0; p < a.size(); ++p) {
                EXPECT_EQ(a.entries(p, p), 1);
                EXPECT_GE(a.row_degrees[static_cast<std::size_t>(p)], 1);
            }
        }
    }
    auto line = row_set(4, {{0.0}, {1.0}, {3.0}});  // distances 1, 2, 3 -> median 2
    EXPECT_DOUBLE_EQ(median_pairwise_distance(line.points), 2.0);
    auto a = build_affinity(line, 0.0);
    EXPECT_EQ(a.row_degrees, (std::vector<int>{2, 3, 2}));
}

TEST(StructuralKernel, SpecExamples) {
    auto p = row_set(1, {{0.3, -1.2}});
    EXPECT_DOUBLE_EQ(structural(p, p, 0.0, 5.0), 1.0);
    auto q = row_set(2, {{1.3, -1.2}});
    EXPECT_NEAR(structural(p, q, 0.0, 1.0), 0.367879441171, 1e-12);

    std::mt19937_64 rng(1);
    auto a = testutil::random_set(rng, 1, 6, 4), b = testutil::random_set(rng, 2, 5, 4, std::nullopt, 2.0);
    EXPECT_NEAR(structural(a, b, 0.0, 1e-12), 1.0, 1e-9);
}

TEST(StructuralKernel, MatchesDefinitionOracle) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 50; ++t) {
        auto a = testutil::random_set(rng, 1, 1 + static_cast<Eigen::Index>(rng() % 7), 3);
        auto b = testutil::random_set(rng, 2, 1 + static_cast<Eigen::Index>(rng() % 7), 3, std::nullopt, 0.5);
        double mu = (t % 3 == 0) ? 0.0 : 1.0 + 0.1 * t;
        double gamma = 0.05 + 0.01 * t;
        double got = structural(a, b, mu, gamma);
        EXPECT_NEAR(got, structural_oracle(a, b, mu, gamma), 1e-12);
        EXPECT_GT(got, 0.0);
        EXPECT_LE(got, 1.0);
    }
}

TEST(StructuralKernel, SymmetricPermutationInvariantMonotone) {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 100; ++t) {
        auto a = testutil::random_set(rng, 1, 2 + static_cast<Eigen::Index>(rng() % 8), 4);
        auto b = testutil::random_set(rng, 2, 2 + static_cast<Eigen::Index>(rng() % 8), 4);
        double k = structural(a, b, 0.0, 0.3);
        EXPECT_NEAR(k, structural(b, a, 0.0, 0.3), 1e-12);
        EXPECT_NEAR(k, structural(testutil::shuffled(a, rng), testutil::shuffled(b, rng), 0.0, 0.3), 1e-12);
        EXPECT_LT(structural(a, b, 0.0, 0.6), k);
    }
}

TEST(Covariance, SpecExamples) {
    auto s = row_set(1, {{0.0}, {2.0}});
    EXPECT_DOUBLE_EQ(covariance(s, 0.0).matrix(0, 0), 1.0);
    // trace-scaled ridge: 1e-3 * trace/d
    EXPECT_DOUBLE_EQ(covariance(s, 1e-3).matrix(0, 0), 1.0 + 1e-3);

    auto same = row_set(2, {{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}});
    auto c = covariance(same, 1e-3);
    EXPECT_DOUBLE_EQ(c.ridge, 1e-3 * kTraceFloor);
    // the ridge sits below the eigenvalue floor, so the clamped spectrum is stored
    EXPECT_TRUE(c.matrix.isApprox(kEigenFloor * Eigen::MatrixXd::Identity(2, 2)));
    EXPECT_TRUE(c.log_matrix.allFinite());
    EXPECT_NEAR(c.log_matrix(0, 0), std::log(kEigenFloor), 1e-9);
    EXPECT_EQ(statistical_kernel(c, covariance(row_set(3, {{5.0, -1.0}}), 1e-3), 1.0), 1.0);

    Eigen::MatrixXd d(2, 2);
    d << std::exp(1.0), 0.0, 0.0, std::exp(2.0);
    auto cd = CovarianceDescriptor::from_spd(d);
    EXPECT_NEAR(cd.log_matrix(0, 0), 1.0, 1e-14);
    EXPECT_NEAR(cd.log_matrix(1, 1), 2.0, 1e-14);
    EXPECT_NEAR(cd.log_matrix(0, 1), 0.0, 1e-14);
}

TEST(Covariance, UsesPopulationNormalization) {
    std::mt19937_64 rng(2);
    auto s = testutil::random_set(rng, 1, 9, 3);
    Eigen::MatrixXd oracle = Eigen::MatrixXd::Zero(3, 3);
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(3);
    for (Eigen::Index p = 0; p < 9; ++p) mean += s.points.row(p) / 9.0;
    for (Eigen::Index p = 0; p < 9; ++p) {
        Eigen::RowVectorXd c = s.points.row(p) - mean;
        oracle += c.transpose() * c / 9.0;
    }
    EXPECT_TRUE(covariance(s, 0.0).matrix.isApprox(oracle, 1e-12));
}

TEST(Covariance, ExpLogRoundTrip) {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 30; ++t) {
        Eigen::Index d = 2 + static_cast<Eigen::Index>(rng() % 12);
        Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 30);  // often n < d
        auto c = covariance(testutil::random_set(rng, 1, n, d), 1e-3);
        Eigen::MatrixXd back = c.log_matrix.exp();
        EXPECT_LE((back - c.matrix).norm() / c.matrix.norm(), 1e-8);
        EXPECT_LE((c.matrix - c.matrix.transpose()).norm(), 1e-10 * c.matrix.norm());
        EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(c.matrix).eigenvalues().minCoeff(), 0.0);
    }
}

TEST(Covariance, RejectsNonFinite) {
    PointSet s = row_set(1, {{0.0, 1.0}});
    s.points(0, 0) = std::numeric_limits<double>::infinity();
    EXPECT_THROW(covariance(s, 1e-3), Error);
}

TEST(StatisticalKernel, SpecExamples) {
    std::mt19937_64 rng(4);
    auto c = covariance(testutil::random_set(rng, 1, 10, 4), 1e-3);
    EXPECT_EQ(statistical_kernel(c, c, 0.7), 1.0);

    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(2, 2);
    Eigen::MatrixXd b = a;
    b(0, 0) = std::exp(1.0);  // log differs by 1 in one entry
    auto ca = CovarianceDescriptor::from_spd(a), cb = CovarianceDescriptor::from_spd(b);
    EXPECT_NEAR(log_euclidean_distance(ca, cb), 1.0, 1e-14);
    EXPECT_NEAR(statistical_kernel(ca, cb, 1.0), 0.606530659713, 1e-12);
    EXPECT_NEAR(statistical_kernel(ca, cb, 1e8), 1.0, 1e-12);
}

TEST(StatisticalKernel, OracleWithMatrixLog) {
    std::mt19937_64 rng(12);
    for (int t = 0; t < 20; ++t) {
        auto x = testutil::random_set(rng, 1, 12, 3), y = testutil::random_set(rng, 2, 12, 3);
        auto cx = covariance(x, 1e-3), cy = covariance(y, 1e-3);
        Eigen::MatrixXd lx = cx.matrix.log(), ly = cy.matrix.log();
        double oracle = std::exp(-(lx - ly).squaredNorm() / (2.0 * 1.3 * 1.3));
        EXPECT_NEAR(statistical_kernel(cx, cy, 1.3), oracle, 1e-9);
    }
}

TEST(StatisticalKernel, SymmetricAndOrderFree) {
    std::mt19937_64 rng(13);
    for (int t = 0; t < 100; ++t) {
        auto x = testutil::random_set(rng, 1, 8, 3), y = testutil::random_set(rng, 2, 8, 3);
        auto cx = covariance(x, 1e-3), cy = covariance(y, 1e-3);
        double k = statistical_kernel(cx, cy, 2.0);
        EXPECT_EQ(k, statistical_kernel(cy, cx, 2.0));
        EXPECT_GT(k, 0.0);
        EXPECT_LE(k, 1.0);
        auto sx = covariance(testutil::shuffled(x, rng), 1e-3), sy = covariance(testutil::shuffled(y, rng), 1e-3);
        EXPECT_NEAR(k, statistical_kernel(sx, sy, 2.0), 1e-10);
    }
}

TEST(KernelMatrix, StatisticalUnitDiagonalSymmetricPsdMinors) {
    auto data = testutil::labeled_dataset(1, 3, 5, 10, 4, 0.5);
    auto params = resolve_params(data, {}, 1);
    auto k = kernel_matrix(data, data, KernelId::statistical, params);
    ASSERT_EQ(k.rows(), 15);
    for (Eigen::Index i = 0; i < k.rows(); ++i) {
        EXPECT_EQ(k(i, i), 1.0);
        for (Eigen::Index j = 0; j < k.cols(); ++j) {
            EXPECT_EQ(k(i, j), k(j, i));
            EXPECT_GT(k(i, j), 0.0);
            EXPECT_GE(k(i, i) * k(j, j) - k(i, j) * k(j, i), -1e-9);
        }
    }
    EXPECT_EQ(k.row_ids, data.ids());
}

TEST(KernelMatrix, StructuralMatchesPairwiseCalls) {
    auto data = testutil::labeled_dataset(2, 2, 3, 6, 3);
    KernelParams params{0.0, 0.2, 1.0, 1e-3};
    auto k = kernel_matrix(data, data, KernelId::structural, params);
    for (std::size_t i = 0; i < data.size(); ++i)
        for (std::size_t j = 0; j < data.size(); ++j) {
            auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
            EXPECT_EQ(k(ii, jj), structural(data[i], data[j], 0.0, 0.2));
            EXPECT_NEAR(k(ii, jj), k(jj, ii), 1e-12);
        }
}

TEST(KernelMatrix, RequiresResolvedParams) {
    auto data = testutil::labeled_dataset(2, 1, 2, 3, 2);
    EXPECT_THROW(kernel_matrix(data, data, KernelId::structural, KernelParams{}), Error);
}

TEST(ResolveParams, DefaultsFollowTheirHeuristics) {
    auto data = testutil::labeled_dataset(4, 2, 3, 5, 3);
    auto p = resolve_params(data, {}, 1);
    // Oracle over all points (fewer than the subsample cap).
    double sum = 0.0;
    std::size_t cnt = 0;
    std::vector<Eigen::RowVectorXd> pts;
    for (const auto& s : data.sets())
        for (Eigen::Index i = 0; i < s.size(); ++i) pts.push_back(s.points.row(i));
    for (std::size_t a = 0; a < pts.size(); ++a)
        for (std::size_t b = a + 1; b < pts.size(); ++b) sum += (pts[a] - pts[b]).norm(), ++cnt;
    double m = sum / static_cast<double>(cnt);
    EXPECT_NEAR(p.gamma_g, 1.0 / (2.0 * m * m), 1e-12 * p.gamma_g);

    std::vector<CovarianceDescriptor> covs;
    for (const auto& s : data.sets()) covs.push_back(covariance(s, 1e-3));
    double ls = 0.0;
    cnt = 0;
    for (std::size_t a = 0; a < covs.size(); ++a)
        for (std::size_t b = a + 1; b < covs.size(); ++b) ls += (covs[a].log_matrix - covs[b].log_matrix).norm(), ++cnt;
    EXPECT_NEAR(p.gamma_s, ls / static_cast<double>(cnt), 1e-9);

    KernelParams fixed{1.5, 0.25, 3.0, 1e-3};
    EXPECT_EQ(resolve_params(data, fixed, 1), fixed);
    EXPECT_THROW(resolve_params(data, KernelParams{-1.0, 0, 0, 1e-3}, 1), Error);
}

TEST(KernelPca, IdentityGivesOrthogonalColumns) {
    Eigen::MatrixXd v = kernel_pca_init(Eigen::MatrixXd::Identity(6, 6), 3);
    Eigen::MatrixXd g = v.transpose() * v;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j) {
                EXPECT_NEAR(g(i, j), 0.0, 1e-12);
            }
}

TEST(KernelPca, SingleComponentIsTopCenteredEigenvector) {
    std::mt19937_64 rng(6);
    Eigen::MatrixXd a = testutil::gaussian(rng, 7, 7);
    Eigen::MatrixXd k = a * a.transpose();
    Eigen::MatrixXd v = kernel_pca_init(k, 1);
    Eigen::MatrixXd one = Eigen::MatrixXd::Constant(7, 7, 1.0 / 7.0);
    Eigen::MatrixXd kc = k - one * k - k * one + one * k * one;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(kc);
    Eigen::VectorXd top = eig.eigenvectors().col(6);
    Eigen::VectorXd expect = kc * top;
    EXPECT_NEAR(std::abs(v.col(0).dot(expect)), expect.squaredNorm(), 1e-9 * expect.squaredNorm());
    EXPECT_NEAR(v.col(0).norm(), eig.eigenvalues()(6), 1e-9 * eig.eigenvalues()(6));
}

TEST(KernelPca, TwoBlockKernelSeparatesGroups) {
    Eigen::MatrixXd v = kernel_pca_init(testutil::block_kernel(4, 6), 1);
    for (int i = 1; i < 4; ++i) EXPECT_EQ(sign_bit(v(i, 0)), sign_bit(v(0, 0)));
    for (int i = 4; i < 10; ++i) EXPECT_NE(sign_bit(v(i, 0)), sign_bit(v(0, 0)));
}

TEST(KernelPca, RejectsTooManyComponents) {
    try {
        kernel_pca_init(Eigen::MatrixXd::Identity(3, 3), 4);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::invalid_argument);
    }
}

TEST(KernelCache, RoundTripAndHits) {
    testutil::TempDir tmp("kc");
    auto data = testutil::labeled_dataset(3, 2, 3, 5, 3);
    auto params = resolve_params(data, {}, 1);
    KernelCache cache(tmp.path());
    auto a = cache.get_or_compute(data, data, KernelId::structural, params);
    auto b = cache.get_or_compute(data, data, KernelId::structural, params);
    EXPECT_EQ(cache.misses(), 1);
    EXPECT_EQ(cache.hits(), 1);
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(b.row_ids, data.ids());

    auto other = params;
    other.gamma_g *= 2.0;
    auto c = cache.get_or_compute(data, data, KernelId::structural, other);
    EXPECT_EQ(cache.misses(), 2);
    EXPECT_NE(c.values, a.values);
    cache.get_or_compute(data, data, KernelId::statistical, params);
    EXPECT_EQ(cache.misses(), 3);
}
