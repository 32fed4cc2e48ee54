#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sethash/sethash.hpp"

namespace testutil {

using namespace sethash;

inline Eigen::MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0,
                                double offset = 0.0) {
    std::normal_distribution<double> n(offset, scale);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng);
    return m;
}

inline PointSet random_set(std::mt19937_64& rng, SetId id, Eigen::Index n, Eigen::Index d,
                           std::optional<Label> label = std::nullopt, double offset = 0.0) {
    return PointSet(id, gaussian(rng, n, d, 1.0, offset), label);
}

/// Sets whose rows are a random permutation of the input's rows.
inline PointSet shuffled(const PointSet& s, std::mt19937_64& rng) {
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(s.size()));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::MatrixXd p(s.size(), s.dim());
    for (Eigen::Index i = 0; i < s.size(); ++i) p.row(i) = s.points.row(perm[static_cast<std::size_t>(i)]);
    return PointSet(s.id, p, s.label);
}

/// Labeled dataset with `per_class` sets per class; classes differ by mean.
inline SetDataset labeled_dataset(std::uint64_t seed, int classes, int per_class, Eigen::Index n, Eigen::Index d,
                                  double separation = 3.0) {
    std::mt19937_64 rng(seed);
    std::vector<PointSet> sets;
    SetId id = 1;
    for (int c = 1; c <= classes; ++c)
        for (int k = 0; k < per_class; ++k) sets.push_back(random_set(rng, id++, n, d, c, separation * c));
    return SetDataset(std::move(sets), d);
}

/// Two-block kernel: within-group value `in`, across `out`, unit diagonal.
inline Eigen::MatrixXd block_kernel(int n1, int n2, double in = 0.9, double out = 0.1) {
    const int n = n1 + n2;
    Eigen::MatrixXd k(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) k(i, j) = i == j ? 1.0 : ((i < n1) == (j < n1) ? in : out);
    return k;
}

inline SideKernels side_from(const std::vector<Eigen::MatrixXd>& mats) {
    std::vector<KernelMatrix> km;
    const auto n = static_cast<std::size_t>(mats.front().rows());
    std::vector<SetId> ids(n);
    std::iota(ids.begin(), ids.end(), SetId{100});
    for (std::size_t m = 0; m < mats.size(); ++m) km.push_back(KernelMatrix{kAllKernels[m], ids, ids, mats[m]});
    return make_side_kernels(km);
}

inline std::vector<HashCode> random_codes(std::mt19937_64& rng, std::size_t n, int bits) {
    std::vector<HashCode> out;
    for (std::size_t i = 0; i < n; ++i) {
        HashCode c(bits);
        for (int b = 0; b < bits; ++b) c.set(b, rng() & 1);
        out.push_back(c);
    }
    return out;
}

/// Per-test scratch directory under the system temp dir.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("sethash_" + tag + "_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

} // namespace testutil
