#pragma once

// Kernel matrix cache file, version 1:
//
//   "SHKM"  u32 version  u8 kernel  u64 params_hash
//   u64 rows  u64[rows] row ids  u64 cols  u64[cols] col ids
//   f64[rows*cols] values, row-major
//
// params_hash covers the kernel parameters and the content of both datasets,
// so a stale file is detected and recomputed rather than trusted.

#include <filesystem>
#include <optional>
#include <sstream>
#include <string>

#include "sethash/binary_io.hpp"
#include "sethash/kernels.hpp"

namespace sethash {

inline constexpr Magic kKernelMagic{'S', 'H', 'K', 'M'};
inline constexpr std::uint32_t kKernelVersion = 1;

inline std::uint64_t dataset_fingerprint(const SetDataset& data) {
    Fingerprint f;
    f.add<std::uint64_t>(static_cast<std::uint64_t>(data.dim()));
    for (const auto& s : data.sets()) {
        f.add(s.id);
        f.add<std::int32_t>(s.label.value_or(-1));
        f.add<std::uint64_t>(static_cast<std::uint64_t>(s.size()));
        f.add_bytes(s.points.data(), static_cast<std::size_t>(s.points.size()) * sizeof(double));
    }
    return f.value();
}

inline std::uint64_t kernel_cache_key(KernelId kernel, const KernelParams& params, std::uint64_t rows_fp,
                                      std::uint64_t cols_fp) {
    Fingerprint f;
    f.add<std::uint8_t>(static_cast<std::uint8_t>(kernel));
    f.add(params.mu);
    f.add(params.gamma_g);
    f.add(params.gamma_s);
    f.add(params.cov_ridge);
    f.add(rows_fp);
    f.add(cols_fp);
    return f.value();
}

inline void write_kernel_matrix(const std::string& path, const KernelMatrix& k, std::uint64_t params_hash) {
    BinaryWriter w;
    w.put_magic(kKernelMagic);
    w.put<std::uint32_t>(kKernelVersion);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(k.kernel));
    w.put<std::uint64_t>(params_hash);
    w.put<std::uint64_t>(k.row_ids.size());
    w.put_array(k.row_ids.data(), k.row_ids.size());
    w.put<std::uint64_t>(k.col_ids.size());
    w.put_array(k.col_ids.data(), k.col_ids.size());
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = k.values;
    w.put_array(rm.data(), static_cast<std::size_t>(rm.size()));
    w.save(path);
}

struct CachedKernel {
    KernelMatrix matrix;
    std::uint64_t params_hash = 0;
};

inline CachedKernel read_kernel_matrix(const std::string& path) {
    auto r = BinaryReader::open(path);
    r.expect_magic(kKernelMagic, "kernel matrix");
    r.expect_version(kKernelVersion, "kernel matrix");
    CachedKernel c;
    auto kid = r.get<std::uint8_t>();
    require(kid <= 1, ErrorCode::format_error, path + ": unknown kernel id");
    c.matrix.kernel = static_cast<KernelId>(kid);
    c.params_hash = r.get<std::uint64_t>();
    c.matrix.row_ids.resize(r.get<std::uint64_t>());
    r.get_array(c.matrix.row_ids.data(), c.matrix.row_ids.size());
    c.matrix.col_ids.resize(r.get<std::uint64_t>());
    r.get_array(c.matrix.col_ids.data(), c.matrix.col_ids.size());
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(
        static_cast<Eigen::Index>(c.matrix.row_ids.size()), static_cast<Eigen::Index>(c.matrix.col_ids.size()));
    r.get_array(rm.data(), static_cast<std::size_t>(rm.size()));
    require(r.at_end(), ErrorCode::format_error, path + ": trailing bytes");
    c.matrix.values = rm;
    return c;
}

/// Directory-backed cache. Files are named by their key; a file whose
/// header disagrees with the request is ignored and overwritten.
class KernelCache {
public:
    explicit KernelCache(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    KernelMatrix get_or_compute(const SetDataset& rows, const SetDataset& cols, KernelId kernel,
                                const KernelParams& params) {
        auto key = kernel_cache_key(kernel, params, dataset_fingerprint(rows), dataset_fingerprint(cols));
        std::ostringstream name;
        name << "kernel_" << std::hex << key << ".bin";
        auto path = (dir_ / name.str()).string();
        if (std::filesystem::exists(path)) {
            try {
                auto c = read_kernel_matrix(path);
                if (c.params_hash == key && c.matrix.kernel == kernel && c.matrix.row_ids == rows.ids() &&
                    c.matrix.col_ids == cols.ids()) {
                    ++hits_;
                    return std::move(c.matrix);
                }
            } catch (const Error&) {
                // unreadable entry: fall through and rebuild it
            }
        }
        ++misses_;
        auto k = kernel_matrix(rows, cols, kernel, params);
        write_kernel_matrix(path, k, key);
        return k;
    }

    int hits() const { return hits_; }
    int misses() const { return misses_; }

private:
    std::filesystem::path dir_;
    int hits_ = 0;
    int misses_ = 0;
};

} // namespace sethash
