#pragma once

// Model file, version 1, little-endian:
//
//   "SHMD"  u32 version  u32 d  u32 R
//   config   i32 T  f64 alpha beta nu1 nu2  u8 has_nu3 f64 nu3  u8 has_nu4 f64 nu4
//            i32 max_outer  f64 conv_tol balance_tol  i32 max_sweeps  u64 pool_cap  u64 seed
//   kernel   f64 mu gamma_g gamma_s cov_ridge
//   anchors  u64 count, then per anchor: u64 id  i32 label (-1 none)  u32 n  f64[n*d]
//   splits   q side then r side, R each:
//            u8 constant_flag  i8 constant  u32 T'  T' x (u8 kernel u64 a u64 b f64 eps f64 lambda)

#include <string>

#include "sethash/binary_io.hpp"
#include "sethash/trainer.hpp"

namespace sethash {

inline constexpr Magic kModelMagic{'S', 'H', 'M', 'D'};
inline constexpr std::uint32_t kModelVersion = 1;

inline BinaryWriter serialize_model(const HashModel& m) {
    BinaryWriter w;
    w.put_magic(kModelMagic);
    w.put<std::uint32_t>(kModelVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(m.dim));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(m.bits()));
    const auto& c = m.config;
    w.put<std::int32_t>(c.rounds);
    w.put(c.alpha);
    w.put(c.beta);
    w.put(c.nu1);
    w.put(c.nu2);
    w.put<std::uint8_t>(c.nu3.has_value());
    w.put(c.nu3.value_or(0.0));
    w.put<std::uint8_t>(c.nu4.has_value());
    w.put(c.nu4.value_or(0.0));
    w.put<std::int32_t>(c.max_outer);
    w.put(c.conv_tol);
    w.put(c.balance_tol);
    w.put<std::int32_t>(c.max_sweeps);
    w.put<std::uint64_t>(c.pool_cap);
    w.put<std::uint64_t>(c.seed);
    w.put(c.kernel.mu);
    w.put(c.kernel.gamma_g);
    w.put(c.kernel.gamma_s);
    w.put(c.kernel.cov_ridge);

    w.put<std::uint64_t>(m.anchors.size());
    for (const auto& a : m.anchors) {
        w.put<std::uint64_t>(a.id);
        w.put<std::int32_t>(a.label.value_or(-1));
        w.put<std::uint32_t>(static_cast<std::uint32_t>(a.size()));
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = a.points;
        w.put_array(rm.data(), static_cast<std::size_t>(rm.size()));
    }
    for (const auto* side : {&m.splits_q, &m.splits_r})
        for (const auto& s : *side) {
            w.put<std::uint8_t>(s.constant.has_value());
            w.put<std::int8_t>(static_cast<std::int8_t>(s.constant.value_or(0)));
            w.put<std::uint32_t>(static_cast<std::uint32_t>(s.learners.size()));
            for (std::size_t t = 0; t < s.learners.size(); ++t) {
                const auto& f = s.learners[t];
                w.put<std::uint8_t>(static_cast<std::uint8_t>(f.kernel));
                w.put<std::uint64_t>(f.anchor_a);
                w.put<std::uint64_t>(f.anchor_b);
                w.put(f.epsilon);
                w.put(s.weights[t]);
            }
        }
    return w;
}

inline HashModel deserialize_model(BinaryReader& r) {
    r.expect_magic(kModelMagic, "model");
    r.expect_version(kModelVersion, "model");
    HashModel m;
    m.dim = r.get<std::uint32_t>();
    auto bits = r.get<std::uint32_t>();
    require(m.dim >= 1 && bits >= 1, ErrorCode::format_error, r.origin() + ": bad model header");
    auto& c = m.config;
    c.bits = static_cast<int>(bits);
    c.rounds = r.get<std::int32_t>();
    c.alpha = r.get<double>();
    c.beta = r.get<double>();
    c.nu1 = r.get<double>();
    c.nu2 = r.get<double>();
    bool has3 = r.get<std::uint8_t>() != 0;
    double nu3 = r.get<double>();
    if (has3) c.nu3 = nu3;
    bool has4 = r.get<std::uint8_t>() != 0;
    double nu4 = r.get<double>();
    if (has4) c.nu4 = nu4;
    c.max_outer = r.get<std::int32_t>();
    c.conv_tol = r.get<double>();
    c.balance_tol = r.get<double>();
    c.max_sweeps = r.get<std::int32_t>();
    c.pool_cap = r.get<std::uint64_t>();
    c.seed = r.get<std::uint64_t>();
    c.kernel.mu = r.get<double>();
    c.kernel.gamma_g = r.get<double>();
    c.kernel.gamma_s = r.get<double>();
    c.kernel.cov_ridge = r.get<double>();

    auto n_anchors = r.get<std::uint64_t>();
    for (std::uint64_t i = 0; i < n_anchors; ++i) {
        auto id = r.get<std::uint64_t>();
        auto label = r.get<std::int32_t>();
        auto n = r.get<std::uint32_t>();
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(n, m.dim);
        r.get_array(rm.data(), static_cast<std::size_t>(rm.size()));
        std::optional<Label> lab;
        if (label != -1) lab = label;
        m.anchors.emplace_back(id, Eigen::MatrixXd(rm), lab);
    }
    for (auto* side : {&m.splits_q, &m.splits_r}) {
        side->resize(bits);
        for (auto& s : *side) {
            bool is_const = r.get<std::uint8_t>() != 0;
            auto cval = r.get<std::int8_t>();
            if (is_const) s.constant = static_cast<int>(cval);
            auto t = r.get<std::uint32_t>();
            for (std::uint32_t k = 0; k < t; ++k) {
                WeakLearner f;
                auto kid = r.get<std::uint8_t>();
                require(kid <= 1, ErrorCode::format_error, r.origin() + ": unknown kernel id");
                f.kernel = static_cast<KernelId>(kid);
                f.anchor_a = r.get<std::uint64_t>();
                f.anchor_b = r.get<std::uint64_t>();
                f.epsilon = r.get<double>();
                s.learners.push_back(f);
                s.weights.push_back(r.get<double>());
            }
        }
    }
    require(r.at_end(), ErrorCode::format_error, r.origin() + ": trailing bytes in model");
    m.validate();
    return m;
}

inline void save_model(const HashModel& m, const std::string& path) { serialize_model(m).save(path); }

inline HashModel load_model(const std::string& path) {
    auto r = BinaryReader::open(path);
    return deserialize_model(r);
}

} // namespace sethash
