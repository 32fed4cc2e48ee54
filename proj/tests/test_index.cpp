#include <gtest/gtest.h>

#include <fstream>

#include "oracles.hpp"
#include "support.hpp"

using namespace sethash;
using testutil::TempDir;

namespace {

CodeIndex random_index(std::mt19937_64& rng, std::size_t n, int bits, bool labeled = true) {
    auto codes = testutil::random_codes(rng, n, bits);
    std::vector<SetId> ids(n);
    std::iota(ids.begin(), ids.end(), SetId{1});
    std::shuffle(ids.begin(), ids.end(), rng);
    std::vector<std::optional<Label>> labels;
    if (labeled)
        for (std::size_t i = 0; i < n; ++i) labels.push_back(static_cast<Label>(1 + rng() % 5));
    return CodeIndex(codes, ids, labels);
}

std::set<SetId> id_set(const std::vector<RankedResult>& v) {
    std::set<SetId> s;
    for (const auto& r : v) s.insert(r.id);
    return s;
}

} // namespace

TEST(BuildIndex, EmptyAndDuplicates) {
    CodeIndex empty = build_index({}, {});
    EXPECT_TRUE(empty.empty());
    auto q = HashCode::from_string("1010");
    EXPECT_TRUE(rank(empty, q, 5).empty());
    EXPECT_TRUE(lookup_radius(empty, q, 2).empty());

    std::vector<HashCode> two{HashCode::from_string("0000"), HashCode::from_string("1111")};
    try {
        build_index(two, {4, 4});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::invalid_argument);
    }
    std::vector<HashCode> ragged{HashCode(4), HashCode(5)};
    EXPECT_THROW(build_index(ragged, {1, 2}), Error);

    std::mt19937_64 rng(1577);
    EXPECT_EQ(random_index(rng, 1577, 24).size(), 1577u);
}

TEST(Rank, ExactMatchFirstAndFullSort) {
    std::vector<HashCode> codes{HashCode::from_string("0011"), HashCode::from_string("1111"),
                                HashCode::from_string("0001"), HashCode::from_string("0011")};
    auto idx = build_index(codes, {9, 3, 5, 2});
    auto top = rank(idx, HashCode::from_string("0011"), 1);
    ASSERT_EQ(top.size(), 1u);
    EXPECT_EQ(top[0], (RankedResult{2, 0, 1}));
    auto all = rank(idx, HashCode::from_string("0011"), 100);
    std::vector<SetId> order;
    for (const auto& r : all) order.push_back(r.id);
    EXPECT_EQ(order, (std::vector<SetId>{2, 9, 5, 3}));
    EXPECT_EQ(all.back().distance, 2);
    EXPECT_EQ(all.back().rank, 4);
    EXPECT_THROW(rank(idx, HashCode(5), 1), Error);
}

TEST(Rank, UpToSixteenHundred) {
    std::mt19937_64 rng(3);
    auto idx = random_index(rng, 2000, 24);
    EXPECT_EQ(rank(idx, idx.codes()[0], 1600).size(), 1600u);
    auto small = random_index(rng, 50, 24);
    EXPECT_EQ(rank(small, small.codes()[0], 1600).size(), 50u);
}

TEST(LookupRadius, Extremes) {
    std::mt19937_64 rng(4);
    auto idx = random_index(rng, 60, 6);
    auto q = idx.codes()[7];
    EXPECT_EQ(lookup_radius(idx, q, 6).size(), 60u);
    for (const auto& r : lookup_radius(idx, q, 0)) EXPECT_EQ(r.distance, 0);
    EXPECT_TRUE(id_set(lookup_radius(idx, q, 0)).count(idx.ids()[7]));
    EXPECT_THROW(lookup_radius(idx, q, 7), Error);
    EXPECT_THROW(lookup_radius(idx, q, -1), Error);
}

TEST(Retrieval, MatchesBruteForceScan) {
    std::mt19937_64 rng(500);
    for (int t = 0; t < 500; ++t) {
        std::size_t n = rng() % 201;
        int bits = 1 + static_cast<int>(rng() % 64);
        auto idx = random_index(rng, n, bits, false);
        auto q = testutil::random_codes(rng, 1, bits)[0];
        auto full = oracle::scan_sorted(idx, q);
        std::size_t k = rng() % (n + 5);
        auto got = rank(idx, q, k);
        std::vector<RankedResult> want(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(std::min(k, n)));
        ASSERT_EQ(got, want) << "instance " << t;
        int radius = static_cast<int>(rng() % (bits + 1));
        std::vector<RankedResult> within;
        for (const auto& r : full)
            if (r.distance <= radius) within.push_back(r);
        for (std::size_t i = 0; i < within.size(); ++i) within[i].rank = static_cast<int>(i + 1);
        ASSERT_EQ(lookup_radius(idx, q, radius), within) << "instance " << t;
    }
}

TEST(Retrieval, RadiusNestingAndFullAgreement) {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 50; ++t) {
        int bits = 1 + static_cast<int>(rng() % 32);
        auto idx = random_index(rng, 1 + rng() % 100, bits, false);
        auto q = testutil::random_codes(rng, 1, bits)[0];
        for (int r = 0; r < bits; ++r) {
            auto a = id_set(lookup_radius(idx, q, r)), b = id_set(lookup_radius(idx, q, r + 1));
            EXPECT_TRUE(std::includes(b.begin(), b.end(), a.begin(), a.end()));
        }
        EXPECT_EQ(id_set(rank(idx, q, idx.size())), id_set(lookup_radius(idx, q, bits)));
    }
}

TEST(CodesIo, RoundTripWithAndWithoutLabels) {
    TempDir tmp("index");
    std::mt19937_64 rng(8);
    for (bool labeled : {true, false}) {
        auto idx = random_index(rng, 37, 70, labeled);
        write_codes(idx, tmp.file("c.bin"));
        auto back = read_codes(tmp.file("c.bin"));
        EXPECT_EQ(back.codes(), idx.codes());
        EXPECT_EQ(back.ids(), idx.ids());
        EXPECT_EQ(back.labels(), idx.labels());
        EXPECT_EQ(back.has_labels(), labeled);
    }
    write_codes(CodeIndex{}, tmp.file("empty.bin"));
    EXPECT_TRUE(read_codes(tmp.file("empty.bin")).empty());

    auto bytes = testutil::read_bytes(tmp.file("c.bin"));
    std::ofstream(tmp.file("extra.bin"), std::ios::binary) << bytes << "x";
    try {
        read_codes(tmp.file("extra.bin"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::format_error);
    }
    try {
        read_codes(tmp.file("none.bin"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::missing_file);
    }
}
