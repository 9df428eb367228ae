#include <doctest.h>

#include <set>

#include "depthjitter/offset_policy.hpp"
#include "support.hpp"

using namespace depthjitter;
using namespace depthjitter::offset_policy;
using namespace testsupport;

TEST_CASE("variance matches a two-pass reference") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        std::uniform_int_distribution<std::size_t> dim(1, 40);
        const std::size_t w = dim(rng), h = dim(rng);
        const auto z = random_depth(rng, w, h, 0.0, 1.0 + 30.0 * trial);
        const std::vector<double> v(z.data().begin(), z.data().end());
        const double want = oracle_variance(v);
        CHECK(std::abs(compute_variance(z) - want) <= 1e-9 * std::max(want, 1e-300));
    }
    CHECK(compute_variance(DepthMap(5, 5, 3.25)) == 0.0);
}

TEST_CASE("variance stays accurate far from the origin") {
    // Naive sum-of-squares loses all digits here.
    std::vector<double> v;
    for (int i = 0; i < 1000; ++i) v.push_back(1e6 + (i % 2 == 0 ? 0.5 : -0.5));
    const DepthMap z(1000, 1, v);
    CHECK(compute_variance(z) == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("quantile follows linear interpolation between closest ranks") {
    const std::vector<double> v{0.0, 1.0, 2.0, 3.0};
    CHECK(quantile_linear(v, 0.25) == 0.75);
    CHECK(compute_threshold(v) == 0.75);
    const std::vector<double> shuffled{3.0, 0.0, 2.0, 1.0};
    CHECK(compute_threshold(shuffled) == 0.75);
    CHECK(quantile_linear(v, 0.0) == 0.0);
    CHECK(quantile_linear(v, 1.0) == 3.0);
    const std::vector<double> one{4.5};
    CHECK(compute_threshold(one) == 4.5);
}

TEST_CASE("quantile matches a sort-based reference exactly") {
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<std::size_t> len(1, 300);
    std::uniform_real_distribution<double> val(0.0, 50.0);
    std::uniform_real_distribution<double> qd(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> v(len(rng));
        for (auto& x : v) x = trial % 5 == 0 ? std::floor(val(rng) / 10.0) : val(rng);
        CHECK(compute_threshold(v) == oracle_quantile(v, 0.25));
        const double q = qd(rng);
        CHECK(quantile_linear(v, q) == oracle_quantile(v, q));
    }
}

TEST_CASE("threshold input validation") {
    CHECK_THROWS_AS(compute_threshold(std::vector<double>{}), Error);
    CHECK_THROWS_AS(compute_threshold(std::vector<double>{1.0, -1.0}), Error);
    CHECK_THROWS_AS(compute_threshold(std::vector<double>{1.0, NAN}), Error);
    CHECK_THROWS_AS(quantile_linear(std::vector<double>{1.0}, 1.5), Error);
}

TEST_CASE("classification is inclusive at the threshold") {
    CHECK(classify(0.75, 0.75) == VarianceClass::High);
    CHECK(classify(std::nextafter(0.75, 0.0), 0.75) == VarianceClass::Low);
    CHECK(classify(10.0, 0.75) == VarianceClass::High);
    CHECK(std::string(to_string(VarianceClass::High)) == "high");
    CHECK(std::string(to_string(VarianceClass::Low)) == "low");
}

TEST_CASE("adaptive interval scales the depth bounds") {
    const OffsetPolicy policy;
    CHECK(policy.alpha_scale == 0.5);
    CHECK(policy.beta_scale == 0.2);
    const auto iv = offset_interval(policy, VarianceClass::High, 2.0, 10.0);
    CHECK(iv.lo == -1.0);
    CHECK(iv.hi == 2.0);
    const auto flat = offset_interval(policy, VarianceClass::Low, 2.0, 10.0);
    CHECK(flat.lo == 0.0);
    CHECK(flat.hi == 0.0);
}

TEST_CASE("fixed interval ignores depth and variance") {
    OffsetPolicy policy;
    policy.mode = PolicyMode::FixedRange;
    CHECK(policy.range_lo == -4.0);
    CHECK(policy.range_hi == 15.0);
    for (auto cls : {VarianceClass::High, VarianceClass::Low}) {
        const auto iv = offset_interval(policy, cls, 3.0, 7.0);
        CHECK(iv.lo == -4.0);
        CHECK(iv.hi == 15.0);
    }
}

TEST_CASE("policy validation") {
    OffsetPolicy p;
    p.alpha_scale = -0.1;
    CHECK_THROWS_AS(p.validate(), Error);
    p = {};
    p.mode = PolicyMode::FixedRange;
    p.range_lo = 5.0;
    p.range_hi = 1.0;
    CHECK_THROWS_AS(p.validate(), Error);
    p = {};
    CHECK_THROWS_AS(offset_interval(p, VarianceClass::High, 10.0, 2.0), Error);
    CHECK_THROWS_AS(offset_interval(p, VarianceClass::High, -1.0, 2.0), Error);
}

TEST_CASE("adaptive draws stay in bounds and look uniform") {
    const OffsetPolicy policy;
    std::vector<double> draws;
    for (std::uint64_t k = 0; k < 10000; ++k) {
        const double dz = sample_offset(policy, VarianceClass::High, 2.0, 10.0, {7, "img", k});
        CHECK((dz >= -1.0 && dz <= 2.0));
        draws.push_back(dz);
    }
    CHECK(ks_uniform(draws, -1.0, 2.0) < ks_critical_1pct(draws.size()));
}

TEST_CASE("fixed draws stay in bounds and look uniform") {
    OffsetPolicy policy;
    policy.mode = PolicyMode::FixedRange;
    std::vector<double> draws;
    for (std::uint64_t k = 0; k < 10000; ++k) {
        const double dz = sample_offset(policy, VarianceClass::Low, 2.0, 10.0, {3, "img_" + std::to_string(k), 0});
        CHECK((dz >= -4.0 && dz <= 15.0));
        draws.push_back(dz);
    }
    CHECK(ks_uniform(draws, -4.0, 15.0) < ks_critical_1pct(draws.size()));
}

TEST_CASE("low-variance images are never shifted under the adaptive policy") {
    const OffsetPolicy policy;
    for (std::uint64_t k = 0; k < 1000; ++k) {
        CHECK(sample_offset(policy, VarianceClass::Low, 2.0, 10.0, {k, "flat", k}) == 0.0);
    }
}

TEST_CASE("offset streams are deterministic and independent") {
    const OffsetPolicy policy;
    const SeedSpec a{42, "reef_001", 0};
    CHECK(sample_offset(policy, VarianceClass::High, 1.0, 9.0, a) ==
          sample_offset(policy, VarianceClass::High, 1.0, 9.0, a));

    std::set<double> seen;
    for (const auto& spec : {SeedSpec{42, "reef_001", 0}, SeedSpec{43, "reef_001", 0}, SeedSpec{42, "reef_002", 0},
                             SeedSpec{42, "reef_001", 1}}) {
        seen.insert(sample_offset(policy, VarianceClass::High, 1.0, 9.0, spec));
    }
    CHECK(seen.size() == 4);

    StreamRng r1(a), r2(a);
    for (int i = 0; i < 100; ++i) CHECK(r1.next_u64() == r2.next_u64());
    StreamRng r3(a);
    for (int i = 0; i < 10000; ++i) {
        const double u = r3.next_unit();
        CHECK((u >= 0.0 && u < 1.0));
    }
    CHECK(hash_id("abc") == hash_id("abc"));
    CHECK(hash_id("abc") != hash_id("abd"));
}

TEST_CASE("depth bounds") {
    std::vector<double> v(1000);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i) / 10.0;
    v[0] = 0.0;
    v[999] = 500.0;  // outlier
    const DepthMap z(100, 10, v);
    const auto plain = depth_bounds(z);
    CHECK(plain.min == 0.0);
    CHECK(plain.max == 500.0);
    const auto robust = depth_bounds(z, true);
    CHECK(robust.min == doctest::Approx(oracle_quantile(v, 0.01)));
    CHECK(robust.max == doctest::Approx(oracle_quantile(v, 0.99)));
    CHECK(robust.max < 100.0);
}
