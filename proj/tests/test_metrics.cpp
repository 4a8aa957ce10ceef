#include <doctest.h>

#include <random>

#include "driftstream/metrics.hpp"
#include "oracles.hpp"

using namespace driftstream;

TEST_CASE("contingency counts and marginals") {
    SUBCASE("identity partition gives a diagonal") {
        const std::vector<ClassId> truth = {1, 1, 2, 2};
        const auto c = build_contingency(truth, truth);
        CHECK(c.n_classes == 2);
        CHECK(c.n_clusters == 2);
        CHECK(c.at(0, 0) == 2);
        CHECK(c.at(1, 1) == 2);
        CHECK(c.at(0, 1) == 0);
        CHECK(c.total == 4);
    }
    SUBCASE("crossed partition fills every cell") {
        const std::vector<ClassId> truth = {1, 1, 2, 2};
        const std::vector<ClassId> pred = {1, 2, 1, 2};
        const auto c = build_contingency(truth, pred);
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j) CHECK(c.at(i, j) == 1);
        CHECK(c.row_sums == std::vector<std::int64_t>{2, 2});
        CHECK(c.col_sums == std::vector<std::int64_t>{2, 2});
    }
    SUBCASE("single sample") {
        const std::vector<ClassId> one = {7};
        const auto c = build_contingency(one, one);
        CHECK(c.n_classes == 1);
        CHECK(c.n_clusters == 1);
        CHECK(c.total == 1);
    }
    SUBCASE("length mismatch throws") {
        const std::vector<ClassId> truth = {1, 2};
        const std::vector<ClassId> pred = {1};
        CHECK_THROWS_AS(build_contingency(truth, pred), StreamError);
    }
}

TEST_CASE("ari fixed values") {
    const std::vector<ClassId> truth = {1, 1, 2, 2};
    CHECK(ari(build_contingency(truth, truth)) == 1.0);

    const std::vector<ClassId> crossed = {1, 2, 1, 2};
    CHECK(ari(build_contingency(truth, crossed)) == -0.5);

    // relabeling the prediction must not change the score
    const std::vector<ClassId> permuted = {9, 9, 4, 4};
    CHECK(ari(build_contingency(truth, permuted)) == 1.0);

    const std::vector<ClassId> one = {1};
    CHECK_THROWS_AS(ari(build_contingency(one, one)), StreamError);
}

TEST_CASE("ari of two trivially identical pair structures is 1") {
    // both partitions put everything in one group: denominator is zero
    const std::vector<ClassId> truth = {3, 3, 3, 3};
    const std::vector<ClassId> pred = {8, 8, 8, 8};
    CHECK(ari(build_contingency(truth, pred)) == 1.0);
}

TEST_CASE("purity fixed values") {
    SUBCASE("pure clusters score 1") {
        const std::vector<ClassId> truth = {1, 1, 2, 2, 2};
        const std::vector<ClassId> pred = {5, 5, 6, 6, 6};
        CHECK(purity(build_contingency(truth, pred)) == 1.0);
    }
    SUBCASE("2/3 and 1 average to exactly 5/6") {
        const std::vector<ClassId> truth = {1, 1, 2, 2};
        const std::vector<ClassId> pred = {1, 1, 1, 2};
        CHECK(purity(build_contingency(truth, pred)) == 5.0 / 6.0);
    }
    SUBCASE("one cluster split 50/50 scores 0.5") {
        const std::vector<ClassId> truth = {1, 2};
        const std::vector<ClassId> pred = {3, 3};
        CHECK(purity(build_contingency(truth, pred)) == 0.5);
    }
    SUBCASE("table without samples throws") {
        Contingency empty;
        empty.n_classes = 1;
        empty.n_clusters = 1;
        empty.counts = {0};
        empty.row_sums = {0};
        empty.col_sums = {0};
        CHECK_THROWS_AS(purity(empty), StreamError);
    }
}

TEST_CASE("metrics match the brute-force oracles on random instances") {
    std::mt19937_64 rng(20240517);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng() % 49;
        const int n_classes = 1 + static_cast<int>(rng() % 6);
        const int n_clusters = 1 + static_cast<int>(rng() % 6);
        std::vector<ClassId> truth(n), pred(n);
        for (std::size_t i = 0; i < n; ++i) {
            truth[i] = static_cast<ClassId>(rng() % n_classes);
            pred[i] = static_cast<ClassId>(rng() % n_clusters);
        }
        const auto c = build_contingency(truth, pred);
        CHECK(std::abs(ari(c) - oracles::pair_counting_ari(truth, pred)) <= 1e-12);
        CHECK(std::abs(purity(c) - oracles::direct_purity(truth, pred)) <= 1e-12);
    }
}

TEST_CASE("independent random partitions score near zero on average") {
    std::mt19937_64 rng(7);
    double sum = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<ClassId> truth(200), pred(200);
        for (std::size_t i = 0; i < 200; ++i) {
            truth[i] = static_cast<ClassId>(rng() % 4);
            pred[i] = static_cast<ClassId>(rng() % 4);
        }
        sum += ari(build_contingency(truth, pred));
    }
    const double mean = sum / 1000.0;
    CHECK(mean >= -0.05);
    CHECK(mean <= 0.05);
}

TEST_CASE("appending a pure cluster never lowers purity") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 5 + rng() % 40;
        std::vector<ClassId> truth(n), pred(n);
        for (std::size_t i = 0; i < n; ++i) {
            truth[i] = static_cast<ClassId>(rng() % 4);
            pred[i] = static_cast<ClassId>(rng() % 4);
        }
        const double before = purity(build_contingency(truth, pred));

        auto truth2 = truth;
        auto pred2 = pred;
        const std::size_t extra = 1 + rng() % 5;
        for (std::size_t i = 0; i < extra; ++i) {
            truth2.push_back(42);
            pred2.push_back(100);  // new single-class cluster
        }
        const double after = purity(build_contingency(truth2, pred2));
        CHECK(after >= before - 1e-12);
        CHECK(after <= 1.0);
    }
}
