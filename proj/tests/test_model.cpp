#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "driftstream/model.hpp"

using namespace driftstream;

namespace {

MicroCluster make_cluster(ClusterId id, std::vector<double> center, double radius, double k,
                          Label label = 0, std::int64_t density = 1) {
    MicroCluster mc;
    mc.id = id;
    mc.center = std::move(center);
    mc.radius = radius;
    mc.kernel_radius = radius / k;
    mc.density = density;
    mc.kernel_count = 1;
    mc.label = label;
    return mc;
}

}  // namespace

TEST_CASE("fresh empty model has no violations") {
    ClusterModel model;
    EngineConfig cfg;
    CHECK(validate_model(model, cfg).empty());
}

TEST_CASE("asymmetric edge is reported") {
    EngineConfig cfg;
    ClusterModel model;
    model.clusters.emplace(1, make_cluster(1, {0.0, 0.0}, 1.0, cfg.kernel_divisor));
    model.clusters.emplace(2, make_cluster(2, {3.0, 0.0}, 1.0, cfg.kernel_divisor));
    model.clusters.at(1).edges.insert(2);  // one direction only
    model.next_id = 3;

    const auto violations = validate_model(model, cfg);
    REQUIRE(violations.size() == 1);
    CHECK(violations.front() == "asymmetric edge (1,2)");
}

TEST_CASE("linked macro-clusters with different labels are a component mismatch") {
    EngineConfig cfg;
    cfg.density_threshold = 1;
    ClusterModel model;
    model.clusters.emplace(1, make_cluster(1, {0.0, 0.0}, 1.0, cfg.kernel_divisor, 3, 5));
    model.clusters.emplace(2, make_cluster(2, {1.0, 0.0}, 1.0, cfg.kernel_divisor, 5, 5));
    model.clusters.at(1).edges.insert(2);
    model.clusters.at(2).edges.insert(1);
    model.next_id = 3;
    model.next_label = 6;

    const auto violations = validate_model(model, cfg);
    REQUIRE(violations.size() == 1);
    CHECK(violations.front().find("component label mismatch") != std::string::npos);
}

TEST_CASE("same label on disconnected components is reported") {
    EngineConfig cfg;
    cfg.density_threshold = 1;
    ClusterModel model;
    model.clusters.emplace(1, make_cluster(1, {0.0, 0.0}, 1.0, cfg.kernel_divisor, 4, 9));
    model.clusters.emplace(2, make_cluster(2, {9.0, 0.0}, 1.0, cfg.kernel_divisor, 4, 9));
    model.next_id = 3;
    model.next_label = 5;

    const auto violations = validate_model(model, cfg);
    REQUIRE(violations.size() == 1);
    CHECK(violations.front().find("shared by distinct components") != std::string::npos);
}

TEST_CASE("broken kernel geometry and counters are reported") {
    EngineConfig cfg;
    ClusterModel model;
    auto mc = make_cluster(1, {0.0}, 1.0, cfg.kernel_divisor);
    mc.kernel_radius = 2.0;  // kernel outside the cluster
    mc.kernel_count = 5;     // above density
    model.clusters.emplace(1, std::move(mc));
    model.next_id = 2;

    const auto violations = validate_model(model, cfg);
    CHECK(violations.size() >= 2);
}

TEST_CASE("label below promotion density is reported") {
    EngineConfig cfg;
    cfg.density_threshold = 10;
    ClusterModel model;
    model.clusters.emplace(1, make_cluster(1, {0.0}, 1.0, cfg.kernel_divisor, 1, 3));
    model.next_id = 2;
    model.next_label = 2;

    const auto violations = validate_model(model, cfg);
    REQUIRE(violations.size() == 1);
    CHECK(violations.front().find("below density threshold") != std::string::npos);
}

TEST_CASE("config validation rejects bad parameters") {
    EngineConfig cfg;
    CHECK_NOTHROW(validate_config(cfg));

    EngineConfig bad_k = cfg;
    bad_k.kernel_divisor = 1.0;
    CHECK_THROWS_AS(validate_config(bad_k), StreamError);

    EngineConfig bad_d = cfg;
    bad_d.density_threshold = 0;
    CHECK_THROWS_AS(validate_config(bad_d), StreamError);

    EngineConfig bad_window = cfg;
    bad_window.radius_policy = AdaptiveRadius{0};
    CHECK_THROWS_AS(validate_config(bad_window), StreamError);

    EngineConfig bad_radius = cfg;
    bad_radius.radius_policy = FixedRadius{0.0};
    CHECK_THROWS_AS(validate_config(bad_radius), StreamError);
}

TEST_CASE("squared distance helpers agree") {
    const std::vector<double> a = {1.0, 2.0, 3.0};
    const std::vector<double> b = {4.0, 6.0, 3.0};
    CHECK(squared_distance(a, b) == doctest::Approx(25.0));
    CHECK(distance(a, b) == doctest::Approx(5.0));
    // bounded variant may only overshoot once the bound is exceeded
    CHECK(squared_distance_bounded(a, b, 100.0) == doctest::Approx(25.0));
    CHECK(squared_distance_bounded(a, b, 1.0) >= 1.0);
}
