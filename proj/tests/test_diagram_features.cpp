#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "tfr/diagram_features.hpp"
#include "tfr/random.hpp"

using namespace tfr;

namespace {

std::vector<PersistencePair> random_pairs(std::uint64_t seed, std::size_t max_n, double cap,
                                          std::size_t min_n = 1) {
    auto rng = make_rng(seed, 7);
    auto unit = [&rng] { return static_cast<double>(rng() >> 11) / 9007199254740992.0; };
    std::size_t n = min_n + rng() % (max_n - min_n + 1);
    std::vector<PersistencePair> pairs;
    for (std::size_t i = 0; i < n; ++i) {
        double b = unit() * cap;
        double d = b + unit() * (cap - b);
        pairs.push_back({b, d});
    }
    return pairs;
}

}  // namespace

TEST_CASE("entropy fixtures") {
    CHECK(persistence_entropy({{0.0, 1.0}, {0.0, 1.0}}) ==
          Catch::Approx(std::log(2.0)).margin(1e-9));
    CHECK(persistence_entropy({{0.0, 1.0}}) == 0.0);
    CHECK(persistence_entropy({}) == 0.0);
    CHECK(persistence_entropy({{0.0, 1.0}, {0.0, 3.0}}) == Catch::Approx(0.5623).margin(1e-4));
    CHECK(normalized_persistence_entropy({{0.0, 1.0}, {0.0, 1.0}}) == Catch::Approx(1.0).margin(1e-12));
    CHECK(normalized_persistence_entropy({{0.0, 1.0}}) == 0.0);
}

TEST_CASE("normalized entropy stays in the unit interval") {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        auto pairs = random_pairs(seed, 12, 3.0);
        double h = normalized_persistence_entropy(pairs);
        REQUIRE(h >= 0.0);
        REQUIRE(h <= 1.0 + 1e-12);
    }
    // Equal persistences saturate the bound.
    std::vector<PersistencePair> eq{{0.0, 2.0}, {1.0, 3.0}, {0.5, 2.5}};
    CHECK(normalized_persistence_entropy(eq) == Catch::Approx(1.0).margin(1e-12));
    // Unequal ones do not.
    std::vector<PersistencePair> uneq{{0.0, 2.0}, {0.0, 0.5}};
    CHECK(normalized_persistence_entropy(uneq) < 1.0 - 1e-6);
}

TEST_CASE("closed-form amplitude fixtures") {
    CHECK(bottleneck_amplitude({{0.0, 2.0}}) == Catch::Approx(1.0).margin(1e-12));
    CHECK(bottleneck_amplitude({}) == 0.0);
    CHECK(wasserstein_amplitude({{0.0, 1.0}, {0.0, 1.0}}, 2.0) == Catch::Approx(1.0).margin(1e-12));
    CHECK(wasserstein_amplitude({}) == 0.0);
    // Rank curve of a single (0,1) bar over [0,2]: 50 of 100 grid points hit 1.
    CHECK(betti_amplitude({{0.0, 1.0}}, 2.0) ==
          Catch::Approx(std::sqrt(50.0 * 2.0 / 99.0)).margin(1e-12));
}

TEST_CASE("grid amplitudes match their integrals and frozen values") {
    std::vector<PersistencePair> two{{0.0, 2.0}};
    // One tent of height 1 over [0,2]: integral of tent^2 is 2/3.
    double land = landscape_amplitude(two, 2.0);
    CHECK(land == Catch::Approx(std::sqrt(2.0 / 3.0)).margin(1e-3));
    CHECK(land == Catch::Approx(0.81645492612674375).epsilon(1e-14));
    // Weight (d-b)=2 scales the same tent.
    double sil = silhouette_amplitude(two, 2.0);
    CHECK(sil == Catch::Approx(2.0 * land).margin(1e-12));
    CHECK(sil == Catch::Approx(1.6329098522534875).epsilon(1e-14));
    double heat = heat_amplitude(two, 2.0, 100, 0.2);
    CHECK(heat > 0.0);
    CHECK(heat == Catch::Approx(1.0536254608829969).epsilon(1e-14));
}

TEST_CASE("adding a pair never shrinks the monotone metrics") {
    double cap = 3.0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto pairs = random_pairs(seed, 8, cap);
        auto extra = random_pairs(seed + 5000, 1, cap);
        auto grown = pairs;
        grown.push_back(extra[0]);
        CHECK(wasserstein_amplitude(grown) >= wasserstein_amplitude(pairs) - 1e-12);
        CHECK(betti_amplitude(grown, cap) >= betti_amplitude(pairs, cap) - 1e-12);
        CHECK(silhouette_amplitude(grown, cap) >= silhouette_amplitude(pairs, cap) - 1e-12);
        CHECK(grown.size() > pairs.size());
    }
}

TEST_CASE("scaling the diagram scales bottleneck and wasserstein exactly") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto pairs = random_pairs(seed, 10, 2.0);
        double c = 0.25 + static_cast<double>(seed) * 0.15;
        auto scaled = pairs;
        for (auto& pr : scaled) {
            pr.birth *= c;
            pr.death *= c;
        }
        CHECK(bottleneck_amplitude(scaled) ==
              Catch::Approx(c * bottleneck_amplitude(pairs)).epsilon(1e-9));
        CHECK(wasserstein_amplitude(scaled) ==
              Catch::Approx(c * wasserstein_amplitude(pairs)).epsilon(1e-9));
        CHECK(persistence_entropy(scaled) == Catch::Approx(persistence_entropy(pairs)).margin(1e-9));
    }
}

TEST_CASE("features ignore pair order bit for bit") {
    PersistenceDiagram dg;
    dg.cap = 2.0;
    dg.h0 = random_pairs(3, 10, 2.0, 4);
    dg.h1 = random_pairs(4, 6, 2.0, 3);
    PersistenceDiagram shuffled = dg;
    std::reverse(shuffled.h0.begin(), shuffled.h0.end());
    std::rotate(shuffled.h1.begin(), shuffled.h1.begin() + 2, shuffled.h1.end());
    auto a = diagram_feature_vector(dg);
    auto b = diagram_feature_vector(shuffled);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == b[i]);
}

TEST_CASE("feature vector follows the id table") {
    // Unit-square diagram: h0 = three edge merges and the essential bar,
    // h1 = the loop from 1 to sqrt(2).
    double rt2 = std::numbers::sqrt2;
    PersistenceDiagram sq;
    sq.cap = rt2;
    sq.h0 = {{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}, {0.0, rt2}};
    sq.h1 = {{1.0, rt2}};
    auto v = diagram_feature_vector(sq);
    REQUIRE(v.size() == kDiagramFeatureCount);
    CHECK(v[0] == Catch::Approx(rt2 / 2.0).margin(1e-12));          // bottleneck h0
    CHECK(v[1] == Catch::Approx((rt2 - 1.0) / 2.0).margin(1e-12));  // bottleneck h1
    CHECK(v[2] == Catch::Approx(std::sqrt(2.5)).margin(1e-12));     // wasserstein h0
    CHECK(v[3] == Catch::Approx(1.0 - 1.0 / rt2).margin(1e-12));    // wasserstein h1
    for (std::size_t i = 4; i < 12; ++i) CHECK(v[i] > 0.0);
    CHECK(v[12] == Catch::Approx(0.99098390463643593).epsilon(1e-12));
    CHECK(v[13] == 0.0);  // single h1 pair
    CHECK(v[14] == Catch::Approx(1.3737953989580625).epsilon(1e-12));
    CHECK(v[15] == 0.0);
    CHECK(v[16] == 4.0);
    CHECK(v[17] == 1.0);
    for (double x : v) {
        REQUIRE(std::isfinite(x));
        REQUIRE(x >= 0.0);
    }
}

TEST_CASE("empty diagram maps to the zero vector") {
    PersistenceDiagram dg;
    dg.cap = 1.5;
    auto v = diagram_feature_vector(dg);
    REQUIRE(v.size() == 18);
    for (double x : v) CHECK(x == 0.0);
}

TEST_CASE("feature names are stable") {
    CHECK(diagram_feature_name(0) == "tda_bottleneck_h0");
    CHECK(diagram_feature_name(1) == "tda_bottleneck_h1");
    CHECK(diagram_feature_name(2) == "tda_wasserstein_h0");
    CHECK(diagram_feature_name(5) == "tda_betti_h1");
    CHECK(diagram_feature_name(6) == "tda_landscape_h0");
    CHECK(diagram_feature_name(9) == "tda_silhouette_h1");
    CHECK(diagram_feature_name(10) == "tda_heat_h0");
    CHECK(diagram_feature_name(12) == "tda_entropy_norm_h0");
    CHECK(diagram_feature_name(15) == "tda_entropy_h1");
    CHECK(diagram_feature_name(16) == "tda_count_h0");
    CHECK(diagram_feature_name(17) == "tda_count_h1");
    CHECK_THROWS_AS(diagram_feature_name(18), OutOfBounds);
}
