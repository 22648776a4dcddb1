#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "tfr/cv.hpp"
#include "tfr/gnb.hpp"
#include "tfr/gradient_boosting.hpp"
#include "tfr/random.hpp"
#include "tfr/random_forest.hpp"
#include "tfr/tree.hpp"

using namespace tfr;

namespace {

std::vector<std::size_t> iota_ids(std::size_t n) {
    std::vector<std::size_t> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    return ids;
}

struct Blobs {
    Matrix x;
    std::vector<int> y;
};

// n_per_class samples per class; class c is centered at 10 on the features
// with f % n_classes == c and at 0 elsewhere. Isotropic mode adds noise
// everywhere; otherwise only a class's own features are noisy, which keeps
// the clusters axis-clean (left-edge split thresholds then generalize
// perfectly, making an exact accuracy-1.0 example reproducible).
Blobs make_blobs(std::size_t n_per_class, int n_classes, std::size_t n_features,
                 double noise_sigma, std::uint64_t seed, bool isotropic = true) {
    Blobs b;
    b.x = Matrix(n_per_class * n_classes, n_features);
    auto rng = make_rng(seed, 0);
    auto gauss = [&rng] {
        double u1 = (static_cast<double>(rng() >> 11) + 0.5) / 9007199254740992.0;
        double u2 = (static_cast<double>(rng() >> 11) + 0.5) / 9007199254740992.0;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    };
    std::size_t row = 0;
    for (int c = 0; c < n_classes; ++c) {
        for (std::size_t i = 0; i < n_per_class; ++i, ++row) {
            for (std::size_t f = 0; f < n_features; ++f) {
                bool own = f % static_cast<std::size_t>(n_classes) == static_cast<std::size_t>(c);
                double center = own ? 10.0 : 0.0;
                double noise = (own || isotropic) ? noise_sigma * gauss() : 0.0;
                b.x(row, f) = center + noise;
            }
            b.y.push_back(c);
        }
    }
    return b;
}

std::vector<int> labels_count(int a, int b, int c, int d) {
    std::vector<int> y;
    for (int i = 0; i < a; ++i) y.push_back(0);
    for (int i = 0; i < b; ++i) y.push_back(1);
    for (int i = 0; i < c; ++i) y.push_back(2);
    for (int i = 0; i < d; ++i) y.push_back(3);
    return y;
}

}  // namespace

TEST_CASE("stratified folds split 90/30/30/30 into five 18/6/6/6 folds") {
    auto y = labels_count(90, 30, 30, 30);
    auto fold = stratified_kfold(y, 5, 42);
    REQUIRE(fold.size() == 180);
    int count[5][4] = {};
    for (std::size_t i = 0; i < y.size(); ++i) ++count[fold[i]][y[i]];
    for (int f = 0; f < 5; ++f) {
        CHECK(count[f][0] == 18);
        CHECK(count[f][1] == 6);
        CHECK(count[f][2] == 6);
        CHECK(count[f][3] == 6);
    }
}

TEST_CASE("stratified folds: exact deal for one class, near-proportion otherwise") {
    std::vector<int> ten(10, 0);
    auto fold = stratified_kfold(ten, 5, 1);
    int per_fold[5] = {};
    for (int f : fold) ++per_fold[f];
    for (int f = 0; f < 5; ++f) CHECK(per_fold[f] == 2);

    // Non-divisible sizes: per-fold class count stays within 1 of proportional.
    auto y = labels_count(23, 11, 7, 5);
    auto fa = stratified_kfold(y, 3, 9);
    int count[3][4] = {};
    for (std::size_t i = 0; i < y.size(); ++i) ++count[fa[i]][y[i]];
    double totals[4] = {23, 11, 7, 5};
    for (int f = 0; f < 3; ++f)
        for (int c = 0; c < 4; ++c)
            CHECK(std::abs(count[f][c] - totals[c] / 3.0) < 1.0);
}

TEST_CASE("stratified folds are deterministic and seed-sensitive") {
    auto y = labels_count(40, 20, 20, 20);
    auto a = stratified_kfold(y, 5, 7);
    auto b = stratified_kfold(y, 5, 7);
    CHECK(a == b);
    auto c = stratified_kfold(y, 5, 8);
    CHECK(a != c);
}

TEST_CASE("a class smaller than k is rejected") {
    std::vector<int> y{0, 0, 0, 0, 0, 1, 1, 1};
    CHECK_THROWS_AS(stratified_kfold(y, 5, 0), ClassTooSmall);
    CHECK_THROWS_AS(stratified_kfold(y, 1, 0), SpecInvalid);
}

TEST_CASE("naive bayes separates obvious clusters and breaks ties low") {
    Matrix x(4, 1);
    x(0, 0) = -5.0;
    x(1, 0) = -4.0;
    x(2, 0) = 4.0;
    x(3, 0) = 5.0;
    std::vector<int> y{0, 0, 1, 1};
    GaussianNb gnb;
    gnb.fit(x, y, 2, {});
    std::vector<double> q{4.5};
    CHECK(gnb.predict(q) == 1);
    std::vector<double> q2{-4.5};
    CHECK(gnb.predict(q2) == 0);

    // Symmetric classes, query dead center: scores tie, lower index wins.
    Matrix xs(4, 1);
    xs(0, 0) = -2.0;
    xs(1, 0) = -1.0;
    xs(2, 0) = 1.0;
    xs(3, 0) = 2.0;
    GaussianNb sym;
    sym.fit(xs, y, 2, {0.0});
    std::vector<double> mid{0.0};
    CHECK(sym.score(mid, 0) == Catch::Approx(sym.score(mid, 1)).margin(1e-12));
    CHECK(sym.predict(mid) == 0);
}

TEST_CASE("naive bayes scores match hand-evaluated gaussian arithmetic") {
    // class 0 = {0,2}: mean 1, biased var 1; class 1 = {4,8}: mean 6, var 4.
    Matrix x(4, 1);
    x(0, 0) = 0.0;
    x(1, 0) = 2.0;
    x(2, 0) = 4.0;
    x(3, 0) = 8.0;
    std::vector<int> y{0, 0, 1, 1};
    GaussianNb gnb;
    gnb.fit(x, y, 2, {0.0});
    std::vector<double> q{3.0};
    double two_pi = 2.0 * std::numbers::pi;
    double want0 = std::log(0.5) - 0.5 * std::log(two_pi * 1.0) - (3.0 - 1.0) * (3.0 - 1.0) / 2.0;
    double want1 = std::log(0.5) - 0.5 * std::log(two_pi * 4.0) - (3.0 - 6.0) * (3.0 - 6.0) / 8.0;
    CHECK(gnb.score(q, 0) == Catch::Approx(want0).margin(1e-9));
    CHECK(gnb.score(q, 1) == Catch::Approx(want1).margin(1e-9));
    CHECK(gnb.predict(q) == 1);
}

TEST_CASE("naive bayes variance smoothing and degenerate cases") {
    Matrix x(4, 2);
    // feature 0 constant inside each class; feature 1 varies
    x(0, 0) = 1.0; x(0, 1) = 0.0;
    x(1, 0) = 1.0; x(1, 1) = 1.0;
    x(2, 0) = 2.0; x(2, 1) = 5.0;
    x(3, 0) = 2.0; x(3, 1) = 6.0;
    std::vector<int> y{0, 0, 1, 1};
    GaussianNb strict;
    CHECK_THROWS_AS(strict.fit(x, y, 2, {0.0}), DegenerateVariance);
    GaussianNb smoothed;
    smoothed.fit(x, y, 2, {1e-9});  // default smoothing keeps it finite
    std::vector<double> q{1.0, 0.5};
    CHECK(smoothed.predict(q) == 0);

    GaussianNb bad;
    CHECK_THROWS_AS(bad.fit(x, y, 2, {-1.0}), SpecInvalid);
    std::vector<int> missing{0, 0, 0, 0};
    CHECK_THROWS_AS(bad.fit(x, missing, 2, {}), SpecInvalid);
}

TEST_CASE("separable blobs cross-validate at accuracy 1") {
    Blobs b = make_blobs(20, 4, 12, 1.0, 5, false);
    auto ids = iota_ids(12);

    auto rf_fit = [&](const Matrix& tx, const std::vector<int>& ty, const Matrix& qx) {
        RandomForest rf;
        RfParams p;
        p.n_estimators = 60;
        rf.fit(tx, ty, 4, p, 11, ids);
        return rf.predict(qx);
    };
    CvReport rf_report = cross_validate(rf_fit, b.x, b.y, 5, 3);
    CHECK(rf_report.mean == 1.0);
    CHECK(rf_report.stddev == 0.0);

    auto gb_fit = [&](const Matrix& tx, const std::vector<int>& ty, const Matrix& qx) {
        GradientBoosting gb;
        GbParams p;
        p.n_estimators = 25;
        p.learning_rate = 0.3;
        gb.fit(tx, ty, 4, p, 11, ids);
        return gb.predict(qx);
    };
    CHECK(cross_validate(gb_fit, b.x, b.y, 5, 3).mean == 1.0);

    auto gnb_fit = [&](const Matrix& tx, const std::vector<int>& ty, const Matrix& qx) {
        GaussianNb gnb;
        gnb.fit(tx, ty, 4, {});
        return gnb.predict(qx);
    };
    CHECK(cross_validate(gnb_fit, b.x, b.y, 5, 3).mean == 1.0);
}

TEST_CASE("a depth-1 stump cannot express exclusive-or structure") {
    // Four tight clusters at the corners of a square; diagonal corners share
    // a class. Any single-threshold split leaves both sides mixed 50/50.
    auto rng = make_rng(21, 0);
    auto unit = [&rng] { return static_cast<double>(rng() >> 11) / 9007199254740992.0; };
    std::size_t per = 25;
    Matrix x(4 * per, 2);
    std::vector<int> y;
    std::size_t row = 0;
    for (int cx = 0; cx < 2; ++cx)
        for (int cy = 0; cy < 2; ++cy)
            for (std::size_t i = 0; i < per; ++i, ++row) {
                x(row, 0) = cx + 0.1 * unit();
                x(row, 1) = cy + 0.1 * unit();
                y.push_back(cx ^ cy);
            }
    RandomForest stump;
    RfParams p;
    p.n_estimators = 1;
    p.max_depth = 1;
    p.max_features = 1.0;
    stump.fit(x, y, 2, p, 0, iota_ids(2));
    auto pred = stump.predict(x);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (pred[i] == y[i]) ++hits;
    CHECK(static_cast<double>(hits) / static_cast<double>(y.size()) <= 0.75);
}

TEST_CASE("shuffled labels score near chance") {
    Blobs b = make_blobs(16, 4, 5, 1.0, 77);
    auto ids = iota_ids(5);
    double acc_sum = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        std::vector<int> shuffled = b.y;
        auto rng = make_rng(s, 500);
        for (std::size_t i = shuffled.size(); i > 1; --i)
            std::swap(shuffled[i - 1], shuffled[rng() % i]);
        auto fit = [&](const Matrix& tx, const std::vector<int>& ty, const Matrix& qx) {
            RandomForest rf;
            RfParams p;
            p.n_estimators = 40;
            rf.fit(tx, ty, 4, p, s, ids);
            return rf.predict(qx);
        };
        acc_sum += cross_validate(fit, b.x, shuffled, 4, s).mean;
    }
    double mean_acc = acc_sum / 10.0;
    CHECK(mean_acc > 0.15);
    CHECK(mean_acc < 0.45);
}

TEST_CASE("an empty boosting ensemble predicts the prior majority") {
    Blobs b = make_blobs(10, 3, 4, 1.0, 13);
    // Make class 2 the majority by dropping rows of others.
    Matrix x(24, 4);
    std::vector<int> y;
    std::size_t row = 0;
    for (std::size_t i = 0; i < b.y.size() && row < 24; ++i) {
        if (b.y[i] == 0 && std::count(y.begin(), y.end(), 0) >= 4) continue;
        if (b.y[i] == 1 && std::count(y.begin(), y.end(), 1) >= 10) continue;
        for (std::size_t c = 0; c < 4; ++c) x(row, c) = b.x(i, c);
        y.push_back(b.y[i]);
        ++row;
    }
    REQUIRE(row == 24);
    REQUIRE(std::count(y.begin(), y.end(), 2) == 10);
    GradientBoosting gb;
    GbParams p;
    p.n_estimators = 0;
    gb.fit(x, y, 3, p, 9, iota_ids(4));
    auto pred = gb.predict(x);
    // Priors 4/24, 10/24, 10/24: argmax ties between 1 and 2, broken to 1.
    for (int v : pred) CHECK(v == 1);
}

TEST_CASE("boosting training log-loss never increases") {
    Blobs b = make_blobs(15, 4, 5, 2.0, 31);
    GradientBoosting gb;
    GbParams p;
    p.n_estimators = 40;
    p.learning_rate = 0.3;
    gb.fit(b.x, b.y, 4, p, 2, iota_ids(5));
    const auto& trace = gb.train_log_loss_trace();
    REQUIRE(trace.size() == 41);
    CHECK(trace.front() == Catch::Approx(std::log(4.0)).margin(0.05));  // near uniform start
    for (std::size_t i = 1; i < trace.size(); ++i) REQUIRE(trace[i] <= trace[i - 1] + 1e-12);
    CHECK(trace.back() < 0.2);
}

TEST_CASE("forest and boosting are deterministic in the seed") {
    Blobs b = make_blobs(12, 4, 6, 3.0, 55);
    auto ids = iota_ids(6);
    RfParams rp;
    rp.n_estimators = 30;
    RandomForest f1, f2;
    f1.fit(b.x, b.y, 4, rp, 101, ids);
    f2.fit(b.x, b.y, 4, rp, 101, ids, 2);  // thread count must not matter
    CHECK(f1.predict(b.x) == f2.predict(b.x));
    CHECK(f1.feature_importances() == f2.feature_importances());

    GbParams gp;
    gp.n_estimators = 15;
    gp.subsample = 0.7;
    GradientBoosting g1, g2;
    g1.fit(b.x, b.y, 4, gp, 101, ids);
    g2.fit(b.x, b.y, 4, gp, 101, ids);
    CHECK(g1.predict(b.x) == g2.predict(b.x));
    CHECK(g1.train_log_loss_trace() == g2.train_log_loss_trace());
}

TEST_CASE("relabeling classes permutes predictions identically") {
    Blobs b = make_blobs(14, 4, 6, 2.0, 23);
    int perm[4] = {2, 0, 3, 1};
    std::vector<int> y2;
    for (int v : b.y) y2.push_back(perm[v]);
    auto ids = iota_ids(6);

    RfParams p;
    p.n_estimators = 40;
    RandomForest a, bb;
    a.fit(b.x, b.y, 4, p, 5, ids);
    bb.fit(b.x, y2, 4, p, 5, ids);
    auto pa = a.predict(b.x);
    auto pb = bb.predict(b.x);
    for (std::size_t i = 0; i < pa.size(); ++i) REQUIRE(pb[i] == perm[pa[i]]);

    GaussianNb ga, gb;
    ga.fit(b.x, b.y, 4, {});
    gb.fit(b.x, y2, 4, {});
    auto qa = ga.predict(b.x);
    auto qb = gb.predict(b.x);
    for (std::size_t i = 0; i < qa.size(); ++i) REQUIRE(qb[i] == perm[qa[i]]);
}

TEST_CASE("column order does not matter when ids travel with columns") {
    Blobs b = make_blobs(12, 4, 7, 2.5, 71);
    std::vector<std::size_t> ids = iota_ids(7);
    std::vector<std::size_t> order{4, 2, 6, 0, 5, 1, 3};
    Matrix shuffled(b.x.rows(), b.x.cols());
    std::vector<std::size_t> shuffled_ids(7);
    for (std::size_t j = 0; j < 7; ++j) {
        shuffled_ids[j] = ids[order[j]];
        for (std::size_t r = 0; r < b.x.rows(); ++r) shuffled(r, j) = b.x(r, order[j]);
    }

    RfParams p;
    p.n_estimators = 25;
    p.max_features = 0.5;
    RandomForest f1, f2;
    f1.fit(b.x, b.y, 4, p, 31, ids);
    f2.fit(shuffled, b.y, 4, p, 31, shuffled_ids);
    CHECK(f1.predict(b.x) == f2.predict(shuffled));

    // Importances line up once mapped back through the ids.
    auto i1 = f1.feature_importances();
    auto i2 = f2.feature_importances();
    for (std::size_t j = 0; j < 7; ++j)
        REQUIRE(i2[j] == Catch::Approx(i1[order[j]]).margin(1e-12));

    GbParams gp;
    gp.n_estimators = 10;
    GradientBoosting g1, g2;
    g1.fit(b.x, b.y, 4, gp, 31, ids);
    g2.fit(shuffled, b.y, 4, gp, 31, shuffled_ids);
    CHECK(g1.predict(b.x) == g2.predict(shuffled));
}

TEST_CASE("strictly increasing transforms leave tree predictions unchanged") {
    Blobs b = make_blobs(12, 4, 5, 2.5, 41);
    Matrix cubed(b.x.rows(), b.x.cols());
    for (std::size_t r = 0; r < b.x.rows(); ++r)
        for (std::size_t c = 0; c < b.x.cols(); ++c)
            cubed(r, c) = b.x(r, c) * b.x(r, c) * b.x(r, c);
    auto ids = iota_ids(5);

    RfParams p;
    p.n_estimators = 30;
    p.max_features = 0.6;
    RandomForest f1, f2;
    f1.fit(b.x, b.y, 4, p, 77, ids);
    f2.fit(cubed, b.y, 4, p, 77, ids);
    CHECK(f1.predict(b.x) == f2.predict(cubed));

    GbParams gp;
    gp.n_estimators = 12;
    GradientBoosting g1, g2;
    g1.fit(b.x, b.y, 4, gp, 77, ids);
    g2.fit(cubed, b.y, 4, gp, 77, ids);
    CHECK(g1.predict(b.x) == g2.predict(cubed));
}

TEST_CASE("single-class data is flagged and trivially perfect") {
    Matrix x(10, 2);
    auto rng = make_rng(1, 1);
    for (std::size_t r = 0; r < 10; ++r)
        for (std::size_t c = 0; c < 2; ++c)
            x(r, c) = static_cast<double>(rng() >> 11) / 9007199254740992.0;
    std::vector<int> y(10, 0);
    auto fit = [&](const Matrix& tx, const std::vector<int>& ty, const Matrix& qx) {
        GaussianNb gnb;
        gnb.fit(tx, ty, 1, {});
        return gnb.predict(qx);
    };
    CvReport rep = cross_validate(fit, x, y, 5, 4);
    CHECK(rep.mean == 1.0);
    CHECK(!rep.warning.empty());

    CvReport again = cross_validate(fit, x, y, 5, 4);
    CHECK(rep.fold_accuracy == again.fold_accuracy);
    CHECK(rep.fold_of == again.fold_of);
}

TEST_CASE("invalid ensemble parameters are rejected") {
    Matrix x(8, 2);
    std::vector<int> y{0, 1, 0, 1, 0, 1, 0, 1};
    auto ids = iota_ids(2);
    RandomForest rf;
    RfParams rp;
    rp.n_estimators = 0;
    CHECK_THROWS_AS(rf.fit(x, y, 2, rp, 0, ids), SpecInvalid);
    rp.n_estimators = 5;
    rp.criterion = SplitCriterion::mse;
    CHECK_THROWS_AS(rf.fit(x, y, 2, rp, 0, ids), SpecInvalid);

    GradientBoosting gb;
    GbParams gp;
    gp.criterion = SplitCriterion::gini;
    CHECK_THROWS_AS(gb.fit(x, y, 2, gp, 0, ids), SpecInvalid);
    gp.criterion = SplitCriterion::friedman_mse;
    gp.subsample = 0.0;
    CHECK_THROWS_AS(gb.fit(x, y, 2, gp, 0, ids), SpecInvalid);
    gp.subsample = 1.5;
    CHECK_THROWS_AS(gb.fit(x, y, 2, gp, 0, ids), SpecInvalid);
}

TEST_CASE("criterion parsing round-trips") {
    CHECK(parse_criterion("gini") == SplitCriterion::gini);
    CHECK(parse_criterion("entropy") == SplitCriterion::entropy);
    CHECK(parse_criterion("mse") == SplitCriterion::mse);
    CHECK(parse_criterion("friedman_mse") == SplitCriterion::friedman_mse);
    CHECK_THROWS_AS(parse_criterion("log_loss"), SpecInvalid);
    CHECK(criterion_name(SplitCriterion::gini) == "gini");
    CHECK(criterion_name(SplitCriterion::friedman_mse) == "friedman_mse");
}
