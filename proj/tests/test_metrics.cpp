#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "tardy/metrics.hpp"
#include "tardy/rng.hpp"

using namespace tardy;

namespace {

// Naive per-element recount, kept deliberately independent of the library
// implementation: straight transcription of the four sign rules and the
// textbook score formulas.
struct NaiveScores {
    double f_tp, f_tn, ppv, tpr, acc, mcc, e, g;
};

NaiveScores naive_scores(const std::vector<double>& yhat, const std::vector<double>& y,
                         double y_max) {
    double tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (yhat[i] > 0 && y[i] > 0) tp++;
        if (yhat[i] > 0 && y[i] <= 0) fp++;
        if (yhat[i] <= 0 && y[i] <= 0) tn++;
        if (yhat[i] <= 0 && y[i] > 0) fn++;
    }
    NaiveScores s{};
    s.f_tp = (2 * tp + fp + fn) == 0 ? 0 : 2 * tp / (2 * tp + fp + fn);
    s.f_tn = (2 * tn + fp + fn) == 0 ? 0 : 2 * tn / (2 * tn + fp + fn);
    s.ppv = (tp + fp) == 0 ? 0 : tp / (tp + fp);
    s.tpr = (tp + fn) == 0 ? 0 : tp / (tp + fn);
    s.acc = (tp + fp + tn + fn) == 0 ? 0 : (tp + tn) / (tp + fp + tn + fn);
    double den = std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
    s.mcc = den == 0 ? 0 : (tp * tn - fp * fn) / den;
    double sum = 0;
    for (std::size_t i = 0; i < y.size(); ++i) sum += std::abs(yhat[i] - y[i]) / y_max;
    s.e = sum / static_cast<double>(y.size());
    s.g = ((1 - s.e) + s.f_tp + s.f_tn) / 3.0;
    return s;
}

}  // namespace

TEST_CASE("confusion sign rules") {
    std::vector<double> yhat{0.5, -0.1, 0.0};
    std::vector<double> y{1.0, 0.0, 0.2};
    auto c = confusion(yhat, y);
    CHECK(c.tp == 1);
    CHECK(c.tn == 1);
    CHECK(c.fn == 1);  // yhat == 0 counts as timely
    CHECK(c.fp == 0);

    // identity: all-positive match
    std::vector<double> pos{1.0, 2.0, 3.0};
    auto ci = confusion(pos, pos);
    CHECK(ci.tp == 3);
    CHECK(ci.total() == 3);

    // sign flip
    std::vector<double> neg{-1.0, -2.0, -3.0};
    auto cf = confusion(neg, pos);
    CHECK(cf.fn == 3);

    CHECK_THROWS_AS(confusion(std::vector<double>{1.0}, std::vector<double>{}), Error);
    CHECK_THROWS_AS(confusion(std::vector<double>{}, std::vector<double>{}), Error);
}

TEST_CASE("f_tp / f_tn hand values") {
    ConfusionCounts a{.tp = 2, .fp = 1, .tn = 0, .fn = 1};
    CHECK(f_tp(a) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    ConfusionCounts b{.tp = 3, .fp = 0, .tn = 0, .fn = 0};
    CHECK(f_tp(b) == 1.0);
    ConfusionCounts z{};
    CHECK(f_tp(z) == 0.0);
    CHECK(f_tn(z) == 0.0);

    ConfusionCounts c{.tp = 0, .fp = 1, .tn = 3, .fn = 2};
    CHECK(f_tn(c) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    ConfusionCounts d{.tp = 0, .fp = 0, .tn = 5, .fn = 0};
    CHECK(f_tn(d) == 1.0);
}

TEST_CASE("mae_normalized hand values") {
    std::vector<double> y{0.0, 0.0};
    std::vector<double> yhat{1.0, 3.0};
    CHECK(mae_normalized(yhat, y, 10.0) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(mae_normalized(y, y, 10.0) == 0.0);
    std::vector<double> off{10.0, 10.0};
    CHECK(mae_normalized(off, y, 10.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(mae_normalized(yhat, y, 0.0), Error);
    CHECK_THROWS_AS(mae_normalized(yhat, y, -1.0), Error);
}

TEST_CASE("g_score hand values") {
    CHECK(g_score(0.0, 1.0, 1.0) == 1.0);
    CHECK(g_score(0.3, 0.6, 0.8) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(g_score(1.0, 0.0, 0.0) == 0.0);
}

TEST_CASE("ppv/tpr/acc/mcc hand values") {
    ConfusionCounts even{.tp = 1, .fp = 1, .tn = 1, .fn = 1};
    CHECK(ppv(even) == 0.5);
    CHECK(tpr(even) == 0.5);
    CHECK(acc(even) == 0.5);
    CHECK(mcc(even) == 0.0);

    ConfusionCounts perfect{.tp = 4, .fp = 0, .tn = 6, .fn = 0};
    CHECK(acc(perfect) == 1.0);
    CHECK(mcc(perfect) == 1.0);

    ConfusionCounts nopos{.tp = 0, .fp = 0, .tn = 3, .fn = 2};
    CHECK(ppv(nopos) == 0.0);
}

TEST_CASE("metric oracle: 1000 random vectors match naive recount to 1e-12") {
    Rng rng(20250809);
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t n = 1 + rng.index(40);
        std::vector<double> yhat(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            yhat[i] = rng.uniform(-2.0, 2.0);
            y[i] = rng.uniform(-2.0, 2.0);
            if (rng.uniform() < 0.05) yhat[i] = 0.0;  // exercise the boundary rule
            if (rng.uniform() < 0.05) y[i] = 0.0;
        }
        double y_max = rng.uniform(0.5, 3.0);
        auto r = evaluate(yhat, y, y_max);
        auto s = naive_scores(yhat, y, y_max);
        CHECK(r.f_tp == doctest::Approx(s.f_tp).epsilon(1e-12));
        CHECK(r.f_tn == doctest::Approx(s.f_tn).epsilon(1e-12));
        CHECK(r.ppv == doctest::Approx(s.ppv).epsilon(1e-12));
        CHECK(r.tpr == doctest::Approx(s.tpr).epsilon(1e-12));
        CHECK(r.acc == doctest::Approx(s.acc).epsilon(1e-12));
        CHECK(r.mcc == doctest::Approx(s.mcc).epsilon(1e-12));
        CHECK(r.mae == doctest::Approx(s.e).epsilon(1e-12));
        CHECK(r.g == doctest::Approx(s.g).epsilon(1e-12));
    }
}

TEST_CASE("G monotone in each component") {
    for (double lo : {0.1, 0.4}) {
        CHECK(g_score(lo, 0.5, 0.5) > g_score(lo + 0.2, 0.5, 0.5));
        CHECK(g_score(0.2, lo + 0.2, 0.5) > g_score(0.2, lo, 0.5));
        CHECK(g_score(0.2, 0.5, lo + 0.2) > g_score(0.2, 0.5, lo));
    }
}

TEST_CASE("MCC symmetric under class swap") {
    Rng rng(77);
    for (int t = 0; t < 200; ++t) {
        ConfusionCounts c{.tp = rng.index(20), .fp = rng.index(20),
                          .tn = rng.index(20), .fn = rng.index(20)};
        ConfusionCounts swapped{.tp = c.tn, .fp = c.fn, .tn = c.tp, .fn = c.fp};
        CHECK(mcc(c) == doctest::Approx(mcc(swapped)).epsilon(1e-12));
    }
}

TEST_CASE("F_tp and F_tn equal classical F1 on the respective class") {
    // Independent F1: harmonic mean of precision and recall for the class
    // treated as positive.
    auto f1 = [](double tp, double fp, double fn) {
        double prec = (tp + fp) == 0 ? 0 : tp / (tp + fp);
        double rec = (tp + fn) == 0 ? 0 : tp / (tp + fn);
        return (prec + rec) == 0 ? 0 : 2 * prec * rec / (prec + rec);
    };
    Rng rng(91);
    for (int t = 0; t < 200; ++t) {
        ConfusionCounts c{.tp = 1 + rng.index(20), .fp = rng.index(20),
                          .tn = 1 + rng.index(20), .fn = rng.index(20)};
        double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
        double tn = static_cast<double>(c.tn), fn = static_cast<double>(c.fn);
        CHECK(f_tp(c) == doctest::Approx(f1(tp, fp, fn)).epsilon(1e-12));
        // for the timely class, predicted-timely-but-late rows are its false
        // positives and predicted-late-but-timely rows its false negatives
        CHECK(f_tn(c) == doctest::Approx(f1(tn, fn, fp)).epsilon(1e-12));
    }
}

TEST_CASE("E bounds") {
    Rng rng(5);
    for (int t = 0; t < 100; ++t) {
        std::size_t n = 1 + rng.index(20);
        double y_max = 2.0;
        std::vector<double> yhat(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = rng.uniform(-y_max, y_max);
            // errors within y_max keep E in [0, 1]; wild predictions may
            // push E above 1 (allowed, unclamped)
            yhat[i] = y[i] + rng.uniform(-y_max, y_max);
        }
        double e = mae_normalized(yhat, y, y_max);
        CHECK(e >= 0.0);
        CHECK(e <= 1.0);
    }
}
