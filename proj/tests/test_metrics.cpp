#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "vfu/metrics.hpp"

using namespace vfu;

TEST_CASE("f1_score: perfect and empty-prediction edge cases") {
    CHECK(f1_score({1, 0, 1}, {1, 0, 1}) == doctest::Approx(1.0));
    // never predicts the positive class -> precision undefined -> 0
    CHECK(f1_score({0, 0, 0}, {1, 0, 1}) == doctest::Approx(0.0));
}

TEST_CASE("f1_score: hand-computed binary case") {
    // tp=2 (rows 0,2), fp=1 (row 4), fn=1 (row 3)
    // precision=2/3, recall=2/3, F1 = 2/3
    const std::vector<int> pred{1, 0, 1, 0, 1};
    const std::vector<int> gold{1, 0, 1, 1, 0};
    CHECK(f1_score(pred, gold) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("f1_score: macro average over three classes") {
    // class 0: tp=1, fp=0, fn=1 -> p=1, r=1/2 -> f1=2/3
    // class 1: tp=1, fp=1, fn=0 -> p=1/2, r=1 -> f1=2/3
    // class 2: tp=1, fp=1, fn=1 -> p=1/2, r=1/2 -> f1=1/2
    const std::vector<int> pred{0, 1, 1, 2, 2};
    const std::vector<int> gold{0, 1, 0, 2, 1};
    CHECK(f1_score(pred, gold) ==
          doctest::Approx((2.0 / 3.0 + 2.0 / 3.0 + 0.5) / 3.0).epsilon(1e-12));
}

TEST_CASE("auc_score: concordant-pair oracle gives 0.75") {
    // pairs: (0.1,0.4): concordant, (0.1,0.35): concordant,
    //        (0.8,0.4): discordant, (0.8,0.35): discordant -> wait, scores for
    // positives {0.4, 0.8}, negatives {0.1, 0.35}:
    // (0.4>0.1), (0.4>0.35), (0.8>0.1), (0.8>0.35) all concordant except none.
    // Use {0.4, 0.3} vs {0.1, 0.35}: concordant 3 of 4 -> 0.75.
    const std::vector<double> scores{0.4, 0.1, 0.3, 0.35};
    const std::vector<int> labels{1, 0, 1, 0};
    CHECK(auc_score(scores, labels) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("auc_score: all scores tied gives 0.5") {
    CHECK(auc_score(std::vector<double>{0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0}) ==
          doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("auc_score: invariant under a monotone transform") {
    const std::vector<double> scores{0.2, 0.9, 0.4, 0.55, 0.05, 0.7};
    const std::vector<int> labels{0, 1, 0, 1, 0, 1};
    std::vector<double> warped(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
        warped[i] = std::exp(3.0 * scores[i]) - 7.0;
    CHECK(auc_score(scores, labels) == doctest::Approx(auc_score(warped, labels)));
}

TEST_CASE("auc_score: perfect separation and perfect inversion") {
    CHECK(auc_score(std::vector<double>{0.9, 0.8, 0.1, 0.2}, {1, 1, 0, 0}) ==
          doctest::Approx(1.0));
    CHECK(auc_score(std::vector<double>{0.1, 0.2, 0.9, 0.8}, {1, 1, 0, 0}) ==
          doctest::Approx(0.0));
}

TEST_CASE("auc_score: single-class labels rejected") {
    CHECK_THROWS_AS(auc_score(std::vector<double>{0.1, 0.2}, {1, 1}), ValidationError);
}

TEST_CASE("auc_score: probability-matrix binary route uses column 1") {
    const DenseMatrix probs(4, 2, {0.6, 0.4, 0.9, 0.1, 0.7, 0.3, 0.65, 0.35});
    const std::vector<int> labels{1, 0, 1, 0};
    CHECK(auc_score(probs, labels) ==
          doctest::Approx(auc_score(std::vector<double>{0.4, 0.1, 0.3, 0.35}, labels)));
}

TEST_CASE("argmax_rows: ties resolve to the lower class") {
    const DenseMatrix m(3, 3, {0.1, 0.8, 0.1, 0.5, 0.5, 0.0, 0.2, 0.3, 0.5});
    CHECK(argmax_rows(m) == std::vector<int>{1, 0, 2});
}

TEST_CASE("metrics CSV: round trip and byte determinism") {
    std::vector<MetricsRecord> records;
    MetricsRecord a;
    a.epoch = 1;
    a.phase = RunPhase::Train;
    a.train_loss = 0.69314718055994531;
    a.test_loss = 0.71;
    a.f1 = 0.5;
    a.auc = 0.625;
    records.push_back(a);
    MetricsRecord b;
    b.epoch = 2;
    b.phase = RunPhase::PostUnlearn;
    b.train_loss = 1e-12;
    b.test_loss = 123456.789;
    b.f1 = 1.0;
    b.auc = 1.0;
    b.mia_accuracy = 0.525;
    records.push_back(b);

    const std::string p1 = "/tmp/vfu_metrics1.csv";
    const std::string p2 = "/tmp/vfu_metrics2.csv";
    write_metrics_csv(p1, records);
    write_metrics_csv(p2, records);

    std::ifstream f1(p1), f2(p2);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
    CHECK(s1.substr(0, s1.find('\n')) ==
          "epoch,phase,train_loss,test_loss,f1,auc,mia_accuracy");

    const auto back = read_metrics_csv(p1);
    REQUIRE(back.size() == 2);
    CHECK(back[0].epoch == 1);
    CHECK(back[0].phase == RunPhase::Train);
    CHECK(back[0].train_loss == doctest::Approx(a.train_loss).epsilon(1e-10));
    CHECK_FALSE(back[0].mia_accuracy.has_value());
    CHECK(back[1].phase == RunPhase::PostUnlearn);
    REQUIRE(back[1].mia_accuracy.has_value());
    CHECK(*back[1].mia_accuracy == doctest::Approx(0.525));
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}
