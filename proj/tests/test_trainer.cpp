#include "onn/errors.hpp"
#include "onn/trainer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace onn;

namespace {

// Labels from a random linear teacher so there is something to learn.
DatasetSplit synthetic_split(std::size_t train, std::size_t val, std::size_t test, std::uint64_t seed,
                             bool random_labels = false) {
    Rng rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> cls(0, 9);
    const RealMatrix teacher = gaussian_matrix(10, 100, 1.0, rng);
    auto make = [&](std::size_t n) {
        std::vector<Sample> out;
        for (std::size_t k = 0; k < n; ++k) {
            Sample s;
            s.input.resize(100);
            for (auto& x : s.input) x = u(rng);
            s.label = random_labels ? cls(rng) : argmax(teacher * s.input);
            s.target = one_hot(s.label);
            out.push_back(std::move(s));
        }
        return out;
    };
    DatasetSplit split;
    split.train = make(train);
    split.validation = make(val);
    split.test = make(test);
    return split;
}

TrainConfig small_config(TrainMode mode, long iterations = 40) {
    TrainConfig c;
    c.iterations = iterations;
    c.batch_size = 32;
    c.mode = mode;
    c.master_seed = 99;
    return c;
}

DeviceConfig lossless() {
    DeviceConfig c;
    c.quantization_enabled = false;
    return c;
}

}  // namespace

TEST(TrainConfig, DefaultsAndValidation) {
    TrainConfig c;
    EXPECT_EQ(c.iterations, 500);
    EXPECT_EQ(c.batch_size, 240);
    EXPECT_DOUBLE_EQ(c.learning_rate, 0.01);
    EXPECT_DOUBLE_EQ(c.beta1, 0.9);
    EXPECT_DOUBLE_EQ(c.beta2, 0.999);
    EXPECT_DOUBLE_EQ(c.epsilon, 1e-8);
    EXPECT_DOUBLE_EQ(c.init_sigma, 0.5);
    EXPECT_EQ(c.recalibrate_every, 50);
    EXPECT_NO_THROW(c.validate());
    c.beta1 = 1.0;
    EXPECT_THROW(c.validate(), OnnError);
    EXPECT_EQ(parse_train_mode("in_silico"), TrainMode::in_silico);
    EXPECT_FALSE(parse_train_mode("online"));
}

TEST(Adam, FirstStepIsSignedLearningRate) {
    NetworkState net = zero_network({ArchKind::onn1_linear, {3, 2}});
    RealMatrix g(2, 3);
    g << 0.5, -2.0, 1e-3, -7.0, 0.25, 3.0;
    TrainConfig c;
    adam_step(net, {g}, c);
    for (Eigen::Index k = 0; k < g.size(); ++k) {
        const double expected = -c.learning_rate * g(k) / (std::abs(g(k)) + c.epsilon);
        EXPECT_NEAR(net.weights[0](k), expected, 1e-15);
        EXPECT_NEAR(net.weights[0](k), -0.01 * (g(k) > 0 ? 1.0 : -1.0), 1e-7);
    }
}

TEST(Adam, MomentsMatchScalarReference) {
    NetworkState net = zero_network({ArchKind::onn1_linear, {1, 1}});
    TrainConfig c;
    double m = 0.0, v = 0.0, w = 0.0;
    std::vector<double> grads = {0.3, 0.3, 0.3, -1.0, 2.0, 0.01, 0.3};
    for (std::size_t t = 1; t <= grads.size(); ++t) {
        const double g = grads[t - 1];
        adam_step(net, {RealMatrix::Constant(1, 1, g)}, c);
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        const double mh = m / (1.0 - std::pow(0.9, static_cast<double>(t)));
        const double vh = v / (1.0 - std::pow(0.999, static_cast<double>(t)));
        w -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
        EXPECT_NEAR(net.first_moment[0](0), m, 1e-15);
        EXPECT_NEAR(net.second_moment[0](0), v, 1e-15);
        EXPECT_NEAR(net.weights[0](0), w, 1e-15);
    }
    // constant gradient: m_t = g (1 - beta1^t)
    NetworkState k = zero_network({ArchKind::onn1_linear, {1, 1}});
    for (int t = 0; t < 5; ++t) adam_step(k, {RealMatrix::Constant(1, 1, 0.3)}, c);
    EXPECT_NEAR(k.first_moment[0](0), 0.3 * (1.0 - std::pow(0.9, 5)), 1e-15);
}

TEST(Evaluate, PerfectAndConstantPredictors) {
    std::vector<Sample> samples;
    for (int k = 0; k < 100; ++k) {
        Sample s;
        s.label = k % 10;
        s.input = RealVector::Zero(100);
        s.input(s.label) = 1.0;
        s.target = one_hot(s.label);
        samples.push_back(s);
    }
    NetworkState perfect = zero_network(Architecture::onn1());
    perfect.weights[0].leftCols(10) = RealMatrix::Identity(10, 10);
    const auto good = evaluate(perfect, samples, nullptr, 0);
    EXPECT_EQ(good.accuracy, 1.0);
    EXPECT_EQ(good.total, 100);
    for (int r = 0; r < 10; ++r) {
        for (int c = 0; c < 10; ++c) EXPECT_EQ(good.confusion[r][c], r == c ? 10 : 0);
    }

    const auto constant = evaluate(zero_network(Architecture::onn1()), samples, nullptr, 0);
    EXPECT_DOUBLE_EQ(constant.accuracy, 0.1);
    for (int r = 0; r < 10; ++r) EXPECT_EQ(constant.confusion[r][0], 10);
}

TEST(Train, ZeroIterationsReturnsInitialWeights) {
    const auto split = synthetic_split(200, 2000, 2000, 1, true);
    auto c = small_config(TrainMode::denn, 0);
    const auto r = train(Architecture::onn1(), split, c, nullptr);
    Rng init(SeedStreams::from_master(c.master_seed).init);
    const auto expected = init_network(Architecture::onn1(), 0.5, init);
    EXPECT_EQ(r.net.weights[0], expected.weights[0]);
    EXPECT_NEAR(r.metrics.history.front().val_accuracy, 0.1, 0.03);
    EXPECT_EQ(r.metrics.history.size(), 1u);
}

TEST(Train, LearnsTeacherAndKeepsBestValidation) {
    const auto split = synthetic_split(3000, 500, 500, 2);
    const auto r = train(Architecture::onn1(), split, small_config(TrainMode::denn, 100), nullptr);
    EXPECT_GT(r.metrics.test.accuracy, 0.5);
    double best = 0.0;
    for (const auto& h : r.metrics.history) {
        if (!std::isnan(h.val_accuracy)) best = std::max(best, h.val_accuracy);
    }
    EXPECT_EQ(best, r.metrics.best_val_accuracy);
    EXPECT_EQ(evaluate(r.net, split.validation, nullptr, 0).accuracy, r.metrics.best_val_accuracy);
    long confusion_total = 0;
    for (const auto& row : r.metrics.test.confusion) {
        for (long v : row) confusion_total += v;
    }
    EXPECT_EQ(confusion_total, 500);
}

TEST(Train, IsDeterministic) {
    const auto split = synthetic_split(1000, 200, 200, 3);
    for (auto arch : {Architecture::onn2(), Architecture::onn3()}) {
        OpticalDevice d1(DeviceConfig{}, arch.optical_outputs(), 100, {NoiseKind::dynamic_additive, 0.1, 5}, 6);
        OpticalDevice d2(DeviceConfig{}, arch.optical_outputs(), 100, {NoiseKind::dynamic_additive, 0.1, 5}, 6);
        const auto a = train(arch, split, small_config(TrainMode::hybrid, 20), &d1);
        const auto b = train(arch, split, small_config(TrainMode::hybrid, 20), &d2);
        std::ostringstream ca, cb;
        write_metrics_csv(ca, a.metrics);
        write_metrics_csv(cb, b.metrics);
        EXPECT_EQ(ca.str(), cb.str());
        for (std::size_t l = 0; l < a.net.weights.size(); ++l) EXPECT_EQ(a.net.weights[l], b.net.weights[l]);
    }
}

TEST(Train, HybridOnPerfectDeviceMatchesDigital) {
    const auto split = synthetic_split(1000, 200, 200, 4);
    for (auto arch : {Architecture::onn1(), Architecture::onn2(), Architecture::onn3()}) {
        OpticalDevice d(lossless(), arch.optical_outputs(), 100, {}, 1);
        const auto hybrid = train(arch, split, small_config(TrainMode::hybrid), &d);
        const auto digital = train(arch, split, small_config(TrainMode::in_silico), nullptr);
        ASSERT_EQ(hybrid.metrics.history.size(), digital.metrics.history.size());
        for (std::size_t k = 1; k < hybrid.metrics.history.size(); ++k) {
            const double a = hybrid.metrics.history[k].train_loss;
            const double b = digital.metrics.history[k].train_loss;
            EXPECT_LE(std::abs(a - b), 1e-6 * std::abs(b)) << to_string(arch.kind) << " iteration " << k;
            EXPECT_LE(hybrid.metrics.history[k].mvm_rmse, 1e-12);
        }
    }
}

TEST(Train, HybridNeedsDevice) {
    const auto split = synthetic_split(100, 50, 50, 5);
    EXPECT_THROW(train(Architecture::onn1(), split, small_config(TrainMode::hybrid), nullptr), OnnError);
}

TEST(Train, NonFiniteLossAborts) {
    const auto split = synthetic_split(100, 50, 50, 6);
    auto c = small_config(TrainMode::denn, 5);
    c.init_sigma = 1e308;
    try {
        train(Architecture::onn1(), split, c, nullptr);
        FAIL();
    } catch (const OnnError& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonFiniteLoss);
    }
}

TEST(Train, HybridRecordsMvmErrorAndRecalibrates) {
    const auto split = synthetic_split(500, 100, 100, 7);
    OpticalDevice d(DeviceConfig{}, 10, 100, {}, 2);
    auto c = small_config(TrainMode::hybrid, 60);
    const auto r = train(Architecture::onn1(), split, c, &d);
    for (std::size_t k = 1; k < r.metrics.history.size(); ++k) {
        EXPECT_GT(r.metrics.history[k].mvm_rmse, 0.0);
        EXPECT_LT(r.metrics.history[k].mvm_rmse, 0.01);
    }
    EXPECT_EQ(d.calibration().last_calibrated_iteration, 60);
    ASSERT_TRUE(r.metrics.digital_test_accuracy);
    ASSERT_TRUE(r.metrics.device_test_accuracy);
}

TEST(OpticalErrorTraining, PerfectDeviceMatchesDigitalMse) {
    const auto split = synthetic_split(1000, 200, 200, 8);
    OpticalDevice d(lossless(), 10, 100, {}, 1);
    const auto optical = train_with_optical_error(split, small_config(TrainMode::hybrid), &d);
    const auto digital = train_with_optical_error(split, small_config(TrainMode::in_silico), nullptr);
    for (std::size_t k = 1; k < optical.metrics.history.size(); ++k) {
        const double a = optical.metrics.history[k].train_loss;
        const double b = digital.metrics.history[k].train_loss;
        EXPECT_LE(std::abs(a - b), 1e-6 * std::abs(b));
    }
    EXPECT_LE((optical.net.weights[0] - digital.net.weights[0]).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(OpticalErrorTraining, ExactOutputsGiveNoUpdate) {
    NetworkState net = zero_network(Architecture::onn1());
    net.reset_moments();
    TrainConfig c;
    const RealMatrix before = net.weights[0];
    adam_step(net, {RealMatrix::Zero(10, 100)}, c);
    EXPECT_EQ(net.weights[0], before);
}

TEST(InSilico, NoGapWithoutImperfections) {
    const auto split = synthetic_split(1000, 200, 200, 9);
    OpticalDevice d(lossless(), 10, 100, {}, 1);
    const auto r = in_silico_protocol(Architecture::onn1(), split, small_config(TrainMode::denn), d);
    ASSERT_TRUE(r.metrics.digital_test_accuracy && r.metrics.device_test_accuracy);
    EXPECT_EQ(*r.metrics.digital_test_accuracy, *r.metrics.device_test_accuracy);
}

TEST(InSilico, StaticNoiseOpensGap) {
    const auto split = synthetic_split(2000, 300, 1000, 10);
    OpticalDevice d(DeviceConfig{}, 10, 100, {NoiseKind::static_additive, 0.5, 3}, 1);
    const auto r = in_silico_protocol(Architecture::onn1(), split, small_config(TrainMode::denn, 100), d);
    EXPECT_LT(*r.metrics.device_test_accuracy, *r.metrics.digital_test_accuracy);
}

TEST(Export, MetricsAndConfusionCsv) {
    RunMetrics m;
    m.history.push_back({0, std::nan(""), std::nan(""), 0.25});
    m.history.push_back({1, 2.5, 0.003, std::nan("")});
    std::ostringstream out;
    write_metrics_csv(out, m);
    EXPECT_EQ(out.str(), "iteration,train_loss,mvm_rmse,val_accuracy\n0,,,0.25\n1,2.5,0.003,\n");

    ConfusionMatrix cm{};
    cm[2][3] = 7;
    std::ostringstream cc;
    write_confusion_csv(cc, cm);
    const std::string text = cc.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "true\\predicted,0,1,2,3,4,5,6,7,8,9");
    EXPECT_NE(text.find("\n2,0,0,0,7,0,0,0,0,0,0\n"), std::string::npos);
}
