#include "affectrep/error.hpp"
#include "affectrep/metrics.hpp"
#include "affectrep/model.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

using namespace affectrep;

namespace {

FeatureMatrix random_features(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> nd(0.0, 1.0);
    FeatureMatrix f(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) f(r, c) = nd(rng);
    return f;
}

std::vector<double> random_targets(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    std::vector<double> t(n);
    for (auto& v : t) v = u(rng);
    return t;
}

double norm(const std::vector<double>& w) {
    double s = 0.0;
    for (double v : w) s += v * v;
    return std::sqrt(s);
}

// Sequences whose features are an affine image of a smooth latent target.
std::vector<Sequence> affine_task(std::uint64_t seed, std::size_t count, std::size_t steps, Eigen::Index dim) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 6.28);
    Eigen::VectorXd load(dim), bias(dim);
    for (Eigen::Index d = 0; d < dim; ++d) {
        load(d) = nd(rng);
        bias(d) = 0.1 * nd(rng);
    }
    std::vector<Sequence> out;
    for (std::size_t i = 0; i < count; ++i) {
        const double phase = u(rng), freq = 0.2 + 0.3 * u(rng) / 6.28;
        Sequence s;
        s.features.resize(static_cast<Eigen::Index>(steps), dim);
        for (std::size_t n = 0; n < steps; ++n) {
            const double latent = 0.5 * std::sin(freq * static_cast<double>(n) + phase);
            s.targets.push_back(latent);
            for (Eigen::Index d = 0; d < dim; ++d)
                s.features(static_cast<Eigen::Index>(n), d) = load(d) * latent + bias(d) + 0.02 * nd(rng);
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

TEST_CASE("parameter layout") {
    const ModelConfig cfg{3, 4, 2, 0};
    const auto layout = parameter_layout(cfg);
    REQUIRE(layout.size() == 8);
    CHECK(layout[0].rows == 16);
    CHECK(layout[0].cols == 3);
    CHECK(layout[3].cols == 4);
    CHECK(parameter_count(cfg) == 16 * 3 + 16 * 4 + 16 + 16 * 4 + 16 * 4 + 16 + 4 + 1);
    CHECK_THROWS_AS(LstmRegressor(ModelConfig{3, 4, 1, 0}), Error);
    CHECK_THROWS_AS(LstmRegressor(ModelConfig{0, 4, 2, 0}), Error);
    CHECK_THROWS_AS(LstmRegressor(cfg, std::vector<double>(3)), Error);
}

TEST_CASE("forward contracts") {
    std::mt19937_64 rng(1);
    const ModelConfig cfg{5, 8, 2, 42};
    LstmRegressor zero(cfg);
    const auto x = random_features(rng, 12, 5);
    for (double y : zero.forward(x)) CHECK(y == 0.0);

    LstmRegressor model(cfg);
    model.initialize();
    const auto full = model.forward(x);
    REQUIRE(full.size() == 12);
    for (double y : full) {
        CHECK(y > -1.0);
        CHECK(y < 1.0);
    }

    SUBCASE("causality") {
        const auto prefix = model.forward(x.topRows(7));
        for (std::size_t n = 0; n < 7; ++n) CHECK(prefix[n] == full[n]);
        FeatureMatrix changed = x;
        changed.bottomRows(4).setConstant(9.0);
        const auto after = model.forward(changed);
        for (std::size_t n = 0; n < 8; ++n) CHECK(after[n] == full[n]);
    }
    SUBCASE("determinism") {
        LstmRegressor again(cfg);
        again.initialize();
        CHECK(again.weights() == model.weights());
        CHECK(again.forward(x) == full);
    }
    SUBCASE("saturating inputs stay inside the open interval") {
        const auto big = model.forward(FeatureMatrix::Constant(6, 5, 1e3));
        for (double y : big) CHECK(std::abs(y) < 1.0);
    }
    CHECK_THROWS_AS(model.forward(random_features(rng, 4, 3)), Error);
}

TEST_CASE("initialization bounds") {
    LstmRegressor model(ModelConfig{4, 16, 2, 9});
    model.initialize();
    for (double w : model.weights()) CHECK(std::abs(w) <= 0.25);
}

TEST_CASE("ccc loss gradient against finite differences") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        auto p = random_targets(rng, 7), t = random_targets(rng, 7);
        std::vector<double> g(7);
        const double loss = ccc_loss_gradient(p, t, g);
        CHECK(loss == doctest::Approx(ccc_loss(p, t)).epsilon(1e-12));
        for (std::size_t i = 0; i < 7; ++i) {
            auto up = p, down = p;
            up[i] += 1e-6;
            down[i] -= 1e-6;
            const double fd = (ccc_loss(up, t) - ccc_loss(down, t)) / 2e-6;
            CHECK(g[i] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
        }
    }
    SUBCASE("degenerate segment is guarded") {
        std::vector<double> g(3, 7.0);
        CHECK(ccc_loss_gradient(std::vector<double>{0.2, 0.2, 0.2}, std::vector<double>{0.2, 0.2, 0.2}, g) == 1.0);
        for (double v : g) CHECK(v == 0.0);
        std::vector<double> g2(3);
        ccc_loss_gradient(std::vector<double>{0.2, 0.2, 0.2}, std::vector<double>{0.1, 0.5, 0.3}, g2);
        for (double v : g2) CHECK(std::isfinite(v));
    }
}

TEST_CASE("BPTT gradient matches central finite differences") {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        const ModelConfig cfg{3, 4, 2, seed};
        LstmRegressor model(cfg);
        model.initialize();
        std::vector<Sequence> batch;
        for (int b = 0; b < 2; ++b) batch.push_back({random_features(rng, 5, 3), random_targets(rng, 5)});
        const auto r = gradient_check(model, batch);
        worst = std::max(worst, r.max_relative_error);
        CHECK(r.max_relative_error < 1e-4);
    }
    MESSAGE("worst relative error over 20 configurations: " << worst);
}

TEST_CASE("unused input column has zero gradient") {
    std::mt19937_64 rng(8);
    const ModelConfig cfg{3, 4, 2, 3};
    LstmRegressor model(cfg);
    model.initialize();
    auto x = random_features(rng, 6, 3);
    x.col(1).setZero();
    const std::vector<Sequence> batch{{x, random_targets(rng, 6)}};
    const auto r = gradient_check(model, batch);
    const auto& block = model.layout()[0];
    for (std::size_t row = 0; row < block.rows; ++row) {
        const std::size_t idx = block.offset + block.rows * 1 + row;  // column 1, column-major
        CHECK(r.analytic[idx] == 0.0);
        CHECK(std::abs(r.numeric[idx]) < 1e-8);
    }
}

TEST_CASE("batch loss skips constant-target segments") {
    std::mt19937_64 rng(6);
    LstmRegressor model(ModelConfig{2, 3, 2, 1});
    model.initialize();
    const Sequence flat{random_features(rng, 4, 2), {0.3, 0.3, 0.3, 0.3}};
    const Sequence live{random_features(rng, 4, 2), {0.1, -0.2, 0.4, 0.0}};
    const Sequence* both[] = {&flat, &live};
    const Sequence* only[] = {&live};
    std::size_t skipped = 0;
    std::vector<double> g_both, g_only;
    const double l_both = model.batch_loss(both, &g_both, &skipped);
    const double l_only = model.batch_loss(only, &g_only);
    CHECK(skipped == 1);
    CHECK(l_both == l_only);
    CHECK(g_both == g_only);
}

TEST_CASE("adam with decay and no data gradient shrinks the weights every step") {
    LstmRegressor model(ModelConfig{3, 4, 2, 5});
    model.initialize();
    auto w = model.weights();
    const std::vector<double> zero(w.size(), 0.0);
    AdamState state;
    double previous = norm(w);
    for (int step = 0; step < 50; ++step) {
        adam_step(w, zero, state, 1e-3, 1e-4);
        const double now = norm(w);
        CHECK(now < previous);
        previous = now;
    }
    AdamState frozen;
    auto w0 = model.weights();
    adam_step(w0, zero, frozen, 0.0, 1e-4);
    CHECK(w0 == model.weights());
}

TEST_CASE("target scaling") {
    const std::vector<double> t{-2.0, 0.0, 6.0};
    const auto s = TargetScaling::fit(t, 0.9);
    CHECK(s.apply(-2.0) == doctest::Approx(-0.9));
    CHECK(s.apply(6.0) == doctest::Approx(0.9));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-10, 10);
    for (int i = 0; i < 100; ++i) {
        const double y = u(rng);
        CHECK(std::abs(s.invert(s.apply(y)) - y) < 1e-12);
    }
    CHECK_THROWS_AS(TargetScaling::fit(std::vector<double>{1.0, 1.0}, 0.9), Error);
}

TEST_CASE("predict inverts the stored scaling") {
    std::mt19937_64 rng(12);
    TrainedModel m;
    m.config = ModelConfig{3, 4, 2, 2};
    LstmRegressor r(m.config);
    r.initialize();
    m.weights = r.weights();
    const auto x = random_features(rng, 5, 3);
    const auto raw = r.forward(x);
    CHECK(predict(m, x) == raw);
    m.scaling = TargetScaling{0.5, 0.0};
    const auto doubled = predict(m, x);
    for (std::size_t i = 0; i < raw.size(); ++i) CHECK(doubled[i] == doctest::Approx(2.0 * raw[i]));
    m.scaling = TargetScaling{0.0, 0.0};
    CHECK_THROWS_AS(predict(m, x), Error);
}

TEST_CASE("segmentation") {
    std::mt19937_64 rng(3);
    const Sequence s{random_features(rng, 11, 2), random_targets(rng, 11)};
    const auto parts = segment(s, 4);
    REQUIRE(parts.size() == 3);
    CHECK(parts[2].targets.size() == 3);
    CHECK(parts[1].targets[0] == s.targets[4]);
    CHECK(segment(s, 5).size() == 2);  // trailing single step dropped
}

TEST_CASE("training") {
    const auto data = affine_task(21, 16, 19, 6);
    const std::vector<Sequence> train_set(data.begin(), data.begin() + 12);
    const std::vector<Sequence> val_set(data.begin() + 12, data.end());
    const ModelConfig mc{6, 16, 2, 77};
    TrainConfig tc;
    tc.max_epochs = 200;
    tc.batch_size = 4;
    tc.learning_rate = 3e-3;

    SUBCASE("learns an affinely encoded target") {
        const auto model = train(train_set, val_set, mc, tc);
        std::vector<std::vector<double>> pred, truth;
        for (const auto& s : val_set) {
            pred.push_back(predict(model, s.features));
            truth.push_back(s.targets);
        }
        const double score = score_sequences(pred, truth).ccc;
        MESSAGE("validation CCC " << score << " at epoch " << model.best_epoch);
        CHECK(score > 0.9);
        CHECK(model.validation_history.size() == 201);
        CHECK(model.best_validation_loss == doctest::Approx(model.validation_history[model.best_epoch]));
        for (double l : model.validation_history) CHECK(model.best_validation_loss <= l);
    }
    SUBCASE("zero epochs returns the initial weights") {
        tc.max_epochs = 0;
        const auto model = train(train_set, val_set, mc, tc);
        LstmRegressor init(mc);
        init.initialize();
        CHECK(model.best_epoch == 0);
        CHECK(model.weights == init.weights());
    }
    SUBCASE("identical seeds give identical models") {
        tc.max_epochs = 15;
        const auto a = train(train_set, val_set, mc, tc);
        const auto b = train(train_set, val_set, mc, tc);
        CHECK(a.best_epoch == b.best_epoch);
        CHECK(a.weights == b.weights);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(train({}, val_set, mc, tc), Error);
        std::vector<Sequence> flat = train_set;
        for (auto& s : flat) std::fill(s.targets.begin(), s.targets.end(), 0.25);
        try {
            train(flat, val_set, mc, tc);
            FAIL("expected a training error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::training);
        }
        TrainConfig unscaled = tc;
        unscaled.scale_targets = false;
        unscaled.max_epochs = 1;
        CHECK_THROWS_AS(train(flat, val_set, mc, unscaled), Error);
        TrainConfig bad = tc;
        bad.segment_length = 1;
        CHECK_THROWS_AS(train(train_set, val_set, mc, bad), Error);
    }
}

TEST_CASE("checkpoint round trip") {
    const auto data = affine_task(5, 4, 10, 3);
    TrainConfig tc;
    tc.max_epochs = 3;
    const auto model = train(data, data, ModelConfig{3, 5, 2, 8}, tc);
    const auto path = std::filesystem::temp_directory_path() / "affectrep_test_model.ckpt";
    save_checkpoint(model, path);
    const auto loaded = load_checkpoint(path);
    CHECK(loaded.weights == model.weights);
    CHECK(loaded.best_epoch == model.best_epoch);
    CHECK(loaded.scaling.scale == model.scaling.scale);
    CHECK(loaded.scaling.offset == model.scaling.offset);
    CHECK(loaded.config.hidden_dim == 5);
    CHECK(predict(loaded, data[0].features) == predict(model, data[0].features));
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_checkpoint(path), Error);
}
