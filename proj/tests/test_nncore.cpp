#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gradcheck_support.hpp"
#include "oracle/oracles.hpp"
#include "sea/instrument.hpp"
#include "sea/nn/checkpoint.hpp"
#include "sea/nn/functional.hpp"
#include "sea/nn/model.hpp"
#include "sea/nn/optim.hpp"
#include "sea/nn/tape.hpp"
#include "test_support.hpp"

using namespace sea;
using nn::Tensor;

TEST_CASE("dense with identity weights is a pass-through; relu clamps") {
    nn::Tape<double> tape;
    auto x = tape.leaf(Tensor<double>::from({1, 3}, {-1.0, 0.0, 2.0}));
    Tensor<double> eye = Tensor<double>::zeros({3, 3});
    for (int i = 0; i < 3; ++i) eye.at(static_cast<std::size_t>(i), static_cast<std::size_t>(i)) = 1.0;
    auto w = tape.leaf(eye);
    auto b = tape.leaf(Tensor<double>::zeros({3}));
    auto y = tape.dense(x, w, b);
    CHECK(tape.val(y).data == std::vector<double>{-1.0, 0.0, 2.0});

    auto r = tape.relu(y);
    CHECK(tape.val(r).data == std::vector<double>{0.0, 0.0, 2.0});
}

TEST_CASE("tape-free forward allocates no tape nodes") {
    auto st = nn::EncoderState<float>::init(test::tiny_model(), 3);
    Tensor<float> x = Tensor<float>::zeros({2, 12});
    instrument::reset_all();
    const auto before = instrument::tape_nodes().load();
    (void)st.encode(x);
    (void)st.encode_momentum(x);
    (void)st.ins_head_momentum(st.encode_momentum(x));
    CHECK(instrument::tape_nodes().load() == before);
}

TEST_CASE("backward of sum(W*x) gives outer(1, x)") {
    nn::Tape<double> tape;
    auto x = tape.leaf(Tensor<double>::from({1, 3}, {0.5, -1.5, 2.0}));
    Tensor<double> w0 = Tensor<double>::zeros({2, 3});
    for (auto& v : w0.data) v = 0.3;
    auto w = tape.leaf(w0);
    auto b = tape.leaf(Tensor<double>::zeros({2}));
    auto y = tape.dense(x, w, b);
    auto s = tape.sum(y);
    tape.backward(s);
    const auto& gw = tape.grad(w);
    CHECK(gw.data == std::vector<double>{0.5, -1.5, 2.0, 0.5, -1.5, 2.0});
    const auto& gb = tape.grad(b);
    CHECK(gb.data == std::vector<double>{1.0, 1.0});
}

TEST_CASE("relu subgradient at exactly zero is zero") {
    nn::Tape<double> tape;
    auto x = tape.leaf(Tensor<double>::from({1, 3}, {-1.0, 0.0, 2.0}));
    auto r = tape.relu(x);
    auto s = tape.sum(r);
    tape.backward(s);
    CHECK(tape.grad(x).data == std::vector<double>{0.0, 0.0, 1.0});
}

TEST_CASE("3-layer net gradients match central differences (64-bit)") {
    // encoder alone, summed squared outputs as the scalar
    const auto m = test::tiny_model();
    auto st = nn::EncoderState<double>::init(m, 17);
    Rng rng(99);
    Tensor<double> x = Tensor<double>::zeros({2, 12});
    for (auto& v : x.data) v = rng.uniform(0.1, 0.9);

    auto eval = [&](const std::vector<double>& flat) {
        auto stc = st;
        test::unpack_theta(stc, flat);
        const auto f = stc.encode(x);
        double s = 0.0;
        for (const auto v : f.data) s += v * v;
        return s;
    };
    const auto flat = test::pack_theta(st);
    const auto numeric = oracle::oracle_grad(eval, flat, 1e-5);

    nn::StepContext<double> ctx(st);
    auto f = ctx.encode(x);
    // d(f . c)/dtheta at c = f(theta0) is half of d(sum f^2)/dtheta, so the
    // factor-2 scale makes the tape gradient the true derivative of sum f^2.
    auto fc = ctx.tape().rowdot_const(f, ctx.tape().val(f));
    auto total = ctx.tape().scale(ctx.tape().sum(fc), 2.0);
    ctx.backward(total);
    std::vector<double> analytic;
    for (std::size_t i = 0; i < st.theta.params.size(); ++i) {
        const auto& g = ctx.grad(static_cast<std::int32_t>(i));
        analytic.insert(analytic.end(), g.data.begin(), g.data.end());
    }
    REQUIRE(analytic.size() == numeric.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double denom = std::max({std::fabs(analytic[i]), std::fabs(numeric[i]), 1e-3});
        worst = std::max(worst, std::fabs(analytic[i] - numeric[i]) / denom);
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("nesterov update matches the stated recurrence") {
    using nn::SgdConfig;
    // v=0, wd=0, g=1, mu=0.95, lr=0.03 -> v'=1, dp = -0.03*(1+0.95) = -0.0585
    Tensor<double> p = Tensor<double>::from({1}, {1.0});
    Tensor<double> v = Tensor<double>::zeros({1});
    Tensor<double> g = Tensor<double>::from({1}, {1.0});
    SgdConfig cfg;
    cfg.lr = 0.03;
    cfg.momentum = 0.95;
    cfg.weight_decay = 0.0;
    nn::sgd_update_tensor(p, v, g, cfg);
    CHECK(v.data[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.data[0] == doctest::Approx(1.0 - 0.0585).epsilon(1e-12));

    // zero gradient, zero decay: parameter unchanged
    p = Tensor<double>::from({1}, {0.7});
    v = Tensor<double>::zeros({1});
    g = Tensor<double>::zeros({1});
    nn::sgd_update_tensor(p, v, g, cfg);
    CHECK(p.data[0] == 0.7);

    // weight decay only: effective g = 1e-4, dp = -lr*1e-4*(1+mu)
    p = Tensor<double>::from({1}, {1.0});
    v = Tensor<double>::zeros({1});
    g = Tensor<double>::zeros({1});
    cfg.weight_decay = 1e-4;
    nn::sgd_update_tensor(p, v, g, cfg);
    CHECK(p.data[0] == doctest::Approx(1.0 - 0.03 * 1e-4 * 1.95).epsilon(1e-12));

    // plain (non-nesterov) momentum for contrast: dp = -lr * v'
    p = Tensor<double>::from({1}, {1.0});
    v = Tensor<double>::from({1}, {0.5});
    g = Tensor<double>::from({1}, {1.0});
    cfg.weight_decay = 0.0;
    cfg.nesterov = false;
    nn::sgd_update_tensor(p, v, g, cfg);
    CHECK(v.data[0] == doctest::Approx(0.95 * 0.5 + 1.0).epsilon(1e-12));
    CHECK(p.data[0] == doctest::Approx(1.0 - 0.03 * (0.95 * 0.5 + 1.0)).epsilon(1e-12));
}

TEST_CASE("ema_update follows theta_hat <- m*theta_hat + (1-m)*theta") {
    auto st = nn::EncoderState<double>::init(test::tiny_model(), 5);
    // force known values on one pair
    auto& hat = st.theta_hat.params[0].value;
    const auto online_idx = st.theta.find(st.theta_hat.params[0].name);
    auto& online = st.theta.params[static_cast<std::size_t>(online_idx)].value;
    for (auto& v : hat.data) v = 1.0;
    for (auto& v : online.data) v = 0.0;

    nn::ema_update(st, 0.999);
    for (const auto v : hat.data) CHECK(v == doctest::Approx(0.999).epsilon(1e-12));

    nn::ema_update(st, 1.0);  // identity
    for (const auto v : hat.data) CHECK(v == doctest::Approx(0.999).epsilon(1e-12));

    nn::ema_update(st, 0.0);  // exact copy
    for (std::size_t i = 0; i < hat.data.size(); ++i) CHECK(hat.data[i] == online.data[i]);

    CHECK_THROWS_AS(nn::ema_update(st, -0.1), ValidationError);
    CHECK_THROWS_AS(nn::ema_update(st, 1.1), ValidationError);
}

TEST_CASE("optimizer step never mutates theta_hat") {
    auto st = nn::EncoderState<double>::init(test::tiny_model(), 5);
    const auto before = st.theta_hat;  // deep copy

    Rng rng(1);
    Tensor<double> x = Tensor<double>::zeros({2, 12});
    for (auto& v : x.data) v = rng.uniform(0.0, 1.0);
    nn::StepContext<double> ctx(st);
    auto f = ctx.encode(x);
    auto total = ctx.tape().sum(ctx.tape().rowdot_const(f, ctx.tape().val(f)));
    ctx.backward(total);
    nn::sgd_step(st, ctx, nn::SgdConfig{});

    for (std::size_t i = 0; i < before.params.size(); ++i)
        CHECK(before.params[i].value.data == st.theta_hat.params[i].value.data);
}

TEST_CASE("cosine schedule endpoints and errors") {
    CHECK(nn::cosine_lr(0, 100, 0.03) == doctest::Approx(0.03).epsilon(1e-12));
    CHECK(nn::cosine_lr(50, 100, 0.03) == doctest::Approx(0.015).epsilon(1e-12));
    CHECK(nn::cosine_lr(100, 100, 0.03) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_THROWS_AS(nn::cosine_lr(101, 100, 0.03), ValidationError);
    CHECK_THROWS_AS(nn::cosine_lr(0, 0, 0.03), ValidationError);
    CHECK_THROWS_AS(nn::cosine_lr(-1, 100, 0.03), ValidationError);
}

TEST_CASE("softmax, bce, cross-entropy, l2 normalize") {
    const auto p = nn::softmax<double>({0.0, 0.0, 0.0});
    CHECK(p[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    double sum = 0.0;
    for (const auto v : p) {
        CHECK(v > 0.0);
        sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));

    CHECK(nn::bce_from_logit(0.0, true) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(nn::bce_from_logit(0.0, false) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    // 3 classes with a +10 margin: loss = ln(1 + 2 e^-10) < 1e-4
    const auto probs = nn::softmax<double>({10.0, 0.0, 0.0});
    const double ce = nn::cross_entropy<double>({probs}, {0});
    CHECK(ce == doctest::Approx(std::log(1.0 + 2.0 * std::exp(-10.0))).epsilon(1e-12));
    CHECK(ce < 1e-4);

    const auto u = nn::l2_normalize<double>({3.0, 4.0});
    CHECK(u[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(u[1] == doctest::Approx(0.8).epsilon(1e-12));
    CHECK_THROWS_AS(nn::l2_normalize<double>({0.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(nn::softmax<double>({}), ValidationError);
}

TEST_CASE("checkpoint round-trips bit-exactly and validates") {
    auto st = nn::EncoderState<float>::init(test::tiny_model(), 11);
    // make velocities non-trivial
    for (auto& p : st.theta.params)
        for (auto& v : p.velocity.data) v = 0.25f;

    const auto dir = std::filesystem::temp_directory_path() / "sea_ckpt_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "state.sea1").string();
    nn::save_state(st, path);
    const auto loaded = nn::load_state(path);

    REQUIRE(loaded.theta.params.size() == st.theta.params.size());
    for (std::size_t i = 0; i < st.theta.params.size(); ++i) {
        CHECK(loaded.theta.params[i].name == st.theta.params[i].name);
        CHECK(loaded.theta.params[i].value.data == st.theta.params[i].value.data);
        CHECK(loaded.theta.params[i].velocity.data == st.theta.params[i].velocity.data);
    }
    for (std::size_t i = 0; i < st.theta_hat.params.size(); ++i)
        CHECK(loaded.theta_hat.params[i].value.data == st.theta_hat.params[i].value.data);

    // re-save reproduces identical bytes
    const std::string path2 = (dir / "state2.sea1").string();
    nn::save_state(loaded, path2);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);

    // corruption is caught by the CRC
    std::vector<std::uint8_t> bytes(b1.begin(), b1.end());
    bytes[bytes.size() / 2] ^= 0xFF;
    CHECK_THROWS_AS(nn::decode_checkpoint(bytes.data(), bytes.size()), ValidationError);

    // version mismatch is caught before the CRC
    std::vector<std::uint8_t> vbytes(b1.begin(), b1.end());
    vbytes[4] = 9;
    CHECK_THROWS_WITH_AS(nn::decode_checkpoint(vbytes.data(), vbytes.size()),
                         doctest::Contains("version"), ValidationError);

    // bad magic
    std::vector<std::uint8_t> mbytes(b1.begin(), b1.end());
    mbytes[0] = 'X';
    CHECK_THROWS_WITH_AS(nn::decode_checkpoint(mbytes.data(), mbytes.size()),
                         doctest::Contains("magic"), ValidationError);

    std::filesystem::remove_all(dir);
}

TEST_CASE("tensor construction validates shapes") {
    CHECK_THROWS_AS(Tensor<float>::from({2, 2}, {1.0f}), ValidationError);
    auto t = Tensor<float>::zeros({3, 4});
    CHECK(t.numel() == 12);
    CHECK(t.rows() == 3);
    CHECK(t.cols() == 4);
}
