#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gradcheck_support.hpp"
#include "sea/tasks.hpp"
#include "test_support.hpp"

using namespace sea;
using nn::Tensor;

namespace {

// zero out every head weight so logits come out exactly zero
template <class S>
void zero_head(nn::EncoderState<S>& st, const nn::MlpSpec& spec) {
    for (const auto idx : spec.weight_idx)
        for (auto& v : st.theta.params[static_cast<std::size_t>(idx)].value.data) v = S{0};
    for (const auto idx : spec.bias_idx)
        for (auto& v : st.theta.params[static_cast<std::size_t>(idx)].value.data) v = S{0};
}

JigsawMask full_mask() {
    JigsawMask m{};
    for (auto& v : m) v = true;
    return m;
}

}  // namespace

TEST_CASE("jigsaw loss closed forms under uniform logits") {
    const auto m = test::tiny_model();
    auto st = nn::EncoderState<double>::init(m, 1);
    zero_head(st, st.jig);

    Tensor<double> anchor = Tensor<double>::zeros({1, 12});
    Tensor<double> f_q = Tensor<double>::zeros({1, static_cast<std::size_t>(m.feature_dim)});

    // all 27 available -> ln 27
    {
        nn::StepContext<double> ctx(st);
        auto f_a = ctx.encode(anchor);
        auto out = jigsaw_loss(ctx, f_a, f_q, {14}, {full_mask()});
        CHECK(ctx.tape().val(out.loss).data[0] == doctest::Approx(std::log(27.0)).epsilon(1e-9));
        // probabilities: all positive, sum 1
        double sum = 0.0;
        for (int c = 0; c < 27; ++c) sum += out.probs.data[static_cast<std::size_t>(c)];
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }

    // looking-up anchor: 18 available -> ln 18, masked classes exactly zero
    {
        JigsawMask mask{};
        for (std::int32_t label = 1; label <= 27; ++label) {
            const auto off = jigsaw_offset_from_label(label);
            mask[static_cast<std::size_t>(label - 1)] = off.de != 1;
        }
        nn::StepContext<double> ctx(st);
        auto f_a = ctx.encode(anchor);
        auto out = jigsaw_loss(ctx, f_a, f_q, {14}, {mask});
        CHECK(ctx.tape().val(out.loss).data[0] == doctest::Approx(std::log(18.0)).epsilon(1e-9));
        double sum = 0.0;
        for (int c = 0; c < 27; ++c) {
            const double p = out.probs.data[static_cast<std::size_t>(c)];
            if (!mask[static_cast<std::size_t>(c)]) CHECK(p == 0.0);
            sum += p;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));

        // label outside the mask is an error
        nn::StepContext<double> ctx2(st);
        auto f_a2 = ctx2.encode(anchor);
        CHECK_THROWS_AS(jigsaw_loss(ctx2, f_a2, f_q, {7}, {mask}), ValidationError);
    }
}

TEST_CASE("jigsaw loss with a +10 margin logit equals the closed form") {
    // direct masked-CE evaluation through the tape op
    nn::Tape<double> tape;
    Tensor<double> z = Tensor<double>::zeros({1, 27});
    z.data[4] = 10.0;
    auto zv = tape.leaf(z);
    auto ce = tape.masked_softmax_ce(zv, {4}, {});
    const double expected = std::log(1.0 + 26.0 * std::exp(-10.0));
    CHECK(tape.val(ce.loss).data[0] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(tape.val(ce.loss).data[0] < 2e-3);
}

TEST_CASE("traversability loss closed forms") {
    const auto m = test::tiny_model();
    auto st = nn::EncoderState<double>::init(m, 2);
    zero_head(st, st.trav);

    Tensor<double> anchor = Tensor<double>::zeros({2, 12});
    {
        nn::StepContext<double> ctx(st);
        auto f_a = ctx.encode(anchor);
        auto out = traversability_loss(ctx, f_a, {1, 0});
        CHECK(ctx.tape().val(out.loss).data[0] == doctest::Approx(std::log(2.0)).epsilon(1e-9));
        CHECK(out.probs.data[0] == doctest::Approx(0.5).epsilon(1e-9));
    }

    // saturated logit: loss < 1e-8; batch averaging = (a+b)/2
    {
        nn::Tape<double> tape;
        auto z = tape.leaf(Tensor<double>::from({2, 1}, {20.0, 0.0}));
        auto out = tape.bce_with_logits(z, {1, 1});
        const double a = nn::bce_from_logit(20.0, true);
        const double b = nn::bce_from_logit(0.0, true);
        CHECK(a < 1e-8);
        CHECK(tape.val(out.loss).data[0] == doctest::Approx((a + b) / 2.0).epsilon(1e-12));
    }
}

TEST_CASE("instance loss closed forms and monotonicity in tau") {
    const std::size_t K = 1024, D = 4;

    // q = k_pos, orthogonal bank: loss = ln(1 + K e^{-1/tau})
    {
        nn::Tape<double> tape;
        // emulate the post-head logits directly through the tape ops the loss uses
        Tensor<double> q = Tensor<double>::from({1, D}, {1.0, 0.0, 0.0, 0.0});
        Tensor<double> k = q;
        MemoryBank<double> bank(K, D);
        Tensor<double> keys = Tensor<double>::zeros({K, D});
        for (std::size_t i = 0; i < K; ++i) keys.data[i * D + 1] = 1.0;  // orthogonal to q
        bank.enqueue(keys);

        auto qv = tape.leaf(q);
        auto pos = tape.rowdot_const(qv, k);
        auto negs = tape.matmul_nt_const(qv, bank.negatives());
        auto logits = tape.scale(tape.concat_cols(pos, negs), 1.0 / 0.07);
        auto ce = tape.masked_softmax_ce(logits, {0}, {});
        const double expected = std::log(1.0 + K * std::exp(-1.0 / 0.07));
        CHECK(tape.val(ce.loss).data[0] == doctest::Approx(expected).epsilon(1e-9));
        CHECK(tape.val(ce.loss).data[0] < 1e-3);
    }

    // all logits equal -> ln(K+1)
    {
        nn::Tape<double> tape;
        auto z = tape.leaf(Tensor<double>::zeros({1, K + 1}));
        auto ce = tape.masked_softmax_ce(z, {0}, {});
        CHECK(tape.val(ce.loss).data[0] == doctest::Approx(std::log(static_cast<double>(K + 1))).epsilon(1e-9));
    }

    // halving tau with a correct-positive configuration strictly lowers the loss
    {
        auto loss_at_tau = [&](double tau) {
            nn::Tape<double> tape;
            Tensor<double> q = Tensor<double>::from({1, 2}, {1.0, 0.0});
            Tensor<double> k = Tensor<double>::from({1, 2}, {0.9, std::sqrt(1.0 - 0.81)});
            MemoryBank<double> bank(4, 2);
            Tensor<double> keys = Tensor<double>::zeros({4, 2});
            for (std::size_t i = 0; i < 4; ++i) {
                keys.data[i * 2 + 0] = 0.1;
                keys.data[i * 2 + 1] = std::sqrt(1.0 - 0.01);
            }
            bank.enqueue(keys);
            auto qv = tape.leaf(q);
            auto pos = tape.rowdot_const(qv, k);
            auto negs = tape.matmul_nt_const(qv, bank.negatives());
            auto logits = tape.scale(tape.concat_cols(pos, negs), 1.0 / tau);
            auto ce = tape.masked_softmax_ce(logits, {0}, {});
            return tape.val(ce.loss).data[0];
        };
        CHECK(loss_at_tau(0.035) < loss_at_tau(0.07));
    }
}

TEST_CASE("instance loss through the heads: empty bank degenerates to zero") {
    const auto m = test::tiny_model();
    auto st = nn::EncoderState<double>::init(m, 8);
    MemoryBank<double> bank(16, static_cast<std::size_t>(m.ins_proj_dim));

    Rng rng(4);
    Tensor<double> anchor = Tensor<double>::zeros({2, 12});
    for (auto& v : anchor.data) v = rng.uniform(0.0, 1.0);
    Tensor<double> keys = Tensor<double>::zeros({2, static_cast<std::size_t>(m.ins_proj_dim)});
    for (auto& v : keys.data) v = rng.uniform(-1.0, 1.0);
    keys = nn::l2_normalize_rows(keys);

    nn::StepContext<double> ctx(st);
    auto f_a = ctx.encode(anchor);
    auto out = instance_loss(ctx, f_a, keys, bank, 0.07);
    CHECK(out.negatives_used == 0);
    CHECK(ctx.tape().val(out.loss).data[0] == doctest::Approx(0.0));
    CHECK(out.logits.cols() == 1);
}

TEST_CASE("instance gradients flow only into online parameters") {
    const auto m = test::tiny_model();
    auto st = nn::EncoderState<double>::init(m, 9);
    MemoryBank<double> bank(8, static_cast<std::size_t>(m.ins_proj_dim));
    Rng rng(5);
    Tensor<double> bkeys = Tensor<double>::zeros({8, static_cast<std::size_t>(m.ins_proj_dim)});
    for (auto& v : bkeys.data) v = rng.uniform(-1.0, 1.0);
    bank.enqueue(nn::l2_normalize_rows(bkeys));

    Tensor<double> anchor = Tensor<double>::zeros({2, 12});
    for (auto& v : anchor.data) v = rng.uniform(0.0, 1.0);
    Tensor<double> keys = Tensor<double>::zeros({2, static_cast<std::size_t>(m.ins_proj_dim)});
    for (auto& v : keys.data) v = rng.uniform(-1.0, 1.0);
    keys = nn::l2_normalize_rows(keys);

    instrument::reset_all();
    nn::StepContext<double> ctx(st);
    auto f_a = ctx.encode(anchor);
    auto out = instance_loss(ctx, f_a, keys, bank, 0.07);
    ctx.backward(out.loss);

    // encoder and instance-head parameters receive gradient; jigsaw and
    // traversability heads cannot (they are not on this tape), and the
    // momentum store has no gradient buffers at all.
    double enc_norm = 0.0, ins_norm = 0.0, other_norm = 0.0;
    auto grad_norm = [&](const nn::MlpSpec& spec) {
        double s = 0.0;
        for (const auto idx : spec.weight_idx)
            for (const auto v : ctx.grad(idx).data) s += v * v;
        return s;
    };
    enc_norm = grad_norm(st.enc);
    ins_norm = grad_norm(st.ins);
    other_norm = grad_norm(st.jig) + grad_norm(st.trav);
    CHECK(enc_norm > 0.0);
    CHECK(ins_norm > 0.0);
    CHECK(other_norm == 0.0);
}

TEST_CASE("memory bank: ring order, unit norms, dim checks") {
    MemoryBank<float> bank(4, 2);
    CHECK(bank.size() == 0);

    auto key = [](float x, float y) {
        auto t = Tensor<float>::from({1, 2}, {x, y});
        return nn::l2_normalize_rows(t);
    };
    Tensor<float> first3 = Tensor<float>::zeros({3, 2});
    Tensor<float> second3 = Tensor<float>::zeros({3, 2});
    for (int i = 0; i < 3; ++i) {
        const auto a = key(1.0f + i, 1.0f);
        const auto b = key(10.0f + i, -2.0f);
        first3.data[i * 2] = a.data[0];
        first3.data[i * 2 + 1] = a.data[1];
        second3.data[i * 2] = b.data[0];
        second3.data[i * 2 + 1] = b.data[1];
    }
    bank.enqueue(first3);
    CHECK(bank.size() == 3);
    CHECK(bank.cursor() == 3);
    bank.enqueue(second3);
    CHECK(bank.size() == 4);
    CHECK(bank.cursor() == 2);  // wrapped: slots 3, 0, 1 overwritten

    // slot 3 holds second3[0], slots 0..1 hold second3[1..2], slot 2 keeps first3[2]
    const auto& e = bank.entries();
    CHECK(e.data[3 * 2] == second3.data[0]);
    CHECK(e.data[0] == second3.data[2]);
    CHECK(e.data[1 * 2] == second3.data[4]);
    CHECK(e.data[2 * 2] == first3.data[4]);

    for (std::size_t i = 0; i < bank.size(); ++i) {
        const double n = std::hypot(e.data[i * 2], e.data[i * 2 + 1]);
        CHECK(n == doctest::Approx(1.0).epsilon(1e-6));
    }

    Tensor<float> bad = Tensor<float>::zeros({1, 3});
    CHECK_THROWS_AS(bank.enqueue(bad), ValidationError);
}

TEST_CASE("gradcheck: each loss and the combined loss vs central differences") {
    const auto m = test::tiny_model();
    for (const auto which : {test::LossUnderTest::jigsaw, test::LossUnderTest::traversability,
                             test::LossUnderTest::instance, test::LossUnderTest::combined}) {
        const double err = test::gradcheck_max_rel_error(m, which, 123);
        CHECK(err <= 1e-5);
    }
}

TEST_CASE("augment: identity params reproduce the input exactly") {
    WorldConfig cfg;
    cfg.rows = 2;
    cfg.cols = 2;
    cfg.seed = 3;
    const World w = generate_world(cfg);
    const ViewImage view = render_view(w, Pose{0, 0, 1});

    const AugmentParams identity;  // defaults are the identity
    const ViewImage out = apply_augment(view, identity);
    CHECK(out.rgb == view.rgb);
}

TEST_CASE("augment: parameter ranges, determinism, variety") {
    AugmentConfig cfg;
    Rng rng(77);
    for (int i = 0; i < 100000; ++i) {
        const AugmentParams p = sample_augment_params(cfg, rng);
        CHECK(p.crop_scale >= 0.8);
        CHECK(p.crop_scale <= 1.0);
        CHECK(std::fabs(p.rot_deg) <= 10.0);
        CHECK(std::fabs(p.shear_deg) <= 10.0);
        CHECK(p.brightness >= 0.6);
        CHECK(p.brightness <= 1.4);
    }

    WorldConfig wcfg;
    wcfg.rows = 2;
    wcfg.cols = 2;
    wcfg.seed = 3;
    const World w = generate_world(wcfg);
    const ViewImage view = render_view(w, Pose{1, 4, 1});

    Rng a(5), b(5), c(6);
    const ViewImage outA = augment(view, cfg, a);
    const ViewImage outB = augment(view, cfg, b);
    const ViewImage outC = augment(view, cfg, c);
    CHECK(outA.rgb == outB.rgb);  // same stream, same result

    double dist = 0.0;
    for (std::size_t i = 0; i < outA.rgb.size(); ++i) {
        const double d = static_cast<double>(outA.rgb[i]) - outC.rgb[i];
        dist += d * d;
    }
    CHECK(dist > 0.0);  // different stream, different image

    for (const float v : outA.rgb) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
}
