#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>

#include "testutil.hpp"
#include "vocapose/core/checkpoint.hpp"
#include "vocapose/core/kernels.hpp"
#include "vocapose/core/layers.hpp"
#include "vocapose/core/optimizer.hpp"
#include "vocapose/core/parallel.hpp"
#include "vocapose/core/rng.hpp"

using namespace vp::core;
using vp::test::check_gradients;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (double& x : t.data) x = rng.gaussian(0.0, scale);
    return t;
}

}  // namespace

TEST_CASE("tensor shape/data consistency is enforced") {
    CHECK_THROWS_AS(Tensor({2, 3}, {1.0, 2.0}), std::invalid_argument);
    Tensor t({2, 3});
    CHECK(t.numel() == 6);
    CHECK(t.all_finite());
}

TEST_CASE("dense with identity weights is the identity") {
    Rng rng(1);
    Dense d("d", 2, 2, rng);
    d.w.value = Tensor({2, 2}, {1, 0, 0, 1});
    d.b.value = Tensor::zeros({2});
    Tape t;
    Val y = d.forward(t, t.constant(Tensor({1, 2}, {3, 4})));
    CHECK(t.value(y).at(0, 0) == doctest::Approx(3.0));
    CHECK(t.value(y).at(0, 1) == doctest::Approx(4.0));
}

TEST_CASE("conv1d hand-convolved example") {
    // kernel=2 stride=2, 1->1 channels, weights [1,1], b=0: [1,2,3,4] -> [3,7]
    Rng rng(1);
    Conv1d c("c", 1, 1, 2, 2, 0, rng);
    c.w.value = Tensor({1, 1, 2}, {1, 1});
    c.b.value = Tensor::zeros({1});
    Tape t;
    Val y = c.forward(t, t.constant(Tensor({1, 4}, {1, 2, 3, 4})));
    REQUIRE(t.value(y).shape == Shape{1, 2});
    CHECK(t.value(y).at(0) == doctest::Approx(3.0));
    CHECK(t.value(y).at(1) == doctest::Approx(7.0));
}

TEST_CASE("layer-norm normalizes to zero mean unit variance") {
    Tape t;
    LayerNorm ln("ln", 2);
    Val y = ln.forward(t, t.constant(Tensor({1, 2}, {1, 3})));
    CHECK(t.value(y).at(0) == doctest::Approx(-1.0).epsilon(1e-4));
    CHECK(t.value(y).at(1) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("shape mismatches are rejected with both shapes reported") {
    Tape t;
    Val a = t.constant(Tensor({2, 3}));
    Val b = t.constant(Tensor({3, 2}));
    CHECK_THROWS_AS(t.add(a, b), ShapeError);
    try {
        t.matmul(t.constant(Tensor({2, 3})), t.constant(Tensor({2, 3})));
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("expected") != std::string::npos);
        CHECK(msg.find("[2, 3]") != std::string::npos);
    }
}

TEST_CASE("backward: loss = sum(W x) gives dW = [[1,2],[1,2]]") {
    Rng rng(1);
    Parameter w("w", random_tensor({2, 2}, rng));
    Tape t;
    Val x = t.constant(Tensor({2, 1}, {1, 2}));
    Val loss = t.sum(t.matmul(t.param(w), x));
    t.backward(loss);
    CHECK(w.grad.at(0, 0) == doctest::Approx(1.0));
    CHECK(w.grad.at(0, 1) == doctest::Approx(2.0));
    CHECK(w.grad.at(1, 0) == doctest::Approx(1.0));
    CHECK(w.grad.at(1, 1) == doctest::Approx(2.0));
}

TEST_CASE("backward: constant loss leaves all gradients zero") {
    Rng rng(2);
    Parameter w("w", random_tensor({3, 3}, rng));
    Tape t;
    (void)t.param(w);  // on tape but not on the loss path
    Val loss = t.sum(t.constant(Tensor::scalar(5.0)));
    t.backward(loss);
    for (double g : w.grad.data) CHECK(g == 0.0);
}

TEST_CASE("backward rejects non-scalar loss") {
    Tape t;
    Val v = t.constant(Tensor({2}, {1, 2}));
    CHECK_THROWS_AS(t.backward(v), std::invalid_argument);
}

TEST_CASE("gradient check: every layer type, 20+ random configs") {
    // dense, conv1d, transposed conv1d, layer-norm, embedding lookup,
    // causal self-attention, softmax, relu, gelu; plus the loss heads.
    double worst = 0.0;
    std::string worst_desc;
    auto track = [&](const vp::test::GradCheckResult& r, const std::string& what) {
        if (r.max_rel_err > worst) {
            worst = r.max_rel_err;
            worst_desc = what + ": " + r.worst;
        }
    };

    for (uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        const int64_t n = 2 + static_cast<int64_t>(rng.below(3));
        const int64_t din = 2 + static_cast<int64_t>(rng.below(4));
        const int64_t dout = 2 + static_cast<int64_t>(rng.below(4));

        {
            Dense d("dense", din, dout, rng);
            Tensor x = random_tensor({n, din}, rng);
            ParamRefs ps;
            d.params(ps);
            track(check_gradients(ps,
                                  [&](Tape& t) { return t.mean(t.gelu(d.forward(t, t.constant(x)))); }),
                  "dense+gelu");
        }
        {
            const int64_t len = 6 + static_cast<int64_t>(rng.below(5));
            Conv1d c("conv", din, dout, 3, 2, 1, rng);
            Tensor x = random_tensor({din, len}, rng);
            ParamRefs ps;
            c.params(ps);
            track(check_gradients(ps,
                                  [&](Tape& t) { return t.mean(t.relu(c.forward(t, t.constant(x)))); }),
                  "conv1d+relu");
        }
        {
            const int64_t len = 3 + static_cast<int64_t>(rng.below(4));
            ConvTranspose1d c("convt", din, dout, 2, 2, rng);
            Tensor x = random_tensor({din, len}, rng);
            ParamRefs ps;
            c.params(ps);
            track(check_gradients(
                      ps, [&](Tape& t) { return t.smooth_l1_mean(c.forward(t, t.constant(x)),
                                                                 t.constant(Tensor::zeros({dout, (len - 1) * 2 + 2}))); }),
                  "convt1d+smooth_l1");
        }
        {
            LayerNorm ln("ln", din);
            Tensor x = random_tensor({n, din}, rng, 2.0);
            ParamRefs ps;
            ln.params(ps);
            track(check_gradients(ps, [&](Tape& t) { return t.mean(ln.forward(t, t.constant(x))); }),
                  "layer_norm");
        }
        {
            Embedding e("emb", 7, din, rng);
            std::vector<int32_t> ids = {0, 3, 6, 3};
            ParamRefs ps;
            e.params(ps);
            track(check_gradients(
                      ps, [&](Tape& t) { return t.mean(t.softmax_rows(e.forward(t, ids))); }),
                  "embedding+softmax");
        }
        {
            const int64_t dm = 4 + 2 * static_cast<int64_t>(rng.below(3));
            CausalSelfAttention att("att", dm, 2, rng);
            Tensor x = random_tensor({n, dm}, rng);
            ParamRefs ps;
            att.params(ps);
            track(check_gradients(ps,
                                  [&](Tape& t) { return t.mean(att.forward(t, t.constant(x))); }),
                  "attention");
        }
        {
            Parameter logits("logits", random_tensor({n, 5}, rng));
            std::vector<int32_t> targets;
            for (int64_t i = 0; i < n; ++i) targets.push_back(static_cast<int32_t>(rng.below(5)));
            track(check_gradients({&logits},
                                  [&](Tape& t) { return t.cross_entropy_mean(t.param(logits), targets); }),
                  "cross_entropy");
        }
    }
    INFO("worst offender: " << worst_desc);
    CHECK(worst < 1e-4);
}

TEST_CASE("determinism: same seed and inputs give bitwise-identical outputs") {
    auto run = [](uint64_t seed) {
        Rng rng(seed);
        CausalSelfAttention att("att", 8, 2, rng);
        Tensor x = random_tensor({5, 8}, rng);
        Tape t;
        return t.value(att.forward(t, t.constant(x))).data;
    };
    CHECK(run(7) == run(7));
}

TEST_CASE("adam: zero gradient leaves values unchanged") {
    Parameter p("p", Tensor({2}, {1.5, -0.5}));
    adam_step({&p}, AdamConfig{}, 1);
    CHECK(p.value.at(0) == 1.5);
    CHECK(p.value.at(1) == -0.5);
}

TEST_CASE("adam: first step on unit gradient moves by about -lr") {
    Parameter p("p", Tensor::scalar(0.0));
    p.grad = Tensor::scalar(1.0);
    AdamConfig cfg;  // lr 0.0002
    adam_step({&p}, cfg, 1);
    CHECK(p.value.at(0) == doctest::Approx(-0.0002).epsilon(1e-6));
    CHECK(p.grad.at(0) == 0.0);  // zeroed afterward
}

TEST_CASE("adam: step size nonincreasing under constant gradient") {
    Parameter p("p", Tensor::scalar(0.0));
    AdamConfig cfg;
    double prev = 1e9;
    double last_value = 0.0;
    for (int64_t s = 1; s <= 5; ++s) {
        p.grad = Tensor::scalar(0.7);
        adam_step({&p}, cfg, s);
        const double delta = std::abs(p.value.at(0) - last_value);
        CHECK(delta <= prev + 1e-15);
        prev = delta;
        last_value = p.value.at(0);
    }
}

TEST_CASE("adam: non-finite gradient aborts with parameter path") {
    Parameter p("net.layer3.w", Tensor::scalar(0.0));
    p.grad = Tensor::scalar(std::numeric_limits<double>::quiet_NaN());
    try {
        adam_step({&p}, AdamConfig{}, 1);
        FAIL("expected abort");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("net.layer3.w") != std::string::npos);
        CHECK(p.value.at(0) == 0.0);
    }
}

TEST_CASE("adam config validation") {
    AdamConfig bad;
    bad.beta1 = 1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = AdamConfig{};
    bad.learning_rate = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("kernels: OpenMP variants match serial reference bitwise") {
    Rng rng(11);
    const int64_t m = 37, k = 23, n = 31;
    Tensor a = random_tensor({m, k}, rng), b = random_tensor({k, n}, rng);
    Tensor bt = random_tensor({n, k}, rng), at = random_tensor({k, m}, rng);

    const int saved = num_threads();
    set_num_threads(4);

    Tensor c1({m, n}), c2({m, n});
    serial::matmul_nn(a.data.data(), b.data.data(), c1.data.data(), m, k, n);
    kernels::matmul_nn(a.data.data(), b.data.data(), c2.data.data(), m, k, n);
    CHECK(c1.data == c2.data);

    serial::matmul_nt(a.data.data(), bt.data.data(), c1.data.data(), m, k, n);
    kernels::matmul_nt(a.data.data(), bt.data.data(), c2.data.data(), m, k, n);
    CHECK(c1.data == c2.data);

    serial::matmul_tn(at.data.data(), b.data.data(), c1.data.data(), m, k, n);
    kernels::matmul_tn(at.data.data(), b.data.data(), c2.data.data(), m, k, n);
    CHECK(c1.data == c2.data);

    const int64_t cin = 5, cout = 7, l = 40, kw = 4, stride = 2, pad = 1;
    const int64_t lout = (l + 2 * pad - kw) / stride + 1;
    Tensor x = random_tensor({cin, l}, rng), w = random_tensor({cout, cin, kw}, rng);
    Tensor bias = random_tensor({cout}, rng);
    Tensor y1({cout, lout}), y2({cout, lout});
    serial::conv1d_forward(x.data.data(), w.data.data(), bias.data.data(), y1.data.data(), cin, l,
                           cout, kw, stride, pad, lout);
    kernels::conv1d_forward(x.data.data(), w.data.data(), bias.data.data(), y2.data.data(), cin, l,
                            cout, kw, stride, pad, lout);
    CHECK(y1.data == y2.data);

    Tensor z = random_tensor({64, 6}, rng), cb = random_tensor({17, 6}, rng);
    std::vector<int32_t> i1(64), i2(64);
    serial::nearest_code(z.data.data(), cb.data.data(), i1.data(), 64, 17, 6);
    kernels::nearest_code(z.data.data(), cb.data.data(), i2.data(), 64, 17, 6);
    CHECK(i1 == i2);

    set_num_threads(saved);
}

TEST_CASE("checkpoint: save/load round trip with meta") {
    Rng rng(3);
    Parameter a("enc.w", random_tensor({3, 4}, rng));
    Parameter b("enc.b", random_tensor({4}, rng));
    Checkpoint ck;
    ck.put_params({&a, &b});
    ck.meta["note"] = "test";
    const std::string path = "test_ck.bin";
    ck.save(path);

    Checkpoint re = Checkpoint::load(path);
    CHECK(re.meta.at("note") == "test");
    CHECK(re.get("enc.w").data == a.value.data);
    Parameter a2("enc.w", Tensor::zeros({3, 4}));
    Parameter b2("enc.b", Tensor::zeros({4}));
    re.load_into({&a2, &b2});
    CHECK(a2.value.data == a.value.data);
    CHECK(b2.value.data == b.value.data);

    CHECK_THROWS(re.get("missing"));
    std::remove(path.c_str());
}

TEST_CASE("checkpoint: f32 tensors round-trip through the container") {
    Tensor t({2, 2}, {1.25, -2.5, 3.75, 0.5});  // exactly representable in f32
    Checkpoint ck;
    ck.put("q", t, /*as_f32=*/true);
    ck.save("test_ck32.bin");
    Checkpoint re = Checkpoint::load("test_ck32.bin");
    CHECK(re.get("q").data == t.data);
    std::remove("test_ck32.bin");
}

TEST_CASE("causality: permuting later rows does not change earlier attention output") {
    Rng rng(5);
    CausalSelfAttention att("att", 8, 2, rng);
    Tensor x = random_tensor({6, 8}, rng);
    Tape t1;
    Tensor y1 = t1.value(att.forward(t1, t1.constant(x)));
    Tensor x2 = x;
    for (int64_t j = 0; j < 8; ++j) std::swap(x2.at(4, j), x2.at(5, j));
    Tape t2;
    Tensor y2 = t2.value(att.forward(t2, t2.constant(x2)));
    for (int64_t i = 0; i < 4; ++i)
        for (int64_t j = 0; j < 8; ++j) CHECK(y1.at(i, j) == doctest::Approx(y2.at(i, j)).epsilon(1e-12));
}
