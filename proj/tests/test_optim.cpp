#include <doctest.h>

#include "gcondnet/optim.hpp"
#include "gcondnet/rng.hpp"
#include "helpers.hpp"

using namespace gcondnet;
using testutil::Mat;

TEST_CASE("AdamW: zero gradient leaves parameters unchanged (wd = 0)") {
    auto rng = make_engine(1, 0);
    Parameter<double> p("p", testutil::random_mat(3, 3, rng));
    Mat before = p.value;
    AdamW<double> opt;
    opt.step({&p});
    CHECK((p.value.array() == before.array()).all());
}

TEST_CASE("AdamW: zero gradient with decay applies pure decoupled decay") {
    auto rng = make_engine(2, 0);
    Parameter<double> p("p", testutil::random_mat(2, 4, rng));
    Mat before = p.value;
    AdamW<double>::Hyper h;
    h.lr = 1e-3;
    h.weight_decay = 0.5;
    AdamW<double> opt(h);
    opt.step({&p});
    CHECK((p.value - before * (1.0 - 1e-3 * 0.5)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("AdamW: scalar constant gradient matches the hand-unrolled recurrence") {
    Parameter<double> p("p", Mat::Constant(1, 1, 0.7));
    AdamW<double>::Hyper h;
    h.lr = 1e-2;
    AdamW<double> opt(h);

    double w = 0.7, m = 0.0, v = 0.0;
    const double g = 0.3;
    for (int t = 1; t <= 3; ++t) {
        p.grad = Mat::Constant(1, 1, g);
        opt.step({&p});

        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        const double mh = m / (1.0 - std::pow(0.9, t));
        const double vh = v / (1.0 - std::pow(0.999, t));
        w -= 1e-2 * mh / (std::sqrt(vh) + 1e-8);
        CHECK(p.value(0, 0) == doctest::Approx(w).epsilon(1e-12));
    }
}

TEST_CASE("AdamW: non-finite gradient names the parameter") {
    Parameter<double> p("mlp.out.w", Mat::Ones(1, 1));
    p.grad = Mat::Constant(1, 1, std::numeric_limits<double>::infinity());
    AdamW<double> opt;
    try {
        opt.step({&p});
        FAIL("expected exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("mlp.out.w") != std::string::npos);
    }
}

TEST_CASE("AdamW: per-parameter step counters keep bias correction exact when skipped") {
    // parameter b skips the first 5 steps; from its first update onwards it
    // must match a fresh optimizer that never saw those steps
    auto rng = make_engine(3, 0);
    Parameter<double> a("a", testutil::random_mat(2, 2, rng));
    Parameter<double> b("b", testutil::random_mat(2, 2, rng));
    Parameter<double> b_ref("b", b.value);

    AdamW<double> opt, ref;
    for (int t = 0; t < 5; ++t) {
        a.grad = testutil::random_mat(2, 2, rng);
        opt.step({&a});
    }
    for (int t = 0; t < 4; ++t) {
        Mat g = testutil::random_mat(2, 2, rng);
        a.grad = g;
        b.grad = g;
        b_ref.grad = g;
        opt.step({&a, &b});
        ref.step({&b_ref});
        CHECK((b.value - b_ref.value).cwiseAbs().maxCoeff() < 1e-15);
    }
}
