#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "armspace/nn/grad_check.hpp"
#include "armspace/nn/losses.hpp"
#include "armspace/nn/network.hpp"
#include "armspace/nn/optimizers.hpp"
#include "armspace/nn/scalers.hpp"

using namespace armspace;
using namespace armspace::nn;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double lo = -1.0,
                     double hi = 1.0) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
    return m;
}

Matrix binary_targets(Eigen::Index rows, Rng& rng) {
    Matrix y(rows, 1);
    for (Eigen::Index i = 0; i < rows; ++i) y(i, 0) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    return y;
}

Network full_stack(int in, int hidden, int out, bool dropout, std::uint64_t seed) {
    Rng rng(seed);
    Network net(in);
    add_dense(net, hidden, rng);
    add_batchnorm(net);
    add_prelu(net);
    if (dropout) add_dropout(net, 0.3);
    add_dense(net, out, rng);
    return net;
}

}  // namespace

TEST_CASE("dense layer with identity weights is the identity") {
    Rng rng(1);
    Network net(3);
    add_dense(net, 3, rng);
    auto& dense = std::get<DenseLayer>(net.layers[0]);
    dense.w = Matrix::Identity(3, 3);
    dense.b.setZero();
    const Matrix x = random_matrix(5, 3, rng);
    REQUIRE(net.infer(x) == x);
}

TEST_CASE("prelu applies the negative slope per unit") {
    Network net(2);
    add_prelu(net, 0.25);
    Matrix x(1, 2);
    x << -1.0, 2.0;
    const Matrix y = net.infer(x);
    REQUIRE(y(0, 0) == -0.25);
    REQUIRE(y(0, 1) == 2.0);
}

TEST_CASE("dropout is the identity at inference and masks in training") {
    Rng rng(3);
    Network net(8);
    add_dropout(net, 0.5);
    const Matrix x = random_matrix(16, 8, rng, 0.5, 1.5);
    REQUIRE(net.infer(x) == x);

    Rng train_rng(9);
    const Matrix y = net.forward(x, Mode::train, train_rng);
    int zeros = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y.data()[i] == 0.0)
            ++zeros;
        else
            REQUIRE(y.data()[i] == Catch::Approx(2.0 * x.data()[i]));
    }
    REQUIRE(zeros > 20);
    REQUIRE(zeros < 110);
}

TEST_CASE("single dense with mse reproduces the hand gradient") {
    // scalar model yhat = w x + b, loss (yhat - y)^2: dL/dw = 2 (yhat - y) x
    Rng rng(4);
    Network net(1);
    add_dense(net, 1, rng);
    auto& dense = std::get<DenseLayer>(net.layers[0]);
    dense.w(0, 0) = 0.7;
    dense.b[0] = 0.1;

    Matrix x(1, 1), y(1, 1);
    x << 1.3;
    y << 2.0;
    Rng fw(0);
    const Matrix out = net.forward(x, Mode::train, fw);
    const LossValue loss = loss_mse(y, out);
    net.backward(loss.grad);

    const double yhat = 0.7 * 1.3 + 0.1;
    REQUIRE(dense.w_grad(0, 0) == Catch::Approx(2.0 * (yhat - 2.0) * 1.3).epsilon(1e-12));
    REQUIRE(dense.b_grad[0] == Catch::Approx(2.0 * (yhat - 2.0)).epsilon(1e-12));
}

TEST_CASE("zero-error batch yields zero mse gradients") {
    Rng rng(5);
    Network net(4);
    add_dense(net, 2, rng);
    const Matrix x = random_matrix(6, 4, rng);
    const Matrix y = net.infer(x);
    Rng fw(0);
    const LossValue loss = loss_mse(y, net.forward(x, Mode::train, fw));
    REQUIRE(loss.value == 0.0);
    net.backward(loss.grad);
    for (const auto& slot : net.param_slots())
        for (Eigen::Index i = 0; i < slot.size; ++i) REQUIRE(slot.grad[i] == 0.0);
}

TEST_CASE("bce matches analytic values") {
    Matrix y(1, 1), p(1, 1);
    y << 1.0;
    p << 1.0;
    REQUIRE(loss_bce(y, p).value == Catch::Approx(0.0).margin(1e-9));
    p << 0.5;
    REQUIRE(loss_bce(y, p).value == Catch::Approx(std::log(2.0)).epsilon(1e-12));

    Matrix yb(2, 1), pb(2, 1);
    yb << 1.0, 0.0;
    pb << 0.9, 0.1;
    REQUIRE(loss_bce(yb, pb).value == Catch::Approx(0.105360515657826).epsilon(1e-12));
}

TEST_CASE("bce rejects non-binary targets") {
    Matrix y(1, 1), p(1, 1);
    y << 0.5;
    p << 0.5;
    REQUIRE_THROWS_AS(loss_bce(y, p), DomainError);
}

TEST_CASE("bce is minimized at yhat equal to y") {
    Matrix y(2, 1), p(2, 1);
    y << 1.0, 0.0;
    p << 1.0, 0.0;
    const double at_target = loss_bce(y, p).value;
    Rng rng(6);
    for (int i = 0; i < 50; ++i) {
        Matrix q(2, 1);
        q << rng.uniform(0.01, 0.99), rng.uniform(0.01, 0.99);
        REQUIRE(loss_bce(y, q).value >= at_target);
    }
}

TEST_CASE("mse examples and homogeneity") {
    Matrix y(1, 2), p(1, 2);
    y << 0.0, 2.0;
    p << 1.0, 1.0;
    REQUIRE(loss_mse(y, p).value == Catch::Approx(1.0).epsilon(1e-12));
    REQUIRE(loss_mse(y, y).value == 0.0);

    // scaling residuals by c multiplies the loss by c^2
    const double base = loss_mse(y, p).value;
    Matrix p3 = y + 3.0 * (p - y);
    REQUIRE(loss_mse(y, p3).value == Catch::Approx(9.0 * base).epsilon(1e-12));

    Matrix bad(2, 1);
    REQUIRE_THROWS_AS(loss_mse(y, bad), ShapeMismatch);
}

TEST_CASE("grad check: linear network with mse is near-exact") {
    Rng rng(7);
    Network net(3);
    add_dense(net, 2, rng);
    const Matrix x = random_matrix(8, 3, rng);
    const Matrix y = random_matrix(8, 2, rng);
    REQUIRE(grad_check(net, x, y, LossKind::mse) < 1e-8);
}

TEST_CASE("grad check: full stack under both losses") {
    Rng rng(8);
    const Matrix x = random_matrix(16, 5, rng);

    Network reg = full_stack(5, 7, 3, true, 100);
    const Matrix y_reg = random_matrix(16, 3, rng);
    REQUIRE(grad_check(reg, x, y_reg, LossKind::mse, {1e-6, 42, true}) < 1e-4);

    Network cls = full_stack(5, 7, 1, true, 101);
    add_sigmoid(cls);
    const Matrix y_cls = binary_targets(16, rng);
    REQUIRE(grad_check(cls, x, y_cls, LossKind::bce, {1e-6, 43, true}) < 1e-4);
}

TEST_CASE("grad check without mask replay fails as a negative control") {
    Rng rng(9);
    const Matrix x = random_matrix(16, 5, rng);
    Network net = full_stack(5, 7, 2, true, 102);
    const Matrix y = random_matrix(16, 2, rng);
    REQUIRE(grad_check(net, x, y, LossKind::mse, {1e-6, 44, false}) > 1e-2);
}

TEST_CASE("batchnorm inference is a deterministic affine map") {
    Rng rng(10);
    Network net(4);
    add_batchnorm(net);
    auto& bn = std::get<BatchNormLayer>(net.layers[0]);
    bn.run_mean << 0.5, -0.5, 0.0, 2.0;
    bn.run_var << 1.0, 2.0, 0.5, 0.1;
    bn.gamma << 2.0, 1.0, 1.0, 0.5;
    bn.beta << 0.0, 1.0, -1.0, 0.0;

    const Matrix x = random_matrix(8, 4, rng);
    const Matrix y1 = net.infer(x);
    const Matrix y2 = net.infer(x);
    REQUIRE(y1 == y2);
    // affine: f(a x + (1-a) z) = a f(x) + (1-a) f(z)
    const Matrix z = random_matrix(8, 4, rng);
    const Matrix lhs = net.infer((0.3 * x + 0.7 * z).eval());
    const Matrix rhs = 0.3 * net.infer(x) + 0.7 * net.infer(z);
    REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("batchnorm training normalizes the batch and tracks running stats") {
    Rng rng(11);
    Network net(3);
    add_batchnorm(net, 0.9, 1e-8);
    const Matrix x = random_matrix(64, 3, rng, -3.0, 5.0);
    Rng fw(0);
    const Matrix y = net.forward(x, Mode::train, fw);
    for (Eigen::Index c = 0; c < 3; ++c) {
        REQUIRE(y.col(c).mean() == Catch::Approx(0.0).margin(1e-10));
        const double var = (y.col(c).array() - y.col(c).mean()).square().mean();
        REQUIRE(var == Catch::Approx(1.0).epsilon(1e-4));
    }
    const auto& bn = std::get<BatchNormLayer>(net.layers[0]);
    REQUIRE(bn.run_mean.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("optimizer single steps match hand-derived values") {
    auto one_param = [](double theta0, double grad, OptimizerConfig cfg) {
        double theta = theta0;
        double g = grad;
        std::vector<ParamSlot> slots{{"p", &theta, &g, 1}};
        Optimizer opt(cfg);
        opt.step(slots);
        return theta;
    };

    OptimizerConfig sgd = OptimizerConfig::defaults(OptAlgo::sgd);
    sgd.lr = 0.1;
    REQUIRE(one_param(1.0, 0.5, sgd) == Catch::Approx(0.95).margin(1e-12));

    const OptimizerConfig adam = OptimizerConfig::defaults(OptAlgo::adam);
    REQUIRE(one_param(0.0, 1.0, adam) ==
            Catch::Approx(-0.001 / (1.0 + 1e-8)).margin(1e-12));

    const OptimizerConfig adamax = OptimizerConfig::defaults(OptAlgo::adamax);
    REQUIRE(one_param(0.0, 1.0, adamax) == Catch::Approx(-0.001).margin(1e-12));
}

TEST_CASE("zero gradient is a no-op for every optimizer") {
    for (OptAlgo algo : {OptAlgo::sgd, OptAlgo::adam, OptAlgo::nadam, OptAlgo::adamax,
                         OptAlgo::rmsprop, OptAlgo::adagrad, OptAlgo::adadelta}) {
        double theta = 1.2345;
        double g = 0.0;
        std::vector<ParamSlot> slots{{"p", &theta, &g, 1}};
        Optimizer opt(OptimizerConfig::defaults(algo));
        opt.step(slots);
        opt.step(slots);
        REQUIRE(theta == 1.2345);
    }
}

TEST_CASE("one adam step from fresh state moves at most the learning rate") {
    // at t = 1, mhat = g and vhat = g^2, so |step| = lr |g| / (|g| + eps) <= lr
    Rng rng(12);
    const int n = 256;
    std::vector<double> theta(n, 0.0), grad(n);
    for (auto& g : grad) g = rng.uniform(-100.0, 100.0);
    std::vector<ParamSlot> slots{{"p", theta.data(), grad.data(), n}};
    Optimizer opt(OptimizerConfig::defaults(OptAlgo::adam));
    opt.step(slots);
    for (int i = 0; i < n; ++i) REQUIRE(std::abs(theta[i]) <= opt.config.lr + 1e-15);
}

TEST_CASE("unknown optimizer name is rejected") {
    REQUIRE_THROWS_AS(optimizer_from_name("adamw"), UnknownAlgo);
    REQUIRE(optimizer_from_name("rmsprop") == OptAlgo::rmsprop);
    REQUIRE(optimizer_name(OptAlgo::nadam) == "nadam");
}

TEST_CASE("standardize scaler centers and whitens training columns") {
    Rng rng(13);
    const Matrix x = random_matrix(200, 4, rng, -4.0, 10.0);
    const Scaler s = Scaler::fit(ScalerKind::standardize, x);
    const Matrix y = s.apply(x);
    for (Eigen::Index c = 0; c < 4; ++c) {
        REQUIRE(y.col(c).mean() == Catch::Approx(0.0).margin(1e-10));
        const double sd = std::sqrt((y.col(c).array() - y.col(c).mean()).square().mean());
        REQUIRE(sd == Catch::Approx(1.0).margin(1e-10));
    }
    const Matrix back = s.invert(y);
    REQUIRE((back - x).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("minmax scaler maps the training range onto [-1, 1]") {
    Rng rng(14);
    Matrix x = random_matrix(50, 2, rng, 3.0, 9.0);
    const Scaler s = Scaler::fit(ScalerKind::minmax, x, -1.0, 1.0);
    const Matrix y = s.apply(x);
    for (Eigen::Index c = 0; c < 2; ++c) {
        REQUIRE(y.col(c).minCoeff() == Catch::Approx(-1.0).margin(1e-12));
        REQUIRE(y.col(c).maxCoeff() == Catch::Approx(1.0).margin(1e-12));
    }
    REQUIRE((s.invert(y) - x).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("constant columns are flagged and passed through") {
    Matrix x(10, 2);
    for (int r = 0; r < 10; ++r) {
        x(r, 0) = 7.25;
        x(r, 1) = r;
    }
    const Scaler s = Scaler::fit(ScalerKind::standardize, x);
    REQUIRE(s.has_degenerate());
    REQUIRE(s.degenerate[0] == 1);
    REQUIRE(s.degenerate[1] == 0);
    const Matrix y = s.apply(x);
    REQUIRE(y.col(0) == x.col(0));
    REQUIRE((s.invert(y) - x).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE_THROWS_AS(Scaler::fit(ScalerKind::minmax, Matrix(1, 2)), DomainError);
}

TEST_CASE("network checksum reacts to parameter and running-stat changes") {
    Rng rng(15);
    Network net = full_stack(4, 5, 2, false, 200);
    const std::uint64_t before = net.checksum();
    auto& dense = std::get<DenseLayer>(net.layers[0]);
    dense.w(0, 0) += 1e-12;
    REQUIRE(net.checksum() != before);
    dense.w(0, 0) -= 1e-12;
    REQUIRE(net.checksum() == before);

    const Matrix x = random_matrix(8, 4, rng);
    Rng fw(0);
    net.forward(x, Mode::train, fw);  // moves batchnorm running stats
    REQUIRE(net.checksum() != before);
}

TEST_CASE("network rejects mismatched batch width") {
    Rng rng(16);
    Network net(4);
    add_dense(net, 2, rng);
    REQUIRE_THROWS_AS(net.infer(Matrix(3, 5)), ShapeMismatch);
}

TEST_CASE("identical seeds build identical networks") {
    Network a = full_stack(6, 8, 3, true, 77);
    Network b = full_stack(6, 8, 3, true, 77);
    REQUIRE(a.checksum() == b.checksum());
    Network c = full_stack(6, 8, 3, true, 78);
    REQUIRE(a.checksum() != c.checksum());
}
