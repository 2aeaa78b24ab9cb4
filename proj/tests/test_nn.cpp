#include "dagnet/nn.hpp"

#include "support/oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

using namespace dagnet;
using oracles::check_gradients;
using oracles::random_tensor;

namespace {

LinearLayer make_linear(Tensor w, Tensor b) {
    LinearLayer l;
    l.weight = std::move(w);
    l.bias = std::move(b);
    return l;
}

} // namespace

TEST_CASE("linear_forward: identity and constant layers") {
    LinearLayer ident = make_linear(Tensor::from({2, 2}, {1, 0, 0, 1}), Tensor::zeros({2}));
    Tensor x = Tensor::from({3, 2}, {1, 2, 3, 4, 5, 6});
    CHECK(linear_forward(ident, x).data() == x.data());

    LinearLayer constant = make_linear(Tensor::zeros({2, 2}), Tensor::from({2}, {7, -3}));
    Tensor out = linear_forward(constant, x);
    for (std::size_t r = 0; r < 3; ++r) {
        CHECK(out.at(r, 0) == 7.0);
        CHECK(out.at(r, 1) == -3.0);
    }
}

TEST_CASE("linear_forward matches a hand matmul+add oracle") {
    std::mt19937_64 rng(5);
    Tensor w = random_tensor({3, 4}, rng);
    Tensor b = random_tensor({3}, rng);
    Tensor x = random_tensor({2, 4}, rng);
    LinearLayer layer = make_linear(w, b);
    Tensor out = linear_forward(layer, x);
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t o = 0; o < 3; ++o) {
            double acc = b.at(o);
            for (std::size_t i = 0; i < 4; ++i) acc += x.at(r, i) * w.at(o, i);
            CHECK(out.at(r, o) == Catch::Approx(acc).epsilon(1e-14));
        }
    CHECK_THROWS_AS(linear_forward(layer, Tensor::zeros({2, 5})), TensorError);
}

TEST_CASE("gru_step: zero parameters give zero state") {
    GruCell cell;
    std::mt19937_64 rng(2);
    cell = GruCell(3, 4, rng);
    for (auto* t : {&cell.w_reset, &cell.u_reset, &cell.b_reset, &cell.w_update, &cell.u_update,
                    &cell.b_update, &cell.w_cand, &cell.u_cand, &cell.b_cand})
        std::fill(t->data().begin(), t->data().end(), 0.0);
    Tensor x = random_tensor({2, 3}, rng);
    Tensor h0 = Tensor::zeros({2, 4});
    Tensor h1 = gru_step(cell, x, h0);
    for (double v : h1.data()) CHECK(v == 0.0);
}

TEST_CASE("gru_step: saturated update gate carries the previous state") {
    std::mt19937_64 rng(3);
    GruCell cell(3, 4, rng);
    std::fill(cell.b_update.data().begin(), cell.b_update.data().end(), 60.0);
    Tensor x = random_tensor({2, 3}, rng);
    Tensor h0 = random_tensor({2, 4}, rng);
    Tensor h1 = gru_step(cell, x, h0);
    for (std::size_t i = 0; i < h1.numel(); ++i)
        CHECK(h1.data()[i] == Catch::Approx(h0.data()[i]).margin(1e-9));
}

TEST_CASE("gru_step matches a step-by-step gate-equation oracle") {
    std::mt19937_64 rng(17);
    GruCell cell(3, 5, rng);
    Tensor x = random_tensor({2, 3}, rng);
    Tensor h0 = random_tensor({2, 5}, rng);
    Tensor h1 = gru_step(cell, x, h0);

    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    for (std::size_t row = 0; row < 2; ++row)
        for (std::size_t o = 0; o < 5; ++o) {
            auto gate = [&](const Tensor& w, const Tensor& u, const Tensor& b, bool reset_h) {
                double acc = b.at(o);
                for (std::size_t i = 0; i < 3; ++i) acc += x.at(row, i) * w.at(o, i);
                for (std::size_t i = 0; i < 5; ++i) {
                    double hv = h0.at(row, i);
                    if (reset_h) {
                        double r = 0.0; // recompute reset gate component i
                        r = cell.b_reset.at(i);
                        for (std::size_t k = 0; k < 3; ++k) r += x.at(row, k) * cell.w_reset.at(i, k);
                        for (std::size_t k = 0; k < 5; ++k) r += h0.at(row, k) * cell.u_reset.at(i, k);
                        hv *= sig(r);
                    }
                    acc += hv * u.at(o, i);
                }
                return acc;
            };
            const double u_gate = sig(gate(cell.w_update, cell.u_update, cell.b_update, false));
            const double c = std::tanh(gate(cell.w_cand, cell.u_cand, cell.b_cand, true));
            const double expect = u_gate * h0.at(row, o) + (1.0 - u_gate) * c;
            CHECK(h1.at(row, o) == Catch::Approx(expect).epsilon(1e-12));
        }
}

TEST_CASE("gru gate outputs stay in (0,1) and state stays bounded") {
    std::mt19937_64 rng(29);
    GruCell cell(2, 4, rng);
    Tensor h = Tensor::zeros({3, 4});
    for (int step = 0; step < 50; ++step) {
        Tensor x = random_tensor({3, 2}, rng, 5.0);
        h = gru_step(cell, x, h);
        for (double v : h.data()) CHECK(std::abs(v) <= 1.0 + 1e-12);
    }
}

TEST_CASE("gru_step backward matches finite differences") {
    std::mt19937_64 rng(37);
    GruCell cell(2, 3, rng);
    Tensor x = random_tensor({2, 2}, rng);
    Tensor h0 = random_tensor({2, 3}, rng);
    auto fwd = [&]() {
        Tensor h1 = gru_step(cell, x, h0);
        return sum(mul(h1, h1));
    };
    auto res = check_gradients(fwd, {cell.w_reset, cell.u_reset, cell.b_reset, cell.w_update,
                                     cell.u_update, cell.b_update, cell.w_cand, cell.u_cand,
                                     cell.b_cand, x, h0});
    CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("mlp_forward: zero depth is identity, identity+relu passes positive input") {
    Mlp empty;
    Tensor x = Tensor::from({1, 3}, {1, 2, 3});
    CHECK(mlp_forward(empty, x).data() == x.data());

    Mlp one;
    one.activation = Activation::Relu;
    one.layers.push_back(make_linear(Tensor::from({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1}),
                                     Tensor::zeros({3})));
    CHECK(mlp_forward(one, x).data() == x.data());
}

TEST_CASE("two-layer mlp matches composed linear oracles") {
    std::mt19937_64 rng(41);
    Mlp mlp({3, 4, 2}, Activation::Relu, rng);
    Tensor x = random_tensor({2, 3}, rng);
    Tensor expect = linear_forward(mlp.layers[1], relu(linear_forward(mlp.layers[0], x)));
    CHECK(mlp_forward(mlp, x).data() == expect.data());
}

TEST_CASE("layer forwards are pure: bitwise-identical outputs on repeat") {
    std::mt19937_64 rng(43);
    Mlp mlp({3, 8, 3}, Activation::Tanh, rng);
    Tensor x = random_tensor({4, 3}, rng);
    Tensor a = mlp_forward(mlp, x);
    Tensor b = mlp_forward(mlp, x);
    CHECK(a.data() == b.data());
}

TEST_CASE("parameter registry rejects duplicates and preserves order") {
    ParameterRegistry reg;
    reg.add("a", Tensor::zeros({2}));
    reg.add("b", Tensor::zeros({3}));
    CHECK_THROWS_AS(reg.add("a", Tensor::zeros({2})), TensorError);
    CHECK(reg.items()[0].first == "a");
    CHECK(reg.items()[1].first == "b");
    CHECK_THROWS_AS(reg.get("missing"), TensorError);
}

TEST_CASE("adam: zero gradients leave parameters unchanged") {
    ParameterRegistry reg;
    std::mt19937_64 rng(47);
    Tensor p = reg.add("p", oracles::random_tensor({4}, rng));
    const std::vector<double> before = p.data();
    AdamState adam({0.05});
    p.zero_grad();
    for (int i = 0; i < 5; ++i) adam.step(reg);
    CHECK(p.data() == before);
}

TEST_CASE("adam: closed-form first step on theta^2") {
    ParameterRegistry reg;
    Tensor theta = reg.add("theta", Tensor::scalar(1.0));
    AdamState adam({0.1});
    {
        Tape tape;
        Tensor loss = mul(theta, theta);
        tape.backward(loss);
    }
    adam.step(reg);
    // m_hat = g = 2, v_hat = g^2 = 4 -> update = lr * 2/(2 + eps) ~ lr
    CHECK(theta.value() == Catch::Approx(0.9).margin(1e-8));
    CHECK(adam.step_count() == 1);
}

TEST_CASE("adam: 200 steps on theta^2 converge below 1e-3") {
    ParameterRegistry reg;
    Tensor theta = reg.add("theta", Tensor::scalar(1.0));
    AdamState adam({0.1});
    for (int step = 0; step < 200; ++step) {
        theta.zero_grad();
        Tape tape;
        Tensor loss = mul(theta, theta);
        tape.backward(loss);
        adam.step(reg);
    }
    CHECK(std::abs(theta.value()) < 1e-3);
}

TEST_CASE("adam: missing gradient raises an error naming the parameter") {
    ParameterRegistry reg;
    reg.add("phi_x.weight", Tensor::zeros({2, 2}));
    AdamState adam;
    CHECK_THROWS_WITH(adam.step(reg), Catch::Matchers::ContainsSubstring("phi_x.weight"));
}

TEST_CASE("gradient clipping caps the global norm") {
    ParameterRegistry reg;
    Tensor a = reg.add("a", Tensor::zeros({3}));
    a.zero_grad();
    a.grad() = {30.0, 0.0, 40.0}; // norm 50
    reg.clip_grad_norm(10.0);
    CHECK(reg.grad_global_norm() == Catch::Approx(10.0).epsilon(1e-12));
    reg.clip_grad_norm(10.0); // already within bound: untouched
    CHECK(reg.grad_global_norm() == Catch::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("checkpoint save -> load -> forward reproduces outputs bitwise") {
    const std::string path = std::filesystem::temp_directory_path() / "dagnet_ckpt_test.ckpt";
    std::mt19937_64 rng(53);
    ParameterRegistry reg;
    Mlp mlp({3, 8, 2}, Activation::Tanh, rng);
    mlp.register_params(reg, "mlp");
    Tensor x = random_tensor({2, 3}, rng);
    const std::vector<double> expected = mlp_forward(mlp, x).data();

    save_checkpoint(reg, path, {{"note", "roundtrip"}});

    std::mt19937_64 rng2(999);
    ParameterRegistry reg2;
    Mlp mlp2({3, 8, 2}, Activation::Tanh, rng2);
    mlp2.register_params(reg2, "mlp");
    Checkpoint ckpt = load_checkpoint(path);
    CHECK(ckpt.meta.at("note") == "roundtrip");
    restore_parameters(reg2, ckpt);
    CHECK(mlp_forward(mlp2, x).data() == expected);
    std::remove(path.c_str());
}

TEST_CASE("checkpoint loading validates magic, names and shapes") {
    const std::string path = std::filesystem::temp_directory_path() / "dagnet_ckpt_bad.ckpt";
    {
        std::ofstream out(path);
        out << "NOT-A-CHECKPOINT\n{}\n";
    }
    CHECK_THROWS_WITH(load_checkpoint(path), Catch::Matchers::ContainsSubstring("magic"));

    std::mt19937_64 rng(59);
    ParameterRegistry saved;
    saved.add("w", random_tensor({2, 2}, rng));
    save_checkpoint(saved, path);

    ParameterRegistry other;
    other.add("w", Tensor::zeros({3, 2}));
    CHECK_THROWS_WITH(restore_parameters(other, load_checkpoint(path)),
                      Catch::Matchers::ContainsSubstring("shape mismatch"));

    ParameterRegistry renamed;
    renamed.add("v", Tensor::zeros({2, 2}));
    CHECK_THROWS_AS(restore_parameters(renamed, load_checkpoint(path)), TensorError);
    std::remove(path.c_str());
}
