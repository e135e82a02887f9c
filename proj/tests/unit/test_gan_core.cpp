#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "octgan/gan.hpp"
#include "oracles.hpp"

using namespace octgan;
using namespace octgan::gan;
using nn::Shape;

namespace {

Tensor random_tensor(Shape s, std::mt19937_64& rng, double scale = 1.0) {
    Tensor t(s);
    std::uniform_real_distribution<double> u(-scale, scale);
    for (double& v : t.values()) v = u(rng);
    return t;
}

double dot(const Tensor& a, const Tensor& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.values()[i] * b.values()[i];
    return s;
}

double rel_err(double a, double b) {
    const double denom = std::max({std::abs(a), std::abs(b), 1e-8});
    return std::abs(a - b) / denom;
}

// Checks dL/dx and dL/dparams for L = <r, layer(x)> by central differences.
template <typename Layer>
void check_layer_gradients(Layer& layer, Tensor x, std::mt19937_64& rng) {
    const Tensor y = layer.forward(x);
    const Tensor r = random_tensor(y.shape(), rng);
    nn::zero_grad(layer.params());
    const Tensor dx = layer.backward(r);
    const double h = 1e-6;
    for (std::size_t idx = 0; idx < x.size(); idx += 7) {
        const double keep = x.values()[idx];
        x.values()[idx] = keep + h;
        const double up = dot(r, layer.forward(x));
        x.values()[idx] = keep - h;
        const double dn = dot(r, layer.forward(x));
        x.values()[idx] = keep;
        CHECK(rel_err(dx.values()[idx], (up - dn) / (2 * h)) < 1e-6);
    }
    for (auto* p : layer.params()) {
        for (std::size_t idx = 0; idx < p->value.size(); idx += 5) {
            const double keep = p->value.values()[idx];
            p->value.values()[idx] = keep + h;
            const double up = dot(r, layer.forward(x));
            p->value.values()[idx] = keep - h;
            const double dn = dot(r, layer.forward(x));
            p->value.values()[idx] = keep;
            CHECK(rel_err(p->grad.values()[idx], (up - dn) / (2 * h)) < 1e-6);
        }
    }
}

GeneratorConfig tiny_generator(std::size_t depth = 3, std::size_t base = 4) {
    GeneratorConfig c;
    c.depth = depth;
    c.base_channels = base;
    return c;
}

DiscriminatorConfig tiny_discriminator() {
    DiscriminatorConfig c;
    c.base_channels = 4;
    return c;
}

// Gradient of one score of head `scale` w.r.t. the candidate input.
Image probe_receptive_field(Discriminator& d, std::size_t scale, std::size_t size) {
    std::mt19937_64 rng(3);
    const Tensor cond = random_tensor({1, 1, size, size}, rng);
    const Tensor cand = random_tensor({1, 1, size, size}, rng);
    auto maps = d.forward(cond, cand);
    std::vector<Tensor> grads;
    for (const auto& m : maps) grads.emplace_back(m.shape());
    const auto& s = maps[scale].shape();
    grads[scale](0, 0, s.h / 2, s.w / 2) = 1.0;
    return nn::image_from_tensor(d.backward(grads));
}

std::size_t support_width(const Image& g) {
    std::size_t first = g.cols(), last = 0;
    for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c)
            if (g(r, c) != 0.0) {
                first = std::min(first, c);
                last = std::max(last, c);
            }
    return first > last ? 0 : last - first + 1;
}

}  // namespace

TEST_CASE("conv2d gradients match central differences") {
    std::mt19937_64 rng(1);
    for (ConvGeometry g : {ConvGeometry{3, 1, 1}, ConvGeometry{4, 2, 1}, ConvGeometry{2, 1, 0}, ConvGeometry{3, 2, 0}}) {
        nn::Conv2d conv(2, 3, g, "c");
        conv.init(rng);
        for (auto* p : conv.params())
            for (double& v : p->value.values()) v += 0.1;  // non-zero bias too
        check_layer_gradients(conv, random_tensor({2, 2, 9, 8}, rng), rng);
    }
}

TEST_CASE("transposed conv gradients match central differences") {
    std::mt19937_64 rng(2);
    for (ConvGeometry g : {ConvGeometry{4, 2, 1}, ConvGeometry{3, 1, 1}, ConvGeometry{3, 2, 0}}) {
        nn::ConvTranspose2d conv(3, 2, g, "t");
        conv.init(rng);
        check_layer_gradients(conv, random_tensor({2, 3, 5, 6}, rng), rng);
    }
}

TEST_CASE("conv2d matches a direct loop reference") {
    std::mt19937_64 rng(4);
    nn::Conv2d conv(2, 3, {3, 2, 1}, "c");
    conv.init(rng);
    const Tensor x = random_tensor({1, 2, 7, 6}, rng);
    const Tensor y = conv.forward(x);
    const auto& w = conv.params()[0]->value;
    const auto& b = conv.params()[1]->value;
    CHECK(y.shape() == Shape{1, 3, 4, 3});
    for (std::size_t o = 0; o < 3; ++o)
        for (std::size_t oy = 0; oy < 4; ++oy)
            for (std::size_t ox = 0; ox < 3; ++ox) {
                double s = b.values()[o];
                for (std::size_t c = 0; c < 2; ++c)
                    for (std::size_t ky = 0; ky < 3; ++ky)
                        for (std::size_t kx = 0; kx < 3; ++kx) {
                            const long iy = static_cast<long>(oy * 2 + ky) - 1;
                            const long ix = static_cast<long>(ox * 2 + kx) - 1;
                            if (iy < 0 || ix < 0 || iy >= 7 || ix >= 6) continue;
                            s += w(o, c, ky, kx) * x(0, c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
                        }
                CHECK(y(0, o, oy, ox) == doctest::Approx(s).epsilon(1e-12));
            }
}

TEST_CASE("transposed conv is the adjoint of conv with shared weights") {
    // <conv(x), y> == <x, convT(y)> when both use the same kernel and no bias.
    std::mt19937_64 rng(6);
    const ConvGeometry g{4, 2, 1};
    nn::Conv2d conv(2, 3, g, "c");
    nn::ConvTranspose2d convt(3, 2, g, "t");
    conv.init(rng);
    // conv weight [out=3][in=2][k][k] and convT weight [in=3][out=2][k][k] coincide.
    convt.params()[0]->value.values() = conv.params()[0]->value.values();
    const Tensor x = random_tensor({1, 2, 8, 10}, rng);
    const Tensor y = random_tensor({1, 3, 4, 5}, rng);
    CHECK(dot(conv.forward(x), y) == doctest::Approx(dot(x, convt.forward(y))).epsilon(1e-12));
}

TEST_CASE("He initialisation uses fan-in scaling") {
    std::mt19937_64 rng(9);
    nn::Conv2d conv(16, 32, {4, 2, 1}, "c");
    conv.init(rng);
    double ss = 0.0;
    const auto& w = conv.params()[0]->value.values();
    for (double v : w) ss += v * v;
    const double expected = std::sqrt(2.0 / (16 * 16));
    CHECK(std::sqrt(ss / static_cast<double>(w.size())) == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("adam first step moves each weight by the learning rate against its gradient") {
    nn::Param p{"p", Tensor({1, 1, 1, 3}), Tensor({1, 1, 1, 3})};
    p.value.values() = {1.0, 2.0, 3.0};
    p.grad.values() = {0.5, -2.0, 0.0};
    nn::Adam adam({&p}, 1e-4, 0.5);
    adam.step();
    CHECK(p.value.values()[0] == doctest::Approx(1.0 - 1e-4).epsilon(1e-9));
    CHECK(p.value.values()[1] == doctest::Approx(2.0 + 1e-4).epsilon(1e-9));
    CHECK(p.value.values()[2] == 3.0);
    CHECK(adam.steps() == 1);
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(Generator(tiny_generator(2), 0), InvalidArgument);
    auto g = tiny_generator();
    g.noise_sigma = -0.1;
    CHECK_THROWS_AS(g.validate(), InvalidArgument);
    DiscriminatorConfig d;
    d.scales = {30, 15};
    CHECK_THROWS_AS(d.validate(), InvalidArgument);
    d.scales = {1};
    CHECK_THROWS_AS(d.validate(), InvalidArgument);
    LossWeights w;
    w.lambda_l1 = -1;
    CHECK_THROWS_AS(w.validate(), InvalidArgument);
    CHECK(LossWeights{}.lambda_l1 == 10.0);
    CHECK(GeneratorConfig{}.noise_sigma == 0.1);
    CHECK(DiscriminatorConfig{}.scales == std::vector<std::size_t>{15, 30});
}

TEST_CASE("generator preserves spatial size and is fully convolutional") {
    auto cfg = tiny_generator(8, 2);
    cfg.noise_enabled = false;
    Generator g(cfg, 1);
    std::mt19937_64 rng(0);
    const Image in256 = oracle::random_image(256, 256, rng);
    const Image out256 = g.run(in256, rng);
    CHECK(out256.rows() == 256);
    CHECK(out256.cols() == 256);
    const Image out = g.run(oracle::random_image(512, 768, rng), rng);
    CHECK(out.rows() == 512);
    CHECK(out.cols() == 768);
    for (double v : out.values()) CHECK_MESSAGE((v > -1.0 && v < 1.0), "output outside (-1,1)");
    CHECK_THROWS_AS(g.run(Image(250, 256), rng), InvalidArgument);
}

TEST_CASE("generator noise: stochastic when enabled, deterministic otherwise") {
    std::mt19937_64 data(5);
    const Image x = oracle::random_image(32, 32, data);
    Generator g(tiny_generator(), 7);
    std::mt19937_64 r1(1), r2(2);
    const Image a = g.run(x, r1), b = g.run(x, r2);
    double var = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) var += (a.values()[i] - b.values()[i]) * (a.values()[i] - b.values()[i]);
    CHECK(var > 0.0);

    auto cfg = tiny_generator();
    cfg.noise_enabled = false;
    Generator q(cfg, 7);
    std::mt19937_64 r3(1), r4(2);
    CHECK(q.run(x, r3) == q.run(x, r4));
    cfg.noise_enabled = true;
    cfg.noise_sigma = 0.0;
    Generator z(cfg, 7);
    CHECK(z.run(x, r3) == z.run(x, r4));
}

TEST_CASE("generator crop invariance away from the receptive-field margin") {
    auto cfg = tiny_generator(3, 4);
    cfg.noise_enabled = false;
    Generator g(cfg, 11);
    std::mt19937_64 rng(12);
    const Image x = oracle::random_image(160, 160, rng);
    const Image full = g.run(x, rng);
    const std::size_t off = 32, size = 96, margin = g.receptive_field();
    REQUIRE(margin == 36);
    const Image part = g.run(x.crop(off, off, size, size), rng);
    double worst = 0.0;
    for (std::size_t r = margin; r < size - margin; ++r)
        for (std::size_t c = margin; c < size - margin; ++c)
            worst = std::max(worst, std::abs(part(r, c) - full(off + r, off + c)));
    CHECK(worst < 1e-12);
}

TEST_CASE("patch stacks reach the configured receptive fields") {
    const auto s15 = plan_patch_stack(15);
    const auto s30 = plan_patch_stack(30);
    CHECK(stack_receptive_field(s15) == 15);
    CHECK(stack_receptive_field(s30) == 30);
    CHECK(stack_receptive_field({ConvGeometry{3, 1, 1}}) == 3);
    for (std::size_t rf : {5, 10, 15, 22, 30, 46}) CHECK(stack_receptive_field(plan_patch_stack(rf)) == rf);
}

TEST_CASE("receptive field probe has the configured support width") {
    Discriminator d(tiny_discriminator(), 4);
    CHECK(support_width(probe_receptive_field(d, 0, 64)) == 15);
    CHECK(support_width(probe_receptive_field(d, 1, 64)) == 30);
}

TEST_CASE("score map size follows the stride/kernel recurrence") {
    Discriminator d(tiny_discriminator(), 4);
    for (std::size_t size : {32, 64, 256}) {
        const Tensor x({1, 1, size, size});
        const auto maps = d.forward(x, x);
        for (std::size_t s = 0; s < maps.size(); ++s) {
            const std::size_t e = stack_output_extent(d.heads()[s].stack(), size);
            CHECK(maps[s].shape() == Shape{1, 1, e, e});
        }
    }
    CHECK(stack_output_extent(plan_patch_stack(15), 256) == 64);
    CHECK(stack_output_extent(plan_patch_stack(30), 256) == 31);
    CHECK_THROWS_AS(d.forward(Tensor({1, 1, 32, 32}), Tensor({1, 1, 32, 16})), InvalidArgument);
}

TEST_CASE("discriminator scores are translation-covariant on periodic inputs") {
    Discriminator d(tiny_discriminator(), 8);
    std::mt19937_64 rng(9);
    const std::size_t n = 96, period = 16, shift = 16;
    const Image tile_a = oracle::random_image(period, period, rng);
    const Image tile_b = oracle::random_image(period, period, rng);
    Tensor a({1, 1, n, n}), b({1, 1, n, n}), as({1, 1, n, n}), bs({1, 1, n, n});
    for (std::size_t y = 0; y < n; ++y)
        for (std::size_t x = 0; x < n; ++x) {
            a(0, 0, y, x) = tile_a(y % period, x % period);
            b(0, 0, y, x) = tile_b(y % period, x % period);
            as(0, 0, y, x) = tile_a(y % period, (x + shift) % period);
            bs(0, 0, y, x) = tile_b(y % period, (x + shift) % period);
        }
    const auto m = d.forward(a, b);
    const auto ms = d.forward(as, bs);
    for (std::size_t s = 0; s < m.size(); ++s) {
        std::size_t stride = 1;
        for (const auto& g : d.heads()[s].stack()) stride *= g.stride;
        const std::size_t k = shift / stride;
        const auto& sh = m[s].shape();
        const std::size_t margin = 30 / stride + 1;
        for (std::size_t y = margin; y + margin < sh.h; ++y)
            for (std::size_t x = margin; x + k + margin < sh.w; ++x)
                CHECK(ms[s](0, 0, y, x) == doctest::Approx(m[s](0, 0, y, x + k)).epsilon(1e-12));
    }
}

TEST_CASE("adversarial loss closed forms") {
    std::vector<Tensor> half{Tensor({2, 1, 4, 4}, 0.0), Tensor({2, 1, 3, 3}, 0.0)};
    CHECK(generator_adversarial_loss(half).value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    std::mt19937_64 rng(1);
    CHECK(discriminator_loss(half, half, LabelParams::hard(), rng).value ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));

    std::vector<Tensor> sure_real{Tensor({2, 1, 4, 4}, 40.0), Tensor({2, 1, 3, 3}, 40.0)};
    std::vector<Tensor> sure_fake{Tensor({2, 1, 4, 4}, -40.0), Tensor({2, 1, 3, 3}, -40.0)};
    CHECK(discriminator_loss(sure_real, sure_fake, LabelParams::hard(), rng).value < 1e-12);
    CHECK(generator_adversarial_loss(sure_real).value < 1e-12);

    std::vector<Tensor> bad{Tensor({1, 1, 2, 2}, std::nan(""))};
    CHECK_THROWS_AS(generator_adversarial_loss(bad), DivergenceError);
}

TEST_CASE("adversarial loss averages positions within a scale, then scales") {
    // Scale 0: logit 0 (ln 2); scale 1: mixed logits with its own mean.
    Tensor s1({1, 1, 1, 2});
    s1.values() = {2.0, -1.0};
    const double l1 = 0.5 * (std::log1p(std::exp(-2.0)) + std::log1p(std::exp(1.0)));
    const auto r = generator_adversarial_loss({Tensor({1, 1, 5, 5}, 0.0), s1});
    CHECK(r.value == doctest::Approx(0.5 * (std::log(2.0) + l1)).epsilon(1e-12));
}

TEST_CASE("soft labels stay inside their ranges") {
    // With flip_p = 0 the discriminator loss of a fixed logit z is bounded by
    // the losses at the ends of each label range.
    std::mt19937_64 rng(3);
    const double z = 1.3;
    auto bce = [](double zz, double t) { return std::max(zz, 0.0) - zz * t + std::log1p(std::exp(-std::abs(zz))); };
    LabelParams lp;
    lp.flip_p = 0.0;
    for (int i = 0; i < 50; ++i) {
        std::vector<Tensor> real{Tensor({1, 1, 2, 2}, z)}, fake{Tensor({1, 1, 2, 2}, z)};
        const double v = discriminator_loss(real, fake, lp, rng).value;
        // The loss is linear in the target with slope -z.
        const double lo = 0.5 * (bce(z, 1.0) + bce(z, 0.2));
        const double hi = 0.5 * (bce(z, 0.8) + bce(z, 0.0));
        CHECK(v >= lo - 1e-12);
        CHECK(v <= hi + 1e-12);
    }
}

TEST_CASE("label flips occur at roughly flip_p") {
    // logit +40 on real maps: an unflipped target costs ~0, a flipped one ~32.
    LabelParams lp;
    lp.real_low = lp.real_high = 1.0;
    lp.fake_low = lp.fake_high = 0.0;
    lp.flip_p = 0.05;
    std::mt19937_64 rng(21);
    std::size_t flips = 0, total = 0;
    for (int i = 0; i < 400; ++i) {
        std::vector<Tensor> real{Tensor({10, 1, 1, 1}, 40.0)}, fake{Tensor({10, 1, 1, 1}, -40.0)};
        const double v = discriminator_loss(real, fake, lp, rng).value;
        flips += static_cast<std::size_t>(std::lround(v / 4.0));  // each flipped sample adds 2*40/10/2
        total += 10;
    }
    const double rate = static_cast<double>(flips) / static_cast<double>(total);
    CHECK(rate > 0.035);
    CHECK(rate < 0.065);
}

TEST_CASE("bce gradient matches central differences") {
    std::mt19937_64 rng(4);
    std::vector<Tensor> z{random_tensor({2, 1, 3, 3}, rng, 3.0), random_tensor({2, 1, 2, 2}, rng, 3.0)};
    const std::vector<std::vector<double>> t{{0.9, 0.1}, {0.85, 1.0}};
    const auto r = bce_maps(z, t);
    const double h = 1e-6;
    for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t i = 0; i < z[s].size(); ++i) {
            const double keep = z[s].values()[i];
            z[s].values()[i] = keep + h;
            const double up = bce_maps(z, t).value;
            z[s].values()[i] = keep - h;
            const double dn = bce_maps(z, t).value;
            z[s].values()[i] = keep;
            CHECK(r.grad[s].values()[i] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-6));
        }
}

TEST_CASE("pixel losses") {
    std::mt19937_64 rng(7);
    const Tensor a = random_tensor({2, 1, 16, 16}, rng);
    CHECK(l1_loss(a, a).value == 0.0);
    CHECK(dssim_loss(a, a).value == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(l1_loss(Tensor({1, 1, 4, 4}, 0.25), Tensor({1, 1, 4, 4}, -0.25)).value == doctest::Approx(0.5));
    const Tensor b = random_tensor({2, 1, 16, 16}, rng);
    double ref = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) ref += std::abs(a.values()[i] - b.values()[i]);
    CHECK(l1_loss(a, b).value == doctest::Approx(ref / static_cast<double>(a.size())).epsilon(1e-12));
    CHECK_THROWS_AS(l1_loss(a, Tensor({2, 1, 16, 8})), InvalidArgument);
    CHECK_THROWS_AS(dssim_loss(a, Tensor({2, 1, 16, 8})), InvalidArgument);
}

TEST_CASE("total generator loss gradient matches central differences on a 32x32 toy") {
    auto gcfg = tiny_generator(3, 3);
    gcfg.noise_sigma = 0.1;
    Generator g(gcfg, 31);
    Discriminator d(tiny_discriminator(), 32);
    LossWeights w;
    w.dssim_weight = 1.0;
    std::mt19937_64 data(33);
    const Tensor cond = random_tensor({2, 1, 32, 32}, data);
    const Tensor target = random_tensor({2, 1, 32, 32}, data);

    auto loss = [&]() {
        std::mt19937_64 rng(99);  // identical noise draws for every evaluation
        nn::zero_grad(g.params());
        nn::zero_grad(d.params());
        return generator_objective(g, &d, cond, target, w, rng).total;
    };
    loss();
    std::vector<std::vector<double>> analytic;
    for (auto* p : g.params()) analytic.push_back(p->grad.values());

    const double h = 1e-6;
    std::size_t checked = 0;
    auto params = g.params();
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& vals = params[pi]->value.values();
        for (std::size_t idx = 0; idx < vals.size(); idx += std::max<std::size_t>(1, vals.size() / 3)) {
            const double keep = vals[idx];
            vals[idx] = keep + h;
            const double up = loss();
            vals[idx] = keep - h;
            const double dn = loss();
            vals[idx] = keep;
            const double fd = (up - dn) / (2 * h);
            if (std::abs(fd) < 1e-7 && std::abs(analytic[pi][idx]) < 1e-7) continue;
            CHECK_MESSAGE(rel_err(analytic[pi][idx], fd) < 1e-3, params[pi]->name << "[" << idx << "]");
            ++checked;
        }
    }
    CHECK(checked > 20);
}

TEST_CASE("checkpoint round trip is bit-identical and corruption is detected") {
    const auto dir = std::filesystem::temp_directory_path() / "octgan_ckpt_test";
    std::filesystem::create_directories(dir);
    auto cfg = tiny_generator();
    cfg.noise_enabled = false;
    Generator g(cfg, 3);
    Discriminator d(tiny_discriminator(), 4);
    std::mt19937_64 rng(1);
    const Image x = oracle::random_image(32, 32, rng);
    const Image before = g.run(x, rng);
    save_checkpoint(dir / "a.ckpt", capture(g, &d, LossWeights{}, 1234, {{"mode", "axial"}}));

    const auto ck = load_checkpoint(dir / "a.ckpt");
    CHECK(ck.seed == 1234);
    CHECK(ck.info.at("mode") == "axial");
    CHECK(ck.generator.depth == 3);
    CHECK(ck.discriminator->scales == std::vector<std::size_t>{15, 30});
    auto g2 = ck.make_generator();
    CHECK(g2.run(x, rng) == before);
    auto d2 = ck.make_discriminator();
    const Tensor t = nn::tensor_from_image(x);
    CHECK(d2.forward(t, t)[1] == d.forward(t, t)[1]);

    const auto size = std::filesystem::file_size(dir / "a.ckpt");
    std::filesystem::copy_file(dir / "a.ckpt", dir / "b.ckpt", std::filesystem::copy_options::overwrite_existing);
    std::filesystem::resize_file(dir / "b.ckpt", size - 16);
    CHECK_THROWS_AS(load_checkpoint(dir / "b.ckpt"), CheckpointError);
    {
        std::ofstream os(dir / "c.ckpt", std::ios::binary);
        os << "not a checkpoint at all";
    }
    CHECK_THROWS_AS(load_checkpoint(dir / "c.ckpt"), CheckpointError);
    CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), CheckpointError);
    std::filesystem::remove_all(dir);
}
