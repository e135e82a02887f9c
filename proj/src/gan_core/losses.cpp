#include <cmath>

#include "octgan/gan.hpp"
#include "octgan/metrics.hpp"

namespace octgan::gan {

namespace {

// Numerically stable -[t log s(z) + (1-t) log(1-s(z))] and its z-derivative.
double bce_logit(double z, double t) {
    return std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
}

double sigmoid(double z) {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw DivergenceError(std::string(what) + " is not finite");
}

}  // namespace

ScalarWithGrad bce_maps(const std::vector<Tensor>& logits, const std::vector<std::vector<double>>& targets) {
    if (logits.empty() || logits.size() != targets.size()) {
        throw InvalidArgument("bce_maps: need one target list per score map");
    }
    ScalarWithGrad out;
    const double scale_weight = 1.0 / static_cast<double>(logits.size());
    for (std::size_t s = 0; s < logits.size(); ++s) {
        const auto& z = logits[s];
        const auto& sh = z.shape();
        if (targets[s].size() != sh.n) throw InvalidArgument("bce_maps: one target per sample");
        const std::size_t per_sample = sh.c * sh.plane();
        const double w = scale_weight / static_cast<double>(z.size());
        Tensor g(sh);
        double sum = 0.0;
        for (std::size_t n = 0; n < sh.n; ++n) {
            const double t = targets[s][n];
            for (std::size_t i = 0; i < per_sample; ++i) {
                const std::size_t idx = n * per_sample + i;
                const double v = z.values()[idx];
                sum += bce_logit(v, t);
                g.values()[idx] = w * (sigmoid(v) - t);
            }
        }
        out.value += sum * w;
        out.grad.push_back(std::move(g));
    }
    check_finite(out.value, "adversarial loss");
    return out;
}

DiscriminatorLoss discriminator_loss(const std::vector<Tensor>& real_logits, const std::vector<Tensor>& fake_logits,
                                     const LabelParams& labels, std::mt19937_64& rng) {
    labels.validate();
    if (real_logits.size() != fake_logits.size()) throw InvalidArgument("discriminator_loss: scale count mismatch");
    std::uniform_real_distribution<double> real_t(labels.real_low, labels.real_high);
    std::uniform_real_distribution<double> fake_t(labels.fake_low, labels.fake_high);
    std::bernoulli_distribution flip(labels.flip_p);
    std::vector<std::vector<double>> tr(real_logits.size()), tf(fake_logits.size());
    for (std::size_t s = 0; s < real_logits.size(); ++s) {
        const std::size_t n = real_logits[s].shape().n;
        for (std::size_t i = 0; i < n; ++i) {
            double a = labels.real_low == labels.real_high ? labels.real_low : real_t(rng);
            double b = labels.fake_low == labels.fake_high ? labels.fake_low : fake_t(rng);
            if (labels.flip_p > 0.0 && flip(rng)) std::swap(a, b);
            tr[s].push_back(a);
            tf[s].push_back(b);
        }
    }
    auto r = bce_maps(real_logits, tr);
    auto f = bce_maps(fake_logits, tf);
    DiscriminatorLoss out;
    out.value = 0.5 * (r.value + f.value);
    for (auto& g : r.grad)
        for (double& v : g.values()) v *= 0.5;
    for (auto& g : f.grad)
        for (double& v : g.values()) v *= 0.5;
    out.grad_real = std::move(r.grad);
    out.grad_fake = std::move(f.grad);
    return out;
}

ScalarWithGrad generator_adversarial_loss(const std::vector<Tensor>& fake_logits) {
    std::vector<std::vector<double>> t;
    for (const auto& m : fake_logits) t.emplace_back(m.shape().n, 1.0);
    return bce_maps(fake_logits, t);
}

TensorLoss l1_loss(const Tensor& generated, const Tensor& target) {
    if (!(generated.shape() == target.shape())) {
        throw InvalidArgument("l1_loss: shape mismatch " + generated.shape().str() + " vs " + target.shape().str());
    }
    TensorLoss out;
    out.grad = Tensor(generated.shape());
    const double inv = 1.0 / static_cast<double>(generated.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < generated.size(); ++i) {
        const double d = generated.values()[i] - target.values()[i];
        sum += std::abs(d);
        out.grad.values()[i] = d > 0.0 ? inv : (d < 0.0 ? -inv : 0.0);
    }
    out.value = sum * inv;
    check_finite(out.value, "L1 loss");
    return out;
}

TensorLoss dssim_loss(const Tensor& generated, const Tensor& target) {
    if (!(generated.shape() == target.shape())) {
        throw InvalidArgument("dssim_loss: shape mismatch " + generated.shape().str() + " vs " + target.shape().str());
    }
    const auto& s = generated.shape();
    TensorLoss out;
    out.grad = Tensor(s);
    const double inv = 1.0 / static_cast<double>(s.n * s.c);
    for (std::size_t n = 0; n < s.n; ++n) {
        for (std::size_t c = 0; c < s.c; ++c) {
            const Image a = nn::image_from_tensor(generated, n, c);
            const Image b = nn::image_from_tensor(target, n, c);
            const auto r = eval::ssim_with_gradient(a, b, 2.0);
            out.value += inv * 0.5 * (1.0 - r.value);
            for (std::size_t y = 0; y < s.h; ++y)
                for (std::size_t x = 0; x < s.w; ++x) out.grad(n, c, y, x) = -0.5 * inv * r.grad_a(y, x);
        }
    }
    check_finite(out.value, "DSSIM loss");
    return out;
}

GeneratorObjective generator_objective(Generator& g, Discriminator* d, const Tensor& conditional,
                                       const Tensor& target, const LossWeights& weights, std::mt19937_64& rng,
                                       Tensor* generated) {
    GeneratorObjective obj;
    Tensor fake = g.forward(conditional, rng);
    const auto l1 = l1_loss(fake, target);
    obj.l1 = l1.value;
    Tensor grad(fake.shape());
    for (std::size_t i = 0; i < grad.size(); ++i) grad.values()[i] = weights.lambda_l1 * l1.grad.values()[i];
    if (weights.dssim_weight > 0.0) {
        const auto ds = dssim_loss(fake, target);
        obj.dssim = ds.value;
        for (std::size_t i = 0; i < grad.size(); ++i) grad.values()[i] += weights.dssim_weight * ds.grad.values()[i];
    }
    if (d != nullptr) {
        const auto logits = d->forward(conditional, fake, &rng);
        const auto adv = generator_adversarial_loss(logits);
        obj.adversarial = adv.value;
        grad += d->backward(adv.grad);
    }
    obj.total = obj.adversarial + weights.lambda_l1 * obj.l1 + weights.dssim_weight * obj.dssim;
    check_finite(obj.total, "generator loss");
    g.backward(grad);
    if (generated != nullptr) *generated = std::move(fake);
    return obj;
}

}  // namespace octgan::gan
