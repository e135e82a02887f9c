#include "octgan/gan.hpp"

namespace octgan::gan {

namespace {
constexpr double kEncoderSlope = 0.2;
const ConvGeometry kDown{4, 2, 1};
const ConvGeometry kUp{4, 2, 1};
}  // namespace

Generator::Generator(GeneratorConfig config, std::uint64_t init_seed) : cfg_(config) {
    cfg_.validate();
    const std::size_t D = cfg_.depth;
    for (std::size_t i = 0; i < D; ++i) {
        const std::size_t in = i == 0 ? 1 : cfg_.channels_at(i - 1);
        down_.emplace_back(in, cfg_.channels_at(i), kDown, "gen.down" + std::to_string(i));
    }
    // up_[l] maps level l+1 resolution to level l; up_[0] emits the image.
    for (std::size_t l = 0; l < D; ++l) {
        const std::size_t in = l == D - 1 ? cfg_.channels_at(D - 1) : 2 * cfg_.channels_at(l);
        const std::size_t out = l == 0 ? 1 : cfg_.channels_at(l - 1);
        up_.emplace_back(in, out, kUp, "gen.up" + std::to_string(l));
    }
    std::mt19937_64 rng(init_seed);
    for (auto& c : down_) c.init(rng);
    for (auto& c : up_) c.init(rng);
}

Tensor Generator::forward(const Tensor& x, std::mt19937_64& rng) {
    const auto& s = x.shape();
    const std::size_t m = cfg_.size_multiple();
    if (s.c != 1) throw InvalidArgument("generator expects single-channel input, got " + s.str());
    if (s.h == 0 || s.w == 0 || s.h % m != 0 || s.w % m != 0) {
        throw InvalidArgument("generator input " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                              " is not a multiple of " + std::to_string(m) + "; pad it first");
    }
    const std::size_t D = cfg_.depth;
    const double sigma = cfg_.noise_enabled ? cfg_.noise_sigma : 0.0;
    enc_.assign(D, Tensor());
    dec_in_.assign(D, Tensor());
    enc_[0] = down_[0].forward(x);
    for (std::size_t i = 1; i < D; ++i) enc_[i] = down_[i].forward(nn::leaky_relu(enc_[i - 1], kEncoderSlope));

    Tensor h = enc_[D - 1];
    for (std::size_t l = D - 1; l >= 1; --l) {
        dec_in_[l] = h;
        Tensor u = up_[l].forward(nn::leaky_relu(h, 0.0));
        nn::add_gaussian_noise(u, sigma, rng);
        h = nn::concat_channels(u, enc_[l - 1]);
    }
    dec_in_[0] = h;
    out_ = nn::tanh_forward(up_[0].forward(nn::leaky_relu(h, 0.0)));
    return out_;
}

Tensor Generator::backward(const Tensor& grad_out) {
    const std::size_t D = cfg_.depth;
    std::vector<Tensor> g_enc(D);
    for (std::size_t i = 0; i < D; ++i) g_enc[i] = Tensor(enc_[i].shape());

    Tensor g = up_[0].backward(nn::tanh_backward(out_, grad_out));
    g = nn::leaky_relu_backward(dec_in_[0], g, 0.0);
    for (std::size_t l = 1; l < D; ++l) {
        // g is the gradient w.r.t. concat(up_[l] output, enc_[l-1]).
        auto [g_up, g_skip] = nn::split_channels(g, g.shape().c - enc_[l - 1].shape().c);
        g_enc[l - 1] += g_skip;
        g = nn::leaky_relu_backward(dec_in_[l], up_[l].backward(g_up), 0.0);
    }
    g_enc[D - 1] += g;

    for (std::size_t i = D - 1; i >= 1; --i) {
        const Tensor gi = down_[i].backward(g_enc[i]);
        g_enc[i - 1] += nn::leaky_relu_backward(enc_[i - 1], gi, kEncoderSlope);
    }
    return down_[0].backward(g_enc[0]);
}

Image Generator::run(const Image& image, std::mt19937_64& rng) {
    return nn::image_from_tensor(forward(nn::tensor_from_image(image), rng));
}

std::vector<Param*> Generator::params() {
    std::vector<Param*> out;
    for (auto& c : down_)
        for (auto* p : c.params()) out.push_back(p);
    for (auto& c : up_)
        for (auto* p : c.params()) out.push_back(p);
    return out;
}

std::size_t Generator::receptive_field() const noexcept {
    // Encoder: each 4x4 stride-2 layer at level i widens the field by 3*2^i.
    // Decoder: each transposed layer reads 2 inputs spaced 2^(l+1) apart.
    const std::size_t span = (std::size_t{1} << cfg_.depth) - 1;
    return 1 + 3 * span + 2 * span;
}

}  // namespace octgan::gan
