#include <algorithm>

#include "octgan/gan.hpp"

namespace octgan::gan {

namespace {
constexpr double kSlope = 0.2;
}

std::vector<ConvGeometry> plan_patch_stack(std::size_t receptive_field) {
    // Field of n stride-2 layers of kernel k plus a final stride-1 kernel kf:
    //   1 + (k-1)(2^n - 1) + (kf-1) 2^n
    for (std::size_t k : {4, 3}) {
        for (std::size_t n = 4; n >= 1; --n) {
            const std::size_t stride_prod = std::size_t{1} << n;
            const std::size_t strided = 1 + (k - 1) * (stride_prod - 1);
            if (receptive_field <= strided) continue;
            const std::size_t rest = receptive_field - strided;
            if (rest % stride_prod != 0) continue;
            const std::size_t kf = rest / stride_prod + 1;
            if (kf < 2 || kf > 5) continue;
            std::vector<ConvGeometry> stack(n, ConvGeometry{k, 2, 1});
            stack.push_back(ConvGeometry{kf, 1, (kf - 1) / 2});
            return stack;
        }
    }
    throw InvalidArgument("no convolution stack reaches a receptive field of " + std::to_string(receptive_field));
}

std::size_t stack_receptive_field(const std::vector<ConvGeometry>& stack) {
    std::size_t rf = 1, jump = 1;
    for (const auto& g : stack) {
        rf += (g.kernel - 1) * jump;
        jump *= g.stride;
    }
    return rf;
}

std::size_t stack_output_extent(const std::vector<ConvGeometry>& stack, std::size_t input_extent) {
    std::size_t e = input_extent;
    for (const auto& g : stack) e = g.conv_out(e);
    return e;
}

PatchHead::PatchHead(std::size_t in_channels, const std::vector<ConvGeometry>& stack, std::size_t base_channels,
                     std::size_t channel_cap, const std::string& name)
    : stack_(stack) {
    if (stack_.empty()) throw InvalidArgument("patch head needs at least one layer");
    std::size_t in = in_channels;
    for (std::size_t i = 0; i < stack_.size(); ++i) {
        const bool last = i + 1 == stack_.size();
        const std::size_t out = last ? 1 : base_channels * std::min<std::size_t>(std::size_t{1} << std::min<std::size_t>(i, 16), channel_cap);
        convs_.emplace_back(in, out, stack_[i], name + ".conv" + std::to_string(i));
        in = out;
    }
}

void PatchHead::init(std::mt19937_64& rng) {
    for (auto& c : convs_) c.init(rng);
}

Tensor PatchHead::forward(const Tensor& x) {
    pre_.clear();
    Tensor h = convs_[0].forward(x);
    for (std::size_t i = 1; i < convs_.size(); ++i) {
        pre_.push_back(h);
        h = convs_[i].forward(nn::leaky_relu(h, kSlope));
    }
    return h;
}

Tensor PatchHead::backward(const Tensor& grad_logits) {
    Tensor g = grad_logits;
    for (std::size_t i = convs_.size(); i-- > 1;) {
        g = nn::leaky_relu_backward(pre_[i - 1], convs_[i].backward(g), kSlope);
    }
    return convs_[0].backward(g);
}

std::vector<Param*> PatchHead::params() {
    std::vector<Param*> out;
    for (auto& c : convs_)
        for (auto* p : c.params()) out.push_back(p);
    return out;
}

Discriminator::Discriminator(DiscriminatorConfig config, std::uint64_t init_seed) : cfg_(std::move(config)) {
    cfg_.validate();
    std::mt19937_64 rng(init_seed);
    for (std::size_t s = 0; s < cfg_.scales.size(); ++s) {
        heads_.emplace_back(2, plan_patch_stack(cfg_.scales[s]), cfg_.base_channels, cfg_.channel_cap,
                            "disc.s" + std::to_string(s));
        heads_.back().init(rng);
    }
}

std::vector<Tensor> Discriminator::forward(const Tensor& conditional, const Tensor& candidate,
                                           std::mt19937_64* noise_rng) {
    if (!(conditional.shape() == candidate.shape())) {
        throw InvalidArgument("discriminator inputs differ in shape: " + conditional.shape().str() + " vs " +
                              candidate.shape().str());
    }
    cond_channels_ = conditional.shape().c;
    Tensor x = nn::concat_channels(conditional, candidate);
    if (noise_rng != nullptr) nn::add_gaussian_noise(x, cfg_.input_noise_sigma, *noise_rng);
    std::vector<Tensor> out;
    out.reserve(heads_.size());
    for (auto& h : heads_) out.push_back(h.forward(x));
    return out;
}

Tensor Discriminator::backward(const std::vector<Tensor>& grad_logits) {
    if (grad_logits.size() != heads_.size()) throw InvalidArgument("discriminator backward: one gradient per scale");
    Tensor total;
    for (std::size_t s = 0; s < heads_.size(); ++s) {
        Tensor g = heads_[s].backward(grad_logits[s]);
        if (s == 0) {
            total = std::move(g);
        } else {
            total += g;
        }
    }
    return nn::split_channels(total, cond_channels_).second;
}

std::vector<Param*> Discriminator::params() {
    std::vector<Param*> out;
    for (auto& h : heads_)
        for (auto* p : h.params()) out.push_back(p);
    return out;
}

}  // namespace octgan::gan
