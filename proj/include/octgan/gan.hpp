#pragma once

// Noise-injected U-Net generator, multi-scale patch discriminator and the
// adversarial/pixel losses used to train them.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "octgan/nn/layers.hpp"

namespace octgan::gan {

using nn::ConvGeometry;
using nn::Param;
using nn::Tensor;

struct GeneratorConfig {
    std::size_t depth = 8;
    std::size_t base_channels = 64;
    std::size_t channel_cap = 8;  // widest level has base_channels * channel_cap channels
    double noise_sigma = 0.1;
    bool noise_enabled = true;

    void validate() const;
    // Spatial sizes must be multiples of this.
    std::size_t size_multiple() const noexcept { return std::size_t{1} << depth; }
    std::size_t channels_at(std::size_t level) const;
};

struct DiscriminatorConfig {
    std::vector<std::size_t> scales{15, 30};  // receptive field per head, pixels
    std::size_t base_channels = 64;
    std::size_t channel_cap = 8;
    double input_noise_sigma = 0.1;

    void validate() const;
};

struct LossWeights {
    double lambda_l1 = 10.0;
    double dssim_weight = 0.0;

    void validate() const;
};

void to_json(nlohmann::json& j, const GeneratorConfig& c);
void from_json(const nlohmann::json& j, GeneratorConfig& c);
void to_json(nlohmann::json& j, const DiscriminatorConfig& c);
void from_json(const nlohmann::json& j, DiscriminatorConfig& c);
void to_json(nlohmann::json& j, const LossWeights& w);
void from_json(const nlohmann::json& j, LossWeights& w);

class Generator {
public:
    Generator(GeneratorConfig config, std::uint64_t init_seed);

    const GeneratorConfig& config() const noexcept { return cfg_; }
    void set_noise_enabled(bool enabled) noexcept { cfg_.noise_enabled = enabled; }

    // (N,1,H,W) in [-1,1] -> (N,1,H,W) in (-1,1). When noise is enabled a
    // fresh noise field is drawn from `rng` at every upsampling level.
    Tensor forward(const Tensor& x, std::mt19937_64& rng);
    // Gradient w.r.t. the last forward input; parameter gradients accumulate.
    Tensor backward(const Tensor& grad_out);

    Image run(const Image& image, std::mt19937_64& rng);

    std::vector<Param*> params();
    // Input-to-output influence width in pixels (conservative).
    std::size_t receptive_field() const noexcept;

private:
    GeneratorConfig cfg_;
    std::vector<nn::Conv2d> down_;
    std::vector<nn::ConvTranspose2d> up_;
    std::vector<Tensor> enc_;     // encoder outputs d[i]
    std::vector<Tensor> dec_in_;  // input to up_[l] before its ReLU
    Tensor out_;
};

// Convolution stack whose receptive field equals `receptive_field` exactly:
// strided 4x4 or 3x3 layers followed by one stride-1 layer.
std::vector<ConvGeometry> plan_patch_stack(std::size_t receptive_field);
std::size_t stack_receptive_field(const std::vector<ConvGeometry>& stack);
std::size_t stack_output_extent(const std::vector<ConvGeometry>& stack, std::size_t input_extent);

class PatchHead {
public:
    PatchHead(std::size_t in_channels, const std::vector<ConvGeometry>& stack, std::size_t base_channels,
              std::size_t channel_cap, const std::string& name);

    void init(std::mt19937_64& rng);
    Tensor forward(const Tensor& x);  // logits (N,1,h,w)
    Tensor backward(const Tensor& grad_logits);
    std::vector<Param*> params();
    const std::vector<ConvGeometry>& stack() const noexcept { return stack_; }

private:
    std::vector<ConvGeometry> stack_;
    std::vector<nn::Conv2d> convs_;
    std::vector<Tensor> pre_;  // pre-activation outputs of non-final layers
};

class Discriminator {
public:
    Discriminator(DiscriminatorConfig config, std::uint64_t init_seed);

    const DiscriminatorConfig& config() const noexcept { return cfg_; }

    // One logit map per scale. Input noise is added when `noise_rng` is given.
    std::vector<Tensor> forward(const Tensor& conditional, const Tensor& candidate,
                                std::mt19937_64* noise_rng = nullptr);
    // Gradient w.r.t. the candidate of the last forward call, given
    // gradients w.r.t. each logit map. Parameter gradients accumulate.
    Tensor backward(const std::vector<Tensor>& grad_logits);

    std::vector<Param*> params();
    const std::vector<PatchHead>& heads() const noexcept { return heads_; }

private:
    DiscriminatorConfig cfg_;
    std::vector<PatchHead> heads_;
    std::size_t cond_channels_ = 0;
};

// Soft/noisy label draw for the discriminator objective.
struct LabelParams {
    double real_low = 0.8, real_high = 1.0;
    double fake_low = 0.0, fake_high = 0.2;
    double flip_p = 0.05;

    static LabelParams hard() { return {1.0, 1.0, 0.0, 0.0, 0.0}; }
    void validate() const;
};

class DivergenceError : public Error {
public:
    using Error::Error;
};

struct ScalarWithGrad {
    double value = 0.0;
    std::vector<Tensor> grad;  // per score map, w.r.t. logits
};

// Binary cross-entropy on logit maps, averaged over positions then scales.
// Throws DivergenceError on a non-finite result.
ScalarWithGrad bce_maps(const std::vector<Tensor>& logits, const std::vector<std::vector<double>>& targets);

struct DiscriminatorLoss {
    double value = 0.0;  // (real + fake) / 2
    std::vector<Tensor> grad_real, grad_fake;
};
DiscriminatorLoss discriminator_loss(const std::vector<Tensor>& real_logits, const std::vector<Tensor>& fake_logits,
                                     const LabelParams& labels, std::mt19937_64& rng);
// Hard target 1 on the generated maps.
ScalarWithGrad generator_adversarial_loss(const std::vector<Tensor>& fake_logits);

struct TensorLoss {
    double value = 0.0;
    Tensor grad;
};
TensorLoss l1_loss(const Tensor& generated, const Tensor& target);
// (1 - SSIM) / 2 on [-1,1] images, averaged over the batch.
TensorLoss dssim_loss(const Tensor& generated, const Tensor& target);

struct GeneratorObjective {
    double total = 0.0, adversarial = 0.0, l1 = 0.0, dssim = 0.0;
};
// Forward + backward of gan + lambda*L1 + w*DSSIM. Generator parameter
// gradients accumulate; discriminator parameter gradients are disturbed and
// must be zeroed before a discriminator update. Returns the generated batch.
GeneratorObjective generator_objective(Generator& g, Discriminator* d, const Tensor& conditional,
                                       const Tensor& target, const LossWeights& weights, std::mt19937_64& rng,
                                       Tensor* generated = nullptr);

// Checkpoints: magic, version, JSON description, raw little-endian f64 weights.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct ParamRecord {
    std::string name;
    nn::Shape shape;
    std::vector<double> values;
};

struct Checkpoint {
    GeneratorConfig generator;
    std::optional<DiscriminatorConfig> discriminator;
    LossWeights weights;
    std::uint64_t seed = 0;
    nlohmann::json info = nlohmann::json::object();
    std::vector<ParamRecord> generator_params;
    std::vector<ParamRecord> discriminator_params;

    Generator make_generator() const;
    Discriminator make_discriminator() const;
};

class CheckpointError : public Error {
public:
    using Error::Error;
};

Checkpoint capture(Generator& g, Discriminator* d, const LossWeights& weights, std::uint64_t seed,
                   nlohmann::json info = nlohmann::json::object());
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace octgan::gan
