#include <algorithm>

#include "octgan/gan.hpp"

namespace octgan::gan {

void GeneratorConfig::validate() const {
    if (depth < 3) throw InvalidArgument("generator depth must be at least 3");
    if (depth > 12) throw InvalidArgument("generator depth above 12 is not supported");
    if (base_channels == 0 || channel_cap == 0) throw InvalidArgument("generator channel counts must be positive");
    if (!(noise_sigma >= 0.0)) throw InvalidArgument("noise_sigma must be non-negative");
}

std::size_t GeneratorConfig::channels_at(std::size_t level) const {
    const std::size_t mult = level >= 16 ? channel_cap : std::min<std::size_t>(std::size_t{1} << level, channel_cap);
    return base_channels * mult;
}

void DiscriminatorConfig::validate() const {
    if (scales.empty()) throw InvalidArgument("discriminator needs at least one scale");
    for (std::size_t i = 0; i < scales.size(); ++i) {
        if (i > 0 && scales[i] <= scales[i - 1]) {
            throw InvalidArgument("discriminator receptive fields must be strictly increasing");
        }
        (void)plan_patch_stack(scales[i]);  // throws when unreachable
    }
    if (base_channels == 0 || channel_cap == 0) throw InvalidArgument("discriminator channel counts must be positive");
    if (!(input_noise_sigma >= 0.0)) throw InvalidArgument("input_noise_sigma must be non-negative");
}

void LossWeights::validate() const {
    if (!(lambda_l1 >= 0.0) || !(dssim_weight >= 0.0)) throw InvalidArgument("loss weights must be non-negative");
}

void LabelParams::validate() const {
    const bool ok = 0.0 <= real_low && real_low <= real_high && real_high <= 1.0 && 0.0 <= fake_low &&
                    fake_low <= fake_high && fake_high <= 1.0 && flip_p >= 0.0 && flip_p <= 1.0;
    if (!ok) throw InvalidArgument("label ranges must lie in [0,1] and flip_p in [0,1]");
}

void to_json(nlohmann::json& j, const GeneratorConfig& c) {
    j = {{"depth", c.depth},
         {"base_channels", c.base_channels},
         {"channel_cap", c.channel_cap},
         {"noise_sigma", c.noise_sigma},
         {"noise_enabled", c.noise_enabled}};
}

void from_json(const nlohmann::json& j, GeneratorConfig& c) {
    GeneratorConfig d;
    c.depth = j.value("depth", d.depth);
    c.base_channels = j.value("base_channels", d.base_channels);
    c.channel_cap = j.value("channel_cap", d.channel_cap);
    c.noise_sigma = j.value("noise_sigma", d.noise_sigma);
    c.noise_enabled = j.value("noise_enabled", d.noise_enabled);
}

void to_json(nlohmann::json& j, const DiscriminatorConfig& c) {
    j = {{"scales", c.scales},
         {"base_channels", c.base_channels},
         {"channel_cap", c.channel_cap},
         {"input_noise_sigma", c.input_noise_sigma}};
}

void from_json(const nlohmann::json& j, DiscriminatorConfig& c) {
    DiscriminatorConfig d;
    c.scales = j.value("scales", d.scales);
    c.base_channels = j.value("base_channels", d.base_channels);
    c.channel_cap = j.value("channel_cap", d.channel_cap);
    c.input_noise_sigma = j.value("input_noise_sigma", d.input_noise_sigma);
}

void to_json(nlohmann::json& j, const LossWeights& w) {
    j = {{"lambda_l1", w.lambda_l1}, {"dssim_weight", w.dssim_weight}};
}

void from_json(const nlohmann::json& j, LossWeights& w) {
    LossWeights d;
    w.lambda_l1 = j.value("lambda_l1", d.lambda_l1);
    w.dssim_weight = j.value("dssim_weight", d.dssim_weight);
}

}  // namespace octgan::gan
