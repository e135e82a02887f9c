#pragma once

// Alternating generator/discriminator training, checkpoints and logs, and
// full-frame inference.

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "octgan/dataset.hpp"
#include "octgan/gan.hpp"

namespace octgan::train {

// One discriminator update per `generator_steps` iterations for epochs in
// [first_epoch, last_epoch] (1-based; last_epoch 0 = open-ended).
struct ScheduleRule {
    std::size_t first_epoch = 1;
    std::size_t last_epoch = 0;
    std::size_t generator_steps = 1;
};

std::vector<ScheduleRule> default_schedule();

struct TrainConfig {
    double learning_rate = 1e-4;
    double adam_beta1 = 0.5;
    double adam_beta2 = 0.999;
    std::size_t batch_size = 8;
    std::size_t epochs = 30;
    gan::LossWeights weights;
    gan::LabelParams labels;
    std::vector<ScheduleRule> d_step_schedule = default_schedule();
    std::uint64_t seed = 0;
    bool adversarial = true;          // false: L1/DSSIM only, no discriminator
    std::size_t max_generator_steps = 0;  // 0 = run all epochs
    std::size_t log_every = 1;

    void validate() const;
    // Iterations per discriminator step in `epoch`.
    std::size_t generator_steps_per_d_step(std::size_t epoch) const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct TrainLogRecord {
    std::size_t step = 0;  // generator steps so far (1-based)
    std::size_t epoch = 0;
    double g_loss = 0.0;
    std::optional<double> d_loss;  // present on iterations with a discriminator update
    double l1_component = 0.0;
    double wall_time = 0.0;  // seconds since training started
};

nlohmann::json to_json(const TrainLogRecord& r);
void write_log_csv(const std::filesystem::path& path, const std::vector<TrainLogRecord>& log);

struct EpochCounts {
    std::size_t epoch = 0;
    std::size_t generator_steps = 0;
    std::size_t discriminator_steps = 0;
};

struct TrainResult {
    gan::Checkpoint checkpoint;
    std::vector<TrainLogRecord> log;
    std::vector<EpochCounts> epochs;
};

class TrainingDiverged : public Error {
public:
    TrainingDiverged(const std::string& what, std::optional<std::filesystem::path> last_good)
        : Error(what), last_good_checkpoint(std::move(last_good)) {}
    std::optional<std::filesystem::path> last_good_checkpoint;
};

struct TrainOptions {
    // When set: epoch_NNN.ckpt, latest.ckpt, train_log.jsonl, train_log.csv, config.json.
    std::optional<std::filesystem::path> out_dir;
    nlohmann::json info = nlohmann::json::object();  // copied into checkpoints
    // Called after each generator step (testing and progress hooks).
    std::function<void(const TrainLogRecord&, gan::Generator&)> on_step;
};

TrainResult train(const std::vector<dataset::PatchPair>& data, const gan::GeneratorConfig& gen_cfg,
                  const gan::DiscriminatorConfig& disc_cfg, const TrainConfig& cfg, const TrainOptions& options = {});

// Normalizes a dB frame with `window` (default [peak-50, peak]), pads by
// reflection to the generator's size multiple, runs it, crops back and
// returns dB.
Image infer_full(const Image& frame_db, gan::Generator& generator, bool noise_enabled, std::mt19937_64& rng,
                 std::optional<dataset::DbWindow> window = std::nullopt);
// Same on an image already in [-1, 1].
Image infer_normalized(const Image& image, gan::Generator& generator, bool noise_enabled, std::mt19937_64& rng);

dataset::DbWindow frame_window(const Image& frame_db, double range_db = 50.0);

}  // namespace octgan::train
