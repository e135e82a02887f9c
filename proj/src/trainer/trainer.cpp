#include "octgan/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>

#include "octgan/padding.hpp"
#include "octgan/seed.hpp"

namespace octgan::train {

namespace {

enum Stream : std::uint64_t { kShuffle = 1, kNoise = 2, kLabels = 3 };

std::string epoch_name(std::size_t epoch) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "epoch_%03zu.ckpt", epoch);
    return buf;
}

nn::Tensor gather(const std::vector<dataset::PatchPair>& data, const std::vector<std::size_t>& idx, bool low) {
    std::vector<const Image*> ptrs;
    ptrs.reserve(idx.size());
    for (auto i : idx) ptrs.push_back(low ? &data[i].low_res : &data[i].high_res);
    return nn::batch_from_images(ptrs);
}

std::vector<nn::Tensor> slice_maps(const std::vector<nn::Tensor>& maps, std::size_t first, std::size_t count) {
    std::vector<nn::Tensor> out;
    for (const auto& m : maps) out.push_back(nn::slice_batch(m, first, count));
    return out;
}

}  // namespace

std::vector<ScheduleRule> default_schedule() {
    return {{1, 2, 3}, {3, 4, 2}, {5, 0, 1}};
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        throw InvalidArgument("Adam betas must lie in [0, 1)");
    }
    if (batch_size == 0) throw InvalidArgument("batch_size must be positive");
    if (epochs == 0) throw InvalidArgument("epochs must be positive");
    weights.validate();
    labels.validate();
    if (log_every == 0) throw InvalidArgument("log_every must be positive");
    for (const auto& r : d_step_schedule) {
        if (r.first_epoch == 0 || r.generator_steps == 0 || (r.last_epoch != 0 && r.last_epoch < r.first_epoch)) {
            throw InvalidArgument("invalid discriminator schedule rule");
        }
    }
    if (adversarial) {
        for (std::size_t e = 1; e <= epochs; ++e) (void)generator_steps_per_d_step(e);
    }
}

std::size_t TrainConfig::generator_steps_per_d_step(std::size_t epoch) const {
    const ScheduleRule* hit = nullptr;
    for (const auto& r : d_step_schedule) {
        if (epoch >= r.first_epoch && (r.last_epoch == 0 || epoch <= r.last_epoch)) {
            if (hit != nullptr) throw InvalidArgument("discriminator schedule rules overlap at epoch " + std::to_string(epoch));
            hit = &r;
        }
    }
    if (hit == nullptr) throw InvalidArgument("discriminator schedule does not cover epoch " + std::to_string(epoch));
    return hit->generator_steps;
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
    auto sched = nlohmann::json::array();
    for (const auto& r : c.d_step_schedule) {
        sched.push_back({{"first_epoch", r.first_epoch}, {"last_epoch", r.last_epoch}, {"generator_steps", r.generator_steps}});
    }
    j = {{"learning_rate", c.learning_rate},
         {"adam_beta1", c.adam_beta1},
         {"adam_beta2", c.adam_beta2},
         {"batch_size", c.batch_size},
         {"epochs", c.epochs},
         {"loss_weights", c.weights},
         {"labels",
          {{"real_low", c.labels.real_low},
           {"real_high", c.labels.real_high},
           {"fake_low", c.labels.fake_low},
           {"fake_high", c.labels.fake_high},
           {"flip_p", c.labels.flip_p}}},
         {"d_step_schedule", sched},
         {"seed", c.seed},
         {"adversarial", c.adversarial},
         {"max_generator_steps", c.max_generator_steps},
         {"log_every", c.log_every}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
    TrainConfig d;
    c.learning_rate = j.value("learning_rate", d.learning_rate);
    c.adam_beta1 = j.value("adam_beta1", d.adam_beta1);
    c.adam_beta2 = j.value("adam_beta2", d.adam_beta2);
    c.batch_size = j.value("batch_size", d.batch_size);
    c.epochs = j.value("epochs", d.epochs);
    c.weights = j.value("loss_weights", d.weights);
    c.labels = d.labels;
    if (j.contains("labels")) {
        const auto& l = j.at("labels");
        c.labels.real_low = l.value("real_low", d.labels.real_low);
        c.labels.real_high = l.value("real_high", d.labels.real_high);
        c.labels.fake_low = l.value("fake_low", d.labels.fake_low);
        c.labels.fake_high = l.value("fake_high", d.labels.fake_high);
        c.labels.flip_p = l.value("flip_p", d.labels.flip_p);
    }
    c.d_step_schedule = d.d_step_schedule;
    if (j.contains("d_step_schedule")) {
        c.d_step_schedule.clear();
        for (const auto& r : j.at("d_step_schedule")) {
            c.d_step_schedule.push_back({r.at("first_epoch").get<std::size_t>(), r.value("last_epoch", std::size_t{0}),
                                         r.at("generator_steps").get<std::size_t>()});
        }
    }
    c.seed = j.value("seed", d.seed);
    c.adversarial = j.value("adversarial", d.adversarial);
    c.max_generator_steps = j.value("max_generator_steps", d.max_generator_steps);
    c.log_every = j.value("log_every", d.log_every);
}

nlohmann::json to_json(const TrainLogRecord& r) {
    nlohmann::json j = {{"step", r.step},
                        {"epoch", r.epoch},
                        {"g_loss", r.g_loss},
                        {"d_loss", nullptr},
                        {"l1_component", r.l1_component},
                        {"wall_time", r.wall_time}};
    if (r.d_loss) j["d_loss"] = *r.d_loss;
    return j;
}

void write_log_csv(const std::filesystem::path& path, const std::vector<TrainLogRecord>& log) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os << "step,epoch,g_loss,d_loss,l1_component,wall_time\n";
    os.precision(10);
    for (const auto& r : log) {
        os << r.step << ',' << r.epoch << ',' << r.g_loss << ',';
        if (r.d_loss) os << *r.d_loss;
        os << ',' << r.l1_component << ',' << r.wall_time << '\n';
    }
}

TrainResult train(const std::vector<dataset::PatchPair>& data, const gan::GeneratorConfig& gen_cfg,
                  const gan::DiscriminatorConfig& disc_cfg, const TrainConfig& cfg, const TrainOptions& options) {
    cfg.validate();
    if (data.empty()) throw InvalidArgument("train: the training split is empty");

    gan::GeneratorConfig gcfg = gen_cfg;
    gan::Generator g(gcfg, cfg.seed);
    std::optional<gan::Discriminator> d;
    if (cfg.adversarial) d.emplace(disc_cfg, cfg.seed + 1);
    nn::Adam g_opt(g.params(), cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2);
    std::optional<nn::Adam> d_opt;
    if (d) d_opt.emplace(d->params(), cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2);

    std::mt19937_64 noise_rng(derive_seed(cfg.seed, kNoise));
    std::mt19937_64 label_rng(derive_seed(cfg.seed, kLabels));

    nlohmann::json info = options.info;
    std::ofstream log_stream;
    std::optional<std::filesystem::path> last_good;
    if (options.out_dir) {
        std::filesystem::create_directories(*options.out_dir);
        nlohmann::json conf = {{"generator", gcfg}, {"train", cfg}, {"seed", cfg.seed}, {"info", info}};
        if (d) conf["discriminator"] = disc_cfg;
        std::ofstream(*options.out_dir / "config.json") << conf.dump(2) << '\n';
        log_stream.open(*options.out_dir / "train_log.jsonl", std::ios::trunc);
    }

    auto snapshot = [&](std::size_t epoch) {
        nlohmann::json ck_info = info;
        ck_info["epoch"] = epoch;
        return gan::capture(g, d ? &*d : nullptr, cfg.weights, cfg.seed, ck_info);
    };

    TrainResult result;
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t step = 0;
    const std::size_t n = data.size();
    const std::size_t iters = (n + cfg.batch_size - 1) / cfg.batch_size;
    bool done = false;

    for (std::size_t epoch = 1; epoch <= cfg.epochs && !done; ++epoch) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::mt19937_64 shuffle_rng(derive_seed(derive_seed(cfg.seed, kShuffle), epoch));
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        const std::size_t k = d ? cfg.generator_steps_per_d_step(epoch) : 0;
        EpochCounts counts{epoch, 0, 0};

        for (std::size_t it = 0; it < iters; ++it) {
            const std::size_t lo = it * cfg.batch_size;
            const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                               order.begin() + static_cast<std::ptrdiff_t>(std::min(n, lo + cfg.batch_size)));
            const nn::Tensor cond = gather(data, idx, true);
            const nn::Tensor target = gather(data, idx, false);
            const std::size_t b = idx.size();
            TrainLogRecord rec;
            rec.epoch = epoch;
            try {
                if (d && it % k == 0) {
                    // Real and generated pairs share one discriminator pass.
                    const nn::Tensor fake = g.forward(cond, noise_rng);
                    const auto logits = d->forward(nn::concat_batch(cond, cond), nn::concat_batch(target, fake), &noise_rng);
                    const auto loss = gan::discriminator_loss(slice_maps(logits, 0, b), slice_maps(logits, b, b),
                                                              cfg.labels, label_rng);
                    std::vector<nn::Tensor> grads;
                    for (std::size_t s = 0; s < logits.size(); ++s) {
                        grads.push_back(nn::concat_batch(loss.grad_real[s], loss.grad_fake[s]));
                    }
                    d_opt->zero_grad();
                    d->backward(grads);
                    d_opt->step();
                    rec.d_loss = loss.value;
                    ++counts.discriminator_steps;
                }
                g_opt.zero_grad();
                const auto obj = gan::generator_objective(g, d ? &*d : nullptr, cond, target, cfg.weights, noise_rng);
                g_opt.step();
                rec.g_loss = obj.total;
                rec.l1_component = obj.l1;
            } catch (const gan::DivergenceError& e) {
                throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch) + ", step " +
                                           std::to_string(step + 1) + ": " + e.what(),
                                       last_good);
            }
            ++counts.generator_steps;
            rec.step = ++step;
            rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            result.log.push_back(rec);
            if (log_stream.is_open() && (rec.step % cfg.log_every == 0 || rec.step == 1)) {
                log_stream << to_json(rec).dump() << '\n';
            }
            if (options.on_step) options.on_step(rec, g);
            if (cfg.max_generator_steps != 0 && step >= cfg.max_generator_steps) {
                done = true;
                break;
            }
        }
        result.epochs.push_back(counts);
        if (options.out_dir) {
            const auto ck = snapshot(epoch);
            const auto path = *options.out_dir / epoch_name(epoch);
            gan::save_checkpoint(path, ck);
            gan::save_checkpoint(*options.out_dir / "latest.ckpt", ck);
            last_good = path;
            log_stream.flush();
        }
    }
    result.checkpoint = snapshot(result.epochs.empty() ? 0 : result.epochs.back().epoch);
    if (options.out_dir) write_log_csv(*options.out_dir / "train_log.csv", result.log);
    return result;
}

dataset::DbWindow frame_window(const Image& frame_db, double range_db) {
    if (frame_db.size() == 0) throw InvalidArgument("frame_window: empty frame");
    const double peak = *std::max_element(frame_db.values().begin(), frame_db.values().end());
    return {peak - range_db, peak};
}

Image infer_normalized(const Image& image, gan::Generator& generator, bool noise_enabled, std::mt19937_64& rng) {
    const bool keep = generator.config().noise_enabled;
    generator.set_noise_enabled(noise_enabled);
    const auto padded = eval::pad_to_multiple(image, generator.config().size_multiple());
    Image out;
    try {
        out = eval::unpad(padded, generator.run(padded.image, rng));
    } catch (...) {
        generator.set_noise_enabled(keep);
        throw;
    }
    generator.set_noise_enabled(keep);
    return out;
}

Image infer_full(const Image& frame_db, gan::Generator& generator, bool noise_enabled, std::mt19937_64& rng,
                 std::optional<dataset::DbWindow> window) {
    const auto w = window.value_or(frame_window(frame_db));
    return dataset::denormalize(infer_normalized(dataset::normalize(frame_db, w), generator, noise_enabled, rng), w);
}

}  // namespace octgan::train
