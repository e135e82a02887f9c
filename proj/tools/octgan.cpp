// octgan: command-line entry point for the simulation, dataset, training,
// evaluation and reader-study pipeline.

#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "octgan/baselines.hpp"
#include "octgan/evaluation.hpp"
#include "octgan/image_io.hpp"
#include "octgan/pipeline.hpp"
#include "octgan/study_server.hpp"
#include "octgan/trainer.hpp"

namespace fs = std::filesystem;
using namespace octgan;
using nlohmann::json;

namespace {

json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw InvalidArgument("cannot read " + p.string());
    return json::parse(in);
}

// Options shared by `train` and `baseline unet-train`.
struct TrainArgs {
    fs::path data, out, config;
    std::string mode = "2d", frames = "single";
    std::optional<std::size_t> epochs, batch, depth, base, max_steps;
    std::optional<double> lr, dssim;
    std::optional<std::uint64_t> seed;
    bool no_noise = false;

    void add(CLI::App* c) {
        c->add_option("--data", data, "Dataset manifest (manifest.jsonl); the train split is used")->required()->check(CLI::ExistingFile);
        c->add_option("--out", out, "Output directory for checkpoints, logs and config.json")->required();
        c->add_option("--mode", mode, "Degradation mode the data was built with: axial | lateral | 2d")
            ->check(CLI::IsMember({"axial", "lateral", "2d"}));
        c->add_option("--frames", frames, "Frame setting of the data: single | avg3")->check(CLI::IsMember({"single", "avg3"}));
        c->add_option("--config", config,
                      "JSON with optional 'generator', 'discriminator' and 'train' sections; flags below override it")
            ->check(CLI::ExistingFile);
        c->add_option("--epochs", epochs, "Training epochs (default 30)");
        c->add_option("--batch-size", batch, "Minibatch size (default 8)");
        c->add_option("--lr", lr, "Adam learning rate (default 1e-4)");
        c->add_option("--seed", seed, "RNG seed for initialization, shuffling, noise and labels");
        c->add_option("--depth", depth, "U-Net depth; inputs must be multiples of 2^depth (default 8)");
        c->add_option("--base-channels", base, "Channels of the first generator level (default 64)");
        c->add_option("--dssim-weight", dssim, "Weight of the DSSIM term (default 0)");
        c->add_option("--max-steps", max_steps, "Stop after this many generator steps (0 = no limit)");
        c->add_flag("--no-noise", no_noise, "Disable generator noise injection");
    }

    void resolve(gan::GeneratorConfig& g, gan::DiscriminatorConfig& d, train::TrainConfig& t) const {
        if (!config.empty()) {
            const auto j = read_json(config);
            g = j.value("generator", json::object()).get<gan::GeneratorConfig>();
            d = j.value("discriminator", json::object()).get<gan::DiscriminatorConfig>();
            t = j.value("train", json::object()).get<train::TrainConfig>();
        }
        if (epochs) t.epochs = *epochs;
        if (batch) t.batch_size = *batch;
        if (lr) t.learning_rate = *lr;
        if (seed) t.seed = *seed;
        if (max_steps) t.max_generator_steps = *max_steps;
        if (dssim) t.weights.dssim_weight = *dssim;
        if (depth) g.depth = *depth;
        if (base) g.base_channels = *base;
        if (no_noise) g.noise_enabled = false;
    }

    train::TrainOptions options() const {
        train::TrainOptions o;
        o.out_dir = out;
        o.info = {{"mode", mode}, {"frames", frames}};
        o.on_step = [](const train::TrainLogRecord& r, gan::Generator&) {
            if (r.step % 50 == 0 || r.step == 1) {
                std::cerr << "step " << r.step << " epoch " << r.epoch << " g " << r.g_loss << " l1 " << r.l1_component;
                if (r.d_loss) std::cerr << " d " << *r.d_loss;
                std::cerr << '\n';
            }
        };
        return o;
    }
};

void report_train(const train::TrainResult& r, const fs::path& out) {
    std::cout << "trained " << r.epochs.size() << " epochs, " << r.log.size() << " generator steps; final L1 "
              << (r.log.empty() ? 0.0 : r.log.back().l1_component) << "\ncheckpoint: " << (out / "latest.ckpt").string()
              << '\n';
}

// Loads a 2-D image in [-1, 1]: a frame of a tomogram container (normalized
// with [peak - 50, peak]) or a PNG/TIFF whose gray levels are taken as a
// log-compressed display.
Image load_normalized(const fs::path& p, std::size_t frame) {
    const auto ext = p.extension().string();
    if (ext == ".png" || ext == ".tif" || ext == ".tiff") {
        auto g = io::read_gray(p);
        for (double& v : g.pixels.values()) v = 2.0 * v / g.full_scale - 1.0;
        return g.pixels;
    }
    const auto t = fringe::load_tomogram(p);
    if (frame >= t.frames()) throw InvalidArgument("frame " + std::to_string(frame) + " out of range");
    const auto img = t.intensity_db.slab(frame);
    return dataset::normalize(img, train::frame_window(img));
}

std::vector<double> parse_doubles(const std::vector<std::string>& items) {
    std::vector<double> out;
    for (const auto& s : items) out.push_back(std::stod(s));
    return out;
}

study::StudyServer* g_server = nullptr;
void on_signal(int) {
    if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Resolution enhancement of OCT images with a conditional GAN: simulation, training, evaluation, reader study"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Simulate spectral fringes of a scattering phantom");
    fs::path sim_out;
    std::string phantom = "tissue";
    pipeline::SimulateParams sp;
    std::uint64_t sim_seed = 0;
    std::optional<double> point_depth;
    sim->add_option("--out", sim_out, "Output fringe container")->required();
    sim->add_option("--phantom", phantom, "tissue | point")->check(CLI::IsMember({"tissue", "point"}));
    sim->add_option("--frames", sp.frames, "Number of B-scan frames")->capture_default_str();
    sim->add_option("--a-lines", sp.a_lines, "A-lines per frame (0.8 um pitch)")->capture_default_str();
    sim->add_option("--samples", sp.spectral_samples, "Spectral samples per A-line (depth = samples/2)")->capture_default_str();
    sim->add_option("--density", sp.scatterers_per_um2, "Tissue scatterer density per um^2")->capture_default_str();
    sim->add_option("--noise-floor", sp.noise_floor, "Additive fringe noise std relative to a unit reflector")->capture_default_str();
    sim->add_option("--point-depth-um", point_depth, "Depth of the point reflector (point phantom; default mid-depth)");
    sim->add_option("--seed", sim_seed, "Phantom and noise seed")->capture_default_str();

    // degrade
    auto* deg = app.add_subcommand("degrade", "Degrade fringes axially, laterally or both");
    fs::path deg_in, deg_out;
    std::string deg_mode = "2d";
    double fraction = fringe::kDefaultAxialFraction;
    std::size_t window = fringe::kDefaultLateralWindow;
    deg->add_option("--in", deg_in, "Input fringe container")->required()->check(CLI::ExistingFile);
    deg->add_option("--out", deg_out, "Output fringe container")->required();
    deg->add_option("--mode", deg_mode, "axial | lateral | 2d")->check(CLI::IsMember({"axial", "lateral", "2d"}))->capture_default_str();
    deg->add_option("--fraction", fraction, "Axial window FWHM as a fraction of the source bandwidth")->capture_default_str();
    deg->add_option("--window", window, "Lateral moving-average width in A-lines")->capture_default_str();

    // reconstruct
    auto* rec = app.add_subcommand("reconstruct", "Reconstruct a dB tomogram from fringes");
    fs::path rec_in, rec_out, rec_png;
    double rec_range = fringe::kDefaultDynamicRangeDb;
    rec->add_option("--in", rec_in, "Input fringe container")->required()->check(CLI::ExistingFile);
    rec->add_option("--out", rec_out, "Output tomogram container")->required();
    rec->add_option("--range", rec_range, "Dynamic range in dB below the peak")->capture_default_str();
    rec->add_option("--png", rec_png, "Also write frame 0 as an 8-bit PNG");

    // dataset
    auto* ds = app.add_subcommand("dataset", "Build a paired patch dataset with a volume-level train/val split");
    std::vector<std::string> ds_pairs;
    fs::path ds_out;
    std::string ds_frames = "single";
    dataset::BuildOptions bo;
    ds->add_option("--pair", ds_pairs, "Volume as ID:LOW_TOMOGRAM:HIGH_TOMOGRAM (repeatable)")->required();
    ds->add_option("--out", ds_out, "Output directory (patch sets and manifest.jsonl)")->required();
    ds->add_option("--frames", ds_frames, "single | avg3")->check(CLI::IsMember({"single", "avg3"}))->capture_default_str();
    ds->add_option("--train", bo.train_count, "Volumes in the training split")->required();
    ds->add_option("--val", bo.val_count, "Volumes in the validation split")->required();
    ds->add_option("--seed", bo.seed, "Split seed")->capture_default_str();
    ds->add_option("--patch-size", bo.extract.size, "Patch edge in pixels")->capture_default_str();
    ds->add_flag("--png", bo.png, "Also export 16-bit PNG patches");

    // train
    auto* tr = app.add_subcommand("train", "Train the conditional GAN");
    TrainArgs targs;
    targs.add(tr);

    // baseline
    auto* bl = app.add_subcommand("baseline", "Baselines: Richardson-Lucy deconvolution and an L1-only U-Net");
    bl->require_subcommand(1);
    auto* rl = bl->add_subcommand("rl", "Richardson-Lucy deconvolution of one tomogram frame");
    fs::path rl_in, rl_out, rl_png;
    std::size_t rl_frame = 0;
    baselines::RLConfig rlc;
    rl->add_option("--in", rl_in, "Input tomogram container")->required()->check(CLI::ExistingFile);
    rl->add_option("--frame", rl_frame, "Frame index")->capture_default_str();
    rl->add_option("--sigma", rlc.psf_sigma_px, "Gaussian PSF sigma in pixels")->capture_default_str();
    rl->add_option("--iterations", rlc.iterations, "Iterations")->capture_default_str();
    rl->add_option("--out", rl_out, "Output tomogram container (one frame, dB)")->required();
    rl->add_option("--png", rl_png, "Also write the result as an 8-bit PNG");
    auto* sweep = bl->add_subcommand("rl-sweep", "Sigma x iteration grid of Richardson-Lucy results as one PNG panel");
    fs::path sw_in, sw_out;
    std::size_t sw_frame = 0;
    std::vector<std::string> sw_sigmas = {"1", "2", "3"};
    std::vector<std::size_t> sw_iters = {10, 30, 100};
    double sw_range = 50.0;
    sweep->add_option("--in", sw_in, "Input tomogram container")->required()->check(CLI::ExistingFile);
    sweep->add_option("--frame", sw_frame, "Frame index")->capture_default_str();
    sweep->add_option("--sigmas", sw_sigmas, "PSF sigmas (panel rows)")->delimiter(',')->capture_default_str();
    sweep->add_option("--iterations", sw_iters, "Iteration counts (panel columns)")->delimiter(',')->capture_default_str();
    sweep->add_option("--range", sw_range, "Display range in dB")->capture_default_str();
    sweep->add_option("--out", sw_out, "Panel PNG")->required();
    auto* unet = bl->add_subcommand("unet-train", "Train the generator with the pixel loss only (no discriminator, no noise)");
    TrainArgs uargs;
    uargs.add(unet);

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "SSIM/PSNR before and after enhancement on the validation split");
    std::vector<fs::path> ev_ckpt, ev_data;
    std::vector<std::string> ev_mode, ev_frames;
    std::string ev_name = "phantom";
    fs::path ev_csv = "metrics.csv", ev_md = "metrics.md";
    bool ev_no_noise = false;
    std::uint64_t ev_seed = 0;
    ev->add_option("--checkpoint", ev_ckpt, "Checkpoint (repeatable, one per report row)")->required()->check(CLI::ExistingFile);
    ev->add_option("--data", ev_data, "Dataset manifest (repeat per row, or give once for all)")->required()->check(CLI::ExistingFile);
    ev->add_option("--mode", ev_mode, "Degradation mode per row (default: from the checkpoint)");
    ev->add_option("--frames", ev_frames, "Frame setting per row (default: from the checkpoint)");
    ev->add_option("--name", ev_name, "Dataset label in the report")->capture_default_str();
    ev->add_option("--csv", ev_csv, "CSV report path")->capture_default_str();
    ev->add_option("--md", ev_md, "Markdown report path")->capture_default_str();
    ev->add_flag("--no-noise", ev_no_noise, "Run the generator without noise injection");
    ev->add_option("--seed", ev_seed, "Inference noise seed")->capture_default_str();

    // crossdomain
    auto* cd = app.add_subcommand("crossdomain", "Rescale an image from another system and enhance it");
    fs::path cd_in, cd_ckpt, cd_out, cd_panel;
    std::size_t cd_frame = 0;
    eval::CrossDomainOptions cdo;
    bool cd_no_crop = false, cd_no_noise = false;
    std::vector<std::string> cd_sweep;
    std::uint64_t cd_seed = 0;
    cd->add_option("--in", cd_in, "PNG/TIFF image or tomogram container")->required()->check(CLI::ExistingFile);
    cd->add_option("--frame", cd_frame, "Frame of a tomogram container")->capture_default_str();
    cd->add_option("--checkpoint", cd_ckpt, "Generator checkpoint (omit to only write the prepared input)")->check(CLI::ExistingFile);
    cd->add_option("--scale", cdo.scale, "Resize factor before snapping to multiples of 256")->capture_default_str();
    cd->add_flag("--no-crop", cd_no_crop, "Keep the low-signal rows at the bottom");
    cd->add_option("--out", cd_out, "Output PNG (enhanced, or prepared without a checkpoint)")->required();
    cd->add_option("--sweep", cd_sweep, "Scale factors for a comparison panel, e.g. 2,3,4,5")->delimiter(',');
    cd->add_option("--panel", cd_panel, "Panel PNG for --sweep");
    cd->add_flag("--no-noise", cd_no_noise, "Run the generator without noise injection");
    cd->add_option("--seed", cd_seed, "Inference noise seed")->capture_default_str();

    // study
    auto* st = app.add_subcommand("study", "Blinded reader study");
    st->require_subcommand(1);
    auto* serve = st->add_subcommand("serve", "Serve the study HTTP+JSON API");
    fs::path bank_dir, log_dir;
    std::string host = "127.0.0.1";
    int port = 8080;
    serve->add_option("--bank", bank_dir, "Image bank directory with real/ and generated/ PNGs")->required()->check(CLI::ExistingDirectory);
    serve->add_option("--log-dir", log_dir, "Directory for per-session event logs (sessions resume on restart)");
    serve->add_option("--host", host, "Bind address")->capture_default_str();
    serve->add_option("--port", port, "Port (0 picks a free one)")->capture_default_str();
    auto* build = st->add_subcommand("build", "Write an image bank: ground truth and generator output for one split");
    fs::path sb_ckpt, sb_data, sb_out;
    std::string sb_split = "val";
    std::size_t sb_limit = 0;
    bool sb_no_noise = false;
    std::uint64_t sb_seed = 0;
    build->add_option("--checkpoint", sb_ckpt, "Generator checkpoint")->required()->check(CLI::ExistingFile);
    build->add_option("--data", sb_data, "Dataset manifest")->required()->check(CLI::ExistingFile);
    build->add_option("--split", sb_split, "train | val")->check(CLI::IsMember({"train", "val"}))->capture_default_str();
    build->add_option("--limit", sb_limit, "Use at most this many patches (0 = all)")->capture_default_str();
    build->add_option("--out", sb_out, "Bank directory")->required();
    build->add_flag("--no-noise", sb_no_noise, "Run the generator without noise injection");
    build->add_option("--seed", sb_seed, "Inference noise seed")->capture_default_str();

    // run
    auto* run = app.add_subcommand("run", "Run a JSON recipe of pipeline stages");
    fs::path recipe_path, run_out;
    run->add_option("--recipe", recipe_path, "Recipe file (see docs/recipes.md)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", run_out, "Run directory (default: <recipe name>_run next to the recipe)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) {
            fringe::FringeVolume v;
            if (phantom == "tissue") {
                v = pipeline::simulate_tissue(sp, sim_seed);
            } else {
                fringe::SourceSpectrum source;
                source.samples = sp.spectral_samples;
                fringe::SimulationOptions so;
                so.seed = sim_seed;
                const double lateral = static_cast<double>(sp.a_lines) * so.lateral_pitch_um;
                const double depth = fringe::unambiguous_depth_um(source, so.axial_pixel_um);
                const auto ph = fringe::point_phantom(point_depth.value_or(depth / 2.0), lateral / 2.0, depth, lateral);
                v = fringe::simulate_fringes(ph, source, sp.frames, sp.noise_floor, so);
            }
            fringe::save_fringes(sim_out, v);
            std::cout << "wrote " << sim_out.string() << " (" << v.frames() << " x " << v.a_lines() << " x " << v.bins() << ")\n";
        } else if (*deg) {
            const auto v = fringe::degrade(fringe::load_fringes(deg_in), fringe::parse_degrade_mode(deg_mode), fraction, window);
            fringe::save_fringes(deg_out, v);
            std::cout << "wrote " << deg_out.string() << '\n';
        } else if (*rec) {
            const auto t = fringe::reconstruct(fringe::load_fringes(rec_in), rec_range);
            fringe::save_tomogram(rec_out, t);
            if (!rec_png.empty()) {
                const auto img = t.intensity_db.slab(0);
                const auto w = train::frame_window(img, rec_range);
                io::write_png8(rec_png, img, w.floor_db, w.ceil_db);
            }
            std::cout << "wrote " << rec_out.string() << " (" << t.frames() << " x " << t.depth() << " x " << t.lateral() << ")\n";
        } else if (*ds) {
            std::vector<dataset::VolumeSource> sources;
            for (const auto& p : ds_pairs) {
                const auto a = p.find(':');
                const auto b = p.find(':', a == std::string::npos ? a : a + 1);
                if (a == std::string::npos || b == std::string::npos) {
                    throw InvalidArgument("--pair expects ID:LOW:HIGH, got '" + p + "'");
                }
                sources.push_back({p.substr(0, a), p.substr(a + 1, b - a - 1), p.substr(b + 1)});
            }
            bo.frames = dataset::parse_frames(ds_frames);
            const auto m = dataset::build_dataset(sources, ds_out, bo);
            std::cout << "wrote " << (ds_out / "manifest.jsonl").string() << " (" << m.entries.size() << " volumes)\n";
        } else if (*tr) {
            gan::GeneratorConfig g;
            gan::DiscriminatorConfig d;
            train::TrainConfig t;
            targs.resolve(g, d, t);
            const auto data = dataset::load_split(targs.data, dataset::Split::Train);
            report_train(train::train(data, g, d, t, targs.options()), targs.out);
        } else if (*bl) {
            if (*rl) {
                const auto t = fringe::load_tomogram(rl_in);
                if (rl_frame >= t.frames()) throw InvalidArgument("frame out of range");
                const auto img = t.intensity_db.slab(rl_frame);
                const auto w = train::frame_window(img);
                const auto out = baselines::linear_to_db(baselines::richardson_lucy(baselines::db_to_linear(img), rlc), w.floor_db);
                fringe::TomogramVolume res = t;
                res.intensity_db = Volume(1, out.rows(), out.cols());
                res.intensity_db.set_slab(0, out);
                fringe::save_tomogram(rl_out, res);
                if (!rl_png.empty()) io::write_png8(rl_png, out, w.floor_db, w.ceil_db);
                std::cout << "wrote " << rl_out.string() << '\n';
            } else if (*sweep) {
                const auto t = fringe::load_tomogram(sw_in);
                if (sw_frame >= t.frames()) throw InvalidArgument("frame out of range");
                const auto lin = baselines::db_to_linear(t.intensity_db.slab(sw_frame));
                const auto cells = baselines::rl_sweep(lin, parse_doubles(sw_sigmas), sw_iters);
                baselines::write_rl_panel(sw_out, lin, cells, sw_range);
                std::cout << "wrote " << sw_out.string() << " (" << cells.size() << " cells)\n";
            } else {
                gan::GeneratorConfig g;
                gan::DiscriminatorConfig d;
                train::TrainConfig t;
                uargs.resolve(g, d, t);
                const auto data = dataset::load_split(uargs.data, dataset::Split::Train);
                report_train(baselines::unet_baseline_train(data, g, t, uargs.options()), uargs.out);
            }
        } else if (*ev) {
            if (ev_data.size() != 1 && ev_data.size() != ev_ckpt.size()) {
                throw InvalidArgument("--data must be given once or once per --checkpoint");
            }
            for (auto* v : {&ev_mode, &ev_frames}) {
                if (!v->empty() && v->size() != ev_ckpt.size()) {
                    throw InvalidArgument("--mode/--frames must be given once per --checkpoint");
                }
            }
            eval::MetricReport report;
            for (std::size_t i = 0; i < ev_ckpt.size(); ++i) {
                const auto ck = gan::load_checkpoint(ev_ckpt[i]);
                auto from_info = [&](const char* key, const std::vector<std::string>& given, const char* fallback) {
                    if (!given.empty()) return given[i];
                    if (ck.info.contains(key) && ck.info.at(key).is_string()) return ck.info.at(key).get<std::string>();
                    return std::string(fallback);
                };
                const auto mode = fringe::parse_degrade_mode(from_info("mode", ev_mode, "2d"));
                const auto frames = dataset::parse_frames(from_info("frames", ev_frames, "single"));
                report.rows.push_back(eval::evaluate(ev_ckpt[i], ev_data.size() == 1 ? ev_data[0] : ev_data[i], mode, frames,
                                                     ev_name, !ev_no_noise, ev_seed));
            }
            report.write(ev_csv, ev_md);
            std::cout << report.to_markdown();
        } else if (*cd) {
            cdo.crop_low_signal = !cd_no_crop;
            const auto img = load_normalized(cd_in, cd_frame);
            std::optional<gan::Generator> g;
            if (!cd_ckpt.empty()) g.emplace(gan::load_checkpoint(cd_ckpt).make_generator());
            const auto prepared = eval::crossdomain_prepare(img, cdo);
            std::mt19937_64 rng(cd_seed);
            const auto result = g ? train::infer_normalized(prepared, *g, !cd_no_noise, rng) : prepared;
            io::write_png8(cd_out, result, -1.0, 1.0);
            std::cout << "wrote " << cd_out.string() << " (" << result.rows() << " x " << result.cols() << ")\n";
            if (!cd_sweep.empty()) {
                if (cd_panel.empty()) throw InvalidArgument("--sweep needs --panel");
                const auto cells = eval::crossdomain_sweep(img, g ? &*g : nullptr, parse_doubles(cd_sweep), !cd_no_noise, cd_seed);
                eval::write_scale_panel(cd_panel, cells);
                std::cout << "wrote " << cd_panel.string() << '\n';
            }
        } else if (*st) {
            if (*serve) {
                std::optional<fs::path> logs;
                if (!log_dir.empty()) logs = log_dir;
                study::SessionStore store(study::ImageBank::load(bank_dir), logs);
                study::StudyServer server(store);
                const int bound = server.bind(host, port);
                g_server = &server;
                std::signal(SIGINT, on_signal);
                std::signal(SIGTERM, on_signal);
                std::cout << "study service on http://" << host << ":" << bound << " (" << store.size()
                          << " resumed sessions)" << std::endl;
                server.serve();
                g_server = nullptr;
            } else {
                auto g = gan::load_checkpoint(sb_ckpt).make_generator();
                const auto pairs = dataset::load_split(sb_data, dataset::parse_split(sb_split));
                const std::size_t n = sb_limit == 0 ? pairs.size() : std::min(sb_limit, pairs.size());
                std::mt19937_64 rng(sb_seed);
                study::ImageBank bank;
                for (std::size_t i = 0; i < n; ++i) {
                    bank.real.push_back(pairs[i].high_res);
                    bank.generated.push_back(train::infer_normalized(pairs[i].low_res, g, !sb_no_noise, rng));
                }
                bank.save(sb_out);
                std::cout << "wrote " << n << " real/generated pairs to " << sb_out.string() << '\n';
            }
        } else if (*run) {
            const auto recipe = pipeline::Recipe::load(recipe_path);
            const auto out = run_out.empty() ? recipe_path.parent_path() / (recipe.name + "_run") : run_out;
            const auto m = pipeline::run_recipe(recipe, out);
            std::cout << "run complete: " << (out / "manifest.json").string() << " (" << m.stages.size() << " stages)\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
