#include "seqforge/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "seqforge/image_io.hpp"

namespace seqforge {
namespace cli {

namespace fs = std::filesystem;

FontCatalogue resolve_fonts(const RunConfig& config) {
    if (!config.font_dir.empty()) return FontCatalogue::from_directory(config.font_dir);
    if (const char* env = std::getenv("SEQFORGE_FONT_DIR"); env && *env)
        return FontCatalogue::from_directory(env);
    return FontCatalogue::builtin_only();
}

namespace {

Corpus resolve_corpus(const RunConfig& config) {
    if (config.corpus_path.empty())
        throw ConfigError("no corpus configured (renderer.corpus or --corpus)");
    return Corpus::from_file(config.corpus_path);
}

std::string sample_stem(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06d", index);
    return buf;
}

}  // namespace

void cmd_synth(const RunConfig& config, uint64_t base_seed, int count,
               const std::string& out_dir) {
    if (count < 1) throw ConfigError("synth: count must be >= 1");
    Corpus corpus = resolve_corpus(config);
    FontCatalogue fonts = resolve_fonts(config);
    fs::create_directories(out_dir);

    for (int i = 0; i < count; ++i) {
        const std::string stem = out_dir + "/" + sample_stem(i);
        if (fs::exists(stem + "_semantic.png") && fs::exists(stem + "_glyph.png") &&
            fs::exists(stem + "_fg.png") && fs::exists(stem + ".json"))
            continue;  // resumable: sample i is a pure function of its seed
        SemanticSample sample;
        try {
            sample = synthesize_sample(corpus, fonts, config.renderer, base_seed + uint64_t(i));
        } catch (const Error& e) {
            throw RuntimeFailure("synth: sample " + std::to_string(i) + ": " + e.what());
        }
        write_png(stem + "_semantic.png", sample.semantic);
        write_png_mask(stem + "_glyph.png", sample.glyph_mask);
        write_png_mask(stem + "_fg.png", sample.foreground_mask);
        std::ofstream rec(stem + ".json", std::ios::trunc);
        rec << sample_record_json(sample) << '\n';
        if (!rec) throw RuntimeFailure("synth: cannot write " + stem + ".json");
    }
}

std::string cmd_train(const RunConfig& config, uint64_t seed, const std::string& data_dir,
                      bool on_the_fly, const std::string& out_dir, const std::string& resume,
                      int epochs_override) {
    train::TrainConfig tcfg = config.trainer;
    tcfg.seed = seed;
    if (epochs_override >= 0) tcfg.epochs = epochs_override;

    std::unique_ptr<train::BatchSource> source;
    std::unique_ptr<Corpus> corpus;
    std::unique_ptr<FontCatalogue> fonts;
    if (on_the_fly) {
        corpus = std::make_unique<Corpus>(resolve_corpus(config));
        fonts = std::make_unique<FontCatalogue>(resolve_fonts(config));
        source = std::make_unique<train::OnTheFlySource>(*corpus, *fonts, config.renderer,
                                                         tcfg.batch_size,
                                                         config.batches_per_epoch, seed);
    } else {
        if (data_dir.empty()) throw ConfigError("train: need --data DIR or --on-the-fly");
        source = std::make_unique<train::PairedDiskDataset>(data_dir, tcfg.batch_size, seed);
    }
    train::TrainResult result = train::run_training(*source, tcfg, out_dir, resume);
    return result.final_checkpoint;
}

void cmd_generate(const RunConfig& config, uint64_t base_seed, const std::string& checkpoint,
                  int count, const std::string& out_dir, bool grayscale) {
    if (count < 1) throw ConfigError("generate: count must be >= 1");
    Corpus corpus = resolve_corpus(config);
    FontCatalogue fonts = resolve_fonts(config);

    std::unique_ptr<nn::CascadeState> state;
    nn::load_checkpoint(checkpoint, state, nullptr, config.trainer.adam());
    if (state->plan.image_height != config.renderer.image_height ||
        state->plan.image_width != config.renderer.image_width)
        throw RuntimeFailure("generate: checkpoint image extents differ from config");

    fs::create_directories(out_dir);
    std::ofstream manifest(out_dir + "/manifest.jsonl", std::ios::trunc);
    if (!manifest) throw RuntimeFailure("generate: cannot write manifest in " + out_dir);

    nn::Context eval_ctx;  // dropout off, running statistics
    const int B = config.generation.batch_size;
    const int H = config.renderer.image_height, W = config.renderer.image_width;

    for (int start = 0; start < count; start += B) {
        const int n = std::min(B, count - start);
        std::vector<SemanticSample> samples;
        std::vector<ImageGrid> images;
        samples.reserve(n);
        for (int k = 0; k < n; ++k) {
            samples.push_back(synthesize_sample(corpus, fonts, config.renderer,
                                                base_seed + uint64_t(start + k)));
            images.push_back(samples.back().semantic);
        }
        nn::Tensor x = train::images_to_net(images);
        nn::CascadeOutput out = nn::cascade_forward(*state, x, eval_ctx);

        for (int k = 0; k < n; ++k) {
            char name[32];
            std::snprintf(name, sizeof(name), "%08d.png", start + k);
            const std::string path = out_dir + "/" + name;
            if (grayscale) {
                std::vector<uint8_t> pixels(size_t(H) * W);
                for (int y = 0; y < H; ++y)
                    for (int xx = 0; xx < W; ++xx) {
                        // Luma on the [0,255]-scaled channels, round-half-up.
                        double r = (std::clamp(out.y2(k, 0, y, xx), -1.f, 1.f) + 1.0) * 127.5;
                        double g = (std::clamp(out.y2(k, 1, y, xx), -1.f, 1.f) + 1.0) * 127.5;
                        double b = (std::clamp(out.y2(k, 2, y, xx), -1.f, 1.f) + 1.0) * 127.5;
                        double luma = 0.299 * r + 0.587 * g + 0.114 * b;
                        pixels[size_t(y) * W + xx] =
                            uint8_t(std::clamp(int(std::floor(luma + 0.5)), 0, 255));
                    }
                write_png_u8(path, pixels, H, W, 1);
            } else {
                std::vector<uint8_t> pixels(size_t(H) * W * 3);
                for (int y = 0; y < H; ++y)
                    for (int xx = 0; xx < W; ++xx)
                        for (int c = 0; c < 3; ++c)
                            pixels[(size_t(y) * W + xx) * 3 + c] =
                                quantize_net_range(out.y2(k, c, y, xx));
                write_png_u8(path, pixels, H, W, 3);
            }
            nlohmann::json rec;
            rec["image_path"] = name;
            rec["text"] = samples[k].text;
            rec["width"] = W;
            rec["height"] = H;
            rec["grayscale"] = grayscale;
            rec["seed"] = samples[k].seed;
            rec["font_id"] = samples[k].font_id;
            manifest << rec.dump() << '\n';
        }
    }
    if (!manifest) throw RuntimeFailure("generate: manifest write failed");
}

metrics::MetricReport cmd_eval(const std::string& generated_dir,
                               const std::string& reference_dir, const std::string& backend_name,
                               int n_splits, const std::string& out_file) {
    auto backend = metrics::make_backend(backend_name);
    metrics::MetricReport report =
        metrics::evaluate_dirs(generated_dir, reference_dir, *backend, n_splits);
    if (!out_file.empty()) {
        std::ofstream out(out_file, std::ios::trunc);
        out << report.to_json() << '\n';
        if (!out) throw RuntimeFailure("eval-metrics: cannot write " + out_file);
    }
    return report;
}

int run(int argc, const char* const* argv) {
    CLI::App app{"seqforge: synthetic text-sequence image factory"};
    app.require_subcommand(1);

    std::string config_path, corpus_override, font_dir_override;
    uint64_t seed = 0;
    app.add_option("--config", config_path, "JSON config file")->envname("SEQFORGE_CONFIG");
    app.add_option("--seed", seed, "base RNG seed");
    app.add_option("--corpus", corpus_override, "corpus text file (overrides config)");
    app.add_option("--fonts", font_dir_override, "font directory (overrides config)");

    auto* synth = app.add_subcommand("synth", "synthesize semantic samples");
    int synth_count = 1;
    std::string synth_out = "synth_out";
    synth->add_option("--count", synth_count, "number of samples")->required();
    synth->add_option("--out", synth_out, "output directory")->required();

    auto* train_cmd = app.add_subcommand("train", "train the cascade");
    std::string train_data, train_out = "train_out", train_resume;
    bool on_the_fly = false;
    int epochs_override = -1;
    train_cmd->add_option("--data", train_data, "paired dataset directory");
    train_cmd->add_flag("--on-the-fly", on_the_fly, "synthesize training pairs on the fly");
    train_cmd->add_option("--out", train_out, "checkpoint directory")->required();
    train_cmd->add_option("--resume", train_resume, "checkpoint to resume from");
    train_cmd->add_option("--epochs", epochs_override, "override configured epoch count");

    auto* gen = app.add_subcommand("generate", "generate a labelled dataset");
    std::string gen_checkpoint, gen_out = "generated";
    int gen_count = 1;
    bool gen_grayscale = false;
    gen->add_option("--checkpoint", gen_checkpoint, "trained checkpoint")->required();
    gen->add_option("--count", gen_count, "number of images")->required();
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_flag("--grayscale", gen_grayscale, "export single-channel images");

    auto* eval = app.add_subcommand("eval-metrics", "Inception score and FID between two sets");
    std::string eval_gen, eval_ref, eval_backend = "tiny-convnet-v1", eval_out;
    int eval_splits = -1;
    eval->add_option("--generated", eval_gen, "generated image directory")->required();
    eval->add_option("--reference", eval_ref, "reference image directory")->required();
    eval->add_option("--backend", eval_backend, "feature extractor backend");
    eval->add_option("--splits", eval_splits, "Inception score split count");
    eval->add_option("--out", eval_out, "report JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;  // usage errors map to exit code 1
    }

    try {
        RunConfig config =
            config_path.empty() ? RunConfig::defaults() : RunConfig::from_file(config_path);
        if (!corpus_override.empty()) config.corpus_path = corpus_override;
        if (!font_dir_override.empty()) config.font_dir = font_dir_override;

        if (*synth) {
            cmd_synth(config, seed, synth_count, synth_out);
            std::cout << "wrote " << synth_count << " samples to " << synth_out << "\n";
        } else if (*train_cmd) {
            std::string ckpt = cmd_train(config, seed, train_data, on_the_fly, train_out,
                                         train_resume, epochs_override);
            std::cout << "final checkpoint: " << ckpt << "\n";
        } else if (*gen) {
            bool gray = gen_grayscale || config.generation.grayscale;
            cmd_generate(config, seed, gen_checkpoint, gen_count, gen_out, gray);
            std::cout << "wrote " << gen_count << " images to " << gen_out << "\n";
        } else if (*eval) {
            int splits = eval_splits > 0 ? eval_splits : config.metrics.n_splits;
            metrics::MetricReport report =
                cmd_eval(eval_gen, eval_ref, eval_backend, splits, eval_out);
            std::cout << report.to_json() << "\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace cli
}  // namespace seqforge
