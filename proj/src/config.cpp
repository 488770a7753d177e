#include "seqforge/config.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace seqforge {

namespace {

void reject_unknown(const nlohmann::json& section, const std::set<std::string>& known,
                    const std::string& where) {
    if (!section.is_object()) throw ConfigError("config: section '" + where + "' must be an object");
    for (auto it = section.begin(); it != section.end(); ++it)
        if (!known.count(it.key()))
            throw ConfigError("config: unknown key '" + where + "." + it.key() + "'");
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& into) {
    if (j.contains(key)) into = j.at(key).get<T>();
}

}  // namespace

RunConfig RunConfig::defaults() { return RunConfig{}; }

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config: invalid JSON in " + path);
    return from_json(j);
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig cfg;
    reject_unknown(j, {"renderer", "trainer", "model", "generation", "metrics"}, "<root>");

    if (j.contains("renderer")) {
        const auto& r = j.at("renderer");
        reject_unknown(r,
                       {"mode", "mixed_modes", "corpus", "font_dir", "target_text_height",
                        "rotation_max_deg", "shear_max", "scale_min", "scale_max",
                        "perspective_max_px", "dilation_radius", "dilation_iterations",
                        "image_width", "image_height", "poisson_tol", "poisson_max_iterations",
                        "max_rejections", "max_paragraph_lines"},
                       "renderer");
        std::string mode = to_string(cfg.renderer.mode);
        read(r, "mode", mode);
        cfg.renderer.mode = text_unit_mode_from_string(mode);
        read(r, "mixed_modes", cfg.renderer.mixed_modes);
        read(r, "corpus", cfg.corpus_path);
        read(r, "font_dir", cfg.font_dir);
        read(r, "target_text_height", cfg.renderer.target_text_height);
        read(r, "rotation_max_deg", cfg.renderer.transform.rotation_max_deg);
        read(r, "shear_max", cfg.renderer.transform.shear_max);
        read(r, "scale_min", cfg.renderer.transform.scale_min);
        read(r, "scale_max", cfg.renderer.transform.scale_max);
        read(r, "perspective_max_px", cfg.renderer.transform.perspective_max_px);
        read(r, "dilation_radius", cfg.renderer.dilation_radius);
        read(r, "dilation_iterations", cfg.renderer.dilation_iterations);
        read(r, "image_width", cfg.renderer.image_width);
        read(r, "image_height", cfg.renderer.image_height);
        read(r, "poisson_tol", cfg.renderer.poisson_tol);
        read(r, "poisson_max_iterations", cfg.renderer.poisson_max_iterations);
        read(r, "max_rejections", cfg.renderer.max_rejections);
        read(r, "max_paragraph_lines", cfg.renderer.max_paragraph_lines);
    }

    if (j.contains("trainer")) {
        const auto& t = j.at("trainer");
        reject_unknown(t,
                       {"lambda_l1", "learning_rate", "batch_size", "epochs", "adam_beta1",
                        "adam_beta2", "checkpoint_interval_epochs", "batches_per_epoch", "seed"},
                       "trainer");
        read(t, "lambda_l1", cfg.trainer.lambda_l1);
        read(t, "learning_rate", cfg.trainer.learning_rate);
        read(t, "batch_size", cfg.trainer.batch_size);
        read(t, "epochs", cfg.trainer.epochs);
        read(t, "adam_beta1", cfg.trainer.adam_beta1);
        read(t, "adam_beta2", cfg.trainer.adam_beta2);
        read(t, "checkpoint_interval_epochs", cfg.trainer.checkpoint_interval_epochs);
        read(t, "batches_per_epoch", cfg.batches_per_epoch);
        read(t, "seed", cfg.trainer.seed);
    }

    if (j.contains("model")) {
        const auto& m = j.at("model");
        reject_unknown(m,
                       {"encoder_channels", "decoder_channels", "residual_blocks",
                        "dropout_decoder_levels", "dropout_prob", "prelu_init", "disc_channels",
                        "disc_strides", "leaky_slope", "init_stddev", "bn_momentum", "bn_eps"},
                       "model");
        auto& plan = cfg.trainer.plan;
        read(m, "encoder_channels", plan.encoder_channels);
        read(m, "decoder_channels", plan.decoder_channels);
        if (m.contains("residual_blocks")) {
            if (m.at("residual_blocks").is_boolean()) {
                bool on = m.at("residual_blocks").get<bool>();
                plan.residual_after.assign(plan.encoder_channels.size(), on);
                plan.residual_after.back() = false;
            } else {
                plan.residual_after = m.at("residual_blocks").get<std::vector<bool>>();
            }
        }
        read(m, "dropout_decoder_levels", plan.dropout_decoder_levels);
        read(m, "dropout_prob", plan.dropout_prob);
        read(m, "prelu_init", plan.prelu_init);
        read(m, "disc_channels", plan.disc_channels);
        read(m, "disc_strides", plan.disc_strides);
        read(m, "leaky_slope", plan.leaky_slope);
        read(m, "init_stddev", plan.init_stddev);
        read(m, "bn_momentum", plan.bn_momentum);
        read(m, "bn_eps", plan.bn_eps);
    }

    if (j.contains("generation")) {
        const auto& g = j.at("generation");
        reject_unknown(g, {"grayscale", "batch_size"}, "generation");
        read(g, "grayscale", cfg.generation.grayscale);
        read(g, "batch_size", cfg.generation.batch_size);
    }

    if (j.contains("metrics")) {
        const auto& m = j.at("metrics");
        reject_unknown(m, {"backend", "n_splits"}, "metrics");
        read(m, "backend", cfg.metrics.backend);
        read(m, "n_splits", cfg.metrics.n_splits);
    }

    cfg.trainer.plan.image_height = cfg.renderer.image_height;
    cfg.trainer.plan.image_width = cfg.renderer.image_width;
    cfg.validate();
    return cfg;
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["renderer"] = {{"mode", to_string(renderer.mode)},
                     {"mixed_modes", renderer.mixed_modes},
                     {"corpus", corpus_path},
                     {"font_dir", font_dir},
                     {"target_text_height", renderer.target_text_height},
                     {"rotation_max_deg", renderer.transform.rotation_max_deg},
                     {"shear_max", renderer.transform.shear_max},
                     {"scale_min", renderer.transform.scale_min},
                     {"scale_max", renderer.transform.scale_max},
                     {"perspective_max_px", renderer.transform.perspective_max_px},
                     {"dilation_radius", renderer.dilation_radius},
                     {"dilation_iterations", renderer.dilation_iterations},
                     {"image_width", renderer.image_width},
                     {"image_height", renderer.image_height},
                     {"poisson_tol", renderer.poisson_tol},
                     {"poisson_max_iterations", renderer.poisson_max_iterations},
                     {"max_rejections", renderer.max_rejections},
                     {"max_paragraph_lines", renderer.max_paragraph_lines}};
    j["trainer"] = {{"lambda_l1", trainer.lambda_l1},
                    {"learning_rate", trainer.learning_rate},
                    {"batch_size", trainer.batch_size},
                    {"epochs", trainer.epochs},
                    {"adam_beta1", trainer.adam_beta1},
                    {"adam_beta2", trainer.adam_beta2},
                    {"checkpoint_interval_epochs", trainer.checkpoint_interval_epochs},
                    {"batches_per_epoch", batches_per_epoch},
                    {"seed", trainer.seed}};
    j["model"] = trainer.plan.to_json();
    j["model"].erase("image_height");
    j["model"].erase("image_width");
    j["model"].erase("image_channels");
    j["model"]["residual_blocks"] = trainer.plan.effective_residual_flags();
    j["model"].erase("residual_after");
    j["generation"] = {{"grayscale", generation.grayscale},
                       {"batch_size", generation.batch_size}};
    j["metrics"] = {{"backend", metrics.backend}, {"n_splits", metrics.n_splits}};
    return j;
}

void RunConfig::validate() const {
    if (renderer.image_width < 8 || renderer.image_height < 8)
        throw ConfigError("config: image extents too small");
    if (renderer.target_text_height < 4)
        throw ConfigError("config: target_text_height too small");
    if (renderer.transform.scale_min <= 0 ||
        renderer.transform.scale_max < renderer.transform.scale_min)
        throw ConfigError("config: invalid scale range");
    if (renderer.dilation_radius < 0 || renderer.dilation_iterations < 0)
        throw ConfigError("config: dilation parameters must be >= 0");
    if (generation.batch_size < 1) throw ConfigError("config: generation batch_size >= 1");
    if (metrics.n_splits < 1) throw ConfigError("config: metrics n_splits >= 1");
    trainer.validate();
}

}  // namespace seqforge
