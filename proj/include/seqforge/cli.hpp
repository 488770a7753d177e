#pragma once

#include <cstdint>
#include <string>

#include "seqforge/config.hpp"
#include "seqforge/metrics.hpp"

namespace seqforge {
namespace cli {

// Exit codes: 0 success, 1 usage/configuration error, 2 runtime failure.
int run(int argc, const char* const* argv);

// Command bodies, exposed for tests and embedding. All are deterministic
// given (config, seed).

// Writes `count` semantic samples (semantic/glyph/fg PNGs plus a JSON record
// each) with per-sample seed = base_seed + index. Existing complete samples
// are skipped, which makes interrupted runs resumable bit-exactly.
void cmd_synth(const RunConfig& config, uint64_t base_seed, int count,
               const std::string& out_dir);

// Trains from a paired directory or on-the-fly synthetic pairs; returns the
// final checkpoint path.
std::string cmd_train(const RunConfig& config, uint64_t seed, const std::string& data_dir,
                      bool on_the_fly, const std::string& out_dir, const std::string& resume,
                      int epochs_override = -1);

// Streams `count` generated images through the cascade in eval mode and
// writes a JSON-lines manifest; memory use is bounded by the batch size.
void cmd_generate(const RunConfig& config, uint64_t base_seed, const std::string& checkpoint,
                  int count, const std::string& out_dir, bool grayscale);

metrics::MetricReport cmd_eval(const std::string& generated_dir,
                               const std::string& reference_dir, const std::string& backend,
                               int n_splits, const std::string& out_file);

// Resolves the font catalogue: explicit config dir, then SEQFORGE_FONT_DIR,
// then the builtin face.
FontCatalogue resolve_fonts(const RunConfig& config);

}  // namespace cli
}  // namespace seqforge
