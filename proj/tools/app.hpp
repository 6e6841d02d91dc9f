#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fastspec/metrics.hpp"
#include "fastspec/pipeline.hpp"
#include "fastspec/synthetic.hpp"

namespace fastspec::app {

enum class Algorithm { ncut, fsc, mfsc };

/// Everything a run needs. Built by resolve_config() from defaults, a JSON
/// document and flag overrides.
struct AppConfig {
  Algorithm algorithm = Algorithm::mfsc;
  std::filesystem::path image;
  std::filesystem::path folder;
  std::filesystem::path gt;  // mask file for one image, folder of masks for a batch
  std::filesystem::path out_dir = ".";
  std::size_t size = 0;      // working side; 0 picks the next power of two
  bool pad = false;          // pad with edge pixels instead of rescaling
  std::size_t jobs = 1;
  bool dump_tree = false;
  bool dump_matrices = false;
  bool dump_levels = false;
  bool literal_dice = false;
  SegmentOptions seg;
  nlohmann::json resolved;   // the merged configuration, user units
};

/// Size-dependent defaults: 128 and below, 256, 512 and above.
struct SizeDefaults {
  double R;
  double t;        // 0-255 units
  double sigma_c;
  double r;
};
SizeDefaults size_defaults(std::size_t side);

/// Built-in defaults in user units (t and sigma_i on the 0-255 scale).
nlohmann::json default_config();

/// Merges defaults <- file <- overrides, fills size-dependent fields the user
/// left unset, validates, and converts to internal units. Throws ConfigError
/// naming the offending field.
AppConfig resolve_config(const nlohmann::json& file, const nlohmann::json& overrides,
                         std::size_t working_side);

/// Working side for an image of the given dimensions under `cfg`.
std::size_t working_side(const nlohmann::json& merged, std::size_t width, std::size_t height);

/// Reads the JSON config file; parse errors become ConfigError at "$".
nlohmann::json load_config_file(const std::filesystem::path& path);

struct Metrics {
  double acc = 0.0;
  double ri = 0.0;
  double dice = 0.0;
};

struct ItemResult {
  std::string name;
  std::size_t side = 0;
  StageTimings timings;
  std::optional<Metrics> metrics;
  std::string warning;
};

/// Loads, prepares and segments one image, writing labels (PNG and CSV),
/// timing JSON, metrics JSON when a mask is given, and any requested dumps.
ItemResult run_single(const nlohmann::json& file, const nlohmann::json& overrides);

/// Segments every .png/.pgm in the folder (sorted by name) and writes
/// summary.csv (with time_s) plus summary_metrics.csv (timing-free, byte
/// stable). Returns the per-image results in file order.
std::vector<ItemResult> run_batch(const nlohmann::json& file, const nlohmann::json& overrides);

struct ScalingRow {
  std::string algorithm;
  std::size_t side = 0;
  double seconds = 0.0;
};

struct ScalingReport {
  std::vector<ScalingRow> rows;
  double mfsc_exponent = 0.0;
  double ncut_exponent = 0.0;  // NaN when Ncut was not timed
};

struct ScalingOptions {
  std::vector<std::size_t> sides{64, 128, 256, 512};
  std::vector<std::size_t> ncut_sides{32, 64, 128};
  int reps = 3;
  std::uint64_t seed = 1;
  double noise = 0.02;
};

/// Times MFSC (and Ncut) on two-region synthetics and fits log time
/// against log pixel count.
ScalingReport scaling_report(const ScalingOptions& opts);

/// Least-squares slope of log(y) on log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Writes dir/images/<name>.pgm and the mask as dir/gt/<name>.pgm.
void write_synthetic(const SyntheticImage& s, const std::filesystem::path& dir,
                     const std::string& name);

Metrics evaluate(const LabelMap& labels, const GroundTruth& gt, bool literal_dice);

std::string algorithm_name(Algorithm a);

}  // namespace fastspec::app
