#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include "app.hpp"
#include "fastspec/errors.hpp"

using fastspec::app::AppConfig;
using nlohmann::json;

namespace {

struct Flags {
  std::string algorithm, image, folder, gt, out_dir, mode, merge, lift, config;
  std::size_t k = 0, l_init = 0, k_int = 0, jobs = 0, size = 0;
  double t = 0, r = 0, R = 0, sigma_x = 0, sigma_i = 0, sigma_c = 0, alpha = 0;
  std::uint64_t seed = 0;
  bool pad = false, dump_tree = false, dump_matrices = false, dump_levels = false;
  bool cluster_superpixels = false, literal_dice = false;
};

template <typename T>
void put(json& j, const CLI::App& app, const std::string& flag, const char* key, const T& value) {
  if (app.count(flag) > 0) j[key] = value;
}

json overrides_from(const CLI::App& app, const Flags& f) {
  json j = json::object();
  put(j, app, "--algorithm", "algorithm", f.algorithm);
  put(j, app, "--image", "image", f.image);
  put(j, app, "--folder", "folder", f.folder);
  put(j, app, "--gt", "gt", f.gt);
  put(j, app, "--out-dir", "out_dir", f.out_dir);
  put(j, app, "--mode", "mode", f.mode);
  put(j, app, "--merge", "merge", f.merge);
  put(j, app, "--lift", "lift", f.lift);
  put(j, app, "--k", "k", f.k);
  put(j, app, "--l-init", "l_init", f.l_init);
  put(j, app, "--k-int", "k_int", f.k_int);
  put(j, app, "--jobs", "jobs", f.jobs);
  put(j, app, "--size", "size", f.size);
  put(j, app, "--t", "t", f.t);
  put(j, app, "--r", "r", f.r);
  put(j, app, "--R", "R", f.R);
  put(j, app, "--sigma-x", "sigma_x", f.sigma_x);
  put(j, app, "--sigma-i", "sigma_i", f.sigma_i);
  put(j, app, "--sigma-c", "sigma_c", f.sigma_c);
  put(j, app, "--alpha", "alpha", f.alpha);
  put(j, app, "--seed", "seed", f.seed);
  put(j, app, "--pad", "pad", f.pad);
  put(j, app, "--dump-tree", "dump_tree", f.dump_tree);
  put(j, app, "--dump-matrices", "dump_matrices", f.dump_matrices);
  put(j, app, "--dump-levels", "dump_levels", f.dump_levels);
  put(j, app, "--cluster-superpixels", "cluster_superpixels", f.cluster_superpixels);
  put(j, app, "--literal-dice", "literal_dice", f.literal_dice);
  return j;
}

void print_metrics(const fastspec::app::ItemResult& r) {
  std::printf("%s: side %zu, %.3f s", r.name.c_str(), r.side, r.timings.total);
  if (r.metrics) std::printf(", acc %.4f ri %.4f dice %.4f", r.metrics->acc, r.metrics->ri, r.metrics->dice);
  std::printf("\n");
}

int run_main(int argc, char** argv) {
  CLI::App app{"Spectral image segmentation over quad-tree superpixels"};
  app.set_version_flag("--version", "segment 1.0");
  Flags f;
  app.add_option("--algorithm", f.algorithm, "ncut, fsc or mfsc")->check(CLI::IsMember({"ncut", "fsc", "mfsc"}));
  app.add_option("--image", f.image, "Input image (PGM or PNG)");
  app.add_option("--folder", f.folder, "Folder of images for a batch run");
  app.add_option("--gt", f.gt, "Ground-truth mask (single image) or mask folder (batch)");
  app.add_option("--config", f.config, "JSON config; flags override its fields");
  app.add_option("--out-dir", f.out_dir, "Output directory");
  app.add_option("--k", f.k, "Number of segments");
  app.add_option("--t", f.t, "Quad-tree variance threshold, 0-255 intensity units");
  app.add_option("--r", f.r, "Pixel graph radius (Ncut)");
  app.add_option("--R", f.R, "Superpixel connection radius");
  app.add_option("--sigma-x", f.sigma_x, "Spatial scale");
  app.add_option("--sigma-i", f.sigma_i, "Intensity scale, 0-255 units");
  app.add_option("--sigma-c", f.sigma_c, "Contour scale");
  app.add_option("--alpha", f.alpha, "Weight of the contour-only term");
  app.add_option("--l-init", f.l_init, "MFSC start level (1 is the root)");
  app.add_option("--k-int", f.k_int, "MFSC components kept at interior merges");
  app.add_option("--mode", f.mode, "Superpixel affinity: exact or approx")->check(CLI::IsMember({"exact", "approx"}));
  app.add_option("--merge", f.merge, "MFSC merge rule: ritz or projected")->check(CLI::IsMember({"ritz", "projected"}));
  app.add_option("--lift", f.lift, "Pixel lift: membership or indicator")->check(CLI::IsMember({"membership", "indicator"}));
  app.add_option("--size", f.size, "Working side (power of two); default next power of two");
  app.add_flag("--pad", f.pad, "Pad to a power of two instead of rescaling");
  app.add_option("--seed", f.seed, "Random seed (falls back to FASTSPEC_SEED, then 42)");
  app.add_option("--jobs", f.jobs, "Concurrent batch items");
  app.add_flag("--dump-tree", f.dump_tree, "Write the quad-tree as JSON");
  app.add_flag("--dump-matrices", f.dump_matrices, "Write W and L in MatrixMarket format");
  app.add_flag("--dump-levels", f.dump_levels, "Write MFSC per-merge records as JSON");
  app.add_flag("--cluster-superpixels", f.cluster_superpixels, "Cluster superpixel rows, then broadcast");
  app.add_flag("--literal-dice", f.literal_dice, "Dice without the factor 2");

  auto* scaling = app.add_subcommand("scaling", "Time MFSC and Ncut on synthetics and fit exponents");
  fastspec::app::ScalingOptions sopts;
  std::string scaling_csv;
  scaling->add_option("--sides", sopts.sides, "MFSC image sides")->delimiter(',');
  scaling->add_option("--ncut-sides", sopts.ncut_sides, "Ncut image sides")->delimiter(',');
  scaling->add_option("--reps", sopts.reps, "Repetitions per size (minimum is kept)");
  scaling->add_option("--seed", sopts.seed, "Synthetic noise seed");
  scaling->add_option("--csv", scaling_csv, "Also write the raw table here");

  auto* synth = app.add_subcommand("synth", "Write piecewise-constant synthetics with masks");
  std::string kind = "two", synth_dir = "synthetic";
  fastspec::SyntheticSpec spec;
  std::size_t count = 1;
  synth->add_option("--kind", kind, "two, four or rect")->check(CLI::IsMember({"two", "four", "rect"}));
  synth->add_option("--side", spec.side, "Image side");
  synth->add_option("--noise", spec.noise_sigma, "Gaussian noise sigma");
  synth->add_option("--split", spec.split, "Boundary position as a fraction of the side");
  synth->add_option("--seed", spec.seed, "Noise seed of the first image");
  synth->add_option("--count", count, "Number of images");
  synth->add_option("--out-dir", synth_dir, "Writes <dir>/images and <dir>/gt");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (scaling->parsed()) {
    const auto rep = fastspec::app::scaling_report(sopts);
    std::ostringstream table;
    table << "algorithm,side,pixels,seconds\n";
    for (const auto& row : rep.rows) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "%s,%zu,%zu,%.6f\n", row.algorithm.c_str(), row.side,
                    row.side * row.side, row.seconds);
      table << buf;
    }
    std::cout << table.str();
    std::printf("exponent vs pixel count: mfsc %.3f, ncut %.3f\n", rep.mfsc_exponent, rep.ncut_exponent);
    if (!scaling_csv.empty()) std::ofstream(scaling_csv) << table.str();
    return 0;
  }
  if (synth->parsed()) {
    spec.kind = kind == "two"    ? fastspec::SyntheticKind::two_region
                : kind == "four" ? fastspec::SyntheticKind::four_region
                                 : fastspec::SyntheticKind::rectangle;
    const std::uint64_t first = spec.seed;
    for (std::size_t i = 0; i < count; ++i) {
      spec.seed = first + i;
      char name[64];
      std::snprintf(name, sizeof name, "%s_%03zu", kind.c_str(), i);
      fastspec::app::write_synthetic(fastspec::make_synthetic(spec), synth_dir, name);
    }
    std::printf("wrote %zu image(s) to %s\n", count, synth_dir.c_str());
    return 0;
  }

  json file;
  if (!f.config.empty()) file = fastspec::app::load_config_file(f.config);
  json overrides = overrides_from(app, f);
  const bool seed_given = app.count("--seed") > 0 || (file.is_object() && file.contains("seed"));
  if (!seed_given) {
    if (const char* env = std::getenv("FASTSPEC_SEED")) {
      try {
        overrides["seed"] = std::stoull(env);
      } catch (const std::exception&) {
        throw fastspec::ConfigError("FASTSPEC_SEED", "not an unsigned integer");
      }
    }
  }

  const bool has_image = app.count("--image") > 0 || (file.is_object() && file.value("image", "") != "");
  const bool has_folder = app.count("--folder") > 0 || (file.is_object() && file.value("folder", "") != "");
  if (has_image == has_folder) {
    std::cerr << "usage error: give exactly one of --image or --folder\n" << app.help();
    return 2;
  }
  if (has_image) {
    print_metrics(fastspec::app::run_single(file, overrides));
  } else {
    const auto results = fastspec::app::run_batch(file, overrides);
    for (const auto& r : results) print_metrics(r);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_main(argc, argv);
  } catch (const fastspec::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
