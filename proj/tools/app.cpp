#include "app.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "fastspec/errors.hpp"
#include "fastspec/fsc.hpp"
#include "fastspec/mfsc.hpp"
#include "fastspec/ncut.hpp"

namespace fastspec::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kScale = 255.0;

// Keys whose default depends on the working side.
constexpr const char* kSizeKeys[] = {"R", "t", "sigma_c", "r"};

std::size_t next_pow2(std::size_t v) {
  std::size_t p = 1;
  while (p < v) p <<= 1;
  return p;
}

const json& field(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(key, "missing");
  return j.at(key);
}

double number(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number()) throw ConfigError(key, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(key, "must be finite");
  return d;
}

double positive(const json& j, const char* key) {
  const double d = number(j, key);
  if (!(d > 0.0)) throw ConfigError(key, "must be > 0");
  return d;
}

std::uint64_t unsigned_int(const json& j, const char* key, std::uint64_t min = 0) {
  const json& v = field(j, key);
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    throw ConfigError(key, "expected a non-negative integer");
  const auto u = v.get<std::uint64_t>();
  if (u < min) throw ConfigError(key, "must be >= " + std::to_string(min));
  return u;
}

bool boolean(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_boolean()) throw ConfigError(key, "expected true or false");
  return v.get<bool>();
}

std::string text(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_string()) throw ConfigError(key, "expected a string");
  return v.get<std::string>();
}

template <typename E>
E choice(const json& j, const char* key, std::initializer_list<std::pair<const char*, E>> options) {
  const std::string s = text(j, key);
  std::string allowed;
  for (const auto& [name, value] : options) {
    if (s == name) return value;
    allowed += allowed.empty() ? name : std::string("|") + name;
  }
  throw ConfigError(key, "'" + s + "' is not one of " + allowed);
}

void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".part";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_labels_atomic(const LabelMap& labels, const fs::path& path, LabelFormat format) {
  const fs::path tmp = path.parent_path() / (path.stem().string() + ".part" + path.extension().string());
  write_labels(labels, tmp, format);
  fs::rename(tmp, path);
}

json timing_json(const StageTimings& t) {
  return json{{"decompose", t.decompose}, {"affinity", t.affinity}, {"eigen", t.eigen},
              {"merge", t.merge},         {"fcm", t.fcm},           {"total", t.total}};
}

json tree_json(const QuadTree& tree, std::size_t index) {
  const QuadNode& n = tree.nodes[index];
  json j{{"level", n.level}, {"x0", n.x0},         {"y0", n.y0},
         {"side", n.side},   {"mean", n.mean},     {"variance", n.variance}};
  if (n.is_leaf()) {
    j["superpixel"] = n.superpixel_id;
  } else {
    j["children"] = json::array();
    for (auto c : n.children) j["children"].push_back(tree_json(tree, static_cast<std::size_t>(c)));
  }
  return j;
}

json levels_json(const std::vector<LevelRecord>& levels) {
  json out = json::array();
  for (const auto& r : levels) {
    out.push_back({{"level", r.level},
                   {"x0", r.x0},
                   {"y0", r.y0},
                   {"side", r.side},
                   {"superpixels", r.superpixels},
                   {"columns_in", r.columns_in},
                   {"k_out", r.k_out},
                   {"retained", r.retained},
                   {"eigenvalues", r.eigenvalues}});
  }
  return out;
}

struct Prepared {
  GrayImage image;
  std::optional<GroundTruth> truth;  // on the grid the metrics use
};

json merged_json(const json& file, const json& overrides) {
  json merged = default_config();
  if (!file.is_null()) {
    if (!file.is_object()) throw ConfigError("$", "config must be a JSON object");
    merged.merge_patch(file);
  }
  if (!overrides.is_null()) merged.merge_patch(overrides);
  for (const auto& [key, value] : merged.items()) {
    if (!default_config().contains(key) &&
        std::find(std::begin(kSizeKeys), std::end(kSizeKeys), key) == std::end(kSizeKeys))
      throw ConfigError(key, "unknown field");
  }
  return merged;
}

Prepared prepare(const AppConfig& cfg, const GrayImage& raw, const fs::path& gt_path) {
  Prepared p;
  const std::size_t side = cfg.size;
  if (cfg.pad) {
    p.image = pad_to_pow2(raw);
  } else if (raw.width == side && raw.height == side) {
    p.image = raw;
  } else {
    p.image = resize_bilinear(raw, side);
  }
  if (gt_path.empty()) return p;
  GroundTruth gt = load_ground_truth(gt_path);
  if (gt.width != raw.width || gt.height != raw.height) {
    throw ArgumentError("mask " + gt_path.string() + " is " + std::to_string(gt.width) + "x" +
                        std::to_string(gt.height) + " but the image is " +
                        std::to_string(raw.width) + "x" + std::to_string(raw.height));
  }
  if (!cfg.pad && (gt.width != side || gt.height != side)) gt = resize_nearest(gt, side);
  p.truth = std::move(gt);
  return p;
}

Segmentation segment(const AppConfig& cfg, const GrayImage& img) {
  switch (cfg.algorithm) {
    case Algorithm::ncut:
      return ncut(img, cfg.seg);
    case Algorithm::fsc:
      return fsc(img, cfg.seg);
    case Algorithm::mfsc:
      return mfsc(img, cfg.seg);
  }
  return {};
}

void dump_matrices(const AppConfig& cfg, const GrayImage& img, const fs::path& stem) {
  const EdgeMap edges = edge_map(img);
  SparseSymMatrix w;
  if (cfg.algorithm == Algorithm::ncut) {
    w = pixel_W(img, edges, cfg.seg.affinity, cfg.seg.ncut_cap);
  } else {
    const QuadTree tree = decompose(img, cfg.seg.t, cfg.seg.min_block_side);
    w = superpixel_graph(img, edges, tree, cfg.seg);
  }
  w.write_matrix_market(stem.string() + "_W.mtx");
  degree_and_laplacian(w, cfg.seg.affinity.regularize_degree)
      .laplacian.write_matrix_market(stem.string() + "_L.mtx");
}

// Segments one prepared image and writes its artifacts under out_dir.
ItemResult process(const AppConfig& cfg, const GrayImage& raw, const fs::path& gt_path,
                   const std::string& name) {
  Prepared p = prepare(cfg, raw, gt_path);
  AppConfig run = cfg;
  run.seg.record_levels = cfg.dump_levels;
  const Segmentation seg = segment(run, p.image);

  ItemResult item;
  item.name = name;
  item.side = p.image.width;
  item.timings = seg.timings;

  const LabelMap labels = seg.labels.cropped();
  const fs::path stem = cfg.out_dir / name;
  write_labels_atomic(labels, stem.string() + "_labels.png", LabelFormat::png_palette);
  write_labels_atomic(labels, stem.string() + "_labels.csv", LabelFormat::csv);
  write_atomic(stem.string() + "_timing.json", timing_json(seg.timings).dump(2) + "\n");
  if (p.truth) {
    item.metrics = evaluate(labels, *p.truth, cfg.literal_dice);
    write_atomic(stem.string() + "_metrics.json",
                 json{{"acc", item.metrics->acc}, {"ri", item.metrics->ri}, {"dice", item.metrics->dice}}
                         .dump(2) + "\n");
  }
  if (cfg.dump_tree && cfg.algorithm != Algorithm::ncut) {
    const QuadTree tree = decompose(p.image, cfg.seg.t, cfg.seg.min_block_side);
    write_atomic(stem.string() + "_tree.json", tree_json(tree, 0).dump(1) + "\n");
  }
  if (cfg.dump_levels && cfg.algorithm == Algorithm::mfsc)
    write_atomic(stem.string() + "_levels.json", levels_json(seg.levels).dump(1) + "\n");
  if (cfg.dump_matrices) dump_matrices(cfg, p.image, stem);
  return item;
}

// Side used to validate a config before any image is read.
std::size_t provisional_side(const json& merged) {
  const auto size = unsigned_int(merged, "size");
  return size && !boolean(merged, "pad") ? size : 128;
}

std::vector<fs::path> image_files(const fs::path& folder) {
  if (!fs::is_directory(folder)) throw ArgumentError("not a folder: " + folder.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(folder)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png" || ext == ".pgm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  return files;
}

fs::path matching_mask(const fs::path& gt_folder, const fs::path& image) {
  for (const char* ext : {".png", ".pgm", ".PNG", ".PGM"}) {
    const fs::path candidate = gt_folder / (image.stem().string() + ext);
    if (fs::is_regular_file(candidate)) return candidate;
  }
  return {};
}

std::string csv_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::ncut:
      return "ncut";
    case Algorithm::fsc:
      return "fsc";
    case Algorithm::mfsc:
      return "mfsc";
  }
  return "?";
}

SizeDefaults size_defaults(std::size_t side) {
  if (side <= 128) return {40.0, 10.0, 0.2, 20.0};
  if (side <= 256) return {50.0, 12.0, 0.1, 15.0};
  return {80.0, 15.0, 0.09, 10.0};
}

json default_config() {
  return json{{"algorithm", "mfsc"},
              {"image", ""},
              {"folder", ""},
              {"gt", ""},
              {"out_dir", "."},
              {"size", 0},
              {"pad", false},
              {"k", 2},
              {"sigma_x", 4.0},
              {"sigma_i", 8.0},
              {"alpha", 0.45},
              {"l_init", 3},
              {"k_int", 4},
              {"mode", "approx"},
              {"merge", "ritz"},
              {"lift", "membership"},
              {"clusterer", "fcm"},
              {"fuzzifier", 2.0},
              {"min_block_side", 2},
              {"self_loops", true},
              {"regularize_degree", false},
              {"row_normalize", false},
              {"cluster_superpixels", false},
              {"literal_dice", false},
              {"seed", 42},
              {"jobs", 1},
              {"pixel_cap", kDefaultPixelCap},
              {"ncut_cap", 128 * 128},
              {"dump_tree", false},
              {"dump_matrices", false},
              {"dump_levels", false}};
}

json load_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("$", "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("$", e.what());
  }
}

std::size_t working_side(const json& merged, std::size_t width, std::size_t height) {
  const auto size = unsigned_int(merged, "size");
  if (boolean(merged, "pad")) return next_pow2(std::max(width, height));
  return size ? size : next_pow2(std::max(width, height));
}

AppConfig resolve_config(const json& file, const json& overrides, std::size_t side) {
  json j = merged_json(file, overrides);
  const SizeDefaults sd = size_defaults(side);
  if (!j.contains("R")) j["R"] = sd.R;
  if (!j.contains("t")) j["t"] = sd.t;
  if (!j.contains("sigma_c")) j["sigma_c"] = sd.sigma_c;
  if (!j.contains("r")) j["r"] = sd.r;

  AppConfig c;
  c.algorithm = choice<Algorithm>(j, "algorithm",
                                  {{"ncut", Algorithm::ncut}, {"fsc", Algorithm::fsc}, {"mfsc", Algorithm::mfsc}});
  c.image = text(j, "image");
  c.folder = text(j, "folder");
  c.gt = text(j, "gt");
  c.out_dir = text(j, "out_dir");
  c.pad = boolean(j, "pad");
  c.size = side;
  if (!c.pad && (side < 2 || next_pow2(side) != side)) throw ConfigError("size", "must be a power of two >= 2");
  c.jobs = unsigned_int(j, "jobs", 1);
  c.dump_tree = boolean(j, "dump_tree");
  c.dump_matrices = boolean(j, "dump_matrices");
  c.dump_levels = boolean(j, "dump_levels");
  c.literal_dice = boolean(j, "literal_dice");

  SegmentOptions& s = c.seg;
  s.k = unsigned_int(j, "k", 1);
  s.t = number(j, "t") / (kScale * kScale);
  if (s.t < 0.0) throw ConfigError("t", "must be >= 0");
  s.affinity.r = positive(j, "r");
  s.affinity.R = number(j, "R");
  if (s.affinity.R < 1.0) throw ConfigError("R", "must be >= 1");
  s.affinity.sigma_x = positive(j, "sigma_x");
  s.affinity.sigma_I = positive(j, "sigma_i") / kScale;
  s.affinity.sigma_C = positive(j, "sigma_c");
  s.affinity.alpha = number(j, "alpha");
  if (s.affinity.alpha < 0.0) throw ConfigError("alpha", "must be >= 0");
  s.affinity.self_loops = boolean(j, "self_loops");
  s.affinity.regularize_degree = boolean(j, "regularize_degree");
  const auto l_init = unsigned_int(j, "l_init", 1);
  if (l_init > 32) throw ConfigError("l_init", "must be <= 32");
  s.l_init = static_cast<int>(l_init);
  s.k_int = unsigned_int(j, "k_int", 1);
  s.mode = choice<WeightMode>(j, "mode", {{"exact", WeightMode::exact}, {"approx", WeightMode::approx}});
  s.merge = choice<MergeRule>(j, "merge", {{"ritz", MergeRule::ritz}, {"projected", MergeRule::projected}});
  s.lift = choice<LiftMode>(j, "lift", {{"membership", LiftMode::membership}, {"indicator", LiftMode::indicator}});
  s.spectral_clusterer = choice<Clusterer>(j, "clusterer", {{"fcm", Clusterer::fcm}, {"kmeans", Clusterer::kmeans}});
  s.fcm.fuzzifier = number(j, "fuzzifier");
  if (!(s.fcm.fuzzifier > 1.0)) throw ConfigError("fuzzifier", "must be > 1");
  s.min_block_side = unsigned_int(j, "min_block_side", 1);
  s.row_normalize = boolean(j, "row_normalize");
  s.cluster_superpixels = boolean(j, "cluster_superpixels");
  s.seed = unsigned_int(j, "seed");
  s.eigen.seed = s.seed;
  s.pixel_cap = unsigned_int(j, "pixel_cap", 1);
  s.ncut_cap = unsigned_int(j, "ncut_cap", 1);
  try {
    s.affinity.validate();
  } catch (const Error& e) {
    throw ConfigError("$", e.what());
  }
  c.resolved = std::move(j);
  return c;
}

Metrics evaluate(const LabelMap& labels, const GroundTruth& gt, bool literal_dice) {
  Metrics m;
  m.acc = acc(labels, gt);
  m.ri = rand_index(labels, gt);
  m.dice = gt.is_binary() ? dice(labels, gt, literal_dice) : mean_object_dice(labels, gt, literal_dice);
  return m;
}

ItemResult run_single(const json& file, const json& overrides) {
  const json merged = merged_json(file, overrides);
  const fs::path image = text(merged, "image");
  if (image.empty()) throw ArgumentError("no image given");
  resolve_config(file, overrides, provisional_side(merged));
  const GrayImage raw = load_gray(image);
  const AppConfig cfg = resolve_config(file, overrides, working_side(merged, raw.width, raw.height));
  fs::create_directories(cfg.out_dir);
  return process(cfg, raw, cfg.gt, image.stem().string());
}

std::vector<ItemResult> run_batch(const json& file, const json& overrides) {
  const json merged = merged_json(file, overrides);
  // validates everything that does not depend on the image
  const AppConfig base = resolve_config(file, overrides, provisional_side(merged));
  const fs::path folder = text(merged, "folder");
  if (folder.empty()) throw ArgumentError("no folder given");
  const std::vector<fs::path> files = image_files(folder);
  if (files.empty()) throw ArgumentError("no .png or .pgm images in " + folder.string());
  const fs::path gt_folder = text(merged, "gt");
  if (!gt_folder.empty() && !fs::is_directory(gt_folder))
    throw ArgumentError("mask folder not found: " + gt_folder.string());
  fs::create_directories(base.out_dir);

  std::vector<ItemResult> results(files.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < files.size(); i = next++) {
      ItemResult& r = results[i];
      r.name = files[i].stem().string();
      try {
        const GrayImage raw = load_gray(files[i]);
        const AppConfig cfg = resolve_config(file, overrides, working_side(merged, raw.width, raw.height));
        const fs::path mask = gt_folder.empty() ? fs::path{} : matching_mask(gt_folder, files[i]);
        r = process(cfg, raw, mask, r.name);
        if (!gt_folder.empty() && mask.empty())
          r.warning = "no mask named " + r.name + ".png/.pgm in " + gt_folder.string();
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        r.warning = e.what();
      }
      if (!r.warning.empty()) {
        std::lock_guard<std::mutex> lock(log_mutex);
        std::cerr << "warning: " << r.name << ": " << r.warning << "\n";
      }
    }
  };
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (std::size_t t = 0; t < std::min(base.jobs, files.size()); ++t) {
    pool.emplace_back([&] {
      try {
        worker();
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  const std::string algo = algorithm_name(base.algorithm);
  std::ostringstream timed, stable;
  timed << "image,algorithm,size,time_s,acc,dice,ri\n";
  stable << "image,algorithm,size,acc,dice,ri\n";
  double time_sum = 0.0;
  Metrics sum;
  std::size_t with_metrics = 0;
  std::set<std::size_t> sides;
  for (const auto& r : results) {
    const std::string size = r.side ? std::to_string(r.side) : "";
    std::string metrics = ",,";
    if (r.metrics) {
      metrics = csv_number(r.metrics->acc) + "," + csv_number(r.metrics->dice) + "," + csv_number(r.metrics->ri);
      sum.acc += r.metrics->acc;
      sum.dice += r.metrics->dice;
      sum.ri += r.metrics->ri;
      ++with_metrics;
    }
    if (r.side) sides.insert(r.side);
    time_sum += r.timings.total;
    timed << r.name << "," << algo << "," << size << "," << csv_number(r.timings.total) << "," << metrics << "\n";
    stable << r.name << "," << algo << "," << size << "," << metrics << "\n";
  }
  const std::string mean_size = sides.size() == 1 ? std::to_string(*sides.begin()) : "";
  std::string mean_metrics = ",,";
  if (with_metrics) {
    const double c = static_cast<double>(with_metrics);
    mean_metrics = csv_number(sum.acc / c) + "," + csv_number(sum.dice / c) + "," + csv_number(sum.ri / c);
  }
  timed << "mean," << algo << "," << mean_size << ","
        << csv_number(time_sum / static_cast<double>(results.size())) << "," << mean_metrics << "\n";
  stable << "mean," << algo << "," << mean_size << "," << mean_metrics << "\n";
  write_atomic(base.out_dir / "summary.csv", timed.str());
  write_atomic(base.out_dir / "summary_metrics.csv", stable.str());
  return results;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) return std::numeric_limits<double>::quiet_NaN();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double dn = static_cast<double>(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

ScalingReport scaling_report(const ScalingOptions& opts) {
  ScalingReport rep;
  auto time_runs = [&](std::size_t side, Algorithm algo) {
    SyntheticSpec spec;
    spec.side = side;
    spec.split = 0.4;
    spec.noise_sigma = opts.noise;
    spec.seed = opts.seed;
    const SyntheticImage s = make_synthetic(spec);
    SegmentOptions o;
    o.affinity.r = 3;
    o.affinity.R = 0.25 * static_cast<double>(side) + 24.0;
    o.affinity.sigma_C = 1.0;
    o.t = 0.001;
    o.seed = opts.seed;
    o.ncut_cap = std::max(o.ncut_cap, side * side);
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < std::max(opts.reps, 1); ++i) {
      const auto start = std::chrono::steady_clock::now();
      if (algo == Algorithm::mfsc)
        mfsc(s.image, o);
      else
        ncut(s.image, o);
      best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }
    rep.rows.push_back({algorithm_name(algo), side, best});
    return best;
  };
  std::vector<double> n, t;
  for (auto side : opts.sides) {
    n.push_back(static_cast<double>(side * side));
    t.push_back(time_runs(side, Algorithm::mfsc));
  }
  rep.mfsc_exponent = loglog_slope(n, t);
  n.clear();
  t.clear();
  for (auto side : opts.ncut_sides) {
    n.push_back(static_cast<double>(side * side));
    t.push_back(time_runs(side, Algorithm::ncut));
  }
  rep.ncut_exponent = loglog_slope(n, t);
  return rep;
}

void write_synthetic(const SyntheticImage& s, const fs::path& dir, const std::string& name) {
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "gt");
  write_pgm(s.image, dir / "images" / (name + ".pgm"));
  GrayImage mask(s.truth.width, s.truth.height);
  const double top = static_cast<double>(std::max(s.truth.classes - 1, 1));
  for (std::size_t i = 0; i < mask.size(); ++i) mask.data[i] = s.truth.labels[i] / top;
  write_pgm(mask, dir / "gt" / (name + ".pgm"));
}

}  // namespace fastspec::app
