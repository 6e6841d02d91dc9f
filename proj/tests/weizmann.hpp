#pragma once

// Optional dataset check. Expected layout under the root:
//   single128/{images,gt}  single256/{images,gt}
//   single512/{images,gt}  two256/{images,gt}
// Masks share the image file stem; see docs/weizmann.md.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include "app.hpp"

struct WeizmannOutcome {
  bool pass = false;
  std::string detail;
};

inline WeizmannOutcome weizmann_check(const std::filesystem::path& root) {
  struct Set {
    const char* name;
    std::size_t side;
    double expected_acc;
    nlohmann::json extra;
  };
  const Set sets[] = {
      {"single128", 128, 0.85, nlohmann::json::object()},
      {"single256", 256, 0.83, nlohmann::json::object()},
      {"single512", 512, 0.81, nlohmann::json::object()},
      {"two256", 256, 0.90, {{"k", 3}, {"R", 60.0}, {"t", 8.0}}},
  };
  WeizmannOutcome out{true, ""};
  std::size_t checked = 0;
  for (const auto& set : sets) {
    const auto dir = root / set.name;
    if (!std::filesystem::is_directory(dir / "images")) continue;
    nlohmann::json o = set.extra;
    o["algorithm"] = "mfsc";
    o["folder"] = (dir / "images").string();
    o["gt"] = (dir / "gt").string();
    o["size"] = set.side;
    o["out_dir"] = (std::filesystem::temp_directory_path() / "fastspec_weizmann" / set.name).string();
    const auto results = fastspec::app::run_batch(nullptr, o);
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : results) {
      if (r.metrics) {
        sum += r.metrics->acc;
        ++n;
      }
    }
    const double mean = n ? sum / static_cast<double>(n) : 0.0;
    const bool ok = n > 0 && std::abs(mean - set.expected_acc) <= 0.05;
    out.pass = out.pass && ok;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s mean ACC %.3f (target %.2f +/- 0.05, %zu images); ", set.name,
                  mean, set.expected_acc, n);
    out.detail += buf;
    ++checked;
  }
  if (out.detail.size() >= 2) out.detail.resize(out.detail.size() - 2);
  if (checked == 0) {
    out.pass = false;
    out.detail = "no dataset folders found under " + root.string();
  }
  return out;
}
