#pragma once

// Scoring of region verdicts against ground truth, with insufficient as the
// positive class, and side-by-side comparison of method variants.

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "core_model.hpp"
#include "ingest_io.hpp"
#include "pipeline.hpp"

namespace ballast {

struct RegionKey {
  std::int64_t frame_id = 0;
  std::string region_id;
  auto operator<=>(const RegionKey&) const = default;
};

inline std::string to_string(const RegionKey& k) { return std::to_string(k.frame_id) + "/" + k.region_id; }

struct LabeledRegion {
  RegionKey key;
  Label label = Label::sufficient;
};

struct EvalReport {
  std::string method;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::size_t indeterminate = 0;     // predictions excluded from the counts
  std::size_t unpredicted_truth = 0; // truth entries with no prediction
  std::optional<double> precision, recall, f1;

  std::size_t predicted_sufficient() const { return fn + tn; }
};

inline std::optional<double> f1_from(std::optional<double> p, std::optional<double> r) {
  if (!p || !r || *p + *r <= 0.0) return std::nullopt;
  if (*p == *r) return *p;  // exact; the general form can round off by an ulp
  return 2.0 * *p * *r / (*p + *r);
}

inline void fill_metrics(EvalReport& e) {
  e.precision = e.tp + e.fp > 0 ? std::optional<double>(static_cast<double>(e.tp) / static_cast<double>(e.tp + e.fp)) : std::nullopt;
  e.recall = e.tp + e.fn > 0 ? std::optional<double>(static_cast<double>(e.tp) / static_cast<double>(e.tp + e.fn)) : std::nullopt;
  e.f1 = f1_from(e.precision, e.recall);
}

/// Confusion counts keyed by (frame_id, region_id). A prediction without a
/// truth entry is an error listing every offending key.
inline EvalReport score(const std::vector<LabeledRegion>& predictions, const std::vector<LabeledRegion>& truth,
                        std::string method = {}) {
  std::map<RegionKey, Label> t;
  for (const auto& r : truth) t[r.key] = r.label;
  EvalReport e;
  e.method = std::move(method);
  std::vector<std::string> missing;
  std::set<RegionKey> seen;
  for (const auto& p : predictions) {
    auto it = t.find(p.key);
    if (it == t.end()) {
      missing.push_back(to_string(p.key));
      continue;
    }
    seen.insert(p.key);
    if (p.label == Label::indeterminate) {
      ++e.indeterminate;
      continue;
    }
    const bool pred_pos = p.label == Label::insufficient;
    const bool true_pos = it->second == Label::insufficient;
    if (pred_pos && true_pos) ++e.tp;
    else if (pred_pos) ++e.fp;
    else if (true_pos) ++e.fn;
    else ++e.tn;
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    std::string msg = "no truth for";
    for (const auto& m : missing) msg += " " + m;
    throw Error(ErrorCode::missing_truth, msg);
  }
  e.unpredicted_truth = t.size() - seen.size();
  fill_metrics(e);
  return e;
}

inline std::vector<LabeledRegion> predictions_from(const std::vector<FrameResult>& results) {
  std::vector<LabeledRegion> out;
  for (const auto& r : results)
    for (const auto& v : r.regions) out.push_back({{r.frame_id, v.region_id}, v.label});
  return out;
}

inline std::vector<LabeledRegion> load_truth_labels(const fs::path& path) {
  const Json j = read_json(path);
  std::vector<LabeledRegion> out;
  try {
    for (const auto& r : j.at("regions"))
      out.push_back({{r.at("frame_id").get<std::int64_t>(), r.at("region_id").get<std::string>()},
                     label_from_string(r.at("label").get<std::string>())});
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::parse, path.string() + ": " + e.what());
  }
  if (out.empty()) throw Error(ErrorCode::missing_truth, path.string() + " holds no truth regions");
  return out;
}

/// Every frame_*.json in a results directory, in frame order.
inline std::vector<FrameResult> load_results_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::io, "results directory '" + dir.string() + "' not found");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.rfind("frame_", 0) == 0 && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<FrameResult> out;
  for (const auto& f : files) out.push_back(load_frame_result(f));
  std::sort(out.begin(), out.end(), [](const FrameResult& a, const FrameResult& b) { return a.frame_id < b.frame_id; });
  return out;
}

// ---------------------------------------------------------------------------
// Method variants

struct MethodSpec {
  std::string name;
  BoxMode box_mode = BoxMode::rbb;
  bool c1 = true, c2 = true, cy = false;

  PipelineConfig apply(PipelineConfig cfg) const {
    cfg.box_mode = box_mode;
    cfg.use_c1 = c1;
    cfg.use_c2 = c2;
    cfg.use_cy = cy;
    return cfg;
  }
};

/// Names in the style CD-YOLO-SAM2-RBB-C1-C2-CY; the vote-only variant is YOLO-Only.
inline std::string method_name(BoxMode mode, bool c1, bool c2, bool cy) {
  if (!c1 && !c2) return cy ? "YOLO-Only" : "None";
  std::string n = std::string("CD-YOLO-SAM2-") + (mode == BoxMode::aabb ? "AABB" : "RBB");
  if (c1) n += "-C1";
  if (c2) n += "-C2";
  if (cy) n += "-CY";
  return n;
}

inline MethodSpec method_from_json(const Json& j) {
  MethodSpec m;
  try {
    m.box_mode = parse_box_mode(j.value("box_mode", std::string("rbb")));
    m.c1 = m.c2 = m.cy = false;
    for (const auto& c : j.at("criteria")) {
      const auto s = c.get<std::string>();
      if (s == "c1") m.c1 = true;
      else if (s == "c2") m.c2 = true;
      else if (s == "cy") m.cy = true;
      else throw Error(ErrorCode::invalid_config, "unknown criterion '" + s + "'");
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::invalid_config, std::string("method entry: ") + e.what());
  }
  m.name = j.value("name", method_name(m.box_mode, m.c1, m.c2, m.cy));
  return m;
}

inline std::vector<MethodSpec> load_methods(const fs::path& path) {
  const Json j = read_json(path);
  const Json& arr = j.is_object() ? j.at("methods") : j;
  std::vector<MethodSpec> out;
  for (const auto& m : arr) out.push_back(method_from_json(m));
  return out;
}

struct MethodRun {
  MethodSpec method;
  std::vector<FrameResult> results;
  EvalReport report;
};

/// Runs every method over the same frames and scores each one.
inline std::vector<MethodRun> compare_methods(const std::vector<InputFrame>& frames, const PipelineConfig& base,
                                              const std::vector<MethodSpec>& methods,
                                              const std::vector<LabeledRegion>& truth) {
  std::vector<MethodRun> runs;
  for (const auto& m : methods) {
    BallastPipeline pipe(m.apply(base));
    MethodRun run;
    run.method = m;
    for (const auto& f : frames) run.results.push_back(pipe.process(f.frame_id, f.raw, f.detections).result);
    run.report = score(predictions_from(run.results), truth, m.name);
    runs.push_back(std::move(run));
  }
  return runs;
}

/// OR-rule monotonicity: for two methods with the same box mode where one
/// enables a superset of the other's criteria, the superset must not lose
/// recall and must not predict more regions sufficient. Returns one message
/// per violation.
inline std::vector<std::string> or_rule_violations(const std::vector<MethodRun>& runs) {
  std::vector<std::string> out;
  auto subset = [](const MethodSpec& a, const MethodSpec& b) {
    return a.box_mode == b.box_mode && (!a.c1 || b.c1) && (!a.c2 || b.c2) && (!a.cy || b.cy);
  };
  for (const auto& a : runs) {
    for (const auto& b : runs) {
      if (&a == &b || !subset(a.method, b.method)) continue;
      const double ra = a.report.recall.value_or(0.0), rb = b.report.recall.value_or(0.0);
      if (rb < ra) out.push_back(b.method.name + " recall " + std::to_string(rb) + " < " + a.method.name + " " + std::to_string(ra));
      if (b.report.predicted_sufficient() > a.report.predicted_sufficient())
        out.push_back(b.method.name + " predicts more sufficient regions than " + a.method.name);
    }
  }
  return out;
}

inline std::vector<MethodRun> compare_methods(const FrameManifest& manifest, const PipelineConfig& base,
                                              const std::vector<MethodSpec>& methods,
                                              const std::vector<LabeledRegion>& truth) {
  std::vector<InputFrame> frames;
  for (const auto& rec : manifest.frames) frames.push_back(load_input_frame(rec, manifest.base_dir));
  return compare_methods(frames, base, methods, truth);
}

inline Json report_json(const EvalReport& e) {
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  return Json{{"method", e.method},
              {"tp", e.tp},
              {"fp", e.fp},
              {"fn", e.fn},
              {"tn", e.tn},
              {"indeterminate", e.indeterminate},
              {"unpredicted_truth", e.unpredicted_truth},
              {"precision", opt(e.precision)},
              {"recall", opt(e.recall)},
              {"f1", opt(e.f1)}};
}

/// Aligned plain-text comparison table; undefined metrics print as "-".
inline std::string report_table(const std::vector<EvalReport>& rows) {
  std::size_t w = std::string("Method").size();
  for (const auto& r : rows) w = std::max(w, r.method.size());
  auto num = [](const std::optional<double>& v) {
    if (!v) return std::string("     -");
    char b[32];
    std::snprintf(b, sizeof b, "%6.4f", *v);
    return std::string(b);
  };
  std::ostringstream os;
  auto pad = [&](const std::string& s) { return s + std::string(w - s.size(), ' '); };
  os << pad("Method") << "  Precision  Recall     F1   TP   FP   FN   TN  Indet\n";
  os << std::string(w + 52, '-') << "\n";
  for (const auto& r : rows) {
    char counts[64];
    std::snprintf(counts, sizeof counts, " %4zu %4zu %4zu %4zu  %5zu", r.tp, r.fp, r.fn, r.tn, r.indeterminate);
    os << pad(r.method) << "     " << num(r.precision) << "  " << num(r.recall) << " " << num(r.f1) << counts << "\n";
  }
  return os.str();
}

}  // namespace ballast
