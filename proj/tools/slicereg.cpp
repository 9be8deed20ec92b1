// slicereg command-line driver.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "slicereg/slicereg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace slicereg;

namespace {

constexpr int kExitBadArgs = 2;
constexpr int kExitIo = 3;
constexpr int kExitPipeline = 4;

// ---------------------------------------------------------------- config layers

struct Common {
  std::string config_path;
  std::string out_dir = ".";
  int jobs = 1;
  std::map<std::string, std::string> flags;   // field name -> raw flag text
  std::map<std::string, CLI::Option*> flag_opts;
};

json flag_value(const std::string& name, const std::string& raw) {
  json out;
  const auto bad = [&] { fail(ErrorCode::InvalidArgument, "bad value for --" + name + ": '" + raw + "'"); };
  PipelineConfig probe;
  PipelineConfig::visit(probe, [&](const char* field, const auto& v) {
    if (name != field) return;
    using T = std::decay_t<decltype(v)>;
    try {
      std::size_t used = 0;
      if constexpr (std::is_same_v<T, std::string>) {
        out = raw;
      } else if constexpr (std::is_same_v<T, bool>) {
        if (raw == "true" || raw == "1") out = true;
        else if (raw == "false" || raw == "0") out = false;
        else bad();
      } else if constexpr (std::is_same_v<T, std::uint64_t>) {
        if (raw.empty() || raw[0] == '-') bad();
        out = static_cast<std::uint64_t>(std::stoull(raw, &used));
        if (used != raw.size()) bad();
      } else if constexpr (std::is_integral_v<T>) {
        out = std::stoll(raw, &used);
        if (used != raw.size()) bad();
      } else if constexpr (std::is_floating_point_v<T>) {
        out = std::stod(raw, &used);
        if (used != raw.size()) bad();
      } else {  // comma-separated list of numbers
        out = json::array();
        std::stringstream ss(raw);
        for (std::string item; std::getline(ss, item, ',');) {
          out.push_back(std::stod(item, &used));
          if (used != item.size()) bad();
        }
      }
    } catch (const std::logic_error&) {
      bad();
    }
  });
  return out;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open config " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, path + ": " + e.what());
  }
}

/// defaults(profile) < $SLICEREG_CONFIG < --config < flags. The profile comes
/// from the highest layer that names one.
PipelineConfig resolve_config(const Common& c, const std::string& default_profile) {
  std::vector<json> layers;
  if (const char* env = std::getenv("SLICEREG_CONFIG"); env && *env) layers.push_back(read_json_file(env));
  if (!c.config_path.empty()) layers.push_back(read_json_file(c.config_path));
  json flags = json::object();
  for (const auto& [name, raw] : c.flags)
    if (c.flag_opts.at(name)->count()) flags[name] = flag_value(name, raw);
  layers.push_back(flags);

  std::string profile = default_profile;
  for (const auto& l : layers)
    if (l.is_object() && l.contains("profile") && l["profile"].is_string()) profile = l["profile"];
  PipelineConfig cfg = default_config(profile);
  for (const auto& l : layers) apply_json(cfg, l);
  validate(cfg);
  return cfg;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "JSON config file")->check(CLI::ExistingFile);
  sub->add_option("--out", c.out_dir, "output directory")->capture_default_str();
  sub->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  PipelineConfig probe;
  PipelineConfig::visit(probe, [&](const char* name, const auto&) { c.flags[name]; });
  for (auto& [name, raw] : c.flags) c.flag_opts[name] = sub->add_option("--" + name, raw)->group("Pipeline parameters");
}

fs::path prepare_out(const Common& c, const PipelineConfig& cfg) {
  fs::path dir(c.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  write_config((dir / "config.resolved.json").string(), cfg);
  return dir;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

// ---------------------------------------------------------------- image helpers

RasterImage to_rgb(const RasterImage& img) {
  if (img.channels == 3) return img;
  RasterImage out(img.width, img.height, 3);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int k = 0; k < 3; ++k) out.at(x, y, k) = img.at(x, y);
  return out;
}

void plot(RasterImage& img, Vec2 p, Rgb color) {
  const int x = static_cast<int>(std::lround(p.x)), y = static_cast<int>(std::lround(p.y));
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  for (int k = 0; k < 3; ++k) img.at(x, y, k) = color[k];
}

/// Region boundaries of `ai` drawn over `base`.
RasterImage contour_overlay(const RasterImage& base, const AnnotatedSliceImage& ai) {
  RasterImage out = to_rgb(base);
  for (int y = 0; y < ai.height && y < out.height; ++y)
    for (int x = 0; x < ai.width && x < out.width; ++x) {
      const int l = ai.at(x, y);
      const bool edge = (x + 1 < ai.width && ai.at(x + 1, y) != l) || (y + 1 < ai.height && ai.at(x, y + 1) != l);
      if (edge) plot(out, {double(x), double(y)}, {255, 0, 0});
    }
  return out;
}

/// Indexed or grayscale PNGs carry ids directly; RGB PNGs are decoded through
/// the region table colours (black is background).
AnnotatedSliceImage load_annotation(const std::string& path, const RegionTable& regions) {
  RasterImage probe = read_png(path);
  if (probe.channels == 1) return read_annotation_png(path, regions);
  bool indexed = false;
  {
    std::ifstream in(path, std::ios::binary);
    char hdr[26] = {};
    in.read(hdr, 26);
    indexed = in && hdr[25] == 3;
  }
  if (indexed) return read_annotation_png(path, regions);
  std::map<Rgb, int> by_color;
  for (const auto& [id, r] : regions) by_color[r.color] = id;
  AnnotatedSliceImage ai(probe.width, probe.height);
  ai.regions = regions;
  for (int y = 0; y < probe.height; ++y)
    for (int x = 0; x < probe.width; ++x) {
      const Rgb c{probe.at(x, y, 0), probe.at(x, y, 1), probe.at(x, y, 2)};
      if (c == Rgb{0, 0, 0} && !by_color.count(c)) continue;
      const auto it = by_color.find(c);
      if (it == by_color.end())
        fail(ErrorCode::InvalidArgument, path + ": colour (" + std::to_string(c[0]) + "," + std::to_string(c[1]) + "," +
                                             std::to_string(c[2]) + ") is not in the region table");
      ai.at(x, y) = it->second;
    }
  return ai;
}

RegionTable load_regions(const std::string& path) { return path.empty() ? RegionTable{} : read_region_table(path); }

// ---------------------------------------------------------------- subcommands

struct EdgesArgs {
  std::string mi;
};

int run_edges(const Common& c, const EdgesArgs& a) {
  const auto cfg = resolve_config(c, "paper");
  const auto dir = prepare_out(c, cfg);
  const auto mi = read_png(a.mi);
  const auto det = detect_edges(mi, edge_params(cfg));
  const double scale = std::max(1, cfg.downsample);
  RasterImage overlay = to_rgb(mi);
  for (auto p : det.edges.points) plot(overlay, scale * p, {255, 0, 0});
  const auto stem = stem_of(a.mi);
  write_png((dir / (stem + ".edges.png")).string(), overlay);
  write_json(dir / (stem + ".edges.json"), {{"input", a.mi},
                                            {"width", mi.width},
                                            {"height", mi.height},
                                            {"downsample", cfg.downsample},
                                            {"threshold", to_json(det.diagnostics)},
                                            {"count", det.edges.size()},
                                            {"points", to_json(det.edges)}});
  std::cout << det.edges.size() << " edge points, threshold " << det.diagnostics.threshold << '\n';
  return 0;
}

int run_damage(const Common& c, const EdgesArgs& a) {
  const auto cfg = resolve_config(c, "paper");
  const auto dir = prepare_out(c, cfg);
  const auto mi = read_png(a.mi);
  if (cfg.downsample > 1) fail(ErrorCode::InvalidArgument, "damage runs at full resolution; set downsample to 1");
  const auto det = detect_edges(mi, edge_params(cfg));
  const auto rep = detect_damage(det.edges, mi.width, mi.height, damage_params(cfg));
  RasterImage overlay = to_rgb(mi);
  for (auto p : det.edges.points) plot(overlay, p, {0, 200, 0});
  for (auto p : rep.contour) plot(overlay, p, {0, 90, 255});
  for (auto p : rep.damaged_points) plot(overlay, p, {255, 0, 0});
  const auto stem = stem_of(a.mi);
  write_png((dir / (stem + ".damage.png")).string(), overlay);
  json j = to_json(rep);
  j["input"] = a.mi;
  j["edge_points"] = det.edges.size();
  write_json(dir / (stem + ".damage.json"), j);
  std::cout << rep.damaged_indices.size() << " of " << det.edges.size() << " edge points flagged as damage\n";
  return 0;
}

struct RegisterArgs {
  std::string mi, ai, regions, landmarks;
};

int run_register(const Common& c, const RegisterArgs& a) {
  const auto cfg = resolve_config(c, "paper");
  const auto dir = prepare_out(c, cfg);
  const auto mi = read_png(a.mi);
  const auto ai = load_annotation(a.ai, load_regions(a.regions));
  const auto r = register_slice(mi, ai, registration_params(cfg));
  write_png((dir / "warped.png").string(), r.warped);
  write_field((dir / "field.bin").string(), r.field);
  write_png((dir / "overlay.png").string(), contour_overlay(r.warped, ai));
  json report = {{"mi", a.mi}, {"ai", a.ai}, {"result", to_json(r)}};
  if (!a.landmarks.empty()) {
    const auto lm = read_landmarks_csv(a.landmarks);
    report["landmarks"] = to_json(landmark_errors(lm, [&](Vec2 q) { return r.to_atlas(q); }));
    std::cout << "landmark rmse " << report["landmarks"]["rmse"].get<double>() << '\n';
  }
  write_json(dir / "report.json", report);
  std::cout << "registered " << a.mi << " -> " << a.ai << '\n';
  return 0;
}

struct SliceArgs {
  std::string mesh, regions;
};

int run_slice(const Common& c, const SliceArgs& a) {
  const auto cfg = resolve_config(c, "paper");
  const auto dir = prepare_out(c, cfg);
  const auto mesh = read_obj(a.mesh, load_regions(a.regions));
  for (const auto& [id, r] : mesh.regions)
    if (id > 255) fail(ErrorCode::InvalidArgument, "region id " + std::to_string(id) + " exceeds 255");
  const auto spec = series_spec(cfg);
  const auto planes = series_planes(mesh, spec);
  const auto images = slice_series(mesh, spec, c.jobs);
  const auto stem = stem_of(a.mesh);
  json slices = json::array();
  char name[64];
  for (std::size_t i = 0; i < images.size(); ++i) {
    std::snprintf(name, sizeof name, ".slice%04zu.png", i);
    write_annotation_png((dir / (stem + name)).string(), images[i]);
    std::map<int, long> area;
    for (int l : images[i].labels)
      if (l) ++area[l];
    json px = json::object();
    for (const auto& [id, n] : area) px[std::to_string(id)] = n;
    slices.push_back({{"index", i},
                      {"file", stem + name},
                      {"offset", spec.start + static_cast<double>(i) * spec.interval},
                      {"plane", to_json(planes[i])},
                      {"region_pixels", px}});
  }
  write_json(dir / (stem + ".manifest.json"),
             {{"mesh", a.mesh}, {"regions", region_table_to_json(mesh.regions)}, {"slices", slices}});
  std::cout << images.size() << " slices written\n";
  return 0;
}

struct CountArgs {
  std::string mi, labels, ai, regions;
};

int run_count(const Common& c, const CountArgs& a) {
  const auto cfg = resolve_config(c, "paper");
  const auto dir = prepare_out(c, cfg);
  const auto mi = read_png(a.mi);
  const auto regions = load_regions(a.regions);
  const auto stem = stem_of(a.mi);
  AnnotatedSliceImage labels;
  json j;
  if (!a.labels.empty()) {
    labels = load_annotation(a.labels, regions);
  } else {
    const auto ai = load_annotation(a.ai, regions);
    const auto r = register_slice(mi, ai, registration_params(cfg));
    labels = transfer_annotations(ai, r, mi.width, mi.height);
    write_annotation_png((dir / (stem + ".labels.png")).string(), labels);
    j["affine"] = to_json(r.affine);
  }
  const auto rep = count_neurons(mi, labels, neuron_params(cfg));
  j["input"] = a.mi;
  j["report"] = to_json(rep, labels.regions);
  write_json(dir / (stem + ".count.json"), j);
  std::cout << rep.total() << " neurons in " << rep.counts.size() << " regions (" << rep.unassigned
            << " unassigned)\n";
  return 0;
}

struct SynthArgs {
  bool tear = false;
};

int run_synth(const Common& c, const SynthArgs& a) {
  const auto cfg = resolve_config(c, "phantom");
  const auto dir = prepare_out(c, cfg);
  auto ph = generate_phantom(phantom_config(cfg), cfg.seed);
  if (a.tear) ph = inject_tear(ph, tear_spec(cfg));
  write_png((dir / "mi.png").string(), ph.mi);
  write_annotation_png((dir / "ai.png").string(), ph.ai);
  write_region_table((dir / "regions.json").string(), ph.ai.regions);
  write_field((dir / "truth_field.bin").string(), ph.truth_field);
  write_landmarks_csv((dir / "landmarks.csv").string(), ph.landmarks);
  json manifest = {{"seed", cfg.seed},
                   {"width", ph.mi.width},
                   {"height", ph.mi.height},
                   {"truth_affine", to_json(ph.truth_affine)},
                   {"landmarks", ph.landmarks.size()},
                   {"files", {"mi.png", "ai.png", "regions.json", "truth_field.bin", "landmarks.csv"}}};
  if (ph.tear) {
    RasterImage mask(ph.mi.width, ph.mi.height, 1, 0);
    long area = 0;
    for (std::size_t i = 0; i < ph.tear_mask.size(); ++i) {
      mask.samples[i] = ph.tear_mask[i] ? 255 : 0;
      area += ph.tear_mask[i] != 0;
    }
    write_png((dir / "tear_mask.png").string(), mask);
    manifest["tear"] = {{"side", ph.tear->side}, {"depth", ph.tear->depth}, {"width", ph.tear->width}, {"area", area}};
    manifest["files"].push_back("tear_mask.png");
  }
  write_json(dir / "manifest.json", manifest);
  std::cout << "phantom seed " << cfg.seed << " written to " << dir.string() << '\n';
  return 0;
}

struct EvalArgs {
  std::string suite = "both";
};

int run_eval(const Common& c, const EvalArgs& a) {
  const auto cfg = resolve_config(c, "phantom");
  const auto dir = prepare_out(c, cfg);
  std::vector<std::string> suites;
  if (a.suite == "clean" || a.suite == "both") suites.push_back("clean");
  if (a.suite == "damaged" || a.suite == "both") suites.push_back("damaged");

  struct Row {
    std::string suite;
    std::uint64_t seed;
    std::optional<ErrorSummary> errors;
    std::string error;
  };
  std::vector<Row> rows;
  for (const auto& s : suites)
    for (int i = 0; i < cfg.phantom_count; ++i) rows.push_back({s, cfg.seed + static_cast<std::uint64_t>(i), {}, {}});

  const auto pc = phantom_config(cfg);
  const auto rp = registration_params(cfg);
  const auto ts = tear_spec(cfg);
  parallel_for(rows.size(), c.jobs, [&](std::size_t i) {
    auto& row = rows[i];
    try {
      auto ph = generate_phantom(pc, row.seed);
      if (row.suite == "damaged") ph = inject_tear(ph, ts);
      const auto r = register_slice(ph.mi, ph.ai, rp);
      row.errors = landmark_errors(ph.landmarks, [&](Vec2 q) { return r.to_atlas(q); });
    } catch (const Error& e) {
      row.error = e.what();
    }
  });

  json out = {{"rows", json::array()}, {"averages", json::object()}};
  std::printf("%-8s %6s %9s %9s %9s\n", "suite", "seed", "rmse", "mee", "mae");
  for (const auto& r : rows) {
    json j = {{"suite", r.suite}, {"seed", r.seed}};
    if (r.errors) {
      j.update(to_json(*r.errors));
      std::printf("%-8s %6llu %9.3f %9.3f %9.3f\n", r.suite.c_str(), static_cast<unsigned long long>(r.seed),
                  r.errors->rmse, r.errors->mee, r.errors->mae);
    } else {
      j["error"] = r.error;
      std::printf("%-8s %6llu  failed: %s\n", r.suite.c_str(), static_cast<unsigned long long>(r.seed), r.error.c_str());
    }
    out["rows"].push_back(j);
  }
  for (const auto& s : suites) {
    ErrorSummary avg;
    int n = 0, failed = 0;
    for (const auto& r : rows) {
      if (r.suite != s) continue;
      if (!r.errors) {
        ++failed;
        continue;
      }
      avg.rmse += r.errors->rmse;
      avg.mee += r.errors->mee;
      avg.mae += r.errors->mae;
      ++n;
    }
    if (n) avg = {avg.rmse / n, avg.mee / n, avg.mae / n};
    json j = to_json(avg);
    j["slices"] = n;
    j["failed"] = failed;
    out["averages"][s] = j;
    std::printf("%-8s %6s %9.3f %9.3f %9.3f\n", s.c_str(), "avg", avg.rmse, avg.mee, avg.mae);
  }
  write_json(dir / "eval.json", out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Slice-to-atlas registration"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "expand help for every subcommand");

  std::map<std::string, Common> common;
  auto sub = [&](const std::string& name, const std::string& desc) {
    auto* s = app.add_subcommand(name, desc);
    add_common(s, common[name]);
    return s;
  };

  EdgesArgs edges_a, damage_a;
  auto* edges = sub("edges", "dominant edges of a microscope image");
  edges->add_option("--mi", edges_a.mi, "microscope PNG")->required()->check(CLI::ExistingFile);
  auto* damage = sub("damage", "detect torn or missing tissue");
  damage->add_option("--mi", damage_a.mi, "microscope PNG")->required()->check(CLI::ExistingFile);

  RegisterArgs reg_a;
  auto* reg = sub("register", "register a microscope image to an atlas slice");
  reg->add_option("--mi", reg_a.mi, "microscope PNG")->required()->check(CLI::ExistingFile);
  reg->add_option("--ai", reg_a.ai, "atlas annotation PNG")->required()->check(CLI::ExistingFile);
  reg->add_option("--regions", reg_a.regions, "region table JSON")->check(CLI::ExistingFile);
  reg->add_option("--landmarks", reg_a.landmarks, "landmark CSV (xa,ya,xb,yb) to score")->check(CLI::ExistingFile);

  SliceArgs slice_a;
  auto* slice = sub("slice", "cut a labeled mesh into annotated slices");
  slice->add_option("--mesh", slice_a.mesh, "OBJ mesh, one group per region")->required()->check(CLI::ExistingFile);
  slice->add_option("--regions", slice_a.regions, "region table JSON")->check(CLI::ExistingFile);

  CountArgs count_a;
  auto* count = sub("count", "count neurons per region");
  count->add_option("--mi", count_a.mi, "RGB microscope PNG")->required()->check(CLI::ExistingFile);
  auto* labels_opt = count->add_option("--labels", count_a.labels, "labels aligned with the image")->check(CLI::ExistingFile);
  auto* ai_opt = count->add_option("--ai", count_a.ai, "atlas annotation to register and transfer")->check(CLI::ExistingFile);
  labels_opt->excludes(ai_opt);
  count->add_option("--regions", count_a.regions, "region table JSON")->check(CLI::ExistingFile);

  SynthArgs synth_a;
  auto* synth = sub("synth", "write a synthetic phantom pair");
  synth->add_flag("--tear", synth_a.tear, "carve a one-sided tear");

  EvalArgs eval_a;
  auto* eval = sub("eval", "landmark errors over a phantom batch");
  eval->add_option("--suite", eval_a.suite, "clean, damaged or both")
      ->check(CLI::IsMember({"clean", "damaged", "both"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
    if (count->parsed() && count_a.labels.empty() && count_a.ai.empty())
      throw CLI::RequiredError("count needs --labels or --ai");
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "slicereg: " << e.what() << "\n\n";
    const CLI::App* failed = &app;
    for (auto* s : app.get_subcommands()) failed = s;
    std::cerr << failed->help();
    return kExitBadArgs;
  }

  try {
    if (edges->parsed()) return run_edges(common["edges"], edges_a);
    if (damage->parsed()) return run_damage(common["damage"], damage_a);
    if (reg->parsed()) return run_register(common["register"], reg_a);
    if (slice->parsed()) return run_slice(common["slice"], slice_a);
    if (count->parsed()) return run_count(common["count"], count_a);
    if (synth->parsed()) return run_synth(common["synth"], synth_a);
    if (eval->parsed()) return run_eval(common["eval"], eval_a);
  } catch (const Error& e) {
    std::cerr << "slicereg: " << e.what() << '\n';
    if (e.code() == ErrorCode::InvalidArgument && e.stage().empty()) return kExitBadArgs;
    if (e.code() == ErrorCode::Io) return kExitIo;
    return kExitPipeline;
  } catch (const std::exception& e) {
    std::cerr << "slicereg: " << e.what() << '\n';
    return kExitPipeline;
  }
  return kExitBadArgs;
}
