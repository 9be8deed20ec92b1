#pragma once

// Flat, single-file configuration for every stage of the pipeline.

#include <cstdint>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "slicereg/analysis/neurons.hpp"
#include "slicereg/analysis/phantom.hpp"
#include "slicereg/analysis/phantom_profile.hpp"
#include "slicereg/damage.hpp"
#include "slicereg/edges.hpp"
#include "slicereg/error.hpp"
#include "slicereg/reg/register.hpp"
#include "slicereg/slicer/slicer.hpp"

namespace slicereg {

struct PipelineConfig {
  // "paper" uses the published constants; "phantom" scales the filters to 512 px phantoms.
  std::string profile = "paper";

  // dominant edges
  int w_m = 20;
  int w_g = 12;
  double sigma_g = 2;
  double s = 12;
  std::string bin_rule = "count";
  int channel = 1;
  int downsample = 1;
  double atlas_normal_radius = 6;
  double mei_normal_radius = 4;

  // damage
  int alpha = 20;
  double symmetry_angle = 20;
  double symmetry_neighborhood = 3;
  std::string symmetry_axis = "major";
  double candidate_radius = 2;
  double damage_fraction = 0.5;
  int close_iterations = 2;
  std::string sliver_rule = "exterior";
  bool remove_damage = true;

  // affine registration
  std::vector<double> icp_angles{10, 8, 6, 4};
  std::vector<double> icp_distances{1.0 / 10, 1.0 / 20, 1.0 / 40, 1.0 / 80};
  int icp_max_iterations = 10;
  double icp_min_improvement = 0.1;
  double consistency_radius = 15;

  // final correspondences and warp
  double final_distance = 1.0 / 40;
  double final_angle = 1;
  double final_spacing = 3;
  int grid_factor = 8;
  double laplace_tolerance = 1e-8;
  int laplace_max_iterations = 10000;

  // neuron counting
  int neuron_threshold = 255;
  int min_cluster = 5;

  // virtual slicing
  std::vector<double> slice_direction{0, 0, 1};
  double slice_interval = 25;
  double slice_start = 0;
  int slice_count = 1;
  double pixel_pitch = 1;
  int slice_width = 0;
  int slice_height = 0;

  // phantoms (synth, eval)
  std::uint64_t seed = 1;
  int phantom_count = 10;
  int phantom_size = 512;
  double warp_amplitude = 15;
  double warp_wavelength = 512;
  double noise_sigma = 3;
  double rotation_deg = 5;
  double scale_jitter = 0.05;
  double translation = 10;
  double tear_depth = 80;
  double tear_width = 20;
  int tear_side = -1;

  /// Visits every field as (name, reference); the order is the file order.
  template <class Self, class F>
  static void visit(Self& c, F&& f) {
    f("profile", c.profile);
    f("w_m", c.w_m);
    f("w_g", c.w_g);
    f("sigma_g", c.sigma_g);
    f("s", c.s);
    f("bin_rule", c.bin_rule);
    f("channel", c.channel);
    f("downsample", c.downsample);
    f("atlas_normal_radius", c.atlas_normal_radius);
    f("mei_normal_radius", c.mei_normal_radius);
    f("alpha", c.alpha);
    f("symmetry_angle", c.symmetry_angle);
    f("symmetry_neighborhood", c.symmetry_neighborhood);
    f("symmetry_axis", c.symmetry_axis);
    f("candidate_radius", c.candidate_radius);
    f("damage_fraction", c.damage_fraction);
    f("close_iterations", c.close_iterations);
    f("sliver_rule", c.sliver_rule);
    f("remove_damage", c.remove_damage);
    f("icp_angles", c.icp_angles);
    f("icp_distances", c.icp_distances);
    f("icp_max_iterations", c.icp_max_iterations);
    f("icp_min_improvement", c.icp_min_improvement);
    f("consistency_radius", c.consistency_radius);
    f("final_distance", c.final_distance);
    f("final_angle", c.final_angle);
    f("final_spacing", c.final_spacing);
    f("grid_factor", c.grid_factor);
    f("laplace_tolerance", c.laplace_tolerance);
    f("laplace_max_iterations", c.laplace_max_iterations);
    f("neuron_threshold", c.neuron_threshold);
    f("min_cluster", c.min_cluster);
    f("slice_direction", c.slice_direction);
    f("slice_interval", c.slice_interval);
    f("slice_start", c.slice_start);
    f("slice_count", c.slice_count);
    f("pixel_pitch", c.pixel_pitch);
    f("slice_width", c.slice_width);
    f("slice_height", c.slice_height);
    f("seed", c.seed);
    f("phantom_count", c.phantom_count);
    f("phantom_size", c.phantom_size);
    f("warp_amplitude", c.warp_amplitude);
    f("warp_wavelength", c.warp_wavelength);
    f("noise_sigma", c.noise_sigma);
    f("rotation_deg", c.rotation_deg);
    f("scale_jitter", c.scale_jitter);
    f("translation", c.translation);
    f("tear_depth", c.tear_depth);
    f("tear_width", c.tear_width);
    f("tear_side", c.tear_side);
  }

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// Defaults of a profile.
inline PipelineConfig default_config(const std::string& profile = "paper") {
  PipelineConfig c;
  c.profile = profile;
  if (profile == "phantom") {
    const auto e = phantom_edge_params();
    c.w_m = e.median_window;
    c.w_g = e.gaussian_window;
    c.sigma_g = e.gaussian_sigma;
    c.bin_rule = "width";
    c.close_iterations = phantom_damage_params().close_iterations;
  } else if (profile != "paper") {
    fail(ErrorCode::InvalidArgument, "unknown profile '" + profile + "' (expected paper or phantom)");
  }
  return c;
}

inline nlohmann::json to_json(const PipelineConfig& c) {
  nlohmann::json j = nlohmann::json::object();
  PipelineConfig::visit(c, [&](const char* name, const auto& v) { j[name] = v; });
  return j;
}

/// Overlays the keys of `j` onto `c`. Unknown keys and wrong types are errors.
inline void apply_json(PipelineConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::InvalidArgument, "configuration must be a JSON object");
  std::size_t known = 0;
  PipelineConfig::visit(c, [&](const char* name, auto& v) {
    auto it = j.find(name);
    if (it == j.end()) return;
    ++known;
    try {
      using T = std::decay_t<decltype(v)>;
      if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!it->is_number_integer()) throw std::invalid_argument("expected an integer");
      }
      v = it->template get<std::decay_t<decltype(v)>>();
    } catch (const std::exception& e) {
      fail(ErrorCode::InvalidArgument, std::string("config key '") + name + "': " + e.what());
    }
  });
  if (known != j.size())
    for (const auto& [key, val] : j.items()) {
      bool found = false;
      PipelineConfig::visit(c, [&](const char* name, const auto&) { found = found || key == name; });
      if (!found) fail(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
    }
}

/// Checks ranges and schedule shapes.
inline void validate(const PipelineConfig& c) {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::InvalidArgument, "invalid config: " + what);
  };
  need(c.profile == "paper" || c.profile == "phantom", "profile must be paper or phantom");
  need(c.w_m >= 1 && c.w_g >= 1 && c.sigma_g > 0 && c.s >= 1, "filter windows, sigma and s must be positive");
  need(c.bin_rule == "count" || c.bin_rule == "width", "bin_rule must be count or width");
  need(c.channel >= 0 && c.channel <= 2, "channel must be 0, 1 or 2");
  need(c.downsample >= 1, "downsample must be >= 1");
  need(c.atlas_normal_radius >= 0 && c.mei_normal_radius >= 0, "normal radii must be >= 0");
  need(c.alpha >= 1 && c.symmetry_angle > 0 && c.symmetry_neighborhood > 0 && c.candidate_radius > 0,
       "damage parameters must be positive");
  need(c.damage_fraction > 0 && c.damage_fraction < 1, "damage_fraction must be in (0, 1)");
  need(c.close_iterations >= 0, "close_iterations must be >= 0");
  need(c.symmetry_axis == "major" || c.symmetry_axis == "minor", "symmetry_axis must be major or minor");
  need(c.sliver_rule == "exterior" || c.sliver_rule == "triangle", "sliver_rule must be exterior or triangle");
  need(!c.icp_angles.empty() && c.icp_angles.size() == c.icp_distances.size(),
       "icp_angles and icp_distances need the same, nonzero length");
  for (std::size_t i = 0; i < c.icp_angles.size(); ++i) {
    need(c.icp_angles[i] > 0 && c.icp_distances[i] > 0, "ICP schedule entries must be positive");
    if (i > 0)
      need(c.icp_angles[i] < c.icp_angles[i - 1] && c.icp_distances[i] < c.icp_distances[i - 1],
           "ICP schedules must be strictly decreasing");
  }
  need(c.icp_max_iterations >= 1 && c.icp_min_improvement > 0 && c.consistency_radius > 0,
       "ICP iteration settings must be positive");
  need(c.final_distance > 0 && c.final_angle > 0 && c.final_spacing > 0, "final match settings must be positive");
  need(c.grid_factor >= 1 && c.laplace_tolerance > 0 && c.laplace_max_iterations >= 1,
       "warp settings must be positive");
  need(c.neuron_threshold >= 1 && c.neuron_threshold <= 255 && c.min_cluster >= 1,
       "neuron_threshold must be in [1, 255] and min_cluster >= 1");
  need(c.slice_direction.size() == 3, "slice_direction needs three components");
  need(c.slice_interval > 0 && c.slice_count >= 1 && c.pixel_pitch > 0 && c.slice_width >= 0 && c.slice_height >= 0,
       "slicing settings must be positive");
  need(c.phantom_count >= 1 && c.phantom_size >= 64 && c.warp_wavelength > 0 && c.warp_amplitude >= 0 &&
           c.noise_sigma >= 0 && c.rotation_deg >= 0 && c.scale_jitter >= 0 && c.translation >= 0,
       "phantom settings out of range");
  need(c.tear_depth >= 0 && c.tear_width >= 0 && (c.tear_side == -1 || c.tear_side == 1),
       "tear depth/width must be >= 0 and tear_side -1 or 1");
}

inline PipelineConfig read_config(const std::string& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, path + ": " + e.what());
  }
  apply_json(base, j);
  return base;
}

inline void write_config(const std::string& path, const PipelineConfig& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  out << to_json(c).dump(2) << '\n';
}

// ---------------------------------------------------------------- stage parameters

inline EdgeParams edge_params(const PipelineConfig& c) {
  EdgeParams p;
  p.median_window = c.w_m;
  p.gaussian_window = c.w_g;
  p.gaussian_sigma = c.sigma_g;
  p.stability = c.s;
  p.bin_rule = c.bin_rule == "width" ? BinRule::Width : BinRule::Count;
  p.channel = c.channel;
  p.downsample = c.downsample;
  return p;
}

inline DamageParams damage_params(const PipelineConfig& c) {
  DamageParams p;
  p.alpha = static_cast<std::size_t>(c.alpha);
  p.angle_deg = c.symmetry_angle;
  p.neighborhood = c.symmetry_neighborhood;
  p.symmetry_axis = c.symmetry_axis == "minor" ? 1 : 0;
  p.candidate_radius = c.candidate_radius;
  p.damage_fraction = c.damage_fraction;
  p.close_iterations = c.close_iterations;
  p.sliver_rule = c.sliver_rule == "triangle" ? SliverRule::Triangle : SliverRule::ExteriorRegion;
  return p;
}

inline RegistrationParams registration_params(const PipelineConfig& c) {
  RegistrationParams p;
  p.edges = edge_params(c);
  p.atlas_normal_radius = c.atlas_normal_radius;
  p.mei_normal_radius = c.mei_normal_radius;
  p.damage = damage_params(c);
  p.remove_damage = c.remove_damage;
  p.icp.schedule.clear();
  for (std::size_t i = 0; i < c.icp_angles.size(); ++i) p.icp.schedule.push_back({c.icp_angles[i], c.icp_distances[i]});
  p.icp.max_iterations = c.icp_max_iterations;
  p.icp.min_improvement = c.icp_min_improvement;
  p.icp.consistency_radius = c.consistency_radius;
  p.final_match.dist_fraction = c.final_distance;
  p.final_match.angle_deg = c.final_angle;
  p.final_match.min_spacing = c.final_spacing;
  p.final_match.consistency_radius = c.consistency_radius;
  p.grid_factor = c.grid_factor;
  p.laplace.tolerance = c.laplace_tolerance;
  p.laplace.max_iterations = c.laplace_max_iterations;
  return p;
}

inline NeuronParams neuron_params(const PipelineConfig& c) { return {c.neuron_threshold, c.min_cluster}; }

inline SeriesSpec series_spec(const PipelineConfig& c) {
  SeriesSpec s;
  s.direction = {c.slice_direction[0], c.slice_direction[1], c.slice_direction[2]};
  s.interval = c.slice_interval;
  s.start = c.slice_start;
  s.count = c.slice_count;
  s.pixel_pitch = c.pixel_pitch;
  s.width = c.slice_width;
  s.height = c.slice_height;
  return s;
}

inline PhantomConfig phantom_config(const PipelineConfig& c) {
  PhantomConfig p;
  p.width = p.height = c.phantom_size;
  const double k = c.phantom_size / 512.0;
  p.tissue_rx *= k;
  p.tissue_ry *= k;
  p.notch_depth *= k;
  p.notch_width *= k;
  p.notch_offset_y *= k;
  p.warp_amplitude = c.warp_amplitude;
  p.warp_wavelength = c.warp_wavelength;
  p.noise_sigma = c.noise_sigma;
  p.rotation_deg = c.rotation_deg;
  p.scale_jitter = c.scale_jitter;
  p.translation = c.translation;
  return p;
}

inline TearSpec tear_spec(const PipelineConfig& c) {
  TearSpec t;
  t.side = c.tear_side;
  t.depth = c.tear_depth;
  t.width = c.tear_width;
  return t;
}

}  // namespace slicereg
