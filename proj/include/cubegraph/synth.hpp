#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cubegraph/graph.hpp"
#include "cubegraph/raster.hpp"

namespace cubegraph {

struct DistortionParams {
  double jitter_px = 0.0;       // std of corner displacement
  double drop_edge_prob = 0.0;  // each edge omitted independently
  double break_prob = 0.0;      // each corner's strokes stop short of it
  double gap_px = 16.0;         // retraction of stroke ends at a broken corner
  double angle_skew_deg = 0.0;  // std of per-edge rotation about its first endpoint
  std::uint64_t seed = 0;

  void validate() const;
};

// Monotone summary in [0, 1]:
// (min(jitter/10, 1) + drop + break + min(skew/10, 1)) / 4.
double severity(const DistortionParams& p);

// box_in_box: front square with a smaller back square drawn inside it, offset
// up and right, corners joined by four connectors (the 3-cube, no crossings).
// opaque: front square plus the visible top and right faces (7 corners, 9 edges).
enum class CubeTemplate { BoxInBox, Opaque };

CubeTemplate parse_template(std::string_view name);
std::string_view template_name(CubeTemplate t);

struct RenderOptions {
  int canvas = 256;
  CubeTemplate shape = CubeTemplate::BoxInBox;
  double noise_std = 2.0;  // Gaussian pixel noise, intensity units

  void validate() const;
};

// Template corners in canvas coordinates and its edges, before distortion.
SketchGraph template_graph(CubeTemplate shape, int canvas);

struct GroundTruth {
  SketchGraph graph;  // drawn topology: jittered corners, dropped edges removed, broken corners split
  double severity = 0.0;
};

struct Rendering {
  RasterImage image;
  GroundTruth truth;
};

Rendering render_cube(const DistortionParams& params, const RenderOptions& options = {});

// Per-subject distortion as a linear function of latent impairment s in [0, 1]:
// jitter = jitter_base + jitter * s, and the other magnitudes scale with s.
struct DistortionProfile {
  double jitter_base = 1.0;
  double jitter = 4.0;
  double drop = 0.1;
  double brk = 0.7;
  double skew = 2.0;

  // "mixed" (the defaults) or "break": corner breaks dominate, with base
  // jitter only and no drops or skew.
  static DistortionProfile named(std::string_view name);
};

struct CohortConfig {
  int n = 200;
  double ad_fraction = 0.25;
  std::uint64_t seed = 0;
  int npt_dim = 1;  // 1 = total score, 5 = per-domain scores
  double gap_px = 16.0;
  DistortionProfile profile;
  RenderOptions render;

  void validate() const;
};

struct CohortSubject {
  std::string subject_id;
  int label = 0;
  int age_group = 0;
  int edu_group = 0;
  std::vector<double> npt;
  DistortionParams distortion;
  double severity = 0.0;
};

// Demographics, scores and distortion parameters of every subject. Pure
// function of the config; exactly round(n * ad_fraction) subjects are AD.
std::vector<CohortSubject> sample_cohort(const CohortConfig& cfg);

// Writes images/<id>.png, truth/<id>.json and manifest.csv under `dir`.
std::vector<CohortSubject> generate_cohort(const CohortConfig& cfg, const std::filesystem::path& dir);

}  // namespace cubegraph
