#include "cubegraph/synth.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "cubegraph/cohort.hpp"
#include "cubegraph/error.hpp"
#include "cubegraph/random.hpp"

namespace cubegraph {

void DistortionParams::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string("synth: ") + name + " must be in [0, 1]");
  };
  prob(drop_edge_prob, "drop_edge_prob");
  prob(break_prob, "break_prob");
  if (!(jitter_px >= 0.0) || !(gap_px >= 0.0) || !(angle_skew_deg >= 0.0)) {
    throw ConfigError("synth: distortion magnitudes must be non-negative");
  }
}

double severity(const DistortionParams& p) {
  return (std::min(p.jitter_px / 10.0, 1.0) + p.drop_edge_prob + p.break_prob + std::min(p.angle_skew_deg / 10.0, 1.0)) /
         4.0;
}

CubeTemplate parse_template(std::string_view name) {
  if (name == "box_in_box") return CubeTemplate::BoxInBox;
  if (name == "opaque") return CubeTemplate::Opaque;
  throw ConfigError("unknown cube template '" + std::string(name) + "' (expected box_in_box or opaque)");
}

std::string_view template_name(CubeTemplate t) { return t == CubeTemplate::BoxInBox ? "box_in_box" : "opaque"; }

void RenderOptions::validate() const {
  if (canvas < 128) throw ConfigError("synth: canvas must be at least 128 px, got " + std::to_string(canvas));
  if (!(noise_std >= 0.0)) throw ConfigError("synth: noise_std must be non-negative");
}

namespace {

struct Shape {
  std::vector<Point> corners;
  std::vector<Edge> edges;
};

Shape make_shape(CubeTemplate t, int canvas) {
  const double c = canvas;
  Shape s;
  if (t == CubeTemplate::BoxInBox) {
    const double half = 0.25 * c;           // outer square half side
    const double inner = 0.5 * half;        // inner square half side
    const double shift = 0.047 * c;         // inner square offset up and right
    const Point o{0.5 * c, 0.5 * c};
    const Point i{o.x + shift, o.y - shift};
    s.corners = {{o.x - half, o.y - half}, {o.x + half, o.y - half}, {o.x + half, o.y + half}, {o.x - half, o.y + half},
                 {i.x - inner, i.y - inner}, {i.x + inner, i.y - inner}, {i.x + inner, i.y + inner},
                 {i.x - inner, i.y + inner}};
    s.edges = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6}, {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};
  } else {
    const double side = 0.42 * c;
    const double depth = 0.3 * side;
    const Point tl{0.5 * c - 0.5 * (side + depth), 0.5 * c - 0.5 * (side - depth)};
    s.corners = {tl,
                 {tl.x + side, tl.y},
                 {tl.x + side, tl.y + side},
                 {tl.x, tl.y + side},
                 {tl.x + depth, tl.y - depth},
                 {tl.x + side + depth, tl.y - depth},
                 {tl.x + side + depth, tl.y + side - depth}};
    s.edges = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 4}, {1, 5}, {4, 5}, {5, 6}, {2, 6}};
  }
  return s;
}

struct Segment {
  Point a, b;
};

std::string number(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

SketchGraph template_graph(CubeTemplate shape, int canvas) {
  const Shape s = make_shape(shape, canvas);
  return canonicalize(SketchGraph{s.corners, s.edges});
}

Rendering render_cube(const DistortionParams& params, const RenderOptions& options) {
  params.validate();
  options.validate();
  Rng rng(mix_seed(params.seed, 0x7e4d));
  Shape shape = make_shape(options.shape, options.canvas);
  const std::size_t nc = shape.corners.size();

  for (auto& p : shape.corners) {
    p.x += rng.normal(0.0, 1.0) * params.jitter_px;
    p.y += rng.normal(0.0, 1.0) * params.jitter_px;
  }
  std::vector<bool> dropped, broken;
  for (std::size_t e = 0; e < shape.edges.size(); ++e) dropped.push_back(rng.bernoulli(params.drop_edge_prob));
  for (std::size_t v = 0; v < nc; ++v) broken.push_back(rng.bernoulli(params.break_prob));
  std::vector<double> skew;
  for (std::size_t e = 0; e < shape.edges.size(); ++e) {
    skew.push_back(rng.normal(0.0, 1.0) * params.angle_skew_deg * std::numbers::pi / 180.0);
  }
  const double stroke = rng.uniform(2.0, 3.0);
  const double ink = rng.uniform(30.0, 60.0);
  const double paper = rng.uniform(230.0, 245.0);
  const double light_dir = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double light_amp = rng.uniform(0.0, 10.0);

  // Ground truth: intact corners keep one node; broken corners get one node
  // per incident drawn stroke, at the retracted stroke end.
  SketchGraph truth;
  truth.nodes = shape.corners;
  std::vector<Segment> segments;
  for (std::size_t e = 0; e < shape.edges.size(); ++e) {
    if (dropped[e]) continue;
    const auto [u, v] = shape.edges[e];
    Point a = shape.corners[static_cast<std::size_t>(u)];
    Point b = shape.corners[static_cast<std::size_t>(v)];
    const double c = std::cos(skew[e]), s = std::sin(skew[e]);
    const Point d = b - a;
    b = a + Point{c * d.x - s * d.y, s * d.x + c * d.y};
    const double len = distance(a, b);
    const Point dir = len > 0 ? (1.0 / len) * (b - a) : Point{0, 0};
    const double retract = std::min(params.gap_px, 0.35 * len);
    int na = u, nb = v;
    if (broken[static_cast<std::size_t>(u)]) {
      a = a + retract * dir;
      na = static_cast<int>(truth.nodes.size());
      truth.nodes.push_back(a);
    }
    if (broken[static_cast<std::size_t>(v)]) {
      b = b - retract * dir;
      nb = static_cast<int>(truth.nodes.size());
      truth.nodes.push_back(b);
    }
    truth.edges.emplace_back(na, nb);
    segments.push_back({a, b});
  }

  const int w = options.canvas;
  RasterImage img(w, w);
  std::vector<double> coverage(static_cast<std::size_t>(w) * static_cast<std::size_t>(w), 0.0);
  const double reach = 0.5 * stroke + 1.0;
  for (const auto& seg : segments) {
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(seg.a.x, seg.b.x) - reach)));
    const int x1 = std::min(w - 1, static_cast<int>(std::ceil(std::max(seg.a.x, seg.b.x) + reach)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(seg.a.y, seg.b.y) - reach)));
    const int y1 = std::min(w - 1, static_cast<int>(std::ceil(std::max(seg.a.y, seg.b.y) + reach)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double dist = segment_distance(Point{static_cast<double>(x), static_cast<double>(y)}, seg.a, seg.b);
        const double cov = std::clamp(0.5 * stroke + 0.5 - dist, 0.0, 1.0);
        double& slot = coverage[img.index(x, y)];
        slot = std::max(slot, cov);
      }
    }
  }
  const double lx = std::cos(light_dir), ly = std::sin(light_dir);
  for (int y = 0; y < w; ++y) {
    for (int x = 0; x < w; ++x) {
      const double background = paper + light_amp * ((x * lx + y * ly) / w - 0.5);
      const double cov = coverage[img.index(x, y)];
      double v = background * (1.0 - cov) + ink * cov;
      if (options.noise_std > 0.0) v += rng.normal(0.0, options.noise_std);
      img.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return {std::move(img), GroundTruth{canonicalize(truth), severity(params)}};
}

DistortionProfile DistortionProfile::named(std::string_view name) {
  if (name == "mixed") return {};
  if (name == "break") return {.jitter_base = 1.0, .jitter = 0.0, .drop = 0.0, .brk = 0.9, .skew = 0.0};
  throw ConfigError("synth: unknown distortion profile '" + std::string(name) + "' (mixed or break)");
}

void CohortConfig::validate() const {
  if (!(ad_fraction > 0.0 && ad_fraction < 1.0)) throw ConfigError("synth: ad_fraction must be in (0, 1)");
  if (n < 10) throw ConfigError("synth: cohort size must be at least 10");
  if (npt_dim != 1 && npt_dim != 5) throw ConfigError("synth: npt_dim must be 1 or 5");
  if (!(gap_px >= 0.0)) throw ConfigError("synth: gap_px must be non-negative");
  for (double v : {profile.jitter_base, profile.jitter, profile.drop, profile.brk, profile.skew}) {
    if (!(v >= 0.0)) throw ConfigError("synth: distortion profile coefficients must be non-negative");
  }
  if (profile.drop > 1.0 || profile.brk > 1.0) throw ConfigError("synth: profile probabilities must be at most 1");
  render.validate();
}

namespace {

// Relative frequencies per age band (45-49 ... 85-90) and education band
// (illiterate, 0-2, 3-5, 6-9, 10-12, 13-15, 16+) for each diagnostic group.
constexpr std::array<double, kAgeGroups> kAgeWeightsCn = {0, 2, 9, 15, 21, 17, 25, 7, 0};
constexpr std::array<double, kAgeGroups> kAgeWeightsAd = {0, 2, 1, 0, 2, 3, 11, 9, 0};
constexpr std::array<double, kEduGroups> kEduWeightsCn = {7, 22, 13, 24, 0, 20, 10};
constexpr std::array<double, kEduGroups> kEduWeightsAd = {5, 9, 4, 5, 0, 2, 3};

constexpr const char* kNptColumns[] = {"npt_memory", "npt_attention", "npt_language", "npt_visuospatial",
                                       "npt_executive"};

}  // namespace

std::vector<CohortSubject> sample_cohort(const CohortConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(cfg.n);
  const auto n_ad = static_cast<std::size_t>(std::llround(cfg.n * cfg.ad_fraction));
  std::vector<int> labels(n, 0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_ad), 1);
  Rng order(mix_seed(cfg.seed, 1));
  order.shuffle(std::span<int>(labels));

  std::vector<CohortSubject> out;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(mix_seed(cfg.seed, 1000 + i));
    CohortSubject s;
    char id[16];
    std::snprintf(id, sizeof id, "S%04zu", i + 1);
    s.subject_id = id;
    s.label = labels[i];
    const bool ad = s.label == 1;
    // Latent impairment: CN concentrated near zero, AD spread over the upper
    // range, overlapping around 0.25-0.55.
    const double u = rng.uniform();
    const double latent = ad ? 0.25 + 0.75 * u : 0.55 * u * u;
    const DistortionProfile& pr = cfg.profile;
    s.distortion.jitter_px = pr.jitter_base + pr.jitter * latent;
    s.distortion.drop_edge_prob = pr.drop * latent;
    s.distortion.break_prob = pr.brk * latent;
    s.distortion.gap_px = cfg.gap_px;
    s.distortion.angle_skew_deg = pr.skew * latent;
    s.distortion.seed = mix_seed(cfg.seed, 5000 + i);
    s.severity = severity(s.distortion);
    s.age_group = static_cast<int>(rng.categorical(ad ? kAgeWeightsAd : kAgeWeightsCn));
    s.edu_group = static_cast<int>(rng.categorical(ad ? kEduWeightsAd : kEduWeightsCn));
    const double total = std::clamp(ad ? rng.normal(0.48, 0.14) : rng.normal(0.72, 0.12), 0.0, 1.0);
    if (cfg.npt_dim == 1) {
      s.npt = {total};
    } else {
      for (int d = 0; d < cfg.npt_dim; ++d) s.npt.push_back(std::clamp(total + rng.normal(0.0, 0.08), 0.0, 1.0));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<CohortSubject> generate_cohort(const CohortConfig& cfg, const std::filesystem::path& dir) {
  auto subjects = sample_cohort(cfg);
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "truth");
  Manifest m;
  m.npt_columns = cfg.npt_dim == 1 ? std::vector<std::string>{"npt"}
                                   : std::vector<std::string>(std::begin(kNptColumns), std::end(kNptColumns));
  for (const auto& s : subjects) {
    const Rendering r = render_cube(s.distortion, cfg.render);
    const std::string image = "images/" + s.subject_id + ".png";
    const std::string truth = "truth/" + s.subject_id + ".json";
    write_png(r.image, dir / image);
    GraphMeta meta;
    meta.source = "synth";
    meta.params = {{"template", std::string(template_name(cfg.render.shape))},
                   {"jitter_px", number(s.distortion.jitter_px)},
                   {"drop_edge_prob", number(s.distortion.drop_edge_prob)},
                   {"break_prob", number(s.distortion.break_prob)},
                   {"gap_px", number(s.distortion.gap_px)},
                   {"angle_skew_deg", number(s.distortion.angle_skew_deg)},
                   {"seed", std::to_string(s.distortion.seed)}};
    write_graph(r.truth.graph, meta, dir / truth);
    ManifestRow row;
    row.subject_id = s.subject_id;
    row.image_file = image;
    row.truth_file = truth;
    row.age_group = s.age_group;
    row.edu_group = s.edu_group;
    row.npt = s.npt;
    row.label = s.label;
    row.severity = s.severity;
    m.rows.push_back(std::move(row));
  }
  write_manifest(m, dir / "manifest.csv");
  return subjects;
}

}  // namespace cubegraph
