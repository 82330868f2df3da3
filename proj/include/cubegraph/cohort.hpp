#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cubegraph/model.hpp"
#include "cubegraph/pipeline.hpp"
#include "cubegraph/synth.hpp"

namespace cubegraph {

// One subject in a cohort manifest. File paths are relative to the manifest's
// directory. An empty graph_file means the graph is recovered from image_file.
struct ManifestRow {
  std::string subject_id;
  std::string image_file;
  std::string graph_file;
  std::string truth_file;
  int age_group = 0;
  int edu_group = 0;
  std::vector<double> npt;
  int label = 0;
  std::optional<double> severity;
};

// Columns: subject_id, image_file, graph_file, truth_file, age_group,
// edu_group, npt (or npt_<name> per domain), label, severity. Only
// subject_id, age_group, edu_group, label, at least one npt column and one of
// image_file / graph_file are required.
struct Manifest {
  std::vector<std::string> npt_columns{"npt"};
  std::vector<ManifestRow> rows;
  std::filesystem::path base_dir;
};

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& m, const std::filesystem::path& path);
std::string manifest_to_csv(const Manifest& m);

// Builds records: reads each graph file, or vectorizes the image when no graph
// file is given, then assembles node features.
std::vector<SubjectRecord> load_cohort(const Manifest& m, const PipelineConfig& cfg);

SubjectRecord make_record(const ManifestRow& row, SketchGraph graph, const FeatureOptions& opt);

// Renders and vectorizes a synthetic cohort in memory; same subjects and
// images as generate_cohort with the same config.
std::vector<SubjectRecord> synthesize_cohort(const CohortConfig& cohort, const PipelineConfig& cfg);

}  // namespace cubegraph
