#include "cubegraph/cohort.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "cubegraph/csv.hpp"
#include "cubegraph/error.hpp"

namespace cubegraph {

namespace {

int parse_int(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw IoError(where + ": expected an integer, found '" + s + "'");
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw IoError(where + ": expected a number, found '" + s + "'");
}

std::string shortest(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": no such file");
  const CsvTable t = parse_csv(in, path.string());
  Manifest m;
  m.base_dir = path.parent_path();
  m.npt_columns.clear();
  for (const auto& h : t.header) {
    if (h == "npt" || h.rfind("npt_", 0) == 0) m.npt_columns.push_back(h);
  }
  const auto need = [&](const char* name) {
    const int c = t.column(name);
    if (c < 0) throw IoError(path.string() + ": missing column '" + name + "'");
    return static_cast<std::size_t>(c);
  };
  const std::size_t id = need("subject_id"), age = need("age_group"), edu = need("edu_group"), label = need("label");
  if (m.npt_columns.empty()) throw IoError(path.string() + ": missing npt column");
  const int image = t.column("image_file"), graph = t.column("graph_file"), truth = t.column("truth_file"),
            sev = t.column("severity");
  if (image < 0 && graph < 0) throw IoError(path.string() + ": needs an image_file or graph_file column");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    const std::string where = path.string() + ": row " + std::to_string(r + 1);
    ManifestRow row;
    row.subject_id = f[id];
    if (image >= 0) row.image_file = f[static_cast<std::size_t>(image)];
    if (graph >= 0) row.graph_file = f[static_cast<std::size_t>(graph)];
    if (truth >= 0) row.truth_file = f[static_cast<std::size_t>(truth)];
    row.age_group = parse_int(f[age], where + " age_group");
    row.edu_group = parse_int(f[edu], where + " edu_group");
    row.label = parse_int(f[label], where + " label");
    for (const auto& col : m.npt_columns) {
      row.npt.push_back(parse_double(f[static_cast<std::size_t>(t.column(col))], where + " " + col));
    }
    if (sev >= 0 && !f[static_cast<std::size_t>(sev)].empty()) {
      row.severity = parse_double(f[static_cast<std::size_t>(sev)], where + " severity");
    }
    if (row.image_file.empty() && row.graph_file.empty()) {
      throw IoError(where + ": neither image_file nor graph_file given");
    }
    m.rows.push_back(std::move(row));
  }
  return m;
}

std::string manifest_to_csv(const Manifest& m) {
  std::ostringstream out;
  out << "subject_id,image_file,graph_file,truth_file,age_group,edu_group";
  for (const auto& c : m.npt_columns) out << ',' << c;
  out << ",label,severity\n";
  for (const auto& r : m.rows) {
    if (r.npt.size() != m.npt_columns.size()) throw Error("manifest: npt width mismatch for " + r.subject_id);
    out << csv_field(r.subject_id) << ',' << csv_field(r.image_file) << ',' << csv_field(r.graph_file) << ','
        << csv_field(r.truth_file) << ',' << r.age_group << ',' << r.edu_group;
    for (double v : r.npt) out << ',' << shortest(v);
    out << ',' << r.label << ',' << (r.severity ? shortest(*r.severity) : "") << '\n';
  }
  return out.str();
}

void write_manifest(const Manifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << manifest_to_csv(m);
}

SubjectRecord make_record(const ManifestRow& row, SketchGraph graph, const FeatureOptions& opt) {
  if (graph.node_count() == 0) throw Error("subject " + row.subject_id + ": empty graph");
  SubjectRecord rec;
  rec.subject_id = row.subject_id;
  rec.features = assemble_features(graph, opt);
  rec.graph = std::move(graph);
  rec.age_group = row.age_group;
  rec.edu_group = row.edu_group;
  rec.npt = row.npt;
  rec.label = row.label;
  rec.severity = row.severity.value_or(-1.0);
  rec.validate();
  return rec;
}

std::vector<SubjectRecord> load_cohort(const Manifest& m, const PipelineConfig& cfg) {
  std::vector<SubjectRecord> out;
  out.reserve(m.rows.size());
  for (const auto& row : m.rows) {
    SketchGraph g = row.graph_file.empty() ? vectorize_image(load_image(m.base_dir / row.image_file), cfg).graph
                                           : read_graph(m.base_dir / row.graph_file);
    out.push_back(make_record(row, std::move(g), cfg.features));
  }
  return out;
}

std::vector<SubjectRecord> synthesize_cohort(const CohortConfig& cohort, const PipelineConfig& cfg) {
  std::vector<SubjectRecord> out;
  for (const auto& s : sample_cohort(cohort)) {
    ManifestRow row;
    row.subject_id = s.subject_id;
    row.age_group = s.age_group;
    row.edu_group = s.edu_group;
    row.npt = s.npt;
    row.label = s.label;
    row.severity = s.severity;
    out.push_back(make_record(row, vectorize_image(render_cube(s.distortion, cohort.render).image, cfg).graph,
                              cfg.features));
  }
  return out;
}

}  // namespace cubegraph
