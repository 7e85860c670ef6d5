#include "scone/data.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "scone/error.hpp"
#include "scone/text_io.hpp"

namespace scone {

std::string to_string(Preprocessing p) {
  switch (p) {
    case Preprocessing::raw: return "raw";
    case Preprocessing::normalized: return "normalized";
    case Preprocessing::zscored: return "zscored";
  }
  return "raw";
}

void OmicsView::validate() const {
  if (sample_ids.size() != x.rows() || feature_names.size() != x.cols()) {
    throw ContractError("view '" + name + "': matrix " + x.shape_string() + " does not match " +
                        std::to_string(sample_ids.size()) + " ids and " +
                        std::to_string(feature_names.size()) + " features");
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : sample_ids) {
    if (!seen.insert(id).second) throw ContractError("view '" + name + "': duplicate sample id '" + id + "'");
  }
}

OmicsView read_view(std::istream& in, Likelihood likelihood, const std::string& name) {
  const DelimitedTable t = read_delimited(in);
  if (t.header.size() < 2) throw ParseError("view needs a sample id column and at least one feature", 1);
  OmicsView v;
  v.name = name;
  v.likelihood = likelihood;
  v.feature_names.assign(t.header.begin() + 1, t.header.end());
  v.x = Matrix(t.rows.size(), v.feature_names.size());
  std::unordered_set<std::string> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::size_t line = t.row_lines[r];
    std::string id(trim(t.rows[r][0]));
    if (id.empty()) throw ParseError("empty sample id", line);
    if (!seen.insert(id).second) throw ParseError("duplicate sample id '" + id + "'", line);
    v.sample_ids.push_back(std::move(id));
    for (std::size_t c = 0; c < v.feature_names.size(); ++c) {
      const double val = parse_double(t.rows[r][c + 1], line);
      if (!std::isfinite(val)) {
        throw ParseError("non-finite value in column '" + v.feature_names[c] + "'", line);
      }
      if (likelihood == Likelihood::bernoulli && (val < 0.0 || val > 1.0)) {
        throw ParseError("bernoulli view value outside [0, 1] in column '" + v.feature_names[c] + "'", line);
      }
      v.x(r, c) = val;
    }
  }
  return v;
}

OmicsView load_view(const std::filesystem::path& path, Likelihood likelihood) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return read_view(in, likelihood, path.stem().string());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string format_view(const OmicsView& view, char delimiter) {
  view.validate();
  std::string out = "sample_id";
  for (const auto& f : view.feature_names) {
    out += delimiter;
    out += f;
  }
  out += '\n';
  for (std::size_t r = 0; r < view.samples(); ++r) {
    out += view.sample_ids[r];
    for (double v : view.x.row(r)) {
      out += delimiter;
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

void save_view(const std::filesystem::path& path, const OmicsView& view) {
  write_file_atomic(path, format_view(view));
}

namespace {
void require_non_negative(const OmicsView& view, const char* op) {
  for (double v : view.x.values()) {
    if (!(v >= 0.0)) throw DomainError(std::string(op) + ": view '" + view.name + "' has a negative or NaN entry");
  }
}
}  // namespace

OmicsView normalize_counts(OmicsView view, double target_sum) {
  if (!(target_sum > 0.0)) throw ParameterError("normalize_counts: target sum must be positive");
  require_non_negative(view, "normalize_counts");
  for (std::size_t r = 0; r < view.samples(); ++r) {
    auto row = view.x.row(r);
    double s = 0.0;
    for (double v : row) s += v;
    if (s == 0.0) continue;
    for (double& v : row) v = std::log1p(v / s * target_sum);
  }
  view.state = Preprocessing::normalized;
  return view;
}

OmicsView clr_transform(OmicsView view) {
  require_non_negative(view, "clr_transform");
  for (std::size_t r = 0; r < view.samples(); ++r) {
    auto row = view.x.row(r);
    double mean = 0.0;
    for (double& v : row) {
      v = std::log1p(v);
      mean += v;
    }
    mean /= static_cast<double>(row.size());
    for (double& v : row) v -= mean;
  }
  view.state = Preprocessing::normalized;
  return view;
}

OmicsView zscore(OmicsView view) {
  if (view.samples() < 2) throw ParameterError("zscore: at least two samples are required");
  const double n = static_cast<double>(view.samples());
  for (std::size_t c = 0; c < view.features(); ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < view.samples(); ++r) mean += view.x(r, c);
    mean /= n;
    double var = 0.0;
    for (std::size_t r = 0; r < view.samples(); ++r) {
      const double d = view.x(r, c) - mean;
      var += d * d;
    }
    const double sd = std::sqrt(var / n);
    // Relative cutoff so a column that is constant up to rounding maps to 0.
    const bool constant = !(sd > 1e-12 * std::max(1.0, std::abs(mean)));
    for (std::size_t r = 0; r < view.samples(); ++r) {
      view.x(r, c) = constant ? 0.0 : (view.x(r, c) - mean) / sd;
    }
  }
  view.state = Preprocessing::zscored;
  return view;
}

std::string format_labels(const std::vector<std::string>& ids, std::span<const std::uint32_t> labels,
                          const std::string& label_column) {
  if (ids.size() != labels.size()) throw DimensionError("format_labels: ids and labels differ in length");
  std::string out = "sample_id\t" + label_column + "\n";
  for (std::size_t i = 0; i < ids.size(); ++i) out += ids[i] + "\t" + std::to_string(labels[i]) + "\n";
  return out;
}

LabelTable load_labels(const std::filesystem::path& path) {
  const DelimitedTable t = read_delimited(path);
  if (t.header.size() != 2) throw ParseError(path.string() + ": expected two columns (sample_id, label)", 1);
  LabelTable out;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    std::string id(trim(t.rows[r][0]));
    if (!seen.insert(id).second) throw ParseError(path.string() + ": duplicate sample id '" + id + "'", t.row_lines[r]);
    const std::size_t v = parse_size(t.rows[r][1], t.row_lines[r]);
    if (v > 0xffffffffu) throw ParseError(path.string() + ": label out of range", t.row_lines[r]);
    out.ids.push_back(std::move(id));
    out.labels.push_back(static_cast<std::uint32_t>(v));
  }
  return out;
}

std::string format_survival(std::span<const SurvivalRecord> records) {
  std::string out = "sample_id\tduration\tevent\tgroup\n";
  for (const auto& r : records) {
    out += r.sample_id + "\t" + format_double(r.duration) + "\t" + (r.event ? "1" : "0") + "\t" +
           std::to_string(r.group) + "\n";
  }
  return out;
}

std::vector<SurvivalRecord> load_survival(const std::filesystem::path& path) {
  const DelimitedTable t = read_delimited(path);
  if (t.header.size() != 4) {
    throw ParseError(path.string() + ": expected columns sample_id, duration, event, group", 1);
  }
  std::vector<SurvivalRecord> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::size_t line = t.row_lines[r];
    SurvivalRecord rec;
    rec.sample_id = std::string(trim(t.rows[r][0]));
    rec.duration = parse_double(t.rows[r][1], line);
    if (!(rec.duration >= 0.0) || !std::isfinite(rec.duration)) {
      throw ParseError(path.string() + ": duration must be a finite non-negative number", line);
    }
    const auto ev = trim(t.rows[r][2]);
    if (ev != "0" && ev != "1") throw ParseError(path.string() + ": event must be 0 or 1", line);
    rec.event = ev == "1";
    const std::size_t g = parse_size(t.rows[r][3], line);
    if (g > 0xffffffffu) throw ParseError(path.string() + ": group out of range", line);
    rec.group = static_cast<std::uint32_t>(g);
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace scone
