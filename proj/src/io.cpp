#include "icsdetect/io.hpp"

#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace ics::io {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

std::optional<double> parse_double(const std::string& field) {
  if (field.empty()) return std::nullopt;
  double value = 0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

}  // namespace

CsvData read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open '" + path.string() + "'");

  CsvData data;
  std::vector<std::vector<double>> rows;
  std::string line;
  long line_no = 0;
  std::size_t width = 0;
  bool first_content_row = true;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      if (rows.empty() && data.header.empty()) continue;  // leading blanks
      throw input_error(path.filename().string() + ":" + std::to_string(line_no) + ": blank line inside data");
    }
    std::vector<std::string> fields = split_fields(line);
    if (first_content_row) {
      bool all_numeric = true;
      for (const std::string& f : fields)
        if (!parse_double(f)) all_numeric = false;
      first_content_row = false;
      width = fields.size();
      if (!all_numeric) {
        data.header = fields;
        continue;
      }
    }
    if (fields.size() != width)
      throw input_error(path.filename().string() + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(width) + " fields, found " + std::to_string(fields.size()));
    std::vector<double> row;
    row.reserve(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      std::optional<double> v = parse_double(fields[c]);
      if (!v)
        throw input_error(path.filename().string() + ":" + std::to_string(line_no) + ": column " +
                          std::to_string(c + 1) + " is not a number ('" + fields[c] + "')");
      row.push_back(*v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw input_error(path.filename().string() + ": no data rows");

  data.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j)
      data.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return data;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // shortest representation that round-trips
  for (int precision = 1; precision < 17; ++precision) {
    char candidate[32];
    std::snprintf(candidate, sizeof(candidate), "%.*g", precision, v);
    double back = 0;
    auto [ptr, ec] = std::from_chars(candidate, candidate + std::strlen(candidate), back);
    (void)ptr;
    if (ec == std::errc{} && back == v) return candidate;
  }
  return buf;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path dir = path.parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw input_error("cannot write '" + tmp.string() + "'");
    out << text;
    if (!out) throw input_error("short write to '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

void write_csv(const std::filesystem::path& path, const Matrix& values,
               const std::vector<std::string>& header) {
  std::ostringstream out;
  if (!header.empty()) {
    if (static_cast<Index>(header.size()) != values.cols())
      throw std::invalid_argument("write_csv: header width mismatch");
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << "\n";
  }
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) out << (j ? "," : "") << format_double(values(i, j));
    out << "\n";
  }
  write_text_atomic(path, out.str());
}

namespace {

nlohmann::ordered_json vector_json(const Vector& v) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vector vector_from_json(const nlohmann::json& arr) {
  Vector v(static_cast<Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Index>(i)] = arr[i].get<double>();
  return v;
}

}  // namespace

nlohmann::ordered_json to_json(const PaTable& table) {
  nlohmann::ordered_json j;
  j["schema"] = kPaTableSchema;
  j["n"] = table.n;
  j["p"] = table.p;
  j["pair"] = table.pair;
  j["alpha"] = table.alpha;
  j["reps"] = table.reps;
  j["seed"] = table.seed;
  j["cutoffs"] = vector_json(table.cutoffs);
  j["redraws"] = table.redraws;
  return j;
}

nlohmann::ordered_json to_json(const CutoffTable& table) {
  nlohmann::ordered_json j;
  j["schema"] = kCutoffTableSchema;
  j["n"] = table.n;
  j["p"] = table.p;
  j["pair"] = table.pair;
  j["k"] = table.k;
  j["gamma"] = table.gamma;
  j["reps"] = table.reps;
  j["seed"] = table.seed;
  j["cutoff"] = table.cutoff;
  j["redraws"] = table.redraws;
  return j;
}

PaTable pa_table_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != kPaTableSchema)
    throw input_error("pa table: unknown schema '" + j.value("schema", "") + "'");
  PaTable t;
  t.n = j.at("n").get<Index>();
  t.p = j.at("p").get<Index>();
  t.pair = j.at("pair").get<std::string>();
  t.alpha = j.at("alpha").get<double>();
  t.reps = j.at("reps").get<int>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.cutoffs = vector_from_json(j.at("cutoffs"));
  t.redraws = j.value("redraws", 0);
  if (t.cutoffs.size() != t.p) throw input_error("pa table: cutoff length does not match p");
  return t;
}

CutoffTable cutoff_table_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != kCutoffTableSchema)
    throw input_error("cutoff table: unknown schema '" + j.value("schema", "") + "'");
  CutoffTable t;
  t.n = j.at("n").get<Index>();
  t.p = j.at("p").get<Index>();
  t.pair = j.at("pair").get<std::string>();
  t.k = j.at("k").get<Index>();
  t.gamma = j.at("gamma").get<double>();
  t.reps = j.at("reps").get<int>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.cutoff = j.at("cutoff").get<double>();
  t.redraws = j.value("redraws", 0);
  return t;
}

void save_pa_table(const std::filesystem::path& path, const PaTable& table) {
  write_text_atomic(path, to_json(table).dump(2) + "\n");
}

void save_cutoff_table(const std::filesystem::path& path, const CutoffTable& table) {
  write_text_atomic(path, to_json(table).dump(2) + "\n");
}

namespace {

std::optional<nlohmann::json> read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  return j;
}

}  // namespace

std::optional<PaTable> load_pa_table(const std::filesystem::path& path) {
  auto j = read_json_file(path);
  if (!j) return std::nullopt;
  try {
    return pa_table_from_json(*j);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::optional<CutoffTable> load_cutoff_table(const std::filesystem::path& path) {
  auto j = read_json_file(path);
  if (!j) return std::nullopt;
  try {
    return cutoff_table_from_json(*j);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

nlohmann::ordered_json to_json(const DetectionReport& report) {
  nlohmann::ordered_json j;
  j["schema"] = kReportSchema;
  j["method"] = report.method;
  if (!report.pair.empty()) j["pair"] = report.pair;
  j["n"] = report.n;
  j["p"] = report.p;
  j["gamma"] = report.gamma;
  if (report.method == "ics") j["alpha"] = report.alpha;
  j["seed"] = report.seed;
  if (report.k_used)
    j["k"] = *report.k_used;
  else
    j["k"] = nullptr;
  if (report.cutoff)
    j["cutoff"] = *report.cutoff;
  else
    j["cutoff"] = nullptr;
  j["flag_count"] = report.flag_count();

  if (report.selection) {
    nlohmann::ordered_json sel;
    sel["method"] = to_string(report.selection->method);
    sel["k"] = report.selection->k;
    nlohmann::ordered_json comps = nlohmann::ordered_json::array();
    for (const ComponentDecision& d : report.selection->components) {
      nlohmann::ordered_json c;
      c["component"] = d.component;
      c["statistic"] = d.statistic;
      c[report.selection->method == SelectionMethod::Pa ? "cutoff" : "p_value"] = d.threshold;
      c["level"] = d.level;
      c["selected"] = d.selected;
      comps.push_back(std::move(c));
    }
    sel["components"] = std::move(comps);
    j["selection"] = std::move(sel);
  }

  if (report.eigenvalues.size() > 0) j["eigenvalues"] = vector_json(report.eigenvalues);

  if (report.component_correlations.size() > 0) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (Index r = 0; r < report.component_correlations.rows(); ++r)
      rows.push_back(vector_json(report.component_correlations.row(r).transpose()));
    j["component_correlations"] = std::move(rows);
  }

  if (report.pca_sd_cutoff) {
    j["pca"] = nlohmann::ordered_json{{"sd_cutoff", *report.pca_sd_cutoff},
                                      {"od_cutoff", report.pca_od_cutoff ? nlohmann::ordered_json(*report.pca_od_cutoff)
                                                                         : nlohmann::ordered_json(nullptr)},
                                      {"score_dist", vector_json(report.pca_score_dist)},
                                      {"orth_dist", vector_json(report.pca_orth_dist)}};
  }

  j["distances_sq"] = vector_json(report.distances_sq);
  nlohmann::ordered_json flags = nlohmann::ordered_json::array();
  for (bool f : report.flags) flags.push_back(f);
  j["flags"] = std::move(flags);
  return j;
}

void write_report_json(const std::filesystem::path& path, const DetectionReport& report) {
  write_text_atomic(path, to_json(report).dump(2) + "\n");
}

void write_distances_csv(const std::filesystem::path& path, const DetectionReport& report) {
  std::ostringstream out;
  out << "index,distance_sq,flagged\n";
  for (Index i = 0; i < report.distances_sq.size(); ++i)
    out << i << "," << format_double(report.distances_sq[i]) << ","
        << (report.flags[static_cast<std::size_t>(i)] ? 1 : 0) << "\n";
  write_text_atomic(path, out.str());
}

std::string experiment_csv(const std::vector<simgen::CellResult>& cells) {
  std::ostringstream out;
  out << "case,p,pair,method,mean_k,TP,FP,reps,seed\n";
  for (const simgen::CellResult& c : cells) {
    out << c.case_id << "," << c.p << "," << c.pair << "," << c.method << ",";
    if (c.mean_k) out << format_double(*c.mean_k);
    out << ",";
    if (c.tp) out << format_double(*c.tp);
    out << ",";
    if (c.fp) out << format_double(*c.fp);
    out << "," << c.reps << "," << c.seed << "\n";
  }
  return out.str();
}

void write_experiment_csv(const std::filesystem::path& path,
                          const std::vector<simgen::CellResult>& cells) {
  write_text_atomic(path, experiment_csv(cells));
}

std::string scree_csv(const Vector& eigenvalues) {
  std::ostringstream out;
  out << "rank,eigenvalue\n";
  for (Index j = 0; j < eigenvalues.size(); ++j)
    out << (j + 1) << "," << format_double(eigenvalues[j]) << "\n";
  return out.str();
}

}  // namespace ics::io
