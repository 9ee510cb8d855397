#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "icsdetect/simgen.hpp"

namespace ics::io {

inline constexpr const char* kPaTableSchema = "icsdetect/pa-table/1";
inline constexpr const char* kCutoffTableSchema = "icsdetect/cutoff-table/1";
inline constexpr const char* kReportSchema = "icsdetect/detection-report/1";

struct CsvData {
  Matrix values;
  std::vector<std::string> header;  // empty when the file had none
};

/// Comma-separated numeric matrix; a non-numeric first row is treated as a
/// header. Ragged rows, empty fields and unparsable cells raise input_error
/// with the offending line number.
CsvData read_csv(const std::filesystem::path& path);

void write_csv(const std::filesystem::path& path, const Matrix& values,
               const std::vector<std::string>& header = {});

/// Deterministic shortest round-trip formatting used in every CSV we emit.
std::string format_double(double v);

nlohmann::ordered_json to_json(const PaTable& table);
nlohmann::ordered_json to_json(const CutoffTable& table);
nlohmann::ordered_json to_json(const DetectionReport& report);

PaTable pa_table_from_json(const nlohmann::json& j);
CutoffTable cutoff_table_from_json(const nlohmann::json& j);

void save_pa_table(const std::filesystem::path& path, const PaTable& table);
void save_cutoff_table(const std::filesystem::path& path, const CutoffTable& table);
std::optional<PaTable> load_pa_table(const std::filesystem::path& path);
std::optional<CutoffTable> load_cutoff_table(const std::filesystem::path& path);

/// Temp-file-then-rename write; partially written outputs never appear under
/// the target name.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

void write_report_json(const std::filesystem::path& path, const DetectionReport& report);

/// index,distance_sq,flagged rows for one report.
void write_distances_csv(const std::filesystem::path& path, const DetectionReport& report);

/// case,p,pair,method,mean_k,TP,FP,reps,seed with blanks for inapplicable
/// fields; cells marked as failed keep their key columns and blank metrics.
std::string experiment_csv(const std::vector<simgen::CellResult>& cells);
void write_experiment_csv(const std::filesystem::path& path,
                          const std::vector<simgen::CellResult>& cells);

std::string scree_csv(const Vector& eigenvalues);

}  // namespace ics::io

namespace ics {
// TableStore persistence hooks (declared here, used by detection.cpp).
using io::load_cutoff_table;
using io::load_pa_table;
using io::save_cutoff_table;
using io::save_pa_table;
}  // namespace ics
