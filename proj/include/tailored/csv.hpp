#pragma once

// Minimal RFC-4180 CSV reading/writing and dataset ingestion.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tailored/model.hpp"

namespace tailored {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column_index(std::string_view name) const;
  /// Throws DataError when the column is absent.
  std::size_t require_column(std::string_view name) const;
  std::vector<double> numeric_column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::string& path);
std::string format_csv(const CsvTable& table);
/// Writes the table in one go; throws IoError when the file cannot be written.
void write_csv(const std::string& path, const CsvTable& table);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text, std::string_view context = "value");

struct LoadedDataset {
  Dataset data;
  /// Row ids from an `id` column when present, else 0-based row numbers.
  std::vector<std::string> row_ids;
};

/// Reads a dataset CSV: every column other than `outcome_column` (and an
/// optional `id` column, and any `ignored_columns`) is a covariate, in file order. Outcome values must
/// be exactly "0" or "1".
LoadedDataset load_dataset(const std::string& path, const std::string& outcome_column = "y",
                           const std::vector<std::string>& ignored_columns = {});

/// Same layout but the outcome column is optional; missing outcomes are set to 0.
LoadedDataset load_covariates(const std::string& path, const std::string& outcome_column,
                              const std::vector<std::string>& ignored_columns = {},
                              bool* had_outcome = nullptr);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace tailored
