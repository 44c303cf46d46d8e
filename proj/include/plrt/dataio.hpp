#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "plrt/dataset.hpp"
#include "plrt/tree.hpp"

namespace plrt {

struct SchemaConfig {
    std::string target;
    /// Empty: every column except the target.
    std::vector<std::string> regression;
    /// Empty: same as regression.
    std::vector<std::string> split;
    bool standardize = false;
};

/// Comma-separated, header row first, '.' decimal point. Standardization
/// statistics (when enabled) are fitted on this file and kept in the schema.
Dataset load_csv(const std::string& path, const SchemaConfig& schema);
Dataset parse_csv(std::string_view text, const SchemaConfig& schema);

/// Loads columns named by a stored schema and applies its standardization
/// unchanged. Without `require_target` a missing target column yields y = 0.
Dataset load_csv_with_schema(const std::string& path, const ModelSchema& schema,
                             bool require_target = true);
Dataset parse_csv_with_schema(std::string_view text, const ModelSchema& schema,
                              bool require_target = true);

/// Writes regression columns, split-only columns and the target, using the
/// schema's names (generated when absent). Values round-trip exactly.
void write_csv(const std::string& path, const Dataset& data);
std::string format_csv(const Dataset& data);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

/// Train part has ceil(n (1 - f)) rows; a seeded shuffle decides which.
std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double test_fraction,
                                             std::uint64_t seed);

double mse(std::span<const double> predictions, std::span<const double> targets);

std::string model_to_json(const TreeModel& model);
TreeModel model_from_json(std::string_view text);
void save_model(const TreeModel& model, const std::string& path);
TreeModel load_model(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

} // namespace plrt
