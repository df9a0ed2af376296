#pragma once

// File formats: JSONL records, curve / histogram CSV, manifest sidecars.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "modc/datagen.hpp"
#include "modc/sampler.hpp"

namespace modc::io {

using nlohmann::json;

json problem_to_json(const Problem& problem);
/// Throws SchemaMismatch on missing fields or an id that does not match the
/// numbers and target.
Problem problem_from_json(const json& record);

/// Problem fields plus mode, heuristic, seed, solved, expanded, steps and
/// visited states.
json example_to_json(const TrainingExample& example);
TrainingExample example_from_json(const json& record);

json profile_to_json(const ModeSuccessProfile& profile);
ModeSuccessProfile profile_from_json(const json& record);

std::vector<json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& records);
std::string to_jsonl(const std::vector<json>& records);

/// Shortest round-trip decimal form.
std::string format_double(double x);

/// Header: k,strategy,testset,value,n_samples,stderr
std::string curves_to_csv(const std::vector<PassKCurve>& curves);
/// Groups rows by (strategy, testset) in order of first appearance. Throws
/// SchemaMismatch on a wrong header, malformed rows or no rows at all.
std::vector<PassKCurve> curves_from_csv(const std::string& text);

/// Header: policy,bin_lo,bin_hi,count,extremity_mass
std::string histograms_to_csv(const std::vector<BalanceHistogram>& histograms);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// "<output>.manifest.json"
std::filesystem::path manifest_path(const std::filesystem::path& output);
void write_manifest(const std::filesystem::path& output, const json& manifest);

}  // namespace modc::io
