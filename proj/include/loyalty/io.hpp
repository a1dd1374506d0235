#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "loyalty/core_model.hpp"
#include "loyalty/estimation.hpp"

namespace loyalty {

/// {"n_max": int, "types": [{"link", "b1", "b2", "baseline", "box"?}], "rho": [..]}.
/// Throws MalformedInstance on bad JSON or a bad shape.
Instance instance_from_json(const std::string& text);
std::string instance_to_json(const Instance& instance);

/// Throw Io with the offending path.
std::string read_text_file(const std::filesystem::path& path);
/// Creates parent directories as needed.
void write_text_file(const std::filesystem::path& path, const std::string& content);
Instance read_instance_file(const std::filesystem::path& path);

/// Per-type samples from CSV rows "type,tau,x" (types 0-based, optional header,
/// '#' comments). Returns max(k, 1 + largest type) sample sets.
std::vector<SampleSet> read_samples_csv(std::istream& is, std::size_t k = 0);

}  // namespace loyalty
