#pragma once

#include "usc/bricks.hpp"
#include "usc/heat.hpp"

namespace usc {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunManifest {
  std::string spec_path;
  std::uint64_t spec_hash = 0;
  std::vector<std::string> commands;  // argv after the program name
  std::vector<int> levels;
  std::vector<std::uint64_t> seeds;
  SolveOptions solve;
  std::int64_t max_vertices = 500000;
  int workers = 1;
  std::string out_dir;
  std::string version = kToolVersion;

  std::string to_json() const;
  static RunManifest from_json(const std::string& text);
};

// Creates parent directories as needed.
void write_text(const std::string& path, const std::string& content);
void write_gzip(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);
bool file_exists(const std::string& path);

// "1..3", "2", "1,3" → sorted distinct levels.
std::vector<int> parse_levels(const std::string& text);
std::vector<std::string> split_list(const std::string& text, char sep = ',');

ConstantsTable constants_from_csv(const std::string& csv);

std::string validation_to_json(const IfsSpec& spec, const ValidationReport& rep);
std::string fit_to_json(const ScalingFit& fit);
std::string subgaussian_to_json(const SubGaussianFit& fit);
std::string balls_to_json(const BallCheckReport& rep);
std::string holder_to_json(const HolderEstimate& est);
std::string besov_to_json(const BesovReport& rep);

}  // namespace usc
