#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "brainseg/partition.hpp"
#include "brainseg/phantom.hpp"
#include "brainseg/quality.hpp"
#include "brainseg/stitch.hpp"
#include "brainseg/subdomain_classifier.hpp"

namespace brainseg {

struct PipelineInputs {
  std::filesystem::path t1w;
  std::filesystem::path t2w;  // empty when absent
  std::filesystem::path pdw;  // empty when absent
  std::filesystem::path mask;
  std::filesystem::path init_labels;
  std::optional<std::filesystem::path> ground_truth;
};

struct PipelineConfig {
  PipelineInputs inputs;
  AgeProfile age_profile = AgeProfile::Older;
  Channel partition_channel = Channel::T1w;
  PartitionParams partition;
  KfdaParams kfda;
  EnergyParams energy;
  AnnealSchedule anneal;
  SsimParams ssim;
  std::uint64_t seed = 1;
  int max_refine_iters = 1;
  std::filesystem::path output_dir = "out";
  bool write_ssim_map = false;
  int threads = 1;

  // Numeric ranges only.
  void validate_parameters() const;
  // Parameters plus the required input paths; file existence is checked
  // when the run starts.
  void validate() const;
};

// Relative paths in the document are resolved against `base_dir`. Unknown keys
// and out-of-range values throw ConfigError.
PipelineConfig pipeline_config_from_json(const std::string& text, const std::filesystem::path& base_dir);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
std::string pipeline_config_to_json(const PipelineConfig& config);

PhantomSpec phantom_spec_from_json(const std::string& text);
PhantomSpec load_phantom_spec(const std::filesystem::path& path);
std::string phantom_spec_to_json(const PhantomSpec& spec);

DegradeSpec degrade_spec_from_json(const std::string& text);

// Object with any of window, sigma, k1, k2, dynamic_range.
SsimParams ssim_params_from_json(const std::string& text);

std::string partition_tree_to_json(const PartitionTree& tree);
PartitionTree partition_tree_from_json(const std::string& text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace brainseg
