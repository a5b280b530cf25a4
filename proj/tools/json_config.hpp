#pragma once

#include <CLI11.hpp>

namespace hybrid_spkr::cli {

// Reads CLI11 configuration from a JSON object. Nested objects address subcommands,
// so {"jobs": 2, "enroll": {"bits": 6}} sets --jobs and `enroll --bits`.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool write_description,
                        std::string prefix) const override;
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override;
};

}  // namespace hybrid_spkr::cli
