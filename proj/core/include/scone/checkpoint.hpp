#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "scone/model.hpp"

namespace scone {

// Binary container: magic, format version, model config, view descriptors,
// every parameter matrix in SconeModel::parameters() order, and a string
// metadata map (training config, seed, ...). Doubles are stored as their
// IEEE-754 bit patterns, so a save/load round trip is bit-exact.
struct Checkpoint {
  SconeModel model;
  std::map<std::string, std::string> metadata;
};

inline constexpr std::uint32_t checkpoint_version = 1;

void write_checkpoint(std::ostream& out, const SconeModel& model,
                      const std::map<std::string, std::string>& metadata = {});
// Throws ParseError on a truncated or foreign file.
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const SconeModel& model,
                     const std::map<std::string, std::string>& metadata = {});
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace scone
