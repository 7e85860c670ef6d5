#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace scone::cli {

// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_bytes(const std::string& bytes);

struct FileDigest {
  std::string path;
  std::string sha256;
};

struct RunManifest {
  std::string tool_version;
  std::string command;
  std::map<std::string, std::string> config;
  std::string seed;  // empty when the command draws no random numbers
  std::vector<FileDigest> inputs;
  std::vector<FileDigest> outputs;

  std::string to_json() const;
  static RunManifest from_json(const std::string& text);
};

// `<output>.manifest.json` for single-output commands.
std::filesystem::path manifest_path_for(const std::filesystem::path& output);

// If a manifest written by an earlier stage lists `input` as an output,
// re-hash the file and throw scone::Error on a mismatch. Looks for
// `<input>.manifest.json` and `manifest.json` in the input's directory.
void verify_input(const std::filesystem::path& input);

}  // namespace scone::cli
