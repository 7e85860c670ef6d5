#include "manifest.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <json.hpp>
#include <memory>
#include <sstream>

#include "scone/error.hpp"

namespace scone::cli {

namespace {

std::string hex(const unsigned char* data, unsigned len) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += digits[data[i] >> 4];
    out += digits[data[i] & 15];
  }
  return out;
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256: init failed");
  }
  void update(const char* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw Error("sha256: update failed");
  }
  std::string finish() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md, &len) != 1) throw Error("sha256: final failed");
    return hex(md, len);
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_bytes(const std::string& bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.finish();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  Sha256 h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return h.finish();
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["tool"] = "scone";
  j["version"] = tool_version;
  j["command"] = command;
  j["config"] = config;
  if (!seed.empty()) j["seed"] = seed;
  auto files = [](const std::vector<FileDigest>& v) {
    nlohmann::ordered_json a = nlohmann::ordered_json::array();
    for (const auto& f : v) a.push_back({{"path", f.path}, {"sha256", f.sha256}});
    return a;
  };
  j["inputs"] = files(inputs);
  j["outputs"] = files(outputs);
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
  RunManifest m;
  try {
    const auto j = nlohmann::json::parse(text);
    m.tool_version = j.value("version", "");
    m.command = j.value("command", "");
    if (j.contains("config")) m.config = j["config"].get<std::map<std::string, std::string>>();
    m.seed = j.value("seed", "");
    for (const auto& f : j.at("inputs")) m.inputs.push_back({f.at("path"), f.at("sha256")});
    for (const auto& f : j.at("outputs")) m.outputs.push_back({f.at("path"), f.at("sha256")});
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  return m;
}

std::filesystem::path manifest_path_for(const std::filesystem::path& output) {
  auto p = output;
  p += ".manifest.json";
  return p;
}

void verify_input(const std::filesystem::path& input) {
  namespace fs = std::filesystem;
  const fs::path dir = input.parent_path().empty() ? fs::path(".") : input.parent_path();
  for (const fs::path& candidate : {manifest_path_for(input), dir / "manifest.json"}) {
    if (!fs::exists(candidate)) continue;
    std::ifstream in(candidate);
    std::stringstream ss;
    ss << in.rdbuf();
    const RunManifest m = RunManifest::from_json(ss.str());
    for (const auto& out : m.outputs) {
      if (fs::path(out.path).filename() != input.filename()) continue;
      const std::string actual = sha256_file(input);
      if (actual != out.sha256) {
        throw Error(input.string() + " does not match the digest recorded in " + candidate.string() +
                    " (file changed after it was written)");
      }
      return;
    }
  }
}

}  // namespace scone::cli
