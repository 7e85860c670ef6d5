#include "scone/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "scone/error.hpp"

namespace scone {

namespace {

constexpr char kMagic[8] = {'S', 'C', 'O', 'N', 'E', 'C', 'K', 'P'};
constexpr std::uint64_t kMaxString = 1u << 20;

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

void put_string(std::ostream& out, const std::string& s) {
  put_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint64_t u64() {
    unsigned char b[8];
    read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string string() {
    const std::uint64_t n = u64();
    if (n > kMaxString) throw ParseError("checkpoint: string length " + std::to_string(n) + " is implausible");
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }
  void read(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw ParseError("checkpoint: truncated file");
  }

 private:
  std::istream& in_;
};

}  // namespace

void write_checkpoint(std::ostream& out, const SconeModel& model,
                      const std::map<std::string, std::string>& metadata) {
  out.write(kMagic, sizeof kMagic);
  put_u64(out, checkpoint_version);
  const ModelConfig& c = model.config();
  put_u64(out, c.hidden_dim);
  put_u64(out, c.latent_dim);
  put_f64(out, c.slope);
  put_u64(out, model.view_count());
  for (const auto& v : model.views()) {
    put_string(out, v.name);
    put_u64(out, v.dim);
    put_string(out, to_string(v.likelihood));
  }
  const auto params = model.parameters();
  put_u64(out, params.size());
  for (const ad::Parameter* p : params) {
    put_u64(out, p->value.rows());
    put_u64(out, p->value.cols());
    for (double x : p->value.values()) put_f64(out, x);
  }
  put_u64(out, metadata.size());
  for (const auto& [k, v] : metadata) {
    put_string(out, k);
    put_string(out, v);
  }
  if (!out) throw Error("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  Reader r(in);
  char magic[8];
  r.read(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) throw ParseError("checkpoint: not a checkpoint file");
  const std::uint64_t version = r.u64();
  if (version != checkpoint_version) {
    throw ParseError("checkpoint: unsupported format version " + std::to_string(version));
  }
  ModelConfig config;
  config.hidden_dim = r.u64();
  config.latent_dim = r.u64();
  config.slope = r.f64();
  const std::uint64_t view_count = r.u64();
  if (view_count == 0 || view_count > 1024) throw ParseError("checkpoint: bad view count");
  std::vector<ViewDescriptor> views;
  for (std::uint64_t i = 0; i < view_count; ++i) {
    ViewDescriptor v;
    v.name = r.string();
    v.dim = r.u64();
    try {
      v.likelihood = likelihood_from_string(r.string());
    } catch (const ParameterError& e) {
      throw ParseError(std::string("checkpoint: ") + e.what());
    }
    views.push_back(std::move(v));
  }
  Checkpoint ck{SconeModel::zeros(std::move(views), config), {}};
  auto params = ck.model.parameters();
  if (r.u64() != params.size()) throw ParseError("checkpoint: parameter count mismatch");
  for (ad::Parameter* p : params) {
    const std::uint64_t rows = r.u64();
    const std::uint64_t cols = r.u64();
    if (rows != p->value.rows() || cols != p->value.cols()) {
      throw ParseError("checkpoint: parameter shape " + std::to_string(rows) + "x" +
                           std::to_string(cols) + " does not match " + p->value.shape_string());
    }
    for (double& x : p->value.values()) x = r.f64();
  }
  const std::uint64_t meta = r.u64();
  for (std::uint64_t i = 0; i < meta; ++i) {
    std::string k = r.string();
    ck.metadata[std::move(k)] = r.string();
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const SconeModel& model,
                     const std::map<std::string, std::string>& metadata) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_checkpoint(out, model, metadata);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace scone
