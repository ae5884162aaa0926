#include "camiqa/checkpoint.hpp"

#include "camiqa/error.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace camiqa {

namespace {

constexpr char kMagic[8] = {'C', 'Q', 'C', 'K', 'P', 'T', '\r', '\n'};
constexpr std::uint32_t kMaxName = 1u << 16;

bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}
  template <typename T>
  void pod(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  void text(const std::string& s) {
    pod(static_cast<std::uint64_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  Reader(std::ifstream& in, std::string path) : in_(in), path_(std::move(path)) {}
  template <typename T>
  T pod() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in_) fail("truncated file");
    return v;
  }
  std::string text(std::uint64_t limit) {
    const auto n = pod<std::uint64_t>();
    if (n > limit) fail("implausible string length");
    std::string s(n, '\0');
    in_.read(s.data(), static_cast<std::streamsize>(n));
    if (!in_) fail("truncated file");
    return s;
  }
  void raw(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (!in_) fail("truncated file");
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw DataError("checkpoint " + path_ + ": " + what);
  }

 private:
  std::ifstream& in_;
  std::string path_;
};

}  // namespace

bool EpochMetrics::operator==(const EpochMetrics& o) const {
  return epoch == o.epoch && same(train_loss, o.train_loss) &&
         same(train_regression, o.train_regression) && same(train_ranking, o.train_ranking) &&
         same(val_srcc, o.val_srcc) && same(val_fg_acc, o.val_fg_acc);
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  Writer w(out);
  out.write(kMagic, sizeof kMagic);
  w.pod(ckpt.version);
  w.text(ckpt.config.to_string());
  w.pod(static_cast<std::uint32_t>(ckpt.history.size()));
  for (const auto& h : ckpt.history) {
    w.pod(static_cast<std::int32_t>(h.epoch));
    for (double v : {h.train_loss, h.train_regression, h.train_ranking, h.val_srcc, h.val_fg_acc}) {
      w.pod(v);
    }
  }
  w.pod(static_cast<std::uint32_t>(ckpt.weights.size()));
  for (const auto& [name, m] : ckpt.weights) {
    w.text(name);
    w.pod(static_cast<std::uint32_t>(m.rows()));
    w.pod(static_cast<std::uint32_t>(m.cols()));
    // Column-major Eigen storage, written as is.
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(m.size())));
  }
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  Reader r(in, path.string());
  char magic[sizeof kMagic];
  r.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) r.fail("not a checkpoint file");

  Checkpoint ckpt;
  ckpt.version = r.pod<std::uint32_t>();
  if (ckpt.version != kCheckpointVersion) {
    r.fail("unsupported version " + std::to_string(ckpt.version));
  }
  ckpt.config = KeyValueConfig::parse(r.text(1u << 24));
  const auto n_hist = r.pod<std::uint32_t>();
  if (n_hist > 100000) r.fail("implausible history length");
  for (std::uint32_t i = 0; i < n_hist; ++i) {
    EpochMetrics h;
    h.epoch = r.pod<std::int32_t>();
    h.train_loss = r.pod<double>();
    h.train_regression = r.pod<double>();
    h.train_ranking = r.pod<double>();
    h.val_srcc = r.pod<double>();
    h.val_fg_acc = r.pod<double>();
    ckpt.history.push_back(h);
  }
  const auto n_blobs = r.pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_blobs; ++i) {
    std::string name = r.text(kMaxName);
    const auto rows = r.pod<std::uint32_t>();
    const auto cols = r.pod<std::uint32_t>();
    if (static_cast<std::uint64_t>(rows) * cols > (1ull << 28)) r.fail("implausible blob " + name);
    ad::Matrix m(rows, cols);
    r.raw(reinterpret_cast<char*>(m.data()), sizeof(double) * static_cast<size_t>(m.size()));
    if (!ckpt.weights.emplace(std::move(name), std::move(m)).second) r.fail("duplicate blob");
  }
  if (in.peek() != std::ifstream::traits_type::eof()) r.fail("trailing bytes");
  return ckpt;
}

}  // namespace camiqa
