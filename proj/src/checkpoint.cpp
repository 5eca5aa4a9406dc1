#include <bit>
#include <cstring>
#include <string>

#include "parkcast/error.hpp"
#include "parkcast/io.hpp"
#include "parkcast/train.hpp"

// Checkpoint container: 8-byte magic, u32 format version, then tagged
// sections (u32 tag, u64 payload size, payload). Integers and doubles
// are little-endian raw bytes, so parameter values round-trip exactly.
// Layout details in docs/checkpoint-format.md.

static_assert(std::endian::native == std::endian::little,
              "checkpoint container assumes a little-endian host");

namespace parkcast::train {

using ad::Shape;
using ad::Tensor;

namespace {

constexpr char kMagic[8] = {'P', 'A', 'R', 'K', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

constexpr std::uint32_t kSecConfig = 1;
constexpr std::uint32_t kSecSites = 2;
constexpr std::uint32_t kSecScaler = 3;
constexpr std::uint32_t kSecAdjacency = 4;
constexpr std::uint32_t kSecParams = 5;
constexpr std::uint32_t kSecHistory = 6;
constexpr std::uint32_t kSecMeta = 7;

void put_u32(std::string &out, std::uint32_t v) {
  out.append(reinterpret_cast<const char *>(&v), sizeof v);
}

void put_u64(std::string &out, std::uint64_t v) {
  out.append(reinterpret_cast<const char *>(&v), sizeof v);
}

void put_f64(std::string &out, double v) {
  out.append(reinterpret_cast<const char *>(&v), sizeof v);
}

void put_tensor(std::string &out, const Tensor &t) {
  put_u32(out, t.shape().rank);
  for (int i = 0; i < 3; ++i)
    put_u64(out, t.shape().dim[i]);
  put_u64(out, t.size());
  out.append(reinterpret_cast<const char *>(t.data()),
             t.size() * sizeof(double));
}

class Reader {
public:
  explicit Reader(const std::string &buf) : buf_(buf) {}

  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == buf_.size(); }

  void need(std::uint64_t n) const {
    if (n > buf_.size() - pos_)
      throw IoError("checkpoint: truncated file");
  }

  void skip(std::uint64_t n) {
    need(n);
    pos_ += static_cast<std::size_t>(n);
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, buf_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v;
    std::memcpy(&v, buf_.data() + pos_, 8);
    pos_ += 8;
    return v;
  }

  double f64() {
    need(8);
    double v;
    std::memcpy(&v, buf_.data() + pos_, 8);
    pos_ += 8;
    return v;
  }

  std::string bytes(std::uint64_t n) {
    need(n);
    std::string s = buf_.substr(pos_, static_cast<std::size_t>(n));
    pos_ += static_cast<std::size_t>(n);
    return s;
  }

  void copy_doubles(double *dst, std::uint64_t count) {
    need(count * sizeof(double));
    std::memcpy(dst, buf_.data() + pos_, count * sizeof(double));
    pos_ += static_cast<std::size_t>(count) * sizeof(double);
  }

private:
  const std::string &buf_;
  std::size_t pos_ = 0;
};

Tensor read_tensor(Reader &r) {
  const std::uint32_t rank = r.u32();
  if (rank > 3)
    throw IoError("checkpoint: bad tensor rank " + std::to_string(rank));
  Shape shape;
  shape.rank = static_cast<std::uint8_t>(rank);
  for (int i = 0; i < 3; ++i)
    shape.dim[i] = static_cast<std::size_t>(r.u64());
  const std::uint64_t count = r.u64();
  if (rank == 0) {
    if (count != 0)
      throw IoError("checkpoint: rank-0 tensor with data");
    return Tensor{};
  }
  if (count != shape.count())
    throw IoError("checkpoint: tensor size mismatch");
  r.need(count * sizeof(double)); // before allocating, so corrupt sizes
  if (count > (std::uint64_t{1} << 40)) // cannot trigger a huge reserve
    throw IoError("checkpoint: implausible tensor size");
  Tensor t(shape);
  r.copy_doubles(t.data(), count);
  return t;
}

} // namespace

void save_checkpoint(const Checkpoint &ckpt, const std::string &path) {
  std::string out;
  out.append(kMagic, sizeof kMagic);
  put_u32(out, kVersion);

  auto section = [&out](std::uint32_t tag, const std::string &payload) {
    put_u32(out, tag);
    put_u64(out, payload.size());
    out += payload;
  };

  section(kSecConfig, format_config(ckpt.config));

  {
    std::string s;
    for (const std::string &site : ckpt.site_order) {
      s += site;
      s += '\n';
    }
    section(kSecSites, s);
  }

  if (ckpt.scaler) {
    std::string s;
    put_u32(s, static_cast<std::uint32_t>(ckpt.scaler->columns()));
    for (double v : ckpt.scaler->col_min)
      put_f64(s, v);
    for (double v : ckpt.scaler->col_max)
      put_f64(s, v);
    section(kSecScaler, s);
  }

  {
    std::string s;
    put_tensor(s, ckpt.a_hat);
    section(kSecAdjacency, s);
  }

  {
    std::string s;
    put_u32(s, static_cast<std::uint32_t>(ckpt.params.items.size()));
    for (const auto &[name, tensor] : ckpt.params.items) {
      put_u32(s, static_cast<std::uint32_t>(name.size()));
      s += name;
      put_tensor(s, tensor);
    }
    section(kSecParams, s);
  }

  {
    std::string s;
    put_u64(s, ckpt.history.size());
    for (const EpochStats &e : ckpt.history) {
      put_f64(s, e.train_mse);
      put_f64(s, e.val_mse);
    }
    section(kSecHistory, s);
  }

  {
    std::string s;
    put_u64(s, ckpt.data_fingerprint);
    put_u64(s, static_cast<std::uint64_t>(ckpt.interval_min));
    section(kSecMeta, s);
  }

  io::write_file_atomic(path, out);
}

Checkpoint load_checkpoint(const std::string &path) {
  const std::string buf = io::read_file(path);
  if (buf.size() < sizeof kMagic + 4 ||
      std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0)
    throw IoError("checkpoint: not a checkpoint file: " + path);
  Reader r(buf);
  r.skip(sizeof kMagic);
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw IoError("checkpoint: unsupported version " +
                  std::to_string(version) + " (expected " +
                  std::to_string(kVersion) + ")");

  Checkpoint ckpt;
  bool have_config = false, have_sites = false, have_adjacency = false,
       have_params = false, have_meta = false;
  while (!r.done()) {
    const std::uint32_t tag = r.u32();
    const std::uint64_t len = r.u64();
    r.need(len);
    const std::size_t end = r.pos() + static_cast<std::size_t>(len);
    switch (tag) {
    case kSecConfig: {
      try {
        ckpt.config = parse_config(r.bytes(len));
      } catch (const Error &e) {
        throw IoError(std::string("checkpoint: bad config section: ") +
                      e.what());
      }
      have_config = true;
      break;
    }
    case kSecSites: {
      ckpt.site_order = io::split_lines(r.bytes(len));
      have_sites = true;
      break;
    }
    case kSecScaler: {
      data::Scaler scaler;
      const std::uint32_t cols = r.u32();
      scaler.col_min.reserve(cols);
      scaler.col_max.reserve(cols);
      for (std::uint32_t i = 0; i < cols; ++i)
        scaler.col_min.push_back(r.f64());
      for (std::uint32_t i = 0; i < cols; ++i)
        scaler.col_max.push_back(r.f64());
      ckpt.scaler = std::move(scaler);
      break;
    }
    case kSecAdjacency: {
      ckpt.a_hat = read_tensor(r);
      if (!ckpt.a_hat.all_finite())
        throw IoError("checkpoint: non-finite adjacency");
      have_adjacency = true;
      break;
    }
    case kSecParams: {
      const std::uint32_t count = r.u32();
      ckpt.params.items.clear();
      ckpt.params.items.reserve(count);
      for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = r.u32();
        std::string name = r.bytes(name_len);
        Tensor t = read_tensor(r);
        if (!t.all_finite())
          throw IoError("checkpoint: non-finite parameter " + name);
        ckpt.params.items.emplace_back(std::move(name), std::move(t));
      }
      have_params = true;
      break;
    }
    case kSecHistory: {
      const std::uint64_t count = r.u64();
      ckpt.history.clear();
      ckpt.history.reserve(static_cast<std::size_t>(count));
      for (std::uint64_t i = 0; i < count; ++i) {
        EpochStats e;
        e.train_mse = r.f64();
        e.val_mse = r.f64();
        ckpt.history.push_back(e);
      }
      break;
    }
    case kSecMeta: {
      ckpt.data_fingerprint = r.u64();
      ckpt.interval_min = static_cast<int>(r.u64());
      have_meta = true;
      break;
    }
    default:
      throw IoError("checkpoint: unknown section tag " + std::to_string(tag));
    }
    if (r.pos() != end)
      throw IoError("checkpoint: malformed section " + std::to_string(tag));
  }
  if (!have_config || !have_sites || !have_adjacency || !have_params ||
      !have_meta)
    throw IoError("checkpoint: missing required section");
  return ckpt;
}

} // namespace parkcast::train
