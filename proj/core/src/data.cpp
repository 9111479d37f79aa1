#include "ldcvae/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <ostream>

#include "ldcvae/errors.hpp"

namespace ldc::data {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t off, const std::string& what) {
  if (b.size() < off + 4) throw ParseError("idx: truncated header in " + what, off);
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) |
         std::uint32_t{b[off + 3]};
}

void put_be32(std::string& s, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) s.push_back(static_cast<char>((v >> shift) & 0xff));
}

void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("idx: cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("idx: write failed for '" + path.string() + "'");
}

}  // namespace

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Dataset Dataset::head(std::size_t n) const {
  n = std::min(n, size());
  Dataset out{name, samples.rows_range(0, n), {}, image_shape};
  if (!labels.empty()) out.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

Dataset load_idx(const std::filesystem::path& images, const std::optional<std::filesystem::path>& labels) {
  const auto bytes = read_file_bytes(images);
  const std::string what = images.string();
  if (be32(bytes, 0, what) != kImageMagic) throw ParseError("idx: bad image magic in " + what, 0);
  const std::uint32_t count = be32(bytes, 4, what);
  const std::uint32_t h = be32(bytes, 8, what);
  const std::uint32_t w = be32(bytes, 12, what);
  const std::size_t dim = std::size_t{h} * w;
  const std::size_t payload = std::size_t{count} * dim;
  if (bytes.size() - 16 < payload) {
    throw ParseError("idx: truncated payload in " + what + ", expected " + std::to_string(payload) + " bytes",
                     bytes.size());
  }
  if (bytes.size() - 16 > payload) throw ParseError("idx: trailing bytes after payload in " + what, 16 + payload);
  if (count == 0) throw ParseError("idx: empty image file " + what, 4);

  Dataset ds;
  ds.name = images.filename().string();
  ds.image_shape = {h, w};
  ds.samples = Tensor(Shape{count, dim});
  for (std::size_t i = 0; i < payload; ++i) ds.samples[i] = static_cast<double>(bytes[16 + i]) / 255.0;

  if (labels) {
    const auto lb = read_file_bytes(*labels);
    const std::string lwhat = labels->string();
    if (be32(lb, 0, lwhat) != kLabelMagic) throw ParseError("idx: bad label magic in " + lwhat, 0);
    const std::uint32_t lcount = be32(lb, 4, lwhat);
    if (lcount != count) {
      throw ParseError("idx: " + std::to_string(lcount) + " labels for " + std::to_string(count) + " images", 4);
    }
    if (lb.size() - 8 != lcount) throw ParseError("idx: label payload size mismatch in " + lwhat, lb.size());
    ds.labels.assign(lb.begin() + 8, lb.end());
  }
  return ds;
}

void write_idx(const Dataset& ds, const std::filesystem::path& images,
               const std::optional<std::filesystem::path>& labels) {
  std::size_t h = 1, w = ds.dim();
  if (ds.image_shape.size() == 2) {
    h = ds.image_shape[0];
    w = ds.image_shape[1];
  }
  std::string buf;
  buf.reserve(16 + ds.samples.size());
  put_be32(buf, kImageMagic);
  put_be32(buf, static_cast<std::uint32_t>(ds.size()));
  put_be32(buf, static_cast<std::uint32_t>(h));
  put_be32(buf, static_cast<std::uint32_t>(w));
  for (double v : ds.samples.data()) {
    buf.push_back(static_cast<char>(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
  }
  write_bytes(images, buf);
  if (labels) {
    if (ds.labels.size() != ds.size()) throw ContractError("write_idx: dataset has no labels to write");
    std::string lb;
    put_be32(lb, kLabelMagic);
    put_be32(lb, static_cast<std::uint32_t>(ds.labels.size()));
    for (int l : ds.labels) lb.push_back(static_cast<char>(static_cast<std::uint8_t>(l)));
    write_bytes(*labels, lb);
  }
}

SynthKind parse_synth_kind(std::string_view s) {
  if (s == "two_moons") return SynthKind::two_moons;
  if (s == "gaussian_grid") return SynthKind::gaussian_grid;
  throw ConfigError("unknown synthetic dataset '" + std::string(s) + "' (expected two_moons|gaussian_grid)");
}

std::vector<std::pair<double, double>> grid_means(std::size_t k) {
  std::vector<std::pair<double, double>> out;
  for (std::size_t ix = 0; ix < k; ++ix) {
    for (std::size_t iy = 0; iy < k; ++iy) {
      out.emplace_back((static_cast<double>(ix) + 0.5) / static_cast<double>(k),
                       (static_cast<double>(iy) + 0.5) / static_cast<double>(k));
    }
  }
  return out;
}

Dataset synth_2d(const SynthSpec& spec, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ContractError("synth_2d: n must be positive");
  Rng rng = Rng::stream(seed, "synth_2d");
  Dataset ds;
  ds.samples = Tensor(Shape{n, 2});
  ds.labels.resize(n);
  if (spec.kind == SynthKind::gaussian_grid) {
    if (spec.grid == 0) throw ContractError("synth_2d: grid size must be positive");
    ds.name = "gaussian_grid" + std::to_string(spec.grid);
    const std::size_t comps = spec.grid * spec.grid;
    const double k = static_cast<double>(spec.grid);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = rng.index(comps);
      const double lx = static_cast<double>(c / spec.grid) + spec.component_std * rng.normal();
      const double ly = static_cast<double>(c % spec.grid) + spec.component_std * rng.normal();
      ds.samples(i, 0) = std::clamp((lx + 0.5) / k, 0.0, 1.0);
      ds.samples(i, 1) = std::clamp((ly + 0.5) / k, 0.0, 1.0);
      ds.labels[i] = static_cast<int>(c);
    }
    return ds;
  }
  ds.name = "two_moons";
  for (std::size_t i = 0; i < n; ++i) {
    const bool upper = rng.uniform() < 0.5;
    const double t = std::numbers::pi * rng.uniform();
    double x = upper ? std::cos(t) : 1.0 - std::cos(t);
    double y = upper ? std::sin(t) : 0.5 - std::sin(t);
    x += spec.moon_noise * rng.normal();
    y += spec.moon_noise * rng.normal();
    ds.samples(i, 0) = x;
    ds.samples(i, 1) = y;
    ds.labels[i] = upper ? 0 : 1;
  }
  for (std::size_t c = 0; c < 2; ++c) {
    double lo = ds.samples(0, c), hi = lo;
    for (std::size_t i = 0; i < n; ++i) {
      lo = std::min(lo, ds.samples(i, c));
      hi = std::max(hi, ds.samples(i, c));
    }
    const double span = hi > lo ? hi - lo : 1.0;
    for (std::size_t i = 0; i < n; ++i) ds.samples(i, c) = (ds.samples(i, c) - lo) / span;
  }
  return ds;
}

void write_csv(std::ostream& os, const Dataset& ds) {
  for (std::size_t c = 0; c < ds.dim(); ++c) os << (c ? "," : "") << 'x' << c;
  if (!ds.labels.empty()) os << ",label";
  os << '\n';
  const auto old = os.precision(17);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t c = 0; c < ds.dim(); ++c) os << (c ? "," : "") << ds.samples(i, c);
    if (!ds.labels.empty()) os << ',' << ds.labels[i];
    os << '\n';
  }
  os.precision(old);
}

BatchIterator::BatchIterator(std::size_t n, std::size_t batch_size, std::uint64_t seed)
    : n_(n), batch_size_(batch_size), rng_(Rng::stream(seed, "batches")), perm_(n) {
  if (batch_size_ < 2) throw ContractError("BatchIterator: batch_size must be >= 2");
  if (n_ == 0) throw ContractError("BatchIterator: empty dataset");
  cursor_ = n_;
}

void BatchIterator::start_epoch() {
  std::iota(perm_.begin(), perm_.end(), std::size_t{0});
  std::shuffle(perm_.begin(), perm_.end(), rng_.engine());
  cursor_ = 0;
}

std::vector<std::size_t> BatchIterator::next() {
  const std::size_t remaining = n_ - cursor_;
  if (remaining < 2) return {};
  const std::size_t take = std::min(batch_size_, remaining);
  std::vector<std::size_t> out(perm_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                               perm_.begin() + static_cast<std::ptrdiff_t>(cursor_ + take));
  cursor_ += take;
  return out;
}

std::size_t BatchIterator::batches_per_epoch() const {
  const std::size_t full = n_ / batch_size_;
  return full + ((n_ % batch_size_) >= 2 ? 1 : 0);
}

}  // namespace ldc::data
