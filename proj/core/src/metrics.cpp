#include "ldcvae/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <ostream>

#include "ldcvae/errors.hpp"
#include "ldcvae/kernel.hpp"

namespace ldc::metrics {

namespace {

Tensor stack_rows(const Tensor& a, const Tensor& b) {
  require_matrix(a, "stack_rows");
  require_matrix(b, "stack_rows");
  if (a.cols() != b.cols()) throw DimensionError("two-sample: samples have different dimensions");
  std::vector<double> data(a.storage());
  data.insert(data.end(), b.storage().begin(), b.storage().end());
  return Tensor(Shape{a.rows() + b.rows(), a.cols()}, std::move(data));
}

void check_sizes(const Tensor& a, const Tensor& b, const char* what) {
  require_matrix(a, what);
  require_matrix(b, what);
  if (a.cols() != b.cols()) throw DimensionError(std::string(what) + ": dimension mismatch");
  if (a.rows() < 2 || b.rows() < 2) throw ContractError(std::string(what) + ": both samples need >= 2 rows");
}

double mean_offdiag_kernel(const Tensor& s, double h) {
  const std::size_t n = s.rows();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) total += std::exp(-squared_distance(s.row(i), s.row(j)) / h);
  }
  return 2.0 * total / static_cast<double>(n * (n - 1));
}

}  // namespace

double pooled_median_bandwidth(const Tensor& a, const Tensor& b) { return median_bandwidth(stack_rows(a, b)); }

namespace {

// Swapping the samples must not change a statistic even in the last bit, so
// sums always run in one fixed argument order.
std::pair<const Tensor&, const Tensor&> canonical_pair(const Tensor& a, const Tensor& b) {
  const bool swap = b.rows() != a.rows() ? b.rows() < a.rows()
                                          : std::lexicographical_compare(b.data().begin(), b.data().end(),
                                                                         a.data().begin(), a.data().end());
  if (swap) return {b, a};
  return {a, b};
}

}  // namespace

TwoSampleResult mmd2_unbiased(const Tensor& a_in, const Tensor& b_in, double h) {
  check_sizes(a_in, b_in, "mmd2_unbiased");
  if (!(h > 0.0)) throw ContractError("mmd2_unbiased: bandwidth must be positive");
  const auto [a, b] = canonical_pair(a_in, b_in);
  double cross = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) cross += std::exp(-squared_distance(a.row(i), b.row(j)) / h);
  }
  cross /= static_cast<double>(a.rows() * b.rows());
  const double stat = mean_offdiag_kernel(a, h) + mean_offdiag_kernel(b, h) - 2.0 * cross;
  return {stat, a_in.rows(), b_in.rows(), h};
}

TwoSampleResult mmd2_unbiased(const Tensor& a, const Tensor& b) {
  check_sizes(a, b, "mmd2_unbiased");
  return mmd2_unbiased(a, b, pooled_median_bandwidth(a, b));
}

TwoSampleResult energy_distance(const Tensor& a, const Tensor& b) {
  check_sizes(a, b, "energy_distance");
  auto mean_dist = [](const Tensor& p, const Tensor& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.rows(); ++i) {
      for (std::size_t j = 0; j < q.rows(); ++j) s += std::sqrt(squared_distance(p.row(i), q.row(j)));
    }
    return s / static_cast<double>(p.rows() * q.rows());
  };
  const auto [p, q] = canonical_pair(a, b);
  const double stat = 2.0 * mean_dist(p, q) - mean_dist(p, p) - mean_dist(q, q);
  return {stat, a.rows(), b.rows(), 0.0};
}

PcaResult pca_project(const Tensor& points, std::size_t out_dims) {
  require_matrix(points, "pca_project");
  const std::size_t n = points.rows(), d = points.cols();
  if (n < 2) throw ContractError("pca_project: needs at least 2 points");
  if (out_dims == 0 || out_dims > d) throw ContractError("pca_project: out_dims must be in [1, d]");

  Tensor centered = points;
  for (std::size_t c = 0; c < d; ++c) {
    double mu = 0.0;
    for (std::size_t i = 0; i < n; ++i) mu += points(i, c);
    mu /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) centered(i, c) -= mu;
  }
  Tensor cov(Shape{d, d});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < d; ++p) {
      for (std::size_t q = p; q < d; ++q) cov(p, q) += centered(i, p) * centered(i, q);
    }
  }
  double trace = 0.0;
  for (std::size_t p = 0; p < d; ++p) {
    for (std::size_t q = p; q < d; ++q) {
      cov(p, q) /= static_cast<double>(n);
      cov(q, p) = cov(p, q);
    }
    trace += cov(p, p);
  }

  PcaResult res{Tensor(Shape{n, out_dims}), std::vector<double>(out_dims, 0.0), Tensor(Shape{out_dims, d}), false};
  if (trace <= 1e-300) {
    res.degenerate = true;
    return res;
  }

  for (std::size_t k = 0; k < out_dims; ++k) {
    // Deterministic start vector that is not orthogonal to a generic eigenvector.
    std::vector<double> v(d);
    double vnorm = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      v[c] = 1.0 + 0.1 * static_cast<double>(c + k);
      vnorm += v[c] * v[c];
    }
    for (auto& x : v) x /= std::sqrt(vnorm);
    double lambda = 0.0;
    for (int iter = 0; iter < 5000; ++iter) {
      std::vector<double> w(d, 0.0);
      for (std::size_t p = 0; p < d; ++p) {
        for (std::size_t q = 0; q < d; ++q) w[p] += cov(p, q) * v[q];
      }
      double norm = 0.0;
      for (double x : w) norm += x * x;
      norm = std::sqrt(norm);
      if (norm <= 1e-14 * trace) {
        lambda = 0.0;
        break;
      }
      double delta = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double nv = w[c] / norm;
        delta = std::max(delta, std::abs(nv - v[c]));
        v[c] = nv;
      }
      lambda = norm;
      if (delta < 1e-13) break;
    }
    std::size_t argmax = 0;
    for (std::size_t c = 1; c < d; ++c) {
      if (std::abs(v[c]) > std::abs(v[argmax])) argmax = c;
    }
    if (v[argmax] < 0.0) {
      for (auto& x : v) x = -x;
    }
    // Rayleigh quotient for the reported variance.
    double rq = 0.0;
    for (std::size_t p = 0; p < d; ++p) {
      for (std::size_t q = 0; q < d; ++q) rq += v[p] * cov(p, q) * v[q];
    }
    res.explained_variance[k] = lambda == 0.0 ? 0.0 : std::max(rq, 0.0);
    for (std::size_t c = 0; c < d; ++c) res.components(k, c) = v[c];
    for (std::size_t p = 0; p < d; ++p) {
      for (std::size_t q = 0; q < d; ++q) cov(p, q) -= rq * v[p] * v[q];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < out_dims; ++k) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += centered(i, c) * res.components(k, c);
      res.projection(i, k) = s;
    }
  }
  return res;
}

GrayImage image_grid(const Tensor& images, std::size_t rows, std::size_t cols, std::size_t side) {
  require_matrix(images, "image_grid");
  if (images.cols() != side * side) {
    throw DimensionError("image_grid: images have " + std::to_string(images.cols()) + " pixels, side " +
                         std::to_string(side) + " needs " + std::to_string(side * side));
  }
  if (rows == 0 || cols == 0 || images.rows() > rows * cols) {
    throw DimensionError("image_grid: " + std::to_string(images.rows()) + " images do not fit a " +
                         std::to_string(rows) + "x" + std::to_string(cols) + " grid");
  }
  GrayImage g;
  g.width = cols * side + (cols - 1);
  g.height = rows * side + (rows - 1);
  g.pixels.assign(g.width * g.height, kGridSeparator);
  for (std::size_t t = 0; t < rows * cols; ++t) {
    const std::size_t r0 = (t / cols) * (side + 1), c0 = (t % cols) * (side + 1);
    for (std::size_t y = 0; y < side; ++y) {
      for (std::size_t x = 0; x < side; ++x) {
        g.pixels[(r0 + y) * g.width + c0 + x] = t < images.rows() ? images(t, y * side + x) : 0.0;
      }
    }
  }
  return g;
}

std::string encode_pgm(const GrayImage& img) {
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.reserve(out.size() + img.pixels.size());
  for (double v : img.pixels) {
    out.push_back(static_cast<char>(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  const std::string bytes = encode_pgm(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("pgm: cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("pgm: write failed for '" + path.string() + "'");
}

PgmImage parse_pgm(const std::string& bytes) {
  std::size_t pos = 0;
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw ParseError("pgm: missing P5 magic", 0);
  pos = 2;
  auto skip_ws = [&] {
    while (pos < bytes.size()) {
      const unsigned char c = static_cast<unsigned char>(bytes[pos]);
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(c)) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&](const char* what) {
    skip_ws();
    const std::size_t start = pos;
    unsigned long v = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + static_cast<unsigned long>(bytes[pos] - '0');
      ++pos;
    }
    if (pos == start) throw ParseError(std::string("pgm: expected ") + what, start);
    return v;
  };
  PgmImage img;
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw ParseError("pgm: whitespace required after magic", pos);
  }
  img.width = read_uint("width");
  img.height = read_uint("height");
  img.maxval = static_cast<unsigned>(read_uint("maxval"));
  if (img.width == 0 || img.height == 0) throw ParseError("pgm: zero extent", pos);
  if (img.maxval == 0 || img.maxval > 255) throw ParseError("pgm: maxval must be in [1, 255]", pos);
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw ParseError("pgm: single whitespace required before raster", pos);
  }
  ++pos;
  const std::size_t need = img.width * img.height;
  if (bytes.size() - pos != need) throw ParseError("pgm: raster has wrong length", pos);
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  for (auto p : img.pixels) {
    if (p > img.maxval) throw ParseError("pgm: pixel exceeds maxval", pos);
  }
  return img;
}

void write_projection_csv(std::ostream& os, const Tensor& projection, const std::vector<std::string>& tags) {
  require_matrix(projection, "write_projection_csv");
  if (projection.cols() != 2 || tags.size() != projection.rows()) {
    throw DimensionError("write_projection_csv: need [n x 2] points and n tags");
  }
  const auto old = os.precision(17);
  os << "x,y,source\n";
  for (std::size_t i = 0; i < projection.rows(); ++i) {
    os << projection(i, 0) << ',' << projection(i, 1) << ',' << tags[i] << '\n';
  }
  os.precision(old);
}

}  // namespace ldc::metrics
