#include "ldcvae/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <unordered_map>

#include "ldcvae/errors.hpp"

namespace ldc {

namespace {

constexpr char kMagic[] = {'L', 'D', 'C', 'V', '1'};

template <class U>
void put_le(std::string& buf, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t pos() const { return pos_; }

  template <class U>
  U get_le(const char* what) {
    need(sizeof(U), what);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return v;
  }

  std::string get_bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) throw ParseError(std::string("checkpoint: truncated ") + what, pos_);
  }
  std::string bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& records) {
  std::string buf(kMagic, sizeof(kMagic));
  for (const auto& r : records) {
    put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(r.name.size()));
    buf += r.name;
    put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(r.value.rank()));
    for (auto e : r.value.shape()) put_le<std::uint64_t>(buf, e);
    for (double v : r.value.data()) put_le<std::uint64_t>(buf, std::bit_cast<std::uint64_t>(v));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("checkpoint: cannot open '" + path.string() + "' for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("checkpoint: write failed for '" + path.string() + "'");
}

std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open '" + path.string() + "'");
  Reader rd(std::string(std::istreambuf_iterator<char>(in), {}));
  if (rd.get_bytes(sizeof(kMagic), "magic") != std::string(kMagic, sizeof(kMagic))) {
    throw ParseError("checkpoint: bad magic in '" + path.string() + "'", 0);
  }
  std::vector<NamedTensor> records;
  while (!rd.done()) {
    NamedTensor r;
    const auto name_len = rd.get_le<std::uint32_t>("name length");
    r.name = rd.get_bytes(name_len, "name");
    const auto rank = rd.get_le<std::uint32_t>("rank");
    if (rank > 8) throw ParseError("checkpoint: implausible rank " + std::to_string(rank), rd.pos() - 4);
    Shape shape(rank);
    for (auto& e : shape) e = rd.get_le<std::uint64_t>("extent");
    std::vector<double> data(shape_numel(shape));
    for (auto& v : data) v = std::bit_cast<double>(rd.get_le<std::uint64_t>("values"));
    r.value = Tensor(std::move(shape), std::move(data));
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<NamedTensor> snapshot(const std::vector<const Parameter*>& params) {
  std::vector<NamedTensor> out;
  out.reserve(params.size());
  for (const Parameter* p : params) out.push_back({p->name, p->value});
  return out;
}

void restore(const std::vector<NamedTensor>& records, const std::vector<Parameter*>& params) {
  std::unordered_map<std::string, const Tensor*> by_name;
  for (const auto& r : records) by_name[r.name] = &r.value;
  for (Parameter* p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) throw ContractError("checkpoint: missing parameter '" + p->name + "'");
    if (it->second->shape() != p->value.shape()) {
      throw DimensionError("checkpoint: parameter '" + p->name + "' has shape " +
                           shape_str(it->second->shape()) + ", model expects " + shape_str(p->value.shape()));
    }
    p->value = *it->second;
    p->zero_grad();
  }
}

}  // namespace ldc
