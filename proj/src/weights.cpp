#include "palcas/weights.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "palcas/error.hpp"

namespace palcas {

static_assert(std::endian::native == std::endian::little, "checkpoint writer assumes a little-endian host");

std::uint64_t Tensor::numel() const {
  std::uint64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

const Tensor& ModelWeights::at(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t;
  throw ContractError("no tensor named " + name);
}

namespace {

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

void put_string(std::vector<std::uint8_t>& out, const std::string& s) {
  put(out, static_cast<std::uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& bytes, std::size_t start) : bytes_(bytes), pos_(start) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  void get_doubles(std::vector<double>& out, std::uint64_t n) {
    need(n * sizeof(double));
    out.resize(n);
    std::memcpy(out.data(), bytes_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (bytes_.size() - pos_ < n) throw SchemaError("checkpoint truncated");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_;
};

constexpr std::size_t kMagicLength = sizeof(kCheckpointMagic) - 1;

}  // namespace

std::vector<std::uint8_t> serialize(const ModelWeights& weights) {
  std::vector<std::uint8_t> out;
  out.reserve(serialized_size(weights));
  out.insert(out.end(), kCheckpointMagic, kCheckpointMagic + kMagicLength);
  put(out, kCheckpointVersion);
  put_string(out, weights.signature);
  put(out, static_cast<std::uint32_t>(weights.tensors.size()));
  for (const auto& t : weights.tensors) {
    if (t.numel() != t.data.size()) throw ContractError("tensor " + t.name + " has wrong element count");
    put_string(out, t.name);
    put(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) put(out, d);
    const auto* p = reinterpret_cast<const std::uint8_t*>(t.data.data());
    out.insert(out.end(), p, p + t.data.size() * sizeof(double));
  }
  return out;
}

ModelWeights deserialize(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kMagicLength || std::memcmp(bytes.data(), kCheckpointMagic, kMagicLength) != 0)
    throw SchemaError("not a checkpoint (bad magic)");
  Reader r(bytes, kMagicLength);
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw SchemaError("checkpoint format version " + std::to_string(version) + " is not supported");
  ModelWeights w;
  w.signature = r.get_string();
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    Tensor t;
    t.name = r.get_string();
    const auto rank = r.get<std::uint32_t>();
    for (std::uint32_t k = 0; k < rank; ++k) t.shape.push_back(r.get<std::uint64_t>());
    r.get_doubles(t.data, t.numel());
    w.tensors.push_back(std::move(t));
  }
  if (!r.done()) throw SchemaError("trailing bytes after checkpoint");
  return w;
}

void write_checkpoint(const std::filesystem::path& path, const ModelWeights& weights) {
  const auto bytes = serialize(weights);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

ModelWeights read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

std::uint64_t serialized_size(const ModelWeights& weights) {
  std::uint64_t n = kMagicLength + 4 + 4 + weights.signature.size() + 4;
  for (const auto& t : weights.tensors) n += 4 + t.name.size() + 4 + 8 * t.shape.size() + 8 * t.numel();
  return n;
}

std::uint64_t checksum(const ModelWeights& weights) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto b : serialize(weights)) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void check_compatible(const ModelWeights& expected, const ModelWeights& actual, const std::string& who) {
  const std::string prefix = who.empty() ? "" : who + ": ";
  if (expected.signature != actual.signature)
    throw SchemaError(prefix + "architecture signature mismatch (expected '" + expected.signature + "', got '" +
                      actual.signature + "')");
  if (expected.tensors.size() != actual.tensors.size())
    throw SchemaError(prefix + "tensor count mismatch");
  for (std::size_t i = 0; i < expected.tensors.size(); ++i) {
    const auto& a = expected.tensors[i];
    const auto& b = actual.tensors[i];
    if (a.name != b.name || a.shape != b.shape) throw SchemaError(prefix + "tensor layout mismatch at " + b.name);
  }
}

}  // namespace palcas
