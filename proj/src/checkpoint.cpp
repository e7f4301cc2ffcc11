#include "checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "errors.hpp"

namespace scd {

namespace {

template <class T>
void put(std::vector<std::uint8_t>& out, T value) {
  std::uint64_t bits = 0;
  if constexpr (std::is_same_v<T, double>) {
    bits = std::bit_cast<std::uint64_t>(value);
  } else {
    bits = static_cast<std::uint64_t>(value);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <class T>
  T get() {
    need(sizeof(T));
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    if constexpr (std::is_same_v<T, double>) {
      return std::bit_cast<double>(bits);
    } else {
      return static_cast<T>(bits);
    }
  }

  std::string string(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw DataError("checkpoint truncated");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Network& net) {
  const ParamList params = net.parameters();
  std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  out.push_back(kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.items().size()));
  for (const auto& p : params.items()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out.insert(out.end(), p.name.begin(), p.name.end());
    const Shape& shape = p.tensor.shape();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(shape.size()));
    for (std::size_t d : shape) put<std::uint64_t>(out, d);
    for (double v : p.tensor.data()) put<double>(out, v);
  }
  return out;
}

void decode_checkpoint(Network& net, const std::vector<std::uint8_t>& bytes) {
  Reader in(bytes);
  if (in.string(sizeof(kCheckpointMagic)) != std::string(kCheckpointMagic, sizeof(kCheckpointMagic))) {
    throw DataError("not a checkpoint (bad magic)");
  }
  const auto version = in.get<std::uint8_t>();
  if (version != kCheckpointVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
  const ParamList params = net.parameters();
  const auto count = in.get<std::uint32_t>();
  if (count != params.items().size()) {
    throw DataError("checkpoint has " + std::to_string(count) + " tensors, network expects " +
                    std::to_string(params.items().size()));
  }
  // Decode fully before touching the network so a bad file leaves it intact.
  std::vector<std::vector<double>> values(count);
  for (std::uint32_t e = 0; e < count; ++e) {
    const NamedParam& p = params.items()[e];
    const std::string name = in.string(in.get<std::uint32_t>());
    if (name != p.name) throw DataError("checkpoint entry " + std::to_string(e) + " is '" + name + "', expected '" + p.name + "'");
    const auto rank = in.get<std::uint32_t>();
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(in.get<std::uint64_t>());
    if (shape != p.tensor.shape()) throw DataError("checkpoint shape mismatch for '" + name + "'");
    values[e].resize(p.tensor.numel());
    for (auto& v : values[e]) v = in.get<double>();
  }
  if (!in.done()) throw DataError("trailing bytes after checkpoint");
  for (std::uint32_t e = 0; e < count; ++e) {
    Tensor t = params.items()[e].tensor;
    std::copy(values[e].begin(), values[e].end(), t.mutable_data().begin());
  }
}

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(net);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

void load_checkpoint(Network& net, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    decode_checkpoint(net, bytes);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace scd
