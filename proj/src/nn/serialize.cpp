#include "nn/serialize.hpp"

#include <cstring>
#include <vector>

#include "common/error.hpp"

namespace hybridsynth::nn {

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw DataError("checkpoint truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

void write_u64(std::ostream& out, std::uint64_t v) {
  write_u32(out, static_cast<std::uint32_t>(v));
  write_u32(out, static_cast<std::uint32_t>(v >> 32));
}

std::uint64_t read_u64(std::istream& in) {
  const std::uint64_t lo = read_u32(in);
  const std::uint64_t hi = read_u32(in);
  return lo | (hi << 32);
}

void write_string(std::ostream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const std::uint64_t n = read_u64(in);
  if (n > (1ULL << 32)) throw DataError("checkpoint string length implausible");
  std::string s(n, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(n))) throw DataError("checkpoint truncated");
  return s;
}

namespace {

void write_tensor(std::ostream& out, const Tensor& t) {
  write_u32(out, static_cast<std::uint32_t>(t.shape.size()));
  for (int d : t.shape) write_u32(out, static_cast<std::uint32_t>(d));
  for (float f : t.data) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    write_u32(out, bits);
  }
}

void read_tensor(std::istream& in, Tensor& t, const std::string& what, std::size_t index) {
  const std::uint32_t rank = read_u32(in);
  std::vector<int> shape(rank);
  for (auto& d : shape) d = static_cast<int>(read_u32(in));
  if (shape != t.shape) {
    Tensor probe(shape);
    throw DataError(what + ": tensor " + std::to_string(index) + " has shape " +
                    probe.shape_string() + ", network expects " + t.shape_string());
  }
  for (auto& f : t.data) {
    const std::uint32_t bits = read_u32(in);
    std::memcpy(&f, &bits, 4);
  }
}

}  // namespace

void save_state(std::ostream& out, Layer& net) {
  std::vector<Parameter*> params;
  net.collect_parameters(params);
  std::vector<Tensor*> buffers;
  net.collect_buffers(buffers);
  write_u32(out, static_cast<std::uint32_t>(params.size()));
  write_u32(out, static_cast<std::uint32_t>(buffers.size()));
  for (auto* p : params) write_tensor(out, p->value);
  for (auto* b : buffers) write_tensor(out, *b);
}

void load_state(std::istream& in, Layer& net, const std::string& what) {
  std::vector<Parameter*> params;
  net.collect_parameters(params);
  std::vector<Tensor*> buffers;
  net.collect_buffers(buffers);
  const std::uint32_t np = read_u32(in);
  const std::uint32_t nb = read_u32(in);
  if (np != params.size() || nb != buffers.size())
    throw DataError(what + ": checkpoint holds " + std::to_string(np) + " parameter tensors, network has " +
                    std::to_string(params.size()));
  std::size_t index = 0;
  for (auto* p : params) read_tensor(in, p->value, what, index++);
  for (auto* b : buffers) read_tensor(in, *b, what, index++);
}

}  // namespace hybridsynth::nn
