#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "nn/layers.hpp"

namespace hybridsynth::nn {

// Binary state of one network: every parameter then every buffer, each
// written as rank, dims, float32 payload. Loading checks every shape against
// the freshly built network and fails on the first mismatch.
void save_state(std::ostream& out, Layer& net);
void load_state(std::istream& in, Layer& net, const std::string& what);

// Little helpers shared by the checkpoint formats.
void write_u32(std::ostream& out, std::uint32_t v);
std::uint32_t read_u32(std::istream& in);
void write_u64(std::ostream& out, std::uint64_t v);
std::uint64_t read_u64(std::istream& in);
void write_string(std::ostream& out, const std::string& s);
std::string read_string(std::istream& in);

}  // namespace hybridsynth::nn
