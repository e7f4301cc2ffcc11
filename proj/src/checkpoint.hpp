#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "networks.hpp"

namespace scd {

// Little-endian layout:
//   "SCDCKPT" (7 bytes), version u8 = 1, entry count u32,
//   per entry: name length u32, name bytes, rank u32, dims u64[rank],
//              values f64[prod(dims)]
// Entries follow Network::parameters() order.
inline constexpr char kCheckpointMagic[7] = {'S', 'C', 'D', 'C', 'K', 'P', 'T'};
inline constexpr std::uint8_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const Network& net);
// Overwrites the parameters of `net`; names, order and shapes must match.
void decode_checkpoint(Network& net, const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Network& net, const std::filesystem::path& path);
void load_checkpoint(Network& net, const std::filesystem::path& path);

}  // namespace scd
