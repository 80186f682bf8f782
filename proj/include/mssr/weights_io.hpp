#pragma once

#include <cstdint>
#include <filesystem>

#include "mssr/model.hpp"

namespace mssr {

// Weight file layout (all integers and floats little-endian):
//   magic "MSSR" | version u32 (=1) | n u32 | m u32 | c u32 | scale u32
//   then one record per parameter in build order
//   record: rank u32 | dims[rank] u32 | payload (raw 32-bit floats)
// Weight records are rank 4 (C_out, C_in, 3, 3), bias records rank 1.
inline constexpr char kWeightMagic[4] = {'M', 'S', 'S', 'R'};
inline constexpr std::uint32_t kWeightVersion = 1;

struct WeightHeader {
    NetConfig cfg;
    std::uint32_t scale = 0;
};

// Exact on-disk size in bytes for a given config; used by tests and the
// loader's truncation diagnostics.
std::int64_t weight_file_size(const NetConfig& cfg);

void save_weights(const MSSRNet<float>& net, std::uint32_t scale,
                  const std::filesystem::path& path);
void save_weights(const MSSRNet<double>& net, std::uint32_t scale,
                  const std::filesystem::path& path);

// Reads only the header; cheap config/scale inspection.
WeightHeader peek_weights(const std::filesystem::path& path);

// Validates magic, version, per-record dims against the build order implied
// by the header, and the total element count against parameter_count.
// Truncated or mismatched records raise FormatError naming the record index.
MSSRNet<float> load_weights(const std::filesystem::path& path, std::uint32_t* scale_out = nullptr);
MSSRNet<double> load_weights_high(const std::filesystem::path& path,
                                  std::uint32_t* scale_out = nullptr);

}  // namespace mssr
