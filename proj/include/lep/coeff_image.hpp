#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace lep {

// Quantization table as it appears in the stream: 64 values in zigzag order.
struct QuantTable {
  uint8_t id = 0;
  std::array<uint16_t, 64> values{};  // zigzag order
};

struct Component {
  uint32_t width_blocks = 0;
  uint32_t height_blocks = 0;
  uint8_t h_samp = 1;
  uint8_t v_samp = 1;
  uint8_t quant_id = 0;
  // Blocks in raster order; coefficients inside a block in raster order
  // with the DC prediction already resolved (absolute values).
  std::vector<std::array<int16_t, 64>> blocks;

  const std::array<int16_t, 64>& block(uint32_t bx, uint32_t by) const {
    return blocks[static_cast<size_t>(by) * width_blocks + bx];
  }
  std::array<int16_t, 64>& block(uint32_t bx, uint32_t by) {
    return blocks[static_cast<size_t>(by) * width_blocks + bx];
  }
};

struct CoefficientImage {
  std::vector<Component> components;    // 1..3 entries
  std::vector<QuantTable> quant_tables;
  // Original file bytes from SOI through the end of the SOS header, kept
  // verbatim so the JPEG can be rebuilt.
  std::vector<uint8_t> header_blob;

  uint64_t total_blocks() const {
    uint64_t n = 0;
    for (const auto& c : components) n += c.blocks.size();
    return n;
  }
};

class ByteWriter;
class ByteReader;

// Geometry + quant tables + header blob, without coefficient data. Shared
// between the coefficient dump and the compressed container.
void write_skeleton(ByteWriter& w, const CoefficientImage& img);
CoefficientImage read_skeleton(ByteReader& r);  // blocks left unallocated

// Coefficient dump ("LPCF"): little-endian, versioned, with a trailing CRC32
// over everything after the version field.
constexpr uint16_t kCoeffDumpVersion = 1;

std::vector<uint8_t> dump_coefficients(const CoefficientImage& img);
CoefficientImage load_coefficients(std::span<const uint8_t> data);

void write_file(const std::filesystem::path& p, std::span<const uint8_t> data);
std::vector<uint8_t> read_file(const std::filesystem::path& p);

}  // namespace lep
