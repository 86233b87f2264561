#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

namespace qdc::io {

/// Shortest round-trip decimal form, '.' separator, locale independent.
std::string fmt(double x);

/// Writes a row of pre-formatted fields terminated by '\n'.
void write_row(std::ostream& os, std::initializer_list<std::string_view> fields);

/// Binary (P5) PGM with 16-bit big-endian samples, row-major.
void write_pgm16(std::ostream& os, int width, int height, std::uint16_t maxval,
                 std::span<const std::uint16_t> pixels);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& p);

std::string read_file(const std::filesystem::path& p);

}  // namespace qdc::io
