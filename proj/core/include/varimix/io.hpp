#pragma once

// File formats:
//   image      DIR/header.json + DIR/data.bin, little-endian f64, pixel-major
//              (all L bands of pixel 0, then pixel 1, ...).
//   library    CSV "class,b0,...,b{L-1}", one signature per row; rows sharing a
//              class name form one bundle, in order of first appearance.
//   abundances CSV with a class-name header and one row per pixel.

#include <filesystem>
#include <string>
#include <string_view>

#include "varimix/types.hpp"

namespace varimix {

void save_image(const SpectralImage& image, const std::filesystem::path& dir);
SpectralImage load_image(const std::filesystem::path& dir);

/// Endmember fields use the image format with L * P bands per pixel
/// (class-major: all L bands of class 0, then class 1, ...).
void save_endmember_field(const EndmemberField& field, std::size_t height, std::size_t width,
                          const std::filesystem::path& dir);
EndmemberField load_endmember_field(const std::filesystem::path& dir);

void save_library(const SpectralLibrary& library, const std::filesystem::path& path);
SpectralLibrary load_library(const std::filesystem::path& path,
                             SignalDomain domain = SignalDomain::reflectance);

void save_abundances(const AbundanceMap& abundances, const std::filesystem::path& path);
/// The sum-to-one flag is set when every row sums to one within 1e-6.
AbundanceMap load_abundances(const std::filesystem::path& path);

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);
double parse_double(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace varimix
