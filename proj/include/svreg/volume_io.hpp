#pragma once

// On-disk volumes.
//
// Native container: a text header `NAME.vol` plus a raw little-endian data file
// named in the header. Header lines (order fixed, '#' comments ignored):
//
//   format svreg-volume 1
//   dims N1 N2 N3
//   type f32|f64
//   kind scalar|vector|labels
//   layout row-major-x1-outer
//   data NAME.raw
//
// Vector fields store their three components as consecutive blocks. Label maps
// are stored as floating-point values of the requested type.
//
// NIfTI-1 import (.nii, single file) accepts float32, int16 and uint8 data and
// applies scl_slope/scl_inter (slope 0 means unscaled). NIfTI axes map to
// (x1, x2, x3) = (x, y, z); the data are transposed into the x1-outer layout.

#include <filesystem>
#include <string>

#include "svreg/field.hpp"

namespace svreg {

enum class ScalarType { f32, f64 };
enum class VolumeKind { scalar, vector, labels };

struct VolumeHeader {
  Grid::Dims dims{};
  ScalarType type = ScalarType::f64;
  VolumeKind kind = VolumeKind::scalar;
  std::string data_file;
};

std::string to_string(ScalarType t);
std::string to_string(VolumeKind k);
ScalarType parse_scalar_type(const std::string& s);

/// Reads only the header of a native volume.
VolumeHeader read_volume_header(const std::filesystem::path& header_path);

/// `path` may name the .vol header or omit the extension; the raw file is
/// written next to it.
void write_scalar(const std::filesystem::path& path, const ScalarField& f, ScalarType type);
void write_vector(const std::filesystem::path& path, const VectorField& v, ScalarType type);
void write_labels(const std::filesystem::path& path, const LabelMap& l, ScalarType type);

/// Readers accept native volumes (.vol) and, for scalars and labels, NIfTI-1
/// (.nii). Throws IoError ("cannot open ...") on missing files or bad content.
ScalarField read_scalar(const std::filesystem::path& path);
VectorField read_vector(const std::filesystem::path& path);
LabelMap read_labels(const std::filesystem::path& path);

}  // namespace svreg
