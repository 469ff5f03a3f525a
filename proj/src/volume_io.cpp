#include "svreg/volume_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace svreg {
namespace fs = std::filesystem;

namespace {

constexpr const char* kLayoutTag = "row-major-x1-outer";
constexpr const char* kFormatTag = "svreg-volume";

template <class T>
T byteswap_value(T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  std::reverse(b, b + sizeof(T));
  std::memcpy(&v, b, sizeof(T));
  return v;
}

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  else return byteswap_value(v);
}

fs::path header_path_for(const fs::path& p) {
  if (p.extension() == ".vol") return p;
  fs::path out = p;
  out += ".vol";
  return out;
}

std::string kind_name(VolumeKind k) { return to_string(k); }

std::size_t component_count(VolumeKind k) { return k == VolumeKind::vector ? 3 : 1; }

// Writes `blocks` (each of size n) as consecutive little-endian values.
void write_volume(const fs::path& path, const Grid& grid, ScalarType type, VolumeKind kind,
                  const std::vector<const real*>& blocks) {
  const fs::path header = header_path_for(path);
  fs::path raw = header;
  raw.replace_extension(".raw");

  if (header.has_parent_path() && !header.parent_path().empty()) {
    std::error_code ec;
    fs::create_directories(header.parent_path(), ec);
  }

  std::ofstream data(raw, std::ios::binary);
  if (!data) throw IoError("cannot open " + raw.string() + " for writing");
  const std::size_t n = grid.size();
  if (type == ScalarType::f32) {
    std::vector<float> buf(n);
    for (const real* b : blocks) {
      for (std::size_t i = 0; i < n; ++i) buf[i] = to_little(static_cast<float>(b[i]));
      data.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(n * sizeof(float)));
    }
  } else {
    std::vector<double> buf(n);
    for (const real* b : blocks) {
      for (std::size_t i = 0; i < n; ++i) buf[i] = to_little(static_cast<double>(b[i]));
      data.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(n * sizeof(double)));
    }
  }
  if (!data) throw IoError("write failed: " + raw.string());

  std::ofstream h(header);
  if (!h) throw IoError("cannot open " + header.string() + " for writing");
  const auto& d = grid.dims();
  h << "format " << kFormatTag << " 1\n"
    << "dims " << d[0] << ' ' << d[1] << ' ' << d[2] << '\n'
    << "type " << to_string(type) << '\n'
    << "kind " << kind_name(kind) << '\n'
    << "layout " << kLayoutTag << '\n'
    << "data " << raw.filename().string() << '\n';
  if (!h) throw IoError("write failed: " + header.string());
}

// Reads all components of a native volume as `real`.
std::pair<Grid, std::vector<std::vector<real>>> read_native(const fs::path& path,
                                                            VolumeKind expected) {
  const fs::path header = header_path_for(path);
  const VolumeHeader vh = read_volume_header(header);
  if (vh.kind != expected) {
    throw IoError(header.string() + ": expected kind " + kind_name(expected) + ", found " +
                  kind_name(vh.kind));
  }
  Grid grid = [&] {
    try {
      return Grid(vh.dims);
    } catch (const InvalidGridError& e) {
      throw IoError(header.string() + ": " + e.what());
    }
  }();

  const fs::path raw = header.parent_path() / vh.data_file;
  std::ifstream in(raw, std::ios::binary);
  if (!in) throw IoError("cannot open " + raw.string());

  const std::size_t n = grid.size();
  const std::size_t width = vh.type == ScalarType::f32 ? 4 : 8;
  const std::size_t ncomp = component_count(vh.kind);
  std::error_code ec;
  const auto file_size = fs::file_size(raw, ec);
  if (ec || file_size != n * width * ncomp) {
    throw IoError(raw.string() + ": size does not match header dims");
  }

  std::vector<std::vector<real>> comps(ncomp, std::vector<real>(n));
  for (auto& c : comps) {
    if (vh.type == ScalarType::f32) {
      std::vector<float> buf(n);
      in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(n * 4));
      for (std::size_t i = 0; i < n; ++i) c[i] = static_cast<real>(to_little(buf[i]));
    } else {
      std::vector<double> buf(n);
      in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(n * 8));
      for (std::size_t i = 0; i < n; ++i) c[i] = static_cast<real>(to_little(buf[i]));
    }
    if (!in) throw IoError("read failed: " + raw.string());
  }
  return {grid, std::move(comps)};
}

// --- NIfTI-1 -------------------------------------------------------------

template <class T>
T read_at(const std::vector<char>& bytes, std::size_t offset, bool swap) {
  T v;
  std::memcpy(&v, bytes.data() + offset, sizeof(T));
  return swap ? byteswap_value(v) : v;
}

std::pair<Grid, std::vector<real>> read_nifti(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<char> hdr(348);
  in.read(hdr.data(), 348);
  if (!in) throw IoError(path.string() + ": truncated NIfTI header");

  bool swap = false;
  if (read_at<std::int32_t>(hdr, 0, false) != 348) {
    if (read_at<std::int32_t>(hdr, 0, true) != 348) {
      throw IoError(path.string() + ": not a NIfTI-1 file");
    }
    swap = true;
  }
  if (std::memcmp(hdr.data() + 344, "n+1", 3) != 0) {
    throw IoError(path.string() + ": only single-file NIfTI-1 (n+1) is supported");
  }

  const auto ndim = read_at<std::int16_t>(hdr, 40, swap);
  if (ndim < 1 || ndim > 7) throw IoError(path.string() + ": bad NIfTI dim[0]");
  Grid::Dims dims{1, 1, 1};
  for (int d = 0; d < 3 && d < ndim; ++d) dims[d] = read_at<std::int16_t>(hdr, 42 + 2 * d, swap);
  for (int d = 3; d < ndim; ++d) {
    if (read_at<std::int16_t>(hdr, 42 + 2 * d, swap) > 1) {
      throw IoError(path.string() + ": only 3D NIfTI volumes are supported");
    }
  }
  const auto datatype = read_at<std::int16_t>(hdr, 70, swap);
  const float vox_offset = read_at<float>(hdr, 108, swap);
  float slope = read_at<float>(hdr, 112, swap);
  const float inter = read_at<float>(hdr, 116, swap);
  if (slope == 0 || !std::isfinite(slope)) slope = 1;

  std::size_t width = 0;
  switch (datatype) {
    case 2: width = 1; break;    // uint8
    case 4: width = 2; break;    // int16
    case 16: width = 4; break;   // float32
    default: throw IoError(path.string() + ": unsupported NIfTI datatype " + std::to_string(datatype));
  }

  Grid grid = [&] {
    try {
      return Grid(dims);
    } catch (const InvalidGridError& e) {
      throw IoError(path.string() + ": " + e.what());
    }
  }();
  const std::size_t n = grid.size();
  std::vector<char> raw(n * width);
  in.seekg(static_cast<std::streamoff>(vox_offset));
  in.read(raw.data(), std::streamsize(raw.size()));
  if (!in) throw IoError(path.string() + ": truncated NIfTI data");

  std::vector<real> out(n);
  const int nx = dims[0], ny = dims[1], nz = dims[2];
  std::size_t src = 0;
  for (int z = 0; z < nz; ++z) {
    for (int y = 0; y < ny; ++y) {
      for (int x = 0; x < nx; ++x, ++src) {
        double value = 0;
        if (datatype == 2) {
          value = static_cast<unsigned char>(raw[src]);
        } else if (datatype == 4) {
          value = read_at<std::int16_t>(raw, src * 2, swap);
        } else {
          value = read_at<float>(raw, src * 4, swap);
        }
        out[grid.index(x, y, z)] = static_cast<real>(value * slope + inter);
      }
    }
  }
  return {grid, std::move(out)};
}

bool is_nifti(const fs::path& p) { return p.extension() == ".nii"; }

}  // namespace

std::string to_string(ScalarType t) { return t == ScalarType::f32 ? "f32" : "f64"; }

std::string to_string(VolumeKind k) {
  switch (k) {
    case VolumeKind::scalar: return "scalar";
    case VolumeKind::vector: return "vector";
    case VolumeKind::labels: return "labels";
  }
  return "?";
}

ScalarType parse_scalar_type(const std::string& s) {
  if (s == "f32") return ScalarType::f32;
  if (s == "f64") return ScalarType::f64;
  throw ValidationError("unknown scalar type '" + s + "' (expected f32 or f64)");
}

VolumeHeader read_volume_header(const fs::path& header_path) {
  std::ifstream in(header_path);
  if (!in) throw IoError("cannot open " + header_path.string());

  VolumeHeader vh;
  bool seen_format = false, seen_dims = false, seen_type = false, seen_kind = false,
       seen_data = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "format") {
      std::string tag;
      int version = 0;
      ls >> tag >> version;
      if (tag != kFormatTag || version != 1) {
        throw IoError(header_path.string() + ": unsupported format line '" + line + "'");
      }
      seen_format = true;
    } else if (key == "dims") {
      ls >> vh.dims[0] >> vh.dims[1] >> vh.dims[2];
      if (!ls) throw IoError(header_path.string() + ": malformed dims line");
      seen_dims = true;
    } else if (key == "type") {
      std::string t;
      ls >> t;
      if (t == "f32") vh.type = ScalarType::f32;
      else if (t == "f64") vh.type = ScalarType::f64;
      else throw IoError(header_path.string() + ": unknown type '" + t + "'");
      seen_type = true;
    } else if (key == "kind") {
      std::string k;
      ls >> k;
      if (k == "scalar") vh.kind = VolumeKind::scalar;
      else if (k == "vector") vh.kind = VolumeKind::vector;
      else if (k == "labels") vh.kind = VolumeKind::labels;
      else throw IoError(header_path.string() + ": unknown kind '" + k + "'");
      seen_kind = true;
    } else if (key == "layout") {
      std::string l;
      ls >> l;
      if (l != kLayoutTag) throw IoError(header_path.string() + ": unsupported layout '" + l + "'");
    } else if (key == "data") {
      ls >> vh.data_file;
      seen_data = !vh.data_file.empty();
    } else {
      throw IoError(header_path.string() + ": unknown header key '" + key + "'");
    }
  }
  if (!(seen_format && seen_dims && seen_type && seen_kind && seen_data)) {
    throw IoError(header_path.string() + ": incomplete header");
  }
  return vh;
}

void write_scalar(const fs::path& path, const ScalarField& f, ScalarType type) {
  write_volume(path, f.grid(), type, VolumeKind::scalar, {f.data()});
}

void write_vector(const fs::path& path, const VectorField& v, ScalarType type) {
  write_volume(path, v.grid(), type, VolumeKind::vector, {v[0].data(), v[1].data(), v[2].data()});
}

void write_labels(const fs::path& path, const LabelMap& l, ScalarType type) {
  std::vector<real> values(l.size());
  for (std::size_t i = 0; i < l.size(); ++i) values[i] = static_cast<real>(l[i]);
  write_volume(path, l.grid(), type, VolumeKind::labels, {values.data()});
}

ScalarField read_scalar(const fs::path& path) {
  if (is_nifti(path)) {
    auto [grid, values] = read_nifti(path);
    return ScalarField(grid, std::move(values));
  }
  // Label volumes are valid scalar images too.
  const VolumeHeader vh = read_volume_header(header_path_for(path));
  auto [grid, comps] =
      read_native(path, vh.kind == VolumeKind::labels ? VolumeKind::labels : VolumeKind::scalar);
  ScalarField f(grid, std::move(comps[0]));
  if (!all_finite(f)) throw IoError(path.string() + ": non-finite values");
  return f;
}

VectorField read_vector(const fs::path& path) {
  auto [grid, comps] = read_native(path, VolumeKind::vector);
  VectorField v(ScalarField(grid, std::move(comps[0])), ScalarField(grid, std::move(comps[1])),
                ScalarField(grid, std::move(comps[2])));
  if (!all_finite(v)) throw IoError(path.string() + ": non-finite values");
  return v;
}

LabelMap read_labels(const fs::path& path) {
  Grid grid({4, 4, 4});
  std::vector<real> values;
  if (is_nifti(path)) {
    std::tie(grid, values) = read_nifti(path);
  } else {
    const VolumeHeader vh = read_volume_header(header_path_for(path));
    auto [g, comps] =
        read_native(path, vh.kind == VolumeKind::scalar ? VolumeKind::scalar : VolumeKind::labels);
    grid = g;
    values = std::move(comps[0]);
  }
  std::vector<std::int32_t> labels(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double r = std::nearbyint(static_cast<double>(values[i]));
    if (!(r >= 0) || r != static_cast<double>(values[i]) || r > 2147483647.0) {
      throw IoError(path.string() + ": label volume contains a non-integer or negative value");
    }
    labels[i] = static_cast<std::int32_t>(r);
  }
  return LabelMap(grid, std::move(labels));
}

}  // namespace svreg
