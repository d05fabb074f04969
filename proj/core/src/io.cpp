#include "varimix/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "varimix/errors.hpp"

namespace varimix {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kHeaderName = "header.json";
constexpr const char* kPayloadName = "data.bin";
constexpr const char* kOrder = "row-major band-interleaved-by-pixel";

std::uint64_t byteswap64(std::uint64_t v) {
  v = ((v & 0x00000000FFFFFFFFULL) << 32) | ((v & 0xFFFFFFFF00000000ULL) >> 32);
  v = ((v & 0x0000FFFF0000FFFFULL) << 16) | ((v & 0xFFFF0000FFFF0000ULL) >> 16);
  return ((v & 0x00FF00FF00FF00FFULL) << 8) | ((v & 0xFF00FF00FF00FF00ULL) >> 8);
}

void write_payload(const fs::path& path, const double* data, std::size_t count) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * 8));
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint64_t v = byteswap64(std::bit_cast<std::uint64_t>(data[i]));
      out.write(reinterpret_cast<const char*>(&v), 8);
    }
  }
  if (!out) throw FormatError("write failed: " + path.string());
}

std::vector<double> read_payload(const fs::path& path, std::size_t expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open payload " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  if (size != expected * 8) {
    throw FormatError("payload size error: " + path.string() + " holds " +
                      std::to_string(size / 8) + " values, header implies " +
                      std::to_string(expected));
  }
  std::vector<double> values(expected);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(size));
  if constexpr (std::endian::native != std::endian::little) {
    for (auto& v : values) v = std::bit_cast<double>(byteswap64(std::bit_cast<std::uint64_t>(v)));
  }
  for (const double v : values) {
    if (!std::isfinite(v)) throw FormatError("non-finite value in " + path.string());
  }
  return values;
}

struct RawImage {
  json header;
  std::size_t height, width, bands;
  Matrix data;
};

void write_raw(const fs::path& dir, json header, const Matrix& data) {
  fs::create_directories(dir);
  header["dtype"] = "f64";
  header["order"] = kOrder;
  header["payload"] = kPayloadName;
  write_text_file(dir / kHeaderName, header.dump(2) + "\n");
  write_payload(dir / kPayloadName, data.data(), static_cast<std::size_t>(data.size()));
}

std::size_t positive_field(const json& header, const char* key) {
  if (!header.contains(key) || !header[key].is_number_integer() || header[key].get<long long>() <= 0) {
    throw FormatError(std::string("malformed header: '") + key + "' must be a positive integer");
  }
  return header[key].get<std::size_t>();
}

RawImage read_raw(const fs::path& dir) {
  json header;
  try {
    header = json::parse(read_text_file(dir / kHeaderName));
  } catch (const json::exception& e) {
    throw FormatError("malformed header " + (dir / kHeaderName).string() + ": " + e.what());
  }
  if (!header.is_object()) throw FormatError("malformed header: not an object");
  if (header.value("dtype", "") != "f64") throw FormatError("malformed header: dtype must be f64");
  if (header.contains("order") && header["order"] != kOrder) {
    throw FormatError("malformed header: unsupported order");
  }
  RawImage raw;
  raw.height = positive_field(header, "height");
  raw.width = positive_field(header, "width");
  raw.bands = positive_field(header, "bands");
  const std::string payload = header.value("payload", kPayloadName);
  const auto values = read_payload(dir / payload, raw.height * raw.width * raw.bands);
  raw.data = Eigen::Map<const Matrix>(values.data(), static_cast<Eigen::Index>(raw.bands),
                                      static_cast<Eigen::Index>(raw.height * raw.width));
  raw.header = std::move(header);
  return raw;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    auto field = line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                    : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
      field.remove_suffix(1);
    }
    fields.push_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw FormatError("not a number: '" + std::string(text) + "'");
  }
  if (!std::isfinite(v)) throw FormatError("non-finite value: '" + std::string(text) + "'");
  return v;
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

// ---------------------------------------------------------------- images

void save_image(const SpectralImage& image, const fs::path& dir) {
  json header = {{"name", image.name()},
                 {"height", image.height()},
                 {"width", image.width()},
                 {"bands", image.bands()}};
  if (!image.wavelengths().empty()) header["wavelengths"] = image.wavelengths();
  write_raw(dir, std::move(header), image.data());
}

SpectralImage load_image(const fs::path& dir) {
  auto raw = read_raw(dir);
  std::vector<double> wavelengths;
  if (raw.header.contains("wavelengths")) {
    wavelengths = raw.header["wavelengths"].get<std::vector<double>>();
  }
  try {
    return SpectralImage(raw.header.value("name", "image"), raw.height, raw.width,
                         std::move(raw.data), std::move(wavelengths));
  } catch (const Error& e) {
    throw FormatError(std::string("invalid image: ") + e.what());
  }
}

void save_endmember_field(const EndmemberField& field, std::size_t height, std::size_t width,
                          const fs::path& dir) {
  if (height * width != field.pixels()) throw DimensionError("save_endmember_field: bad geometry");
  const auto lp = static_cast<Eigen::Index>(field.bands() * field.classes());
  Matrix packed(lp, static_cast<Eigen::Index>(field.pixels()));
  for (std::size_t n = 0; n < field.pixels(); ++n) {
    packed.col(static_cast<Eigen::Index>(n)) = field.at(n).reshaped();
  }
  json header = {{"name", "endmember_field"},
                 {"kind", "endmember_field"},
                 {"height", height},
                 {"width", width},
                 {"bands", field.bands() * field.classes()},
                 {"field_bands", field.bands()},
                 {"field_classes", field.classes()},
                 {"domain", field.domain() == SignalDomain::reflectance ? "reflectance" : "transformed"}};
  write_raw(dir, std::move(header), packed);
}

EndmemberField load_endmember_field(const fs::path& dir) {
  const auto raw = read_raw(dir);
  const auto bands = positive_field(raw.header, "field_bands");
  const auto classes = positive_field(raw.header, "field_classes");
  if (bands * classes != raw.bands) {
    throw FormatError("endmember field header: field_bands * field_classes != bands");
  }
  std::vector<Matrix> per_pixel;
  per_pixel.reserve(raw.height * raw.width);
  for (Eigen::Index n = 0; n < raw.data.cols(); ++n) {
    per_pixel.push_back(raw.data.col(n).reshaped(static_cast<Eigen::Index>(bands),
                                                 static_cast<Eigen::Index>(classes)));
  }
  const auto domain = raw.header.value("domain", "reflectance") == "transformed"
                          ? SignalDomain::transformed
                          : SignalDomain::reflectance;
  return EndmemberField(std::move(per_pixel), domain);
}

// ---------------------------------------------------------------- library

void save_library(const SpectralLibrary& library, const fs::path& path) {
  std::string out = "class";
  for (std::size_t b = 0; b < library.bands(); ++b) out += ",b" + std::to_string(b);
  out += '\n';
  for (const auto& bundle : library.bundles()) {
    for (Eigen::Index j = 0; j < bundle.signatures.cols(); ++j) {
      out += bundle.name;
      for (Eigen::Index b = 0; b < bundle.signatures.rows(); ++b) {
        out += ',';
        out += format_double(bundle.signatures(b, j));
      }
      out += '\n';
    }
  }
  write_text_file(path, out);
}

SpectralLibrary load_library(const fs::path& path, SignalDomain domain) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw FormatError("library " + path.string() + " is empty");
  const auto header = split_csv(lines.front());
  if (header.size() < 2 || header.front() != "class") {
    throw FormatError("library header must be 'class,b0,...'");
  }
  const std::size_t bands = header.size() - 1;
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::vector<double>>> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split_csv(lines[i]);
    const std::string name(fields.front());
    if (name.empty()) throw FormatError("library row " + std::to_string(i) + ": empty class name");
    if (!rows.contains(name)) {
      order.push_back(name);
      rows[name];
    }
    // A row carrying only a class name declares the class without a signature.
    bool declaration_only = true;
    for (std::size_t f = 1; f < fields.size(); ++f) declaration_only &= fields[f].empty();
    if (declaration_only) continue;
    if (fields.size() != bands + 1) {
      throw FormatError("library row " + std::to_string(i) + " has " +
                        std::to_string(fields.size() - 1) + " values, header has " +
                        std::to_string(bands));
    }
    std::vector<double> sig(bands);
    for (std::size_t b = 0; b < bands; ++b) sig[b] = parse_double(fields[b + 1]);
    rows[name].push_back(std::move(sig));
  }
  std::vector<SpectralBundle> bundles;
  for (const auto& name : order) {
    const auto& sigs = rows[name];
    if (sigs.empty()) throw EmptyClassError("library class '" + name + "' has no signatures");
    Matrix m(static_cast<Eigen::Index>(bands), static_cast<Eigen::Index>(sigs.size()));
    for (std::size_t j = 0; j < sigs.size(); ++j) {
      for (std::size_t b = 0; b < bands; ++b) {
        m(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j)) = sigs[j][b];
      }
    }
    bundles.push_back({name, std::move(m)});
  }
  if (bundles.empty()) throw FormatError("library " + path.string() + " has no rows");
  return SpectralLibrary(std::move(bundles), domain);
}

// ---------------------------------------------------------------- abundances

void save_abundances(const AbundanceMap& abundances, const fs::path& path) {
  std::string out;
  const auto& names = abundances.class_names();
  for (std::size_t p = 0; p < names.size(); ++p) {
    if (p) out += ',';
    out += names[p];
  }
  out += '\n';
  const Matrix& f = abundances.fractions();
  for (Eigen::Index n = 0; n < f.cols(); ++n) {
    for (Eigen::Index p = 0; p < f.rows(); ++p) {
      if (p) out += ',';
      out += format_double(f(p, n));
    }
    out += '\n';
  }
  write_text_file(path, out);
}

AbundanceMap load_abundances(const fs::path& path) {
  const auto lines = read_lines(path);
  if (lines.size() < 2) throw FormatError("abundance file " + path.string() + " has no rows");
  std::vector<std::string> names;
  for (const auto f : split_csv(lines.front())) names.emplace_back(f);
  const auto classes = static_cast<Eigen::Index>(names.size());
  Matrix fractions(classes, static_cast<Eigen::Index>(lines.size() - 1));
  bool on_simplex = true;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split_csv(lines[i]);
    if (static_cast<Eigen::Index>(fields.size()) != classes) {
      throw FormatError("abundance row " + std::to_string(i) + ": expected " +
                        std::to_string(classes) + " values");
    }
    const auto n = static_cast<Eigen::Index>(i - 1);
    for (Eigen::Index p = 0; p < classes; ++p) {
      fractions(p, n) = parse_double(fields[static_cast<std::size_t>(p)]);
    }
    on_simplex &= std::abs(fractions.col(n).sum() - 1.0) <= 1e-6;
  }
  return AbundanceMap(std::move(fractions), std::move(names), on_simplex);
}

}  // namespace varimix
