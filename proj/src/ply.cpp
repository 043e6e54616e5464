#include "splatprep/ply.hpp"

#include <bit>
#include <algorithm>
#include <cctype>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "splatprep/error.hpp"

namespace splatprep {
namespace {

static_assert(std::endian::native == std::endian::little,
              "binary PLY I/O assumes a little-endian host");

enum class Scalar { i8, u8, i16, u16, i32, u32, f32, f64 };

std::optional<Scalar> parse_scalar(std::string_view name) {
  if (name == "char" || name == "int8") return Scalar::i8;
  if (name == "uchar" || name == "uint8") return Scalar::u8;
  if (name == "short" || name == "int16") return Scalar::i16;
  if (name == "ushort" || name == "uint16") return Scalar::u16;
  if (name == "int" || name == "int32") return Scalar::i32;
  if (name == "uint" || name == "uint32") return Scalar::u32;
  if (name == "float" || name == "float32") return Scalar::f32;
  if (name == "double" || name == "float64") return Scalar::f64;
  return std::nullopt;
}

std::size_t scalar_size(Scalar s) {
  switch (s) {
    case Scalar::i8:
    case Scalar::u8: return 1;
    case Scalar::i16:
    case Scalar::u16: return 2;
    case Scalar::i32:
    case Scalar::u32:
    case Scalar::f32: return 4;
    case Scalar::f64: return 8;
  }
  return 0;
}

template <class T>
T read_raw(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

double read_binary(Scalar s, const char* p) {
  switch (s) {
    case Scalar::i8: return read_raw<std::int8_t>(p);
    case Scalar::u8: return read_raw<std::uint8_t>(p);
    case Scalar::i16: return read_raw<std::int16_t>(p);
    case Scalar::u16: return read_raw<std::uint16_t>(p);
    case Scalar::i32: return read_raw<std::int32_t>(p);
    case Scalar::u32: return read_raw<std::uint32_t>(p);
    case Scalar::f32: return read_raw<float>(p);
    case Scalar::f64: return read_raw<double>(p);
  }
  return 0.0;
}

struct Property {
  std::string name;
  Scalar type = Scalar::f32;
  bool is_list = false;
  Scalar count_type = Scalar::u8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

struct Header {
  PlyFormat format = PlyFormat::ascii;
  std::vector<Element> elements;
  std::size_t body_offset = 0;
  std::size_t body_line = 0;
};

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && !(line[j] == ' ' || line[j] == '\t' || line[j] == '\r')) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

Header parse_header(std::string_view data) {
  Header h;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool saw_format = false;
  auto next_line = [&]() -> std::optional<std::string_view> {
    if (pos >= data.size()) return std::nullopt;
    std::size_t nl = data.find('\n', pos);
    if (nl == std::string_view::npos) nl = data.size();
    std::string_view line = data.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    return line;
  };

  auto first = next_line();
  if (!first || split_ws(*first) != std::vector<std::string_view>{"ply"})
    throw ParseError("missing 'ply' magic", 1);

  while (true) {
    auto line = next_line();
    if (!line) throw ParseError("header not terminated by end_header", line_no);
    auto tok = split_ws(*line);
    if (tok.empty()) continue;
    const std::string_view key = tok[0];
    if (key == "end_header") break;
    if (key == "comment" || key == "obj_info") continue;
    if (key == "format") {
      if (tok.size() != 3) throw ParseError("malformed format line", line_no);
      if (tok[1] == "ascii") {
        h.format = PlyFormat::ascii;
      } else if (tok[1] == "binary_little_endian") {
        h.format = PlyFormat::binary_le;
      } else {
        throw ParseError("unsupported format '" + std::string(tok[1]) + "'", line_no);
      }
      saw_format = true;
    } else if (key == "element") {
      if (tok.size() != 3) throw ParseError("malformed element line", line_no);
      Element e;
      e.name = std::string(tok[1]);
      auto [p, ec] = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), e.count);
      if (ec != std::errc{} || p != tok[2].data() + tok[2].size())
        throw ParseError("bad element count '" + std::string(tok[2]) + "'", line_no);
      h.elements.push_back(std::move(e));
    } else if (key == "property") {
      if (h.elements.empty()) throw ParseError("property before any element", line_no);
      Property prop;
      if (tok.size() == 5 && tok[1] == "list") {
        auto ct = parse_scalar(tok[2]);
        auto it = parse_scalar(tok[3]);
        if (!ct || !it) throw ParseError("unknown list property type", line_no);
        prop.is_list = true;
        prop.count_type = *ct;
        prop.type = *it;
        prop.name = std::string(tok[4]);
      } else if (tok.size() == 3) {
        auto t = parse_scalar(tok[1]);
        if (!t) throw ParseError("unknown property type '" + std::string(tok[1]) + "'", line_no);
        prop.type = *t;
        prop.name = std::string(tok[2]);
      } else {
        throw ParseError("malformed property line", line_no);
      }
      h.elements.back().properties.push_back(std::move(prop));
    } else {
      throw ParseError("unexpected header keyword '" + std::string(key) + "'", line_no);
    }
  }
  if (!saw_format) throw ParseError("missing format line", line_no);
  h.body_offset = pos;
  h.body_line = line_no + 1;
  return h;
}

// Column slots of the vertex element that feed a Point.
struct VertexLayout {
  int x = -1, y = -1, z = -1;
  int r = -1, g = -1, b = -1;
};

VertexLayout vertex_layout(const Element& e) {
  VertexLayout v;
  for (int i = 0; i < static_cast<int>(e.properties.size()); ++i) {
    const Property& p = e.properties[i];
    if (p.is_list) continue;
    const std::string& n = p.name;
    if (n == "x") v.x = i;
    else if (n == "y") v.y = i;
    else if (n == "z") v.z = i;
    else if (n == "red" || n == "r") v.r = i;
    else if (n == "green" || n == "g") v.g = i;
    else if (n == "blue" || n == "b") v.b = i;
  }
  return v;
}

std::uint8_t to_channel(double v) {
  if (!(v >= 0.0)) return 0;
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::lround(v));
}

Point make_point(const std::vector<double>& row, const VertexLayout& v, std::size_t index) {
  Point p;
  p.position = Vec3(row[v.x], row[v.y], row[v.z]);
  if (!p.position.allFinite()) throw DataError("non-finite coordinate", index);
  if (v.r >= 0) p.color.r = to_channel(row[v.r]);
  if (v.g >= 0) p.color.g = to_channel(row[v.g]);
  if (v.b >= 0) p.color.b = to_channel(row[v.b]);
  return p;
}

class AsciiCursor {
 public:
  AsciiCursor(std::string_view data, std::size_t offset, std::size_t line)
      : data_(data), pos_(offset), line_(line) {}

  // Returns false at end of input.
  bool next(double& value) {
    while (pos_ < data_.size()) {
      char c = data_[pos_];
      if (c == '\n') {
        ++line_;
        ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\r') {
        ++pos_;
      } else {
        break;
      }
    }
    if (pos_ >= data_.size()) return false;
    std::size_t end = pos_;
    while (end < data_.size() && !std::isspace(static_cast<unsigned char>(data_[end]))) ++end;
    const char* first = data_.data() + pos_;
    const char* last = data_.data() + end;
    if (*first == '+') ++first;
    auto [p, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || p != last)
      throw ParseError("bad numeric token '" + std::string(data_.substr(pos_, end - pos_)) + "'", line_);
    pos_ = end;
    return true;
  }

 private:
  std::string_view data_;
  std::size_t pos_;
  std::size_t line_;
};

}  // namespace

PointCloud load_ply(const std::filesystem::path& path, SourceTag tag) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  const Header h = parse_header(data);
  const Element* vertex = nullptr;
  for (const Element& e : h.elements)
    if (e.name == "vertex") vertex = &e;
  if (!vertex) throw ParseError("no vertex element", 1);
  const VertexLayout layout = vertex_layout(*vertex);
  if (layout.x < 0 || layout.y < 0 || layout.z < 0)
    throw ParseError("vertex element lacks x/y/z properties", 1);

  PointCloud cloud(tag);
  cloud.reserve(vertex->count);
  std::vector<double> row;

  if (h.format == PlyFormat::ascii) {
    AsciiCursor cur(data, h.body_offset, h.body_line);
    for (const Element& e : h.elements) {
      const bool is_vertex = &e == vertex;
      for (std::size_t i = 0; i < e.count; ++i) {
        row.assign(e.properties.size(), 0.0);
        for (std::size_t k = 0; k < e.properties.size(); ++k) {
          const Property& p = e.properties[k];
          double v = 0.0;
          if (!cur.next(v))
            throw TruncationError("element '" + e.name + "' declares " + std::to_string(e.count) +
                                  " items, file ends at item " + std::to_string(i));
          if (p.is_list) {
            const auto n = static_cast<std::size_t>(v);
            for (std::size_t j = 0; j < n; ++j) {
              double skip;
              if (!cur.next(skip)) throw TruncationError("list property truncated in '" + e.name + "'");
            }
          } else {
            row[k] = v;
          }
        }
        if (is_vertex) cloud.push_back(make_point(row, layout, i));
      }
      if (is_vertex) break;
    }
    return cloud;
  }

  std::size_t pos = h.body_offset;
  auto need = [&](std::size_t n, const Element& e, std::size_t i) {
    if (pos + n > data.size())
      throw TruncationError("element '" + e.name + "' declares " + std::to_string(e.count) +
                            " items, file ends at item " + std::to_string(i) + " (byte offset " +
                            std::to_string(pos) + ")");
  };
  for (const Element& e : h.elements) {
    const bool is_vertex = &e == vertex;
    for (std::size_t i = 0; i < e.count; ++i) {
      row.assign(e.properties.size(), 0.0);
      for (std::size_t k = 0; k < e.properties.size(); ++k) {
        const Property& p = e.properties[k];
        if (p.is_list) {
          need(scalar_size(p.count_type), e, i);
          const auto n = static_cast<std::size_t>(read_binary(p.count_type, data.data() + pos));
          pos += scalar_size(p.count_type);
          need(n * scalar_size(p.type), e, i);
          pos += n * scalar_size(p.type);
        } else {
          need(scalar_size(p.type), e, i);
          row[k] = read_binary(p.type, data.data() + pos);
          pos += scalar_size(p.type);
        }
      }
      if (is_vertex) cloud.push_back(make_point(row, layout, i));
    }
    if (is_vertex) break;
  }
  return cloud;
}

namespace {

template <class T>
void append_raw(std::string& buf, T v) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  buf.append(bytes, sizeof(T));
}

void append_ascii(std::string& buf, double v, int digits) {
  char tmp[64];
  auto [p, ec] = std::to_chars(tmp, tmp + sizeof(tmp), v, std::chars_format::general, digits);
  buf.append(tmp, p);
}

}  // namespace

void save_ply(const PointCloud& cloud, const std::filesystem::path& path,
              const PlyWriteOptions& options) {
  if (cloud.empty()) throw UsageError("refusing to write an empty point cloud");
  if (options.ascii_digits < 1 || options.ascii_digits > 17)
    throw UsageError("ascii_digits must be in [1, 17]");

  const bool f64 = options.precision == PlyPrecision::float64;
  const char* coord_type = f64 ? "double" : "float";

  std::string buf;
  buf += "ply\n";
  buf += options.format == PlyFormat::ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n";
  buf += "comment splatprep source ";
  buf += to_string(cloud.source_tag());
  buf += "\nelement vertex " + std::to_string(cloud.size()) + "\n";
  for (const char* axis : {"x", "y", "z"}) buf += std::string("property ") + coord_type + " " + axis + "\n";
  if (options.zero_normals)
    for (const char* n : {"nx", "ny", "nz"}) buf += std::string("property float ") + n + "\n";
  buf += "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";

  if (options.format == PlyFormat::binary_le) {
    const std::size_t stride = (f64 ? 24 : 12) + (options.zero_normals ? 12 : 0) + 3;
    buf.reserve(buf.size() + stride * cloud.size());
    for (const Point& p : cloud) {
      for (int a = 0; a < 3; ++a) {
        if (f64) append_raw(buf, p.position[a]);
        else append_raw(buf, static_cast<float>(p.position[a]));
      }
      if (options.zero_normals)
        for (int a = 0; a < 3; ++a) append_raw(buf, 0.0f);
      buf.push_back(static_cast<char>(p.color.r));
      buf.push_back(static_cast<char>(p.color.g));
      buf.push_back(static_cast<char>(p.color.b));
    }
  } else {
    const int digits = f64 ? options.ascii_digits : std::min(options.ascii_digits, 9);
    for (const Point& p : cloud) {
      for (int a = 0; a < 3; ++a) {
        const double v = f64 ? p.position[a] : static_cast<double>(static_cast<float>(p.position[a]));
        append_ascii(buf, v, digits);
        buf.push_back(' ');
      }
      if (options.zero_normals) buf += "0 0 0 ";
      buf += std::to_string(p.color.r) + " " + std::to_string(p.color.g) + " " +
             std::to_string(p.color.b) + "\n";
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace splatprep
