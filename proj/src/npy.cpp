#include "demud/npy.hpp"

#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <optional>
#include <vector>

#include "demud/error.hpp"
#include "demud/io.hpp"

namespace demud {

static_assert(std::endian::native == std::endian::little, "NPY codec assumes a little-endian host");

namespace {

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kMagicSize = 6;
constexpr std::size_t kPreludeSize = kMagicSize + 2 + 2;  // magic, version, header length

// Minimal reader for the Python dict literal in an NPY header.
class HeaderParser {
 public:
  explicit HeaderParser(std::string_view text) : text_(text) {}

  struct Fields {
    std::optional<std::string> descr;
    std::optional<bool> fortran_order;
    std::optional<std::vector<std::size_t>> shape;
  };

  Fields parse() {
    Fields fields;
    expect('{');
    while (true) {
      skip_space();
      if (peek() == '}') {
        ++pos_;
        break;
      }
      const std::string key = parse_string();
      expect(':');
      skip_space();
      if (key == "descr") {
        fields.descr = parse_string();
      } else if (key == "fortran_order") {
        fields.fortran_order = parse_bool();
      } else if (key == "shape") {
        fields.shape = parse_tuple();
      } else {
        fail("unexpected header key '" + key + "'");
      }
      skip_space();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != '}') {
        fail("expected ',' or '}'");
      }
    }
    return fields;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw DataError("malformed NPY header: " + what);
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  void expect(char c) {
    skip_space();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string parse_string() {
    skip_space();
    const char quote = peek();
    if (quote != '\'' && quote != '"') fail("expected a quoted string");
    ++pos_;
    const auto end = text_.find(quote, pos_);
    if (end == std::string_view::npos) fail("unterminated string");
    std::string out(text_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return out;
  }

  bool parse_bool() {
    if (text_.substr(pos_, 4) == "True") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "False") {
      pos_ += 5;
      return false;
    }
    fail("expected True or False");
  }

  std::vector<std::size_t> parse_tuple() {
    expect('(');
    std::vector<std::size_t> dims;
    while (true) {
      skip_space();
      if (peek() == ')') {
        ++pos_;
        return dims;
      }
      if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected a dimension");
      std::size_t value = 0;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        value = value * 10 + static_cast<std::size_t>(peek() - '0');
        ++pos_;
      }
      dims.push_back(value);
      skip_space();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != ')') {
        fail("expected ',' or ')' in shape");
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

template <typename T>
RowMatrix decode_payload(std::string_view payload, std::size_t rows, std::size_t cols) {
  RowMatrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const std::size_t count = rows * cols;
  for (std::size_t i = 0; i < count; ++i) {
    T v;
    std::memcpy(&v, payload.data() + i * sizeof(T), sizeof(T));
    out.data()[i] = static_cast<double>(v);
  }
  return out;
}

}  // namespace

NpyArray parse_npy(std::string_view bytes) {
  if (bytes.size() < kPreludeSize || bytes.substr(0, kMagicSize) != std::string_view(kMagic, kMagicSize)) {
    throw DataError("not an NPY file (bad magic)");
  }
  const auto major = static_cast<unsigned char>(bytes[6]);
  const auto minor = static_cast<unsigned char>(bytes[7]);
  if (major != 1 || minor != 0) {
    throw DataError("unsupported NPY version " + std::to_string(major) + "." + std::to_string(minor));
  }
  const std::size_t header_len = static_cast<unsigned char>(bytes[8]) |
                                 (static_cast<std::size_t>(static_cast<unsigned char>(bytes[9])) << 8);
  if (bytes.size() < kPreludeSize + header_len) throw DataError("truncated NPY header");

  const auto fields = HeaderParser(bytes.substr(kPreludeSize, header_len)).parse();
  if (!fields.descr || !fields.fortran_order || !fields.shape) {
    throw DataError("NPY header missing descr, fortran_order or shape");
  }
  if (*fields.fortran_order) throw DataError("fortran-order NPY arrays are not supported");
  if (fields.shape->size() != 2) {
    throw DataError("expected a 2-D NPY array, got " + std::to_string(fields.shape->size()) + " dimensions");
  }

  NpyArray array;
  std::size_t item_size = 0;
  if (*fields.descr == "<f8") {
    array.dtype = NpyDtype::float64;
    item_size = 8;
  } else if (*fields.descr == "<f4") {
    array.dtype = NpyDtype::float32;
    item_size = 4;
  } else {
    throw DataError("unsupported NPY dtype '" + *fields.descr + "' (need <f4 or <f8)");
  }

  const std::size_t rows = (*fields.shape)[0];
  const std::size_t cols = (*fields.shape)[1];
  const std::string_view payload = bytes.substr(kPreludeSize + header_len);
  if (payload.size() != rows * cols * item_size) {
    throw DataError("NPY payload has " + std::to_string(payload.size()) + " bytes, expected " +
                    std::to_string(rows * cols * item_size));
  }
  array.values = array.dtype == NpyDtype::float64 ? decode_payload<double>(payload, rows, cols)
                                                  : decode_payload<float>(payload, rows, cols);
  return array;
}

NpyArray read_npy(const std::filesystem::path& path) {
  try {
    return parse_npy(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string encode_npy(const Eigen::Ref<const RowMatrix>& values, NpyDtype dtype) {
  const bool f64 = dtype == NpyDtype::float64;
  std::string header = std::string("{'descr': '") + (f64 ? "<f8" : "<f4") +
                       "', 'fortran_order': False, 'shape': (" + std::to_string(values.rows()) + ", " +
                       std::to_string(values.cols()) + "), }";
  const std::size_t unpadded = kPreludeSize + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');

  std::string out(kMagic, kMagicSize);
  out.push_back('\x01');
  out.push_back('\x00');
  out.push_back(static_cast<char>(header.size() & 0xFF));
  out.push_back(static_cast<char>((header.size() >> 8) & 0xFF));
  out += header;

  const std::size_t item_size = f64 ? 8 : 4;
  const std::size_t offset = out.size();
  out.resize(offset + static_cast<std::size_t>(values.size()) * item_size);
  char* dst = out.data() + offset;
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (f64) {
        const double v = values(i, j);
        std::memcpy(dst, &v, 8);
      } else {
        const auto v = static_cast<float>(values(i, j));
        std::memcpy(dst, &v, 4);
      }
      dst += item_size;
    }
  }
  return out;
}

void write_npy(const std::filesystem::path& path, const Eigen::Ref<const RowMatrix>& values, NpyDtype dtype) {
  write_file_atomic(path, encode_npy(values, dtype));
}

}  // namespace demud
