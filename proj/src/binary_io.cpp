#include "qfp/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "qfp/error.hpp"

namespace qfp {

static_assert(std::endian::native == std::endian::little, "artifact files assume a little-endian host");

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t h) {
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t h) {
  return fnv1a({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()}, h);
}

std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

namespace {

template <typename T>
void append_raw(std::vector<std::uint8_t>& buf, T v) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  buf.insert(buf.end(), raw, raw + sizeof(T));
}

constexpr std::size_t kHeaderSize = 4 + 4 + 8;

}  // namespace

BinaryWriter::BinaryWriter(std::string_view magic, std::uint32_t version) {
  if (magic.size() != 4) throw FormatError("magic must be 4 bytes");
  buf_.insert(buf_.end(), magic.begin(), magic.end());
  append_raw(buf_, version);
  append_raw<std::uint64_t>(buf_, 0);  // payload length, patched on write
}

void BinaryWriter::u32(std::uint32_t v) { append_raw(buf_, v); }
void BinaryWriter::u64(std::uint64_t v) { append_raw(buf_, v); }
void BinaryWriter::f64(double v) { append_raw(buf_, v); }

void BinaryWriter::str(std::string_view s) {
  u64(s.size());
  buf_.insert(buf_.end(), s.begin(), s.end());
}

void BinaryWriter::bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }

void BinaryWriter::f64s(std::span<const double> v) {
  for (double x : v) f64(x);
}

void BinaryWriter::write_to(const std::filesystem::path& path) const {
  std::vector<std::uint8_t> out = buf_;
  const std::uint64_t payload = out.size() - kHeaderSize;
  std::memcpy(out.data() + 8, &payload, sizeof(payload));
  append_raw(out, fnv1a(std::span<const std::uint8_t>(out).subspan(kHeaderSize)));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("write failed: " + path.string());
}

BinaryReader::BinaryReader(const std::filesystem::path& path, std::string_view magic,
                           std::uint32_t version)
    : path_(path.string()) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path_);
  buf_.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());

  if (buf_.size() < kHeaderSize + 8 || std::memcmp(buf_.data(), magic.data(), 4) != 0)
    throw FormatError(path_ + ": bad magic header (expected " + std::string(magic) + ")");
  std::uint32_t file_version = 0;
  std::memcpy(&file_version, buf_.data() + 4, 4);
  if (file_version != version)
    throw FormatError(path_ + ": version " + std::to_string(file_version) + ", expected " +
                      std::to_string(version));
  std::uint64_t payload = 0;
  std::memcpy(&payload, buf_.data() + 8, 8);
  if (payload != buf_.size() - kHeaderSize - 8) throw FormatError(path_ + ": truncated file");

  end_ = kHeaderSize + payload;
  std::uint64_t stored = 0;
  std::memcpy(&stored, buf_.data() + end_, 8);
  const auto computed = fnv1a(std::span<const std::uint8_t>(buf_).subspan(kHeaderSize, payload));
  if (stored != computed) throw FormatError(path_ + ": checksum mismatch");
  pos_ = kHeaderSize;
}

void BinaryReader::need(std::size_t n) const {
  if (n > end_ - pos_) throw FormatError(path_ + ": unexpected end of payload");
}

std::uint32_t BinaryReader::u32() {
  need(4);
  std::uint32_t v;
  std::memcpy(&v, buf_.data() + pos_, 4);
  pos_ += 4;
  return v;
}

std::uint64_t BinaryReader::u64() {
  need(8);
  std::uint64_t v;
  std::memcpy(&v, buf_.data() + pos_, 8);
  pos_ += 8;
  return v;
}

double BinaryReader::f64() {
  need(8);
  double v;
  std::memcpy(&v, buf_.data() + pos_, 8);
  pos_ += 8;
  return v;
}

std::string BinaryReader::str() {
  const auto n = u64();
  need(n);
  std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
  pos_ += n;
  return s;
}

std::vector<std::uint8_t> BinaryReader::bytes(std::size_t n) {
  need(n);
  std::vector<std::uint8_t> out(buf_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                buf_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
  pos_ += n;
  return out;
}

std::vector<double> BinaryReader::f64s(std::size_t n) {
  if (n > (end_ - pos_) / 8) throw FormatError(path_ + ": unexpected end of payload");
  std::vector<double> out(n);
  std::memcpy(out.data(), buf_.data() + pos_, n * 8);
  pos_ += n * 8;
  return out;
}

void BinaryReader::expect_end() const {
  if (pos_ != end_) throw FormatError(path_ + ": trailing bytes in payload");
}

}  // namespace qfp
