#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qfp {

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

// Little-endian record writer. finish() appends the payload checksum.
class BinaryWriter {
 public:
  BinaryWriter(std::string_view magic, std::uint32_t version);

  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void str(std::string_view s);
  void bytes(std::span<const std::uint8_t> b);
  void f64s(std::span<const double> v);

  void write_to(const std::filesystem::path& path) const;

 private:
  std::vector<std::uint8_t> buf_;
};

// Validates magic, version and checksum on construction; throws FormatError.
class BinaryReader {
 public:
  BinaryReader(const std::filesystem::path& path, std::string_view magic,
               std::uint32_t version);

  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string str();
  std::vector<std::uint8_t> bytes(std::size_t n);
  std::vector<double> f64s(std::size_t n);

  // Throws unless every payload byte was consumed.
  void expect_end() const;

 private:
  void need(std::size_t n) const;

  std::string path_;
  std::vector<std::uint8_t> buf_;
  std::size_t pos_ = 0;
  std::size_t end_ = 0;
};

}  // namespace qfp
