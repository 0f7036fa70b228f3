#pragma once

#include "memlab/common.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

namespace memlab::detail {

class BinaryWriter {
 public:
  explicit BinaryWriter(const std::string& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw InputError("cannot open " + path + " for writing");
  }

  template <typename T>
  void put(T value) {
    static_assert(std::is_arithmetic_v<T>);
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }

  void put_bytes(const char* data, std::size_t size) { out_.write(data, static_cast<std::streamsize>(size)); }

  void put_string(const std::string& s) {
    put<std::uint64_t>(s.size());
    put_bytes(s.data(), s.size());
  }

  void put_doubles(const double* data, std::size_t count) {
    put_bytes(reinterpret_cast<const char*>(data), count * sizeof(double));
  }

  void finish() {
    out_.flush();
    if (!out_) throw InputError("write to " + path_ + " failed");
  }

 private:
  std::ofstream out_;
  std::string path_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw InputError("cannot open " + path);
  }

  template <typename T>
  T get() {
    static_assert(std::is_arithmetic_v<T>);
    T value{};
    read(reinterpret_cast<char*>(&value), sizeof(T));
    return value;
  }

  std::string get_string(std::size_t limit = 1u << 20) {
    const auto size = get<std::uint64_t>();
    if (size > limit) throw DataError(path_ + ": corrupt string length");
    std::string s(size, '\0');
    read(s.data(), size);
    return s;
  }

  void get_doubles(double* data, std::size_t count) { read(reinterpret_cast<char*>(data), count * sizeof(double)); }

  void expect_end() {
    in_.peek();
    if (!in_.eof()) throw DataError(path_ + ": trailing bytes");
  }

 private:
  void read(char* data, std::size_t size) {
    in_.read(data, static_cast<std::streamsize>(size));
    if (static_cast<std::size_t>(in_.gcount()) != size) throw DataError(path_ + ": truncated file");
  }

  std::ifstream in_;
  std::string path_;
};

}  // namespace memlab::detail
