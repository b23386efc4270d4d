#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

#include "json.hpp"

namespace hqf::cli {

/// %.17g; non-finite values print as nan / inf / -inf.
std::string fmt(double v);

/// Serializes with every float at 17 significant digits (non-finite as
/// null), keys sorted, two-space indent, trailing newline.
std::string dump_json(const nlohmann::json& j);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(const std::string& bytes);

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}

  class Row {
   public:
    Row& operator<<(double v);
    Row& operator<<(long long v);
    Row& operator<<(int v) { return *this << static_cast<long long>(v); }
    Row& operator<<(std::size_t v) { return *this << static_cast<long long>(v); }
    Row& operator<<(const std::string& v);
    Row& operator<<(const char* v) { return *this << std::string(v); }

   private:
    friend class Csv;
    std::vector<std::string> cells_;
  };

  Row& row();
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<Row> rows_;
};

/// Output directory plus the list of files written, in write order.
class Artifacts {
 public:
  explicit Artifacts(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path path(const std::string& name) const { return dir_ / name; }

  void write_json(const std::string& name, const nlohmann::json& j);
  void write_csv(const std::string& name, const Csv& t);
  /// Records a field-file pair written by the caller under `stem`.
  void add_field(const std::string& stem);

  const std::vector<std::string>& files() const { return files_; }

 private:
  void write_text(const std::string& name, const std::string& text);

  std::filesystem::path dir_;
  std::vector<std::string> files_;
};

}  // namespace hqf::cli
