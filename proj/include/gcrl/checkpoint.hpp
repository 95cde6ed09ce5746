#pragma once

// Self-describing binary container used for checkpoints.
//
//   magic "GCRLCKPT" | u32 format_version | u64 record_count | records...
//   record: u32 name_len | name | u8 kind | u64 rank | u64 dims[rank] | payload
//
// kind 0 = float64 array, 1 = int64 array, 2 = UTF-8 string (rank 1, dims =
// byte count). Integers and doubles are stored little-endian, doubles as
// their raw IEEE-754 bits, so a load/save cycle reproduces the file exactly.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gcrl/mlp.hpp"

namespace gcrl {

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

struct Record {
  enum class Kind : std::uint8_t { f64 = 0, i64 = 1, text = 2 };
  Kind kind = Kind::f64;
  std::vector<std::uint64_t> dims;
  std::vector<double> f64;
  std::vector<std::int64_t> i64;
  std::string text;

  friend bool operator==(const Record&, const Record&) = default;
};

class Container {
 public:
  void put_f64(const std::string& name, std::vector<double> values, std::vector<std::uint64_t> dims = {});
  void put_i64(const std::string& name, std::vector<std::int64_t> values);
  void put_text(const std::string& name, std::string value);

  bool has(const std::string& name) const;
  const Record& get(const std::string& name) const;
  const std::vector<double>& f64(const std::string& name) const;
  const std::vector<std::int64_t>& i64(const std::string& name) const;
  const std::string& text(const std::string& name) const;
  std::int64_t scalar_i64(const std::string& name) const;
  double scalar_f64(const std::string& name) const;

  const std::vector<std::string>& names() const { return order_; }
  std::uint32_t version() const { return version_; }

  std::vector<std::uint8_t> serialize() const;
  static Container deserialize(std::span<const std::uint8_t> bytes);

  void save(const std::string& path) const;
  static Container load(const std::string& path);

  friend bool operator==(const Container& a, const Container& b) {
    return a.order_ == b.order_ && a.records_ == b.records_;
  }

 private:
  Record& insert(const std::string& name);

  std::vector<std::string> order_;
  std::map<std::string, Record> records_;
  std::uint32_t version_ = kCheckpointFormatVersion;
};

// prefix.layer_dims, prefix.activation, prefix.bound, prefix.W<i>, prefix.b<i>
void put_mlp(Container& c, const std::string& prefix, const Mlp& net);
Mlp get_mlp(const Container& c, const std::string& prefix);

void put_adam(Container& c, const std::string& prefix, const AdamState& opt);
AdamState get_adam(const Container& c, const std::string& prefix);

}  // namespace gcrl
