#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mifno/tensor.hpp"

namespace mifno {

enum class EntryType : std::uint8_t { f64 = 0, c128 = 1, i64 = 2, u8 = 3, f32 = 4 };

std::size_t element_bytes(EntryType t);
std::string to_string(EntryType t);

/// One named array. The payload is kept as little-endian bytes exactly as stored.
struct Entry {
    std::string name;
    EntryType dtype = EntryType::f64;
    Shape shape;
    std::vector<std::uint8_t> payload;

    static Entry from_tensor(std::string name, const Tensor& t);
    /// Lossy single-precision storage of a real tensor.
    static Entry from_tensor_f32(std::string name, const Tensor& t);
    static Entry from_i64(std::string name, Shape shape, const std::vector<std::int64_t>& values);
    static Entry from_string(std::string name, const std::string& text);
    static Entry scalar(std::string name, double value);

    /// f64, f32 and c128 entries as a tensor (f32 widened to double).
    Tensor to_tensor() const;
    std::vector<std::int64_t> to_i64() const;
    std::string to_string() const;
    double to_scalar() const;
};

class Container {
public:
    /// Adds an entry; names must be unique.
    void add(Entry e);
    void put(Entry e);  // add or replace
    bool has(const std::string& name) const;
    const Entry& at(const std::string& name) const;
    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

private:
    std::vector<Entry> entries_;
};

/// File layout: "MFNO", u16 version, u8 little-endian flag, u8 reserved, u32
/// entry count; then per entry: u16 name length, name bytes, u8 dtype, u8 rank,
/// u64 dims[rank], u64 payload offset, u64 payload length, u32 CRC-32 of the
/// payload; then the payloads, each immediately followed by its CRC-32.
/// Written to a temporary file and renamed into place.
void write_container(const std::filesystem::path& path, const Container& c);
Container read_container(const std::filesystem::path& path);

/// Raw bytes of the serialized file (used for byte-identity checks).
std::vector<std::uint8_t> serialize_container(const Container& c);
Container parse_container(const std::vector<std::uint8_t>& bytes, const std::string& origin = "<memory>");

}  // namespace mifno
