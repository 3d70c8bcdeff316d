#include "mifno/container.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <unistd.h>

#include "mifno/errors.hpp"

namespace mifno {

namespace {

constexpr char kMagic[4] = {'M', 'F', 'N', 'O'};
constexpr std::uint16_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 12;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
    using U = std::make_unsigned_t<T>;
    U u = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
}

template <typename T>
T get_le(const std::uint8_t* p) {
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<std::make_unsigned_t<T>>(p[i]) << (8 * i);
    return static_cast<T>(u);
}

std::uint32_t crc_of(const std::uint8_t* data, std::size_t n) {
    uLong crc = crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed large payloads in chunks.
    while (n > 0) {
        const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
        crc = crc32(crc, data, chunk);
        data += chunk;
        n -= chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

class Reader {
public:
    Reader(const std::vector<std::uint8_t>& bytes, std::string origin) : bytes_(bytes), origin_(std::move(origin)) {}
    const std::uint8_t* take(std::size_t n, const char* what) {
        if (n > bytes_.size() || pos_ > bytes_.size() - n)
            throw ContainerError(ContainerError::Kind::truncated,
                                 origin_ + ": truncated file while reading " + std::string(what));
        const std::uint8_t* p = bytes_.data() + pos_;
        pos_ += n;
        return p;
    }
    template <typename T>
    T read(const char* what) {
        return get_le<T>(take(sizeof(T), what));
    }
    std::size_t pos() const { return pos_; }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::string origin_;
    std::size_t pos_ = 0;
};

}  // namespace

std::size_t element_bytes(EntryType t) {
    switch (t) {
        case EntryType::f64: return 8;
        case EntryType::c128: return 16;
        case EntryType::i64: return 8;
        case EntryType::u8: return 1;
        case EntryType::f32: return 4;
    }
    throw ContractError("unknown entry type");
}

std::string to_string(EntryType t) {
    switch (t) {
        case EntryType::f64: return "f64";
        case EntryType::c128: return "c128";
        case EntryType::i64: return "i64";
        case EntryType::u8: return "u8";
        case EntryType::f32: return "f32";
    }
    return "?";
}

Entry Entry::from_tensor(std::string name, const Tensor& t) {
    Entry e{std::move(name), t.is_complex() ? EntryType::c128 : EntryType::f64, t.shape(), {}};
    e.payload.reserve(t.raw().size() * 8);
    for (double v : t.raw()) put_le(e.payload, std::bit_cast<std::uint64_t>(v));
    return e;
}

Entry Entry::from_tensor_f32(std::string name, const Tensor& t) {
    if (t.is_complex()) throw ContractError("f32 storage is only defined for real arrays");
    Entry e{std::move(name), EntryType::f32, t.shape(), {}};
    e.payload.reserve(t.size() * 4);
    for (double v : t.values()) put_le(e.payload, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    return e;
}

Entry Entry::from_i64(std::string name, Shape shape, const std::vector<std::int64_t>& values) {
    if (shape_size(shape) != values.size()) throw ContractError("from_i64: value count does not match shape");
    Entry e{std::move(name), EntryType::i64, std::move(shape), {}};
    for (auto v : values) put_le(e.payload, v);
    return e;
}

Entry Entry::from_string(std::string name, const std::string& text) {
    Entry e{std::move(name), EntryType::u8, {text.size()}, {}};
    e.payload.assign(text.begin(), text.end());
    return e;
}

Entry Entry::scalar(std::string name, double value) { return from_tensor(std::move(name), Tensor({1}, std::vector<double>{value})); }

Tensor Entry::to_tensor() const {
    const std::size_t n = shape_size(shape);
    switch (dtype) {
        case EntryType::f64: {
            std::vector<double> v(n);
            for (std::size_t i = 0; i < n; ++i) v[i] = std::bit_cast<double>(get_le<std::uint64_t>(&payload[8 * i]));
            return Tensor(shape, std::move(v));
        }
        case EntryType::f32: {
            std::vector<double> v(n);
            for (std::size_t i = 0; i < n; ++i) v[i] = std::bit_cast<float>(get_le<std::uint32_t>(&payload[4 * i]));
            return Tensor(shape, std::move(v));
        }
        case EntryType::c128: {
            Tensor t(shape, DType::complex);
            auto raw = t.raw();
            for (std::size_t i = 0; i < raw.size(); ++i)
                raw[i] = std::bit_cast<double>(get_le<std::uint64_t>(&payload[8 * i]));
            return t;
        }
        default: throw DataError("entry '" + name + "' of type " + mifno::to_string(dtype) + " is not a float array");
    }
}

std::vector<std::int64_t> Entry::to_i64() const {
    if (dtype != EntryType::i64) throw DataError("entry '" + name + "' is not an i64 array");
    std::vector<std::int64_t> v(shape_size(shape));
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = get_le<std::int64_t>(&payload[8 * i]);
    return v;
}

std::string Entry::to_string() const {
    if (dtype != EntryType::u8) throw DataError("entry '" + name + "' is not a byte string");
    return std::string(payload.begin(), payload.end());
}

double Entry::to_scalar() const {
    const Tensor t = to_tensor();
    if (t.size() != 1 || t.is_complex()) throw DataError("entry '" + name + "' is not a real scalar");
    return t.values()[0];
}

void Container::add(Entry e) {
    if (has(e.name)) throw ContractError("duplicate container entry '" + e.name + "'");
    entries_.push_back(std::move(e));
}

void Container::put(Entry e) {
    for (auto& x : entries_)
        if (x.name == e.name) {
            x = std::move(e);
            return;
        }
    entries_.push_back(std::move(e));
}

bool Container::has(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return true;
    return false;
}

const Entry& Container::at(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return e;
    throw DataError("container has no entry '" + name + "'");
}

std::vector<std::uint8_t> serialize_container(const Container& c) {
    std::set<std::string> names;
    std::size_t table_bytes = 0;
    for (const auto& e : c.entries()) {
        if (!names.insert(e.name).second) throw ContractError("duplicate container entry '" + e.name + "'");
        if (e.name.size() > 0xFFFF || e.shape.size() > 0xFF)
            throw ContractError("entry '" + e.name + "': name or rank too large");
        if (e.payload.size() != shape_size(e.shape) * element_bytes(e.dtype))
            throw ContractError("entry '" + e.name + "': payload size does not match shape and dtype");
        table_bytes += 2 + e.name.size() + 2 + 8 * e.shape.size() + 8 + 8 + 4;
    }
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    put_le<std::uint16_t>(out, kVersion);
    put_le<std::uint8_t>(out, 1);  // little-endian payloads
    put_le<std::uint8_t>(out, 0);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.size()));

    std::uint64_t offset = kHeaderBytes + table_bytes;
    std::vector<std::uint32_t> crcs;
    for (const auto& e : c.entries()) {
        const std::uint32_t crc = crc_of(e.payload.data(), e.payload.size());
        crcs.push_back(crc);
        put_le<std::uint16_t>(out, static_cast<std::uint16_t>(e.name.size()));
        out.insert(out.end(), e.name.begin(), e.name.end());
        put_le<std::uint8_t>(out, static_cast<std::uint8_t>(e.dtype));
        put_le<std::uint8_t>(out, static_cast<std::uint8_t>(e.shape.size()));
        for (auto d : e.shape) put_le<std::uint64_t>(out, d);
        put_le<std::uint64_t>(out, offset);
        put_le<std::uint64_t>(out, e.payload.size());
        put_le<std::uint32_t>(out, crc);
        offset += e.payload.size() + 4;
    }
    for (std::size_t i = 0; i < c.size(); ++i) {
        const auto& p = c.entries()[i].payload;
        out.insert(out.end(), p.begin(), p.end());
        put_le<std::uint32_t>(out, crcs[i]);
    }
    return out;
}

Container parse_container(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw ContainerError(ContainerError::Kind::magic, origin + ": not a container file (magic mismatch)");
    Reader r(bytes, origin);
    r.take(4, "magic");
    const auto version = r.read<std::uint16_t>("version");
    if (version != kVersion)
        throw ContainerError(ContainerError::Kind::format, origin + ": unsupported format version " +
                                                               std::to_string(version));
    if (r.read<std::uint8_t>("endianness flag") != 1)
        throw ContainerError(ContainerError::Kind::format, origin + ": big-endian payloads are not supported");
    r.read<std::uint8_t>("reserved byte");
    const auto count = r.read<std::uint32_t>("entry count");

    struct Row {
        Entry e;
        std::uint64_t offset, length;
        std::uint32_t crc;
    };
    std::vector<Row> rows;
    for (std::uint32_t i = 0; i < count; ++i) {
        Row row;
        const auto len = r.read<std::uint16_t>("entry name length");
        const auto* name = r.take(len, "entry name");
        row.e.name.assign(reinterpret_cast<const char*>(name), len);
        const auto dtype = r.read<std::uint8_t>("entry dtype");
        if (dtype > static_cast<std::uint8_t>(EntryType::f32))
            throw ContainerError(ContainerError::Kind::format,
                                 origin + ": entry '" + row.e.name + "' has unknown dtype " + std::to_string(dtype));
        row.e.dtype = static_cast<EntryType>(dtype);
        const auto rank = r.read<std::uint8_t>("entry rank");
        for (std::uint8_t a = 0; a < rank; ++a) row.e.shape.push_back(r.read<std::uint64_t>("entry shape"));
        row.offset = r.read<std::uint64_t>("entry offset");
        row.length = r.read<std::uint64_t>("entry length");
        row.crc = r.read<std::uint32_t>("entry checksum");
        if (row.length != shape_size(row.e.shape) * element_bytes(row.e.dtype))
            throw ContainerError(ContainerError::Kind::format,
                                 origin + ": entry '" + row.e.name + "' length does not match its shape");
        rows.push_back(std::move(row));
    }

    std::uint64_t expected = r.pos();
    std::set<std::string> names;
    Container c;
    for (auto& row : rows) {
        if (!names.insert(row.e.name).second)
            throw ContainerError(ContainerError::Kind::format, origin + ": duplicate entry '" + row.e.name + "'");
        if (row.offset != expected)
            throw ContainerError(ContainerError::Kind::format,
                                 origin + ": entry '" + row.e.name + "' has an overlapping or misplaced payload");
        if (row.offset + row.length + 4 > bytes.size())
            throw ContainerError(ContainerError::Kind::truncated,
                                 origin + ": truncated payload for entry '" + row.e.name + "'");
        const std::uint8_t* p = bytes.data() + row.offset;
        const std::uint32_t trailing = get_le<std::uint32_t>(p + row.length);
        const std::uint32_t actual = crc_of(p, row.length);
        if (actual != row.crc || trailing != row.crc)
            throw ContainerError(ContainerError::Kind::crc, origin + ": CRC mismatch in entry '" + row.e.name + "'");
        row.e.payload.assign(p, p + row.length);
        expected = row.offset + row.length + 4;
        c.add(std::move(row.e));
    }
    if (expected != bytes.size())
        throw ContainerError(ContainerError::Kind::format, origin + ": trailing bytes after the last entry");
    return c;
}

void write_container(const std::filesystem::path& path, const Container& c) {
    std::vector<std::uint8_t> bytes = serialize_container(c);
    const std::filesystem::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ContainerError(ContainerError::Kind::io, "cannot open " + tmp.string() + " for writing");
        // The magic goes in last so an interrupted write never looks like a valid file.
        out.write("\0\0\0\0", 4);
        out.write(reinterpret_cast<const char*>(bytes.data() + 4), static_cast<std::streamsize>(bytes.size() - 4));
        out.flush();
        out.seekp(0);
        out.write(kMagic, 4);
        out.flush();
        if (!out) throw ContainerError(ContainerError::Kind::io, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw ContainerError(ContainerError::Kind::io, "cannot move " + tmp.string() + " into place: " + ec.message());
    }
}

Container read_container(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ContainerError(ContainerError::Kind::io, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_container(bytes, path.string());
}

}  // namespace mifno
