#ifndef BEAMCORR_TAGIO_HPP
#define BEAMCORR_TAGIO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "beamcorr/common.hpp"
#include "beamcorr/time_tags.hpp"

namespace beamcorr {

static_assert(std::endian::native == std::endian::little,
              "attg files are little-endian; big-endian hosts are not supported");

// .attg binary layout (little-endian):
//   offset 0   char[4]  magic "ATTG"
//   offset 4   u16      version (currently 1)
//   offset 6   u16      channel_id
//   offset 8   u64      resolution_ps
//   offset 16  u64      count
//   offset 24  u64      duration_ps
//   offset 32  i64[count] tags in ps, strictly ascending
struct TagFileHeader {
    static constexpr char magic[4] = {'A', 'T', 'T', 'G'};
    static constexpr std::uint16_t current_version = 1;
    static constexpr std::size_t byte_size = 32;
};

inline void write_tags(const TimeTagStream& stream, const std::string& path) {
    stream.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw corruption_error("cannot open for writing: " + path);
    char header[TagFileHeader::byte_size] = {};
    std::memcpy(header, TagFileHeader::magic, 4);
    std::uint16_t version = TagFileHeader::current_version;
    std::uint64_t res = static_cast<std::uint64_t>(stream.resolution_ps);
    std::uint64_t count = stream.tags.size();
    std::uint64_t dur = static_cast<std::uint64_t>(stream.duration_ps);
    std::memcpy(header + 4, &version, 2);
    std::memcpy(header + 6, &stream.channel_id, 2);
    std::memcpy(header + 8, &res, 8);
    std::memcpy(header + 16, &count, 8);
    std::memcpy(header + 24, &dur, 8);
    out.write(header, sizeof(header));
    if (!stream.tags.empty())
        out.write(reinterpret_cast<const char*>(stream.tags.data()),
                  static_cast<std::streamsize>(stream.tags.size() * sizeof(std::int64_t)));
    if (!out) throw corruption_error("write failed: " + path);
}

inline TimeTagStream read_tags(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw corruption_error("cannot open: " + path);
    char header[TagFileHeader::byte_size];
    in.read(header, sizeof(header));
    if (in.gcount() != static_cast<std::streamsize>(sizeof(header)))
        throw corruption_error(path + ": truncated header");
    if (std::memcmp(header, TagFileHeader::magic, 4) != 0)
        throw corruption_error(path + ": bad magic, not an attg file");
    std::uint16_t version = 0;
    std::memcpy(&version, header + 4, 2);
    if (version != TagFileHeader::current_version)
        throw corruption_error(path + ": unsupported version " + std::to_string(version));
    TimeTagStream stream;
    std::uint64_t res = 0, count = 0, dur = 0;
    std::memcpy(&stream.channel_id, header + 6, 2);
    std::memcpy(&res, header + 8, 8);
    std::memcpy(&count, header + 16, 8);
    std::memcpy(&dur, header + 24, 8);
    stream.resolution_ps = static_cast<std::int64_t>(res);
    stream.duration_ps = static_cast<std::int64_t>(dur);
    stream.tags.resize(count);
    if (count > 0) {
        in.read(reinterpret_cast<char*>(stream.tags.data()),
                static_cast<std::streamsize>(count * sizeof(std::int64_t)));
        if (in.gcount() != static_cast<std::streamsize>(count * sizeof(std::int64_t)))
            throw corruption_error(path + ": truncated payload");
    }
    // trailing bytes mean the count field lies about the payload
    char probe;
    if (in.read(&probe, 1))
        throw corruption_error(path + ": payload longer than header count");
    if (!stream.strictly_sorted())
        throw corruption_error(path + ": tags not strictly sorted");
    if (stream.resolution_ps <= 0) throw corruption_error(path + ": invalid resolution");
    return stream;
}

// ---------------------------------------------------------------------------
// CSV helpers (RFC-4180-style: header row, dot decimal separator)
// ---------------------------------------------------------------------------

namespace csv {

inline std::string format_double(double x) {
    std::ostringstream os;
    os.precision(12);
    os << x;
    return os.str();
}

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }
};

inline Table read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw corruption_error("cannot open: " + path);
    Table table;
    std::string line;
    if (!std::getline(in, line)) throw corruption_error(path + ": empty csv");
    table.header = split_line(line);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_line(line);
        if (fields.size() != table.header.size())
            throw corruption_error(path + ": field count mismatch at line " + std::to_string(lineno));
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) {
            try {
                row.push_back(std::stod(f));
            } catch (const std::exception&) {
                throw corruption_error(path + ": bad number '" + f + "' at line " + std::to_string(lineno));
            }
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

inline void write(const std::string& path, const std::vector<std::string>& header,
                  const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw corruption_error("cannot open for writing: " + path);
    for (std::size_t i = 0; i < header.size(); ++i)
        out << header[i] << (i + 1 < header.size() ? "," : "\n");
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out << format_double(row[i]) << (i + 1 < row.size() ? "," : "\n");
    }
    if (!out) throw corruption_error("write failed: " + path);
}

}  // namespace csv

}  // namespace beamcorr

#endif
