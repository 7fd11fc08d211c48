#pragma once

// Serialization: shortest round-trip doubles, CSV writers/readers for the
// schedule, trajectory, ergotropy and measurement formats, and the run
// manifest with content digests.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qbat/dynamics.hpp"
#include "qbat/ergotropy.hpp"
#include "qbat/tomography.hpp"

namespace qbat {

// ---------------------------------------------------------------------------
// Number formatting (shortest round-trip decimal)
// ---------------------------------------------------------------------------

inline std::string fmt_double(double v) {
    std::array<char, 40> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw io_error("parse_double: cannot parse '" + std::string(s) + "'");
    return v;
}

// ---------------------------------------------------------------------------
// CSV primitives
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

inline CsvTable read_csv(const std::string& text, const std::string& expected_header) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw io_error("read_csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expected_header)
        throw io_error("read_csv: header mismatch, expected '" + expected_header + "', got '" +
                       line + "'");
    CsvTable t;
    t.header = split(line, ',');
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != t.header.size()) throw io_error("read_csv: ragged row");
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(parse_double(c));
        t.rows.push_back(std::move(row));
    }
    return t;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Schedule CSV: t_s,omega1_rad_s,omega2_rad_s
// ---------------------------------------------------------------------------

inline constexpr const char* schedule_csv_header = "t_s,omega1_rad_s,omega2_rad_s";

inline std::string schedule_to_csv(const PulseSchedule& s) {
    std::string out = schedule_csv_header;
    out += '\n';
    for (std::size_t i = 0; i < s.size(); ++i) {
        out += fmt_double(s.times[i]);
        out += ',';
        out += fmt_double(s.omega1[i]);
        out += ',';
        out += fmt_double(s.omega2[i]);
        out += '\n';
    }
    return out;
}

inline PulseSchedule schedule_from_csv(const std::string& text, ProtocolFamily family) {
    const auto t = detail::read_csv(text, schedule_csv_header);
    std::vector<double> times, w1, w2;
    for (const auto& row : t.rows) {
        times.push_back(row[0]);
        w1.push_back(row[1]);
        w2.push_back(row[2]);
    }
    return PulseSchedule::from_samples(std::move(times), std::move(w1), std::move(w2), family);
}

// ---------------------------------------------------------------------------
// Ergotropy trace CSV: t_s,ergotropy_ueV,fraction_of_max
// ---------------------------------------------------------------------------

inline constexpr const char* ergotropy_csv_header = "t_s,ergotropy_ueV,fraction_of_max";

inline std::string ergotropy_to_csv(const ErgotropyTrace& tr) {
    std::string out = ergotropy_csv_header;
    out += '\n';
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        out += fmt_double(tr.times[i]);
        out += ',';
        out += fmt_double(tr.ergotropy[i]);
        out += ',';
        out += fmt_double(tr.ergotropy[i] / tr.e_max);
        out += '\n';
    }
    return out;
}

inline ErgotropyTrace ergotropy_from_csv(const std::string& text, double e_max) {
    const auto t = detail::read_csv(text, ergotropy_csv_header);
    ErgotropyTrace tr;
    tr.e_max = e_max;
    for (const auto& row : t.rows) {
        tr.times.push_back(row[0]);
        tr.ergotropy.push_back(row[1]);
    }
    return tr;
}

// ---------------------------------------------------------------------------
// Trajectory CSV:
// t_s,p0,p1,p2,re_r01,im_r01,re_r02,im_r02,re_r12,im_r12,energy_ueV
// ---------------------------------------------------------------------------

inline constexpr const char* trajectory_csv_header =
    "t_s,p0,p1,p2,re_r01,im_r01,re_r02,im_r02,re_r12,im_r12,energy_ueV";

namespace detail {
inline void trajectory_row(std::string& out, double t, const Mat3& rho, const Mat3& h0) {
    out += fmt_double(t);
    for (std::size_t k = 0; k < 3; ++k) {
        out += ',';
        out += fmt_double(rho(k, k).real());
    }
    const std::array<std::pair<std::size_t, std::size_t>, 3> offs = {{{0, 1}, {0, 2}, {1, 2}}};
    for (const auto& [r, c] : offs) {
        out += ',';
        out += fmt_double(rho(r, c).real());
        out += ',';
        out += fmt_double(rho(r, c).imag());
    }
    out += ',';
    out += fmt_double(omega_to_microev((rho * h0).trace().real()));
    out += '\n';
}
} // namespace detail

inline std::string trajectory_to_csv(const LindbladTrajectory& traj, const Mat3& h0,
                                     std::size_t stride = 1) {
    std::string out = trajectory_csv_header;
    out += '\n';
    for (std::size_t i = 0; i < traj.size(); i += stride)
        detail::trajectory_row(out, traj.times[i], traj.states[i], h0);
    if ((traj.size() - 1) % stride != 0)
        detail::trajectory_row(out, traj.times.back(), traj.states.back(), h0);
    return out;
}

inline std::string trajectory_to_csv(const SchrodingerTrajectory& traj, const Mat3& h0,
                                     std::size_t stride = 1) {
    std::string out = trajectory_csv_header;
    out += '\n';
    const auto row = [&](std::size_t i) {
        const Vec3& psi = traj.states[i];
        const Mat3 rho = (1.0 / psi.norm2()) * outer(psi, psi);
        detail::trajectory_row(out, traj.times[i], rho, h0);
    };
    for (std::size_t i = 0; i < traj.size(); i += stride) row(i);
    if ((traj.size() - 1) % stride != 0) row(traj.size() - 1);
    return out;
}

// ---------------------------------------------------------------------------
// Measurement CSV: rotation_index,p0,p1,p2
// ---------------------------------------------------------------------------

inline constexpr const char* measurement_csv_header = "rotation_index,p0,p1,p2";

inline std::string measurements_to_csv(const MeasurementRecord& rec) {
    std::string out = measurement_csv_header;
    out += '\n';
    for (std::size_t i = 0; i < 9; ++i) {
        out += fmt_double(static_cast<double>(i + 1));
        for (int k = 0; k < 3; ++k) {
            out += ',';
            out += fmt_double(rec.probabilities[i][static_cast<std::size_t>(k)]);
        }
        out += '\n';
    }
    return out;
}

inline MeasurementRecord measurements_from_csv(const std::string& text,
                                               std::optional<std::uint64_t> shots = std::nullopt) {
    const auto t = detail::read_csv(text, measurement_csv_header);
    if (t.rows.size() != 9) throw io_error("measurements_from_csv: expected 9 rows");
    MeasurementRecord rec;
    rec.shots = shots;
    for (std::size_t i = 0; i < 9; ++i) {
        if (static_cast<int>(t.rows[i][0]) != static_cast<int>(i + 1))
            throw io_error("measurements_from_csv: rotation indices must be 1..9 in order");
        for (int k = 0; k < 3; ++k)
            rec.probabilities[i][static_cast<std::size_t>(k)] =
                t.rows[i][static_cast<std::size_t>(k + 1)];
    }
    return rec;
}

// ---------------------------------------------------------------------------
// Content digest (FNV-1a 64) and the output writer
// ---------------------------------------------------------------------------

inline std::string fnv1a64_hex(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::array<char, 17> buf{};
    static const char* digits = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return std::string(buf.data(), 16);
}

struct WrittenFile {
    std::string name;
    std::string digest;
    std::uint64_t bytes = 0;
};

/// Serializes all file writes for one run and records their digests.
class OutputWriter {
public:
    explicit OutputWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec || !std::filesystem::is_directory(dir_))
            throw io_error("output directory '" + dir_.string() + "' cannot be created");
    }

    const std::filesystem::path& dir() const { return dir_; }

    void write(const std::string& name, const std::string& content) {
        const std::filesystem::path path = dir_ / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("cannot open '" + path.string() + "' for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw io_error("write failed for '" + path.string() + "'");
        files_.push_back({name, fnv1a64_hex(content), content.size()});
    }

    const std::vector<WrittenFile>& files() const { return files_; }

private:
    std::filesystem::path dir_;
    std::vector<WrittenFile> files_;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

inline constexpr const char* tool_version = "0.1.0";

inline void write_manifest(OutputWriter& writer, const std::string& command,
                           const std::map<std::string, std::string>& config_snapshot,
                           std::int64_t started_unix_ms, std::int64_t finished_unix_ms) {
    nlohmann::json j;
    j["command"] = command;
    j["tool_version"] = tool_version;
    j["started_unix_ms"] = started_unix_ms;
    j["finished_unix_ms"] = finished_unix_ms;
    j["config"] = config_snapshot;
    nlohmann::json files = nlohmann::json::array();
    for (const auto& f : writer.files())
        files.push_back({{"name", f.name}, {"fnv1a64", f.digest}, {"bytes", f.bytes}});
    j["files"] = files;

    const std::filesystem::path path = writer.dir() / "manifest.json";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot write manifest");
    out << j.dump(2) << '\n';
}

/// Recomputes every digest listed in a manifest; throws io_error on mismatch.
inline void validate_manifest(const std::filesystem::path& dir) {
    const auto j = nlohmann::json::parse(read_file(dir / "manifest.json"));
    for (const auto& f : j.at("files")) {
        const std::string name = f.at("name").get<std::string>();
        const std::string digest = f.at("fnv1a64").get<std::string>();
        const std::string content = read_file(dir / name);
        if (fnv1a64_hex(content) != digest)
            throw io_error("manifest digest mismatch for '" + name + "'");
        if (content.size() != f.at("bytes").get<std::uint64_t>())
            throw io_error("manifest size mismatch for '" + name + "'");
    }
}

} // namespace qbat
