#include "qkr/io.hpp"

#include "qkr/model.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace qkr {

namespace fs = std::filesystem;

std::string fnv1a_hex(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string file_digest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return fnv1a_hex(ss.str());
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_text_atomic(const fs::path& path, std::string_view content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void write_distribution_csv(const fs::path& path, const MomentumDistribution& dist, std::string_view digest) {
    std::string out;
    out += "# digest=" + std::string(digest) + " n_kicks=" + std::to_string(dist.n_kicks) +
           " n_samples=" + std::to_string(dist.n_samples) + " underflow=" + format_double(dist.underflow) +
           " overflow=" + format_double(dist.overflow) + "\n";
    out += "p,density\n";
    for (Eigen::Index k = 0; k < dist.grid.size; ++k) {
        out += format_double(dist.grid.at(k));
        out += ',';
        out += format_double(dist.density(k));
        out += '\n';
    }
    write_text_atomic(path, out);
}

namespace {

struct CsvTable {
    std::vector<std::string> comments;
    std::vector<std::pair<std::size_t, std::vector<double>>> rows;  // (line number, fields)
};

bool parse_number(std::string_view s, double& v) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.empty()) return false;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

CsvTable read_csv(const fs::path& path, std::string_view header, std::size_t columns) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    CsvTable t;
    std::string line;
    std::size_t lineno = 0;
    bool seen_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            t.comments.push_back(line.substr(1));
            continue;
        }
        if (!seen_header) {
            if (line != header)
                throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected header '" +
                              std::string(header) + "', got '" + line + "'");
            seen_header = true;
            continue;
        }
        std::vector<double> fields;
        std::string_view rest(line);
        for (;;) {
            const auto comma = rest.find(',');
            double v = 0.0;
            if (!parse_number(rest.substr(0, comma), v))
                throw IoError(path.string() + ":" + std::to_string(lineno) + ": malformed row '" + line + "'");
            fields.push_back(v);
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (fields.size() != columns)
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(columns) +
                          " fields, got " + std::to_string(fields.size()));
        t.rows.emplace_back(lineno, std::move(fields));
    }
    if (!seen_header) throw IoError(path.string() + ": missing header '" + std::string(header) + "'");
    return t;
}

std::optional<std::uint64_t> comment_field(const std::vector<std::string>& comments, std::string_view key) {
    const std::string needle = std::string(key) + "=";
    for (const auto& c : comments) {
        std::istringstream ss(c);
        std::string token;
        while (ss >> token) {
            if (token.rfind(needle, 0) == 0) {
                try {
                    return std::stoull(token.substr(needle.size()));
                } catch (...) {
                    return std::nullopt;
                }
            }
        }
    }
    return std::nullopt;
}

}  // namespace

MomentumDistribution read_distribution_csv(const fs::path& path) {
    const CsvTable t = read_csv(path, "p,density", 2);
    if (t.rows.size() < 2) throw IoError(path.string() + ": a distribution needs at least two rows");
    MomentumDistribution d;
    const auto n = static_cast<Eigen::Index>(t.rows.size());
    d.density.resize(n);
    const double origin = t.rows.front().second[0];
    const double spacing = (t.rows.back().second[0] - origin) / static_cast<double>(n - 1);
    if (!(spacing > 0.0)) throw IoError(path.string() + ": momentum column must increase");
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto& [lineno, f] = t.rows[static_cast<std::size_t>(k)];
        const double expected = origin + static_cast<double>(k) * spacing;
        if (std::abs(f[0] - expected) > 1e-6 * spacing)
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": momentum grid is not uniform");
        if (!(f[1] >= 0.0) || !std::isfinite(f[1]))
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": density must be finite and >= 0");
        d.density(k) = f[1];
    }
    d.grid = MomentumGrid{origin, spacing, n};
    d.n_kicks = comment_field(t.comments, "n_kicks").value_or(0);
    d.n_samples = comment_field(t.comments, "n_samples").value_or(0);
    return d;
}

void write_series_csv(const fs::path& path, const TimeSeries& series, std::string_view digest,
                      std::string_view quantity) {
    series.check();
    std::string out = "# digest=" + std::string(digest) + " quantity=" + std::string(quantity) + "\n";
    out += "n,value\n";
    for (std::size_t i = 0; i < series.size(); ++i)
        out += std::to_string(series.kicks[i]) + "," + format_double(series.values[i]) + "\n";
    write_text_atomic(path, out);
}

TimeSeries read_series_csv(const fs::path& path) {
    const CsvTable t = read_csv(path, "n,value", 2);
    TimeSeries s;
    for (const auto& [lineno, f] : t.rows) {
        if (!(f[0] >= 0.0) || f[0] != std::floor(f[0]))
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": n must be a nonnegative integer");
        s.push(static_cast<std::uint64_t>(f[0]), f[1]);
    }
    try {
        s.check();
    } catch (const NumericalError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    return s;
}

void write_portrait_csv(const fs::path& path, const PhasePortrait& portrait, std::string_view digest) {
    std::string out = "# digest=" + std::string(digest) + " bins_x=" + std::to_string(portrait.bins_x) +
                      " bins_p=" + std::to_string(portrait.bins_p) + "\n";
    out += "x,p,count\n";
    const double hx = kTwoPi / static_cast<double>(portrait.bins_x);
    const double hp = kTwoPi / static_cast<double>(portrait.bins_p);
    for (Eigen::Index ix = 0; ix < portrait.bins_x; ++ix) {
        for (Eigen::Index ip = 0; ip < portrait.bins_p; ++ip) {
            out += format_double((static_cast<double>(ix) + 0.5) * hx) + "," +
                   format_double((static_cast<double>(ip) + 0.5) * hp) + "," +
                   std::to_string(portrait.counts(ix, ip)) + "\n";
        }
    }
    write_text_atomic(path, out);
}

}  // namespace qkr
