#pragma once

#include "qkr/analysis.hpp"
#include "qkr/classical.hpp"
#include "qkr/distribution.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace qkr {

/// 64-bit FNV-1a of `data` as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view data);
std::string file_digest(const std::filesystem::path& path);

/// Shortest representation that round-trips (17 significant digits at most).
std::string format_double(double v);

/// Writes `content` to a sibling temporary and renames it into place.
void write_text_atomic(const std::filesystem::path& path, std::string_view content);

/// CSV with a provenance comment line, then `p,density`, one row per grid point.
void write_distribution_csv(const std::filesystem::path& path, const MomentumDistribution& dist,
                            std::string_view digest);
/// Reads a distribution CSV; n_kicks / n_samples come from the comment line when present.
/// The grid must be uniform. Throws IoError naming the offending line.
MomentumDistribution read_distribution_csv(const std::filesystem::path& path);

/// CSV `n,value`.
void write_series_csv(const std::filesystem::path& path, const TimeSeries& series, std::string_view digest,
                      std::string_view quantity);
TimeSeries read_series_csv(const std::filesystem::path& path);

/// CSV `x,p,count` with cell-center coordinates.
void write_portrait_csv(const std::filesystem::path& path, const PhasePortrait& portrait, std::string_view digest);

}  // namespace qkr
