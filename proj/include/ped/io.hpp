#ifndef PED_IO_HPP
#define PED_IO_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ped/types.hpp"

namespace ped::io {

// PEDF: "PEDF" u8 version u8 dtype u8[2] reserved u64 n u64 d, then n*d LE values row-major.
inline constexpr std::uint8_t kFeatureVersion = 1;
inline constexpr std::size_t kFeatureHeaderSize = 24;
// PEDL: "PEDL" u8 version u8[3] reserved u64 n, then n LE u32 labels.
inline constexpr std::uint8_t kLabelVersion = 1;
inline constexpr std::size_t kLabelHeaderSize = 16;

using Bytes = std::vector<std::uint8_t>;

/// Loads a feature dump. Binary PEDF is detected by its magic; otherwise a `.csv`
/// extension selects the CSV reader. Anything else is BadMagic.
FeatureMatrix load_feature_dump(const std::filesystem::path &path);
FeatureMatrix decode_feature_dump(std::span<const std::uint8_t> bytes,
                                  const std::string &source = "<memory>");
Bytes encode_feature_dump(const FeatureMatrix &features);
void write_feature_dump(const std::filesystem::path &path, const FeatureMatrix &features);

LabelVector load_labels(const std::filesystem::path &path);
LabelVector decode_labels(std::span<const std::uint8_t> bytes, const std::string &source = "<memory>");
Bytes encode_labels(const LabelVector &labels);
void write_labels(const std::filesystem::path &path, const LabelVector &labels);

/// CSV readers. A first line that does not parse as numbers is treated as a header.
FeatureMatrix parse_feature_csv(const std::string &text, const std::string &source = "<memory>");
LabelVector parse_label_csv(const std::string &text, const std::string &source = "<memory>");

/// Builds a validated label vector: p = max label and every class in 1..p occurs.
LabelVector make_labels(std::vector<int> labels, const std::string &source = "<memory>");

void validate_pair(const FeatureMatrix &features, const LabelVector &labels);

Bytes read_file(const std::filesystem::path &path);
void write_file(const std::filesystem::path &path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path &path, const std::string &text);

} // namespace ped::io

#endif // PED_IO_HPP
