#include "ped/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <optional>
#include <sstream>
#include <string_view>

#include "ped/error.hpp"
#include "le.hpp"

namespace ped::io {

namespace {

constexpr std::uint8_t kFeatureMagic[4] = {0x50, 0x45, 0x44, 0x46};
constexpr std::uint8_t kLabelMagic[4] = {0x50, 0x45, 0x44, 0x4C};

template <typename T> T read_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
    return le::read<T>(bytes, offset);
}
template <typename T> void append_le(Bytes &out, T value) { le::append<T>(out, value); }

bool has_magic(std::span<const std::uint8_t> bytes, const std::uint8_t (&magic)[4]) {
    return bytes.size() >= 4 && std::equal(magic, magic + 4, bytes.begin());
}

bool has_csv_extension(const std::filesystem::path &path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".csv";
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

struct CsvLine {
    std::size_t offset;
    std::vector<std::string_view> fields;
};

std::vector<CsvLine> split_csv(std::string_view text) {
    std::vector<CsvLine> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        if (!trim(line).empty()) {
            CsvLine parsed{pos, {}};
            std::size_t start = 0;
            while (true) {
                std::size_t comma = line.find(',', start);
                parsed.fields.push_back(trim(line.substr(start, comma - start)));
                if (comma == std::string_view::npos)
                    break;
                start = comma + 1;
            }
            lines.push_back(std::move(parsed));
        }
        pos = end + 1;
    }
    return lines;
}

bool parse_double(std::string_view s, double &out) {
    if (s.empty())
        return false;
    // from_chars rejects a leading '+'
    if (s.front() == '+')
        s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_long(std::string_view s, long long &out) {
    if (s.empty())
        return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

bool looks_numeric(const CsvLine &line) {
    double v;
    return std::all_of(line.fields.begin(), line.fields.end(),
                       [&](std::string_view f) { return parse_double(f, v); });
}

// Validates 1-based labels; offset_of maps a label index to its position in the source.
template <typename OffsetFn>
LabelVector validate_labels(std::vector<int> labels, const std::string &source, OffsetFn offset_of) {
    if (labels.empty())
        throw Error(ErrorCode::EmptyMatrix, "label vector is empty", source);
    int p = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] <= 0)
            throw Error(ErrorCode::ZeroLabel,
                        "label " + std::to_string(labels[i]) + " at index " + std::to_string(i) +
                            " (labels are 1-based)",
                        source, offset_of(i));
        p = std::max(p, labels[i]);
    }
    std::vector<char> seen(static_cast<std::size_t>(p) + 1, 0);
    for (int l : labels)
        seen[static_cast<std::size_t>(l)] = 1;
    for (int c = 1; c <= p; ++c)
        if (!seen[static_cast<std::size_t>(c)])
            throw Error(ErrorCode::MissingClass,
                        "class " + std::to_string(c) + " of 1.." + std::to_string(p) + " has no samples",
                        source);
    return LabelVector{std::move(labels), p};
}

} // namespace

Bytes read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::FileError, "cannot open file for reading", path.string());
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path &path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorCode::FileError, "cannot open file for writing", path.string());
    out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw Error(ErrorCode::FileError, "write failed", path.string());
}

void write_text(const std::filesystem::path &path, const std::string &text) {
    write_file(path, std::span(reinterpret_cast<const std::uint8_t *>(text.data()), text.size()));
}

FeatureMatrix decode_feature_dump(std::span<const std::uint8_t> bytes, const std::string &source) {
    if (!has_magic(bytes, kFeatureMagic))
        throw Error(ErrorCode::BadMagic, "expected magic \"PEDF\"", source, 0);
    if (bytes.size() < kFeatureHeaderSize)
        throw Error(ErrorCode::TruncatedPayload,
                    "header needs " + std::to_string(kFeatureHeaderSize) + " bytes", source, bytes.size());
    if (bytes[4] != kFeatureVersion)
        throw Error(ErrorCode::UnsupportedVersion, "version " + std::to_string(bytes[4]), source, 4);
    if (bytes[5] > 1)
        throw Error(ErrorCode::UnsupportedDtype, "dtype " + std::to_string(bytes[5]), source, 5);
    const auto storage = static_cast<StorageType>(bytes[5]);
    const auto n = read_le<std::uint64_t>(bytes, 8);
    const auto d = read_le<std::uint64_t>(bytes, 16);
    if (n == 0 || d == 0)
        throw Error(ErrorCode::EmptyMatrix,
                    "declared shape " + std::to_string(n) + "x" + std::to_string(d), source, 8);
    const std::size_t width = storage == StorageType::F32 ? 4 : 8;
    const std::uint64_t payload = bytes.size() - kFeatureHeaderSize;
    if (d > payload || n > payload / d / width) {
        throw Error(ErrorCode::TruncatedPayload,
                    "declared " + std::to_string(n) + "x" + std::to_string(d) + " values but only " +
                        std::to_string(payload / width) + " present",
                    source, bytes.size());
    }
    const std::uint64_t expected = n * d * width;
    if (payload != expected)
        throw Error(ErrorCode::TrailingBytes,
                    std::to_string(payload - expected) + " bytes after declared payload", source,
                    kFeatureHeaderSize + expected);

    MatrixXd data(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    std::size_t offset = kFeatureHeaderSize;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        for (Eigen::Index j = 0; j < data.cols(); ++j, offset += width) {
            const double v = storage == StorageType::F32 ? static_cast<double>(read_le<float>(bytes, offset))
                                                         : read_le<double>(bytes, offset);
            if (!std::isfinite(v))
                throw Error(ErrorCode::NonFiniteValue,
                            "row " + std::to_string(i) + " column " + std::to_string(j), source, offset);
            data(i, j) = v;
        }
    }
    return FeatureMatrix(std::move(data), storage);
}

Bytes encode_feature_dump(const FeatureMatrix &features) {
    const std::size_t width = features.storage == StorageType::F32 ? 4 : 8;
    Bytes out;
    out.reserve(kFeatureHeaderSize + features.n() * features.d() * width);
    out.insert(out.end(), kFeatureMagic, kFeatureMagic + 4);
    out.push_back(kFeatureVersion);
    out.push_back(static_cast<std::uint8_t>(features.storage));
    out.push_back(0);
    out.push_back(0);
    append_le<std::uint64_t>(out, features.n());
    append_le<std::uint64_t>(out, features.d());
    for (Eigen::Index i = 0; i < features.data.rows(); ++i)
        for (Eigen::Index j = 0; j < features.data.cols(); ++j) {
            if (features.storage == StorageType::F32)
                append_le<float>(out, static_cast<float>(features.data(i, j)));
            else
                append_le<double>(out, features.data(i, j));
        }
    return out;
}

void write_feature_dump(const std::filesystem::path &path, const FeatureMatrix &features) {
    write_file(path, encode_feature_dump(features));
}

FeatureMatrix parse_feature_csv(const std::string &text, const std::string &source) {
    auto lines = split_csv(text);
    if (!lines.empty() && !looks_numeric(lines.front()))
        lines.erase(lines.begin());
    if (lines.empty())
        throw Error(ErrorCode::EmptyMatrix, "no data rows", source, 0);
    const std::size_t d = lines.front().fields.size();
    MatrixXd data(static_cast<Eigen::Index>(lines.size()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto &line = lines[i];
        if (line.fields.size() != d)
            throw Error(ErrorCode::ShapeMismatch,
                        "expected " + std::to_string(d) + " columns, found " +
                            std::to_string(line.fields.size()),
                        source, line.offset);
        for (std::size_t j = 0; j < d; ++j) {
            double v;
            if (!parse_double(line.fields[j], v))
                throw Error(ErrorCode::ParseError, "not a number: \"" + std::string(line.fields[j]) + "\"",
                            source, line.offset);
            if (!std::isfinite(v))
                throw Error(ErrorCode::NonFiniteValue,
                            "row " + std::to_string(i) + " column " + std::to_string(j), source, line.offset);
            data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
    }
    return FeatureMatrix(std::move(data), StorageType::F64);
}

FeatureMatrix load_feature_dump(const std::filesystem::path &path) {
    const Bytes bytes = read_file(path);
    if (!has_magic(bytes, kFeatureMagic) && has_csv_extension(path))
        return parse_feature_csv(std::string(bytes.begin(), bytes.end()), path.string());
    return decode_feature_dump(bytes, path.string());
}

LabelVector make_labels(std::vector<int> labels, const std::string &source) {
    return validate_labels(std::move(labels), source, [](std::size_t) { return std::optional<std::uint64_t>{}; });
}

LabelVector decode_labels(std::span<const std::uint8_t> bytes, const std::string &source) {
    if (!has_magic(bytes, kLabelMagic))
        throw Error(ErrorCode::BadMagic, "expected magic \"PEDL\"", source, 0);
    if (bytes.size() < kLabelHeaderSize)
        throw Error(ErrorCode::TruncatedPayload,
                    "header needs " + std::to_string(kLabelHeaderSize) + " bytes", source, bytes.size());
    if (bytes[4] != kLabelVersion)
        throw Error(ErrorCode::UnsupportedVersion, "version " + std::to_string(bytes[4]), source, 4);
    const auto n = read_le<std::uint64_t>(bytes, 8);
    const std::uint64_t payload = bytes.size() - kLabelHeaderSize;
    if (n > payload / 4)
        throw Error(ErrorCode::TruncatedPayload,
                    "declared " + std::to_string(n) + " labels but only " + std::to_string(payload / 4) +
                        " present",
                    source, bytes.size());
    if (payload != n * 4)
        throw Error(ErrorCode::TrailingBytes, std::to_string(payload - n * 4) + " bytes after declared payload",
                    source, kLabelHeaderSize + n * 4);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto raw = read_le<std::uint32_t>(bytes, kLabelHeaderSize + 4 * i);
        if (raw > static_cast<std::uint32_t>(std::numeric_limits<int>::max()))
            throw Error(ErrorCode::ParseError, "label out of range", source, kLabelHeaderSize + 4 * i);
        labels[i] = static_cast<int>(raw);
    }
    return validate_labels(std::move(labels), source, [](std::size_t i) {
        return std::optional<std::uint64_t>(kLabelHeaderSize + 4 * i);
    });
}

Bytes encode_labels(const LabelVector &labels) {
    Bytes out;
    out.reserve(kLabelHeaderSize + 4 * labels.n());
    out.insert(out.end(), kLabelMagic, kLabelMagic + 4);
    out.push_back(kLabelVersion);
    out.insert(out.end(), 3, 0);
    append_le<std::uint64_t>(out, labels.n());
    for (int l : labels.labels)
        append_le<std::uint32_t>(out, static_cast<std::uint32_t>(l));
    return out;
}

void write_labels(const std::filesystem::path &path, const LabelVector &labels) {
    write_file(path, encode_labels(labels));
}

LabelVector parse_label_csv(const std::string &text, const std::string &source) {
    auto lines = split_csv(text);
    if (!lines.empty() && !looks_numeric(lines.front()))
        lines.erase(lines.begin());
    std::vector<int> labels;
    std::vector<std::uint64_t> offsets;
    labels.reserve(lines.size());
    for (const auto &line : lines) {
        long long v;
        if (line.fields.size() != 1 || !parse_long(line.fields.front(), v) || v > std::numeric_limits<int>::max())
            throw Error(ErrorCode::ParseError, "expected one integer label per line", source, line.offset);
        labels.push_back(static_cast<int>(v));
        offsets.push_back(line.offset);
    }
    return validate_labels(std::move(labels), source,
                           [&](std::size_t i) { return std::optional<std::uint64_t>(offsets[i]); });
}

LabelVector load_labels(const std::filesystem::path &path) {
    const Bytes bytes = read_file(path);
    if (!has_magic(bytes, kLabelMagic) && has_csv_extension(path))
        return parse_label_csv(std::string(bytes.begin(), bytes.end()), path.string());
    return decode_labels(bytes, path.string());
}

void validate_pair(const FeatureMatrix &features, const LabelVector &labels) {
    if (features.n() != labels.n())
        throw Error(ErrorCode::LengthMismatch, "feature rows " + std::to_string(features.n()) +
                                                   " vs labels " + std::to_string(labels.n()));
}

} // namespace ped::io
