#ifndef PED_SRC_LE_HPP
#define PED_SRC_LE_HPP

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <type_traits>
#include <vector>

namespace ped::le {

template <typename T>
using Word = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;

template <typename T> T read(std::span<const std::uint8_t> bytes, std::size_t offset) {
    Word<T> v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        v |= static_cast<Word<T>>(static_cast<Word<T>>(bytes[offset + i]) << (8 * i));
    return std::bit_cast<T>(v);
}

template <typename T> void append(std::vector<std::uint8_t> &out, T value) {
    const auto v = std::bit_cast<Word<T>>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i)
        out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFFu));
}

} // namespace ped::le

#endif // PED_SRC_LE_HPP
