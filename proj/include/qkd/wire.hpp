#pragma once

#include <cstdint>
#include <stdexcept>
#include <variant>
#include <vector>

#include "qkd/protocol.hpp"

namespace qkd::wire {

// Classical sifting channel framing:
//   [length: u32 LE, bytes after this field][type: u8][payload]
// Bit-packed payloads are MSB-first within each byte.
inline constexpr std::uint8_t kBasisAnnounce = 0x01;
inline constexpr std::uint8_t kDetectedMask = 0x02;
inline constexpr std::uint8_t kSampleIndices = 0x03;
inline constexpr std::uint8_t kSampleBits = 0x04;
inline constexpr std::uint8_t kQberReport = 0x05;

struct DecodeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BasisAnnounce {
    std::vector<Basis> bases;
    bool operator==(const BasisAnnounce&) const = default;
};

struct DetectedMask {
    std::vector<bool> detected;
    bool operator==(const DetectedMask&) const = default;
};

struct SampleIndices {
    std::vector<std::uint32_t> indices;
    bool operator==(const SampleIndices&) const = default;
};

// Carries no explicit bit count on the wire; the receiver truncates to the
// index count announced beforehand. Decoding yields a multiple of 8 bits.
struct SampleBits {
    std::vector<bool> bits;
    bool operator==(const SampleBits&) const = default;
};

struct QberReportMsg {
    double qber;
    std::uint32_t sample_size;
    std::uint32_t error_count;
    bool operator==(const QberReportMsg&) const = default;
};

using Message = std::variant<BasisAnnounce, DetectedMask, SampleIndices, SampleBits, QberReportMsg>;

std::vector<std::uint8_t> encode(const Message& msg);

// Decodes exactly one frame occupying the whole buffer. Throws DecodeError on
// truncation, unknown type tags and payload length mismatches.
Message decode(const std::vector<std::uint8_t>& bytes);

} // namespace qkd::wire
