#include "qkd/wire.hpp"

#include <cstring>

namespace qkd::wire {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void pack_bits(std::vector<std::uint8_t>& out, const std::vector<bool>& bits) {
    std::uint8_t byte = 0;
    int used = 0;
    for (bool b : bits) {
        byte = static_cast<std::uint8_t>((byte << 1) | (b ? 1 : 0));
        if (++used == 8) {
            out.push_back(byte);
            byte = 0;
            used = 0;
        }
    }
    if (used > 0) out.push_back(static_cast<std::uint8_t>(byte << (8 - used)));
}

std::vector<bool> unpack_bits(const std::uint8_t* p, std::size_t n_bits) {
    std::vector<bool> bits;
    bits.reserve(n_bits);
    for (std::size_t i = 0; i < n_bits; ++i)
        bits.push_back((p[i / 8] >> (7 - i % 8)) & 1);
    return bits;
}

std::size_t packed_size(std::size_t n_bits) { return (n_bits + 7) / 8; }

struct PayloadWriter {
    std::vector<std::uint8_t> payload;

    void operator()(const BasisAnnounce& m) {
        put_u32(payload, static_cast<std::uint32_t>(m.bases.size()));
        std::vector<bool> bits;
        bits.reserve(m.bases.size());
        for (Basis b : m.bases) bits.push_back(b == Basis::Y);
        pack_bits(payload, bits);
    }
    void operator()(const DetectedMask& m) {
        put_u32(payload, static_cast<std::uint32_t>(m.detected.size()));
        pack_bits(payload, m.detected);
    }
    void operator()(const SampleIndices& m) {
        put_u32(payload, static_cast<std::uint32_t>(m.indices.size()));
        for (std::uint32_t v : m.indices) put_u32(payload, v);
    }
    void operator()(const SampleBits& m) { pack_bits(payload, m.bits); }
    void operator()(const QberReportMsg& m) {
        std::uint64_t raw;
        static_assert(sizeof(raw) == sizeof(m.qber));
        std::memcpy(&raw, &m.qber, sizeof(raw));
        for (int i = 0; i < 8; ++i)
            payload.push_back(static_cast<std::uint8_t>((raw >> (8 * i)) & 0xff));
        put_u32(payload, m.sample_size);
        put_u32(payload, m.error_count);
    }
};

std::uint8_t type_tag(const Message& msg) {
    switch (msg.index()) {
        case 0: return kBasisAnnounce;
        case 1: return kDetectedMask;
        case 2: return kSampleIndices;
        case 3: return kSampleBits;
        default: return kQberReport;
    }
}

} // namespace

std::vector<std::uint8_t> encode(const Message& msg) {
    PayloadWriter w;
    std::visit(w, msg);
    std::vector<std::uint8_t> frame;
    frame.reserve(5 + w.payload.size());
    put_u32(frame, static_cast<std::uint32_t>(1 + w.payload.size()));
    frame.push_back(type_tag(msg));
    frame.insert(frame.end(), w.payload.begin(), w.payload.end());
    return frame;
}

Message decode(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 5) throw DecodeError("truncated frame: missing header");
    const std::uint32_t length = get_u32(bytes.data());
    if (length < 1) throw DecodeError("malformed frame: zero length");
    if (bytes.size() < 4 + static_cast<std::size_t>(length))
        throw DecodeError("truncated frame: payload shorter than declared length");
    if (bytes.size() > 4 + static_cast<std::size_t>(length))
        throw DecodeError("malformed frame: trailing bytes");

    const std::uint8_t type = bytes[4];
    const std::uint8_t* payload = bytes.data() + 5;
    const std::size_t payload_len = length - 1;

    switch (type) {
        case kBasisAnnounce: {
            if (payload_len < 4) throw DecodeError("basis announce: missing count");
            const std::uint32_t count = get_u32(payload);
            if (payload_len != 4 + packed_size(count))
                throw DecodeError("basis announce: payload length mismatch");
            const auto bits = unpack_bits(payload + 4, count);
            BasisAnnounce m;
            m.bases.reserve(count);
            for (bool b : bits) m.bases.push_back(b ? Basis::Y : Basis::Z);
            return m;
        }
        case kDetectedMask: {
            if (payload_len < 4) throw DecodeError("detected mask: missing count");
            const std::uint32_t count = get_u32(payload);
            if (payload_len != 4 + packed_size(count))
                throw DecodeError("detected mask: payload length mismatch");
            return DetectedMask{unpack_bits(payload + 4, count)};
        }
        case kSampleIndices: {
            if (payload_len < 4) throw DecodeError("sample indices: missing count");
            const std::uint32_t count = get_u32(payload);
            if (payload_len != 4 + 4 * static_cast<std::size_t>(count))
                throw DecodeError("sample indices: payload length mismatch");
            SampleIndices m;
            m.indices.reserve(count);
            for (std::uint32_t i = 0; i < count; ++i) m.indices.push_back(get_u32(payload + 4 + 4 * i));
            return m;
        }
        case kSampleBits:
            return SampleBits{unpack_bits(payload, payload_len * 8)};
        case kQberReport: {
            if (payload_len != 16) throw DecodeError("qber report: payload length mismatch");
            std::uint64_t raw = 0;
            for (int i = 0; i < 8; ++i) raw |= static_cast<std::uint64_t>(payload[i]) << (8 * i);
            QberReportMsg m{};
            std::memcpy(&m.qber, &raw, sizeof(m.qber));
            m.sample_size = get_u32(payload + 8);
            m.error_count = get_u32(payload + 12);
            return m;
        }
        default:
            throw DecodeError("unknown frame type tag");
    }
}

} // namespace qkd::wire
