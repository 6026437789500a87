#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qnet/timebase.hpp"

namespace qnet::netharness {

enum class MessageKind : std::uint8_t {
    tag_digest = 1,
    twtt_report = 2,
    sift_announce = 3,
    batch_confirm = 4,
};

enum class NodeId : std::uint8_t { alice = 0, bob = 1 };

/// Time-tag batch for the peer's correlation pass.
struct TagDigest {
    std::uint16_t detector = 0;
    std::vector<Instant> tags;
};

/// One direction's coincidence fit.
struct TwttReport {
    std::uint8_t direction = 0;  // 0 = A->B, 1 = B->A
    bool fit_valid = false;
    double center_ps = 0.0;
    double fwhm_ps = 0.0;
    double amplitude = 0.0;
    double background = 0.0;
    double uncertainty_ps = 0.0;
};

/// Sifting announcement: frame and bin indices of lone single-photon events.
/// Deliberately has no slot field; slot numbers are the key material.
struct SiftAnnounce {
    std::vector<std::int64_t> frame_no;
    std::vector<std::uint32_t> bin_no;
};

/// Parameter-estimation exchange. The initiator discloses its check-subset
/// slots (which are then discarded from the key); the reply carries the
/// agreed pair count and the check-subset QBER estimate.
struct BatchConfirm {
    std::uint64_t pair_count = 0;
    double qber_check = -1.0;  // < 0 until estimated
    std::vector<std::int64_t> check_frames;
    std::vector<std::uint32_t> check_slots;
};

struct ProtocolMessage {
    MessageKind kind = MessageKind::tag_digest;
    std::uint32_t epoch_index = 0;
    NodeId sender = NodeId::alice;
    std::variant<TagDigest, TwttReport, SiftAnnounce, BatchConfirm> body;
};

struct WireError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr std::uint8_t kWireVersion = 1;

/// Self-describing frame: version byte, header, then named fields with
/// little-endian fixed-width payloads.
std::vector<std::uint8_t> encode_message(const ProtocolMessage& msg);
ProtocolMessage decode_message(const std::vector<std::uint8_t>& frame);

/// Field names present in an encoded frame, for structural audits.
std::vector<std::string> field_names(const std::vector<std::uint8_t>& frame);

}  // namespace qnet::netharness
