#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

namespace qnet::netharness {

struct TransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TransportTimeout : TransportError {
    using TransportError::TransportError;
};
struct TransportClosed : TransportError {
    using TransportError::TransportError;
};

/// Ordered, reliable, duplicate-free frame delivery between the two nodes.
class Transport {
public:
    virtual ~Transport() = default;
    virtual void send(std::vector<std::uint8_t> frame) = 0;
    virtual std::vector<std::uint8_t> recv(std::chrono::milliseconds timeout) = 0;
};

struct TransportPair {
    std::unique_ptr<Transport> alice;
    std::unique_ptr<Transport> bob;
};

/// Two in-process queues with an optional configurable one-way latency
/// (latency delays visibility, not ordering). drop_filter, when set, silently
/// discards matching outbound frames; used to exercise the timeout path.
TransportPair make_inproc_pair(std::chrono::milliseconds latency = {});

using DropFilter = std::function<bool(const std::vector<std::uint8_t>&)>;
TransportPair make_inproc_pair_with_faults(DropFilter drop_alice_to_bob,
                                           DropFilter drop_bob_to_alice);

/// Length-prefixed frames over a loopback TCP socket pair; each endpoint runs
/// a reader thread so large digests never deadlock the lockstep script.
TransportPair make_loopback_socket_pair();

}  // namespace qnet::netharness
