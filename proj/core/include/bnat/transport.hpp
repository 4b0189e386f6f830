#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bnat/errors.hpp"

namespace bnat {

/// One node's flat gradient for one round, as exchanged between peers.
struct RoundMessage {
    std::uint32_t round = 1;
    std::uint16_t node_id = 0;
    std::vector<double> gradient; // canonical flat order

    bool operator==(const RoundMessage&) const = default;
};

// Frame layout (little-endian throughout):
//   magic "BNCD" | version 0x01 | msg type 0x01 | round u32 | node_id u16
//   | count u32 | count x f64 | u32 CRC-32 of all preceding bytes.
// An empty gradient yields a 20-byte frame.

/// Throws NumericError on non-finite gradient entries; the wire never
/// carries a poisoned average.
std::vector<std::uint8_t> encode_message(const RoundMessage& msg);

/// Validates magic, version, and CRC; error messages distinguish foreign
/// protocol, unsupported version, corrupt frame, and incomplete frame.
RoundMessage decode_message(std::span<const std::uint8_t> bytes);

/// Round-synchronized gradient exchange among a fixed set of peers.
/// broadcast never blocks on peer progress; gather blocks until one message
/// per peer has arrived for the round or the timeout expires. Messages for
/// future rounds are buffered. One transport serves one node.
class Transport {
  public:
    virtual ~Transport() = default;

    virtual void broadcast(const RoundMessage& msg) = 0;

    /// Returns exactly peer_count() messages for `round`, sorted by
    /// node_id. TimeoutError names the missing node ids; duplicate
    /// deliveries and foreign frames surface as ProtocolError.
    virtual std::vector<RoundMessage> gather(std::uint32_t round,
                                             std::chrono::milliseconds timeout) = 0;

    virtual std::uint16_t node_id() const = 0;
    virtual std::size_t peer_count() const = 0;
};

/// Shared-memory mesh for simulating all nodes in one process. Endpoint i
/// serves node_ids[i]; the vector owns the shared state collectively.
std::vector<std::unique_ptr<Transport>> make_inproc_mesh(
    const std::vector<std::uint16_t>& node_ids);

struct PeerAddress {
    std::string host;
    std::uint16_t port = 0;
    std::uint16_t node_id = 0;
};

struct SocketConfig {
    std::uint16_t node_id = 0;
    std::uint16_t listen_port = 0; // required when a lower node_id exists
    std::vector<PeerAddress> peers; // every other participant
    std::chrono::milliseconds connect_timeout{10000};
};

/// TCP full mesh: this node dials every peer with a higher node_id and
/// accepts connections from every lower one, so exactly one stream exists
/// per pair. Handshake: dialer sends "BNHL" + u16 node_id, listener
/// replies in kind. Frames travel length-prefixed (u32 byte count, then
/// the encoded frame). Blocks until the mesh is fully connected.
std::unique_ptr<Transport> connect_socket_mesh(const SocketConfig& config);

/// Loopback mesh for tests: every node in one process, real TCP sockets on
/// 127.0.0.1 with ephemeral ports. Node ids are 1..count.
std::vector<std::unique_ptr<Transport>> make_loopback_mesh(std::size_t count);

} // namespace bnat
