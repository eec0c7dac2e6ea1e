#pragma once

#include <deque>
#include <memory>

#include "bapusim/link.hpp"
#include "bapusim/tcp_endpoint.hpp"

namespace bapusim {

// Common surface of the two uplink pipe models.
class UplinkPipe {
 public:
  virtual ~UplinkPipe() = default;
  virtual bool enqueue(LinkMessage msg) = 0;
  virtual int64_t queue_occupancy() const = 0;
  virtual int64_t free_capacity() const = 0;
  virtual uint64_t drops() const = 0;
};

class IdealUplink final : public UplinkPipe {
 public:
  IdealUplink(Engine& eng, NodeId dst, TunnelConfig cfg, TunnelLink::DeliverFn deliver)
      : link_(eng, dst, cfg, std::move(deliver)) {}
  bool enqueue(LinkMessage msg) override { return link_.enqueue(std::move(msg)); }
  int64_t queue_occupancy() const override { return link_.queue_occupancy(); }
  int64_t free_capacity() const override { return link_.free_capacity(); }
  uint64_t drops() const override { return link_.drops(); }

 private:
  TunnelLink link_;
};

// Sensitivity model: the tunnel as an actual TCP connection. Messages are
// framed onto a byte stream, clocked by a Reno sender across the shaped
// path (a drop-tail queue in front of the uplink rate), reassembled on the
// gateway side and delivered in order at message boundaries. The tunnel's
// own slow start, fast retransmits, and timeouts produce the bursty,
// heavy-tailed delivery the ideal pipe cannot.
class TcpTunnel final : public UplinkPipe {
 public:
  TcpTunnel(Engine& eng, NodeId dst_node, TunnelConfig cfg, int64_t path_queue_bytes,
            TunnelLink::DeliverFn deliver);

  bool enqueue(LinkMessage msg) override;
  // Unacknowledged stream bytes, matching what a send-buffer probe sees.
  int64_t queue_occupancy() const override;
  int64_t free_capacity() const override;
  uint64_t drops() const override { return drops_; }

  const TcpSender& sender() const { return *sender_; }

 private:
  void on_path_delivery(Packet&& seg);
  void on_ack_delivery(Packet&& ack);

  Engine& eng_;
  TunnelConfig cfg_;
  TunnelLink::DeliverFn deliver_;
  std::unique_ptr<TcpSender> sender_;
  std::unique_ptr<TcpReceiver> receiver_;
  std::unique_ptr<TunnelLink> path_;      // shaped forward path, drop-tail
  std::unique_ptr<TunnelLink> ack_path_;  // reverse direction for tunnel acks
  std::deque<std::pair<uint64_t, LinkMessage>> in_flight_;  // stream end -> msg
  int64_t stream_end_ = 0;
  uint64_t delivered_to_ = 0;
  uint64_t drops_ = 0;
};

}  // namespace bapusim
