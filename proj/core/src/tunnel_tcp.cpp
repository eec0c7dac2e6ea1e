#include "bapusim/tunnel_tcp.hpp"

namespace bapusim {

namespace {
constexpr int64_t kTunnelMss = 1402;
}

TcpTunnel::TcpTunnel(Engine& eng, NodeId dst_node, TunnelConfig cfg,
                     int64_t path_queue_bytes, TunnelLink::DeliverFn deliver)
    : eng_(eng), cfg_(cfg), deliver_(std::move(deliver)) {
  TunnelConfig path_cfg{cfg.rate, cfg.one_way_delay, path_queue_bytes};
  path_ = std::make_unique<TunnelLink>(
      eng, dst_node, path_cfg,
      [this](LinkMessage&& m) { on_path_delivery(std::move(std::get<Packet>(m))); });
  // Tunnel acks ride the wide downlink; model it as a fast private lane.
  TunnelConfig ack_cfg{20'000'000, cfg.one_way_delay, 1 << 20};
  ack_path_ = std::make_unique<TunnelLink>(
      eng, dst_node, ack_cfg,
      [this](LinkMessage&& m) { on_ack_delivery(std::move(std::get<Packet>(m))); });

  TcpSenderConfig scfg;
  scfg.mss = kTunnelMss;
  scfg.initial_ssthresh_segments = 0;  // slow start until the path pushes back
  scfg.adv_window = 256 << 10;
  sender_ = std::make_unique<TcpSender>(
      eng, dst_node, scfg,
      [this](uint64_t seq, uint32_t len, bool) {
        Packet seg;
        seg.session.proto = Proto::Tcp;
        seg.seq = seq;
        seg.payload_len = len;
        path_->enqueue(std::move(seg));
      },
      nullptr);

  TcpReceiverConfig rcfg;
  rcfg.adv_window = 256 << 10;
  receiver_ = std::make_unique<TcpReceiver>(
      eng, dst_node, rcfg, [this](uint64_t ack, int64_t win, bool) {
        Packet p;
        p.reverse = true;
        p.ack = ack;
        p.adv_window = win;
        ack_path_->enqueue(std::move(p));
      });
}

bool TcpTunnel::enqueue(LinkMessage msg) {
  int64_t bytes = link_message_wire_bytes(msg);
  bool capped;
  if (const auto* t = std::get_if<TunnelMessage>(&msg)) {
    capped = t->type == MsgType::Data;
  } else {
    capped = std::get<Packet>(msg).payload_len > 0;
  }
  if (capped && queue_occupancy() + bytes > cfg_.queue_cap_bytes) {
    ++drops_;
    return false;
  }
  stream_end_ += bytes;
  in_flight_.emplace_back(static_cast<uint64_t>(stream_end_), std::move(msg));
  sender_->deposit(bytes);
  return true;
}

int64_t TcpTunnel::queue_occupancy() const {
  return stream_end_ - static_cast<int64_t>(sender_->snd_una());
}

int64_t TcpTunnel::free_capacity() const {
  return std::max<int64_t>(0, cfg_.queue_cap_bytes - queue_occupancy());
}

void TcpTunnel::on_path_delivery(Packet&& seg) {
  receiver_->on_segment(seg.seq, seg.payload_len);
  // Hand over every message whose last stream byte has been reassembled.
  while (!in_flight_.empty() && in_flight_.front().first <= receiver_->recv_next()) {
    LinkMessage msg = std::move(in_flight_.front().second);
    in_flight_.pop_front();
    delivered_to_ = in_flight_.empty() ? receiver_->recv_next() : delivered_to_;
    deliver_(std::move(msg));
  }
}

void TcpTunnel::on_ack_delivery(Packet&& ack) {
  sender_->on_ack(ack.ack, ack.adv_window);
}

}  // namespace bapusim
