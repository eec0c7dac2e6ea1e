#pragma once

#include <memory>
#include <unordered_set>
#include <vector>

#include "bapusim/access_point.hpp"
#include "bapusim/engine.hpp"
#include "bapusim/gateway.hpp"
#include "bapusim/link.hpp"
#include "bapusim/metrics.hpp"
#include "bapusim/scenario.hpp"
#include "bapusim/tcp_endpoint.hpp"
#include "bapusim/tunnel_tcp.hpp"
#include "bapusim/wireless.hpp"

namespace bapusim {

constexpr NodeId kSenderNode = 0;
constexpr NodeId kDestNode = 1;
constexpr NodeId kGatewayNode = 2;
constexpr NodeId ap_node(int ap_index) { return 3 + ap_index; }

// One complete topology: sender, wireless channel, APs with their shaped
// backhauls, gateway, destination. Build it from a scenario, run it, read
// the metrics. Instances share nothing.
class Simulation {
 public:
  explicit Simulation(const Scenario& sc);
  ~Simulation();

  // Runs the scenario for its duration plus a drain grace period so
  // in-flight bytes settle before the audits.
  void run();

  const Metrics& metrics() const { return metrics_; }
  Metrics release_metrics() { return std::move(metrics_); }
  const RunSummary& summary() const { return summary_; }
  const Scenario& scenario() const { return sc_; }
  Engine& engine() { return eng_; }

  Gateway* gateway() { return gw_.get(); }
  TcpSender* tcp_sender() { return tcp_sender_.get(); }
  TcpReceiver* tcp_receiver() { return tcp_receiver_.get(); }
  const SessionKey& session() const { return session_; }
  int64_t sender_stream_bytes() const { return sender_stream_bytes_; }
  uint64_t udp_packets_sent() const { return udp_packets_sent_; }

 private:
  void build();
  void build_shaper_study();
  void start_session();
  void schedule_udp_tick(uint64_t k);
  void schedule_deposit_tick(uint64_t k);
  Packet make_packet(uint64_t seq, uint32_t len, bool syn, bool first);
  void send_tcp_segment(uint64_t seq, uint32_t len, bool retransmit);
  void on_sender_frame(const WifiFrame& frame);
  void on_gw_uplink(int ap_index, LinkMessage&& msg);
  void on_ap_downlink(int ap_index, LinkMessage&& msg);
  void on_dest_packet(Packet&& pkt);
  void send_dest_ack(uint64_t ack, int64_t window, bool dup);
  void finalize_metrics();

  Scenario sc_;
  Engine eng_;
  Metrics metrics_;
  RunSummary summary_;
  SessionKey session_;

  std::unique_ptr<WirelessChannel> channel_;
  std::vector<std::unique_ptr<UplinkPipe>> up_;
  std::vector<std::unique_ptr<TunnelLink>> down_;
  std::unique_ptr<TunnelLink> gw_to_dst_;
  std::unique_ptr<TunnelLink> dst_to_gw_;
  std::vector<std::unique_ptr<AccessPoint>> aps_;
  std::unique_ptr<Gateway> gw_;
  std::unique_ptr<TcpSender> tcp_sender_;
  std::unique_ptr<TcpReceiver> tcp_receiver_;
  std::unique_ptr<PriorityShaperLink> shaper_;

  uint16_t next_ipid_ = 0;
  uint64_t next_uid_ = 1;
  SimTime deposit_epoch_ = -1;
  bool established_ = false;
  int64_t sender_stream_bytes_ = 0;
  uint64_t udp_packets_sent_ = 0;
  Rate udp_rate_ = 0;
  std::unordered_set<uint64_t> dest_seen_uids_;
};

}  // namespace bapusim
