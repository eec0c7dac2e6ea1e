#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "bapusim/engine.hpp"
#include "bapusim/link.hpp"
#include "bapusim/tunnel_tcp.hpp"

using namespace bapusim;

namespace {

Packet raw_packet(uint32_t len) {
  Packet p;
  p.session.proto = Proto::Udp;
  p.payload_len = len;
  return p;
}

TunnelMessage data_message(uint32_t payload = 1350) {
  TunnelMessage m;
  m.type = MsgType::Data;
  Packet p;
  p.session.proto = Proto::Udp;
  p.payload_len = payload;
  m.inner = p;
  return m;
}

TunnelMessage report_message() {
  TunnelMessage m;
  m.type = MsgType::Report;
  return m;
}

}  // namespace

TEST_CASE("a 1420-byte frame on an idle 2 Mbps link takes 5.68 ms plus the delay") {
  Engine eng;
  std::vector<SimTime> deliveries;
  TunnelConfig cfg{2'000'000, msec(16), 65536};
  TunnelLink link(eng, 1, cfg, [&](LinkMessage&&) { deliveries.push_back(eng.now()); });
  link.enqueue(raw_packet(1420 - 28 - kDefaultPathFraming));
  eng.run_until(sec(1));
  REQUIRE(deliveries.size() == 1);
  CHECK(deliveries[0] == 5680 + msec(16));
}

TEST_CASE("back-to-back frames are spaced by exactly one serialization time") {
  Engine eng;
  std::vector<SimTime> deliveries;
  TunnelConfig cfg{2'000'000, msec(16), 65536};
  TunnelLink link(eng, 1, cfg, [&](LinkMessage&&) { deliveries.push_back(eng.now()); });
  link.enqueue(raw_packet(1350));
  link.enqueue(raw_packet(1350));
  eng.run_until(sec(1));
  REQUIRE(deliveries.size() == 2);
  CHECK(deliveries[1] - deliveries[0] ==
        serialization_us(1350 + 28 + kDefaultPathFraming, cfg.rate));
}

TEST_CASE("delivery order equals enqueue order") {
  Engine eng;
  std::vector<uint32_t> order;
  TunnelConfig cfg{2'000'000, msec(5), 1 << 20};
  TunnelLink link(eng, 1, cfg, [&](LinkMessage&& m) {
    order.push_back(std::get<Packet>(m).payload_len);
  });
  for (uint32_t len = 100; len < 150; ++len) link.enqueue(raw_packet(len));
  eng.run_until(sec(2));
  REQUIRE(order.size() == 50);
  for (uint32_t i = 0; i < 50; ++i) CHECK(order[i] == 100 + i);
}

TEST_CASE("data overflow is dropped with a counter, never reordered") {
  Engine eng;
  int delivered = 0;
  TunnelConfig cfg{2'000'000, msec(16), 4000};
  TunnelLink link(eng, 1, cfg, [&](LinkMessage&&) { ++delivered; });
  CHECK(link.enqueue(data_message()));
  CHECK(link.enqueue(data_message()));
  CHECK_FALSE(link.enqueue(data_message()));  // third exceeds 4000 bytes
  CHECK(link.drops() == 1);
  eng.run_until(sec(1));
  CHECK(delivered == 2);
  // After draining there is room again.
  CHECK(link.enqueue(data_message()));
}

TEST_CASE("control messages coalesce into the stream instead of dropping") {
  Engine eng;
  int delivered = 0;
  TunnelConfig cfg{2'000'000, msec(16), 4000};
  TunnelLink link(eng, 1, cfg, [&](LinkMessage&&) { ++delivered; });
  link.enqueue(data_message());
  link.enqueue(data_message());
  for (int i = 0; i < 50; ++i) CHECK(link.enqueue(report_message()));
  CHECK(link.drops() == 0);
  eng.run_until(sec(1));
  CHECK(delivered == 52);
}

TEST_CASE("sustained 3 Mbps offered load drains at exactly the 2 Mbps link rate") {
  // Rate-conservation oracle: count delivered wire bytes over a long window.
  Engine eng;
  int64_t delivered_bytes = 0;
  TunnelConfig cfg{2'000'000, msec(16), 65536};
  TunnelLink link(eng, 1, cfg, [&](LinkMessage&& m) {
    delivered_bytes += link_message_wire_bytes(m);
  });
  int64_t wire = data_message().wire_bytes();
  SimTime gap = serialization_us(wire, 3'000'000);
  for (SimTime t = 0; t < sec(30); t += gap) {
    eng.schedule(t, 0, EventKind::AppSend, [&] { link.enqueue(data_message()); });
  }
  eng.run_until(sec(31));
  double rate = delivered_bytes * 8.0 / 30.0;
  CHECK(rate == doctest::Approx(2'000'000).epsilon(0.01));
  CHECK(link.drops() > 0);
}

TEST_CASE("queue occupancy reflects in-flight bytes and free capacity") {
  Engine eng;
  TunnelConfig cfg{2'000'000, msec(16), 65536};
  TunnelLink link(eng, 1, cfg, [](LinkMessage&&) {});
  CHECK(link.free_capacity() == 65536);
  link.enqueue(data_message());
  int64_t wire = data_message().wire_bytes();
  CHECK(link.queue_occupancy() == wire);
  CHECK(link.free_capacity() == 65536 - wire);
  eng.run_until(sec(1));
  CHECK(link.queue_occupancy() == 0);
}

// --- two-class priority shaper ---

namespace {
struct ShaperHarness {
  Engine eng;
  int64_t served[2] = {0, 0};
  std::map<int64_t, int64_t> bins[2];
  std::unique_ptr<PriorityShaperLink> link;

  explicit ShaperHarness(ShaperConfig cfg = {}) {
    link = std::make_unique<PriorityShaperLink>(
        eng, 1, cfg, [this](TrafficClass cls, LinkMessage&& m) {
          int64_t b = link_message_wire_bytes(m);
          served[static_cast<int>(cls)] += b;
          bins[static_cast<int>(cls)][eng.now() / kUsPerSec] += b;
        });
  }

  void offer_cbr(TrafficClass cls, Rate rate, SimTime from, SimTime to) {
    int64_t wire = 1350 + 28 + kDefaultPathFraming;
    SimTime gap = serialization_us(wire, rate);
    for (SimTime t = from; t < to; t += gap) {
      eng.schedule(t, 0, EventKind::AppSend,
                   [this, cls] { link->enqueue(cls, raw_packet(1350)); });
    }
  }
};
}  // namespace

TEST_CASE("background takes the whole link while regular is idle") {
  ShaperHarness h;
  h.offer_cbr(TrafficClass::Background, 3'000'000, 0, sec(10));
  h.eng.run_until(sec(11));
  double rate = h.served[1] * 8.0 / 10.0;
  CHECK(rate == doctest::Approx(2'000'000).epsilon(0.02));
}

TEST_CASE("saturated regular leaves the background exactly its floor") {
  ShaperHarness h;
  h.offer_cbr(TrafficClass::Regular, 2'000'000, 0, sec(10));
  h.offer_cbr(TrafficClass::Background, 2'000'000, 0, sec(10));
  h.eng.run_until(sec(11));
  double reg = h.served[0] * 8.0 / 10.0;
  double bg = h.served[1] * 8.0 / 10.0;
  CHECK(bg == doctest::Approx(500'000).epsilon(0.05));
  CHECK(reg == doctest::Approx(1'500'000).epsilon(0.05));
}

TEST_CASE("background reclaims the link within one interval of regular stopping") {
  ShaperHarness h;
  h.offer_cbr(TrafficClass::Background, 3'000'000, 0, sec(20));
  h.offer_cbr(TrafficClass::Regular, 1'800'000, sec(5), sec(10));
  h.eng.run_until(sec(21));
  // Seconds after the burst are full-rate background again.
  for (int64_t s = 11; s < 19; ++s) {
    CHECK(h.bins[1][s] * 8 > 1'900'000);
  }
}

TEST_CASE("work conservation over windows of ten intervals or more") {
  ShaperHarness h;
  h.offer_cbr(TrafficClass::Regular, 900'000, 0, sec(10));
  h.offer_cbr(TrafficClass::Background, 700'000, 0, sec(10));
  h.eng.run_until(sec(12));
  // Total offered (1.6 Mbps) is below the rate, so everything is served.
  double total = (h.served[0] + h.served[1]) * 8.0 / 10.0;
  CHECK(total == doctest::Approx(1'600'000).epsilon(0.02));
}

TEST_CASE("backlogged background never dips below the floor in any one-second window") {
  ShaperHarness h;
  h.offer_cbr(TrafficClass::Background, 2'500'000, 0, sec(30));
  h.offer_cbr(TrafficClass::Regular, 2'500'000, sec(5), sec(25));
  h.eng.run_until(sec(31));
  for (int64_t s = 1; s < 29; ++s) {
    CHECK(h.bins[1][s] * 8 >= 500'000 * 0.98);
  }
}

TEST_CASE("more background load cannot steal from the regular class") {
  double baseline;
  {
    ShaperHarness h;
    h.offer_cbr(TrafficClass::Regular, 1'400'000, 0, sec(10));
    h.eng.run_until(sec(11));
    baseline = h.served[0] * 8.0 / 10.0;
  }
  for (Rate bg : {Rate(1'000'000), Rate(3'000'000), Rate(8'000'000)}) {
    ShaperHarness h;
    h.offer_cbr(TrafficClass::Regular, 1'400'000, 0, sec(10));
    h.offer_cbr(TrafficClass::Background, bg, 0, sec(10));
    h.eng.run_until(sec(11));
    double reg = h.served[0] * 8.0 / 10.0;
    CHECK(reg >= baseline * 0.98);
  }
}

// --- TCP-backed tunnel (sensitivity model) ---

TEST_CASE("tcp tunnel delivers messages reliably and in order") {
  Engine eng;
  std::vector<uint32_t> order;
  TunnelConfig cfg{2'000'000, msec(16), 65536};
  TcpTunnel tun(eng, 1, cfg, 8192, [&](LinkMessage&& m) {
    order.push_back(std::get<TunnelMessage>(m).ipid);
  });
  for (uint32_t i = 0; i < 400; ++i) {
    TunnelMessage d = data_message();
    d.ipid = static_cast<uint16_t>(i);
    eng.schedule(i * msec(4), 0, EventKind::AppSend,
                 [&tun, d] { TcpTunnel& t = tun; t.enqueue(LinkMessage(d)); });
  }
  eng.run_until(sec(30));
  REQUIRE(order.size() == 400);
  for (uint32_t i = 0; i < 400; ++i) REQUIRE(order[i] == i);
  // The shallow path queue forced the tunnel through loss recovery.
  CHECK(tun.sender().retransmit_count() > 0);
}

TEST_CASE("tcp tunnel approaches the shaped rate at saturation") {
  Engine eng;
  int64_t delivered = 0;
  TunnelConfig cfg{2'000'000, msec(16), 65536};
  TcpTunnel tun(eng, 1, cfg, 16384,
                [&](LinkMessage&& m) { delivered += link_message_wire_bytes(m); });
  std::function<void()> feed = [&] {
    while (tun.enqueue(data_message())) {
    }
    if (eng.now() < sec(30)) {
      eng.schedule(eng.now() + msec(5), 0, EventKind::AppSend, feed);
    }
  };
  eng.schedule(0, 0, EventKind::AppSend, feed);
  eng.run_until(sec(30));
  double rate = delivered * 8.0 / 30.0;
  CHECK(rate > 1'700'000);
  CHECK(rate < 2'000'000);
}
