#include <doctest.h>

#include "palcas/error.hpp"
#include "palcas/road.hpp"

using namespace palcas;

TEST_CASE("clusters partition the mainline after the warm-up zone") {
  const RoadNetwork net;
  REQUIRE(net.cluster_count() == 3);
  CHECK(net.cluster(1).start == doctest::Approx(100.0));
  CHECK(net.cluster(1).end == doctest::Approx(866.6666666667));
  CHECK(net.cluster(3).end == 2400.0);
  for (int k = 1; k < 3; ++k) CHECK(net.cluster(k).end == net.cluster(k + 1).start);
  for (const auto& z : net.clusters()) {
    CHECK(z.on_ramp.junction_position == doctest::Approx(z.start + 50.0));
    CHECK(z.on_ramp.accel_length == 200.0);
    CHECK(z.off_ramp.junction_position == doctest::Approx(z.end - 50.0));
    CHECK(z.accel_lane_end() < z.off_ramp.junction_position);
  }
}

TEST_CASE("cluster_of uses half-open spans") {
  const RoadNetwork net;
  CHECK_FALSE(net.cluster_of(0.0).has_value());
  CHECK_FALSE(net.cluster_of(99.999).has_value());
  CHECK(net.cluster_of(100.0) == 1);
  CHECK(net.cluster_of(net.cluster(2).start) == 2);
  CHECK(net.cluster_of(2399.9) == 3);
  CHECK_FALSE(net.cluster_of(2400.0).has_value());
  CHECK_THROWS_AS(net.cluster_of(-1.0), ContractError);
  CHECK_THROWS_AS(net.cluster_of(2400.5), ContractError);
}

TEST_CASE("lane centers measured from the right edge of lane 1") {
  const RoadNetwork net;
  CHECK(net.lane_center(1) == doctest::Approx(1.6));
  CHECK(net.lane_center(5) == doctest::Approx(14.4));
  CHECK(net.lane_center(0) == doctest::Approx(-1.6));
}

TEST_CASE("canonical routes and their endpoints") {
  const RoadNetwork net;
  CHECK(RoadNetwork::route_one().label() == "main>off2");
  CHECK(RoadNetwork::route_two().label() == "main>off3");
  CHECK(RoadNetwork::route_three().label() == "main>end");
  CHECK(RoadNetwork::route_four().label() == "ramp1>off2");
  CHECK(net.exit_position(RoadNetwork::route_three()) == 2400.0);
  CHECK(net.entry_position(RoadNetwork::route_four()) == doctest::Approx(150.0));
  CHECK(net.exit_position(RoadNetwork::route_four()) == doctest::Approx(net.cluster(2).end - 50.0));
}

TEST_CASE("feasible routes start at the entry and end downstream") {
  const RoadNetwork net;
  const auto from_main = net.feasible_routes(std::nullopt);
  CHECK(from_main.size() == 4);
  const auto from_ramp2 = net.feasible_routes(2);
  // Ramp 2 can leave at off-ramp 2, off-ramp 3, or the highway end.
  REQUIRE(from_ramp2.size() == 3);
  CHECK(from_ramp2[0].exit_cluster == 2);
  for (const auto& r : from_ramp2) CHECK(net.exit_position(r) > net.entry_position(r));
  const auto exits_only = net.feasible_routes(std::nullopt, true);
  CHECK(exits_only.size() == 3);
  CHECK_FALSE(net.valid(Route{3, 1}));
  CHECK_FALSE(net.valid(Route{std::nullopt, 4}));
}

TEST_CASE("remaining lane count and distance to exit") {
  const RoadNetwork net;
  Vehicle v;
  v.lane = 4;
  v.long_pos = 500.0;
  v.route = RoadNetwork::route_one();
  CHECK(remaining_lane_count(v, net) == 3);
  CHECK(distance_to_exit(net, v) == doctest::Approx(net.cluster(2).off_ramp.junction_position - 500.0));
  v.route = RoadNetwork::route_three();
  CHECK(remaining_lane_count(v, net) == 0);
  CHECK(distance_to_exit(net, v) == doctest::Approx(1900.0));
  v.route = RoadNetwork::route_four();
  v.lane = 0;
  CHECK(remaining_lane_count(v, net) == 0);
  v.long_pos = 3000.0;
  CHECK(distance_to_exit(net, v) == 0.0);
}

TEST_CASE("bad geometry is rejected") {
  GeometryConfig g;
  g.lane_count = 1;
  CHECK_THROWS_AS(RoadNetwork{g}, ContractError);
  g = {};
  g.warmup_length = 2400.0;
  CHECK_THROWS_AS(RoadNetwork{g}, ContractError);
  g = {};
  g.cluster_count = 12;  // clusters too short for a 200 m acceleration lane
  CHECK_THROWS_AS(RoadNetwork{g}, ContractError);
  CHECK_THROWS_AS(RoadNetwork{}.cluster(4), ContractError);
}
