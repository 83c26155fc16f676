#include <doctest.h>

#include <algorithm>
#include <set>

#include "../support/builders.hpp"
#include "../support/suites.hpp"
#include "palcas/observe.hpp"

using namespace palcas;
using testing_support::car;

namespace {

Observation encode_for(const Scene& scene, VehicleId id) {
  const auto stats = scene.all_cluster_stats();
  return encode(scene, *scene.find(id), stats);
}

void check_empty_slot(const Observation& o, int slot, double ego_lane_share) {
  const int b = 6 + 5 * slot;
  CHECK(o[b + 0] == 1.0);
  CHECK(o[b + 1] == 0.0);
  CHECK(o[b + 2] == 0.0);
  CHECK(o[b + 3] == doctest::Approx(ego_lane_share));
  CHECK(o[b + 4] == 1.0);
}

}  // namespace

TEST_CASE("hand-built three-vehicle scene matches a componentwise oracle") {
  const auto net = testing_support::network();
  Vehicle ego = car(1, 2, 1000.0, 25.0, *net, VehicleKind::cav, RoadNetwork::route_one());
  ego.accel = 1.0;
  Vehicle lead = car(2, 2, 1050.0, 30.0, *net, VehicleKind::chv, RoadNetwork::route_three());
  lead.accel = -0.5;
  Vehicle right = car(3, 1, 980.0, 20.0, *net, VehicleKind::chv, RoadNetwork::route_one());
  const Scene scene(net, {ego, lead, right});
  const Observation o = encode_for(scene, 1);

  // Default road: 2400 m, warmup 100, three clusters of 2300/3 m, off-ramp 50 m before the cluster end.
  const double span = 2300.0 / 3.0;
  const double c2_start = 100.0 + span;
  const double exit2 = 100.0 + 2.0 * span - 50.0;
  const double vmax = 33.528;

  CHECK(o[0] == doctest::Approx(1.5 * 3.2 / 16.0));
  CHECK(o[1] == doctest::Approx((1000.0 - c2_start) / span));
  CHECK(o[2] == doctest::Approx(25.0 / vmax));
  CHECK(o[3] == doctest::Approx(1.0 / 4.5));
  CHECK(o[4] == doctest::Approx(0.4));
  CHECK(o[5] == doctest::Approx((exit2 - 1000.0) / 2400.0));

  CHECK(o[6] == doctest::Approx(50.0 / 200.0));
  CHECK(o[7] == doctest::Approx(5.0 / vmax));
  CHECK(o[8] == doctest::Approx(-0.5 / 4.5));
  CHECK(o[9] == doctest::Approx(0.4));
  CHECK(o[10] == doctest::Approx(1350.0 / 2400.0));

  check_empty_slot(o, 1, 0.4);
  check_empty_slot(o, 2, 0.4);
  check_empty_slot(o, 3, 0.4);
  check_empty_slot(o, 4, 0.4);

  CHECK(o[31] == doctest::Approx(-20.0 / 200.0));
  CHECK(o[32] == doctest::Approx(-5.0 / vmax));
  CHECK(o[33] == 0.0);
  CHECK(o[34] == doctest::Approx(0.2));
  CHECK(o[35] == doctest::Approx((exit2 - 980.0) / 2400.0));

  CHECK(o[36] == doctest::Approx(25.0 / vmax));
  CHECK(o[37] == doctest::Approx(1.0 / span / 0.2));
  CHECK(o[38] == doctest::Approx(2.0 / span / 0.2));
  CHECK(o[39] == 0.0);
  CHECK(o[40] == 0.0);
  CHECK(o[41] == 0.0);
  CHECK(o[42] == 0.0);
  CHECK(o[43] == doctest::Approx(3.0 / (span * 5.0) / 0.2));
  CHECK(o[44] == 0.0);
}

TEST_CASE("lone vehicle sees empty slots and the speed limit as cluster speed") {
  const auto net = testing_support::network();
  const Scene scene(net, {car(7, 3, 300.0, 20.0, *net)});
  const Observation o = encode_for(scene, 7);
  for (int s = 0; s < kNeighborSlots; ++s) check_empty_slot(o, s, 0.6);
  CHECK(o[36] == doctest::Approx(20.0 / 33.528));
  CHECK(o[5] == doctest::Approx(2100.0 / 2400.0));
}

TEST_CASE("lane 1 has no right-hand neighbours, even beside the acceleration lane") {
  const auto net = testing_support::network();
  const double x = net->cluster(1).on_ramp.junction_position + 50.0;
  const Scene scene(net, {car(1, 1, x, 25.0, *net), car(2, 0, x + 10.0, 15.0, *net),
                          car(3, 0, x - 10.0, 15.0, *net)});
  const auto n = select_neighbors(scene, *scene.find(1));
  CHECK(n[4] == nullptr);
  CHECK(n[5] == nullptr);
  const Observation o = encode_for(scene, 1);
  check_empty_slot(o, 4, 0.2);
  check_empty_slot(o, 5, 0.2);
}

TEST_CASE("neighbours outside the sensing range are not reported") {
  const auto net = testing_support::network();
  const Scene scene(net, {car(1, 2, 500.0, 25.0, *net), car(2, 2, 701.0, 25.0, *net), car(3, 3, 690.0, 25.0, *net)});
  const auto n = select_neighbors(scene, *scene.find(1));
  CHECK(n[0] == nullptr);
  REQUIRE(n[2] != nullptr);
  CHECK(n[2]->id == 3);
}

TEST_CASE("encoding does not depend on vehicle order") {
  const auto net = testing_support::network();
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Scene a = testing_support::random_scene(net, rng);
    std::vector<Vehicle> shuffled(a.vehicles().begin(), a.vehicles().end());
    std::reverse(shuffled.begin(), shuffled.end());
    std::swap(shuffled.front(), shuffled[shuffled.size() / 2]);
    const Scene b(net, shuffled);
    for (const auto& v : a.vehicles()) CHECK(encode_for(a, v.id) == encode_for(b, v.id));
  }
}

TEST_CASE("labels cover every component once") {
  const auto labels = observation_labels();
  CHECK(labels.size() == kObservationSize);
  CHECK(std::set<std::string>(labels.begin(), labels.end()).size() == labels.size());
  CHECK(labels[6] == "cur_lead_rel_dist");
  CHECK(labels[44] == "cluster3_density");
}

TEST_CASE("random scenes stay inside the unit box") {
  const auto r = testing_support::run_observation_contract(2000, 17);
  CHECK(r.scenes == 2000);
  CHECK(r.out_of_range == 0);
  CHECK(r.non_finite == 0);
}
