#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "semicl/errors.hpp"
#include "semicl/scenario.hpp"
#include "support.hpp"

using namespace semicl;

namespace {

Scenario parse(const std::string& text) {
  std::istringstream in(text);
  return parse_scenario(in, "test.scn");
}

std::string config_message(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    CHECK(e.is_config());
    return e.what();
  }
  FAIL("scenario accepted: " << text);
  return {};
}

const char* kMinimal = "dim 1\nbasis 1.0\ncoeff 1 0.5 0.0\n";

}  // namespace

TEST_CASE("minimal scenario parses with defaults") {
  const Scenario sc = parse(kMinimal);
  CHECK(sc.dim == 1);
  CHECK(sc.band == 1);
  CHECK(sc.order == 0);
  CHECK(!sc.free);
  CHECK(sc.potential.value(Vec::Zero(1)) == doctest::Approx(1.0));
  CHECK(sc.source == "test.scn");
}

TEST_CASE("parse errors name the source and line") {
  const std::string m = config_message(std::string(kMinimal) + "\nfrobnicate 3\n");
  CHECK(m.find("test.scn:5") != std::string::npos);
  CHECK(m.find("unknown keyword 'frobnicate'") != std::string::npos);
  CHECK(config_message("basis 1.0\ndim 1\n").find("test.scn:1") != std::string::npos);
  CHECK(config_message(std::string(kMinimal) + "band x\n").find("not a number") != std::string::npos);
  CHECK(config_message(std::string(kMinimal) + "order 2\n").find("test.scn:4") != std::string::npos);
  CHECK(config_message(std::string(kMinimal) + "phi wobble amplitude=1\n").find("unknown field primitive") !=
        std::string::npos);
  CHECK(config_message(std::string(kMinimal) + "phi trig amplitude=1 wavevector=1 colour=red\n").find("colour") !=
        std::string::npos);
  CHECK(config_message("dim 3\n").find("dim must be 1 or 2") != std::string::npos);
  CHECK(config_message("dim 2\nbasis 1 0\n").find("basis") != std::string::npos);
}

TEST_CASE("reality condition of listed coefficients") {
  CHECK(config_message("dim 1\nbasis 1.0\ncoeff 1 0.5 0.2\ncoeff -1 0.5 0.2\n").find("reality") != std::string::npos);
  const Scenario sc = parse("dim 1\nbasis 1.0\ncoeff 1 0.5 0.2\ncoeff -1 0.5 -0.2\n");
  CHECK(sc.potential.value(Vec::Constant(1, 0.1)) ==
        doctest::Approx(2.0 * (0.5 * std::cos(kTwoPi * 0.1) - 0.2 * std::sin(kTwoPi * 0.1))));
  CHECK(config_message("dim 1\nbasis 1.0\ncoeff 1 0.5 0.2\ncoeff 1 0.4 0.2\n").find("listed twice") != std::string::npos);
  CHECK(config_message("dim 1\nbasis 1.0\nmode free\ncoeff 1 0.5 0\n").find("zero lattice potential") !=
        std::string::npos);
}

TEST_CASE("observable lines build real symbols") {
  const Scenario sc = parse(std::string(kMinimal) +
                            "observable a cos gamma=1 gauss center=2 width=0.5 c0=1\n"
                            "observable a sin gamma=2 trig amplitude=0.5 wavevector=1 phase=0\n"
                            "observable b cos gamma=0 trig amplitude=1 wavevector=2 phase=0\n");
  REQUIRE(sc.observables.size() == 2);
  const PeriodicObservable& a = sc.observables[0];
  CHECK(a.name() == "a");
  for (double q : {1.5, 2.2}) {
    for (double p : {0.3, 1.9}) {
      const double expect = std::exp(-std::pow(q - 2.0, 2) / (2 * 0.25)) * std::cos(p) + 0.5 * std::cos(q) * std::sin(2 * p);
      CHECK(a.value(Vec::Constant(1, q), Vec::Constant(1, p)) == doctest::Approx(expect));
    }
  }
  CHECK(sc.observables[1].value(Vec::Constant(1, 0.4), Vec::Constant(1, 2.0)) == doctest::Approx(std::cos(0.8)));
  CHECK(config_message(std::string(kMinimal) + "observable c sin gamma=0 trig amplitude=1 wavevector=1\n")
            .find("gamma != 0") != std::string::npos);
}

TEST_CASE("box must hold an even number of cells at every epsilon") {
  const Scenario sc = parse(std::string(kMinimal) + "box 12\nepsilons 0.125\n");
  CHECK(sc.box_grid(0.125).cells == std::vector<int>{96});
  try {
    sc.box_grid(0.8);
    FAIL("odd box accepted");
  } catch (const Error& e) {
    CHECK(e.is_config());
  }
  CHECK_THROWS_AS(parse(kMinimal).box_grid(0.125), Error);
}

TEST_CASE("missing scenario file names the path") {
  try {
    load_scenario("/no/such/dir/x.scn");
    FAIL("missing file accepted");
  } catch (const Error& e) {
    CHECK(e.is_config());
    CHECK(std::string(e.what()).find("/no/such/dir/x.scn") != std::string::npos);
  }
}

TEST_CASE("every shipped scenario parses") {
  int n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(SEMICL_SCENARIO_DIR)) {
    if (entry.path().extension() != ".scn") continue;
    CAPTURE(entry.path().string());
    const Scenario sc = load_scenario(entry.path().string());
    CHECK(sc.lattice.dim() == sc.dim);
    ++n;
  }
  CHECK(n >= 8);
}

TEST_CASE("field primitives parse with their keys") {
  const FieldTerm t = parse_field_term({"plateau", "center=4", "halfwidth=1.5", "ramp=0.5", "quadratic=1"}, 1);
  ScalarField f(1);
  f.add(t);
  CHECK(f.value(Vec::Constant(1, 4.5)) == doctest::Approx(0.125));
  ScalarField g(1);
  g.add(scale_term(t, -2.0));
  CHECK(g.value(Vec::Constant(1, 4.5)) == doctest::Approx(-0.25));
  CHECK_THROWS_AS(parse_field_term({"gauss", "center=1"}, 1), Error);
}
